//! Two-state vectors and weak values, for pure and for incomplete (mixed)
//! postselection.

use num_complex::Complex64;
use serde::Serialize;

use crate::engine::{evolve_backward, evolve_forward, Circuit, ConditioningPolicy};
use crate::error::{Error, Result};
use crate::hilbert::{inner_product, operator::require_projector, Amplitude, Operator, StateVector, TOLERANCE};

/// Whether the backward state comes from a complete measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PostselectionKind {
    Pure,
    Mixed,
}

/// ⟨φ(t)| |ψ(t)⟩ at a named time point.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoStateVector<A: Amplitude = Complex64> {
    pub time: String,
    pub backward: StateVector<A>,
    pub forward: StateVector<A>,
    pub kind: PostselectionKind,
    overlap: A,
}

fn vanishes<A: Amplitude>(overlap: A, bra: &StateVector<A>, ket: &StateVector<A>) -> bool {
    let scale = (bra.norm_sqr().leading().re * ket.norm_sqr().leading().re).sqrt();
    overlap.leading().norm() <= TOLERANCE * scale
}

impl<A: Amplitude> TwoStateVector<A> {
    /// Fails when ⟨φ|ψ⟩ vanishes at leading order relative to the norms.
    pub fn new(time: &str, backward: StateVector<A>, forward: StateVector<A>) -> Result<Self> {
        let overlap = inner_product(&backward, &forward)?;
        if vanishes(overlap, &backward, &forward) {
            return Err(Error::UndefinedWeakValue);
        }
        Ok(TwoStateVector { time: time.to_string(), backward, forward, kind: PostselectionKind::Pure, overlap })
    }

    /// Forward run under `policy` from `initial`, backward run of
    /// `final_bra` under the same policy, both read at `time`.
    pub fn from_circuit(
        circuit: &Circuit,
        initial: &StateVector<A>,
        policy: &ConditioningPolicy,
        final_bra: &StateVector<A>,
        time: &str,
    ) -> Result<Self> {
        let fwd = evolve_forward(circuit, initial, policy)?;
        let bwd = evolve_backward(circuit, final_bra, policy)?;
        Self::new(time, bwd.get(time)?.clone(), fwd.snapshots.get(time)?.clone())
    }

    pub fn overlap(&self) -> A {
        self.overlap
    }

    /// ⟨φ|O|ψ⟩ / ⟨φ|ψ⟩.
    pub fn weak_value(&self, op: &Operator) -> Result<A> {
        let numerator = inner_product(&self.backward, &op.apply(&self.forward)?)?;
        numerator.checked_div(self.overlap).ok_or(Error::UndefinedWeakValue)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleOutcome<A: Amplitude> {
    pub name: String,
    pub probability: f64,
    pub backward: StateVector<A>,
}

/// Outcomes of a complete final measurement, each with its backward state at
/// a common time.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeEnsemble<A: Amplitude = Complex64> {
    outcomes: Vec<EnsembleOutcome<A>>,
}

impl<A: Amplitude> OutcomeEnsemble<A> {
    /// Probabilities must sum to 1 and the bras must be pairwise orthogonal.
    pub fn new(outcomes: Vec<(String, f64, StateVector<A>)>) -> Result<Self> {
        let total: f64 = outcomes.iter().map(|(_, p, _)| p).sum();
        if outcomes.iter().any(|(_, p, _)| !(0.0..=1.0 + TOLERANCE).contains(p)) {
            return Err(Error::Incomplete("outcome probabilities must lie in [0, 1]".into()));
        }
        if (total - 1.0).abs() > TOLERANCE {
            return Err(Error::Incomplete(format!("outcome probabilities sum to {total}")));
        }
        for (i, (a, _, fa)) in outcomes.iter().enumerate() {
            for (b, _, fb) in &outcomes[i + 1..] {
                if !vanishes(inner_product(fa, fb)?, fa, fb) {
                    return Err(Error::Incomplete(format!("outcomes `{a}` and `{b}` are not orthogonal")));
                }
            }
        }
        let outcomes = outcomes
            .into_iter()
            .map(|(name, probability, backward)| EnsembleOutcome { name, probability, backward })
            .collect();
        Ok(OutcomeEnsemble { outcomes })
    }

    pub fn outcomes(&self) -> &[EnsembleOutcome<A>] {
        &self.outcomes
    }
}

/// One term of a mixed weak value.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchWeakValue<A: Amplitude> {
    pub name: String,
    pub probability: f64,
    /// `None` for outcomes of zero probability, which do not contribute.
    pub weak_value: Option<A>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MixedWeakValue<A: Amplitude> {
    pub value: A,
    pub branches: Vec<BranchWeakValue<A>>,
}

/// Σₖ pₖ (O)_w,k over the outcomes of `ensemble`, each pure weak value taken
/// with the forward state `pre`. Outcomes with probability ≤ 1e-12 are
/// skipped; any other outcome must have non-vanishing overlap with `pre`.
pub fn mixed_weak_value<A: Amplitude>(
    time: &str,
    pre: &StateVector<A>,
    ensemble: &OutcomeEnsemble<A>,
    op: &Operator,
) -> Result<MixedWeakValue<A>> {
    let mut value = A::zero();
    let mut branches = Vec::new();
    for o in &ensemble.outcomes {
        let weak_value = if o.probability <= TOLERANCE {
            None
        } else {
            let tsv = TwoStateVector::new(time, o.backward.clone(), pre.clone())?;
            let w = tsv.weak_value(op)?;
            value = value + w.scale(o.probability);
            Some(w)
        };
        branches.push(BranchWeakValue { name: o.name.clone(), probability: o.probability, weak_value });
    }
    Ok(MixedWeakValue { value, branches })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumCheck<A: Amplitude> {
    pub values: Vec<(String, A)>,
    pub total: A,
    pub passed: bool,
}

/// Weak values of a complete orthogonal family of projectors, which must
/// add up to 1.
pub fn weak_value_sum_check<A: Amplitude>(
    tsv: &TwoStateVector<A>,
    partition: &[(String, Operator)],
) -> Result<SumCheck<A>> {
    let registry = tsv.forward.registry();
    let predicates = partition.iter().map(|(_, op)| require_projector(op)).collect::<Result<Vec<_>>>()?;
    for (_, op) in partition {
        if let Operator::Projector { registry: r, .. } = op {
            if **r != **registry {
                return Err(Error::RegistryMismatch("projector from another registry".into()));
            }
        }
    }
    for label in registry.basis() {
        let hits = predicates.iter().filter(|p| p.matches(&label)).count();
        if hits != 1 {
            return Err(Error::Incomplete(format!("{} is matched by {hits} projectors", registry.describe(&label))));
        }
    }
    let mut values = Vec::with_capacity(partition.len());
    let mut total = A::zero();
    for (name, op) in partition {
        let w = tsv.weak_value(op)?;
        total = total + w;
        values.push((name.clone(), w));
    }
    let passed = (total - A::one()).magnitude() <= TOLERANCE;
    Ok(SumCheck { values, total, passed })
}
