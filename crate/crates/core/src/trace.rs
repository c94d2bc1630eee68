//! Weak traces on mirrors: first-order coefficients from the symbolic
//! engine, exact reduced mirror states from the numeric one, and verdicts.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use crate::engine::{evolve_forward, Circuit, Condition, ConditioningPolicy, Postselection};
use crate::error::{Error, Result};
use crate::hilbert::{
    reduced_mirror_state, reduced_mirror_state_mixture, Amplitude, FirstOrder, MirrorDensity, MirrorLevel, Mixture,
    StateVector,
};
use crate::optics::CouplingMode;

/// A first-order trace amplitude (in units of ε) at or above this value is
/// of the same order as the trace of a photon bouncing off the mirror.
pub const FIRST_ORDER_THRESHOLD: f64 = 0.1;

/// An exact fidelity deficit above this value is an order-unity change of
/// the mirror state.
pub const ANOMALOUS_DEFICIT: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    NoTrace,
    FirstOrderTrace,
    AnomalousTrace,
}

impl Verdict {
    /// Combines whatever is known: a first-order trace amplitude (units of
    /// ε) and/or an exact fidelity deficit at coupling `epsilon`. Nothing is
    /// left behind at ε = 0.
    pub fn classify(amplitude: Option<f64>, deficit: Option<f64>, epsilon: f64) -> Verdict {
        if deficit.is_some_and(|d| d > ANOMALOUS_DEFICIT) {
            return Verdict::AnomalousTrace;
        }
        let first_order = match (amplitude, deficit) {
            (Some(a), _) => epsilon > 0.0 && a >= FIRST_ORDER_THRESHOLD,
            (None, Some(d)) => epsilon > 0.0 && d.max(0.0).sqrt() / epsilon >= FIRST_ORDER_THRESHOLD,
            (None, None) => false,
        };
        if first_order {
            Verdict::FirstOrderTrace
        } else {
            Verdict::NoTrace
        }
    }
}

/// The trace on one mirror in one postselected branch.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceReport {
    pub mirror: String,
    pub outcome: String,
    /// Probability of the branch (leading order for the symbolic engine).
    pub probability: f64,
    /// ⟨Ψ₀|Ψₘ⟩ in units of ε, where the normalized branch state is
    /// Ψ₀ ⊗ |χ⟩ + ε Ψₘ ⊗ |χ⊥⟩ + …; equals ρ(χ⊥,χ)/ε at first order.
    pub coeff_first_order: Option<Complex64>,
    /// ‖Ψₘ‖ in units of ε; the fidelity deficit is ε²‖Ψₘ‖² at leading order.
    pub trace_amplitude: Option<f64>,
    /// 1 − ⟨χ|ρ|χ⟩ of the exact reduced mirror state.
    pub fidelity_deficit_exact: Option<f64>,
    /// ⟨χ⊥|ρ|χ⟩ / ε of the exact reduced mirror state.
    pub kick_exact: Option<Complex64>,
    pub epsilon: f64,
    pub verdict: Verdict,
}

impl TraceReport {
    /// Merges a first-order report with an exact one for the same mirror and
    /// branch.
    pub fn combine(first: &TraceReport, exact: &TraceReport) -> Result<TraceReport> {
        if first.mirror != exact.mirror || first.outcome != exact.outcome {
            return Err(Error::Config(format!(
                "cannot combine traces of {}/{} and {}/{}",
                first.mirror, first.outcome, exact.mirror, exact.outcome
            )));
        }
        let coeff_first_order = first.coeff_first_order.or(exact.coeff_first_order);
        let trace_amplitude = first.trace_amplitude.or(exact.trace_amplitude);
        let fidelity_deficit_exact = exact.fidelity_deficit_exact.or(first.fidelity_deficit_exact);
        Ok(TraceReport {
            mirror: first.mirror.clone(),
            outcome: first.outcome.clone(),
            probability: exact.probability,
            coeff_first_order,
            trace_amplitude,
            fidelity_deficit_exact,
            kick_exact: exact.kick_exact.or(first.kick_exact),
            epsilon: exact.epsilon,
            verdict: Verdict::classify(trace_amplitude, fidelity_deficit_exact, exact.epsilon),
        })
    }
}

fn require_mode(circuit: &Circuit, mode: CouplingMode) -> Result<()> {
    for (m, c) in circuit.mirrors() {
        if c.mode != mode {
            return Err(Error::ModeMismatch(format!("mirror `{m}` is coupled in {} mode, expected {mode}", c.mode)));
        }
    }
    Ok(())
}

/// First-order trace coefficients of every mirror in a normalized symbolic
/// state: `(coefficient, amplitude)` keyed by mirror name.
pub fn first_order_coefficients(state: &StateVector<FirstOrder>) -> BTreeMap<String, (Complex64, f64)> {
    let registry = state.registry().clone();
    let mut out = BTreeMap::new();
    for id in registry.mirror_ids() {
        let mut coeff = Complex64::new(0.0, 0.0);
        let mut weight = 0.0_f64;
        for (label, amp) in state.iter() {
            if label.env.level(id) == MirrorLevel::Orthogonal {
                weight += amp.order1.norm().powi(2);
                let partner = label.with_level(id, MirrorLevel::Undisturbed);
                coeff += state.get(&partner).order0.conj() * amp.order1;
            }
        }
        out.insert(registry.mirror_name(id).to_string(), (coeff, weight.sqrt()));
    }
    out
}

/// Runs the symbolic first-order engine under `post` and reads each
/// mirror's |χ⊥⟩ coefficient in the normalized branch state. All couplings
/// must be in first-order mode.
pub fn trace_first_order(circuit: &Circuit, initial: &StateVector, post: &Postselection) -> Result<Vec<TraceReport>> {
    require_mode(circuit, CouplingMode::FirstOrder)?;
    let run = evolve_forward(circuit, &initial.lift(), &post.policy)?;
    let probability = run.ledger.history_probability();
    let epsilon = circuit.reference_epsilon();
    Ok(first_order_coefficients(&run.snapshots.final_state)
        .into_iter()
        .map(|(mirror, (coeff, amplitude))| TraceReport {
            mirror,
            outcome: post.name.clone(),
            probability,
            coeff_first_order: Some(coeff),
            trace_amplitude: Some(amplitude),
            fidelity_deficit_exact: None,
            kick_exact: None,
            epsilon,
            verdict: Verdict::classify(Some(amplitude), None, epsilon),
        })
        .collect())
}

fn exact_report(mirror: &str, outcome: &str, probability: f64, rho: &MirrorDensity, epsilon: f64) -> TraceReport {
    let deficit = rho.fidelity_deficit();
    let kick = if epsilon > 0.0 { rho.coherence() / epsilon } else { Complex64::new(0.0, 0.0) };
    TraceReport {
        mirror: mirror.to_string(),
        outcome: outcome.to_string(),
        probability,
        coeff_first_order: None,
        trace_amplitude: None,
        fidelity_deficit_exact: Some(deficit),
        kick_exact: Some(kick),
        epsilon,
        verdict: Verdict::classify(None, Some(deficit), epsilon),
    }
}

/// Final normalized branch state of an exact numeric run, with its
/// probability.
pub fn exact_branch(circuit: &Circuit, initial: &StateVector, post: &Postselection) -> Result<(f64, StateVector)> {
    require_mode(circuit, CouplingMode::Exact)?;
    let run = evolve_forward(circuit, initial, &post.policy)?;
    Ok((run.ledger.history_probability(), run.snapshots.final_state))
}

/// Exact numeric evolution under `post`; reduced density matrix and
/// fidelity deficit of every mirror. All couplings must be in exact mode.
pub fn trace_exact(circuit: &Circuit, initial: &StateVector, post: &Postselection) -> Result<Vec<TraceReport>> {
    let (probability, state) = exact_branch(circuit, initial, post)?;
    circuit
        .mirrors()
        .iter()
        .map(|(m, c)| Ok(exact_report(m, &post.name, probability, &reduced_mirror_state(&state, m)?, c.epsilon)))
        .collect()
}

/// Both engines on the same circuit (the coupling mode is switched as
/// needed), merged per mirror.
pub fn trace_combined(circuit: &Circuit, initial: &StateVector, post: &Postselection) -> Result<Vec<TraceReport>> {
    let first = trace_first_order(&circuit.with_mode(CouplingMode::FirstOrder), initial, post)?;
    let exact = trace_exact(&circuit.with_mode(CouplingMode::Exact), initial, post)?;
    first.iter().zip(&exact).map(|(f, e)| TraceReport::combine(f, e)).collect()
}

/// Largest amplitude difference between the first-order branch state
/// (evaluated at the circuit's ε) and the exact one.
pub fn first_order_deviation(circuit: &Circuit, initial: &StateVector, post: &Postselection) -> Result<f64> {
    let symbolic = evolve_forward(&circuit.with_mode(CouplingMode::FirstOrder), &initial.lift(), &post.policy)?;
    let exact = evolve_forward(&circuit.with_mode(CouplingMode::Exact), initial, &post.policy)?;
    let eps = circuit.reference_epsilon();
    symbolic.snapshots.final_state.evaluate(eps).max_deviation(&exact.snapshots.final_state)
}

/// One branch of a measurement, with exact traces.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchTrace {
    pub outcome: String,
    /// Probability given the base conditioning.
    pub probability: f64,
    pub traces: Vec<TraceReport>,
    #[serde(skip)]
    pub densities: BTreeMap<String, MirrorDensity>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BranchSplit {
    pub branches: Vec<BranchTrace>,
    /// Reduced mirror state with the measured detectors left unresolved.
    pub unconditioned: BTreeMap<String, MirrorDensity>,
    /// Trace distance between the probability-weighted branch states and
    /// the unconditioned state, per mirror.
    pub mixture_distance: BTreeMap<String, f64>,
}

/// Splits an exact run into the branches of the detectors `outcomes`
/// (every other detector treated as in `base`), and checks that the
/// weighted branch mirror states recombine into the unconditioned one.
pub fn split_branches(
    circuit: &Circuit,
    initial: &StateVector,
    base: &ConditioningPolicy,
    outcomes: &[&str],
) -> Result<BranchSplit> {
    require_mode(circuit, CouplingMode::Exact)?;
    let mut reference = base.clone();
    for o in outcomes {
        reference = reference.with(o, Condition::Unresolved);
    }
    let reference_run = evolve_forward(circuit, initial, &reference)?;
    let reference_p = reference_run.ledger.history_probability();

    let mut branches = Vec::new();
    let mut mixtures: BTreeMap<String, Mixture> = BTreeMap::new();
    for &o in outcomes {
        let mut policy = base.clone();
        for other in outcomes {
            policy = policy.with(other, if *other == o { Condition::Click } else { Condition::Null });
        }
        let run = match evolve_forward(circuit, initial, &policy) {
            Ok(run) => run,
            Err(Error::ImpossibleBranch { .. }) => {
                branches.push(BranchTrace {
                    outcome: o.to_string(),
                    probability: 0.0,
                    traces: Vec::new(),
                    densities: BTreeMap::new(),
                });
                continue;
            }
            Err(e) => return Err(e),
        };
        let probability = run.ledger.history_probability() / reference_p;
        let state = run.snapshots.final_state;
        let mut traces = Vec::new();
        let mut densities = BTreeMap::new();
        for (m, c) in circuit.mirrors() {
            let rho = reduced_mirror_state(&state, m)?;
            traces.push(exact_report(m, o, probability, &rho, c.epsilon));
            densities.insert(m.clone(), rho);
            mixtures
                .entry(m.clone())
                .or_insert_with(|| Mixture { components: Vec::new() })
                .components
                .push((probability, state.clone()));
        }
        branches.push(BranchTrace { outcome: o.to_string(), probability, traces, densities });
    }

    let mut unconditioned = BTreeMap::new();
    let mut mixture_distance = BTreeMap::new();
    for (m, _) in circuit.mirrors() {
        let rho = reduced_mirror_state(&reference_run.snapshots.final_state, m)?;
        if let Some(mix) = mixtures.get(m) {
            mixture_distance.insert(m.clone(), reduced_mirror_state_mixture(mix, m)?.trace_distance(&rho));
        }
        unconditioned.insert(m.clone(), rho);
    }
    Ok(BranchSplit { branches, unconditioned, mixture_distance })
}

/// Detector names of the H/V measurement on the first cycle's output.
pub const STRATEGY_C_OUTCOMES: [&str; 2] = ["D_H", "D_V"];

/// Exact traces in the H and V branches of a final polarization
/// measurement; requires detectors named `D_H` and `D_V`.
pub fn strategy_c_branches(circuit: &Circuit, initial: &StateVector) -> Result<BranchSplit> {
    for o in STRATEGY_C_OUTCOMES {
        if !circuit.outcomes().iter().any(|x| x == o) {
            return Err(Error::Wiring(format!("no H/V measurement: detector `{o}` is not declared")));
        }
    }
    split_branches(circuit, initial, &ConditioningPolicy::all_null(), &STRATEGY_C_OUTCOMES)
}
