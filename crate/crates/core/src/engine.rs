//! Circuits as timelines of stages, and forward/backward evolution through
//! them with detector conditioning.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hilbert::{Amplitude, Pol, PortId, Registry, StateVector, TOLERANCE};
use crate::optics::{apply_elements, BoundElement, CouplingMode, Element, MirrorCoupling};

/// Conditioning on a branch whose probability is at or below this value is
/// reported as impossible.
pub const IMPOSSIBLE_BRANCH_THRESHOLD: f64 = 1e-24;

/// Elements applied in parallel, optionally followed by a named time point.
#[derive(Debug, Clone, PartialEq)]
pub struct Stage {
    pub elements: Vec<Element>,
    pub timepoint: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    paths: Vec<String>,
    outcomes: Vec<String>,
    mirrors: Vec<(String, MirrorCoupling)>,
    stages: Vec<Stage>,
    registry: Arc<Registry>,
    bound: Vec<Vec<BoundElement>>,
}

#[derive(Debug, Clone, Default)]
pub struct CircuitBuilder {
    paths: Vec<String>,
    outcomes: Vec<String>,
    mirrors: Vec<(String, MirrorCoupling)>,
    stages: Vec<Stage>,
}

impl CircuitBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn ports<I: IntoIterator<Item = S>, S: Into<String>>(mut self, ports: I) -> Self {
        self.paths.extend(ports.into_iter().map(Into::into));
        self
    }

    pub fn outcomes<I: IntoIterator<Item = S>, S: Into<String>>(mut self, outcomes: I) -> Self {
        self.outcomes.extend(outcomes.into_iter().map(Into::into));
        self
    }

    pub fn mirror(mut self, id: &str, coupling: MirrorCoupling) -> Self {
        self.mirrors.push((id.to_string(), coupling));
        self
    }

    pub fn stage(mut self, elements: Vec<Element>) -> Self {
        self.stages.push(Stage { elements, timepoint: None });
        self
    }

    pub fn stage_at(mut self, elements: Vec<Element>, timepoint: &str) -> Self {
        self.stages.push(Stage { elements, timepoint: Some(timepoint.to_string()) });
        self
    }

    pub fn push_stage(mut self, stage: Stage) -> Self {
        self.stages.push(stage);
        self
    }

    pub fn build(self) -> Result<Circuit> {
        Circuit::new(self.paths, self.outcomes, self.mirrors, self.stages)
    }
}

impl Circuit {
    pub fn builder() -> CircuitBuilder {
        CircuitBuilder::new()
    }

    pub fn new(
        paths: Vec<String>,
        outcomes: Vec<String>,
        mirrors: Vec<(String, MirrorCoupling)>,
        stages: Vec<Stage>,
    ) -> Result<Self> {
        let registry = Arc::new(Registry::new(
            paths.iter().chain(outcomes.iter()).cloned(),
            mirrors.iter().map(|(m, _)| m.clone()),
        )?);
        let path_set: BTreeSet<&str> = paths.iter().map(String::as_str).collect();

        let eps_ref = mirrors.iter().map(|(_, c)| c.epsilon).fold(0.0, f64::max);
        let couplings: BTreeMap<String, (MirrorCoupling, f64)> = mirrors
            .iter()
            .map(|(m, c)| (m.clone(), (*c, if eps_ref > 0.0 { c.epsilon / eps_ref } else { 1.0 })))
            .collect();

        let mut used_outcomes = BTreeSet::new();
        let mut timepoints = BTreeSet::new();
        let mut bound = Vec::with_capacity(stages.len());
        for (i, stage) in stages.iter().enumerate() {
            let mut touched = BTreeSet::new();
            for e in &stage.elements {
                for p in e.paths() {
                    if !path_set.contains(p) {
                        return Err(Error::UnknownPort(p.to_string()));
                    }
                    if !touched.insert(p) {
                        return Err(Error::Wiring(format!("port `{p}` used twice in stage {i}")));
                    }
                }
                if let Some(o) = e.outcome() {
                    if !outcomes.iter().any(|x| x == o) {
                        return Err(Error::UnknownOutcome(o.to_string()));
                    }
                    if !used_outcomes.insert(o.to_string()) {
                        return Err(Error::Wiring(format!("outcome `{o}` has more than one detector")));
                    }
                }
            }
            if let Some(t) = &stage.timepoint {
                if !timepoints.insert(t.clone()) {
                    return Err(Error::Wiring(format!("duplicate time point `{t}`")));
                }
            }
            bound.push(stage.elements.iter().map(|e| e.bind(&registry, &couplings)).collect::<Result<Vec<_>>>()?);
        }
        Ok(Circuit { paths, outcomes, mirrors, stages, registry, bound })
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn paths(&self) -> &[String] {
        &self.paths
    }

    pub fn outcomes(&self) -> &[String] {
        &self.outcomes
    }

    pub fn mirrors(&self) -> &[(String, MirrorCoupling)] {
        &self.mirrors
    }

    pub fn stages(&self) -> &[Stage] {
        &self.stages
    }

    pub fn timepoints(&self) -> impl Iterator<Item = &str> {
        self.stages.iter().filter_map(|s| s.timepoint.as_deref())
    }

    pub fn coupling(&self, mirror: &str) -> Option<&MirrorCoupling> {
        self.mirrors.iter().find(|(m, _)| m == mirror).map(|(_, c)| c)
    }

    /// Largest coupling strength; the unit of first-order coefficients.
    pub fn reference_epsilon(&self) -> f64 {
        self.mirrors.iter().map(|(_, c)| c.epsilon).fold(0.0, f64::max)
    }

    /// Photon at `port` with polarization `pol`, all mirrors undisturbed.
    pub fn source<A: Amplitude>(&self, port: &str, pol: Pol) -> Result<StateVector<A>> {
        if !self.paths.iter().any(|p| p == port) {
            return Err(Error::UnknownPort(port.to_string()));
        }
        StateVector::basis(self.registry.clone(), port, pol)
    }

    fn rebuilt(&self, mirrors: Vec<(String, MirrorCoupling)>, stages: Vec<Stage>) -> Result<Circuit> {
        Circuit::new(self.paths.clone(), self.outcomes.clone(), mirrors, stages)
    }

    /// Same circuit with every coupling switched to `mode`.
    pub fn with_mode(&self, mode: CouplingMode) -> Circuit {
        let mirrors = self.mirrors.iter().map(|(m, c)| (m.clone(), MirrorCoupling { mode, ..*c })).collect();
        self.rebuilt(mirrors, self.stages.clone()).expect("mode change keeps the circuit valid")
    }

    /// Same circuit with every coupling set to strength `epsilon`.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Circuit> {
        let mirrors = self
            .mirrors
            .iter()
            .map(|(m, c)| Ok((m.clone(), MirrorCoupling::new(epsilon, c.mode)?)))
            .collect::<Result<Vec<_>>>()?;
        self.rebuilt(mirrors, self.stages.clone())
    }

    /// Coupled mirrors replaced by ideal ones; the registry is unchanged so
    /// states remain comparable.
    pub fn decoupled(&self) -> Circuit {
        let stages = self
            .stages
            .iter()
            .map(|s| Stage {
                elements: s
                    .elements
                    .iter()
                    .map(|e| match e {
                        Element::CoupledMirror { path, .. } => Element::IdealMirror { path: path.clone() },
                        other => other.clone(),
                    })
                    .collect(),
                timepoint: s.timepoint.clone(),
            })
            .collect();
        self.rebuilt(self.mirrors.clone(), stages).expect("decoupling keeps the circuit valid")
    }

    fn stage_index(&self, timepoint: &str) -> Result<usize> {
        self.stages
            .iter()
            .position(|s| s.timepoint.as_deref() == Some(timepoint))
            .ok_or_else(|| Error::UnknownTimepoint(timepoint.to_string()))
    }

    /// Stages up to and including the one labeled `timepoint`.
    pub fn prefix_through(&self, timepoint: &str) -> Result<Circuit> {
        let end = self.stage_index(timepoint)?;
        self.rebuilt(self.mirrors.clone(), self.stages[..=end].to_vec())
    }

    /// Stages strictly after `from` up to and including `to`; `None` means
    /// the circuit start or end.
    pub fn segment(&self, from: Option<&str>, to: Option<&str>) -> Result<Circuit> {
        let start = match from {
            Some(t) => self.stage_index(t)? + 1,
            None => 0,
        };
        let end = match to {
            Some(t) => self.stage_index(t)? + 1,
            None => self.stages.len(),
        };
        if start > end {
            return Err(Error::Wiring("segment ends before it starts".into()));
        }
        self.rebuilt(self.mirrors.clone(), self.stages[start..end].to_vec())
    }

    fn outcome_port(&self, outcome: &str) -> Result<PortId> {
        if !self.outcomes.iter().any(|o| o == outcome) {
            return Err(Error::UnknownOutcome(outcome.to_string()));
        }
        self.registry.port(outcome)
    }
}

/// Treatment of one detector's result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    Click,
    Null,
    /// Leave the detector's record in superposition with the rest.
    Unresolved,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ConditioningPolicy {
    entries: BTreeMap<String, Condition>,
    default: Option<Condition>,
}

impl ConditioningPolicy {
    /// Every detector must be named explicitly.
    pub fn explicit() -> Self {
        ConditioningPolicy { entries: BTreeMap::new(), default: None }
    }

    pub fn unconditioned() -> Self {
        ConditioningPolicy { entries: BTreeMap::new(), default: Some(Condition::Unresolved) }
    }

    /// No detector fires.
    pub fn all_null() -> Self {
        ConditioningPolicy { entries: BTreeMap::new(), default: Some(Condition::Null) }
    }

    /// `outcome` fires and every other detector stays silent.
    pub fn click(outcome: &str) -> Self {
        Self::all_null().with(outcome, Condition::Click)
    }

    pub fn with(mut self, outcome: &str, condition: Condition) -> Self {
        self.entries.insert(outcome.to_string(), condition);
        self
    }

    pub fn condition(&self, outcome: &str) -> Option<Condition> {
        self.entries.get(outcome).copied().or(self.default)
    }

    fn validate(&self, circuit: &Circuit) -> Result<()> {
        for name in self.entries.keys() {
            circuit.outcome_port(name)?;
        }
        Ok(())
    }
}

/// A named conditioning: which detector results a run is restricted to.
#[derive(Debug, Clone, PartialEq)]
pub struct Postselection {
    pub name: String,
    pub policy: ConditioningPolicy,
}

impl Postselection {
    /// `outcome` clicks; no other detector fires.
    pub fn click(outcome: &str) -> Self {
        Postselection { name: outcome.to_string(), policy: ConditioningPolicy::click(outcome) }
    }

    /// No detector fires.
    pub fn no_click() -> Self {
        Postselection { name: "no-click".into(), policy: ConditioningPolicy::all_null() }
    }

    pub fn new(name: &str, policy: ConditioningPolicy) -> Self {
        Postselection { name: name.to_string(), policy }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LedgerEvent {
    pub outcome: String,
    pub condition: Condition,
    pub stage: usize,
    /// Probability of the recorded result given the history so far (the
    /// click probability for unresolved detectors).
    pub conditional: f64,
    /// Probability of the history so far together with this result.
    pub unconditional: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ProbabilityLedger {
    pub events: Vec<LedgerEvent>,
}

impl ProbabilityLedger {
    /// Probability of the whole conditioned history.
    pub fn history_probability(&self) -> f64 {
        self.events.iter().filter(|e| e.condition != Condition::Unresolved).map(|e| e.conditional).product()
    }

    pub fn event(&self, outcome: &str) -> Option<&LedgerEvent> {
        self.events.iter().find(|e| e.outcome == outcome)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotSet<A: Amplitude> {
    pub initial: StateVector<A>,
    pub snapshots: Vec<(String, StateVector<A>)>,
    pub final_state: StateVector<A>,
    /// Norm of the projected state at each conditioning event, before
    /// renormalization.
    pub factors: Vec<(String, A)>,
}

impl<A: Amplitude> SnapshotSet<A> {
    pub fn get(&self, timepoint: &str) -> Result<&StateVector<A>> {
        self.snapshots
            .iter()
            .find(|(t, _)| t == timepoint)
            .map(|(_, s)| s)
            .ok_or_else(|| Error::UnknownTimepoint(timepoint.to_string()))
    }

    /// Π factors; equals the norm of the unnormalized branch amplitude.
    pub fn factor_product(&self) -> A {
        self.factors.iter().fold(A::one(), |acc, (_, f)| acc * *f)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardRun<A: Amplitude> {
    pub snapshots: SnapshotSet<A>,
    pub ledger: ProbabilityLedger,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den > 0.0 {
        num / den
    } else {
        0.0
    }
}

/// Applies the stages in order, conditioning at detectors according to
/// `policy` and renormalizing after every click/null.
pub fn evolve_forward<A: Amplitude>(
    circuit: &Circuit,
    initial: &StateVector<A>,
    policy: &ConditioningPolicy,
) -> Result<ForwardRun<A>> {
    initial.check_registry_of(&circuit.registry)?;
    let n0 = initial.norm_sqr().leading().re;
    if (n0 - 1.0).abs() > TOLERANCE {
        return Err(Error::NotNormalized(n0));
    }
    policy.validate(circuit)?;

    let mut state = initial.clone();
    let mut snapshots = Vec::new();
    let mut factors = Vec::new();
    let mut ledger = ProbabilityLedger::default();
    let mut history = 1.0;

    for (i, (stage, elements)) in circuit.stages.iter().zip(&circuit.bound).enumerate() {
        state = apply_elements(elements, &state, false)?;
        for (element, bound) in stage.elements.iter().zip(elements) {
            let (Some(outcome), Some(port)) = (element.outcome(), bound.absorber_port()) else {
                continue;
            };
            let condition = policy.condition(outcome).ok_or_else(|| Error::AmbiguousBranch(outcome.to_string()))?;
            let total = state.norm_sqr().leading().re;
            let clicked = state.filter(|l| l.path == port);
            let p_click = ratio(clicked.norm_sqr().leading().re, total);
            let (kept, p) = match condition {
                Condition::Click => (clicked, p_click),
                Condition::Null => {
                    let rest = state.filter(|l| l.path != port);
                    let p = ratio(rest.norm_sqr().leading().re, total);
                    (rest, p)
                }
                Condition::Unresolved => {
                    ledger.events.push(LedgerEvent {
                        outcome: outcome.to_string(),
                        condition,
                        stage: i,
                        conditional: p_click,
                        unconditional: history * p_click,
                    });
                    continue;
                }
            };
            let impossible = || Error::ImpossibleBranch {
                outcome: outcome.to_string(),
                result: if condition == Condition::Click { "click".into() } else { "no click".into() },
            };
            if p <= IMPOSSIBLE_BRANCH_THRESHOLD {
                return Err(impossible());
            }
            let factor = kept.norm_sqr().sqrt_positive().ok_or_else(impossible)?;
            let inverse = A::one().checked_div(factor).ok_or_else(impossible)?;
            state = kept.scale(inverse);
            factors.push((outcome.to_string(), factor));
            history *= p;
            ledger.events.push(LedgerEvent {
                outcome: outcome.to_string(),
                condition,
                stage: i,
                conditional: p,
                unconditional: history,
            });
        }
        if let Some(t) = &stage.timepoint {
            snapshots.push((t.clone(), state.clone()));
        }
    }
    Ok(ForwardRun {
        snapshots: SnapshotSet { initial: initial.clone(), snapshots, final_state: state, factors },
        ledger,
    })
}

/// Evolves a final bra back through the circuit. Through each detector the
/// click or null projector named by `policy` is inserted; no
/// renormalization is applied. Snapshot `t` is the bra at the same instant
/// as the forward snapshot `t`.
pub fn evolve_backward<A: Amplitude>(
    circuit: &Circuit,
    final_bra: &StateVector<A>,
    policy: &ConditioningPolicy,
) -> Result<SnapshotSet<A>> {
    final_bra.check_registry_of(&circuit.registry)?;
    policy.validate(circuit)?;
    let mut bra = final_bra.clone();
    let mut snapshots = Vec::new();
    for (stage, elements) in circuit.stages.iter().zip(&circuit.bound).rev() {
        if let Some(t) = &stage.timepoint {
            snapshots.push((t.clone(), bra.clone()));
        }
        for (element, bound) in stage.elements.iter().zip(elements).rev() {
            let (Some(outcome), Some(port)) = (element.outcome(), bound.absorber_port()) else {
                continue;
            };
            bra = match policy.condition(outcome) {
                Some(Condition::Click) => bra.filter(|l| l.path == port),
                Some(Condition::Null) => bra.filter(|l| l.path != port),
                Some(Condition::Unresolved) => bra,
                None => return Err(Error::AmbiguousBranch(outcome.to_string())),
            };
        }
        bra = apply_elements(elements, &bra, true)?;
    }
    snapshots.reverse();
    Ok(SnapshotSet { initial: bra, snapshots, final_state: final_bra.clone(), factors: Vec::new() })
}

/// Unconditional probability that `outcome` fires, with the mirrors traced
/// out. For symbolic amplitudes this is the zeroth-order value.
pub fn outcome_probability<A: Amplitude>(circuit: &Circuit, initial: &StateVector<A>, outcome: &str) -> Result<f64> {
    let port = circuit.outcome_port(outcome)?;
    let run = evolve_forward(circuit, initial, &ConditioningPolicy::unconditioned())?;
    Ok(run.snapshots.final_state.filter(|l| l.path == port).norm_sqr().leading().re)
}

/// One leaf of the detection tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch<A: Amplitude> {
    /// `None` when no detector fired.
    pub outcome: Option<String>,
    pub probability: f64,
    /// Unnormalized final state of the branch.
    pub state: StateVector<A>,
}

/// Every detection outcome plus the no-detection remainder. A photon is
/// absorbed at most once and absorbed amplitude is never touched again, so
/// the leaves are read off one unconditioned run.
pub fn branches<A: Amplitude>(circuit: &Circuit, initial: &StateVector<A>) -> Result<Vec<Branch<A>>> {
    let run = evolve_forward(circuit, initial, &ConditioningPolicy::unconditioned())?;
    let fin = run.snapshots.final_state;
    let mut ports = BTreeSet::new();
    let mut out = Vec::new();
    for o in &circuit.outcomes {
        let port = circuit.registry.port(o)?;
        ports.insert(port);
        let state = fin.filter(|l| l.path == port);
        out.push(Branch { outcome: Some(o.clone()), probability: state.norm_sqr().leading().re, state });
    }
    let rest = fin.filter(|l| !ports.contains(&l.path));
    out.push(Branch { outcome: None, probability: rest.norm_sqr().leading().re, state: rest });
    Ok(out)
}

/// ⟨out|U|in⟩ of the unconditioned circuit with all mirrors undisturbed,
/// rows indexed by `outputs` and columns by `inputs`.
pub fn transfer_matrix(
    circuit: &Circuit,
    inputs: &[(&str, Pol)],
    outputs: &[(&str, Pol)],
) -> Result<Vec<Vec<Complex64>>> {
    let registry = circuit.registry();
    let rows = outputs.iter().map(|(p, pol)| registry.label(p, *pol, &[])).collect::<Result<Vec<_>>>()?;
    let mut m = vec![vec![Complex64::new(0.0, 0.0); inputs.len()]; outputs.len()];
    for (j, (port, pol)) in inputs.iter().enumerate() {
        let run =
            evolve_forward(circuit, &circuit.source::<Complex64>(port, *pol)?, &ConditioningPolicy::unconditioned())?;
        for (i, row) in rows.iter().enumerate() {
            m[i][j] = run.snapshots.final_state.get(row);
        }
    }
    Ok(m)
}
