//! One-cycle counterfactual communication protocol, modeled as equivalent
//! to the second cycle of the two-cycle setup (final H filter included),
//! with Bob's shutter on the right-hand arm C ahead of its mirror.
//!
//! Detectors: D3 on J, D0 on F (H after the filter), D1 on G (V after the
//! filter).

use serde::Serialize;

use crate::engine::{Circuit, Postselection, Stage};
use crate::error::{Error, Result};
use crate::hilbert::Pol;
use crate::optics::{Convention, CouplingMode, Element};
use crate::trace::{trace_first_order, TraceReport, Verdict};

use super::config::ScenarioConfig;

pub const RIGHT_HAND_MIRROR: &str = "MB1";

const CAL: Convention = Convention::CALIBRATED;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneCycleBranch {
    pub outcome: String,
    /// Leading-order probability.
    pub probability: f64,
    /// First-order trace on the right-hand mirror; absent when the branch
    /// does not occur.
    pub trace: Option<TraceReport>,
    pub interpretation: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OneCycleVerdicts {
    pub shutter_present: bool,
    pub branches: Vec<OneCycleBranch>,
    pub total_probability: f64,
}

impl OneCycleVerdicts {
    pub fn branch(&self, outcome: &str) -> Option<&OneCycleBranch> {
        self.branches.iter().find(|b| b.outcome == outcome)
    }
}

fn stage(elements: Vec<Element>, timepoint: Option<&str>) -> Stage {
    Stage { elements, timepoint: timepoint.map(str::to_string) }
}

fn circuit(config: &ScenarioConfig) -> Result<Circuit> {
    config.check_overrides(&[RIGHT_HAND_MIRROR])?;
    let mut outcomes = vec!["D3", "D0", "D1"];
    let mut stages = vec![
        stage(vec![Element::hwp("S", CAL)], None),
        stage(vec![Element::pol_filter("S", "A", "E", CAL)?], Some("t1")),
        stage(vec![Element::hwp("E", CAL)], None),
        stage(vec![Element::pol_filter("E", "C", "B", CAL)?], Some("t2")),
    ];
    if config.shutter_present {
        outcomes.push("shutter");
        stages.push(stage(vec![Element::shutter("C", "shutter")], None));
    }
    stages.extend([
        stage(vec![Element::mirror("C", Some(RIGHT_HAND_MIRROR))], Some("t5")),
        stage(vec![Element::pbs("C", "B", "D", "K", CAL)?], None),
        stage(vec![Element::hwp("D", CAL)], Some("t6")),
        stage(vec![Element::pbs("A", "D", "S", "J", CAL)?], Some("t7")),
        stage(vec![Element::detector("J", None, "D3"), Element::pol_filter("S", "F", "G", CAL)?], Some("t10")),
        stage(vec![Element::detector("G", None, "D1"), Element::detector("F", Some(Pol::H), "D0")], None),
    ]);
    Circuit::new(
        ["S", "A", "E", "B", "C", "D", "K", "J", "F", "G"].map(String::from).to_vec(),
        outcomes.into_iter().map(String::from).collect(),
        vec![(RIGHT_HAND_MIRROR.to_string(), config.coupling_for(RIGHT_HAND_MIRROR)?)],
        stages,
    )
}

fn interpret(outcome: &str, shutter_present: bool, verdict: Option<Verdict>) -> String {
    match (outcome, verdict) {
        (_, None) => "does not occur".into(),
        ("shutter", _) => "photon absorbed by the shutter".into(),
        ("D0", _) => "presence of the shutter was not tested".into(),
        ("D1", Some(Verdict::NoTrace)) if shutter_present => {
            "shutter detected with no trace on the right-hand mirror: counterfactual".into()
        }
        (_, Some(Verdict::NoTrace)) => "no trace on the right-hand mirror".into(),
        (_, Some(_)) => "first-order trace on the right-hand mirror: not counterfactual".into(),
    }
}

/// The one-cycle circuit (photon enters at S, H-polarized) and the
/// first-order verdict for every detector.
pub fn build_one_cycle_fig2(config: &ScenarioConfig) -> Result<(Circuit, OneCycleVerdicts)> {
    let built = circuit(config)?;
    let symbolic = built.with_mode(CouplingMode::FirstOrder);
    let source = built.source("S", Pol::H)?;
    let mut branches = Vec::new();
    let mut total = 0.0;
    for outcome in built.outcomes() {
        let (probability, trace) = match trace_first_order(&symbolic, &source, &Postselection::click(outcome)) {
            Ok(mut reports) => (reports[0].probability, Some(reports.remove(0))),
            Err(Error::ImpossibleBranch { .. }) => (0.0, None),
            Err(e) => return Err(e),
        };
        total += probability;
        let interpretation = interpret(outcome, config.shutter_present, trace.as_ref().map(|t| t.verdict));
        branches.push(OneCycleBranch { outcome: outcome.clone(), probability, trace, interpretation });
    }
    Ok((built, OneCycleVerdicts { shutter_present: config.shutter_present, branches, total_probability: total }))
}
