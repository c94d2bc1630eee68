//! The two-cycle setup: each outer cycle splits the photon between an outer
//! arm A and an inner interferometer whose arm C bounces off a right-hand
//! mirror, then recombines towards S; light leaving through J is caught by
//! the cycle's detector D_A.

use crate::engine::{Circuit, Stage};
use crate::error::{Error, Result};
use crate::hilbert::{Pol, StateVector};
use crate::optics::{Convention, Element};

use super::config::{ScenarioConfig, Strategy};

pub const MIRROR_CYCLE1: &str = "MR_B1";
pub const MIRROR_CYCLE2: &str = "MR_B3";

const CAL: Convention = Convention::CALIBRATED;

fn stage(elements: Vec<Element>, timepoint: Option<&str>) -> Stage {
    Stage { elements, timepoint: timepoint.map(str::to_string) }
}

/// Stages of one outer cycle entering at `input`. `labels` name the
/// instants after the split (t1), after the inner split (t2), after the
/// mirror (t5), after the inner recombination (t6) and after the outer
/// recombination.
fn outer_cycle(input: &str, mirror: &str, labels: [&str; 5]) -> Result<Vec<Stage>> {
    Ok(vec![
        stage(vec![Element::hwp(input, CAL)], None),
        stage(vec![Element::pol_filter(input, "A", "E", CAL)?], Some(labels[0])),
        stage(vec![Element::hwp("E", CAL)], None),
        stage(vec![Element::pol_filter("E", "C", "B", CAL)?], Some(labels[1])),
        stage(vec![Element::mirror("C", Some(mirror))], Some(labels[2])),
        stage(vec![Element::pbs("C", "B", "D", "K", CAL)?], None),
        stage(vec![Element::hwp("D", CAL)], Some(labels[3])),
        stage(vec![Element::pbs("A", "D", "S", "J", CAL)?], Some(labels[4])),
    ])
}

/// The source port; the photon starts there H-polarized.
pub const SOURCE: &str = "SRC";

/// |SRC, H⟩ with every mirror undisturbed.
pub fn fig1_source(circuit: &Circuit) -> Result<StateVector> {
    circuit.source(SOURCE, Pol::H)
}

/// Builds the nested-interferometer circuit.
///
/// Time points: `t1`, `t2`, `t5`, `t6`, `t7`, `t8` in the first cycle
/// (`t8` after the null result at D_A1), and `t1'`, `t2'`, `t5'`, `t6'`,
/// `t9`, `t10`, `t11` in the second. With the final filter, S is split
/// into F (H, detector D0) and G (V, detector D_G); `t11` follows the null
/// result at D_G. Without it D0 watches S directly.
///
/// Strategy C (one cycle only) appends an H/V measurement of S with
/// detectors D_H and D_V.
pub fn build_salih_fig1(config: &ScenarioConfig) -> Result<Circuit> {
    if !matches!(config.cycles, 1 | 2) {
        return Err(Error::Config(format!("cycles must be 1 or 2, got {}", config.cycles)));
    }
    if config.include_final_h_filter && config.cycles != 2 {
        return Err(Error::Config("the final filter follows the second cycle".into()));
    }
    if config.strategy == Strategy::C && config.cycles != 1 {
        return Err(Error::Config("strategy C measures the first cycle's output; use one cycle".into()));
    }
    if config.shutter_present {
        return Err(Error::Config("the shutter belongs to the one-cycle protocol".into()));
    }

    let two = config.cycles == 2;
    let mirrors: Vec<&str> = if two { vec![MIRROR_CYCLE1, MIRROR_CYCLE2] } else { vec![MIRROR_CYCLE1] };
    config.check_overrides(&mirrors)?;

    let mut paths = vec!["SRC", "A", "E", "B", "C", "D", "K", "S", "J"];
    let mut outcomes = vec!["D_A1"];
    let mut stages = outer_cycle(SOURCE, MIRROR_CYCLE1, ["t1", "t2", "t5", "t6", "t7"])?;
    stages.push(stage(vec![Element::detector("J", None, "D_A1")], Some("t8")));

    if two {
        stages.extend(outer_cycle("S", MIRROR_CYCLE2, ["t1'", "t2'", "t5'", "t6'", "t9"])?);
        if config.include_final_h_filter {
            paths.extend(["F", "G"]);
            outcomes.extend(["D_A2", "D0", "D_G"]);
            stages.push(stage(
                vec![Element::detector("J", None, "D_A2"), Element::pol_filter("S", "F", "G", CAL)?],
                Some("t10"),
            ));
            stages.push(stage(vec![Element::detector("G", None, "D_G")], Some("t11")));
            stages.push(stage(vec![Element::detector("F", Some(Pol::H), "D0")], None));
        } else {
            outcomes.extend(["D_A2", "D0"]);
            stages.push(stage(vec![Element::detector("J", None, "D_A2")], Some("t10")));
            stages.push(stage(vec![Element::detector("S", None, "D0")], None));
        }
    } else if config.strategy == Strategy::C {
        paths.extend(["SH", "SV"]);
        outcomes.extend(["D_H", "D_V"]);
        stages.push(stage(vec![Element::pol_filter("S", "SH", "SV", CAL)?], None));
        stages.push(stage(vec![Element::detector("SH", None, "D_H"), Element::detector("SV", None, "D_V")], None));
    }

    let couplings = mirrors.iter().map(|m| Ok((m.to_string(), config.coupling_for(m)?))).collect::<Result<Vec<_>>>()?;
    Circuit::new(
        paths.into_iter().map(String::from).collect(),
        outcomes.into_iter().map(String::from).collect(),
        couplings,
        stages,
    )
}
