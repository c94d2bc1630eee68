//! Executable reconstructions of the nested-interferometer setups and of
//! the arguments made about them, as parameterized circuit builders plus
//! pass/fail reports.

mod config;
mod fig1;
mod fig2;
mod reference;
mod report;
mod suite;

pub use config::{ScenarioConfig, Strategy, DEFAULT_EPSILON};
pub use fig1::{build_salih_fig1, fig1_source, MIRROR_CYCLE1, MIRROR_CYCLE2};
pub use fig2::{build_one_cycle_fig2, OneCycleVerdicts, RIGHT_HAND_MIRROR};
pub use reference::{displayed_backward, displayed_forward};
pub use report::{Check, Comparison, LedgerRecord, ProbabilityRecord, Quantity, Report, WeakValueRecord};
pub use suite::{
    run_circuit, run_one_cycle, run_paradox_suite, run_scenario, run_strategy, scenario_document, verify_all,
    SCENARIO_NAMES,
};
