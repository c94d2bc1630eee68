use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::optics::{CouplingMode, MirrorCoupling};

/// Coupling strength used when none is given.
pub const DEFAULT_EPSILON: f64 = 1e-3;

/// Which hypothetical complete measurement follows the first cycle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Strategy {
    #[default]
    None,
    /// Verification of the composite photon+mirror state.
    A,
    /// Polarization measurement in the diagonal basis (the second cycle).
    B,
    /// Polarization measurement in the H/V basis.
    C,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::None => "none",
            Strategy::A => "A",
            Strategy::B => "B",
            Strategy::C => "C",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Strategy::None),
            "A" | "a" => Ok(Strategy::A),
            "B" | "b" => Ok(Strategy::B),
            "C" | "c" => Ok(Strategy::C),
            other => Err(Error::Config(format!("unknown strategy `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioConfig {
    /// Number of outer cycles, 1 or 2.
    pub cycles: u8,
    /// Polarizing beam splitter sending H to F and V to G after the second
    /// cycle.
    pub include_final_h_filter: bool,
    /// Coupling applied to every mirror without an override.
    pub epsilon: f64,
    pub mode: CouplingMode,
    /// Per-mirror overrides.
    pub couplings: BTreeMap<String, MirrorCoupling>,
    /// Bob's shutter in the one-cycle protocol.
    pub shutter_present: bool,
    pub strategy: Strategy,
}

impl Default for ScenarioConfig {
    /// The two-cycle setup with the final filter, exact couplings at ε = 1e-3.
    fn default() -> Self {
        ScenarioConfig {
            cycles: 2,
            include_final_h_filter: true,
            epsilon: DEFAULT_EPSILON,
            mode: CouplingMode::Exact,
            couplings: BTreeMap::new(),
            shutter_present: false,
            strategy: Strategy::None,
        }
    }
}

impl ScenarioConfig {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_mode(mut self, mode: CouplingMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn with_cycles(mut self, cycles: u8) -> Self {
        self.cycles = cycles;
        if cycles != 2 {
            self.include_final_h_filter = false;
        }
        self
    }

    pub fn with_filter(mut self, include: bool) -> Self {
        self.include_final_h_filter = include;
        self
    }

    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_shutter(mut self, present: bool) -> Self {
        self.shutter_present = present;
        self
    }

    pub fn with_coupling(mut self, mirror: &str, coupling: MirrorCoupling) -> Self {
        self.couplings.insert(mirror.to_string(), coupling);
        self
    }

    /// True for the unmodified two-cycle setup.
    pub fn is_reference_setup(&self) -> bool {
        self.cycles == 2 && self.include_final_h_filter && self.strategy == Strategy::None
    }

    pub(crate) fn coupling_for(&self, mirror: &str) -> Result<MirrorCoupling> {
        match self.couplings.get(mirror) {
            Some(c) => Ok(*c),
            None => MirrorCoupling::new(self.epsilon, self.mode),
        }
    }

    pub(crate) fn check_overrides(&self, known: &[&str]) -> Result<()> {
        for m in self.couplings.keys() {
            if !known.contains(&m.as_str()) {
                return Err(Error::Config(format!("no mirror `{m}` in this setup")));
            }
        }
        Ok(())
    }
}
