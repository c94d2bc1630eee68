//! The photon+mirror states displayed for the two-cycle setup, to first
//! order in ε, as targets for snapshot pinning.

use std::f64::consts::FRAC_1_SQRT_2 as R;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::Result;
use crate::hilbert::{FirstOrder, Pol, Registry, StateVector};

use super::fig1::{MIRROR_CYCLE1 as M1, MIRROR_CYCLE2 as M3};

struct Builder {
    state: StateVector<FirstOrder>,
}

impl Builder {
    fn new(registry: &Arc<Registry>) -> Self {
        Builder { state: StateVector::zero(registry.clone()) }
    }

    fn add(mut self, port: &str, pol: Pol, kicked: &[&str], order0: f64, order1: f64) -> Result<Self> {
        let label = self.state.registry().label(port, pol, kicked)?;
        self.state.add(label, FirstOrder::new(Complex64::new(order0, 0.0), Complex64::new(order1, 0.0)));
        Ok(self)
    }

    /// `c |port,pol⟩|χ⟩`
    fn plain(self, port: &str, pol: Pol, c: f64) -> Result<Self> {
        self.add(port, pol, &[], c, 0.0)
    }

    /// `c ε |port,pol⟩|χ⊥ of kicked…⟩`
    fn kicked(self, port: &str, pol: Pol, kicked: &[&str], c: f64) -> Result<Self> {
        self.add(port, pol, kicked, 0.0, c)
    }

    /// `c |port,pol⟩|χ′⟩` with |χ′⟩ = |χ⟩ + ε|χ⊥⟩ for `mirror`.
    fn primed(self, port: &str, pol: Pol, mirror: &str, c: f64) -> Result<Self> {
        self.plain(port, pol, c)?.kicked(port, pol, &[mirror], c)
    }
}

use Pol::{H, V};

/// Displayed forward state at `time` for the two-cycle setup with final
/// filter; `None` for time points without a displayed state.
pub fn displayed_forward(registry: &Arc<Registry>, time: &str) -> Result<Option<StateVector<FirstOrder>>> {
    let b = Builder::new(registry);
    let h = 0.5 * R; // 1/(2√2)
    let b = match time {
        "t2" => b.plain("A", H, R)?.plain("B", V, 0.5)?.plain("C", H, -0.5)?,
        "t5" => b.plain("A", H, R)?.plain("B", V, 0.5)?.primed("C", H, M1, -0.5)?,
        "t6" => {
            b.plain("A", H, R)?.plain("D", V, h)?.plain("D", H, -h)?.primed("D", V, M1, -h)?.primed("D", H, M1, -h)?
        }
        "t7" => b.plain("S", H, R)?.plain("J", H, -R)?.kicked("S", V, &[M1], -h)?.kicked("J", H, &[M1], -h)?,
        "t8" => b.plain("S", H, 1.0)?.kicked("S", V, &[M1], -0.5)?,
        "t9" => b
            .plain("S", H, R)?
            .plain("J", H, -R)?
            .kicked("S", V, &[M3], -0.5 * R)?
            .kicked("J", H, &[M3], -0.5 * R)?
            .kicked("S", H, &[M1], h)?
            .kicked("J", H, &[M1], h)?,
        "t10" => b.plain("F", H, 1.0)?.kicked("F", H, &[M1], 0.5)?.kicked("G", V, &[M3], -0.5)?,
        "t11" => b.plain("F", H, 1.0)?.kicked("F", H, &[M1], 0.5)?,
        _ => return Ok(None),
    };
    Ok(Some(b.state))
}

/// Displayed backward state (as a ket of conjugate amplitudes) for
/// postselection on a D0 click, at `t2` and `t2'`.
pub fn displayed_backward(registry: &Arc<Registry>, time: &str) -> Result<Option<StateVector>> {
    let terms: &[(&str, Pol, f64)] = match time {
        "t2" => &[("A", H, R), ("B", V, -0.5), ("C", H, -0.5)],
        "t2'" => &[("A", H, 1.0)],
        _ => return Ok(None),
    };
    let terms: Vec<_> = terms.iter().map(|&(p, pol, c)| (p, pol, Complex64::new(c, 0.0))).collect();
    Ok(Some(StateVector::from_terms(registry.clone(), &terms)?))
}
