use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::Serialize;

use super::label::MirrorLevel;
use super::state::StateVector;
use crate::error::{Error, Result};

/// Reduced 2×2 density matrix of one mirror in the {|χ⟩, |χ⊥⟩} basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MirrorDensity {
    /// `rho[a][b] = ⟨a|ρ|b⟩` with index 0 = |χ⟩, 1 = |χ⊥⟩.
    pub rho: [[Complex64; 2]; 2],
}

impl MirrorDensity {
    pub fn undisturbed() -> Self {
        let z = Complex64::new(0.0, 0.0);
        MirrorDensity { rho: [[Complex64::new(1.0, 0.0), z], [z, z]] }
    }

    pub fn trace(&self) -> Complex64 {
        self.rho[0][0] + self.rho[1][1]
    }

    /// ⟨χ|ρ|χ⟩, the fidelity with the undisturbed mirror state.
    pub fn fidelity(&self) -> f64 {
        self.rho[0][0].re
    }

    /// 1 − ⟨χ|ρ|χ⟩.
    pub fn fidelity_deficit(&self) -> f64 {
        // ρ₁₁ directly: 1 − ρ₀₀ would lose the O(ε²) digits to cancellation
        self.rho[1][1].re
    }

    /// ⟨χ⊥|ρ|χ⟩; for a kicked state |χ⟩ + c·ε|χ⊥⟩ this is c·ε.
    pub fn coherence(&self) -> Complex64 {
        self.rho[1][0]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.rho[0][1] - self.rho[1][0].conj()).norm() <= tol
            && self.rho[0][0].im.abs() <= tol
            && self.rho[1][1].im.abs() <= tol
    }

    /// Eigenvalues, ascending. Assumes Hermitian input.
    pub fn eigenvalues(&self) -> [f64; 2] {
        let a = self.rho[0][0].re;
        let d = self.rho[1][1].re;
        let b = self.rho[0][1].norm();
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        [mean - radius, mean + radius]
    }

    /// Trace distance ½‖ρ − σ‖₁.
    pub fn trace_distance(&self, other: &MirrorDensity) -> f64 {
        let d00 = (self.rho[0][0] - other.rho[0][0]).re;
        let d11 = (self.rho[1][1] - other.rho[1][1]).re;
        let d01 = self.rho[0][1] - other.rho[0][1];
        // both traces are 1, so the difference is traceless
        let half_trace = 0.5 * (d00 + d11);
        let radius = (0.25 * (d00 - d11) * (d00 - d11) + d01.norm_sqr()).sqrt();
        0.5 * ((half_trace + radius).abs() + (half_trace - radius).abs())
    }

    fn accumulate(&mut self, other: &MirrorDensity, weight: f64) {
        for a in 0..2 {
            for b in 0..2 {
                self.rho[a][b] += other.rho[a][b] * weight;
            }
        }
    }
}

/// Probability-weighted ensemble of (not necessarily normalized) states.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub components: Vec<(f64, StateVector)>,
}

/// Partial trace over the photon and all other mirrors, normalized to unit
/// trace.
pub fn reduced_mirror_state(state: &StateVector, mirror: &str) -> Result<MirrorDensity> {
    let id = state.registry().mirror(mirror)?;
    let norm = state.norm_sqr().re;
    if norm <= 0.0 {
        return Err(Error::DegenerateState);
    }
    // pair labels that differ only in this mirror's level
    let mut pairs: BTreeMap<_, [Complex64; 2]> = BTreeMap::new();
    for (label, amp) in state.iter() {
        let level = label.env.level(id);
        let rest = label.with_level(id, MirrorLevel::Undisturbed);
        let slot = pairs.entry(rest).or_insert([Complex64::new(0.0, 0.0); 2]);
        slot[(level == MirrorLevel::Orthogonal) as usize] = *amp;
    }
    let mut rho = [[Complex64::new(0.0, 0.0); 2]; 2];
    for [a0, a1] in pairs.values() {
        let v = [*a0, *a1];
        for a in 0..2 {
            for b in 0..2 {
                rho[a][b] += v[a] * v[b].conj();
            }
        }
    }
    for row in rho.iter_mut() {
        for x in row.iter_mut() {
            *x /= norm;
        }
    }
    Ok(MirrorDensity { rho })
}

/// Reduced mirror state of a mixture: Σ wᵢ ρᵢ / Σ wᵢ, each ρᵢ from the
/// normalized component.
pub fn reduced_mirror_state_mixture(mixture: &Mixture, mirror: &str) -> Result<MirrorDensity> {
    let total: f64 = mixture.components.iter().map(|(w, _)| *w).sum();
    if mixture.components.is_empty() || total <= 0.0 {
        return Err(Error::DegenerateState);
    }
    let z = Complex64::new(0.0, 0.0);
    let mut out = MirrorDensity { rho: [[z; 2]; 2] };
    for (w, state) in &mixture.components {
        if *w < 0.0 {
            return Err(Error::Incomplete("negative mixture weight".into()));
        }
        if *w == 0.0 {
            continue;
        }
        out.accumulate(&reduced_mirror_state(state, mirror)?, *w / total);
    }
    Ok(out)
}
