use std::collections::BTreeMap;
use std::sync::Arc;

use num_complex::Complex64;

use super::amplitude::{Amplitude, FirstOrder};
use super::label::{BasisLabel, Pol, Registry};
use super::TOLERANCE;
use crate::error::{Error, Result};

/// Sparse amplitudes over composite basis labels. Absent labels have
/// amplitude exactly zero. Kets and bras share this representation: a bra
/// ⟨φ| is stored through the coefficients of |φ⟩.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<A: Amplitude = Complex64> {
    registry: Arc<Registry>,
    amps: BTreeMap<BasisLabel, A>,
}

impl<A: Amplitude> StateVector<A> {
    pub fn zero(registry: Arc<Registry>) -> Self {
        StateVector { registry, amps: BTreeMap::new() }
    }

    /// |port, pol⟩ with every mirror undisturbed.
    pub fn basis(registry: Arc<Registry>, port: &str, pol: Pol) -> Result<Self> {
        let label = BasisLabel::new(registry.port(port)?, pol);
        let mut s = Self::zero(registry);
        s.add(label, A::one());
        Ok(s)
    }

    /// Photon-only superposition, mirrors undisturbed.
    pub fn from_terms(registry: Arc<Registry>, terms: &[(&str, Pol, Complex64)]) -> Result<Self> {
        let mut s = Self::zero(registry);
        for &(port, pol, amp) in terms {
            let label = BasisLabel::new(s.registry.port(port)?, pol);
            s.add(label, A::from_complex(amp));
        }
        Ok(s)
    }

    pub fn registry(&self) -> &Arc<Registry> {
        &self.registry
    }

    pub fn len(&self) -> usize {
        self.amps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amps.is_empty()
    }

    pub fn get(&self, label: &BasisLabel) -> A {
        self.amps.get(label).copied().unwrap_or_else(A::zero)
    }

    /// Amplitude by names; `kicked` lists the mirrors in |χ⊥⟩.
    pub fn amplitude(&self, port: &str, pol: Pol, kicked: &[&str]) -> Result<A> {
        Ok(self.get(&self.registry.label(port, pol, kicked)?))
    }

    /// Accumulates `amp` onto `label`, dropping the entry if it cancels to
    /// exactly zero.
    pub fn add(&mut self, label: BasisLabel, amp: A) {
        let entry = self.amps.entry(label).or_insert_with(A::zero);
        *entry = *entry + amp;
        if entry.is_zero() {
            self.amps.remove(&label);
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&BasisLabel, &A)> {
        self.amps.iter()
    }

    pub fn norm_sqr(&self) -> A {
        self.amps.values().fold(A::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn scale(&self, k: A) -> Self {
        let mut out = Self::zero(self.registry.clone());
        for (l, a) in &self.amps {
            out.add(*l, *a * k);
        }
        out
    }

    pub fn normalized(&self) -> Result<Self> {
        let norm = self.norm_sqr().sqrt_positive().ok_or(Error::DegenerateState)?;
        let inv = A::one().checked_div(norm).ok_or(Error::DegenerateState)?;
        Ok(self.scale(inv))
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr().leading().re - 1.0).abs() <= TOLERANCE
    }

    /// Keeps only labels for which `keep` holds.
    pub fn filter(&self, mut keep: impl FnMut(&BasisLabel) -> bool) -> Self {
        StateVector {
            registry: self.registry.clone(),
            amps: self.amps.iter().filter(|(l, _)| keep(l)).map(|(l, a)| (*l, *a)).collect(),
        }
    }

    pub fn plus(&self, other: &Self) -> Result<Self> {
        self.check_registry(other)?;
        let mut out = self.clone();
        for (l, a) in &other.amps {
            out.add(*l, *a);
        }
        Ok(out)
    }

    pub fn map_amplitudes<B: Amplitude>(&self, f: impl Fn(A) -> B) -> StateVector<B> {
        let mut out = StateVector::zero(self.registry.clone());
        for (l, a) in &self.amps {
            out.add(*l, f(*a));
        }
        out
    }

    pub(crate) fn check_registry(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.registry, &other.registry) || self.registry == other.registry {
            Ok(())
        } else {
            Err(Error::RegistryMismatch("states belong to different port/mirror registries".into()))
        }
    }

    pub(crate) fn check_registry_of(&self, registry: &Registry) -> Result<()> {
        if *self.registry == *registry {
            Ok(())
        } else {
            Err(Error::RegistryMismatch("state does not belong to this circuit".into()))
        }
    }

    /// Largest amplitude difference, in modulus and over all orders, between
    /// two states.
    pub fn max_deviation(&self, other: &Self) -> Result<f64> {
        self.check_registry(other)?;
        let mut worst: f64 = 0.0;
        for l in self.amps.keys().chain(other.amps.keys()) {
            worst = worst.max((self.get(l) - other.get(l)).magnitude());
        }
        Ok(worst)
    }

    /// Human-readable Dirac form, for diagnostics.
    pub fn describe(&self) -> String {
        if self.amps.is_empty() {
            return "0".into();
        }
        self.amps.iter().map(|(l, a)| format!("({a:?}){}", self.registry.describe(l))).collect::<Vec<_>>().join(" + ")
    }
}

impl StateVector<Complex64> {
    pub fn lift(&self) -> StateVector<FirstOrder> {
        self.map_amplitudes(FirstOrder::constant)
    }
}

impl StateVector<FirstOrder> {
    /// Numeric state at a given ε.
    pub fn evaluate(&self, eps: f64) -> StateVector<Complex64> {
        self.map_amplitudes(|a| a.evaluate(eps))
    }

    pub fn order0(&self) -> StateVector<Complex64> {
        self.map_amplitudes(|a| a.order0)
    }

    pub fn order1(&self) -> StateVector<Complex64> {
        self.map_amplitudes(|a| a.order1)
    }
}

/// ⟨bra|ket⟩, conjugating the bra coefficients exactly once.
pub fn inner_product<A: Amplitude>(bra: &StateVector<A>, ket: &StateVector<A>) -> Result<A> {
    bra.check_registry(ket)?;
    let (small, large, bra_small) = if bra.amps.len() <= ket.amps.len() { (bra, ket, true) } else { (ket, bra, false) };
    let mut acc = A::zero();
    for (l, a) in &small.amps {
        if let Some(b) = large.amps.get(l) {
            acc = acc + if bra_small { a.conj() * *b } else { b.conj() * *a };
        }
    }
    Ok(acc)
}
