use std::fmt::Debug;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::optics::{CouplingMode, MirrorCoupling};

/// Scalar field used for state amplitudes.
///
/// Two implementations exist: plain [`Complex64`] for numeric runs, and
/// [`FirstOrder`], which carries amplitudes as `a + b·ε` in a formal
/// coupling ε and drops every ε² term.
pub trait Amplitude:
    Copy
    + Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn zero() -> Self;
    fn from_complex(c: Complex64) -> Self;
    fn conj(self) -> Self;
    fn is_zero(&self) -> bool;
    /// The ε → 0 value.
    fn leading(&self) -> Complex64;
    fn checked_div(self, rhs: Self) -> Option<Self>;
    /// Square root of a real non-negative quantity such as a squared norm.
    /// `None` when the leading value is not strictly positive.
    fn sqrt_positive(self) -> Option<Self>;
    /// `(diagonal, off-diagonal)` entries of the mirror rotation
    /// |χ⟩ → d|χ⟩ + o|χ⊥⟩, |χ⊥⟩ → d|χ⊥⟩ − o|χ⟩. `relative` is the coupling
    /// strength in units of the formal ε (symbolic amplitudes only).
    fn mirror_kick(coupling: &MirrorCoupling, relative: f64) -> (Self, Self);
    /// Largest modulus over all orders.
    fn magnitude(&self) -> f64;

    fn one() -> Self {
        Self::from_complex(Complex64::new(1.0, 0.0))
    }

    fn real(x: f64) -> Self {
        Self::from_complex(Complex64::new(x, 0.0))
    }

    fn scale(self, k: f64) -> Self {
        self * Self::real(k)
    }

    fn norm_sqr(self) -> Self {
        self.conj() * self
    }
}

impl Amplitude for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }

    fn from_complex(c: Complex64) -> Self {
        c
    }

    fn conj(self) -> Self {
        Complex64::conj(&self)
    }

    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }

    fn leading(&self) -> Complex64 {
        *self
    }

    fn checked_div(self, rhs: Self) -> Option<Self> {
        if rhs.is_zero() {
            None
        } else {
            Some(self / rhs)
        }
    }

    fn sqrt_positive(self) -> Option<Self> {
        if self.re > 0.0 {
            Some(Complex64::new(self.re.sqrt(), 0.0))
        } else {
            None
        }
    }

    fn mirror_kick(coupling: &MirrorCoupling, _relative: f64) -> (Self, Self) {
        let eps = coupling.epsilon;
        match coupling.mode {
            CouplingMode::Exact => {
                let eta = coupling.eta();
                (Complex64::new(eta, 0.0), Complex64::new(eta * eps, 0.0))
            }
            CouplingMode::FirstOrder => (Complex64::new(1.0, 0.0), Complex64::new(eps, 0.0)),
        }
    }

    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// An amplitude `order0 + order1·ε`, truncated after the first order.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FirstOrder {
    pub order0: Complex64,
    pub order1: Complex64,
}

impl FirstOrder {
    pub fn new(order0: Complex64, order1: Complex64) -> Self {
        FirstOrder { order0, order1 }
    }

    pub fn constant(c: Complex64) -> Self {
        FirstOrder { order0: c, order1: Complex64::new(0.0, 0.0) }
    }

    /// The formal coupling ε itself.
    pub fn epsilon() -> Self {
        FirstOrder { order0: Complex64::new(0.0, 0.0), order1: Complex64::new(1.0, 0.0) }
    }

    pub fn evaluate(&self, eps: f64) -> Complex64 {
        self.order0 + self.order1 * eps
    }
}

impl Add for FirstOrder {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        FirstOrder { order0: self.order0 + rhs.order0, order1: self.order1 + rhs.order1 }
    }
}

impl Sub for FirstOrder {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        FirstOrder { order0: self.order0 - rhs.order0, order1: self.order1 - rhs.order1 }
    }
}

impl Mul for FirstOrder {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        FirstOrder { order0: self.order0 * rhs.order0, order1: self.order0 * rhs.order1 + self.order1 * rhs.order0 }
    }
}

impl Neg for FirstOrder {
    type Output = Self;
    fn neg(self) -> Self {
        FirstOrder { order0: -self.order0, order1: -self.order1 }
    }
}

impl Amplitude for FirstOrder {
    fn zero() -> Self {
        FirstOrder::default()
    }

    fn from_complex(c: Complex64) -> Self {
        FirstOrder::constant(c)
    }

    fn conj(self) -> Self {
        // ε is real
        FirstOrder { order0: self.order0.conj(), order1: self.order1.conj() }
    }

    fn is_zero(&self) -> bool {
        self.order0.is_zero() && self.order1.is_zero()
    }

    fn leading(&self) -> Complex64 {
        self.order0
    }

    fn checked_div(self, rhs: Self) -> Option<Self> {
        if rhs.order0.is_zero() {
            return None;
        }
        let q0 = self.order0 / rhs.order0;
        Some(FirstOrder { order0: q0, order1: (self.order1 - q0 * rhs.order1) / rhs.order0 })
    }

    fn sqrt_positive(self) -> Option<Self> {
        if self.order0.re <= 0.0 {
            return None;
        }
        let s = self.order0.re.sqrt();
        Some(FirstOrder { order0: Complex64::new(s, 0.0), order1: Complex64::new(self.order1.re / (2.0 * s), 0.0) })
    }

    fn mirror_kick(_coupling: &MirrorCoupling, relative: f64) -> (Self, Self) {
        // η = 1 + O(ε²)
        (FirstOrder::one(), FirstOrder::epsilon().scale(relative))
    }

    fn magnitude(&self) -> f64 {
        self.order0.norm().max(self.order1.norm())
    }
}
