use std::sync::Arc;

use num_complex::Complex64;

use super::amplitude::Amplitude;
use super::label::{BasisLabel, MirrorId, MirrorLevel, Pol, PortId, Registry};
use super::state::StateVector;
use crate::error::{Error, Result};
use crate::optics::{apply_elements, BoundElement};

/// Predicate over basis labels, written with port and mirror names.
#[derive(Debug, Clone, PartialEq)]
pub enum Predicate {
    Any,
    Path(Vec<String>),
    Pol(Pol),
    Mirror(String, MirrorLevel),
    Not(Box<Predicate>),
    And(Vec<Predicate>),
    Or(Vec<Predicate>),
}

impl Predicate {
    pub fn path(port: &str) -> Self {
        Predicate::Path(vec![port.to_string()])
    }

    pub fn paths<I: IntoIterator<Item = S>, S: Into<String>>(ports: I) -> Self {
        Predicate::Path(ports.into_iter().map(Into::into).collect())
    }

    pub fn resolve(&self, registry: &Registry) -> Result<ResolvedPredicate> {
        Ok(match self {
            Predicate::Any => ResolvedPredicate::Any,
            Predicate::Path(ports) => {
                ResolvedPredicate::Path(ports.iter().map(|p| registry.port(p)).collect::<Result<Vec<_>>>()?)
            }
            Predicate::Pol(p) => ResolvedPredicate::Pol(*p),
            Predicate::Mirror(m, level) => ResolvedPredicate::Mirror(registry.mirror(m)?, *level),
            Predicate::Not(p) => ResolvedPredicate::Not(Box::new(p.resolve(registry)?)),
            Predicate::And(ps) => {
                ResolvedPredicate::And(ps.iter().map(|p| p.resolve(registry)).collect::<Result<Vec<_>>>()?)
            }
            Predicate::Or(ps) => {
                ResolvedPredicate::Or(ps.iter().map(|p| p.resolve(registry)).collect::<Result<Vec<_>>>()?)
            }
        })
    }
}

/// A predicate bound to one registry's port and mirror ids.
#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedPredicate {
    Any,
    Path(Vec<PortId>),
    Pol(Pol),
    Mirror(MirrorId, MirrorLevel),
    Not(Box<ResolvedPredicate>),
    And(Vec<ResolvedPredicate>),
    Or(Vec<ResolvedPredicate>),
}

impl ResolvedPredicate {
    pub fn matches(&self, label: &BasisLabel) -> bool {
        match self {
            ResolvedPredicate::Any => true,
            ResolvedPredicate::Path(ports) => ports.contains(&label.path),
            ResolvedPredicate::Pol(p) => label.pol == *p,
            ResolvedPredicate::Mirror(m, level) => label.env.level(*m) == *level,
            ResolvedPredicate::Not(p) => !p.matches(label),
            ResolvedPredicate::And(ps) => ps.iter().all(|p| p.matches(label)),
            ResolvedPredicate::Or(ps) => ps.iter().any(|p| p.matches(label)),
        }
    }
}

/// Linear operator on the composite space.
#[derive(Debug, Clone)]
pub enum Operator {
    /// Identity on matching labels, zero elsewhere.
    Projector { registry: Arc<Registry>, predicate: ResolvedPredicate },
    /// Σ cᵢ Oᵢ.
    Linear(Vec<(Complex64, Operator)>),
    /// O₁·O₂·…·Oₙ; the last factor acts first.
    Product(Vec<Operator>),
    /// The unitary of one circuit stage (elements acting in parallel).
    Unitary { registry: Arc<Registry>, elements: Vec<BoundElement> },
}

/// Projector onto the labels satisfying `predicate`.
pub fn projector(registry: &Arc<Registry>, predicate: Predicate) -> Result<Operator> {
    Ok(Operator::Projector { registry: registry.clone(), predicate: predicate.resolve(registry)? })
}

impl Operator {
    pub fn identity(registry: &Arc<Registry>) -> Operator {
        Operator::Projector { registry: registry.clone(), predicate: ResolvedPredicate::Any }
    }

    pub fn as_projector(&self) -> Option<&ResolvedPredicate> {
        match self {
            Operator::Projector { predicate, .. } => Some(predicate),
            _ => None,
        }
    }

    pub fn apply<A: Amplitude>(&self, state: &StateVector<A>) -> Result<StateVector<A>> {
        match self {
            Operator::Projector { registry, predicate } => {
                state.check_registry_of(registry)?;
                Ok(state.filter(|l| predicate.matches(l)))
            }
            Operator::Linear(terms) => {
                let mut out = StateVector::zero(state.registry().clone());
                for (c, op) in terms {
                    out = out.plus(&op.apply(state)?.scale(A::from_complex(*c)))?;
                }
                Ok(out)
            }
            Operator::Product(factors) => {
                let mut out = state.clone();
                for op in factors.iter().rev() {
                    out = op.apply(&out)?;
                }
                Ok(out)
            }
            Operator::Unitary { registry, elements } => {
                state.check_registry_of(registry)?;
                apply_elements(elements, state, false)
            }
        }
    }

    /// Matrix elements ⟨row|O|col⟩ over an explicit list of basis labels.
    pub fn matrix_on(&self, registry: &Arc<Registry>, support: &[BasisLabel]) -> Result<Vec<Vec<Complex64>>> {
        let mut m = vec![vec![Complex64::new(0.0, 0.0); support.len()]; support.len()];
        for (j, col) in support.iter().enumerate() {
            let mut e = StateVector::<Complex64>::zero(registry.clone());
            e.add(*col, Complex64::new(1.0, 0.0));
            let image = self.apply(&e)?;
            for (i, row) in support.iter().enumerate() {
                m[i][j] = image.get(row);
            }
        }
        Ok(m)
    }
}

pub(crate) fn require_projector(op: &Operator) -> Result<&ResolvedPredicate> {
    op.as_projector().ok_or_else(|| Error::Incomplete("partition members must be projectors".into()))
}
