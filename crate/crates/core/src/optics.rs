//! Optical elements and their action on labeled states.
//!
//! Sign convention (identifier [`CALIBRATION_ID`]): every amplitude is
//! real. A PBS transmits H and reflects V with reflection sign +1. A
//! half-wave plate is the +45° rotation H → (H+V)/√2, V → (V−H)/√2, i.e.
//! V → σ(H−V)/√2 with σ = −1. This is the convention under which the
//! nested-interferometer snapshots come out term for term; it is checked by
//! the calibration tests in `scenarios`.

use std::collections::{BTreeMap, BTreeSet};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Amplitude, BasisLabel, MirrorId, MirrorLevel, Pol, PortId, Registry, StateVector};

pub const CALIBRATION_ID: &str = "real-pbs+1/hwp-rot45";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CouplingMode {
    /// Unitary rotation with η = (1+ε²)^(-1/2).
    Exact,
    /// |χ⟩ → |χ⟩ + ε|χ⊥⟩ with ε² terms dropped.
    FirstOrder,
}

impl fmt::Display for CouplingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CouplingMode::Exact => "exact",
            CouplingMode::FirstOrder => "first-order",
        })
    }
}

impl FromStr for CouplingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(CouplingMode::Exact),
            "first-order" => Ok(CouplingMode::FirstOrder),
            other => Err(Error::Config(format!("unknown coupling mode `{other}`"))),
        }
    }
}

/// Weak photon–mirror coupling |χ⟩ → η(|χ⟩ + ε|χ⊥⟩). The phase of |χ⊥⟩ is
/// chosen so that ε ≥ 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MirrorCoupling {
    pub epsilon: f64,
    pub mode: CouplingMode,
}

impl MirrorCoupling {
    pub fn new(epsilon: f64, mode: CouplingMode) -> Result<Self> {
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::Config(format!("coupling strength must be finite and non-negative, got {epsilon}")));
        }
        Ok(MirrorCoupling { epsilon, mode })
    }

    pub fn exact(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, CouplingMode::Exact)
    }

    pub fn first_order(epsilon: f64) -> Result<Self> {
        Self::new(epsilon, CouplingMode::FirstOrder)
    }

    pub fn eta(&self) -> f64 {
        match self.mode {
            CouplingMode::Exact => 1.0 / (1.0 + self.epsilon * self.epsilon).sqrt(),
            CouplingMode::FirstOrder => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// Sign choices for the real-valued element conventions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Convention {
    pub pbs_reflection: Sign,
    pub hwp_v_sign: Sign,
}

impl Convention {
    pub const CALIBRATED: Convention = Convention { pbs_reflection: Sign::Plus, hwp_v_sign: Sign::Minus };
}

/// An optical element, named by port and mirror identifiers.
#[derive(Debug, Clone, PartialEq)]
pub enum Element {
    /// Two-input polarizing beam splitter: H from `inputs[0]` and V from
    /// `inputs[1]` leave through `outputs[0]`; the rest through `outputs[1]`.
    Pbs {
        inputs: [String; 2],
        outputs: [String; 2],
        reflection: Sign,
    },
    /// Single-input PBS sorting polarizations onto two paths.
    PolFilterPbs {
        input: String,
        h_out: String,
        v_out: String,
        reflection: Sign,
    },
    Hwp {
        path: String,
        v_sign: Sign,
    },
    IdealMirror {
        path: String,
    },
    CoupledMirror {
        path: String,
        mirror: String,
    },
    /// Absorbs everything on its path into a named outcome.
    Shutter {
        path: String,
        outcome: String,
    },
    /// Absorbs the filtered polarization (or both) into a named outcome.
    Detector {
        path: String,
        filter: Option<Pol>,
        outcome: String,
    },
}

fn distinct(names: &[&str]) -> Result<()> {
    let set: BTreeSet<&str> = names.iter().copied().collect();
    if set.len() != names.len() {
        return Err(Error::Wiring(format!("port collision among {}", names.join(", "))));
    }
    Ok(())
}

impl Element {
    pub fn pbs(in1: &str, in2: &str, out1: &str, out2: &str, convention: Convention) -> Result<Self> {
        distinct(&[in1, in2])?;
        distinct(&[out1, out2])?;
        Ok(Element::Pbs {
            inputs: [in1.into(), in2.into()],
            outputs: [out1.into(), out2.into()],
            reflection: convention.pbs_reflection,
        })
    }

    pub fn pol_filter(input: &str, h_out: &str, v_out: &str, convention: Convention) -> Result<Self> {
        distinct(&[h_out, v_out])?;
        Ok(Element::PolFilterPbs {
            input: input.into(),
            h_out: h_out.into(),
            v_out: v_out.into(),
            reflection: convention.pbs_reflection,
        })
    }

    pub fn hwp(path: &str, convention: Convention) -> Self {
        Element::Hwp { path: path.into(), v_sign: convention.hwp_v_sign }
    }

    pub fn mirror(path: &str, mirror: Option<&str>) -> Self {
        match mirror {
            Some(m) => Element::CoupledMirror { path: path.into(), mirror: m.into() },
            None => Element::IdealMirror { path: path.into() },
        }
    }

    pub fn shutter(path: &str, outcome: &str) -> Self {
        Element::Shutter { path: path.into(), outcome: outcome.into() }
    }

    pub fn detector(path: &str, filter: Option<Pol>, outcome: &str) -> Self {
        Element::Detector { path: path.into(), filter, outcome: outcome.into() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Element::Pbs { .. } => "pbs",
            Element::PolFilterPbs { .. } => "split",
            Element::Hwp { .. } => "hwp",
            Element::IdealMirror { .. } | Element::CoupledMirror { .. } => "reflect",
            Element::Shutter { .. } => "shutter",
            Element::Detector { .. } => "detect",
        }
    }

    /// Path ports the element reads or writes (outcome ports excluded).
    pub fn paths(&self) -> Vec<&str> {
        match self {
            Element::Pbs { inputs, outputs, .. } => {
                let mut v: Vec<&str> = inputs.iter().chain(outputs.iter()).map(String::as_str).collect();
                v.sort_unstable();
                v.dedup();
                v
            }
            Element::PolFilterPbs { input, h_out, v_out, .. } => {
                let mut v = vec![input.as_str(), h_out.as_str(), v_out.as_str()];
                v.sort_unstable();
                v.dedup();
                v
            }
            Element::Hwp { path, .. }
            | Element::IdealMirror { path }
            | Element::CoupledMirror { path, .. }
            | Element::Shutter { path, .. }
            | Element::Detector { path, .. } => vec![path.as_str()],
        }
    }

    pub fn outcome(&self) -> Option<&str> {
        match self {
            Element::Shutter { outcome, .. } | Element::Detector { outcome, .. } => Some(outcome),
            _ => None,
        }
    }

    pub fn is_absorber(&self) -> bool {
        self.outcome().is_some()
    }

    /// Resolves names against a registry. `couplings` maps mirror names to
    /// their coupling and relative strength.
    pub fn bind(
        &self,
        registry: &Registry,
        couplings: &BTreeMap<String, (MirrorCoupling, f64)>,
    ) -> Result<BoundElement> {
        let p = |name: &str| registry.port(name);
        let kind = match self {
            Element::Pbs { inputs, outputs, reflection } => BoundKind::Pbs {
                inputs: [p(&inputs[0])?, p(&inputs[1])?],
                outputs: [p(&outputs[0])?, p(&outputs[1])?],
                r: reflection.value(),
            },
            Element::PolFilterPbs { input, h_out, v_out, reflection } => {
                BoundKind::Filter { input: p(input)?, h_out: p(h_out)?, v_out: p(v_out)?, r: reflection.value() }
            }
            Element::Hwp { path, v_sign } => BoundKind::Hwp { path: p(path)?, s: v_sign.value() },
            Element::IdealMirror { path } => BoundKind::Identity { path: p(path)? },
            Element::CoupledMirror { path, mirror } => {
                let (coupling, relative) =
                    *couplings.get(mirror).ok_or_else(|| Error::UnknownMirror(mirror.clone()))?;
                BoundKind::Coupled { path: p(path)?, mirror: registry.mirror(mirror)?, coupling, relative }
            }
            Element::Shutter { path, outcome } => {
                BoundKind::Absorber { path: p(path)?, port: p(outcome)?, filter: None }
            }
            Element::Detector { path, filter, outcome } => {
                BoundKind::Absorber { path: p(path)?, port: p(outcome)?, filter: *filter }
            }
        };
        Ok(BoundElement { kind })
    }
}

/// An element resolved to port and mirror ids, ready to act on states.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundElement {
    kind: BoundKind,
}

#[derive(Debug, Clone, PartialEq)]
enum BoundKind {
    Pbs {
        inputs: [PortId; 2],
        outputs: [PortId; 2],
        r: f64,
    },
    Filter {
        input: PortId,
        h_out: PortId,
        v_out: PortId,
        r: f64,
    },
    Hwp {
        path: PortId,
        s: f64,
    },
    Identity {
        path: PortId,
    },
    Coupled {
        path: PortId,
        mirror: MirrorId,
        coupling: MirrorCoupling,
        relative: f64,
    },
    /// Swaps the filtered polarization(s) between `path` and the outcome
    /// port. The outcome port is empty before the element acts, so this
    /// only ever moves amplitude into it.
    Absorber {
        path: PortId,
        port: PortId,
        filter: Option<Pol>,
    },
}

impl BoundElement {
    pub fn absorber_port(&self) -> Option<PortId> {
        match self.kind {
            BoundKind::Absorber { port, .. } => Some(port),
            _ => None,
        }
    }

    /// Ports consumed by the forward map (or by the adjoint map).
    fn domain(&self, adjoint: bool) -> Vec<PortId> {
        match &self.kind {
            BoundKind::Pbs { inputs, outputs, .. } => {
                if adjoint {
                    outputs.to_vec()
                } else {
                    inputs.to_vec()
                }
            }
            BoundKind::Filter { input, h_out, v_out, .. } => {
                if adjoint {
                    vec![*h_out, *v_out]
                } else {
                    vec![*input]
                }
            }
            BoundKind::Hwp { path, .. } | BoundKind::Identity { path } | BoundKind::Coupled { path, .. } => vec![*path],
            BoundKind::Absorber { path, port, .. } => vec![*path, *port],
        }
    }

    fn act<A: Amplitude>(&self, label: BasisLabel, amp: A, adjoint: bool, out: &mut Vec<(BasisLabel, A)>) {
        let at = |path: PortId, pol: Pol| BasisLabel { path, pol, env: label.env };
        match &self.kind {
            BoundKind::Pbs { inputs, outputs, r } => {
                let (from, to) = if adjoint { (outputs, inputs) } else { (inputs, outputs) };
                // forward: (in0,H)→(out0,H) (in0,V)→(out1,V)·r (in1,H)→(out1,H) (in1,V)→(out0,V)·r
                // and the inverse permutation for the adjoint; r = ±1 is real
                let side = if label.path == from[0] { 0 } else { 1 };
                match label.pol {
                    Pol::H => out.push((at(to[side], Pol::H), amp)),
                    Pol::V => out.push((at(to[1 - side], Pol::V), amp.scale(*r))),
                }
            }
            BoundKind::Filter { input, h_out, v_out, r } => {
                if adjoint {
                    // components outside the range go back to the unmodeled vacuum input
                    match (label.path == *h_out, label.pol) {
                        (true, Pol::H) => out.push((at(*input, Pol::H), amp)),
                        (false, Pol::V) if label.path == *v_out => out.push((at(*input, Pol::V), amp.scale(*r))),
                        _ => {}
                    }
                } else {
                    match label.pol {
                        Pol::H => out.push((at(*h_out, Pol::H), amp)),
                        Pol::V => out.push((at(*v_out, Pol::V), amp.scale(*r))),
                    }
                }
            }
            BoundKind::Hwp { path, s } => {
                // M[out][in]: H→(H+V)/√2, V→s(H−V)/√2
                let m = [[FRAC_1_SQRT_2, s * FRAC_1_SQRT_2], [FRAC_1_SQRT_2, -s * FRAC_1_SQRT_2]];
                let i = (label.pol == Pol::V) as usize;
                for (o, pol) in Pol::BOTH.into_iter().enumerate() {
                    let k = if adjoint { m[i][o] } else { m[o][i] };
                    out.push((at(*path, pol), amp.scale(k)));
                }
            }
            BoundKind::Identity { .. } => out.push((label, amp)),
            BoundKind::Coupled { mirror, coupling, relative, .. } => {
                let (d, o) = A::mirror_kick(coupling, *relative);
                let (d, o) = if adjoint { (d.conj(), -o.conj()) } else { (d, o) };
                let rest = label.with_level(*mirror, MirrorLevel::Undisturbed);
                let kicked = label.with_level(*mirror, MirrorLevel::Orthogonal);
                match label.env.level(*mirror) {
                    MirrorLevel::Undisturbed => {
                        out.push((rest, amp * d));
                        out.push((kicked, amp * o));
                    }
                    MirrorLevel::Orthogonal => {
                        out.push((kicked, amp * d));
                        out.push((rest, -(amp * o)));
                    }
                }
            }
            BoundKind::Absorber { path, port, filter } => {
                let caught = filter.is_none_or(|f| f == label.pol);
                if !caught {
                    out.push((label, amp));
                } else if label.path == *path {
                    out.push((at(*port, label.pol), amp));
                } else {
                    out.push((at(*path, label.pol), amp));
                }
            }
        }
    }
}

/// Applies elements in parallel (or their adjoints, in which case the
/// result is U†|state⟩). Amplitude on a port that no element consumes may
/// not land on a port some element writes to.
pub fn apply_elements<A: Amplitude>(
    elements: &[BoundElement],
    state: &StateVector<A>,
    adjoint: bool,
) -> Result<StateVector<A>> {
    let mut owner: BTreeMap<PortId, usize> = BTreeMap::new();
    let mut written: BTreeSet<PortId> = BTreeSet::new();
    for (i, e) in elements.iter().enumerate() {
        for port in e.domain(adjoint) {
            if owner.insert(port, i).is_some() {
                return Err(Error::Wiring("two elements of one stage read the same port".into()));
            }
        }
        for port in e.domain(!adjoint) {
            written.insert(port);
        }
    }
    let mut out = StateVector::zero(state.registry().clone());
    let mut buf = Vec::with_capacity(4);
    for (label, amp) in state.iter() {
        match owner.get(&label.path) {
            Some(&i) => {
                buf.clear();
                elements[i].act(*label, *amp, adjoint, &mut buf);
                for (l, a) in buf.drain(..) {
                    out.add(l, a);
                }
            }
            None => {
                if written.contains(&label.path) {
                    return Err(Error::Wiring(format!(
                        "amplitude idling on `{}` collides with an element output",
                        state.registry().port_name(label.path)
                    )));
                }
                out.add(*label, *amp);
            }
        }
    }
    Ok(out)
}
