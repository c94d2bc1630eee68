use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Linear polarization basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Pol {
    H,
    V,
}

impl Pol {
    pub const BOTH: [Pol; 2] = [Pol::H, Pol::V];

    pub fn other(self) -> Pol {
        match self {
            Pol::H => Pol::V,
            Pol::V => Pol::H,
        }
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pol::H => "H",
            Pol::V => "V",
        })
    }
}

/// Level of a two-level mirror environment: the undisturbed state |χ⟩ or
/// the orthogonal component |χ⊥⟩ produced by a photon kick.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum MirrorLevel {
    Undisturbed,
    Orthogonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(pub(crate) u16);

impl PortId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MirrorId(pub(crate) u8);

impl MirrorId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

/// Environment levels of all registered mirrors, one bit per mirror
/// (set = |χ⊥⟩).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Env(pub(crate) u16);

impl Env {
    pub const UNDISTURBED: Env = Env(0);

    pub fn level(self, mirror: MirrorId) -> MirrorLevel {
        if self.0 & (1 << mirror.0) == 0 {
            MirrorLevel::Undisturbed
        } else {
            MirrorLevel::Orthogonal
        }
    }

    pub fn with(self, mirror: MirrorId, level: MirrorLevel) -> Env {
        match level {
            MirrorLevel::Undisturbed => Env(self.0 & !(1 << mirror.0)),
            MirrorLevel::Orthogonal => Env(self.0 | (1 << mirror.0)),
        }
    }

    pub fn bits(self) -> u16 {
        self.0
    }
}

/// A composite basis label |path, pol⟩ ⊗ |mirror levels⟩.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisLabel {
    pub path: PortId,
    pub pol: Pol,
    pub env: Env,
}

impl BasisLabel {
    pub fn new(path: PortId, pol: Pol) -> Self {
        BasisLabel { path, pol, env: Env::UNDISTURBED }
    }

    pub fn with_level(self, mirror: MirrorId, level: MirrorLevel) -> Self {
        BasisLabel { env: self.env.with(mirror, level), ..self }
    }
}

pub(crate) const MAX_MIRRORS: usize = 16;

/// Declared ports and registered mirrors of a circuit. States and operators
/// built from different registries cannot be combined.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Registry {
    ports: Vec<String>,
    mirrors: Vec<String>,
}

impl Registry {
    pub fn new<P, M>(ports: P, mirrors: M) -> Result<Self>
    where
        P: IntoIterator,
        P::Item: Into<String>,
        M: IntoIterator,
        M::Item: Into<String>,
    {
        let ports: Vec<String> = ports.into_iter().map(Into::into).collect();
        let mirrors: Vec<String> = mirrors.into_iter().map(Into::into).collect();
        if ports.len() > u16::MAX as usize {
            return Err(Error::Wiring("too many ports".into()));
        }
        if mirrors.len() > MAX_MIRRORS {
            return Err(Error::Wiring(format!("at most {MAX_MIRRORS} mirrors can be registered")));
        }
        for (i, p) in ports.iter().enumerate() {
            if ports[..i].contains(p) {
                return Err(Error::Wiring(format!("port `{p}` declared twice")));
            }
        }
        for (i, m) in mirrors.iter().enumerate() {
            if mirrors[..i].contains(m) {
                return Err(Error::Wiring(format!("mirror `{m}` registered twice")));
            }
        }
        Ok(Registry { ports, mirrors })
    }

    pub fn ports(&self) -> &[String] {
        &self.ports
    }

    pub fn mirrors(&self) -> &[String] {
        &self.mirrors
    }

    pub fn port(&self, name: &str) -> Result<PortId> {
        self.ports
            .iter()
            .position(|p| p == name)
            .map(|i| PortId(i as u16))
            .ok_or_else(|| Error::UnknownPort(name.to_string()))
    }

    pub fn mirror(&self, name: &str) -> Result<MirrorId> {
        self.mirrors
            .iter()
            .position(|m| m == name)
            .map(|i| MirrorId(i as u8))
            .ok_or_else(|| Error::UnknownMirror(name.to_string()))
    }

    pub fn port_name(&self, id: PortId) -> &str {
        &self.ports[id.index()]
    }

    pub fn mirror_name(&self, id: MirrorId) -> &str {
        &self.mirrors[id.index()]
    }

    pub fn mirror_ids(&self) -> impl Iterator<Item = MirrorId> {
        (0..self.mirrors.len()).map(|i| MirrorId(i as u8))
    }

    /// Label by names; mirrors not listed are undisturbed.
    pub fn label(&self, port: &str, pol: Pol, kicked: &[&str]) -> Result<BasisLabel> {
        let mut label = BasisLabel::new(self.port(port)?, pol);
        for m in kicked {
            label = label.with_level(self.mirror(m)?, MirrorLevel::Orthogonal);
        }
        Ok(label)
    }

    /// Every basis label of the composite space, in canonical order.
    pub fn basis(&self) -> Vec<BasisLabel> {
        let mut out = Vec::with_capacity((self.ports.len() * 2) << self.mirrors.len());
        for p in 0..self.ports.len() {
            for pol in Pol::BOTH {
                for env in 0..(1u32 << self.mirrors.len()) {
                    out.push(BasisLabel { path: PortId(p as u16), pol, env: Env(env as u16) });
                }
            }
        }
        out
    }

    pub fn describe(&self, label: &BasisLabel) -> String {
        let mut s = format!("|{},{}⟩", self.port_name(label.path), label.pol);
        for m in self.mirror_ids() {
            let name = self.mirror_name(m);
            match label.env.level(m) {
                MirrorLevel::Undisturbed => s.push_str(&format!("|χ[{name}]⟩")),
                MirrorLevel::Orthogonal => s.push_str(&format!("|χ⊥[{name}]⟩")),
            }
        }
        s
    }
}
