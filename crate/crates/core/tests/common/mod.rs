//! Shared support for the integration tests: a generator of random
//! evolvable circuits and an independent dense-matrix simulator.

#![allow(dead_code)]

pub mod dense;

use std::collections::BTreeSet;

use proptest::prelude::*;

use weaktrace::engine::{Circuit, Stage};
use weaktrace::hilbert::Pol;
use weaktrace::optics::{CouplingMode, Element, MirrorCoupling, Sign};

pub const PORTS: [&str; 8] = ["SRC", "A", "B", "C", "E'", "F_1", "g.2", "h-3"];
pub const OUTCOMES: [&str; 4] = ["D0", "D_A1", "DX'", "det.2"];
pub const MIRRORS: [&str; 3] = ["MR_B1", "MR_B3", "m'"];

/// Raw choices from which a circuit is assembled deterministically.
#[derive(Debug, Clone)]
pub struct Recipe {
    pub ports: usize,
    pub outcomes: usize,
    /// (strength selector, raw strength, exact?) per mirror.
    pub mirrors: Vec<(u8, f64, bool)>,
    pub source: u8,
    /// (element kind, port selectors, flags) per element.
    pub ops: Vec<(u8, [u8; 4], u8)>,
}

pub fn recipe() -> impl Strategy<Value = Recipe> {
    (
        1usize..=PORTS.len(),
        0usize..=OUTCOMES.len(),
        prop::collection::vec((any::<u8>(), 0.0f64..1.0, any::<bool>()), 0..=MIRRORS.len()),
        any::<u8>(),
        prop::collection::vec((any::<u8>(), any::<[u8; 4]>(), any::<u8>()), 0..32),
    )
        .prop_map(|(ports, outcomes, mirrors, source, ops)| Recipe { ports, outcomes, mirrors, source, ops })
}

/// Stages under construction, tracking which ports may carry amplitude so
/// that no element writes onto an idling photon.
struct Assembly<'a> {
    stages: Vec<Stage>,
    current: Vec<Element>,
    touched: BTreeSet<&'a str>,
    occupied: BTreeSet<&'a str>,
    next: BTreeSet<&'a str>,
}

impl<'a> Assembly<'a> {
    fn close(&mut self, timepoint: Option<String>) {
        if self.current.is_empty() && timepoint.is_none() {
            return;
        }
        self.stages.push(Stage { elements: std::mem::take(&mut self.current), timepoint });
        self.touched.clear();
        self.occupied = self.next.clone();
    }

    fn fits(&self, inputs: &[&'a str], outputs: &[&'a str]) -> bool {
        let all: BTreeSet<&str> = inputs.iter().chain(outputs).copied().collect();
        all.is_disjoint(&self.touched) && outputs.iter().all(|o| inputs.contains(o) || !self.occupied.contains(o))
    }

    /// Adds the element, opening a fresh stage if the current one is
    /// already using its ports. Returns false if it cannot be placed.
    fn add(&mut self, element: Element, inputs: &[&'a str], outputs: &[&'a str], timepoint: Option<String>) -> bool {
        if !self.fits(inputs, outputs) {
            self.close(timepoint);
            if !self.fits(inputs, outputs) {
                return false;
            }
        }
        for p in inputs.iter().chain(outputs) {
            self.touched.insert(p);
        }
        for p in inputs {
            self.next.remove(p);
        }
        for p in outputs {
            self.next.insert(p);
        }
        self.current.push(element);
        true
    }
}

fn sign(flags: u8, bit: u8) -> Sign {
    if flags & bit != 0 {
        Sign::Plus
    } else {
        Sign::Minus
    }
}

impl Recipe {
    pub fn source(&self) -> (&'static str, Pol) {
        let pol = if self.source & 0x80 != 0 { Pol::V } else { Pol::H };
        (PORTS[self.source as usize % self.ports], pol)
    }

    pub fn couplings(&self) -> Vec<(String, MirrorCoupling)> {
        self.mirrors
            .iter()
            .enumerate()
            .map(|(i, &(sel, raw, exact))| {
                let eps = match sel % 4 {
                    0 => raw,
                    1 => 0.0,
                    2 => 1e-3,
                    _ => raw * 1e-6,
                };
                let mode = if exact { CouplingMode::Exact } else { CouplingMode::FirstOrder };
                (MIRRORS[i].to_string(), MirrorCoupling::new(eps, mode).unwrap())
            })
            .collect()
    }

    pub fn circuit(&self) -> Circuit {
        let ports = &PORTS[..self.ports];
        let mut free: Vec<&str> = OUTCOMES[..self.outcomes].to_vec();
        let n_mirrors = self.mirrors.len();
        let (src, _) = self.source();
        let mut asm = Assembly {
            stages: Vec::new(),
            current: Vec::new(),
            touched: BTreeSet::new(),
            occupied: [src].into(),
            next: [src].into(),
        };
        for &(kind, sel, flags) in &self.ops {
            let port = |k: usize| ports[sel[k] as usize % ports.len()];
            let timepoint = (flags & 0x08 != 0).then(|| {
                let prime = if flags & 0x40 != 0 { "'" } else { "" };
                format!("t{}{prime}", asm.stages.len())
            });
            let timepoint = if flags & 0x01 != 0 {
                asm.close(timepoint);
                None
            } else {
                timepoint
            };
            let (a, b, c, d) = (port(0), port(1), port(2), port(3));
            match kind % 8 {
                0 => {
                    asm.add(Element::Hwp { path: a.into(), v_sign: sign(flags, 0x02) }, &[a], &[a], timepoint);
                }
                1 if a != b && c != d => {
                    let e = Element::Pbs {
                        inputs: [a.into(), b.into()],
                        outputs: [c.into(), d.into()],
                        reflection: sign(flags, 0x04),
                    };
                    asm.add(e, &[a, b], &[c, d], timepoint);
                }
                2 if b != c => {
                    let e = Element::PolFilterPbs {
                        input: a.into(),
                        h_out: b.into(),
                        v_out: c.into(),
                        reflection: sign(flags, 0x04),
                    };
                    asm.add(e, &[a], &[b, c], timepoint);
                }
                3 => {
                    asm.add(Element::mirror(a, None), &[a], &[a], timepoint);
                }
                4 if n_mirrors > 0 => {
                    let m = MIRRORS[sel[1] as usize % n_mirrors];
                    asm.add(Element::mirror(a, Some(m)), &[a], &[a], timepoint);
                }
                5 | 6 if !free.is_empty() => {
                    let o = free[sel[1] as usize % free.len()];
                    let e = if kind % 8 == 5 {
                        Element::shutter(a, o)
                    } else {
                        let filter = match (flags >> 4) & 3 {
                            1 => Some(Pol::H),
                            2 => Some(Pol::V),
                            _ => None,
                        };
                        Element::detector(a, filter, o)
                    };
                    if asm.add(e, &[a], &[a], timepoint) {
                        free.retain(|x| *x != o);
                    }
                }
                7 => {
                    asm.close(None);
                    asm.close(timepoint);
                }
                _ => {}
            }
        }
        asm.close(None);
        Circuit::new(
            ports.iter().map(|p| p.to_string()).collect(),
            OUTCOMES[..self.outcomes].iter().map(|o| o.to_string()).collect(),
            self.couplings(),
            asm.stages,
        )
        .expect("generated circuits are valid")
    }
}
