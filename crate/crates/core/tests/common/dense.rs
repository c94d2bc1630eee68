//! Dense-matrix simulator used as an oracle. Each stage becomes a full
//! matrix over (port, polarization, mirror levels) built directly from the
//! element definitions: HWP H → (H+V)/√2, V → s(H−V)/√2; PBS transmits H
//! and reflects V with sign r; a coupled mirror rotates |χ⟩ → η(|χ⟩+ε|χ⊥⟩),
//! |χ⊥⟩ → η(|χ⊥⟩−ε|χ⟩); absorbers swap the caught polarization into their
//! outcome port.

use num_complex::Complex64;

use weaktrace::engine::{Circuit, Stage};
use weaktrace::hilbert::Pol;
use weaktrace::optics::{CouplingMode, Element};

pub type Matrix = Vec<Vec<Complex64>>;

fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

fn pol_index(p: Pol) -> usize {
    match p {
        Pol::H => 0,
        Pol::V => 1,
    }
}

pub struct Dense {
    ports: Vec<String>,
    /// (name, ε) per mirror, exact coupling.
    mirrors: Vec<(String, f64)>,
    pub dim: usize,
}

impl Dense {
    /// Requires every mirror to be coupled in exact mode.
    pub fn new(circuit: &Circuit) -> Self {
        let ports: Vec<String> = circuit.paths().iter().chain(circuit.outcomes()).cloned().collect();
        let mirrors: Vec<(String, f64)> = circuit
            .mirrors()
            .iter()
            .map(|(m, k)| {
                assert_eq!(k.mode, CouplingMode::Exact, "dense oracle is exact only");
                (m.clone(), k.epsilon)
            })
            .collect();
        let dim = (ports.len() * 2) << mirrors.len();
        Dense { ports, mirrors, dim }
    }

    fn port(&self, name: &str) -> usize {
        self.ports.iter().position(|p| p == name).expect("known port")
    }

    fn mirror(&self, name: &str) -> usize {
        self.mirrors.iter().position(|(m, _)| m == name).expect("known mirror")
    }

    pub fn index(&self, port: &str, pol: Pol, env: usize) -> usize {
        ((self.port(port) * 2 + pol_index(pol)) << self.mirrors.len()) | env
    }

    fn split(&self, i: usize) -> (usize, usize, usize) {
        let m = self.mirrors.len();
        let env = i & ((1 << m) - 1);
        let mode = i >> m;
        (mode / 2, mode % 2, env)
    }

    /// Image of one basis vector under `e`, or `None` outside its domain.
    fn image(&self, e: &Element, i: usize) -> Option<Vec<(usize, Complex64)>> {
        let (p, pol, env) = self.split(i);
        let name = self.ports[p].as_str();
        let pols = [Pol::H, Pol::V];
        let at = |port: &str, pol: usize| self.index(port, pols[pol], env);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        match e {
            Element::Hwp { path, v_sign } if name == path => {
                let s = v_sign.value();
                Some(if pol == 0 {
                    vec![(at(path, 0), c(r)), (at(path, 1), c(r))]
                } else {
                    vec![(at(path, 0), c(s * r)), (at(path, 1), c(-s * r))]
                })
            }
            Element::Pbs { inputs, outputs, reflection } if inputs.iter().any(|x| x == name) => {
                let side = if name == inputs[0] { 0 } else { 1 };
                Some(if pol == 0 {
                    vec![(at(&outputs[side], 0), c(1.0))]
                } else {
                    vec![(at(&outputs[1 - side], 1), c(reflection.value()))]
                })
            }
            Element::PolFilterPbs { input, h_out, v_out, reflection } if name == input => {
                Some(if pol == 0 { vec![(at(h_out, 0), c(1.0))] } else { vec![(at(v_out, 1), c(reflection.value()))] })
            }
            Element::CoupledMirror { path, mirror } if name == path => {
                let k = self.mirror(mirror);
                let eps = self.mirrors[k].1;
                let eta = 1.0 / (1.0 + eps * eps).sqrt();
                let bit = 1 << (self.mirrors.len() - 1 - k);
                let flipped = ((p * 2 + pol) << self.mirrors.len()) | (env ^ bit);
                let sign = if env & bit == 0 { 1.0 } else { -1.0 };
                Some(vec![(i, c(eta)), (flipped, c(sign * eta * eps))])
            }
            Element::Shutter { path, outcome } => self.swap(i, name, pol, path, outcome, None),
            Element::Detector { path, filter, outcome } => self.swap(i, name, pol, path, outcome, *filter),
            _ => None,
        }
    }

    fn swap(
        &self,
        i: usize,
        name: &str,
        pol: usize,
        path: &str,
        outcome: &str,
        filter: Option<Pol>,
    ) -> Option<Vec<(usize, Complex64)>> {
        if filter.is_some_and(|f| pol_index(f) != pol) {
            return None;
        }
        let (_, _, env) = self.split(i);
        let pols = [Pol::H, Pol::V];
        if name == path {
            Some(vec![(self.index(outcome, pols[pol], env), c(1.0))])
        } else if name == outcome {
            Some(vec![(self.index(path, pols[pol], env), c(1.0))])
        } else {
            None
        }
    }

    /// Dense matrix of one stage, rows = outputs, columns = inputs.
    pub fn stage_matrix(&self, stage: &Stage) -> Matrix {
        let mut m = vec![vec![c(0.0); self.dim]; self.dim];
        #[allow(clippy::needless_range_loop)] // j is the column, not just an index
        for j in 0..self.dim {
            let image = stage.elements.iter().find_map(|e| self.image(e, j)).unwrap_or_else(|| vec![(j, c(1.0))]);
            for (i, a) in image {
                m[i][j] += a;
            }
        }
        m
    }

    pub fn apply(m: &Matrix, v: &[Complex64]) -> Vec<Complex64> {
        m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    pub fn basis(&self, port: &str, pol: Pol) -> Vec<Complex64> {
        let mut v = vec![c(0.0); self.dim];
        v[self.index(port, pol, 0)] = c(1.0);
        v
    }

    /// Unconditioned final state. Absorbed amplitude sits in outcome ports
    /// that no later stage touches, so click/null conditioning is a
    /// projection of this vector.
    pub fn evolve(&self, circuit: &Circuit, initial: &[Complex64]) -> Vec<Complex64> {
        circuit.stages().iter().fold(initial.to_vec(), |v, s| Self::apply(&self.stage_matrix(s), &v))
    }

    /// State right after the stage labeled `timepoint`.
    pub fn evolve_to(&self, circuit: &Circuit, initial: &[Complex64], timepoint: &str) -> Vec<Complex64> {
        let mut v = initial.to_vec();
        for s in circuit.stages() {
            v = Self::apply(&self.stage_matrix(s), &v);
            if s.timepoint.as_deref() == Some(timepoint) {
                return v;
            }
        }
        panic!("no time point {timepoint}");
    }

    /// Components on the given ports only.
    pub fn restrict(&self, v: &[Complex64], ports: &[&str]) -> Vec<Complex64> {
        let keep: Vec<usize> = ports.iter().map(|p| self.port(p)).collect();
        v.iter().enumerate().map(|(i, a)| if keep.contains(&self.split(i).0) { *a } else { c(0.0) }).collect()
    }

    pub fn norm_sqr(v: &[Complex64]) -> f64 {
        v.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Reduced state of one mirror, normalized, index 0 = |χ⟩.
    pub fn mirror_density(&self, v: &[Complex64], mirror: &str) -> [[Complex64; 2]; 2] {
        let bit = 1 << (self.mirrors.len() - 1 - self.mirror(mirror));
        let norm = Self::norm_sqr(v);
        let mut rho = [[c(0.0); 2]; 2];
        for (i, a) in v.iter().enumerate() {
            if i & bit != 0 {
                continue;
            }
            let pair = [*a, v[i | bit]];
            for x in 0..2 {
                for y in 0..2 {
                    rho[x][y] += pair[x] * pair[y].conj() / norm;
                }
            }
        }
        rho
    }

    /// Σ conj(bra)·ket.
    pub fn overlap(bra: &[Complex64], ket: &[Complex64]) -> Complex64 {
        bra.iter().zip(ket).map(|(a, b)| a.conj() * b).sum()
    }
}
