use std::fmt::Write;

use crate::engine::Circuit;
use crate::optics::{Convention, Element, Sign};

use super::{CircuitDocument, FORMAT_VERSION};

fn sign(s: Sign) -> &'static str {
    match s {
        Sign::Plus => "+",
        Sign::Minus => "-",
    }
}

fn element_line(e: &Element) -> String {
    let cal = Convention::CALIBRATED;
    match e {
        Element::Hwp { path, v_sign } if *v_sign == cal.hwp_v_sign => format!("hwp {path}"),
        Element::Hwp { path, v_sign } => format!("hwp {path} sign={}", sign(*v_sign)),
        Element::Pbs { inputs, outputs, reflection } => {
            let mut line = format!("pbs {} {} -> {} {}", inputs[0], inputs[1], outputs[0], outputs[1]);
            if *reflection != cal.pbs_reflection {
                line += &format!(" reflection={}", sign(*reflection));
            }
            line
        }
        Element::PolFilterPbs { input, h_out, v_out, reflection } => {
            let mut line = format!("split {input} -> {h_out} {v_out}");
            if *reflection != cal.pbs_reflection {
                line += &format!(" reflection={}", sign(*reflection));
            }
            line
        }
        Element::IdealMirror { path } => format!("reflect {path}"),
        Element::CoupledMirror { path, mirror } => format!("reflect {path} {mirror}"),
        Element::Shutter { path, outcome } => format!("shutter {path} -> {outcome}"),
        Element::Detector { path, filter: Some(pol), outcome } => format!("detect {path} {pol} -> {outcome}"),
        Element::Detector { path, filter: None, outcome } => format!("detect {path} -> {outcome}"),
    }
}

fn write_circuit(out: &mut String, circuit: &Circuit, source: Option<&(String, crate::hilbert::Pol)>) {
    let _ = writeln!(out, "format {FORMAT_VERSION}");
    if !circuit.paths().is_empty() {
        let _ = writeln!(out, "ports {}", circuit.paths().join(" "));
    }
    if !circuit.outcomes().is_empty() {
        let _ = writeln!(out, "outcomes {}", circuit.outcomes().join(" "));
    }
    for (m, c) in circuit.mirrors() {
        // `{:?}` is the shortest text that reads back to the same f64
        let _ = writeln!(out, "mirror {m} epsilon={:?} mode={}", c.epsilon, c.mode);
    }
    if let Some((port, pol)) = source {
        let _ = writeln!(out, "source {port} {pol}");
    }
    for stage in circuit.stages() {
        out.push_str("stage\n");
        if let Some(t) = &stage.timepoint {
            let _ = writeln!(out, "  timepoint {t}");
        }
        for e in &stage.elements {
            let _ = writeln!(out, "  {}", element_line(e));
        }
    }
}

/// Canonical text: header in declaration order, one element per line.
pub fn serialize(circuit: &Circuit) -> String {
    let mut out = String::new();
    write_circuit(&mut out, circuit, None);
    out
}

pub fn serialize_document(doc: &CircuitDocument) -> String {
    let mut out = String::new();
    write_circuit(&mut out, &doc.circuit, doc.source.as_ref());
    out
}
