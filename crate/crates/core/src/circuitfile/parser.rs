use std::collections::BTreeSet;

use crate::engine::{Circuit, Stage};
use crate::hilbert::Pol;
use crate::optics::{Convention, CouplingMode, Element, MirrorCoupling, Sign};

use super::{CircuitDocument, Diagnostic, ParseError, FORMAT_VERSION};

const MAX_MIRRORS: usize = 16;

#[derive(Debug, Clone, Copy)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

/// Whitespace-separated tokens of one line, comment stripped.
fn tokenize(line: &str, number: usize) -> Vec<Token<'_>> {
    let code = line.split('#').next().unwrap_or("");
    let mut tokens = Vec::new();
    let mut start: Option<(usize, usize)> = None; // (byte, column)
    for (column, (byte, ch)) in code.char_indices().enumerate() {
        match (ch.is_whitespace(), start) {
            (true, Some((b, c))) => {
                tokens.push(Token { text: &code[b..byte], line: number, column: c + 1 });
                start = None;
            }
            (false, None) => start = Some((byte, column)),
            _ => {}
        }
    }
    if let Some((b, c)) = start {
        tokens.push(Token { text: &code[b..], line: number, column: c + 1 });
    }
    tokens
}

fn is_identifier(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_alphabetic() || c == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '\'' | '-' | '.'))
}

struct StageDraft {
    elements: Vec<Element>,
    timepoint: Option<String>,
    touched: BTreeSet<String>,
}

#[derive(Default)]
struct Parser {
    diagnostics: Vec<Diagnostic>,
    seen_format: bool,
    paths: Vec<String>,
    outcomes: Vec<String>,
    mirrors: Vec<(String, MirrorCoupling)>,
    source: Option<(String, Pol)>,
    stages: Vec<StageDraft>,
    timepoints: BTreeSet<String>,
    detected: BTreeSet<String>,
}

/// Outcome of parsing one statement; errors have been recorded already.
type Step<T> = std::result::Result<T, ()>;

impl Parser {
    fn error(&mut self, at: Token<'_>, message: impl Into<String>) {
        self.diagnostics.push(Diagnostic { line: at.line, column: at.column, message: message.into() });
    }

    fn fail<T>(&mut self, at: Token<'_>, message: impl Into<String>) -> Step<T> {
        self.error(at, message);
        Err(())
    }

    fn identifier<'a>(&mut self, tokens: &[Token<'a>], i: usize, what: &str, after: Token<'a>) -> Step<Token<'a>> {
        match tokens.get(i) {
            Some(t) if is_identifier(t.text) => Ok(*t),
            Some(t) => self.fail(*t, format!("invalid {what} `{}`", t.text)),
            None => self.fail(after, format!("expected {what} after `{}`", after.text)),
        }
    }

    fn arrow(&mut self, tokens: &[Token<'_>], i: usize, after: Token<'_>) -> Step<()> {
        match tokens.get(i) {
            Some(t) if t.text == "->" => Ok(()),
            Some(t) => self.fail(*t, format!("expected `->`, found `{}`", t.text)),
            None => self.fail(after, format!("expected `->` after `{}`", after.text)),
        }
    }

    fn end(&mut self, tokens: &[Token<'_>], i: usize) -> Step<()> {
        match tokens.get(i) {
            None => Ok(()),
            Some(t) => self.fail(*t, format!("unexpected `{}`", t.text)),
        }
    }

    fn declared(&self, name: &str) -> bool {
        self.paths.iter().chain(&self.outcomes).any(|p| p == name)
    }

    fn header(&mut self, tokens: &[Token<'_>]) -> Step<()> {
        let head = tokens[0];
        if !self.stages.is_empty() {
            return self.fail(head, format!("`{}` must come before the first stage", head.text));
        }
        match head.text {
            "ports" | "outcomes" => {
                if tokens.len() == 1 {
                    return self.fail(head, format!("`{}` needs at least one name", head.text));
                }
                for i in 1..tokens.len() {
                    let t = self.identifier(tokens, i, "name", head)?;
                    if self.declared(t.text) {
                        self.error(t, format!("`{}` declared twice", t.text));
                        continue;
                    }
                    let list = if head.text == "ports" { &mut self.paths } else { &mut self.outcomes };
                    list.push(t.text.to_string());
                }
                Ok(())
            }
            "mirror" => self.mirror(tokens),
            "source" => {
                let port = self.identifier(tokens, 1, "port", head)?;
                let pol = match tokens.get(2) {
                    Some(t) => self.polarization(*t)?,
                    None => return self.fail(port, "expected polarization H or V"),
                };
                self.end(tokens, 3)?;
                if !self.paths.iter().any(|p| p == port.text) {
                    return self.fail(port, format!("undeclared port `{}`", port.text));
                }
                if self.source.is_some() {
                    return self.fail(head, "source declared twice");
                }
                self.source = Some((port.text.to_string(), pol));
                Ok(())
            }
            _ => unreachable!("dispatched on header keywords"),
        }
    }

    fn polarization(&mut self, t: Token<'_>) -> Step<Pol> {
        match t.text {
            "H" => Ok(Pol::H),
            "V" => Ok(Pol::V),
            other => self.fail(t, format!("expected polarization H or V, found `{other}`")),
        }
    }

    fn mirror(&mut self, tokens: &[Token<'_>]) -> Step<()> {
        let head = tokens[0];
        let name = self.identifier(tokens, 1, "mirror name", head)?;
        if self.mirrors.iter().any(|(m, _)| m == name.text) {
            return self.fail(name, format!("mirror `{}` registered twice", name.text));
        }
        if self.mirrors.len() == MAX_MIRRORS {
            return self.fail(name, format!("at most {MAX_MIRRORS} mirrors can be registered"));
        }
        let mut epsilon = None;
        let mut mode = None;
        for t in &tokens[2..] {
            let Some((key, value)) = t.text.split_once('=') else {
                return self.fail(*t, format!("expected key=value, found `{}`", t.text));
            };
            match key {
                "epsilon" if epsilon.is_none() => match value.parse::<f64>() {
                    Ok(x) if x.is_finite() && x >= 0.0 => epsilon = Some(x),
                    _ => return self.fail(*t, format!("epsilon must be a finite non-negative number, got `{value}`")),
                },
                "mode" if mode.is_none() => match value.parse::<CouplingMode>() {
                    Ok(m) => mode = Some(m),
                    Err(_) => return self.fail(*t, format!("mode must be `exact` or `first-order`, got `{value}`")),
                },
                "epsilon" | "mode" => return self.fail(*t, format!("`{key}` given twice")),
                _ => return self.fail(*t, format!("unknown mirror parameter `{key}`")),
            }
        }
        let Some(epsilon) = epsilon else {
            return self.fail(name, "mirror needs epsilon=<number>");
        };
        let coupling = MirrorCoupling::new(epsilon, mode.unwrap_or(CouplingMode::Exact)).expect("validated above");
        self.mirrors.push((name.text.to_string(), coupling));
        Ok(())
    }

    fn sign(&mut self, tokens: &[Token<'_>], i: usize, key: &str, default: Sign) -> Step<Sign> {
        let Some(t) = tokens.get(i) else { return Ok(default) };
        match t.text.split_once('=') {
            Some((k, "+")) if k == key => Ok(Sign::Plus),
            Some((k, "-")) if k == key => Ok(Sign::Minus),
            _ => self.fail(*t, format!("expected `{key}=+` or `{key}=-`, found `{}`", t.text)),
        }
    }

    fn path<'a>(&mut self, t: Token<'a>) -> Step<Token<'a>> {
        if self.paths.iter().any(|p| p == t.text) {
            Ok(t)
        } else if self.outcomes.iter().any(|o| o == t.text) {
            self.fail(t, format!("`{}` is an outcome, not a path", t.text))
        } else {
            self.fail(t, format!("undeclared port `{}`", t.text))
        }
    }

    fn port<'a>(&mut self, tokens: &[Token<'a>], i: usize) -> Step<Token<'a>> {
        let t = self.identifier(tokens, i, "port", tokens[tokens.len() - 1])?;
        self.path(t)
    }

    fn outcome(&mut self, t: Token<'_>) -> Step<()> {
        if !self.outcomes.iter().any(|o| o == t.text) {
            return self.fail(t, format!("undeclared outcome `{}`", t.text));
        }
        if !self.detected.insert(t.text.to_string()) {
            return self.fail(t, format!("outcome `{}` has more than one detector", t.text));
        }
        Ok(())
    }

    fn element(&mut self, tokens: &[Token<'_>]) -> Step<()> {
        let head = tokens[0];
        if self.stages.is_empty() {
            return self.fail(head, format!("`{}` outside a stage", head.text));
        }
        let cal = Convention::CALIBRATED;
        let last = tokens[tokens.len() - 1];
        let id = |p: &mut Self, i: usize, what: &str| p.identifier(tokens, i, what, last);
        let (element, ports) = match head.text {
            "hwp" => {
                let path = self.port(tokens, 1)?;
                let v_sign = self.sign(tokens, 2, "sign", cal.hwp_v_sign)?;
                self.end(tokens, 3)?;
                (Element::Hwp { path: path.text.into(), v_sign }, vec![path])
            }
            "pbs" => {
                let a = self.port(tokens, 1)?;
                let b = self.port(tokens, 2)?;
                self.arrow(tokens, 3, b)?;
                let c = self.port(tokens, 4)?;
                let d = self.port(tokens, 5)?;
                let reflection = self.sign(tokens, 6, "reflection", cal.pbs_reflection)?;
                self.end(tokens, 7)?;
                if a.text == b.text {
                    return self.fail(b, "the two inputs must differ");
                }
                if c.text == d.text {
                    return self.fail(d, "the two outputs must differ");
                }
                let element = Element::Pbs {
                    inputs: [a.text.into(), b.text.into()],
                    outputs: [c.text.into(), d.text.into()],
                    reflection,
                };
                (element, vec![a, b, c, d])
            }
            "split" => {
                let input = self.port(tokens, 1)?;
                self.arrow(tokens, 2, input)?;
                let h = self.port(tokens, 3)?;
                let v = self.port(tokens, 4)?;
                let reflection = self.sign(tokens, 5, "reflection", cal.pbs_reflection)?;
                self.end(tokens, 6)?;
                if h.text == v.text {
                    return self.fail(v, "the two outputs must differ");
                }
                let element = Element::PolFilterPbs {
                    input: input.text.into(),
                    h_out: h.text.into(),
                    v_out: v.text.into(),
                    reflection,
                };
                (element, vec![input, h, v])
            }
            "reflect" => {
                let path = self.port(tokens, 1)?;
                let element = match tokens.get(2) {
                    None => Element::IdealMirror { path: path.text.into() },
                    Some(_) => {
                        let m = id(self, 2, "mirror name")?;
                        if !self.mirrors.iter().any(|(name, _)| name == m.text) {
                            return self.fail(m, format!("unregistered mirror `{}`", m.text));
                        }
                        self.end(tokens, 3)?;
                        Element::CoupledMirror { path: path.text.into(), mirror: m.text.into() }
                    }
                };
                (element, vec![path])
            }
            "shutter" => {
                let path = self.port(tokens, 1)?;
                self.arrow(tokens, 2, path)?;
                let out = id(self, 3, "outcome")?;
                self.end(tokens, 4)?;
                self.outcome(out)?;
                (Element::Shutter { path: path.text.into(), outcome: out.text.into() }, vec![path])
            }
            "detect" => {
                let path = self.port(tokens, 1)?;
                let (filter, next) = match tokens.get(2) {
                    Some(t) if t.text != "->" => (Some(self.polarization(*t)?), 3),
                    _ => (None, 2),
                };
                self.arrow(tokens, next, tokens[next - 1])?;
                let out = id(self, next + 1, "outcome")?;
                self.end(tokens, next + 2)?;
                self.outcome(out)?;
                (Element::Detector { path: path.text.into(), filter, outcome: out.text.into() }, vec![path])
            }
            _ => unreachable!("dispatched on element keywords"),
        };
        let stage = self.stages.last_mut().expect("inside a stage");
        let mut own = BTreeSet::new();
        let mut clash = None;
        for p in ports.iter().filter(|p| own.insert(p.text)) {
            if !stage.touched.insert(p.text.to_string()) && clash.is_none() {
                clash = Some(*p);
            }
        }
        if let Some(p) = clash {
            return self.fail(p, format!("port `{}` used twice in this stage", p.text));
        }
        stage.elements.push(element);
        Ok(())
    }

    fn timepoint(&mut self, tokens: &[Token<'_>]) -> Step<()> {
        let head = tokens[0];
        let label = self.identifier(tokens, 1, "time point label", head)?;
        self.end(tokens, 2)?;
        let Some(stage) = self.stages.last_mut() else {
            return self.fail(head, "`timepoint` outside a stage");
        };
        if stage.timepoint.is_some() {
            return self.fail(head, "stage already has a time point");
        }
        if !stage.elements.is_empty() {
            return self.fail(head, "`timepoint` must precede the stage's elements");
        }
        stage.timepoint = Some(label.text.to_string());
        if !self.timepoints.insert(label.text.to_string()) {
            return self.fail(label, format!("duplicate time point `{}`", label.text));
        }
        Ok(())
    }

    fn statement(&mut self, tokens: &[Token<'_>]) -> Step<()> {
        let head = tokens[0];
        if !self.seen_format {
            if head.text != "format" {
                return self.fail(head, format!("expected `format {FORMAT_VERSION}` first"));
            }
            self.seen_format = true;
            return match tokens.get(1) {
                Some(t) if t.text == FORMAT_VERSION => self.end(tokens, 2),
                Some(t) => self.fail(*t, format!("unsupported format `{}`, expected `{FORMAT_VERSION}`", t.text)),
                None => self.fail(head, format!("expected `{FORMAT_VERSION}`")),
            };
        }
        match head.text {
            "format" => self.fail(head, "`format` given twice"),
            "ports" | "outcomes" | "mirror" | "source" => self.header(tokens),
            "stage" => {
                self.end(tokens, 1)?;
                self.stages.push(StageDraft { elements: Vec::new(), timepoint: None, touched: BTreeSet::new() });
                Ok(())
            }
            "timepoint" => self.timepoint(tokens),
            "hwp" | "pbs" | "split" | "reflect" | "shutter" | "detect" => self.element(tokens),
            other => self.fail(head, format!("unknown keyword `{other}`")),
        }
    }
}

/// Parses circuit text. On failure every diagnostic found is returned.
pub fn parse_document(text: &str) -> Result<CircuitDocument, ParseError> {
    let mut p = Parser::default();
    for (i, line) in text.lines().enumerate() {
        let tokens = tokenize(line, i + 1);
        if !tokens.is_empty() {
            let _ = p.statement(&tokens);
        }
    }
    if !p.seen_format && p.diagnostics.is_empty() {
        p.diagnostics.push(Diagnostic {
            line: 1,
            column: 1,
            message: format!("missing `format {FORMAT_VERSION}` header"),
        });
    }
    if !p.diagnostics.is_empty() {
        return Err(ParseError { diagnostics: p.diagnostics });
    }
    let stages = p.stages.into_iter().map(|s| Stage { elements: s.elements, timepoint: s.timepoint }).collect();
    match Circuit::new(p.paths, p.outcomes, p.mirrors, stages) {
        Ok(circuit) => Ok(CircuitDocument { circuit, source: p.source }),
        Err(e) => Err(ParseError { diagnostics: vec![Diagnostic { line: 1, column: 1, message: e.to_string() }] }),
    }
}

pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    parse_document(text).map(|d| d.circuit)
}

/// Like [`parse_document`] for raw bytes, reporting invalid UTF-8.
pub fn parse_bytes(bytes: &[u8]) -> Result<CircuitDocument, ParseError> {
    match std::str::from_utf8(bytes) {
        Ok(text) => parse_document(text),
        Err(e) => {
            let before = &bytes[..e.valid_up_to()];
            let line = before.iter().filter(|&&b| b == b'\n').count() + 1;
            let line_start = before.iter().rposition(|&b| b == b'\n').map_or(0, |i| i + 1);
            let column = String::from_utf8_lossy(&before[line_start..]).chars().count() + 1;
            Err(ParseError { diagnostics: vec![Diagnostic { line, column, message: "invalid UTF-8".into() }] })
        }
    }
}
