//! Hand-rolled parser for the line-oriented circuit DSL.

use crate::scalar::Real;

use super::{is_ident, ArmLabel, CircuitError, CircuitSpec, Element, ElementKind};

/// Parse DSL text into a validated [`CircuitSpec`].
///
/// Statements may appear in any order; the compiler derives the stage order
/// by topological sort. Errors carry 1-based line/column positions.
pub fn parse_circuit<R: Real>(text: &str) -> Result<CircuitSpec<R>, CircuitError> {
    let mut source: Option<ArmLabel> = None;
    let mut detect_arms: Vec<ArmLabel> = Vec::new();
    let mut elements: Vec<Element<R>> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let mut toks = Tokens::new(line, line_no);
        let (kw, kw_col) = toks.next_required("statement keyword")?;
        match kw {
            "source" => {
                let arm = toks.kv_ident("arm")?;
                toks.finish()?;
                if source.is_some() {
                    return Err(CircuitError::DuplicateSource);
                }
                source = Some(arm);
            }
            "detect" => {
                let arm = toks.kv_ident("arm")?;
                toks.finish()?;
                detect_arms.push(arm);
            }
            "beamsplitter" => {
                let name = toks.ident("element name")?;
                let (in1, in2) = toks.kv_ident_pair("in")?;
                let (out1, out2) = toks.kv_ident_pair("out")?;
                let theta = toks.kv_float("theta")?;
                let phi = toks.kv_float("phi")?;
                toks.finish()?;
                elements.push(Element {
                    name,
                    kind: ElementKind::BeamSplitter { theta: R::of(theta), phi: R::of(phi) },
                    inputs: vec![in1, in2],
                    outputs: vec![out1, out2],
                });
            }
            "mirror" => {
                let name = toks.ident("element name")?;
                let arm_in = toks.kv_ident("arm_in")?;
                let arm_out = toks.kv_ident("arm_out")?;
                toks.finish()?;
                elements.push(Element {
                    name,
                    kind: ElementKind::Mirror,
                    inputs: vec![arm_in],
                    outputs: vec![arm_out],
                });
            }
            "phaseshift" => {
                let name = toks.ident("element name")?;
                let arm_in = toks.kv_ident("arm_in")?;
                let arm_out = toks.kv_ident("arm_out")?;
                let value = toks.kv_float("value")?;
                toks.finish()?;
                elements.push(Element {
                    name,
                    kind: ElementKind::PhaseShift { value: R::of(value) },
                    inputs: vec![arm_in],
                    outputs: vec![arm_out],
                });
            }
            other => {
                return Err(CircuitError::Syntax {
                    line: line_no,
                    col: kw_col,
                    msg: format!("unknown statement `{other}`"),
                });
            }
        }
    }

    let spec = CircuitSpec {
        elements,
        source_arm: source.ok_or(CircuitError::MissingSource)?,
        detect_arms,
    };
    if spec.detect_arms.is_empty() {
        return Err(CircuitError::MissingDetect);
    }
    spec.validate()?;
    Ok(spec)
}

/// Whitespace-separated tokens of one line, tracking 1-based columns.
struct Tokens<'a> {
    items: Vec<(&'a str, usize)>,
    pos: usize,
    line: usize,
    end_col: usize,
}

impl<'a> Tokens<'a> {
    fn new(line: &'a str, line_no: usize) -> Self {
        let mut items = Vec::new();
        let mut col = 1;
        for piece in line.split_inclusive(char::is_whitespace) {
            let word = piece.trim_end_matches(char::is_whitespace);
            if !word.is_empty() {
                items.push((word, col));
            }
            col += piece.chars().count();
        }
        Tokens { items, pos: 0, line: line_no, end_col: col }
    }

    fn err(&self, col: usize, msg: String) -> CircuitError {
        CircuitError::Syntax { line: self.line, col, msg }
    }

    fn next_required(&mut self, what: &str) -> Result<(&'a str, usize), CircuitError> {
        match self.items.get(self.pos) {
            Some(&(tok, col)) => {
                self.pos += 1;
                Ok((tok, col))
            }
            None => Err(self.err(self.end_col, format!("expected {what}"))),
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, CircuitError> {
        let (tok, col) = self.next_required(what)?;
        if !is_ident(tok) {
            return Err(self.err(col, format!("expected {what}, found `{tok}`")));
        }
        Ok(tok.to_string())
    }

    /// `key=<value>`; returns the raw value text and its column.
    fn kv(&mut self, key: &str) -> Result<(&'a str, usize), CircuitError> {
        let (tok, col) = self.next_required(&format!("`{key}=...`"))?;
        match tok.split_once('=') {
            Some((k, v)) if k == key => Ok((v, col + key.len() + 1)),
            Some((k, _)) => Err(self.err(col, format!("expected key `{key}`, found `{k}`"))),
            None => Err(self.err(col, format!("expected `{key}=...`, found `{tok}`"))),
        }
    }

    fn kv_ident(&mut self, key: &str) -> Result<String, CircuitError> {
        let (v, col) = self.kv(key)?;
        if !is_ident(v) {
            return Err(self.err(col, format!("`{v}` is not a valid arm label")));
        }
        Ok(v.to_string())
    }

    fn kv_ident_pair(&mut self, key: &str) -> Result<(String, String), CircuitError> {
        let (v, col) = self.kv(key)?;
        let Some((a, b)) = v.split_once(',') else {
            return Err(self.err(col, format!("`{key}` takes two comma-separated arm labels")));
        };
        if !is_ident(a) {
            return Err(self.err(col, format!("`{a}` is not a valid arm label")));
        }
        if !is_ident(b) {
            return Err(self.err(col + a.len() + 1, format!("`{b}` is not a valid arm label")));
        }
        Ok((a.to_string(), b.to_string()))
    }

    fn kv_float(&mut self, key: &str) -> Result<f64, CircuitError> {
        let (v, col) = self.kv(key)?;
        let x: f64 = v
            .parse()
            .map_err(|_| self.err(col, format!("`{v}` is not a number")))?;
        if !x.is_finite() {
            return Err(self.err(col, format!("`{v}` is not finite")));
        }
        Ok(x)
    }

    fn finish(&mut self) -> Result<(), CircuitError> {
        match self.items.get(self.pos) {
            None => Ok(()),
            Some(&(tok, col)) => Err(self.err(col, format!("unexpected trailing `{tok}`"))),
        }
    }
}
