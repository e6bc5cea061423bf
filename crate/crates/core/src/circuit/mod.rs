//! Interferometer circuit description: a line-oriented DSL, a validated
//! [`CircuitSpec`], and a compiler producing the staged unitary model.
//!
//! # The DSL
//!
//! One statement per line, `#` starts a comment, identifiers are
//! case-sensitive `[A-Za-z_][A-Za-z0-9_]*`:
//!
//! ```text
//! source arm=<id>
//! beamsplitter <name> in=<id>,<id> out=<id>,<id> theta=<float> phi=<float>
//! mirror <name> arm_in=<id> arm_out=<id>
//! phaseshift <name> arm_in=<id> arm_out=<id> value=<float>
//! detect arm=<id>
//! ```
//!
//! The reserved label `vac` may appear as a beamsplitter *input* and denotes
//! an unused port: each occurrence creates a fresh hidden arm carrying
//! amplitude zero. Those arms participate in the stage matrices (the stages
//! stay square and unitary) but never show up in the path table.
//!
//! A beamsplitter with angles `(theta, phi)` acts on its `(in1, in2)` pair as
//!
//! ```text
//! | cos(theta)                e^{i phi} sin(theta) |
//! | -e^{-i phi} sin(theta)    cos(theta)           |
//! ```
//!
//! Mirrors are identity elements; they exist so couplings (vibrating mirrors,
//! markers) have named attachment points. A phaseshift multiplies its arm by
//! `e^{i value}`.

mod compile;
mod parse;

pub use compile::{PathRecord, Stage, StagedModel};
pub use parse::parse_circuit;

use thiserror::Error;

use crate::scalar::Real;

/// Reserved DSL label for an unused (vacuum) beamsplitter input port.
pub const VACUUM_LABEL: &str = "vac";

/// Arm labels are plain case-sensitive identifiers.
pub type ArmLabel = String;

#[derive(Debug, Error)]
pub enum CircuitError {
    #[error("syntax error at line {line}, column {col}: {msg}")]
    Syntax { line: usize, col: usize, msg: String },
    #[error("unknown arm label `{arm}` referenced by element `{element}`")]
    UnknownArm { arm: ArmLabel, element: String },
    #[error("cycle detected involving element `{0}`")]
    CycleDetected(String),
    #[error("arm `{0}` is produced more than once")]
    DuplicateProducer(ArmLabel),
    #[error("arm `{0}` is consumed by more than one element")]
    DuplicateConsumer(ArmLabel),
    #[error("missing `source` declaration")]
    MissingSource,
    #[error("more than one `source` declaration")]
    DuplicateSource,
    #[error("missing `detect` declaration")]
    MissingDetect,
    #[error("duplicate element name `{0}`")]
    DuplicateElementName(String),
    #[error("duplicate `detect` declaration for arm `{0}`")]
    DuplicateDetect(ArmLabel),
    #[error("detect arm `{arm}` is consumed by element `{element}`; detectors sit on terminal arms")]
    DetectArmConsumed { arm: ArmLabel, element: String },
    #[error("detect arm `{0}` is never produced")]
    UnknownDetectArm(ArmLabel),
    #[error("reserved label `vac` is only valid as a beamsplitter input (element `{0}`)")]
    MisplacedVacuum(String),
    #[error("element `{element}` must have {expected} but has {got}")]
    BadArity { element: String, expected: &'static str, got: String },
    #[error("invalid identifier `{0}`")]
    BadIdentifier(String),
    #[error("non-finite parameter `{param}` on element `{element}`")]
    NonFiniteParameter { element: String, param: &'static str },
    #[error("arm `{0}` does not exist in the compiled model")]
    NoSuchArm(ArmLabel),
    #[error("arm `{0}` is not terminal; paths end on terminal arms")]
    NotTerminal(ArmLabel),
}

/// What an element does to the arms it touches.
#[derive(Debug, Clone, PartialEq)]
pub enum ElementKind<R: Real> {
    BeamSplitter { theta: R, phi: R },
    Mirror,
    PhaseShift { value: R },
}

/// One optical element: named, with ordered input and output arms.
#[derive(Debug, Clone, PartialEq)]
pub struct Element<R: Real> {
    pub name: String,
    pub kind: ElementKind<R>,
    pub inputs: Vec<ArmLabel>,
    pub outputs: Vec<ArmLabel>,
}

impl<R: Real> Element<R> {
    fn is_beamsplitter(&self) -> bool {
        matches!(self.kind, ElementKind::BeamSplitter { .. })
    }
}

/// A parsed and validated interferometer layout.
///
/// Arms form a DAG: every input label is produced exactly once (by the source
/// declaration or an earlier element's output), no label is produced twice,
/// and no label feeds two elements.
#[derive(Debug, Clone, PartialEq)]
pub struct CircuitSpec<R: Real> {
    pub elements: Vec<Element<R>>,
    pub source_arm: ArmLabel,
    pub detect_arms: Vec<ArmLabel>,
}

impl<R: Real> CircuitSpec<R> {
    /// Primary detector (the first `detect` declaration).
    pub fn detect_arm(&self) -> &ArmLabel {
        &self.detect_arms[0]
    }

    /// Check every structural invariant. `parse_circuit` calls this before
    /// returning, so a spec obtained from text is always valid; call it
    /// yourself after building a spec programmatically.
    pub fn validate(&self) -> Result<(), CircuitError> {
        if self.source_arm.is_empty() {
            return Err(CircuitError::MissingSource);
        }
        check_ident(&self.source_arm)?;
        if self.source_arm == VACUUM_LABEL {
            return Err(CircuitError::MisplacedVacuum("source".into()));
        }
        if self.detect_arms.is_empty() {
            return Err(CircuitError::MissingDetect);
        }

        let mut names = std::collections::BTreeSet::new();
        for el in &self.elements {
            check_ident(&el.name)?;
            if !names.insert(el.name.clone()) {
                return Err(CircuitError::DuplicateElementName(el.name.clone()));
            }
            let (want_in, want_out, desc) = match el.kind {
                ElementKind::BeamSplitter { .. } => (2, 2, "2 inputs and 2 outputs"),
                _ => (1, 1, "1 input and 1 output"),
            };
            if el.inputs.len() != want_in || el.outputs.len() != want_out {
                return Err(CircuitError::BadArity {
                    element: el.name.clone(),
                    expected: desc,
                    got: format!("{} inputs and {} outputs", el.inputs.len(), el.outputs.len()),
                });
            }
            for label in el.inputs.iter().chain(&el.outputs) {
                check_ident(label)?;
            }
            for out in &el.outputs {
                if out == VACUUM_LABEL {
                    return Err(CircuitError::MisplacedVacuum(el.name.clone()));
                }
            }
            if !el.is_beamsplitter() && el.inputs.iter().any(|a| a == VACUUM_LABEL) {
                return Err(CircuitError::MisplacedVacuum(el.name.clone()));
            }
            match el.kind {
                ElementKind::BeamSplitter { theta, phi } => {
                    if !theta.is_finite() {
                        return Err(CircuitError::NonFiniteParameter { element: el.name.clone(), param: "theta" });
                    }
                    if !phi.is_finite() {
                        return Err(CircuitError::NonFiniteParameter { element: el.name.clone(), param: "phi" });
                    }
                }
                ElementKind::PhaseShift { value } => {
                    if !value.is_finite() {
                        return Err(CircuitError::NonFiniteParameter { element: el.name.clone(), param: "value" });
                    }
                }
                ElementKind::Mirror => {}
            }
        }

        // Unique producers: the source plus every element output.
        let mut producers = std::collections::BTreeMap::new();
        producers.insert(self.source_arm.clone(), usize::MAX);
        for (i, el) in self.elements.iter().enumerate() {
            for out in &el.outputs {
                if producers.insert(out.clone(), i).is_some() {
                    return Err(CircuitError::DuplicateProducer(out.clone()));
                }
            }
        }

        // Unique consumers, and every consumed label must be produced somewhere.
        let mut consumers = std::collections::BTreeMap::new();
        for el in &self.elements {
            for input in &el.inputs {
                if input == VACUUM_LABEL {
                    continue;
                }
                if !producers.contains_key(input) {
                    return Err(CircuitError::UnknownArm { arm: input.clone(), element: el.name.clone() });
                }
                if consumers.insert(input.clone(), el.name.clone()).is_some() {
                    return Err(CircuitError::DuplicateConsumer(input.clone()));
                }
            }
        }

        let mut seen_detect = std::collections::BTreeSet::new();
        for det in &self.detect_arms {
            check_ident(det)?;
            if det == VACUUM_LABEL {
                return Err(CircuitError::MisplacedVacuum("detect".into()));
            }
            if !seen_detect.insert(det.clone()) {
                return Err(CircuitError::DuplicateDetect(det.clone()));
            }
            if !producers.contains_key(det) {
                return Err(CircuitError::UnknownDetectArm(det.clone()));
            }
            if let Some(consumer) = consumers.get(det) {
                return Err(CircuitError::DetectArmConsumed { arm: det.clone(), element: consumer.clone() });
            }
        }

        self.topo_order().map(|_| ())
    }

    /// Topological order over elements (an element waits on the producers of
    /// its inputs). Ties break on declaration index, so the order is
    /// deterministic; statements may appear in any order in the source text.
    pub(crate) fn topo_order(&self) -> Result<Vec<usize>, CircuitError> {
        let mut producer_of = std::collections::BTreeMap::new();
        for (i, el) in self.elements.iter().enumerate() {
            for out in &el.outputs {
                producer_of.insert(out.as_str(), i);
            }
        }
        let n = self.elements.len();
        let mut pending: Vec<usize> = (0..n)
            .map(|i| {
                self.elements[i]
                    .inputs
                    .iter()
                    .filter(|a| a.as_str() != VACUUM_LABEL && **a != self.source_arm)
                    .filter(|a| producer_of.contains_key(a.as_str()))
                    .count()
            })
            .collect();
        let mut done = vec![false; n];
        let mut order = Vec::with_capacity(n);
        for _ in 0..n {
            // Smallest declaration index among ready elements.
            let next = (0..n).find(|&i| !done[i] && pending[i] == 0);
            let Some(i) = next else {
                let stuck = (0..n).find(|&i| !done[i]).unwrap();
                return Err(CircuitError::CycleDetected(self.elements[stuck].name.clone()));
            };
            done[i] = true;
            order.push(i);
            for out in &self.elements[i].outputs {
                for (j, el) in self.elements.iter().enumerate() {
                    if !done[j] && el.inputs.iter().any(|a| a == out) {
                        pending[j] -= 1;
                    }
                }
            }
        }
        Ok(order)
    }

    /// Render back to DSL text. `parse_circuit(to_dsl())` reproduces the spec
    /// structurally (floats print in shortest round-trip form).
    pub fn to_dsl(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("source arm={}\n", self.source_arm));
        for el in &self.elements {
            match &el.kind {
                ElementKind::BeamSplitter { theta, phi } => {
                    out.push_str(&format!(
                        "beamsplitter {} in={},{} out={},{} theta={} phi={}\n",
                        el.name, el.inputs[0], el.inputs[1], el.outputs[0], el.outputs[1], theta, phi
                    ));
                }
                ElementKind::Mirror => {
                    out.push_str(&format!(
                        "mirror {} arm_in={} arm_out={}\n",
                        el.name, el.inputs[0], el.outputs[0]
                    ));
                }
                ElementKind::PhaseShift { value } => {
                    out.push_str(&format!(
                        "phaseshift {} arm_in={} arm_out={} value={}\n",
                        el.name, el.inputs[0], el.outputs[0], value
                    ));
                }
            }
        }
        for det in &self.detect_arms {
            out.push_str(&format!("detect arm={}\n", det));
        }
        out
    }

    /// Look up a mirror element by name.
    pub fn mirror(&self, tag: &str) -> Option<&Element<R>> {
        self.elements
            .iter()
            .find(|el| el.name == tag && matches!(el.kind, ElementKind::Mirror))
    }
}

pub(crate) fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

fn check_ident(s: &str) -> Result<(), CircuitError> {
    if is_ident(s) {
        Ok(())
    } else {
        Err(CircuitError::BadIdentifier(s.to_string()))
    }
}
