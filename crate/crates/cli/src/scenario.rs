//! Scenario files: one TOML document holding the circuit reference, the
//! selection, and per-command parameter blocks. The circuit itself stays in
//! its DSL file; the scenario carries run parameters only.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use sha2::{Digest, Sha256};
use weaktrace::circuit::parse_circuit;
use weaktrace::tsvf::{PathState, PostSelection, SelectionPair};
use weaktrace::{C64, SelectionPair64, StagedModel64};

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub circuit: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub selection: Option<SelectionBlock>,
    pub weak_values: Option<WeakValuesBlock>,
    pub abl: Option<AblBlock>,
    pub spectrum: Option<SpectrumBlock>,
    pub kerr: Option<KerrBlock>,
    pub leakage: Option<LeakageBlock>,
}

/// Pre/post selection. `pre` defaults to unit amplitude on the source arm;
/// the post-selection is either a detector arm (`post`) or an explicit state
/// (`post_state`), not both.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SelectionBlock {
    pub post: Option<String>,
    pub post_state: Option<BTreeMap<String, [f64; 2]>>,
    pub pre: Option<BTreeMap<String, [f64; 2]>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeakValuesBlock {
    pub arm_sets: Vec<Vec<String>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AblBlock {
    /// Each partition is a list of disjoint arm sets covering one stage.
    pub partitions: Vec<Vec<Vec<String>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumBlock {
    pub samples: Option<usize>,
    pub dt: Option<f64>,
    pub modulations: BTreeMap<String, ToneSpec>,
    pub peaks: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ToneSpec {
    pub frequency: f64,
    pub tilt: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KerrBlock {
    pub phi: f64,
    pub bias: Option<f64>,
    pub weights: BTreeMap<String, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LeakageBlock {
    pub arms: Vec<String>,
    pub epsilons: Vec<f64>,
    /// `[dark, bright]`: report trace(dark)/trace(bright) per epsilon.
    pub ratio: Option<[String; 2]>,
}

/// Everything a command needs: compiled model, selection, provenance hashes.
pub struct RunContext {
    pub scenario: ScenarioFile,
    pub model: StagedModel64,
    pub selection: SelectionPair64,
    pub out_dir: PathBuf,
    pub scenario_sha256: String,
    pub circuit_sha256: String,
    pub seed: Option<u64>,
}

pub struct Overrides {
    pub circuit: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
}

pub fn load(scenario_path: &Path, overrides: Overrides) -> Result<RunContext, CliError> {
    let scenario_bytes = std::fs::read(scenario_path)
        .map_err(|e| CliError::io(&format!("reading scenario `{}`", scenario_path.display()), e))?;
    let scenario_sha256 = hex_sha256(&scenario_bytes);
    let text = String::from_utf8(scenario_bytes)
        .map_err(|_| CliError::Validation("scenario file is not UTF-8".into()))?;
    let scenario: ScenarioFile =
        toml::from_str(&text).map_err(|e| CliError::Validation(format!("scenario: {e}")))?;

    // Paths inside the scenario resolve relative to the scenario file.
    let base = scenario_path.parent().unwrap_or_else(|| Path::new("."));
    let circuit_path = overrides
        .circuit
        .or_else(|| scenario.circuit.as_ref().map(|p| resolve(base, p)))
        .ok_or_else(|| CliError::Validation("no circuit file given (scenario `circuit` key or --circuit flag)".into()))?;
    let circuit_bytes = std::fs::read(&circuit_path)
        .map_err(|e| CliError::io(&format!("reading circuit `{}`", circuit_path.display()), e))?;
    let circuit_sha256 = hex_sha256(&circuit_bytes);
    let circuit_text = String::from_utf8(circuit_bytes)
        .map_err(|_| CliError::Validation("circuit file is not UTF-8".into()))?;
    let model = parse_circuit::<f64>(&circuit_text)?.compile()?;

    let selection = build_selection(&model, scenario.selection.as_ref())?;

    let out_dir = overrides
        .out
        .or_else(|| scenario.out.as_ref().map(|p| resolve(base, p)))
        .ok_or_else(|| CliError::Validation("no output directory given (scenario `out` key or --out flag)".into()))?;

    let seed = overrides.seed.or(scenario.seed);

    Ok(RunContext { scenario, model, selection, out_dir, scenario_sha256, circuit_sha256, seed })
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn hex_sha256(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn build_selection(
    model: &StagedModel64,
    block: Option<&SelectionBlock>,
) -> Result<SelectionPair64, CliError> {
    let pre = match block.and_then(|b| b.pre.as_ref()) {
        Some(map) => state_from_map(map),
        None => PathState::unit(model.source_arm().clone()),
    };
    let post = match block {
        Some(b) => match (&b.post, &b.post_state) {
            (Some(_), Some(_)) => {
                return Err(CliError::Validation(
                    "selection: give either `post` or `post_state`, not both".into(),
                ))
            }
            (Some(arm), None) => {
                if !model.is_terminal(arm) {
                    return Err(CliError::Validation(format!(
                        "selection: post arm `{arm}` is not a terminal arm of the circuit"
                    )));
                }
                PostSelection::Detector(arm.clone())
            }
            (None, Some(map)) => PostSelection::State(state_from_map(map)),
            (None, None) => PostSelection::Detector(model.detect_arm().clone()),
        },
        None => PostSelection::Detector(model.detect_arm().clone()),
    };
    Ok(SelectionPair { pre, post })
}

fn state_from_map(map: &BTreeMap<String, [f64; 2]>) -> PathState<f64> {
    PathState::from_pairs(map.iter().map(|(arm, [re, im])| (arm.clone(), C64::new(*re, *im))))
}

/// The command block required for the invoked subcommand, as a validation
/// error when missing.
pub fn require<'a, T>(block: &'a Option<T>, name: &str) -> Result<&'a T, CliError> {
    block
        .as_ref()
        .ok_or_else(|| CliError::Validation(format!("scenario is missing the `[{name}]` block required by this command")))
}
