//! Output conventions: every file starts with a provenance header (tool
//! version, scenario and circuit hashes, seed), CSV carries full double
//! precision (17 significant digits, '.' decimal, comma separator, one header
//! row), and identical inputs produce byte-identical files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::CliError;
use crate::scenario::RunContext;

pub const TOOL_NAME: &str = "weaktrace";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// 17 significant digits: enough to reproduce any f64 exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn header_line(ctx: &RunContext) -> String {
    let seed = match ctx.seed {
        Some(s) => s.to_string(),
        None => "none".to_string(),
    };
    format!(
        "# {TOOL_NAME} {TOOL_VERSION} scenario_sha256={} circuit_sha256={} seed={}",
        ctx.scenario_sha256, ctx.circuit_sha256, seed
    )
}

/// JSON provenance fields shared by every JSON output.
pub fn json_header(ctx: &RunContext) -> serde_json::Value {
    serde_json::json!({
        "tool": TOOL_NAME,
        "version": TOOL_VERSION,
        "scenario_sha256": ctx.scenario_sha256,
        "circuit_sha256": ctx.circuit_sha256,
        "seed": ctx.seed,
    })
}

pub fn write_csv(
    ctx: &RunContext,
    file_name: &str,
    columns: &[&str],
    rows: &[Vec<String>],
) -> Result<PathBuf, CliError> {
    let mut text = String::new();
    let _ = writeln!(text, "{}", header_line(ctx));
    let _ = writeln!(text, "{}", columns.join(","));
    for row in rows {
        let _ = writeln!(text, "{}", row.join(","));
    }
    write_file(&ctx.out_dir, file_name, text.as_bytes())
}

pub fn write_json(
    ctx: &RunContext,
    file_name: &str,
    mut payload: serde_json::Value,
) -> Result<PathBuf, CliError> {
    if let serde_json::Value::Object(map) = &mut payload {
        if let serde_json::Value::Object(head) = json_header(ctx) {
            for (k, v) in head {
                map.insert(k, v);
            }
        }
    }
    let mut text = serde_json::to_string_pretty(&payload)?;
    text.push('\n');
    write_file(&ctx.out_dir, file_name, text.as_bytes())
}

fn write_file(dir: &Path, file_name: &str, bytes: &[u8]) -> Result<PathBuf, CliError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::io(&format!("creating output directory `{}`", dir.display()), e))?;
    let path = dir.join(file_name);
    std::fs::write(&path, bytes)
        .map_err(|e| CliError::io(&format!("writing `{}`", path.display()), e))?;
    Ok(path)
}
