//! The five scenario-driven commands. Each writes machine-readable results
//! (CSV and/or JSON) into the context's output directory and prints the
//! written paths.

use std::collections::BTreeSet;

use serde_json::json;
use weaktrace::analysis::{leakage_sweep, peak_power, power_spectrum_sampled};
use weaktrace::meters::{kerr_probe_shift, quad_cell_series, KerrProbeConfig, MirrorModulation, Tone};
use weaktrace::tsvf::{ArmSet, TwoStateVector};

use crate::error::CliError;
use crate::output::{fmt_f64, write_csv, write_json};
use crate::scenario::{require, RunContext};

fn join_arms(arms: &BTreeSet<String>) -> String {
    arms.iter().cloned().collect::<Vec<_>>().join("+")
}

pub fn weak_values(ctx: &RunContext) -> Result<(), CliError> {
    let block = require(&ctx.scenario.weak_values, "weak_values")?;
    if block.arm_sets.is_empty() {
        return Err(CliError::Validation("weak_values: `arm_sets` is empty".into()));
    }
    let tsv = TwoStateVector::new(&ctx.model, &ctx.selection)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for arms in &block.arm_sets {
        if arms.is_empty() {
            return Err(CliError::Validation("weak_values: an arm set is empty".into()));
        }
        let set = ArmSet::resolve(&ctx.model, arms)?;
        let w = tsv.weak_value(&set)?;
        rows.push(vec![join_arms(&set.arms), set.stage.to_string(), fmt_f64(w.re), fmt_f64(w.im)]);
        entries.push(json!({
            "arms": set.arms.iter().collect::<Vec<_>>(),
            "stage": set.stage,
            "re": w.re,
            "im": w.im,
        }));
    }
    let csv = write_csv(ctx, "weak_values.csv", &["arm_set", "stage", "re", "im"], &rows)?;
    let json = write_json(ctx, "weak_values.json", json!({ "weak_values": entries }))?;
    println!("wrote {}", csv.display());
    println!("wrote {}", json.display());
    Ok(())
}

pub fn abl(ctx: &RunContext) -> Result<(), CliError> {
    let block = require(&ctx.scenario.abl, "abl")?;
    if block.partitions.is_empty() {
        return Err(CliError::Validation("abl: `partitions` is empty".into()));
    }
    let tsv = TwoStateVector::new(&ctx.model, &ctx.selection)?;
    let mut rows = Vec::new();
    let mut entries = Vec::new();
    for (pi, partition) in block.partitions.iter().enumerate() {
        // One stage hosts the whole partition: the earliest boundary where
        // every referenced arm is live.
        let all: Vec<&str> = partition.iter().flatten().map(String::as_str).collect();
        let stage = ctx
            .model
            .earliest_boundary_with(&all)
            .ok_or_else(|| CliError::Validation(format!("abl: partition {pi} has no common stage")))?;
        let sets: Vec<ArmSet> = partition.iter().map(|arms| ArmSet::new(stage, arms.clone())).collect();
        let probs = tsv.abl_probabilities(&ctx.model, &sets)?;
        let mut outcome_entries = Vec::new();
        for (oi, (set, p)) in sets.iter().zip(&probs).enumerate() {
            rows.push(vec![pi.to_string(), oi.to_string(), join_arms(&set.arms), fmt_f64(*p)]);
            outcome_entries.push(json!({
                "arms": set.arms.iter().collect::<Vec<_>>(),
                "probability": p,
            }));
        }
        entries.push(json!({ "stage": stage, "outcomes": outcome_entries }));
    }
    let csv = write_csv(ctx, "abl.csv", &["partition", "outcome", "arm_set", "probability"], &rows)?;
    let json = write_json(ctx, "abl.json", json!({ "partitions": entries }))?;
    println!("wrote {}", csv.display());
    println!("wrote {}", json.display());
    Ok(())
}

pub fn spectrum(ctx: &RunContext) -> Result<(), CliError> {
    let block = require(&ctx.scenario.spectrum, "spectrum")?;
    if block.modulations.is_empty() {
        return Err(CliError::Validation("spectrum: `modulations` is empty".into()));
    }
    let n = block.samples.unwrap_or(4096);
    if n < 2 {
        return Err(CliError::Validation(format!("spectrum: need at least 2 samples, got {n}")));
    }
    let dt = block.dt.unwrap_or(1.0 / n as f64);
    if !(dt.is_finite() && dt > 0.0) {
        return Err(CliError::Validation(format!("spectrum: bad time step {dt}")));
    }
    let mods = MirrorModulation::new(block.modulations.iter().map(|(tag, t)| {
        (tag.clone(), Tone { frequency: t.frequency, tilt: t.tilt })
    }));
    let times: Vec<f64> = (0..n).map(|i| i as f64 * dt).collect();
    let series = quad_cell_series(&ctx.model, &ctx.selection, &mods, &times)?;

    let rows: Vec<Vec<String>> = series
        .times
        .iter()
        .zip(&series.values)
        .map(|(t, x)| vec![fmt_f64(*t), fmt_f64(*x)])
        .collect();
    let ts_csv = write_csv(ctx, "timeseries.csv", &["t", "x"], &rows)?;
    println!("wrote {}", ts_csv.display());

    if !series.degenerate.is_empty() {
        return Err(CliError::Undefined(format!(
            "quad-cell denominator degenerate at {} of {} samples; spectrum not computed",
            series.degenerate.len(),
            n
        )));
    }

    let spec = power_spectrum_sampled(&series.times, &series.values)?;
    let rows: Vec<Vec<String>> = spec
        .power
        .iter()
        .enumerate()
        .map(|(k, p)| vec![fmt_f64(spec.frequency(k)), fmt_f64(*p)])
        .collect();
    let sp_csv = write_csv(ctx, "spectrum.csv", &["frequency", "power"], &rows)?;
    println!("wrote {}", sp_csv.display());

    let mut peaks: Vec<f64> = match &block.peaks {
        Some(list) => list.clone(),
        None => block.modulations.values().map(|t| t.frequency).collect(),
    };
    peaks.sort_by(|a, b| a.partial_cmp(b).expect("finite frequencies"));
    let mut peak_entries = Vec::new();
    for f in peaks {
        let p = peak_power(&spec, f)?;
        let bin = (f / spec.bin_width).round() as usize;
        peak_entries.push(json!({ "frequency": f, "bin": bin, "power": p }));
    }
    let payload = json!({
        "samples": n,
        "dt": dt,
        "total_power": spec.total_power(),
        "peaks": peak_entries,
    });
    let js = write_json(ctx, "peaks.json", payload)?;
    println!("wrote {}", js.display());
    Ok(())
}

pub fn kerr(ctx: &RunContext) -> Result<(), CliError> {
    let block = require(&ctx.scenario.kerr, "kerr")?;
    if block.weights.is_empty() {
        return Err(CliError::Validation("kerr: `weights` is empty".into()));
    }
    let mut cfg = KerrProbeConfig::new(
        block.weights.iter().map(|(arm, w)| (arm.clone(), *w)),
        block.phi,
    );
    if let Some(bias) = block.bias {
        cfg.bias = bias;
    }
    let out = kerr_probe_shift(&ctx.model, &ctx.selection, &cfg)?;
    let payload = json!({
        "w_B": block.weights.get("B").copied().unwrap_or(0.0),
        "w_C": block.weights.get("C").copied().unwrap_or(0.0),
        "weights": block.weights,
        "phi": block.phi,
        "bias": cfg.bias,
        "intensity_plus": out.intensity_plus,
        "intensity_minus": out.intensity_minus,
        "imbalance": out.imbalance,
        "inferred_shift": out.inferred_shift,
        "weak_value": out.weak_value,
        "weak_value_prediction": out.predicted_shift,
        "detection_probability": out.detection_probability,
    });
    let js = write_json(ctx, "kerr.json", payload)?;
    println!("wrote {}", js.display());
    Ok(())
}

pub fn leakage(ctx: &RunContext) -> Result<(), CliError> {
    let block = require(&ctx.scenario.leakage, "leakage")?;
    if block.arms.is_empty() {
        return Err(CliError::Validation("leakage: `arms` is empty".into()));
    }
    if let Some([dark, bright]) = &block.ratio {
        for arm in [dark, bright] {
            if !block.arms.contains(arm) {
                return Err(CliError::Validation(format!(
                    "leakage: ratio arm `{arm}` is not in the swept arm list"
                )));
            }
        }
    }
    let ratio_pair = block.ratio.as_ref().map(|[d, b]| (d.as_str(), b.as_str()));
    let sweep = leakage_sweep(&ctx.model, &ctx.selection, &block.arms, &block.epsilons, ratio_pair)?;

    let mut rows = Vec::new();
    for arm_sweep in &sweep.arms {
        for (eps, trace) in &arm_sweep.points {
            rows.push(vec![arm_sweep.arm.clone(), fmt_f64(*eps), fmt_f64(*trace)]);
        }
    }
    let csv = write_csv(ctx, "leakage.csv", &["arm", "epsilon", "trace"], &rows)?;
    println!("wrote {}", csv.display());

    let mut exponents = serde_json::Map::new();
    for arm_sweep in &sweep.arms {
        exponents.insert(
            arm_sweep.arm.clone(),
            json!({
                "exponent": arm_sweep.fit.exponent,
                "prefactor": arm_sweep.fit.prefactor,
                "r_squared": arm_sweep.fit.r_squared,
            }),
        );
    }
    let ratio = sweep.ratio_arms.as_ref().map(|(dark, bright)| {
        json!({
            "dark": dark,
            "bright": bright,
            "points": sweep.ratio.iter().map(|(e, r)| json!([e, r])).collect::<Vec<_>>(),
        })
    });
    let payload = json!({ "exponents": exponents, "ratio": ratio });
    let js = write_json(ctx, "exponents.json", payload)?;
    println!("wrote {}", js.display());
    Ok(())
}
