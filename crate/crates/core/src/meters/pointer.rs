//! Vibrating-mirror transverse pointer: each modulated mirror tilts the beam
//! by `delta * sin(2 pi f t)` in pointer units, and a quad-cell detector at
//! the post-selected output reads the mean transverse displacement `<x>(t)`.
//!
//! The pointer is a unit-width Gaussian tracked analytically through pairwise
//! path overlaps; there is no spatial grid. With path amplitudes `a_p` into
//! the post-selected port and per-path displacements `d_p(t)`,
//!
//! ```text
//! <x>(t) = Re[ sum_{p,q} conj(a_p) a_q (d_p + d_q)/2 O_pq ]
//!        / Re[ sum_{p,q} conj(a_p) a_q O_pq ],
//! O_pq = exp(-(d_p - d_q)^2 / (8 sigma^2)),  sigma = 1.
//! ```

use crate::circuit::StagedModel;
use crate::scalar::Real;
use crate::tsvf::{ArmSet, SelectionPair, TwoStateVector};

use super::MeterError;

/// Gaussian pointer width (pointer-position units).
pub const POINTER_WIDTH: f64 = 1.0;

/// Instantaneous denominators below this are flagged as degenerate samples.
pub const DEGENERATE_DENOMINATOR: f64 = 1e-14;

/// One vibrating mirror: modulation frequency (cycles per unit time) and
/// tilt amplitude (pointer-position units).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tone<R: Real> {
    pub frequency: R,
    pub tilt: R,
}

/// Mirror-tag to tone map. Tags are mirror element names; frequencies must be
/// pairwise distinct and tilts nonnegative.
#[derive(Debug, Clone, Default)]
pub struct MirrorModulation<R: Real> {
    pub tones: std::collections::BTreeMap<String, Tone<R>>,
}

impl<R: Real> MirrorModulation<R> {
    pub fn new(tones: impl IntoIterator<Item = (String, Tone<R>)>) -> Self {
        MirrorModulation { tones: tones.into_iter().collect() }
    }

    fn validate(&self, model: &StagedModel<R>) -> Result<(), MeterError> {
        let mut freqs: Vec<R> = Vec::new();
        for (tag, tone) in &self.tones {
            if model.spec.mirror(tag).is_none() {
                return Err(MeterError::NoSuchMirror(tag.clone()));
            }
            if tone.tilt < R::zero() {
                return Err(MeterError::NegativeTilt(tone.tilt.to_f64().unwrap_or(f64::NAN)));
            }
            if freqs.contains(&tone.frequency) {
                return Err(MeterError::DuplicateFrequency(tone.frequency.to_f64().unwrap_or(f64::NAN)));
            }
            freqs.push(tone.frequency);
        }
        Ok(())
    }
}

/// Quad-cell time series. Samples whose instantaneous post-selection weight
/// collapses are listed in `degenerate` and carry NaN in `values`.
#[derive(Debug, Clone)]
pub struct QuadCellSeries<R: Real> {
    pub times: Vec<R>,
    pub values: Vec<R>,
    pub degenerate: Vec<usize>,
}

/// Exact Gaussian-pointer quad-cell signal for the given selection and
/// mirror modulations over the sample grid `times`.
pub fn quad_cell_series<R: Real>(
    model: &StagedModel<R>,
    sel: &SelectionPair<R>,
    mods: &MirrorModulation<R>,
    times: &[R],
) -> Result<QuadCellSeries<R>, MeterError> {
    mods.validate(model)?;
    // Fail fast on orthogonal selections.
    let tsv = TwoStateVector::new(model, sel)?;
    tsv.require_overlap(0)?;
    let paths = post_selected_paths(model, sel)?;

    // Per path, the tones it picks up (a tone acts where the path crosses the
    // mirror's input arm).
    let tones: Vec<Tone<R>> = mods.tones.values().copied().collect();
    let tags: Vec<&String> = mods.tones.keys().collect();
    let incidence: Vec<Vec<usize>> = paths
        .iter()
        .map(|(arms, _)| {
            tags.iter()
                .enumerate()
                .filter(|(_, tag)| {
                    let mirror = model.spec.mirror(tag).expect("validated tag");
                    arms.iter().any(|a| *a == mirror.inputs[0])
                })
                .map(|(j, _)| j)
                .collect()
        })
        .collect();

    let sigma = R::of(POINTER_WIDTH);
    let eight = R::of(8.0);
    let half = R::of(0.5);
    let tau = R::TAU();
    let mut values = Vec::with_capacity(times.len());
    let mut degenerate = Vec::new();

    for (ti, &t) in times.iter().enumerate() {
        let d: Vec<R> = incidence
            .iter()
            .map(|tone_ids| {
                tone_ids
                    .iter()
                    .map(|&j| tones[j].tilt * (tau * tones[j].frequency * t).sin())
                    .sum()
            })
            .collect();
        let mut num = R::zero();
        let mut den = R::zero();
        for (p, (_, ap)) in paths.iter().enumerate() {
            for (q, (_, aq)) in paths.iter().enumerate() {
                let w = (ap.conj() * *aq).re;
                let diff = d[p] - d[q];
                let overlap = (-(diff * diff) / (eight * sigma * sigma)).exp();
                num += w * half * (d[p] + d[q]) * overlap;
                den += w * overlap;
            }
        }
        if den.abs() < R::of(DEGENERATE_DENOMINATOR) {
            degenerate.push(ti);
            values.push(R::nan());
        } else {
            values.push(num / den);
        }
    }

    Ok(QuadCellSeries { times: times.to_vec(), values, degenerate })
}

/// First-order prediction of the quad-cell signal from weak values:
/// `<x>(t) ~ sum_j delta_j sin(2 pi f_j t) Re (P_{arm_j})_w` with `arm_j` the
/// arm feeding mirror `j`.
pub fn linear_response_series<R: Real>(
    model: &StagedModel<R>,
    sel: &SelectionPair<R>,
    mods: &MirrorModulation<R>,
    times: &[R],
) -> Result<Vec<R>, MeterError> {
    mods.validate(model)?;
    let tsv = TwoStateVector::new(model, sel)?;
    let mut terms: Vec<(R, R, R)> = Vec::new(); // (tilt, frequency, Re w)
    for (tag, tone) in &mods.tones {
        let arm = model.spec.mirror(tag).expect("validated tag").inputs[0].clone();
        let set = ArmSet::resolve(model, &[arm])?;
        let w = tsv.weak_value(&set)?;
        terms.push((tone.tilt, tone.frequency, w.re));
    }
    let tau = R::TAU();
    Ok(times
        .iter()
        .map(|&t| {
            terms
                .iter()
                .map(|&(tilt, f, wre)| tilt * (tau * f * t).sin() * wre)
                .sum()
        })
        .collect())
}

/// A path's arm sequence and its amplitude conditioned on the post-selection.
type WeightedPath<R> = (Vec<crate::circuit::ArmLabel>, crate::scalar::C<R>);

/// Path amplitudes into the post-selection: every source-to-terminal path,
/// weighted by the conjugated post amplitude on its terminal arm.
fn post_selected_paths<R: Real>(
    model: &StagedModel<R>,
    sel: &SelectionPair<R>,
) -> Result<Vec<WeightedPath<R>>, MeterError> {
    let post = sel.post.state();
    post.require_unit()?;
    let pre_vec = sel.pre.to_vector(model.live_at(0), 0)?;
    let src_idx = model.index_at(0, model.source_arm()).expect("source live");
    // Paths start on the source arm; scale by the pre amplitude there.
    let pre_amp = pre_vec[src_idx];
    let mut out = Vec::new();
    for (arm, amp) in &post.amplitudes {
        if amp.norm_sqr() == R::zero() {
            continue;
        }
        for rec in model.paths_to(arm)? {
            out.push((rec.arms, amp.conj() * rec.amplitude * pre_amp));
        }
    }
    Ok(out)
}
