//! Ancilla markers: one qubit per marked arm, rotated `|0> -> cos e |0> +
//! sin e |1>` when the photon passes. The post-selected weight left in the
//! `|1>` branch is the operational "weak trace" of the photon on that arm.

use ndarray::{Array1, Array2};

use crate::circuit::{ArmLabel, StagedModel};
use crate::scalar::{Real, C};
use crate::tsvf::{PathState, PostSelection};

use super::{project_on_post, resolve_arms, MeterError, POST_SELECTION_UNDERFLOW};

/// Ancilla register sizes beyond this would allocate > 2^20 amplitudes per arm.
pub const MAX_MARKERS: usize = 20;

/// One weak coupling: an ancilla qubit attached at `(stage, arm)` with
/// dimensionless rotation angle `strength` in `[0, pi/2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Marker<R: Real> {
    pub stage: usize,
    pub arm: ArmLabel,
    pub strength: R,
}

/// An ordered set of markers; the ancilla register is indexed in this order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarkerSet<R: Real> {
    pub markers: Vec<Marker<R>>,
}

impl<R: Real> MarkerSet<R> {
    pub fn new(markers: Vec<Marker<R>>) -> Self {
        MarkerSet { markers }
    }

    /// Build from `(arm, strength)` pairs, attaching each marker at the
    /// earliest boundary where its arm is live. For pass-through arms every
    /// boundary in the live interval gives identical results.
    pub fn from_arms(model: &StagedModel<R>, pairs: &[(ArmLabel, R)]) -> Result<Self, MeterError> {
        let markers = resolve_arms(model, pairs)?
            .into_iter()
            .map(|(stage, arm, strength)| Marker { stage, arm, strength })
            .collect();
        Ok(MarkerSet { markers })
    }

    pub fn len(&self) -> usize {
        self.markers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.markers.is_empty()
    }

    fn validate(&self, model: &StagedModel<R>) -> Result<(), MeterError> {
        if self.markers.len() > MAX_MARKERS {
            return Err(MeterError::TooManyMarkers(self.markers.len()));
        }
        let half_pi = R::FRAC_PI_2();
        for m in &self.markers {
            if m.strength < R::zero() || m.strength > half_pi {
                return Err(MeterError::StrengthOutOfRange(m.strength.to_f64().unwrap_or(f64::NAN)));
            }
            if m.stage >= model.boundaries.len() || model.index_at(m.stage, &m.arm).is_none() {
                return Err(MeterError::ArmStageMismatch { arm: m.arm.clone(), boundary: m.stage });
            }
        }
        Ok(())
    }
}

/// A circuit with markers attached: evolves photon and ancilla register
/// jointly and exactly.
#[derive(Debug, Clone)]
pub struct MarkedModel<'a, R: Real> {
    pub model: &'a StagedModel<R>,
    pub markers: MarkerSet<R>,
}

/// Validate the marker set against the model and attach it.
pub fn attach_markers<'a, R: Real>(
    model: &'a StagedModel<R>,
    markers: MarkerSet<R>,
) -> Result<MarkedModel<'a, R>, MeterError> {
    markers.validate(model)?;
    Ok(MarkedModel { model, markers })
}

/// Photon-and-ancilla state at the final boundary. Rows index arms, columns
/// index ancilla basis patterns (bit `i` set = marker `i` flipped).
#[derive(Debug, Clone)]
pub struct JointState<R: Real> {
    pub arm_labels: Vec<ArmLabel>,
    pub marker_arms: Vec<ArmLabel>,
    pub amps: Array2<C<R>>,
}

impl<R: Real> JointState<R> {
    pub fn total_norm_sqr(&self) -> R {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    /// Unconditioned probability that marker `i` flipped.
    pub fn flip_probability(&self, index: usize) -> Result<R, MeterError> {
        let k = self.marker_arms.len();
        if index >= k {
            return Err(MeterError::MarkerIndexOutOfRange { index, len: k });
        }
        let bit = 1usize << index;
        let mut p = R::zero();
        for ((_, pat), z) in self.amps.indexed_iter() {
            if pat & bit != 0 {
                p += z.norm_sqr();
            }
        }
        Ok(p)
    }

    /// Probability of the post-selection outcome (ancillas traced out).
    pub fn detection_probability(&self, post: &PostSelection<R>) -> Result<R, MeterError> {
        let boundary = usize::MAX; // final; labels identify the space
        let v = project_on_post(&self.arm_labels, &self.amps, post, boundary)?;
        Ok(v.iter().map(|z| z.norm_sqr()).sum())
    }
}

impl<R: Real> MarkedModel<'_, R> {
    /// Evolve `pre` (photon) tensored with `|0...0>` (ancillas) through all
    /// stages, applying each marker at its boundary. The joint evolution is
    /// unitary: total norm is preserved exactly up to rounding.
    pub fn evolve(&self, pre: &PathState<R>) -> Result<JointState<R>, MeterError> {
        pre.require_unit()?;
        let model = self.model;
        let n = model.dim();
        let k = self.markers.len();
        let anc_dim = 1usize << k;

        let mut amps: Array2<C<R>> = Array2::zeros((n, anc_dim));
        let init = pre.to_vector(model.live_at(0), 0)?;
        for (row, z) in init.iter().enumerate() {
            amps[[row, 0]] = *z;
        }

        for boundary in 0..=model.num_stages() {
            for (i, marker) in self.markers.markers.iter().enumerate() {
                if marker.stage != boundary {
                    continue;
                }
                let row = model
                    .index_at(boundary, &marker.arm)
                    .expect("validated marker arm is live");
                let c = marker.strength.cos();
                let s = marker.strength.sin();
                let bit = 1usize << i;
                for pat in 0..anc_dim {
                    if pat & bit != 0 {
                        continue;
                    }
                    let a0 = amps[[row, pat]];
                    let a1 = amps[[row, pat | bit]];
                    amps[[row, pat]] = a0 * c - a1 * s;
                    amps[[row, pat | bit]] = a0 * s + a1 * c;
                }
            }
            if boundary < model.num_stages() {
                amps = model.stages[boundary].matrix.dot(&amps);
            }
        }

        Ok(JointState {
            arm_labels: model.final_boundary().to_vec(),
            marker_arms: self.markers.markers.iter().map(|m| m.arm.clone()).collect(),
            amps,
        })
    }
}

/// Post-selected trace magnitude of marker `index`: the norm fraction of the
/// detector-conditioned joint state lying in that marker's `|1>` branch.
pub fn trace_magnitude<R: Real>(
    joint: &JointState<R>,
    post: &PostSelection<R>,
    index: usize,
) -> Result<R, MeterError> {
    let k = joint.marker_arms.len();
    if index >= k {
        return Err(MeterError::MarkerIndexOutOfRange { index, len: k });
    }
    let v = conditioned_ancilla(joint, post)?;
    let total: R = v.iter().map(|z| z.norm_sqr()).sum();
    let bit = 1usize << index;
    let flipped: R = v
        .iter()
        .enumerate()
        .filter(|(pat, _)| pat & bit != 0)
        .map(|(_, z)| z.norm_sqr())
        .sum();
    Ok((flipped / total).sqrt())
}

/// Detector-conditioned ancilla-register state (unnormalized); errors on
/// post-selection norm underflow.
pub fn conditioned_ancilla<R: Real>(
    joint: &JointState<R>,
    post: &PostSelection<R>,
) -> Result<Array1<C<R>>, MeterError> {
    let v = project_on_post(&joint.arm_labels, &joint.amps, post, usize::MAX)?;
    let total: R = v.iter().map(|z| z.norm_sqr()).sum();
    if total < R::of(POST_SELECTION_UNDERFLOW) {
        return Err(MeterError::PostSelectionUnderflow);
    }
    Ok(v)
}
