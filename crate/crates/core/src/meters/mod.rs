//! The three coupling models that turn weak values into observable meter
//! records:
//!
//! * [`markers`]: ancilla qubits rotated by a photon passing the marked arm;
//!   the recorded quantity is the post-selected trace magnitude.
//! * [`pointer`]: vibrating mirrors writing onto a transverse Gaussian
//!   pointer; the recorded quantity is the quad-cell mean displacement.
//! * [`kerr`]: a second (probe) photon acquiring a cross-phase where its
//!   path overlaps the marked arms; the recorded quantity is the probe
//!   interferometer's output imbalance.
//!
//! All couplings are exact joint-state evolutions; no perturbative expansion
//! is performed anywhere in this module.

pub mod kerr;
pub mod markers;
pub mod pointer;

pub use kerr::{evolve_with_probe, kerr_probe_shift, probe_purity, KerrOutcome, KerrProbeConfig, ProbeJointState};
pub use markers::{attach_markers, trace_magnitude, JointState, MarkedModel, Marker, MarkerSet};
pub use pointer::{linear_response_series, quad_cell_series, MirrorModulation, QuadCellSeries, Tone};

use ndarray::{Array1, Array2};
use thiserror::Error;

use crate::circuit::{ArmLabel, CircuitError, StagedModel};
use crate::scalar::{Real, C};
use crate::tsvf::{PostSelection, TsvfError};

/// Conditioned norms below this are reported as post-selection underflow.
pub const POST_SELECTION_UNDERFLOW: f64 = 1e-300;

#[derive(Debug, Error)]
pub enum MeterError {
    #[error("arm `{arm}` is not live at stage boundary {boundary}")]
    ArmStageMismatch { arm: ArmLabel, boundary: usize },
    #[error("arm `{0}` does not exist in the model")]
    NoSuchArm(ArmLabel),
    #[error("marker strength {0} outside [0, pi/2]")]
    StrengthOutOfRange(f64),
    #[error("{0} markers exceed the supported maximum of {max}", max = markers::MAX_MARKERS)]
    TooManyMarkers(usize),
    #[error("marker index {index} out of range ({len} markers attached)")]
    MarkerIndexOutOfRange { index: usize, len: usize },
    #[error("post-selection norm underflow (conditioned probability below {limit:e})", limit = POST_SELECTION_UNDERFLOW)]
    PostSelectionUnderflow,
    #[error("no mirror named `{0}` in the circuit")]
    NoSuchMirror(String),
    #[error("modulation frequencies must be pairwise distinct (repeated {0})")]
    DuplicateFrequency(f64),
    #[error("tilt amplitude must be nonnegative, got {0}")]
    NegativeTilt(f64),
    #[error("Kerr probe needs at least one nonzero overlap weight")]
    NoNonzeroWeight,
    #[error("overlap weight {0} outside [0, 1]")]
    WeightOutOfRange(f64),
    #[error("cross-phase {0} outside [-pi, pi]")]
    PhaseOutOfRange(f64),
    #[error(transparent)]
    Tsvf(#[from] TsvfError),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Project the rows of a joint amplitude array onto a post-selection at the
/// final boundary, leaving the meter degrees of freedom: returns
/// `sum_a conj(post_a) * amps[a, :]`.
pub(crate) fn project_on_post<R: Real>(
    labels: &[ArmLabel],
    amps: &Array2<C<R>>,
    post: &PostSelection<R>,
    boundary: usize,
) -> Result<Array1<C<R>>, MeterError> {
    let state = post.state();
    state.require_unit()?;
    let mut out = Array1::zeros(amps.ncols());
    for (arm, amp) in &state.amplitudes {
        let row = labels
            .iter()
            .position(|l| l == arm)
            .ok_or_else(|| TsvfError::DimensionMismatch { arm: arm.clone(), boundary })?;
        let w = amp.conj();
        for (o, v) in out.iter_mut().zip(amps.row(row).iter()) {
            *o += w * *v;
        }
    }
    Ok(out)
}

/// Resolve `(arm, value)` pairs to `(boundary, arm, value)` triples at each
/// arm's earliest live boundary.
pub(crate) fn resolve_arms<R: Real, T: Copy>(
    model: &StagedModel<R>,
    pairs: &[(ArmLabel, T)],
) -> Result<Vec<(usize, ArmLabel, T)>, MeterError> {
    pairs
        .iter()
        .map(|(arm, v)| {
            let stage = model
                .earliest_boundary_with(&[arm.as_str()])
                .ok_or_else(|| MeterError::NoSuchArm(arm.clone()))?;
            Ok((stage, arm.clone(), *v))
        })
        .collect()
}
