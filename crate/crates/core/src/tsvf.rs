//! Two-state-vector engine: forward and backward evolved states, weak values
//! of arm-set projectors, and ABL probabilities for projective partitions.
//!
//! A pre- and post-selected photon at stage boundary `k` is described by the
//! pair `(psi_k, phi_k)`: the pre-selected state evolved forward through the
//! first `k` stages and the post-selection evolved backward through the rest.
//! The weak value of the projector onto an arm set `S` is
//!
//! ```text
//! (P_S)_w = <phi_k| P_S |psi_k> / <phi_k|psi_k>
//! ```
//!
//! and the ABL probability of finding the photon in member `j` of a
//! projective partition `{P_m}` is `|<phi|P_j|psi>|^2 / sum_m |<phi|P_m|psi>|^2`.

use std::collections::{BTreeMap, BTreeSet};

use ndarray::Array1;
use thiserror::Error;

use crate::circuit::{ArmLabel, StagedModel};
use crate::scalar::{Real, C};

/// Pre/post pairs with `|<phi|psi>|` below this are treated as orthogonal and
/// every weak-value-type query on them is a hard error.
pub const ORTHOGONALITY_EPS: f64 = 1e-12;

/// Norm threshold for "unit norm" preconditions.
const UNIT_NORM_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TsvfError {
    #[error("state refers to arm `{arm}` which is not live at boundary {boundary}")]
    DimensionMismatch { arm: ArmLabel, boundary: usize },
    #[error("state norm is {norm}, expected 1")]
    NotUnitNorm { norm: f64 },
    #[error("pre- and post-selection are orthogonal (|<phi|psi>| = {overlap:e}); weak value undefined")]
    UndefinedWeakValue { overlap: f64 },
    #[error("stage boundary {0} out of range")]
    StageOutOfRange(usize),
    #[error("arm `{arm}` is not live at boundary {boundary}")]
    ArmNotLive { arm: ArmLabel, boundary: usize },
    #[error("no stage boundary has all requested arms simultaneously live")]
    NoCommonBoundary,
    #[error("partition members must all sit at the same stage boundary")]
    MixedPartitionStages,
    #[error("partition members overlap on arm `{0}`")]
    OverlappingPartition(ArmLabel),
    #[error("partition does not cover arm `{0}`")]
    IncompletePartition(ArmLabel),
    #[error("empty partition")]
    EmptyPartition,
    #[error("outcome index {index} out of range for a partition of {len} members")]
    OutcomeOutOfRange { index: usize, len: usize },
    #[error("conditioned state has zero norm")]
    ZeroNormState,
}

/// Complex amplitude per arm label at a fixed stage boundary.
///
/// Absent labels carry amplitude zero. Norm may be below 1 for conditioned
/// states; operations that divide by it check first.
#[derive(Debug, Clone, PartialEq)]
pub struct PathState<R: Real> {
    pub amplitudes: BTreeMap<ArmLabel, C<R>>,
}

impl<R: Real> PathState<R> {
    pub fn new() -> Self {
        PathState { amplitudes: BTreeMap::new() }
    }

    /// Unit amplitude on a single arm.
    pub fn unit(arm: impl Into<ArmLabel>) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(arm.into(), C::new(R::one(), R::zero()));
        PathState { amplitudes }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (ArmLabel, C<R>)>) -> Self {
        PathState { amplitudes: pairs.into_iter().collect() }
    }

    pub fn amplitude(&self, arm: &str) -> C<R> {
        self.amplitudes.get(arm).copied().unwrap_or_else(|| C::new(R::zero(), R::zero()))
    }

    pub fn norm_sqr(&self) -> R {
        self.amplitudes.values().map(|z| z.norm_sqr()).sum()
    }

    pub fn norm(&self) -> R {
        self.norm_sqr().sqrt()
    }

    /// `<self|other>` with the convention that the left side is conjugated.
    pub fn inner(&self, other: &Self) -> C<R> {
        self.amplitudes
            .iter()
            .map(|(arm, a)| a.conj() * other.amplitude(arm))
            .sum()
    }

    /// `<self| P_arms |other>`: the inner product restricted to an arm set.
    pub fn inner_on(&self, other: &Self, arms: &BTreeSet<ArmLabel>) -> C<R> {
        arms.iter()
            .map(|arm| self.amplitude(arm).conj() * other.amplitude(arm))
            .sum()
    }

    /// Dense vector in the order of `labels`; errors if the state holds an
    /// amplitude for a label outside that space.
    pub fn to_vector(&self, labels: &[ArmLabel], boundary: usize) -> Result<Array1<C<R>>, TsvfError> {
        for arm in self.amplitudes.keys() {
            if !labels.iter().any(|l| l == arm) {
                return Err(TsvfError::DimensionMismatch { arm: arm.clone(), boundary });
            }
        }
        Ok(Array1::from_iter(labels.iter().map(|l| self.amplitude(l))))
    }

    pub fn from_vector(labels: &[ArmLabel], v: &Array1<C<R>>) -> Self {
        PathState {
            amplitudes: labels.iter().cloned().zip(v.iter().copied()).collect(),
        }
    }

    pub(crate) fn require_unit(&self) -> Result<(), TsvfError> {
        let norm = self.norm();
        let tol = R::of(UNIT_NORM_TOL);
        if (norm - R::one()).abs() > tol {
            return Err(TsvfError::NotUnitNorm { norm: norm.to_f64().unwrap_or(f64::NAN) });
        }
        Ok(())
    }
}

impl<R: Real> Default for PathState<R> {
    fn default() -> Self {
        Self::new()
    }
}

/// Post-selection: a detector arm at the final boundary, or an explicit state.
#[derive(Debug, Clone, PartialEq)]
pub enum PostSelection<R: Real> {
    Detector(ArmLabel),
    State(PathState<R>),
}

impl<R: Real> PostSelection<R> {
    pub fn state(&self) -> PathState<R> {
        match self {
            PostSelection::Detector(arm) => PathState::unit(arm.clone()),
            PostSelection::State(s) => s.clone(),
        }
    }
}

/// Pre-selected source state plus post-selected detection.
#[derive(Debug, Clone, PartialEq)]
pub struct SelectionPair<R: Real> {
    pub pre: PathState<R>,
    pub post: PostSelection<R>,
}

impl<R: Real> SelectionPair<R> {
    /// Unit source amplitude, post-selected on the model's primary detector.
    pub fn canonical(model: &StagedModel<R>) -> Self {
        SelectionPair {
            pre: PathState::unit(model.source_arm().clone()),
            post: PostSelection::Detector(model.detect_arm().clone()),
        }
    }
}

/// A set of arm labels at a fixed stage boundary; the projector `P` zeroes
/// every amplitude outside the set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ArmSet {
    pub stage: usize,
    pub arms: BTreeSet<ArmLabel>,
}

impl ArmSet {
    pub fn new(stage: usize, arms: impl IntoIterator<Item = impl Into<ArmLabel>>) -> Self {
        ArmSet { stage, arms: arms.into_iter().map(Into::into).collect() }
    }

    /// Place the labels at the earliest boundary where all are live.
    pub fn resolve<R: Real>(
        model: &StagedModel<R>,
        arms: &[impl AsRef<str>],
    ) -> Result<Self, TsvfError> {
        let refs: Vec<&str> = arms.iter().map(AsRef::as_ref).collect();
        let stage = model
            .earliest_boundary_with(&refs)
            .ok_or(TsvfError::NoCommonBoundary)?;
        Ok(ArmSet::new(stage, refs))
    }

    fn check<R: Real>(&self, model: &StagedModel<R>) -> Result<(), TsvfError> {
        if self.stage >= model.boundaries.len() {
            return Err(TsvfError::StageOutOfRange(self.stage));
        }
        for arm in &self.arms {
            if model.index_at(self.stage, arm).is_none() {
                return Err(TsvfError::ArmNotLive { arm: arm.clone(), boundary: self.stage });
            }
        }
        Ok(())
    }
}

/// Forward-evolved states at every boundary: entry `k` is `U_k ... U_1 |pre>`.
pub fn forward_states<R: Real>(
    model: &StagedModel<R>,
    pre: &PathState<R>,
) -> Result<Vec<PathState<R>>, TsvfError> {
    pre.require_unit()?;
    let v = pre.to_vector(model.live_at(0), 0)?;
    let states = model.propagate(v);
    Ok(states
        .into_iter()
        .enumerate()
        .map(|(k, v)| PathState::from_vector(model.live_at(k), &v))
        .collect())
}

/// Backward-evolved states at every boundary: entry `k` is
/// `U_{k+1}^† ... U_N^† |post>`.
pub fn backward_states<R: Real>(
    model: &StagedModel<R>,
    post: &PostSelection<R>,
) -> Result<Vec<PathState<R>>, TsvfError> {
    let n = model.num_stages();
    let state = post.state();
    state.require_unit()?;
    let v = state.to_vector(model.live_at(n), n)?;
    let states = model.propagate_back(v);
    Ok(states
        .into_iter()
        .enumerate()
        .map(|(k, v)| PathState::from_vector(model.live_at(k), &v))
        .collect())
}

/// The two-state vector of a selection: forward and backward states at every
/// boundary, computed once and queried many times.
#[derive(Debug, Clone)]
pub struct TwoStateVector<R: Real> {
    pub forward: Vec<PathState<R>>,
    pub backward: Vec<PathState<R>>,
}

impl<R: Real> TwoStateVector<R> {
    pub fn new(model: &StagedModel<R>, sel: &SelectionPair<R>) -> Result<Self, TsvfError> {
        Ok(TwoStateVector {
            forward: forward_states(model, &sel.pre)?,
            backward: backward_states(model, &sel.post)?,
        })
    }

    /// `<phi_k|psi_k>`; stage-independent up to rounding.
    pub fn overlap_at(&self, boundary: usize) -> Result<C<R>, TsvfError> {
        if boundary >= self.forward.len() {
            return Err(TsvfError::StageOutOfRange(boundary));
        }
        Ok(self.backward[boundary].inner(&self.forward[boundary]))
    }

    /// `<phi_k|psi_k>`, erroring if the pair is orthogonal (below
    /// [`ORTHOGONALITY_EPS`]); everything conditioned on the selection is
    /// undefined there.
    pub fn require_overlap(&self, boundary: usize) -> Result<C<R>, TsvfError> {
        let overlap = self.overlap_at(boundary)?;
        if overlap.norm() < R::of(ORTHOGONALITY_EPS) {
            return Err(TsvfError::UndefinedWeakValue {
                overlap: overlap.norm().to_f64().unwrap_or(0.0),
            });
        }
        Ok(overlap)
    }

    pub fn weak_value(&self, arms: &ArmSet) -> Result<C<R>, TsvfError> {
        let overlap = self.require_overlap(arms.stage)?;
        let num = self.backward[arms.stage].inner_on(&self.forward[arms.stage], &arms.arms);
        Ok(num / overlap)
    }

    /// ABL probabilities of every member of a projective partition.
    pub fn abl_probabilities(
        &self,
        model: &StagedModel<R>,
        partition: &[ArmSet],
    ) -> Result<Vec<R>, TsvfError> {
        let stage = check_partition(model, partition)?;
        self.require_overlap(stage)?;
        let phi = &self.backward[stage];
        let psi = &self.forward[stage];
        let weights: Vec<R> = partition
            .iter()
            .map(|set| phi.inner_on(psi, &set.arms).norm_sqr())
            .collect();
        let total: R = weights.iter().copied().sum();
        if total <= R::zero() {
            return Err(TsvfError::ZeroNormState);
        }
        Ok(weights.into_iter().map(|w| w / total).collect())
    }
}

/// Partition sanity: same stage everywhere, pairwise disjoint, covering the
/// stage's live arms exactly. Returns the common stage.
fn check_partition<R: Real>(model: &StagedModel<R>, partition: &[ArmSet]) -> Result<usize, TsvfError> {
    if partition.is_empty() {
        return Err(TsvfError::EmptyPartition);
    }
    let stage = partition[0].stage;
    let mut seen: BTreeSet<ArmLabel> = BTreeSet::new();
    for set in partition {
        if set.stage != stage {
            return Err(TsvfError::MixedPartitionStages);
        }
        set.check(model)?;
        for arm in &set.arms {
            if !seen.insert(arm.clone()) {
                return Err(TsvfError::OverlappingPartition(arm.clone()));
            }
        }
    }
    for arm in model.live_at(stage) {
        if !seen.contains(arm) {
            return Err(TsvfError::IncompletePartition(arm.clone()));
        }
    }
    Ok(stage)
}

/// Weak value of the projector onto `arms` for the given selection.
pub fn weak_value<R: Real>(
    model: &StagedModel<R>,
    sel: &SelectionPair<R>,
    arms: &ArmSet,
) -> Result<C<R>, TsvfError> {
    arms.check(model)?;
    TwoStateVector::new(model, sel)?.weak_value(arms)
}

/// ABL probability of outcome `outcome` for an intermediate projective
/// measurement over `partition`.
pub fn abl_probability<R: Real>(
    model: &StagedModel<R>,
    sel: &SelectionPair<R>,
    partition: &[ArmSet],
    outcome: usize,
) -> Result<R, TsvfError> {
    if outcome >= partition.len() {
        return Err(TsvfError::OutcomeOutOfRange { index: outcome, len: partition.len() });
    }
    let probs = TwoStateVector::new(model, sel)?.abl_probabilities(model, partition)?;
    Ok(probs[outcome])
}

/// ABL certainty test for finding the photon in `arms`: `Some(1)` if the
/// probability is 1 within 1e-10, `Some(0)` if it is 0 within 1e-10,
/// otherwise `None`.
pub fn certainty_check<R: Real>(
    model: &StagedModel<R>,
    sel: &SelectionPair<R>,
    arms: &ArmSet,
) -> Result<Option<u8>, TsvfError> {
    arms.check(model)?;
    let complement: BTreeSet<ArmLabel> = model
        .live_at(arms.stage)
        .iter()
        .filter(|a| !arms.arms.contains(*a))
        .cloned()
        .collect();
    let partition = vec![arms.clone(), ArmSet { stage: arms.stage, arms: complement }];
    let p = abl_probability(model, sel, &partition, 0)?;
    let tol = R::of(1e-10);
    if (p - R::one()).abs() <= tol {
        Ok(Some(1))
    } else if p.abs() <= tol {
        Ok(Some(0))
    } else {
        Ok(None)
    }
}

/// Weak value directly from a state pair: `<phi|P_arms|psi> / <phi|psi>`.
///
/// This is the stage-local primitive behind [`weak_value`]; property suites
/// drive it with synthetic states in arbitrary dimensions.
pub fn weak_value_from_states<R: Real>(
    phi: &PathState<R>,
    psi: &PathState<R>,
    arms: &BTreeSet<ArmLabel>,
) -> Result<C<R>, TsvfError> {
    let overlap = phi.inner(psi);
    if overlap.norm() < R::of(ORTHOGONALITY_EPS) {
        return Err(TsvfError::UndefinedWeakValue { overlap: overlap.norm().to_f64().unwrap_or(0.0) });
    }
    Ok(phi.inner_on(psi, arms) / overlap)
}

/// ABL probability directly from a state pair over an explicit label space.
pub fn abl_from_states<R: Real>(
    phi: &PathState<R>,
    psi: &PathState<R>,
    partition: &[BTreeSet<ArmLabel>],
    live: &BTreeSet<ArmLabel>,
    outcome: usize,
) -> Result<R, TsvfError> {
    if partition.is_empty() {
        return Err(TsvfError::EmptyPartition);
    }
    if outcome >= partition.len() {
        return Err(TsvfError::OutcomeOutOfRange { index: outcome, len: partition.len() });
    }
    let mut seen: BTreeSet<ArmLabel> = BTreeSet::new();
    for set in partition {
        for arm in set {
            if !seen.insert(arm.clone()) {
                return Err(TsvfError::OverlappingPartition(arm.clone()));
            }
        }
    }
    for arm in live {
        if !seen.contains(arm) {
            return Err(TsvfError::IncompletePartition(arm.clone()));
        }
    }
    let overlap = phi.inner(psi);
    if overlap.norm() < R::of(ORTHOGONALITY_EPS) {
        return Err(TsvfError::UndefinedWeakValue { overlap: overlap.norm().to_f64().unwrap_or(0.0) });
    }
    let weights: Vec<R> = partition.iter().map(|set| phi.inner_on(psi, set).norm_sqr()).collect();
    let total: R = weights.iter().copied().sum();
    if total <= R::zero() {
        return Err(TsvfError::ZeroNormState);
    }
    Ok(weights[outcome] / total)
}

/// Distance between states up to one overall phase:
/// `min over gamma of ||a - e^{i gamma} b||`.
pub fn phase_distance<R: Real>(a: &PathState<R>, b: &PathState<R>) -> R {
    let cross = a.inner(b).norm();
    let two = R::of(2.0);
    let d2 = a.norm_sqr() + b.norm_sqr() - two * cross;
    if d2 < R::zero() {
        R::zero()
    } else {
        d2.sqrt()
    }
}
