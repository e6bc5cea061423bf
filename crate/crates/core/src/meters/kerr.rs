//! Kerr cross-phase probe: a second photon runs through its own balanced
//! interferometer whose in-medium branch crosses the Kerr cell. A system
//! photon occupying arm `a` imprints phase `phi * w_a` on that branch, where
//! the overlap weight `w_a` interpolates between a probe path centered
//! between the arms (equal weights) and one hugging a single arm (one-sided).
//!
//! Readout: the reference branch is biased to quadrature (`pi/2` by default)
//! and the two branches recombine on a 50/50 splitter. For a pure relative
//! phase `theta` the output imbalance is `sin(theta)`, so the inferred shift
//! is `asin` of the measured imbalance. For small `phi` the shift approaches
//! `phi * Re[(sum_a w_a P_a)_w]`.

use ndarray::{Array1, Array2};

use crate::circuit::{ArmLabel, StagedModel};
use crate::scalar::{phase, Real, C};
use crate::tsvf::{ArmSet, PathState, PostSelection, SelectionPair, TwoStateVector};

use super::{project_on_post, resolve_arms, MeterError, POST_SELECTION_UNDERFLOW};

/// Kerr probe configuration: per-arm overlap weights in `[0, 1]` (at least
/// one nonzero), cross-phase `|phi| <= pi`, and the probe interferometer
/// bias.
#[derive(Debug, Clone, PartialEq)]
pub struct KerrProbeConfig<R: Real> {
    pub weights: std::collections::BTreeMap<ArmLabel, R>,
    pub cross_phase: R,
    pub bias: R,
}

impl<R: Real> KerrProbeConfig<R> {
    /// Quadrature-bias configuration (bias = pi/2, maximal linear sensitivity).
    pub fn new(weights: impl IntoIterator<Item = (ArmLabel, R)>, cross_phase: R) -> Self {
        KerrProbeConfig {
            weights: weights.into_iter().collect(),
            cross_phase,
            bias: R::FRAC_PI_2(),
        }
    }

    fn validate(&self, model: &StagedModel<R>) -> Result<(), MeterError> {
        if !self.weights.values().any(|w| *w != R::zero()) {
            return Err(MeterError::NoNonzeroWeight);
        }
        for (arm, w) in &self.weights {
            if *w < R::zero() || *w > R::one() {
                return Err(MeterError::WeightOutOfRange(w.to_f64().unwrap_or(f64::NAN)));
            }
            if model.earliest_boundary_with(&[arm.as_str()]).is_none() {
                return Err(MeterError::NoSuchArm(arm.clone()));
            }
        }
        if self.cross_phase.abs() > R::PI() {
            return Err(MeterError::PhaseOutOfRange(self.cross_phase.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(())
    }
}

/// System photon tensored with the two probe branches at the final boundary.
/// Rows index arms; column 0 is the in-medium branch, column 1 the reference.
#[derive(Debug, Clone)]
pub struct ProbeJointState<R: Real> {
    pub arm_labels: Vec<ArmLabel>,
    pub amps: Array2<C<R>>,
}

/// Exact two-particle evolution: the probe starts in an equal superposition of
/// its branches and the in-medium branch picks up `phi * w_a` wherever the
/// system photon occupies a weighted arm.
pub fn evolve_with_probe<R: Real>(
    model: &StagedModel<R>,
    pre: &PathState<R>,
    cfg: &KerrProbeConfig<R>,
) -> Result<ProbeJointState<R>, MeterError> {
    cfg.validate(model)?;
    pre.require_unit()?;

    let pairs: Vec<(ArmLabel, R)> = cfg.weights.iter().map(|(a, w)| (a.clone(), *w)).collect();
    let couplings = resolve_arms(model, &pairs)?;

    let n = model.dim();
    let mut amps: Array2<C<R>> = Array2::zeros((n, 2));
    let init = pre.to_vector(model.live_at(0), 0)?;
    let inv_sqrt2 = R::of(1.0) / R::of(2.0).sqrt();
    for (row, z) in init.iter().enumerate() {
        amps[[row, 0]] = *z * inv_sqrt2;
        amps[[row, 1]] = *z * inv_sqrt2;
    }

    for boundary in 0..=model.num_stages() {
        for (stage, arm, weight) in &couplings {
            if *stage != boundary || *weight == R::zero() {
                continue;
            }
            let row = model.index_at(boundary, arm).expect("validated coupling arm");
            amps[[row, 0]] *= phase(cfg.cross_phase * *weight);
        }
        if boundary < model.num_stages() {
            amps = model.stages[boundary].matrix.dot(&amps);
        }
    }

    Ok(ProbeJointState { arm_labels: model.final_boundary().to_vec(), amps })
}

/// What the probe interferometer reports after post-selecting the system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KerrOutcome<R: Real> {
    pub intensity_plus: R,
    pub intensity_minus: R,
    pub imbalance: R,
    pub inferred_shift: R,
    /// `Re[(sum_a w_a P_a)_w]`, the first-order shift per unit cross-phase.
    pub weak_value: R,
    /// `phi * weak_value`: the small-phi prediction for `inferred_shift`.
    pub predicted_shift: R,
    pub detection_probability: R,
}

/// Run the probe experiment: exact joint evolution, post-selection on the
/// detector, recombination at the configured bias, and the shift inferred
/// from the output intensity imbalance.
pub fn kerr_probe_shift<R: Real>(
    model: &StagedModel<R>,
    sel: &SelectionPair<R>,
    cfg: &KerrProbeConfig<R>,
) -> Result<KerrOutcome<R>, MeterError> {
    let joint = evolve_with_probe(model, &sel.pre, cfg)?;
    let v = project_on_post(&joint.arm_labels, &joint.amps, &sel.post, model.num_stages())?;
    let (m, r) = (v[0], v[1]);

    let half = R::of(0.5);
    let r_biased = r * phase(cfg.bias);
    let plus = m + r_biased;
    let minus = m - r_biased;
    let intensity_plus = plus.norm_sqr() * half;
    let intensity_minus = minus.norm_sqr() * half;
    let total = intensity_plus + intensity_minus;
    if total < R::of(POST_SELECTION_UNDERFLOW) {
        return Err(MeterError::PostSelectionUnderflow);
    }
    let imbalance = (intensity_plus - intensity_minus) / total;
    let clamped = imbalance.max(-R::one()).min(R::one());
    let inferred_shift = clamped.asin();

    let tsv = TwoStateVector::new(model, sel)?;
    let mut weak_value = R::zero();
    for (arm, w) in &cfg.weights {
        if *w == R::zero() {
            continue;
        }
        let set = ArmSet::resolve(model, std::slice::from_ref(arm))?;
        weak_value += *w * tsv.weak_value(&set)?.re;
    }

    Ok(KerrOutcome {
        intensity_plus,
        intensity_minus,
        imbalance,
        inferred_shift,
        weak_value,
        predicted_shift: cfg.cross_phase * weak_value,
        detection_probability: total,
    })
}

/// Purity of the probe's reduced state, `Tr rho^2`.
///
/// With post-selection the probe branches stay mutually coherent (a
/// superposition of phase-shifted evolutions: purity 1); without it the
/// system arms which-path the probe into a mixture (purity below 1 once the
/// acquired phases differ).
pub fn probe_purity<R: Real>(
    joint: &ProbeJointState<R>,
    post: Option<&PostSelection<R>>,
) -> Result<R, MeterError> {
    let rho = match post {
        Some(post) => {
            let v = project_on_post(&joint.arm_labels, &joint.amps, post, usize::MAX)?;
            density(&[v])?
        }
        None => {
            let rows: Vec<Array1<C<R>>> =
                (0..joint.amps.nrows()).map(|i| joint.amps.row(i).to_owned()).collect();
            density(&rows)?
        }
    };
    let mut purity = R::zero();
    for i in 0..2 {
        for j in 0..2 {
            purity += (rho[[i, j]] * rho[[j, i]]).re;
        }
    }
    Ok(purity)
}

fn density<R: Real>(branches: &[Array1<C<R>>]) -> Result<Array2<C<R>>, MeterError> {
    let mut rho: Array2<C<R>> = Array2::zeros((2, 2));
    let mut trace = R::zero();
    for v in branches {
        for i in 0..2 {
            for j in 0..2 {
                rho[[i, j]] += v[i] * v[j].conj();
            }
        }
        trace += v.iter().map(|z| z.norm_sqr()).sum();
    }
    if trace < R::of(POST_SELECTION_UNDERFLOW) {
        return Err(MeterError::PostSelectionUnderflow);
    }
    let inv = R::one() / trace;
    Ok(rho.mapv(|z| z * inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::parse_circuit;

    const BS5050: &str = "source arm=a\nbeamsplitter BS in=a,vac out=x,y theta=0.7853981633974483 phi=0.0\ndetect arm=x\n";

    #[test]
    fn config_validation() {
        let model = parse_circuit::<f64>(BS5050).unwrap().compile().unwrap();
        let cfg = KerrProbeConfig::new([("x".to_string(), 0.0)], 1e-3);
        assert!(matches!(cfg.validate(&model), Err(MeterError::NoNonzeroWeight)));
        let cfg = KerrProbeConfig::new([("x".to_string(), 1.5)], 1e-3);
        assert!(matches!(cfg.validate(&model), Err(MeterError::WeightOutOfRange(_))));
        let cfg = KerrProbeConfig::new([("x".to_string(), 1.0)], 4.0);
        assert!(matches!(cfg.validate(&model), Err(MeterError::PhaseOutOfRange(_))));
        let cfg = KerrProbeConfig::new([("zz".to_string(), 1.0)], 1e-3);
        assert!(matches!(cfg.validate(&model), Err(MeterError::NoSuchArm(_))));
    }

    #[test]
    fn single_path_probe_reads_full_phase() {
        // Post-selecting x makes (P_x)_w = 1: the probe sees exactly phi.
        let model = parse_circuit::<f64>(BS5050).unwrap().compile().unwrap();
        let sel = SelectionPair::canonical(&model);
        for phi in [1e-3, 0.1, 0.5] {
            let cfg = KerrProbeConfig::new([("x".to_string(), 1.0)], phi);
            let out = kerr_probe_shift(&model, &sel, &cfg).unwrap();
            assert!((out.inferred_shift - phi).abs() < 1e-12, "phi={phi}");
            assert!((out.weak_value - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_phase_probe_is_balanced() {
        let model = parse_circuit::<f64>(BS5050).unwrap().compile().unwrap();
        let sel = SelectionPair::canonical(&model);
        let cfg = KerrProbeConfig::new([("x".to_string(), 1.0)], 0.0);
        let out = kerr_probe_shift(&model, &sel, &cfg).unwrap();
        assert!((out.intensity_plus - out.intensity_minus).abs() < 1e-15);
        // Quadrature bias is cos(pi/2) away from exact zero in floats.
        assert!(out.inferred_shift.abs() < 1e-15);
    }

    #[test]
    fn conditional_probe_is_pure_marginal_is_mixed() {
        let model = parse_circuit::<f64>(BS5050).unwrap().compile().unwrap();
        let cfg = KerrProbeConfig::new([("x".to_string(), 1.0)], 0.8);
        let joint = evolve_with_probe(&model, &PathState::unit("a"), &cfg).unwrap();
        let cond = probe_purity(&joint, Some(&PostSelection::Detector("x".into()))).unwrap();
        assert!((cond - 1.0).abs() < 1e-12);
        let marginal = probe_purity(&joint, None).unwrap();
        assert!(marginal < 1.0 - 1e-3, "marginal purity {marginal}");
    }
}
