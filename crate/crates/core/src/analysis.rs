//! Spectral analysis of quad-cell series and power-law fitting of trace
//! sweeps.
//!
//! The spectrum is a direct discrete Fourier transform (no windowing); with
//! bin-aligned modulation frequencies the peaks are leakage-free, which keeps
//! windowing out of the scaling claims. Normalization: bin `k` holds
//! `|X_k|^2 dt / N`, so total spectral power equals `sum |x_n|^2 dt`
//! (Parseval).

use thiserror::Error;

use crate::circuit::{ArmLabel, StagedModel};
use crate::meters::{attach_markers, trace_magnitude, MarkerSet, MeterError};
use crate::scalar::{phase, Real, C};
use crate::tsvf::SelectionPair;

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("time step must be positive and finite")]
    BadTimeStep,
    #[error("non-uniform sample grid at index {index} (step {step}, expected {expected})")]
    NonUniformGrid { index: usize, step: f64, expected: f64 },
    #[error("frequency {f} outside [0, {nyquist}] (Nyquist)")]
    FrequencyOutOfRange { f: f64, nyquist: f64 },
    #[error("power-law fit needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("power-law fit needs strictly positive inputs (point {index}: ({x}, {y}))")]
    NonPositivePoint { index: usize, x: f64, y: f64 },
    #[error("power-law fit needs at least two distinct abscissae")]
    DegenerateAbscissae,
    #[error("sweep strengths must be strictly increasing and positive")]
    BadSweepOrder,
    #[error(transparent)]
    Meter(#[from] MeterError),
}

/// Two-sided power spectrum on a uniform frequency grid.
#[derive(Debug, Clone)]
pub struct Spectrum<R: Real> {
    /// Bin spacing `1 / (N dt)` in cycles per unit time.
    pub bin_width: R,
    pub dt: R,
    /// `power[k] = |X_k|^2 dt / N` for `k = 0..N`.
    pub power: Vec<R>,
}

impl<R: Real> Spectrum<R> {
    pub fn len(&self) -> usize {
        self.power.len()
    }

    pub fn is_empty(&self) -> bool {
        self.power.is_empty()
    }

    pub fn frequency(&self, bin: usize) -> R {
        R::from_usize(bin).unwrap() * self.bin_width
    }

    pub fn nyquist(&self) -> R {
        R::of(0.5) / self.dt
    }

    pub fn total_power(&self) -> R {
        self.power.iter().copied().sum()
    }
}

/// Direct DFT power spectrum of a uniformly sampled real series.
pub fn power_spectrum<R: Real>(samples: &[R], dt: R) -> Result<Spectrum<R>, AnalysisError> {
    let n = samples.len();
    if n < 2 {
        return Err(AnalysisError::TooFewSamples { need: 2, got: n });
    }
    if dt <= R::zero() || !dt.is_finite() {
        return Err(AnalysisError::BadTimeStep);
    }
    let rn = R::from_usize(n).unwrap();
    // Exact twiddle table: index (k*j) mod n avoids accumulating phase error.
    let twiddles: Vec<C<R>> = (0..n)
        .map(|j| phase(-R::TAU() * R::from_usize(j).unwrap() / rn))
        .collect();
    let scale = dt / rn;
    let power = (0..n)
        .map(|k| {
            let mut acc = C::new(R::zero(), R::zero());
            for (j, &x) in samples.iter().enumerate() {
                acc += twiddles[(k * j) % n] * x;
            }
            acc.norm_sqr() * scale
        })
        .collect();
    Ok(Spectrum { bin_width: R::one() / (rn * dt), dt, power })
}

/// As [`power_spectrum`], taking an explicit `(t, x)` grid and validating its
/// uniformity.
pub fn power_spectrum_sampled<R: Real>(times: &[R], values: &[R]) -> Result<Spectrum<R>, AnalysisError> {
    let n = times.len().min(values.len());
    if n < 2 {
        return Err(AnalysisError::TooFewSamples { need: 2, got: n });
    }
    let dt = times[1] - times[0];
    if dt <= R::zero() || !dt.is_finite() {
        return Err(AnalysisError::BadTimeStep);
    }
    let tol = R::of(1e-9) * dt;
    for i in 1..n {
        let step = times[i] - times[i - 1];
        if (step - dt).abs() > tol {
            return Err(AnalysisError::NonUniformGrid {
                index: i,
                step: step.to_f64().unwrap_or(f64::NAN),
                expected: dt.to_f64().unwrap_or(f64::NAN),
            });
        }
    }
    power_spectrum(&values[..n], dt)
}

/// Power of the bin nearest `f`; `f` must lie within `[0, Nyquist]`.
pub fn peak_power<R: Real>(spec: &Spectrum<R>, f: R) -> Result<R, AnalysisError> {
    if f < R::zero() || f > spec.nyquist() || !f.is_finite() {
        return Err(AnalysisError::FrequencyOutOfRange {
            f: f.to_f64().unwrap_or(f64::NAN),
            nyquist: spec.nyquist().to_f64().unwrap_or(f64::NAN),
        });
    }
    let bin = (f / spec.bin_width).round().to_usize().unwrap_or(0).min(spec.len() - 1);
    Ok(spec.power[bin])
}

/// Least-squares power law `y = a x^p` fitted on `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerLawFit<R: Real> {
    pub exponent: R,
    pub prefactor: R,
    pub r_squared: R,
}

/// Fit `(x, y)` points (all strictly positive, at least three) to a power law.
pub fn fit_power_law<R: Real>(points: &[(R, R)]) -> Result<PowerLawFit<R>, AnalysisError> {
    if points.len() < 3 {
        return Err(AnalysisError::TooFewPoints(points.len()));
    }
    let mut lx = Vec::with_capacity(points.len());
    let mut ly = Vec::with_capacity(points.len());
    for (i, &(x, y)) in points.iter().enumerate() {
        if x <= R::zero() || y <= R::zero() || !x.is_finite() || !y.is_finite() {
            return Err(AnalysisError::NonPositivePoint {
                index: i,
                x: x.to_f64().unwrap_or(f64::NAN),
                y: y.to_f64().unwrap_or(f64::NAN),
            });
        }
        lx.push(x.ln());
        ly.push(y.ln());
    }
    let n = R::from_usize(points.len()).unwrap();
    let mx = lx.iter().copied().sum::<R>() / n;
    let my = ly.iter().copied().sum::<R>() / n;
    let mut sxx = R::zero();
    let mut sxy = R::zero();
    let mut syy = R::zero();
    for (x, y) in lx.iter().zip(&ly) {
        let dx = *x - mx;
        let dy = *y - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == R::zero() {
        return Err(AnalysisError::DegenerateAbscissae);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res = syy - slope * sxy; // residual sum of squares of the fit
    let r_squared = if syy == R::zero() {
        R::one()
    } else {
        R::one() - (ss_res / syy).max(R::zero())
    };
    Ok(PowerLawFit { exponent: slope, prefactor: intercept.exp(), r_squared })
}

/// Sweep of one arm: `(strength, trace)` points and their power-law fit.
#[derive(Debug, Clone)]
pub struct ArmSweep<R: Real> {
    pub arm: ArmLabel,
    pub points: Vec<(R, R)>,
    pub fit: PowerLawFit<R>,
}

/// Full leakage sweep: per-arm traces and fitted exponents, plus the
/// dark-to-bright trace ratio per strength when a ratio pair is requested.
#[derive(Debug, Clone)]
pub struct SweepResult<R: Real> {
    pub arms: Vec<ArmSweep<R>>,
    pub ratio_arms: Option<(ArmLabel, ArmLabel)>,
    pub ratio: Vec<(R, R)>,
}

/// Attach identical markers of strength `eps` to every arm in `arms`, evolve,
/// record each marker's post-selected trace magnitude, and repeat over the
/// sweep. `epsilons` must be strictly increasing and positive.
pub fn leakage_sweep<R: Real>(
    model: &StagedModel<R>,
    sel: &SelectionPair<R>,
    arms: &[ArmLabel],
    epsilons: &[R],
    ratio_arms: Option<(&str, &str)>,
) -> Result<SweepResult<R>, AnalysisError> {
    if epsilons.len() < 3 {
        return Err(AnalysisError::TooFewPoints(epsilons.len()));
    }
    let increasing = epsilons.windows(2).all(|w| w[0] < w[1]);
    if !increasing || epsilons[0] <= R::zero() {
        return Err(AnalysisError::BadSweepOrder);
    }

    let mut per_arm: Vec<Vec<(R, R)>> = vec![Vec::with_capacity(epsilons.len()); arms.len()];
    let mut ratio = Vec::new();
    for &eps in epsilons {
        let pairs: Vec<(ArmLabel, R)> = arms.iter().map(|a| (a.clone(), eps)).collect();
        let markers = MarkerSet::from_arms(model, &pairs)?;
        let joint = attach_markers(model, markers)?.evolve(&sel.pre)?;
        let mut traces = Vec::with_capacity(arms.len());
        for (i, points) in per_arm.iter_mut().enumerate() {
            let t = trace_magnitude(&joint, &sel.post, i)?;
            points.push((eps, t));
            traces.push(t);
        }
        if let Some((dark, bright)) = ratio_arms {
            let di = arms.iter().position(|a| a == dark);
            let bi = arms.iter().position(|a| a == bright);
            if let (Some(di), Some(bi)) = (di, bi) {
                ratio.push((eps, traces[di] / traces[bi]));
            }
        }
    }

    let mut sweeps = Vec::with_capacity(arms.len());
    for (arm, points) in arms.iter().zip(per_arm) {
        let fit = fit_power_law(&points)?;
        sweeps.push(ArmSweep { arm: arm.clone(), points, fit });
    }
    Ok(SweepResult {
        arms: sweeps,
        ratio_arms: ratio_arms.map(|(d, b)| (d.to_string(), b.to_string())),
        ratio,
    })
}
