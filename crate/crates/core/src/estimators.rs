//! Point estimators of `ω` from a measurement record.
//!
//! * [`mle`]: global maximizer of the log-likelihood by grid scan and local
//!   golden-section refinement. The likelihood of long records has many
//!   local maxima, so gradient methods alone are not enough.
//! * [`fourier_estimate`]: peak of the power spectrum for records on a
//!   uniform time grid.
//! * [`bayes_mean`]: mean of the exact grid posterior under a uniform prior.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::belief::{GridPosterior, DEFAULT_GRID_NODES};
use crate::error::{Error, Result};
use crate::model::{DecayTime, Outcome, Record};
use crate::optim::golden_section_min;

/// Points in the coarse log-likelihood scan.
pub const MLE_GRID_POINTS: usize = 10_000;

/// Local maxima carried between refinement stages of the multi-scale search.
const MLE_CANDIDATES: usize = 24;

/// Growth of the time cutoff between stages.
const MLE_STAGE_GROWTH: f64 = 8.0;

const UNIFORM_GRID_RTOL: f64 = 1e-12;

/// Which estimator produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    Mle,
    Fourier,
    BayesMean,
    /// Mean of the adaptive controller's own posterior.
    PosteriorMean,
}

impl EstimatorKind {
    pub fn name(self) -> &'static str {
        match self {
            EstimatorKind::Mle => "mle",
            EstimatorKind::Fourier => "fourier",
            EstimatorKind::BayesMean => "bayes-mean",
            EstimatorKind::PosteriorMean => "posterior-mean",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [Self::Mle, Self::Fourier, Self::BayesMean, Self::PosteriorMean]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

/// Optional by-products of an estimator.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Diagnostics {
    pub log_likelihood: Option<f64>,
    pub peak_bin: Option<usize>,
}

/// A point estimate in [0,1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub omega_hat: f64,
    pub method: EstimatorKind,
    pub diagnostics: Diagnostics,
}

impl Estimate {
    pub fn new(omega_hat: f64, method: EstimatorKind) -> Self {
        Self { omega_hat: omega_hat.clamp(0.0, 1.0), method, diagnostics: Diagnostics::default() }
    }
}

/// Measurements sharing a time and outcome, with the fringe contrast at
/// that time. Grouping makes the log-likelihood independent of record order
/// and cheap for repeated times.
#[derive(Debug, Clone, Copy)]
struct Term {
    time: f64,
    /// `1 − 2d`
    sign: f64,
    contrast: f64,
    count: f64,
}

fn group_terms(record: &Record<f64>, eta: f64, t2: DecayTime<f64>) -> Vec<Term> {
    let mut counts: BTreeMap<(u64, u8), usize> = BTreeMap::new();
    for m in record {
        *counts.entry((m.time.to_bits(), m.outcome.bit())).or_default() += 1;
    }
    counts
        .into_iter()
        .map(|((bits, d), count)| {
            let time = f64::from_bits(bits);
            Term {
                time,
                sign: -Outcome::from_bit(d).sign::<f64>(),
                contrast: eta * t2.decay(time),
                count: count as f64,
            }
        })
        .collect()
}

fn log_likelihood_terms(terms: &[Term], omega: f64) -> f64 {
    terms
        .iter()
        .map(|t| t.count * (0.5 + 0.5 * t.sign * t.contrast * (omega * t.time).cos()).ln())
        .sum()
}

/// `Σ_k log Pr(d_k | ω, t_k, η, T₂)`.
pub fn log_likelihood(record: &Record<f64>, omega: f64, eta: f64, t2: DecayTime<f64>) -> f64 {
    log_likelihood_terms(&group_terms(record, eta, t2), omega)
}

/// Log-likelihood on the evenly spaced points `start + i·step`, using a
/// rotation recurrence for `cos(ωt)` that is re-anchored every 64 points.
fn scan_log_likelihood(terms: &[Term], start: f64, step: f64, len: usize) -> Vec<f64> {
    const ANCHOR: usize = 64;
    let mut acc = vec![0.0; len];
    for term in terms {
        let (rot_s, rot_c) = (step * term.time).sin_cos();
        let half = 0.5 * term.sign * term.contrast;
        let mut i = 0;
        while i < len {
            let (mut s, mut c) = ((start + i as f64 * step) * term.time).sin_cos();
            let end = (i + ANCHOR).min(len);
            for a in &mut acc[i..end] {
                *a += term.count * (0.5 + half * c).max(0.0).ln();
                let next_c = c * rot_c - s * rot_s;
                s = s * rot_c + c * rot_s;
                c = next_c;
            }
            i = end;
        }
    }
    acc
}

/// Indices of local maxima of `values`, best first, ties toward lower index.
fn local_maxima(values: &[f64], keep: usize) -> Vec<usize> {
    let n = values.len();
    let mut peaks: Vec<usize> = (0..n)
        .filter(|&i| {
            let v = values[i];
            v.is_finite()
                && (i == 0 || v >= values[i - 1])
                && (i + 1 == n || v > values[i + 1])
        })
        .collect();
    peaks.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    peaks.truncate(keep);
    peaks
}

/// Maximum-likelihood estimate of `ω` over (0,1).
///
/// The log-likelihood is scanned on [`MLE_GRID_POINTS`] interior points and
/// the best point is refined by golden-section search within two grid cells.
/// That grid resolves every fringe when the longest time is below about
/// half the point count. Longer records are handled in stages: the scan
/// uses only the short times, the best local maxima are kept, and each later
/// stage adds times up to eight times longer on local grids four points per
/// radian of the longest included time. Ties go to the smaller `ω`.
pub fn mle(record: &Record<f64>, eta: f64, t2: DecayTime<f64>) -> Result<Estimate> {
    if record.is_empty() {
        return Err(Error::EstimationFailure("maximum likelihood needs at least one measurement".into()));
    }
    let terms = group_terms(record, eta, t2);
    let t_max = terms.iter().map(|t| t.time).fold(0.0, f64::max);
    let step = 1.0 / (MLE_GRID_POINTS + 1) as f64;
    let mut cutoff = 0.5 / step;

    let stage_terms = |cutoff: f64| -> Vec<Term> { terms.iter().copied().filter(|t| t.time <= cutoff).collect() };

    let coarse_terms = stage_terms(cutoff);
    let coarse = scan_log_likelihood(&coarse_terms, step, step, MLE_GRID_POINTS);
    let (lo_bound, hi_bound) = (step, MLE_GRID_POINTS as f64 * step);

    // Each candidate is (ω, local grid step) after the last stage.
    let mut candidates: Vec<(f64, f64)> = if t_max <= cutoff {
        local_maxima(&coarse, 1).into_iter().map(|i| (step * (i + 1) as f64, step)).collect()
    } else {
        local_maxima(&coarse, MLE_CANDIDATES).into_iter().map(|i| (step * (i + 1) as f64, step)).collect()
    };
    if candidates.is_empty() {
        return Err(Error::EstimationFailure("log-likelihood is -inf everywhere".into()));
    }

    while t_max > cutoff {
        let previous = cutoff;
        cutoff *= MLE_STAGE_GROWTH;
        let included = if t_max <= cutoff { terms.clone() } else { stage_terms(cutoff) };
        let fine_step = 0.25 / cutoff.min(t_max);
        let half_width = 2.0 * PI / previous;
        let mut scored: Vec<(f64, f64)> = Vec::new();
        for &(center, _) in &candidates {
            let lo = (center - half_width).max(lo_bound);
            let hi = (center + half_width).min(hi_bound);
            let len = ((hi - lo) / fine_step).floor() as usize + 1;
            let values = scan_log_likelihood(&included, lo, fine_step, len);
            for i in local_maxima(&values, MLE_CANDIDATES) {
                scored.push((lo + i as f64 * fine_step, values[i]));
            }
        }
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.total_cmp(&b.0)));
        scored.dedup_by(|a, b| (a.0 - b.0).abs() < 0.5 * fine_step);
        let keep = if t_max <= cutoff { 1 } else { MLE_CANDIDATES };
        candidates = scored.into_iter().take(keep).map(|(w, _)| (w, fine_step)).collect();
        if candidates.is_empty() {
            return Err(Error::EstimationFailure("log-likelihood is -inf everywhere".into()));
        }
    }

    let (center, cell) = candidates[0];
    let node_value = log_likelihood_terms(&terms, center);
    if !node_value.is_finite() {
        return Err(Error::EstimationFailure("log-likelihood is -inf everywhere".into()));
    }
    let lo = (center - 2.0 * cell).max(lo_bound);
    let hi = (center + 2.0 * cell).min(hi_bound);
    let refined = golden_section_min(|w| -log_likelihood_terms(&terms, w), lo, hi, 1e-3 * cell.min(1e-6));
    let refined_value = log_likelihood_terms(&terms, refined);
    let (omega_hat, value) = if refined_value > node_value { (refined, refined_value) } else { (center, node_value) };
    let mut est = Estimate::new(omega_hat, EstimatorKind::Mle);
    est.diagnostics.log_likelihood = Some(value);
    Ok(est)
}

/// Closed-form MLE for `N` repetitions at `t = π`: `(2/π)·arccos(√(n₀/N))`.
pub fn fixed_time_mle(record: &Record<f64>) -> Result<f64> {
    if record.is_empty() {
        return Err(Error::EstimationFailure("empty record".into()));
    }
    let zeros = record.iter().filter(|m| m.outcome == Outcome::Zero).count();
    Ok(2.0 / PI * (zeros as f64 / record.len() as f64).sqrt().acos())
}

/// Spectral estimate for records taken at `t_k = kΔt`, `k = 1..N`.
///
/// Subtracts the mean outcome, takes the DFT, picks the largest bin among the
/// positive frequencies, and refines it by a parabola through the log-power of
/// the peak and its neighbours. Bin `b` maps to `ω = 2πb / (NΔt)`.
pub fn fourier_estimate(record: &Record<f64>) -> Result<Estimate> {
    let n = record.len();
    if n < 3 {
        return Err(Error::Precondition("Fourier estimate needs at least three measurements".into()));
    }
    let dt = record.measurements()[0].time;
    if !(dt > 0.0) {
        return Err(Error::Precondition("Fourier estimate needs a positive time step".into()));
    }
    for (k, m) in record.iter().enumerate() {
        let expected = (k + 1) as f64 * dt;
        if (m.time - expected).abs() > UNIFORM_GRID_RTOL * expected {
            return Err(Error::Precondition(format!(
                "times are not a uniform grid t_k = k*dt: t_{} = {} (expected {expected})",
                k + 1,
                m.time
            )));
        }
    }
    let mean = record.iter().map(|m| m.outcome.bit() as f64).sum::<f64>() / n as f64;
    let mut buf: Vec<Complex<f64>> = record.iter().map(|m| Complex::new(m.outcome.bit() as f64 - mean, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let power: Vec<f64> = buf.iter().map(|z| z.norm_sqr()).collect();

    let top = n / 2;
    let (peak, peak_power) = (1..=top).fold((0, 0.0), |best, b| if power[b] > best.1 { (b, power[b]) } else { best });
    let total: f64 = power.iter().sum();
    if peak == 0 || !(peak_power > 1e-12 * total.max(f64::MIN_POSITIVE)) {
        return Err(Error::EstimationFailure("no spectral peak above DC".into()));
    }
    // Real input: P[n−b] = P[b], so the neighbours of any bin are well defined.
    let left = power[peak - 1];
    let right = power[(peak + 1) % n];
    let offset = if left > 0.0 && right > 0.0 {
        let (a, b, c) = (left.ln(), peak_power.ln(), right.ln());
        let denom = a - 2.0 * b + c;
        if denom < 0.0 {
            (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
        } else {
            0.0
        }
    } else {
        0.0
    };
    let frequency = (peak as f64 + offset) / (n as f64 * dt);
    let mut est = Estimate::new(2.0 * PI * frequency, EstimatorKind::Fourier);
    est.diagnostics.peak_bin = Some(peak);
    Ok(est)
}

/// Posterior mean under a uniform prior, on the default grid.
pub fn bayes_mean(record: &Record<f64>, eta: f64, t2: DecayTime<f64>) -> Result<Estimate> {
    if record.is_empty() {
        return Ok(Estimate::new(0.5, EstimatorKind::BayesMean));
    }
    let terms = group_terms(record, eta, t2);
    let n = DEFAULT_GRID_NODES;
    let step = 1.0 / n as f64;
    let log_weight = scan_log_likelihood(&terms, 0.5 * step, step, n);
    let nodes = (0..n).map(|i| (i as f64 + 0.5) * step).collect();
    let post = GridPosterior::from_log_weights(nodes, &log_weight)
        .map_err(|e| Error::EstimationFailure(format!("posterior mean: {e}")))?;
    let (mean, _) = post.moments();
    Ok(Estimate::new(mean, EstimatorKind::BayesMean))
}
