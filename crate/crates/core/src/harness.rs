//! Monte Carlo Bayes risk of strategy/estimator pairs.
//!
//! Trial `i` draws `ω* ~ U(0,1)` and then its outcomes from the stream
//! `(seed, i)`, so every strategy in a plan sees the same frequencies and the
//! result does not depend on how trials are scheduled across threads. Each
//! trial is simulated once up to the largest `N`; the shorter records are its
//! prefixes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::EstimatorKind;
use crate::model::{
    crb, crb_t2, crb_t2_sharp, crb_ultimate, draw_omega, info_theoretic_floor, trial_stream, DecayTime, Record,
    TrueModel,
};
use crate::strategies::{apply_estimator, simulate, Simulation, StrategyKind, StrategySpec};

/// Largest tolerated fraction of failed trials in a cell.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// `N ∈ {16, 20, …, 124}`.
pub fn default_n_values() -> Vec<usize> {
    (16..=124).step_by(4).collect()
}

/// A strategy with its estimator and a display name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StrategyBinding {
    pub name: String,
    pub kind: StrategyKind,
    pub estimator: EstimatorKind,
}

impl StrategyBinding {
    /// Binding with the strategy's default estimator.
    pub fn new(name: impl Into<String>, kind: StrategyKind) -> Self {
        Self { name: name.into(), kind, estimator: kind.default_estimator() }
    }

    pub fn with_estimator(mut self, estimator: EstimatorKind) -> Self {
        self.estimator = estimator;
        self
    }
}

/// A sweep over strategies and measurement counts at fixed `η`, `T₂`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub strategies: Vec<StrategyBinding>,
    pub n_values: Vec<usize>,
    pub trials: usize,
    pub eta: f64,
    pub t2: DecayTime<f64>,
    pub seed: u64,
    /// Run trials on the rayon pool. Results are identical either way.
    pub parallel: bool,
}

impl ExperimentPlan {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidSpec("trials must be at least 1".into()));
        }
        if self.n_values.is_empty() {
            return Err(Error::InvalidSpec("n_values must not be empty".into()));
        }
        if self.n_values.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidSpec("n_values must be strictly increasing".into()));
        }
        if self.strategies.is_empty() {
            return Err(Error::InvalidSpec("plan has no strategies".into()));
        }
        TrueModel::new(0.5, self.eta, self.t2).map_err(|e| Error::InvalidSpec(e.to_string()))?;
        for b in &self.strategies {
            b.kind.validate()?;
            b.kind.check_estimator(b.estimator)?;
        }
        Ok(())
    }
}

/// Summary of squared errors over trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskEstimate {
    pub mean: f64,
    /// Sample standard deviation over `√trials`.
    pub stderr: f64,
    pub median: f64,
    /// Trials that produced an estimate.
    pub trials: usize,
    pub failures: usize,
}

impl RiskEstimate {
    pub fn from_errors(errors: &[f64], failures: usize) -> Self {
        let n = errors.len();
        if n == 0 {
            return Self { mean: f64::NAN, stderr: f64::NAN, median: f64::NAN, trials: 0, failures };
        }
        let mean = errors.iter().sum::<f64>() / n as f64;
        let stderr = if n > 1 {
            let ss: f64 = errors.iter().map(|e| (e - mean).powi(2)).sum();
            (ss / (n - 1) as f64).sqrt() / (n as f64).sqrt()
        } else {
            0.0
        };
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let median = if n % 2 == 1 { sorted[n / 2] } else { 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]) };
        Self { mean, stderr, median, trials: n, failures }
    }

    pub fn failure_rate(&self) -> f64 {
        let total = self.trials + self.failures;
        if total == 0 {
            0.0
        } else {
            self.failures as f64 / total as f64
        }
    }

    pub fn failed(&self) -> bool {
        self.failure_rate() > MAX_FAILURE_RATE
    }
}

/// One `(strategy, N)` entry of a risk table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub strategy: String,
    pub kind: StrategyKind,
    pub estimator: EstimatorKind,
    pub n: usize,
    pub risk: RiskEstimate,
    /// Cramér-Rao bound for the times used. With noise it is the Bayes
    /// average of the per-frequency bound over the trials.
    pub crb: f64,
    pub crb_sharp: f64,
    pub crb_ultimate: f64,
    pub floor: f64,
    /// Median over trials of the longest time in the record.
    pub max_time: f64,
    /// Too many trials failed.
    pub failed: bool,
    /// `risk_mean < crb − 2·stderr`. Biased estimators can do this.
    pub below_crb: bool,
    /// `risk_mean < crb_ultimate − 2·stderr`.
    pub below_ultimate: bool,
}

/// Risk table for one plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskCurve {
    pub eta: f64,
    pub t2: DecayTime<f64>,
    pub trials: usize,
    pub seed: u64,
    pub cells: Vec<Cell>,
}

impl RiskCurve {
    pub fn cells_for<'a>(&'a self, strategy: &'a str) -> impl Iterator<Item = &'a Cell> + 'a {
        self.cells.iter().filter(move |c| c.strategy == strategy)
    }

    pub fn any_failed(&self) -> bool {
        self.cells.iter().any(|c| c.failed)
    }
}

/// Per-trial results at each checkpoint.
struct TrialRow {
    errors: Vec<Option<f64>>,
    crb: Vec<f64>,
    crb_sharp: Vec<f64>,
    max_time: Vec<f64>,
}

fn bounds(times: &[f64], model: &TrueModel<f64>) -> (f64, f64) {
    if model.is_noiseless() {
        let b = crb(times);
        (b, b)
    } else {
        (crb_t2(times, model.omega, model.eta, model.t2), crb_t2_sharp(times, model.eta, model.t2))
    }
}

fn run_trial_row<F>(kind: &StrategyKind, n_values: &[usize], eta: f64, t2: DecayTime<f64>, seed: u64, trial: usize, estimate: &F) -> TrialRow
where
    F: Fn(&Simulation, usize, &TrueModel<f64>) -> Result<f64> + Sync,
{
    let mut rng = trial_stream(seed, trial as u64);
    let omega = draw_omega(&mut rng);
    let model = TrueModel::new(omega, eta, t2).expect("plan parameters are validated");
    let n_max = *n_values.last().expect("non-empty n_values");
    let mut row = TrialRow {
        errors: Vec::with_capacity(n_values.len()),
        crb: Vec::with_capacity(n_values.len()),
        crb_sharp: Vec::with_capacity(n_values.len()),
        max_time: Vec::with_capacity(n_values.len()),
    };
    let sim = simulate(kind, n_max, &model, &mut rng);
    for &n in n_values {
        let (err, b, s, tm) = match &sim {
            Ok(sim) if sim.record.len() >= n && (sim.error.is_none() || sim.estimates.len() > n) => {
                let times = sim.record.times();
                let times = &times[..n];
                let (b, s) = bounds(times, &model);
                let tm = times.iter().copied().fold(0.0, f64::max);
                let err = estimate(sim, n, &model).ok().map(|w| (w - omega).powi(2));
                (err, b, s, tm)
            }
            _ => (None, f64::NAN, f64::NAN, f64::NAN),
        };
        row.errors.push(err);
        row.crb.push(b);
        row.crb_sharp.push(s);
        row.max_time.push(tm);
    }
    row
}

#[allow(clippy::too_many_arguments)]
fn collect_rows<F>(kind: &StrategyKind, n_values: &[usize], eta: f64, t2: DecayTime<f64>, trials: usize, seed: u64, parallel: bool, estimate: &F) -> Vec<TrialRow>
where
    F: Fn(&Simulation, usize, &TrueModel<f64>) -> Result<f64> + Sync,
{
    let run = |i| run_trial_row(kind, n_values, eta, t2, seed, i, estimate);
    if parallel {
        (0..trials).into_par_iter().map(run).collect()
    } else {
        (0..trials).map(run).collect()
    }
}

fn mean_finite(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, count) = values.filter(|v| v.is_finite()).fold((0.0, 0usize), |(s, c), v| (s + v, c + 1));
    if count == 0 {
        f64::NAN
    } else {
        sum / count as f64
    }
}

fn median_finite(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.filter(|v| v.is_finite()).collect();
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn readout(kind: StrategyKind, estimator: EstimatorKind) -> impl Fn(&Simulation, usize, &TrueModel<f64>) -> Result<f64> + Sync {
    move |sim: &Simulation, n: usize, model: &TrueModel<f64>| {
        if kind.is_adaptive() {
            sim.estimates.get(n).copied().ok_or_else(|| Error::EstimationFailure("adaptive run stopped early".into()))
        } else {
            apply_estimator(estimator, &sim.record.prefix(n), model.eta, model.t2).map(|e| e.omega_hat)
        }
    }
}

fn sweep<F>(binding: &StrategyBinding, plan: &ExperimentPlan, estimate: &F) -> Vec<Cell>
where
    F: Fn(&Simulation, usize, &TrueModel<f64>) -> Result<f64> + Sync,
{
    let rows = collect_rows(&binding.kind, &plan.n_values, plan.eta, plan.t2, plan.trials, plan.seed, plan.parallel, estimate);
    plan.n_values
        .iter()
        .enumerate()
        .map(|(j, &n)| {
            let errors: Vec<f64> = rows.iter().filter_map(|r| r.errors[j]).collect();
            let risk = RiskEstimate::from_errors(&errors, plan.trials - errors.len());
            let crb_ultimate = crb_ultimate(n, plan.eta, plan.t2).unwrap_or(f64::NAN);
            let crb = mean_finite(rows.iter().map(|r| r.crb[j]));
            let margin = 2.0 * risk.stderr;
            Cell {
                strategy: binding.name.clone(),
                kind: binding.kind,
                estimator: binding.estimator,
                n,
                risk,
                crb,
                crb_sharp: mean_finite(rows.iter().map(|r| r.crb_sharp[j])),
                crb_ultimate,
                floor: info_theoretic_floor(n),
                max_time: median_finite(rows.iter().map(|r| r.max_time[j])),
                failed: risk.failed() || risk.trials == 0,
                below_crb: risk.mean < crb - margin,
                below_ultimate: risk.mean < crb_ultimate - margin,
            }
        })
        .collect()
}

/// Runs every strategy of the plan at every `N`.
///
/// Cells with more than 1% failed trials are marked `failed` rather than
/// dropped; their risk is over the surviving trials only.
pub fn run_plan(plan: &ExperimentPlan) -> Result<RiskCurve> {
    plan.validate()?;
    let cells = plan
        .strategies
        .iter()
        .flat_map(|b| sweep(b, plan, &readout(b.kind, b.estimator)))
        .collect();
    Ok(RiskCurve { eta: plan.eta, t2: plan.t2, trials: plan.trials, seed: plan.seed, cells })
}

fn single_cell_plan(spec: &StrategySpec, estimator: EstimatorKind, eta: f64, t2: DecayTime<f64>, trials: usize, seed: u64) -> ExperimentPlan {
    ExperimentPlan {
        strategies: vec![StrategyBinding { name: spec.kind.label(), kind: spec.kind, estimator }],
        n_values: vec![spec.n],
        trials,
        eta,
        t2,
        seed,
        parallel: true,
    }
}

/// Bayes risk of one strategy/estimator pair at `spec.n`.
///
/// Fails if more than 1% of trials fail.
pub fn estimate_bayes_risk(
    spec: &StrategySpec,
    estimator: EstimatorKind,
    eta: f64,
    t2: DecayTime<f64>,
    trials: usize,
    seed: u64,
) -> Result<RiskEstimate> {
    estimate_bayes_risk_with(spec, eta, t2, trials, seed, readout(spec.kind, estimator), Some(estimator))
}

/// [`estimate_bayes_risk`] with a custom readout `f(simulation, n, true model)`.
pub fn estimate_bayes_risk_with<F>(
    spec: &StrategySpec,
    eta: f64,
    t2: DecayTime<f64>,
    trials: usize,
    seed: u64,
    estimate: F,
    estimator: Option<EstimatorKind>,
) -> Result<RiskEstimate>
where
    F: Fn(&Simulation, usize, &TrueModel<f64>) -> Result<f64> + Sync,
{
    let plan = single_cell_plan(spec, estimator.unwrap_or(spec.kind.default_estimator()), eta, t2, trials, seed);
    plan.validate()?;
    let cell = sweep(&plan.strategies[0], &plan, &estimate).remove(0);
    if cell.failed {
        return Err(Error::EstimationFailure(format!(
            "{} of {} trials failed for {} at N = {}",
            cell.risk.failures, trials, cell.strategy, spec.n
        )));
    }
    Ok(cell.risk)
}

/// Least-squares line `y = slope·x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Ordinary least squares through at least two points with distinct `x`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<Fit> {
    let n = xs.len();
    if n != ys.len() || n < 2 {
        return Err(Error::Precondition("least squares needs at least two paired points".into()));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let syy: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Precondition("least squares needs distinct x values".into()));
    }
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(Fit { slope, intercept: my - slope * mx, r2 })
}

/// Fits `ln(risk)` against `N` for adaptive strategies and against `ln N`
/// for offline ones. Cells with non-positive risk are skipped; at least five
/// must remain.
pub fn fit_decay(curve: &RiskCurve, strategy: &str) -> Result<Fit> {
    let cells: Vec<&Cell> = curve.cells_for(strategy).filter(|c| c.risk.mean > 0.0).collect();
    if cells.len() < 5 {
        return Err(Error::Precondition(format!(
            "fit needs at least 5 cells with positive risk for {strategy}, found {}",
            cells.len()
        )));
    }
    let adaptive = cells[0].kind.is_adaptive();
    let xs: Vec<f64> = cells.iter().map(|c| if adaptive { c.n as f64 } else { (c.n as f64).ln() }).collect();
    let ys: Vec<f64> = cells.iter().map(|c| c.risk.mean.ln()).collect();
    least_squares(&xs, &ys)
}

/// Squared error of the truth, for checking the plumbing.
pub fn oracle_readout(_: &Simulation, _: usize, model: &TrueModel<f64>) -> Result<f64> {
    Ok(model.omega)
}

/// Bound columns recomputed from a record.
pub fn record_bounds(record: &Record<f64>, model: &TrueModel<f64>) -> (f64, f64) {
    bounds(&record.times(), model)
}
