//! Measurement-time strategies: offline schedules and the adaptive Gaussian
//! controller.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::belief::{gauss_moment_match, GaussianBelief, GridPosterior, DEFAULT_GRID_NODES};
use crate::error::{Error, Result};
use crate::estimators::{bayes_mean, fourier_estimate, mle, Estimate, EstimatorKind};
use crate::harness::{estimate_bayes_risk, RiskEstimate};
use crate::model::{sample_outcome, trial_stream, DecayTime, Measurement, Record, TrueModel};

/// Default number of warm-up measurements on the grid posterior.
pub const DEFAULT_WARMUP: usize = 15;

/// Which family of measurement times to use.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum StrategyKind {
    /// `t_k = π`.
    Fixed,
    /// `t_k = kπ`.
    LinearGrid,
    /// `t_k = base^k`.
    Exponential { base: f64 },
    /// Grid warm-up at `t_k = kπ`, then the Gaussian controller.
    AdaptiveGaussian { warmup: usize },
}

impl StrategyKind {
    pub fn validate(&self) -> Result<()> {
        match *self {
            StrategyKind::Exponential { base } if !(base > 1.0 && base.is_finite()) => {
                Err(Error::InvalidSpec(format!("exponential base must be > 1, got {base}")))
            }
            StrategyKind::AdaptiveGaussian { warmup: 0 } => {
                Err(Error::InvalidSpec("adaptive warm-up length must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, StrategyKind::AdaptiveGaussian { .. })
    }

    /// Estimator used when none is given.
    pub fn default_estimator(&self) -> EstimatorKind {
        if self.is_adaptive() {
            EstimatorKind::PosteriorMean
        } else {
            EstimatorKind::Mle
        }
    }

    /// Whether `estimator` can be applied to records from this strategy.
    pub fn check_estimator(&self, estimator: EstimatorKind) -> Result<()> {
        let ok = match (self, estimator) {
            (StrategyKind::AdaptiveGaussian { .. }, e) => e == EstimatorKind::PosteriorMean,
            (_, EstimatorKind::PosteriorMean) => false,
            (StrategyKind::LinearGrid, EstimatorKind::Fourier) => true,
            (_, EstimatorKind::Fourier) => false,
            _ => true,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(format!("estimator {} cannot be used with {}", estimator.name(), self.label())))
        }
    }

    /// Short human-readable label, e.g. `exp(1.125)`.
    pub fn label(&self) -> String {
        match self {
            StrategyKind::Fixed => "fixed".into(),
            StrategyKind::LinearGrid => "linear".into(),
            StrategyKind::Exponential { base } => format!("exp({base})"),
            StrategyKind::AdaptiveGaussian { .. } => "adaptive".into(),
        }
    }
}

/// A strategy with a measurement count.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub n: usize,
}

impl StrategySpec {
    /// `n = 0` is allowed and yields the prior-mean estimate.
    pub fn new(kind: StrategyKind, n: usize) -> Result<Self> {
        kind.validate()?;
        Ok(Self { kind, n })
    }
}

/// Offline measurement times for `k = 1..=n`.
pub fn schedule(spec: &StrategySpec) -> Result<Vec<f64>> {
    offline_times(&spec.kind, spec.n)
}

fn offline_times(kind: &StrategyKind, n: usize) -> Result<Vec<f64>> {
    kind.validate()?;
    Ok(match *kind {
        StrategyKind::Fixed => vec![PI; n],
        StrategyKind::LinearGrid => (1..=n).map(|k| k as f64 * PI).collect(),
        StrategyKind::Exponential { base } => (1..=n).map(|k| base.powi(k as i32)).collect(),
        StrategyKind::AdaptiveGaussian { .. } => {
            return Err(Error::InvalidSpec("adaptive strategies have no offline schedule".into()))
        }
    })
}

/// Belief held by the adaptive controller.
#[derive(Debug, Clone)]
pub enum Phase {
    Warmup(GridPosterior),
    Tracking(GaussianBelief<f64>),
}

/// How the next observation is folded into the belief.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Rule {
    Grid,
    ClosedForm,
    Quadrature,
}

/// Sequential state of the adaptive controller.
#[derive(Debug, Clone)]
pub struct AdaptiveState {
    phase: Phase,
    history: Record<f64>,
    warmup: usize,
}

impl AdaptiveState {
    pub fn new(warmup: usize) -> Result<Self> {
        Self::with_grid(warmup, DEFAULT_GRID_NODES)
    }

    pub fn with_grid(warmup: usize, nodes: usize) -> Result<Self> {
        StrategyKind::AdaptiveGaussian { warmup }.validate()?;
        Ok(Self { phase: Phase::Warmup(GridPosterior::uniform(nodes)?), history: Record::new(), warmup })
    }

    pub fn phase(&self) -> &Phase {
        &self.phase
    }

    pub fn history(&self) -> &Record<f64> {
        &self.history
    }

    pub fn warmup_len(&self) -> usize {
        self.warmup
    }

    /// Posterior mean clamped to [0,1].
    pub fn estimate(&self) -> f64 {
        match &self.phase {
            Phase::Warmup(g) => g.moments().0.clamp(0.0, 1.0),
            Phase::Tracking(b) => b.estimate(),
        }
    }

    pub fn posterior_variance(&self) -> f64 {
        match &self.phase {
            Phase::Warmup(g) => g.moments().1,
            Phase::Tracking(b) => b.sigma2,
        }
    }

    /// Next time and the update rule that goes with it. When the Gaussian
    /// has no valid controller index (its mean is within about `πσ/2` of
    /// zero), the controller steps along the warm-up grid `t = (index)·π` and
    /// updates by quadrature.
    fn plan(&self, eta: f64, t2: DecayTime<f64>) -> (f64, Rule) {
        let grid_step = (self.history.len() + 1) as f64 * PI;
        match &self.phase {
            Phase::Warmup(_) => (grid_step, Rule::Grid),
            Phase::Tracking(b) => match b.controller_index_t2(t2) {
                Some(k) => {
                    let rule = if eta == 1.0 { Rule::ClosedForm } else { Rule::Quadrature };
                    (b.controller_time(k), rule)
                }
                None => (grid_step, Rule::Quadrature),
            },
        }
    }

    /// Folds in a measurement taken at [`next_time`].
    pub fn observe(&mut self, m: Measurement<f64>, eta: f64, t2: DecayTime<f64>) -> Result<()> {
        let (_, rule) = self.plan(eta, t2);
        match (&mut self.phase, rule) {
            (Phase::Warmup(g), _) => g.update_in_place(&m, eta, t2)?,
            (Phase::Tracking(b), Rule::ClosedForm) => *b = b.gauss_update_t2(&m, t2)?,
            (Phase::Tracking(b), _) => *b = gauss_moment_match(b, &m, eta, t2)?,
        }
        self.history.push(m);
        if self.history.len() == self.warmup {
            if let Phase::Warmup(g) = &self.phase {
                let (mean, var) = g.moments();
                self.phase = Phase::Tracking(GaussianBelief::new(mean, var)?);
            }
        }
        Ok(())
    }
}

/// Time of the next adaptive measurement.
pub fn next_time(state: &AdaptiveState, eta: f64, t2: DecayTime<f64>) -> f64 {
    state.plan(eta, t2).0
}

/// Result of one simulated experiment.
#[derive(Debug, Clone)]
pub struct Trial {
    pub record: Record<f64>,
    pub estimate: Estimate,
}

/// Measurements for one trial up to `n`, with the adaptive controller's
/// running estimates (`estimates[j]` after `j` measurements) when adaptive.
///
/// If an adaptive update fails the record stops there and the error is kept;
/// estimates for the measurements already taken stay valid.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub record: Record<f64>,
    pub estimates: Vec<f64>,
    pub error: Option<Error>,
}

/// Runs a strategy against `model`, drawing one uniform per measurement.
pub fn simulate<R: Rng + ?Sized>(kind: &StrategyKind, n: usize, model: &TrueModel<f64>, rng: &mut R) -> Result<Simulation> {
    kind.validate()?;
    let StrategyKind::AdaptiveGaussian { warmup } = *kind else {
        let record = offline_times(kind, n)?
            .into_iter()
            .map(|t| Measurement { outcome: sample_outcome(model, t, rng), time: t })
            .collect();
        return Ok(Simulation { record, estimates: Vec::new(), error: None });
    };
    let mut state = AdaptiveState::new(warmup)?;
    let mut estimates = Vec::with_capacity(n + 1);
    estimates.push(state.estimate());
    for _ in 0..n {
        let t = next_time(&state, model.eta, model.t2);
        let m = Measurement { outcome: sample_outcome(model, t, rng), time: t };
        if let Err(e) = state.observe(m, model.eta, model.t2) {
            return Ok(Simulation { record: state.history, estimates, error: Some(e) });
        }
        estimates.push(state.estimate());
    }
    Ok(Simulation { record: state.history, estimates, error: None })
}

/// Applies an offline estimator; the empty record gives the prior mean.
pub fn apply_estimator(estimator: EstimatorKind, record: &Record<f64>, eta: f64, t2: DecayTime<f64>) -> Result<Estimate> {
    if record.is_empty() {
        return Ok(Estimate::new(0.5, estimator));
    }
    match estimator {
        EstimatorKind::Mle => mle(record, eta, t2),
        EstimatorKind::Fourier => fourier_estimate(record),
        EstimatorKind::BayesMean => bayes_mean(record, eta, t2),
        EstimatorKind::PosteriorMean => {
            Err(Error::InvalidSpec("posterior-mean readout is only available to the adaptive controller".into()))
        }
    }
}

/// One measure-and-estimate experiment.
pub fn run_trial<R: Rng + ?Sized>(
    spec: &StrategySpec,
    estimator: EstimatorKind,
    model: &TrueModel<f64>,
    rng: &mut R,
) -> Result<Trial> {
    spec.kind.check_estimator(estimator)?;
    let sim = simulate(&spec.kind, spec.n, model, rng)?;
    if let Some(e) = sim.error {
        return Err(e);
    }
    let estimate = if spec.kind.is_adaptive() {
        Estimate::new(sim.estimates[spec.n], EstimatorKind::PosteriorMean)
    } else {
        apply_estimator(estimator, &sim.record, model.eta, model.t2)?
    };
    Ok(Trial { record: sim.record, estimate })
}

/// [`run_trial`] on the stream `(seed, 0)`.
pub fn run_trial_seeded(spec: &StrategySpec, estimator: EstimatorKind, model: &TrueModel<f64>, seed: u64) -> Result<Trial> {
    run_trial(spec, estimator, model, &mut trial_stream(seed, 0))
}

/// Outcome of a base search.
#[derive(Debug, Clone)]
pub struct BaseSearch {
    pub base: f64,
    pub risks: Vec<(f64, RiskEstimate)>,
}

/// Minimum trial count for [`optimize_exponential_base`].
pub const MIN_BASE_SEARCH_TRIALS: usize = 1_000;

/// Picks the exponential base with the lowest Monte Carlo Bayes risk of the
/// MLE at `n` measurements. Every base sees the same `ω*` draws. Ties go
/// to the smaller base.
pub fn optimize_exponential_base(
    n: usize,
    eta: f64,
    t2: DecayTime<f64>,
    base_grid: &[f64],
    trials: usize,
    seed: u64,
) -> Result<BaseSearch> {
    if base_grid.is_empty() {
        return Err(Error::Precondition("base grid is empty".into()));
    }
    if let Some(b) = base_grid.iter().find(|&&b| !(b > 1.0 && b < 2.0)) {
        return Err(Error::Precondition(format!("base {b} is outside (1, 2)")));
    }
    if trials < MIN_BASE_SEARCH_TRIALS {
        return Err(Error::Precondition(format!("base search needs at least {MIN_BASE_SEARCH_TRIALS} trials, got {trials}")));
    }
    let mut risks = Vec::with_capacity(base_grid.len());
    for &base in base_grid {
        let spec = StrategySpec::new(StrategyKind::Exponential { base }, n)?;
        risks.push((base, estimate_bayes_risk(&spec, EstimatorKind::Mle, eta, t2, trials, seed)?));
    }
    let best = risks
        .iter()
        .min_by(|a, b| a.1.mean.total_cmp(&b.1.mean).then(a.0.total_cmp(&b.0)))
        .map(|r| r.0)
        .expect("non-empty grid");
    Ok(BaseSearch { base: best, risks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::fixed_time_mle;
    use crate::model::draw_omega;

    fn spec(kind: StrategyKind, n: usize) -> StrategySpec {
        StrategySpec::new(kind, n).unwrap()
    }

    fn adaptive() -> StrategyKind {
        StrategyKind::AdaptiveGaussian { warmup: DEFAULT_WARMUP }
    }

    #[test]
    fn schedule_examples() {
        assert_eq!(schedule(&spec(StrategyKind::Fixed, 3)).unwrap(), vec![PI; 3]);
        assert_eq!(schedule(&spec(StrategyKind::LinearGrid, 3)).unwrap(), vec![PI, 2.0 * PI, 3.0 * PI]);
        assert_eq!(
            schedule(&spec(StrategyKind::Exponential { base: 1.125 }, 2)).unwrap(),
            vec![1.125, 1.265625]
        );
        assert!(schedule(&spec(adaptive(), 3)).is_err());
    }

    #[test]
    fn invalid_specs() {
        assert!(StrategySpec::new(StrategyKind::Exponential { base: 1.0 }, 3).is_err());
        assert!(StrategySpec::new(StrategyKind::AdaptiveGaussian { warmup: 0 }, 3).is_err());
    }

    #[test]
    fn estimator_bindings() {
        assert!(StrategyKind::LinearGrid.check_estimator(EstimatorKind::Fourier).is_ok());
        assert!(StrategyKind::Fixed.check_estimator(EstimatorKind::Fourier).is_err());
        assert!(adaptive().check_estimator(EstimatorKind::Mle).is_err());
        assert!(StrategyKind::Fixed.check_estimator(EstimatorKind::PosteriorMean).is_err());
        assert_eq!(adaptive().default_estimator(), EstimatorKind::PosteriorMean);
        assert_eq!(StrategyKind::Exponential { base: 1.125 }.default_estimator(), EstimatorKind::Mle);
    }

    #[test]
    fn offline_records_follow_schedule() {
        let model = TrueModel::noiseless(0.4).unwrap();
        for kind in [StrategyKind::Fixed, StrategyKind::LinearGrid, StrategyKind::Exponential { base: 1.2 }] {
            let s = spec(kind, 20);
            let trial = run_trial_seeded(&s, EstimatorKind::Mle, &model, 3).unwrap();
            assert_eq!(trial.record.times(), schedule(&s).unwrap());
        }
    }

    #[test]
    fn empty_trial_returns_prior_mean() {
        let model = TrueModel::noiseless(0.3).unwrap();
        for kind in [StrategyKind::Fixed, adaptive()] {
            let est = run_trial_seeded(&spec(kind, 0), kind.default_estimator(), &model, 1).unwrap().estimate;
            assert!((est.omega_hat - 0.5).abs() < 1e-15, "{}", est.omega_hat);
        }
    }

    #[test]
    fn fixed_time_estimate_is_binomial_mle() {
        let model = TrueModel::noiseless(0.62).unwrap();
        for seed in 0..10 {
            let trial = run_trial_seeded(&spec(StrategyKind::Fixed, 100), EstimatorKind::Mle, &model, seed).unwrap();
            let closed = fixed_time_mle(&trial.record).unwrap();
            assert!((trial.estimate.omega_hat - closed).abs() < 1e-6, "{} vs {closed}", trial.estimate.omega_hat);
        }
    }

    #[test]
    fn trials_are_deterministic() {
        let model = TrueModel::noiseless(0.52).unwrap();
        for kind in [StrategyKind::LinearGrid, adaptive()] {
            let s = spec(kind, 40);
            let a = run_trial_seeded(&s, kind.default_estimator(), &model, 9).unwrap();
            let b = run_trial_seeded(&s, kind.default_estimator(), &model, 9).unwrap();
            assert_eq!(a.record, b.record);
            assert_eq!(a.estimate.omega_hat.to_bits(), b.estimate.omega_hat.to_bits());
        }
    }

    #[test]
    fn warmup_boundary_is_exact() {
        let model = TrueModel::noiseless(0.3).unwrap();
        let mut state = AdaptiveState::new(DEFAULT_WARMUP).unwrap();
        let mut rng = trial_stream(1, 1);
        for i in 0..DEFAULT_WARMUP + 3 {
            assert_eq!(matches!(state.phase(), Phase::Warmup(_)), i < DEFAULT_WARMUP, "step {i}");
            let t = next_time(&state, 1.0, DecayTime::Infinite);
            if i < DEFAULT_WARMUP {
                assert_eq!(t, (i + 1) as f64 * PI);
            }
            state.observe(Measurement::new(sample_outcome(&model, t, &mut rng), t).unwrap(), 1.0, DecayTime::Infinite).unwrap();
        }
    }

    fn warmed_up(omega: f64, seed: u64) -> (AdaptiveState, TrueModel<f64>, rand_chacha::ChaCha8Rng) {
        let model = TrueModel::noiseless(omega).unwrap();
        let mut state = AdaptiveState::new(DEFAULT_WARMUP).unwrap();
        let mut rng = trial_stream(seed, 0);
        while matches!(state.phase(), Phase::Warmup(_)) {
            let t = next_time(&state, 1.0, DecayTime::Infinite);
            state.observe(Measurement::new(sample_outcome(&model, t, &mut rng), t).unwrap(), 1.0, DecayTime::Infinite).unwrap();
        }
        (state, model, rng)
    }

    #[test]
    fn first_tracking_time_is_near_inverse_sigma() {
        let mut rng = trial_stream(77, 0);
        for seed in 0..50 {
            let omega = 0.1 + 0.8 * draw_omega(&mut rng);
            let (state, _, _) = warmed_up(omega, seed);
            let sigma = state.posterior_variance().sqrt();
            let t = next_time(&state, 1.0, DecayTime::Infinite);
            assert!(t >= 0.5 / sigma && t <= 2.0 / sigma, "t·σ = {}", t * sigma);
        }
    }

    #[test]
    fn tracking_times_grow_geometrically() {
        let (mut state, model, mut rng) = warmed_up(0.6, 11);
        let mut times = Vec::new();
        for _ in 0..21 {
            let t = next_time(&state, 1.0, DecayTime::Infinite);
            times.push(t);
            state.observe(Measurement::new(sample_outcome(&model, t, &mut rng), t).unwrap(), 1.0, DecayTime::Infinite).unwrap();
        }
        let ratio = (times[20] / times[0]).powf(1.0 / 20.0);
        let expected = (1.0 - (-1.0f64).exp()).powf(-0.5);
        assert!((ratio - expected).abs() < 0.05, "ratio {ratio} vs {expected}");
    }

    #[test]
    fn dephased_times_saturate() {
        let t2 = 1e4 * PI;
        let mut rng = trial_stream(5, 0);
        for seed in 0..10 {
            let model = TrueModel::new(draw_omega(&mut rng), 1.0, DecayTime::Finite(t2)).unwrap();
            let trial = run_trial_seeded(&spec(adaptive(), 124), EstimatorKind::PosteriorMean, &model, seed).unwrap();
            let t_max = trial.record.times().into_iter().fold(0.0, f64::max);
            assert!(t_max <= 3.0 * t2, "max time {t_max}");
        }
    }

    #[test]
    fn tracking_variance_strictly_decreases() {
        let mut rng = trial_stream(21, 0);
        let runs: Vec<Vec<f64>> = (0..100)
            .map(|seed| {
                let (mut state, model, mut trial_rng) = warmed_up(draw_omega(&mut rng), seed);
                let mut vars = vec![state.posterior_variance()];
                for _ in 0..60 {
                    let t = next_time(&state, 1.0, DecayTime::Infinite);
                    let m = Measurement::new(sample_outcome(&model, t, &mut trial_rng), t).unwrap();
                    state.observe(m, 1.0, DecayTime::Infinite).unwrap();
                    vars.push(state.posterior_variance());
                }
                vars
            })
            .collect();
        let median = |j: usize| {
            let mut v: Vec<f64> = runs.iter().map(|r| r[j]).collect();
            v.sort_by(f64::total_cmp);
            0.5 * (v[49] + v[50])
        };
        for j in 1..=60 {
            assert!(median(j) < median(j - 1), "step {j}");
        }
    }

    #[test]
    fn adaptive_regression_pin() {
        let model = TrueModel::noiseless(0.7654).unwrap();
        let trial = run_trial_seeded(&spec(adaptive(), 124), EstimatorKind::PosteriorMean, &model, 42).unwrap();
        let err2 = (trial.estimate.omega_hat - 0.7654).powi(2);
        assert!(err2 < 1e-8, "squared error {err2}");
    }

    #[test]
    fn adaptive_with_reduced_visibility_runs() {
        let model = TrueModel::new(0.35, 0.9, DecayTime::Finite(1e4 * PI)).unwrap();
        let trial = run_trial_seeded(&spec(adaptive(), 60), EstimatorKind::PosteriorMean, &model, 2).unwrap();
        assert!((trial.estimate.omega_hat - 0.35).abs() < 1e-3);
    }

    #[test]
    fn simulation_prefixes_match_shorter_runs() {
        let model = TrueModel::noiseless(0.81).unwrap();
        let long = simulate(&adaptive(), 50, &model, &mut trial_stream(4, 4)).unwrap();
        for n in [0, 10, 15, 16, 33] {
            let short = run_trial(&spec(adaptive(), n), EstimatorKind::PosteriorMean, &model, &mut trial_stream(4, 4)).unwrap();
            assert_eq!(short.record, long.record.prefix(n));
            assert_eq!(short.estimate.omega_hat.to_bits(), long.estimates[n].to_bits());
        }
    }

    #[test]
    fn base_search_preconditions_and_degenerate_grid() {
        assert!(optimize_exponential_base(10, 1.0, DecayTime::Infinite, &[1.125], 10, 0).is_err());
        assert!(optimize_exponential_base(10, 1.0, DecayTime::Infinite, &[2.5], 1000, 0).is_err());
        let found = optimize_exponential_base(20, 1.0, DecayTime::Infinite, &[1.125], 1000, 0).unwrap();
        assert_eq!(found.base, 1.125);
    }
}
