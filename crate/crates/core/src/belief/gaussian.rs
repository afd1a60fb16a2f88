//! Gaussian summary of the posterior over `ω` and its closed-form updates.
//!
//! With a normal prior `N(μ, σ²)` every quantity the greedy controller needs
//! has a closed form: the outcome marginals, the posterior mean and variance
//! after one more measurement, and the expected posterior variance `r(t)`.
//! At the controller times `t = (2k−1)π/(2μ)` the fringe sits at a zero of
//! `cos(μt)`, both outcomes are equally likely, and `r(t)` touches its lower
//! envelope `E(t, σ²) = σ²(1 − t²σ² e^{−t²σ²})`.

use crate::belief::RISK_LOG_DOMAIN;
use crate::error::{Error, Result};
use crate::model::{DecayTime, Measurement, Outcome};
use crate::scalar::Scalar;

/// Smallest variance a Gaussian update may produce.
pub const VARIANCE_FLOOR: f64 = 1e-30;

/// Relative tolerance when checking that a measurement was taken at the
/// controller time the closed-form update assumes.
const CONTROLLER_TIME_RTOL: f64 = 1e-9;

/// Normal approximation `N(μ, σ²)` of the posterior over `ω`.
///
/// The distribution lives on the real line and is never truncated to (0,1);
/// point estimates read from it are clamped instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianBelief<T> {
    pub mu: T,
    pub sigma2: T,
    /// Set when an update hit [`VARIANCE_FLOOR`].
    pub clamped: bool,
}

/// Expected posterior variance of one candidate measurement time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedRisk<T> {
    pub t: T,
    pub risk: T,
    pub envelope: T,
}

impl<T: Scalar> GaussianBelief<T> {
    pub fn new(mu: T, sigma2: T) -> Result<Self> {
        if !mu.is_finite() || !(sigma2 > T::zero()) || !sigma2.is_finite() {
            return Err(Error::Domain(format!(
                "Gaussian belief needs finite mean and positive variance, got ({mu}, {sigma2})"
            )));
        }
        Ok(Self { mu, sigma2, clamped: false })
    }

    pub fn sigma(&self) -> T {
        self.sigma2.sqrt()
    }

    /// Posterior mean clamped to the parameter domain [0,1].
    pub fn estimate(&self) -> T {
        self.mu.max(T::zero()).min(T::one())
    }

    fn with_moments(mu: T, sigma2: T) -> Self {
        let floor = T::lit(VARIANCE_FLOOR);
        if sigma2 > floor {
            Self { mu, sigma2, clamped: false }
        } else {
            Self { mu, sigma2: floor, clamped: true }
        }
    }

    /// `Pr(d | t; μ, σ²) = (1 ∓ e^{−σ²t²/2} cos(μt)) / 2`, the noiseless
    /// likelihood averaged over the belief.
    pub fn marginal_outcome_prob(&self, outcome: Outcome, t: T) -> T {
        self.marginal_with_contrast(outcome, t, T::one())
    }

    fn marginal_with_contrast(&self, outcome: Outcome, t: T, contrast: T) -> T {
        let half = T::lit(0.5);
        let c = contrast * (-half * self.sigma2 * t * t).exp() * (self.mu * t).cos();
        match outcome {
            Outcome::Zero => half + half * c,
            Outcome::One => half - half * c,
        }
    }

    /// Exact posterior mean and variance of a Gaussian prior after observing
    /// `outcome` at time `t`, for a fringe `Pr(0|ω) = (1 + contrast·cos ωt)/2`.
    ///
    /// Written in terms of the offset `ε = ω − μ` so the variance never
    /// subtracts two numbers of size `μ²`.
    pub fn posterior_moments_with_contrast(&self, outcome: Outcome, t: T, contrast: T) -> (T, T) {
        let half = T::lit(0.5);
        let x = self.sigma2 * t * t;
        let a = contrast * (-half * x).exp();
        let (sin, cos) = (self.mu * t).sin_cos();
        let (big_s, big_c) = (a * sin, a * cos);
        // s = 1 − 2d
        let s = -outcome.sign::<T>();
        let z = T::one() + s * big_c;
        let shift = -s * self.sigma2 * t * big_s / z;
        let second = self.sigma2 * (T::one() + s * big_c * (T::one() - x)) / z;
        (self.mu + shift, second - shift * shift)
    }

    /// Noiseless-model posterior moments.
    pub fn posterior_moments(&self, outcome: Outcome, t: T) -> (T, T) {
        self.posterior_moments_with_contrast(outcome, t, T::one())
    }

    /// Lower envelope `E(t, σ²) = σ²(1 − t²σ² e^{−t²σ²})` of the expected risk.
    pub fn envelope(&self, t: T) -> T {
        let x = self.sigma2 * t * t;
        if x > T::lit(RISK_LOG_DOMAIN) {
            return self.sigma2;
        }
        self.sigma2 * (T::one() - x * (-x).exp())
    }

    /// Expected posterior variance after one noiseless measurement at `t`,
    ///
    /// `r(t) = σ²(1 + t²σ² sin²(μt) / (cos²(μt) − e^{t²σ²}))`,
    ///
    /// which is the Bayes risk if that measurement were the last.
    pub fn expected_posterior_variance(&self, t: T) -> ExpectedRisk<T> {
        ExpectedRisk {
            t,
            risk: self.expected_posterior_variance_with_contrast(t, T::one()),
            envelope: self.envelope(t),
        }
    }

    /// `r(t)` for a fringe of reduced contrast (visibility times dephasing).
    pub fn expected_posterior_variance_with_contrast(&self, t: T, contrast: T) -> T {
        let x = self.sigma2 * t * t;
        if t == T::zero() || x > T::lit(RISK_LOG_DOMAIN) {
            return self.sigma2;
        }
        let sin2 = (self.mu * t).sin().powi(2);
        let c2 = contrast * contrast;
        let reduction = if c2 == T::one() {
            // e^{x} − cos² = (e^{x} − 1) + sin², no cancellation.
            x * sin2 / (x.exp_m1() + sin2)
        } else {
            let cos2 = T::one() - sin2;
            x * c2 * sin2 / (x.exp() - c2 * cos2)
        };
        self.sigma2 * (T::one() - reduction)
    }

    /// Controller index `k = round(μ/(πσ) + 1/2)` for the noiseless model.
    ///
    /// `None` when `μ ≤ 0` or the rounded index is below one, where the
    /// implied time would not be positive.
    pub fn controller_index(&self) -> Option<i64> {
        if !(self.mu > T::zero()) {
            return None;
        }
        let k = (self.mu / (T::PI() * self.sigma()) + T::lit(0.5)).round();
        k.to_i64().filter(|&k| k >= 1)
    }

    /// Controller index with dephasing.
    ///
    /// The per-outcome variance reduction at a fringe zero is
    /// `σ⁴t² e^{−σ²t² − 2t/T₂}`, maximized at `t* = 2T₂ / (1 + √(1 + 4σ²T₂²))`;
    /// `k` rounds `t*` to the nearest fringe zero. Reduces to
    /// [`controller_index`](Self::controller_index) as `T₂ → ∞`.
    pub fn controller_index_t2(&self, t2: DecayTime<T>) -> Option<i64> {
        let t2 = match t2 {
            DecayTime::Infinite => return self.controller_index(),
            DecayTime::Finite(t2) => t2,
        };
        if !(self.mu > T::zero()) {
            return None;
        }
        let k = (self.mu * optimal_dephased_time(self.sigma2, t2) / T::PI() + T::lit(0.5)).round();
        k.to_i64().filter(|&k| k >= 1)
    }

    /// Measurement time `(2k − 1)π / (2μ)`, a zero of `cos(μt)`.
    pub fn controller_time(&self, k: i64) -> T {
        T::lit((2 * k - 1) as f64) * T::PI() / (T::lit(2.0) * self.mu)
    }

    fn check_controller_time(&self, m: &Measurement<T>, k: i64) -> Result<T> {
        let t = self.controller_time(k);
        if (m.time - t).abs() > T::lit(CONTROLLER_TIME_RTOL) * t {
            return Err(Error::Precondition(format!(
                "closed-form update expects the controller time {t}, measurement was at {}",
                m.time
            )));
        }
        Ok(t)
    }

    /// Closed-form update for the noiseless model at the controller time:
    ///
    /// ```text
    /// E[ω|d] = μ − π(2d−1)σ²(−1)^k (2k−1) e^{−π²σ²(2k−1)²/(8μ²)} / (2μ)
    /// V[ω|d] = σ² − π²σ⁴(2k−1)² e^{−π²σ²(2k−1)²/(4μ²)} / (4μ²)
    /// ```
    pub fn gauss_update(&self, m: &Measurement<T>) -> Result<Self> {
        let k = self.controller_index().ok_or_else(|| {
            Error::Precondition(format!("no controller time for mean {}", self.mu))
        })?;
        self.check_controller_time(m, k)?;
        Ok(self.update_at_index(m.outcome, k, DecayTime::Infinite))
    }

    /// Closed-form update with dephasing (unit visibility) at the controller
    /// time chosen by [`controller_index_t2`](Self::controller_index_t2).
    pub fn gauss_update_t2(&self, m: &Measurement<T>, t2: DecayTime<T>) -> Result<Self> {
        let k = self.controller_index_t2(t2).ok_or_else(|| {
            Error::Precondition(format!("no controller time for mean {}", self.mu))
        })?;
        self.check_controller_time(m, k)?;
        Ok(self.update_at_index(m.outcome, k, t2))
    }

    /// Applies the closed-form update for index `k`. With `t = (2k−1)π/(2μ)`
    /// and damping `D = e^{−σ²t²/2 − t/T₂}`:
    /// mean `μ − (2d−1)(−1)^k σ² t D`, variance `σ² − σ⁴t²D²`.
    pub fn update_at_index(&self, outcome: Outcome, k: i64, t2: DecayTime<T>) -> Self {
        let half = T::lit(0.5);
        let odd = T::lit((2 * k - 1) as f64);
        let t = odd * T::PI() / (T::lit(2.0) * self.mu);
        let log_damping = -half * self.sigma2 * t * t - t2.ratio(t);
        let damping = log_damping.exp();
        let parity = if k % 2 == 0 { T::one() } else { -T::one() };
        let shift = -outcome.sign::<T>() * parity * self.sigma2 * t * damping;
        let var = self.sigma2 - (self.sigma2 * t * damping).powi(2);
        Self::with_moments(self.mu + shift, var)
    }
}

/// Time maximizing `t² e^{−σ²t² − 2t/T₂}`: the positive root of
/// `σ²t² + t/T₂ − 1 = 0`.
pub fn optimal_dephased_time<T: Scalar>(sigma2: T, t2: T) -> T {
    let two = T::lit(2.0);
    let root = (T::one() + T::lit(4.0) * sigma2 * t2 * t2).sqrt();
    two * t2 / (T::one() + root)
}
