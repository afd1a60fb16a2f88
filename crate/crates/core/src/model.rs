//! Measurement models for a qubit precessing at an unknown frequency.
//!
//! A single experiment prepares `|+⟩`, evolves for time `t` under a
//! Hamiltonian with frequency `ω ∈ (0,1)`, and measures in the `σ_x` basis.
//! The noiseless outcome distribution is
//!
//! ```text
//! Pr(0 | ω, t) = cos²(ωt/2),   Pr(1 | ω, t) = sin²(ωt/2)
//! ```
//!
//! and the noisy generalization adds a readout visibility `η` and an
//! exponential dephasing envelope with characteristic time `T₂`:
//!
//! ```text
//! Pr(0 | ω, t, η, T₂) = η (e^{-t/T₂} cos²(ωt/2) + (1 - e^{-t/T₂})/2) + (1 - η)/2
//! ```
//!
//! The module also provides the Fisher information of a schedule of times and
//! every lower bound on the risk that follows from it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Exponents beyond this are evaluated in the reciprocal domain.
const LOG_DOMAIN_EXPONENT: f64 = 700.0;

/// A measurement outcome: `Zero` is `|+⟩`, `One` is `|−⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Outcome {
    Zero,
    One,
}

impl Outcome {
    /// Builds an outcome from a bit; any non-zero value is `One`.
    pub fn from_bit(bit: u8) -> Self {
        if bit == 0 {
            Outcome::Zero
        } else {
            Outcome::One
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Outcome::Zero => 0,
            Outcome::One => 1,
        }
    }

    /// `2d - 1`: `-1` for `Zero`, `+1` for `One`.
    pub fn sign<T: Scalar>(self) -> T {
        match self {
            Outcome::Zero => -T::one(),
            Outcome::One => T::one(),
        }
    }

    /// Both outcomes, in bit order.
    pub const ALL: [Outcome; 2] = [Outcome::Zero, Outcome::One];
}

/// Dephasing time `T₂`. `Infinite` is an exact variant so the noiseless
/// model never passes through `e^{t/T₂}` arithmetic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayTime<T> {
    Infinite,
    Finite(T),
}

impl<T: Scalar> DecayTime<T> {
    pub fn is_infinite(&self) -> bool {
        matches!(self, DecayTime::Infinite)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DecayTime::Infinite => Ok(()),
            DecayTime::Finite(t2) if t2 > T::zero() && t2.is_finite() => Ok(()),
            DecayTime::Finite(t2) => Err(Error::Domain(format!(
                "T2 must be positive and finite or Infinite, got {t2}"
            ))),
        }
    }

    /// Coherence factor `e^{-t/T₂}`.
    pub fn decay(&self, t: T) -> T {
        match *self {
            DecayTime::Infinite => T::one(),
            DecayTime::Finite(t2) => (-t / t2).exp(),
        }
    }

    /// `t / T₂`, zero for an infinite decay time.
    pub fn ratio(&self, t: T) -> T {
        match *self {
            DecayTime::Infinite => T::zero(),
            DecayTime::Finite(t2) => t / t2,
        }
    }

    pub fn finite(&self) -> Option<T> {
        match *self {
            DecayTime::Infinite => None,
            DecayTime::Finite(t2) => Some(t2),
        }
    }
}

/// Ground-truth parameters used to simulate data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrueModel<T> {
    pub omega: T,
    pub eta: T,
    pub t2: DecayTime<T>,
}

impl<T: Scalar> TrueModel<T> {
    pub fn new(omega: T, eta: T, t2: DecayTime<T>) -> Result<Self> {
        if !(omega > T::zero() && omega < T::one()) {
            return Err(Error::Domain(format!("omega must lie in (0,1), got {omega}")));
        }
        validate_eta(eta)?;
        t2.validate()?;
        Ok(Self { omega, eta, t2 })
    }

    /// Unit visibility and no dephasing.
    pub fn noiseless(omega: T) -> Result<Self> {
        Self::new(omega, T::one(), DecayTime::Infinite)
    }

    pub fn is_noiseless(&self) -> bool {
        self.eta == T::one() && self.t2.is_infinite()
    }

    /// Outcome probability at time `t` under this model.
    pub fn likelihood(&self, outcome: Outcome, t: T) -> Result<T> {
        likelihood_t2(outcome, self.omega, t, self.eta, self.t2)
    }
}

pub(crate) fn validate_eta<T: Scalar>(eta: T) -> Result<()> {
    if eta > T::zero() && eta <= T::one() {
        Ok(())
    } else {
        Err(Error::Domain(format!("eta must lie in (0,1], got {eta}")))
    }
}

fn validate_time<T: Scalar>(t: T) -> Result<()> {
    if t >= T::zero() && t.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("evolution time must be finite and >= 0, got {t}")))
    }
}

/// A single experiment: the evolution time and the observed outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Measurement<T> {
    pub outcome: Outcome,
    pub time: T,
}

impl<T: Scalar> Measurement<T> {
    pub fn new(outcome: Outcome, time: T) -> Result<Self> {
        validate_time(time)?;
        Ok(Self { outcome, time })
    }
}

/// Ordered list of measurements.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Record<T> {
    measurements: Vec<Measurement<T>>,
}

impl<T: Scalar> Record<T> {
    pub fn new() -> Self {
        Self { measurements: Vec::new() }
    }

    pub fn with_capacity(n: usize) -> Self {
        Self { measurements: Vec::with_capacity(n) }
    }

    pub fn push(&mut self, m: Measurement<T>) {
        self.measurements.push(m);
    }

    pub fn len(&self) -> usize {
        self.measurements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measurements.is_empty()
    }

    pub fn measurements(&self) -> &[Measurement<T>] {
        &self.measurements
    }

    pub fn times(&self) -> Vec<T> {
        self.measurements.iter().map(|m| m.time).collect()
    }

    /// The first `n` measurements.
    pub fn prefix(&self, n: usize) -> Record<T> {
        Record { measurements: self.measurements[..n.min(self.len())].to_vec() }
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Measurement<T>> {
        self.measurements.iter()
    }
}

impl<T: Scalar> FromIterator<Measurement<T>> for Record<T> {
    fn from_iter<I: IntoIterator<Item = Measurement<T>>>(iter: I) -> Self {
        Self { measurements: iter.into_iter().collect() }
    }
}

impl<'a, T> IntoIterator for &'a Record<T> {
    type Item = &'a Measurement<T>;
    type IntoIter = std::slice::Iter<'a, Measurement<T>>;

    fn into_iter(self) -> Self::IntoIter {
        self.measurements.iter()
    }
}

/// `Pr(d | ω, t)` when the cosine fringe has the given contrast.
///
/// `Pr(0) = (1 + contrast·cos(ωt)) / 2`, which is the noiseless model for
/// `contrast = 1` and the noisy one for `contrast = η e^{-t/T₂}`.
#[inline]
pub(crate) fn fringe_probability<T: Scalar>(outcome: Outcome, omega: T, t: T, contrast: T) -> T {
    let half = T::lit(0.5);
    let c = contrast * (omega * t).cos();
    match outcome {
        Outcome::Zero => half + half * c,
        Outcome::One => half - half * c,
    }
}

/// Noiseless likelihood `Pr(d | ω, t)`.
pub fn likelihood<T: Scalar>(outcome: Outcome, omega: T, t: T) -> Result<T> {
    validate_time(t)?;
    let half_phase = omega * t * T::lit(0.5);
    Ok(match outcome {
        Outcome::Zero => half_phase.cos().powi(2),
        Outcome::One => half_phase.sin().powi(2),
    })
}

/// Likelihood with visibility `eta` and dephasing time `t2`.
pub fn likelihood_t2<T: Scalar>(
    outcome: Outcome,
    omega: T,
    t: T,
    eta: T,
    t2: DecayTime<T>,
) -> Result<T> {
    validate_time(t)?;
    validate_eta(eta)?;
    t2.validate()?;
    if eta == T::one() && t2.is_infinite() {
        return likelihood(outcome, omega, t);
    }
    let half = T::lit(0.5);
    let decay = t2.decay(t);
    let p0 = eta * (decay * (omega * t * half).cos().powi(2) + (T::one() - decay) * half)
        + (T::one() - eta) * half;
    Ok(match outcome {
        Outcome::Zero => p0,
        Outcome::One => T::one() - p0,
    })
}

/// Draws an outcome at time `t` from the model. Consumes exactly one
/// uniform variate from `rng`.
pub fn sample_outcome<T: Scalar, R: Rng + ?Sized>(model: &TrueModel<T>, t: T, rng: &mut R) -> Outcome {
    let p1 = model
        .likelihood(Outcome::One, t)
        .expect("validated model and non-negative time")
        .to_f64()
        .unwrap_or(0.5);
    let u: f64 = rng.gen();
    if u < p1 {
        Outcome::One
    } else {
        Outcome::Zero
    }
}

/// Random stream for one Monte Carlo trial, derived from the global seed and
/// the trial index so serial and parallel runs draw identical numbers.
pub fn trial_stream(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Uniform draw on the open interval (0,1).
pub fn draw_omega<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let x: f64 = rng.gen();
        if x > 0.0 && x < 1.0 {
            return x;
        }
    }
}

/// Fisher information `Σ t_k²` of a schedule under the noiseless model.
/// It does not depend on `ω`.
pub fn fisher_information<T: Scalar>(times: &[T]) -> T {
    times.iter().fold(T::zero(), |acc, &t| acc + t * t)
}

/// Single-time Fisher information under the noisy model:
/// `η² t² sin²(ωt) / (e^{2t/T₂} − η² cos²(ωt))`.
pub fn fisher_information_single_t2<T: Scalar>(t: T, omega: T, eta: T, t2: DecayTime<T>) -> T {
    if eta == T::one() && t2.is_infinite() {
        return t * t;
    }
    let two = T::lit(2.0);
    let eta2 = eta * eta;
    let (s, c) = (omega * t).sin_cos();
    let numer = eta2 * t * t * s * s;
    if numer == T::zero() {
        return T::zero();
    }
    let x = two * t2.ratio(t);
    if x > T::lit(LOG_DOMAIN_EXPONENT) {
        let q = (-x).exp();
        return numer * q / (T::one() - eta2 * c * c * q);
    }
    // e^{x} − η²cos² = (e^{x} − 1) + (1 − η²) + η² sin², all terms non-negative.
    numer / (x.exp_m1() + (T::one() - eta2) + eta2 * s * s)
}

/// Fisher information of a schedule under the noisy model.
pub fn fisher_information_t2<T: Scalar>(times: &[T], omega: T, eta: T, t2: DecayTime<T>) -> T {
    times
        .iter()
        .fold(T::zero(), |acc, &t| acc + fisher_information_single_t2(t, omega, eta, t2))
}

fn reciprocal_or_infinite<T: Scalar>(info: T) -> T {
    if info > T::zero() {
        T::one() / info
    } else {
        T::infinity()
    }
}

/// Cramér-Rao bound `1 / Σ t_k²` for the noiseless model.
pub fn crb<T: Scalar>(times: &[T]) -> T {
    reciprocal_or_infinite(fisher_information(times))
}

/// Cramér-Rao bound for the noisy model at a given `ω`.
pub fn crb_t2<T: Scalar>(times: &[T], omega: T, eta: T, t2: DecayTime<T>) -> T {
    reciprocal_or_infinite(fisher_information_t2(times, omega, eta, t2))
}

/// `ω`-independent bound `1 / (η² Σ t_k² e^{-2t_k/T₂})`.
pub fn crb_t2_sharp<T: Scalar>(times: &[T], eta: T, t2: DecayTime<T>) -> T {
    let two = T::lit(2.0);
    let info = times.iter().fold(T::zero(), |acc, &t| {
        let x = two * t2.ratio(t);
        acc + t * t * (-x).exp()
    });
    reciprocal_or_infinite(eta * eta * info)
}

/// Best achievable bound over all schedules of `n` times, `e² / (N η² T₂²)`.
///
/// Returns zero for an infinite `T₂`, the limit of the expression.
pub fn crb_ultimate<T: Scalar>(n: usize, eta: T, t2: DecayTime<T>) -> Result<T> {
    if n == 0 {
        return Err(Error::Domain("ultimate bound needs at least one measurement".into()));
    }
    Ok(match t2 {
        DecayTime::Infinite => T::zero(),
        DecayTime::Finite(t2) => T::E() * T::E() / (T::count(n) * eta * eta * t2 * t2),
    })
}

/// Information-theoretic floor `2^{-2(N+1)}`: one bit of `ω` per binary outcome.
pub fn info_theoretic_floor<T: Scalar>(n: usize) -> T {
    let exponent = 2.0 * (n as f64 + 1.0);
    T::lit(2.0).powf(T::lit(-exponent))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::{E, PI};

    fn log_lik(d: Outcome, omega: f64, t: f64, eta: f64, t2: DecayTime<f64>) -> f64 {
        likelihood_t2(d, omega, t, eta, t2).unwrap().ln()
    }

    /// −E[∂² log Pr / ∂ω²] by Richardson-extrapolated central differences of
    /// the log-likelihood. The step shrinks near zeros of `Pr(d)` where the
    /// logarithm is singular.
    fn fisher_fd(t: f64, omega: f64, eta: f64, t2: DecayTime<f64>) -> f64 {
        Outcome::ALL
            .iter()
            .map(|&d| {
                let p = likelihood_t2(d, omega, t, eta, t2).unwrap();
                if p < 1e-12 {
                    return 0.0;
                }
                let zero_phase = match d {
                    Outcome::Zero => PI,
                    Outcome::One => 0.0,
                };
                let phase = (omega * t - zero_phase).rem_euclid(2.0 * PI);
                let gap = phase.min(2.0 * PI - phase) / t;
                let h = (1e-3 / t.max(1.0)).min(gap / 100.0);
                let f = |w: f64| log_lik(d, w, t, eta, t2);
                let second = |h: f64| (f(omega + h) - 2.0 * f(omega) + f(omega - h)) / (h * h);
                -p * (4.0 * second(h / 2.0) - second(h)) / 3.0
            })
            .sum()
    }

    #[test]
    fn noiseless_likelihood_examples() {
        assert_eq!(likelihood(Outcome::Zero, 0.5, 0.0).unwrap(), 1.0);
        let omega = 0.37;
        assert_relative_eq!(likelihood(Outcome::One, omega, PI / omega).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(likelihood(Outcome::Zero, 0.5, PI).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(likelihood(Outcome::Zero, 0.5, -1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn noisy_likelihood_examples() {
        let p = likelihood_t2(Outcome::Zero, 0.5, PI, 1.0, DecayTime::Infinite).unwrap();
        assert_relative_eq!(p, 0.5, epsilon = 1e-15);
        for eta in [0.3, 0.9, 1.0] {
            let p = likelihood_t2(Outcome::Zero, 0.81, 0.0, eta, DecayTime::Finite(7.0)).unwrap();
            assert_relative_eq!(p, (1.0 + eta) / 2.0, epsilon = 1e-15);
        }
        // Closed form evaluated by hand: e^{-1e-4}·cos²(π/4) + (1 − e^{-1e-4})/2 = 0.5,
        // so the η-mixture is exactly 0.5 too.
        let p = likelihood_t2(Outcome::Zero, 0.5, PI, 0.9, DecayTime::Finite(1e4 * PI)).unwrap();
        assert_relative_eq!(p, 0.5, epsilon = 1e-15);
        // Off the node: ω=0.3, t=2, η=0.9, T₂=50. Reference from mpmath at 50 digits.
        let p = likelihood_t2(Outcome::Zero, 0.3, 2.0, 0.9, DecayTime::Finite(50.0)).unwrap();
        assert_relative_eq!(p, 0.856_838_184_152_678_4, max_relative = 1e-14);
        assert!(likelihood_t2(Outcome::Zero, 0.5, 1.0, 0.0, DecayTime::Infinite).is_err());
        assert!(likelihood_t2(Outcome::Zero, 0.5, 1.0, 1.0, DecayTime::Finite(-1.0)).is_err());
    }

    #[test]
    fn long_times_wash_out_to_half() {
        let p = likelihood_t2(Outcome::Zero, 0.42, 1e6, 0.8, DecayTime::Finite(10.0)).unwrap();
        assert_relative_eq!(p, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn reduction_to_noiseless_on_random_inputs() {
        let mut rng = trial_stream(11, 0);
        for _ in 0..1000 {
            let omega = draw_omega(&mut rng);
            let t: f64 = rng.gen_range(0.0..1e3);
            for d in Outcome::ALL {
                let a = likelihood(d, omega, t).unwrap();
                let b = likelihood_t2(d, omega, t, 1.0, DecayTime::Infinite).unwrap();
                assert!((a - b).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn sampling_edge_cases_and_frequency() {
        let model = TrueModel::noiseless(0.5).unwrap();
        let mut rng = trial_stream(3, 9);
        for _ in 0..100 {
            assert_eq!(sample_outcome(&model, 0.0, &mut rng), Outcome::Zero);
        }
        let flip = TrueModel::noiseless(0.25).unwrap();
        for _ in 0..100 {
            assert_eq!(sample_outcome(&flip, 4.0 * PI, &mut rng), Outcome::One);
        }
        let ones = (0..100_000).filter(|_| sample_outcome(&model, PI, &mut rng) == Outcome::One).count();
        let freq = ones as f64 / 1e5;
        assert!((freq - 0.5).abs() < 0.005, "frequency {freq}");
    }

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut r1 = trial_stream(5, 1);
        let mut r2 = trial_stream(5, 1);
        let mut r3 = trial_stream(5, 2);
        let x: u64 = r1.gen();
        assert_eq!(x, r2.gen::<u64>());
        assert_ne!(x, r3.gen::<u64>());
    }

    #[test]
    fn fisher_examples() {
        assert_eq!(fisher_information::<f64>(&[]), 0.0);
        assert_relative_eq!(fisher_information(&[PI, 2.0 * PI, 3.0 * PI]), 14.0 * PI * PI, max_relative = 1e-15);
    }

    #[test]
    fn fisher_matches_finite_differences() {
        let mut rng = trial_stream(17, 0);
        for _ in 0..5 {
            let omega = draw_omega(&mut rng);
            let times: Vec<f64> = (0..6).map(|_| rng.gen_range(0.1..40.0)).collect();
            let fd: f64 = times.iter().map(|&t| fisher_fd(t, omega, 1.0, DecayTime::Infinite)).sum();
            assert_relative_eq!(fd, fisher_information(&times), max_relative = 1e-5);
        }
        let (t, omega, eta, t2) = (10.0, 0.5, 0.95, DecayTime::Finite(100.0));
        assert_relative_eq!(
            fisher_fd(t, omega, eta, t2),
            fisher_information_t2(&[t], omega, eta, t2),
            max_relative = 1e-5
        );
    }

    #[test]
    fn noisy_fisher_limits() {
        let mut rng = trial_stream(19, 0);
        let times = [0.7, 3.0, 11.5, 40.0];
        for _ in 0..5 {
            let omega = draw_omega(&mut rng);
            let info = fisher_information_t2(&times, omega, 1.0, DecayTime::Infinite);
            assert_relative_eq!(info, fisher_information(&times), max_relative = 1e-10);
            // Same limit through the general branch with an astronomically long T₂.
            let info = fisher_information_t2(&times, omega, 1.0, DecayTime::Finite(1e300));
            assert_relative_eq!(info, fisher_information(&times), max_relative = 1e-10);
        }
        assert_eq!(fisher_information_t2(&[0.0], 0.4, 0.9, DecayTime::Infinite), 0.0);
        // sin(2π) is only zero up to rounding.
        assert!(fisher_information_t2(&[PI], 2.0, 0.9, DecayTime::Infinite) < 1e-28);
        assert!(fisher_information_t2(&[PI], 1.0, 1.0, DecayTime::Finite(10.0)) < 1e-28);
        // Overflow region of e^{2t/T₂}.
        let info: f64 = fisher_information_t2(&[1e5], 0.3, 0.9, DecayTime::Finite(10.0));
        assert!((0.0..1e-300).contains(&info));
    }

    #[test]
    fn bound_examples() {
        for n in [1usize, 5, 100] {
            let times: Vec<f64> = (1..=n).map(|k| k as f64 * PI).collect();
            let nf = n as f64;
            assert_relative_eq!(
                crb(&times),
                6.0 / (PI * PI * nf * (1.0 + nf) * (1.0 + 2.0 * nf)),
                max_relative = 1e-13
            );
            assert_relative_eq!(crb(&vec![PI; n]), 1.0 / (nf * PI * PI), max_relative = 1e-13);
        }
        let t2 = 1e4 * PI;
        assert_relative_eq!(
            crb_ultimate(100, 1.0, DecayTime::Finite(t2)).unwrap(),
            E * E / (100.0 * t2 * t2),
            max_relative = 1e-15
        );
        assert_eq!(crb_ultimate(10, 1.0, DecayTime::<f64>::Infinite).unwrap(), 0.0);
        assert!(crb_ultimate(0, 1.0, DecayTime::Finite(t2)).is_err());
        assert_eq!(crb::<f64>(&[]), f64::INFINITY);
        assert_eq!(crb(&[0.0]), f64::INFINITY);
    }

    #[test]
    fn floor_examples() {
        assert_eq!(info_theoretic_floor::<f64>(0), 0.25);
        assert_eq!(info_theoretic_floor::<f64>(10), 2f64.powi(-22));
        // The noiseless bound can drop below the floor for fast-growing times.
        let times: Vec<f64> = (1..=10).map(|k| 4f64.powi(k)).collect();
        assert!(crb(&times) < info_theoretic_floor(10));
    }

    #[test]
    fn bound_ordering_and_ultimate() {
        let mut rng = trial_stream(23, 0);
        for _ in 0..200 {
            let n = rng.gen_range(1..20);
            let t2 = DecayTime::Finite(rng.gen_range(1.0..1e3));
            let eta = rng.gen_range(0.05..=1.0);
            let omega = draw_omega(&mut rng);
            let times: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..2e3)).collect();
            let base = crb(&times);
            let sharp = crb_t2_sharp(&times, eta, t2);
            let full = crb_t2(&times, omega, eta, t2);
            assert!(base <= sharp * (1.0 + 1e-12));
            assert!(sharp <= full * (1.0 + 1e-12), "{sharp} > {full}");
            assert!(sharp >= crb_ultimate(n, eta, t2).unwrap() * (1.0 - 1e-12));
        }
    }

    #[test]
    fn generic_over_f32() {
        let p: f32 = likelihood(Outcome::Zero, 0.5f32, std::f32::consts::PI).unwrap();
        assert!((p - 0.5).abs() < 1e-6);
        let b: f32 = crb(&[std::f32::consts::PI; 4]);
        assert!((b - 1.0 / (4.0 * std::f32::consts::PI.powi(2))).abs() < 1e-6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn outcomes_normalize(omega in 1e-6..1.0f64, t in 0.0..1e4f64, eta in 1e-3..=1.0f64, t2 in 1e-2..1e6f64) {
                let p0 = likelihood_t2(Outcome::Zero, omega, t, eta, DecayTime::Finite(t2)).unwrap();
                let p1 = likelihood_t2(Outcome::One, omega, t, eta, DecayTime::Finite(t2)).unwrap();
                prop_assert!((0.0..=1.0).contains(&p0));
                prop_assert_eq!(p0 + p1, 1.0);
            }

            #[test]
            fn fisher_is_permutation_invariant(mut times in prop::collection::vec(0.0..1e3f64, 0..30), seed in any::<u64>()) {
                let before = fisher_information(&times);
                let mut rng = trial_stream(seed, 0);
                rand::seq::SliceRandom::shuffle(times.as_mut_slice(), &mut rng);
                prop_assert!((fisher_information(&times) - before).abs() <= 1e-12 * before.max(1.0));
            }
        }
    }
}
