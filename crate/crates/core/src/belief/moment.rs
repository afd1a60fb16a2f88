use std::num::NonZeroUsize;
use std::sync::OnceLock;

use gauss_quad::hermite::GaussHermite;

use super::GaussianBelief;
use crate::error::{Error, Result};
use crate::model::{validate_eta, DecayTime, Measurement};

const COARSE_NODES: usize = 64;
const FINE_NODES: usize = 128;
const AGREEMENT_RTOL: f64 = 1e-8;

fn rule(nodes: usize, cell: &'static OnceLock<GaussHermite>) -> &'static GaussHermite {
    cell.get_or_init(|| GaussHermite::new(NonZeroUsize::new(nodes).expect("non-zero node count")))
}

fn coarse_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    rule(COARSE_NODES, &RULE)
}

fn fine_rule() -> &'static GaussHermite {
    static RULE: OnceLock<GaussHermite> = OnceLock::new();
    rule(FINE_NODES, &RULE)
}

/// Mass, mean offset and variance of the posterior by one Hermite rule,
/// integrating over `ω = μ + √2 σ x`.
fn hermite_moments(quad: &GaussHermite, b: &GaussianBelief<f64>, m: &Measurement<f64>, contrast: f64) -> (f64, f64, f64) {
    let scale = std::f64::consts::SQRT_2 * b.sigma();
    let s = -m.outcome.sign::<f64>();
    let lik = |x: f64| 0.5 + 0.5 * s * contrast * ((b.mu + scale * x) * m.time).cos();
    let mass = quad.integrate(lik);
    let offset = quad.integrate(|x| scale * x * lik(x)) / mass;
    let var = quad.integrate(|x| (scale * x - offset).powi(2) * lik(x)) / mass;
    (mass, offset, var)
}

/// Posterior moments of a Gaussian prior under the full noisy likelihood by
/// Gauss–Hermite quadrature, refit as a Gaussian.
///
/// Works for any measurement time, visibility, and dephasing. The result is
/// computed with two rule sizes; if they disagree the integrand is too
/// oscillatory for the rule and the update fails.
pub fn gauss_moment_match(
    b: &GaussianBelief<f64>,
    m: &Measurement<f64>,
    eta: f64,
    t2: DecayTime<f64>,
) -> Result<GaussianBelief<f64>> {
    validate_eta(eta)?;
    let contrast = eta * t2.decay(m.time);
    let (mass, offset, var) = hermite_moments(fine_rule(), b, m, contrast);
    let (mass_c, offset_c, var_c) = hermite_moments(coarse_rule(), b, m, contrast);
    let scale = b.sigma();
    let converged = mass > 0.0
        && (mass - mass_c).abs() <= AGREEMENT_RTOL * mass
        && (offset - offset_c).abs() <= AGREEMENT_RTOL * scale
        && (var - var_c).abs() <= AGREEMENT_RTOL * b.sigma2;
    if !converged || !(var > 0.0) {
        return Err(Error::DegeneratePosterior(format!(
            "Gauss-Hermite moments did not converge at t = {} (sigma = {scale})",
            m.time
        )));
    }
    let mut next = GaussianBelief::new(b.mu + offset, var.max(super::VARIANCE_FLOOR))?;
    next.clamped = var < super::VARIANCE_FLOOR;
    Ok(next)
}
