//! Discretized posterior over `ω ∈ (0,1)`.

use crate::error::{Error, Result};
use crate::model::{fringe_probability, DecayTime, Measurement};
use crate::optim::scan_then_refine;

/// Node count used when none is given.
pub const DEFAULT_GRID_NODES: usize = 10_000;

/// Smallest grid accepted.
pub const MIN_GRID_NODES: usize = 1_000;

/// Density values on a strictly increasing set of nodes in (0,1).
///
/// Each node owns the part of (0,1) closer to it than to any other node, so
/// integrals are `Σ ρᵢ Δᵢ` with `Δᵢ` the cell widths. On the default uniform
/// grid the nodes sit at cell midpoints and every `Δᵢ = 1/n`. The density is
/// renormalized after every update so that `Σ ρᵢ Δᵢ = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridPosterior {
    nodes: Vec<f64>,
    cells: Vec<f64>,
    density: Vec<f64>,
}

impl GridPosterior {
    /// Uniform prior on `n` midpoint nodes.
    pub fn uniform(n: usize) -> Result<Self> {
        let nodes = (0..n).map(|i| (i as f64 + 0.5) / n as f64).collect();
        Self::from_nodes(nodes)
    }

    /// Uniform prior on arbitrary nodes.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Self> {
        let density = vec![1.0; nodes.len()];
        Self::from_density(nodes, density)
    }

    /// Posterior with the given (unnormalized) density values.
    pub fn from_density(nodes: Vec<f64>, density: Vec<f64>) -> Result<Self> {
        if nodes.len() < MIN_GRID_NODES {
            return Err(Error::Domain(format!(
                "grid posterior needs at least {MIN_GRID_NODES} nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.len() != density.len() {
            return Err(Error::Domain("node and density lengths differ".into()));
        }
        let increasing = nodes.windows(2).all(|w| w[0] < w[1]);
        if !increasing || nodes[0] <= 0.0 || nodes[nodes.len() - 1] >= 1.0 {
            return Err(Error::Domain("grid nodes must be strictly increasing inside (0,1)".into()));
        }
        if density.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain("grid density must be finite and non-negative".into()));
        }
        let cells = cell_widths(&nodes);
        let mut post = Self { nodes, cells, density };
        post.normalize()?;
        Ok(post)
    }

    /// Posterior proportional to `exp(log_weight)`, shifted by the maximum
    /// before exponentiating.
    pub fn from_log_weights(nodes: Vec<f64>, log_weight: &[f64]) -> Result<Self> {
        let max = log_weight.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return Err(Error::DegeneratePosterior("every node has zero likelihood".into()));
        }
        let density = log_weight.iter().map(|&l| (l - max).exp()).collect();
        Self::from_density(nodes, density)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn density(&self) -> &[f64] {
        &self.density
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `Σ ρᵢ Δᵢ`; one after every update.
    pub fn mass(&self) -> f64 {
        self.density.iter().zip(&self.cells).map(|(p, w)| p * w).sum()
    }

    fn normalize(&mut self) -> Result<()> {
        let mass = self.mass();
        if !(mass > 0.0) || !mass.is_finite() {
            return Err(Error::DegeneratePosterior(format!("posterior mass {mass} after update")));
        }
        let inv = 1.0 / mass;
        self.density.iter_mut().for_each(|p| *p *= inv);
        Ok(())
    }

    /// Bayes update with the noisy likelihood, returning the new posterior.
    pub fn update(&self, m: &Measurement<f64>, eta: f64, t2: DecayTime<f64>) -> Result<Self> {
        let mut next = self.clone();
        next.update_in_place(m, eta, t2)?;
        Ok(next)
    }

    /// In-place Bayes update. On error the posterior is left unnormalized.
    pub fn update_in_place(&mut self, m: &Measurement<f64>, eta: f64, t2: DecayTime<f64>) -> Result<()> {
        let contrast = eta * t2.decay(m.time);
        for (p, &w) in self.density.iter_mut().zip(&self.nodes) {
            *p *= fringe_probability(m.outcome, w, m.time, contrast);
        }
        self.normalize()
    }

    /// Posterior mean and variance by the cell quadrature.
    pub fn moments(&self) -> (f64, f64) {
        let mean: f64 = self
            .density
            .iter()
            .zip(&self.cells)
            .zip(&self.nodes)
            .map(|((p, c), w)| p * c * w)
            .sum();
        let var: f64 = self
            .density
            .iter()
            .zip(&self.cells)
            .zip(&self.nodes)
            .map(|((p, c), w)| p * c * (w - mean).powi(2))
            .sum();
        (mean, var.max(0.0))
    }

    /// Expected posterior variance `Σ_d Pr(d) V[ω | d]` of a measurement at `t`.
    pub fn expected_posterior_variance(&self, t: f64, eta: f64, t2: DecayTime<f64>) -> f64 {
        let contrast = eta * t2.decay(t);
        let mut acc = [[0.0f64; 3]; 2];
        for ((&p, &c), &w) in self.density.iter().zip(&self.cells).zip(&self.nodes) {
            let f = 0.5 * contrast * (w * t).cos();
            let mass = p * c;
            for (slot, lik) in acc.iter_mut().zip([0.5 + f, 0.5 - f]) {
                let q = mass * lik;
                slot[0] += q;
                slot[1] += q * w;
                slot[2] += q * w * w;
            }
        }
        acc.iter()
            .filter(|a| a[0] > 0.0)
            .map(|a| {
                let mean = a[1] / a[0];
                (a[2] - a[0] * mean * mean).max(0.0)
            })
            .sum()
    }

    /// Greedy measurement time: the minimizer of the expected posterior
    /// variance over `(0, t_max]`, by a dense scan polished with golden-section
    /// search.
    pub fn greedy_time(&self, eta: f64, t2: DecayTime<f64>, t_max: f64) -> f64 {
        scan_then_refine(|t| self.expected_posterior_variance(t, eta, t2), 1e-9, t_max, 2_000, 1e-10)
    }

    /// Posterior after a whole record, from this prior.
    pub fn update_all<'a, I>(&self, measurements: I, eta: f64, t2: DecayTime<f64>) -> Result<Self>
    where
        I: IntoIterator<Item = &'a Measurement<f64>>,
    {
        let mut next = self.clone();
        for m in measurements {
            next.update_in_place(m, eta, t2)?;
        }
        Ok(next)
    }
}

fn cell_widths(nodes: &[f64]) -> Vec<f64> {
    let n = nodes.len();
    (0..n)
        .map(|i| {
            let lo = if i == 0 { 0.0 } else { 0.5 * (nodes[i - 1] + nodes[i]) };
            let hi = if i + 1 == n { 1.0 } else { 0.5 * (nodes[i] + nodes[i + 1]) };
            hi - lo
        })
        .collect()
}
