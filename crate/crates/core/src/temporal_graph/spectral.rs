use super::{DynamicGraph, Snapshot};
use crate::error::{Error, Result};

/// Stopping rule for the power iteration on `AᵀA`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PowerIteration {
    /// Relative change of the Rayleigh quotient below which iteration stops.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PowerIteration {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 10_000,
        }
    }
}

/// Largest singular value `α*_t = ‖A_t‖₂` of a snapshot.
///
/// Runs power iteration on `AᵀA` from the normalized all-ones vector. The
/// adjacency is nonnegative, so the start vector is never orthogonal to the
/// dominant singular subspace. Empty snapshots return exactly 0.
pub fn spectral_norm(s: &Snapshot, opts: PowerIteration) -> Result<f64> {
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::Config(format!(
            "tolerance must be positive, got {}",
            opts.tol
        )));
    }
    if s.is_empty() {
        return Ok(0.0);
    }
    let n = s.num_vertices();
    let mut x = vec![1.0 / (n as f64).sqrt(); n];
    let mut ax = vec![0.0; n];
    let mut y = vec![0.0; n];
    let mut rayleigh = 0.0;
    for _ in 0..opts.max_iter {
        s.mul_vec(&x, &mut ax);
        s.mul_transpose_vec(&ax, &mut y);
        // ‖x‖ = 1, so xᵀAᵀAx = ‖Ax‖².
        let next: f64 = ax.iter().map(|a| a * a).sum();
        let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Ok(0.0);
        }
        for (xi, yi) in x.iter_mut().zip(&y) {
            *xi = yi / norm;
        }
        if (next - rayleigh).abs() <= opts.tol * next {
            return Ok(next.sqrt());
        }
        rayleigh = next;
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        estimate: rayleigh.sqrt(),
        last_iterate: x,
    })
}

/// `α*_t` for every snapshot of `g`, in time order.
pub fn snapshot_alphas(g: &DynamicGraph) -> Result<Vec<f64>> {
    g.snapshots()
        .iter()
        .map(|s| spectral_norm(s, PowerIteration::default()))
        .collect()
}

/// Geometric mean of per-step spectral norms with the empty-step rule:
/// a zero entry counts as 1, and an all-zero sequence yields 0.
pub fn geometric_mean_of(alphas: &[f64]) -> f64 {
    if alphas.is_empty() || alphas.iter().all(|&a| a == 0.0) {
        return 0.0;
    }
    let log_sum: f64 = alphas
        .iter()
        .map(|&a| if a == 0.0 { 0.0 } else { a.ln() })
        .sum();
    (log_sum / alphas.len() as f64).exp()
}

/// `⟨α*_t⟩` over the graph's horizon.
pub fn alpha_geometric_mean(g: &DynamicGraph) -> Result<f64> {
    Ok(geometric_mean_of(&snapshot_alphas(g)?))
}
