//! Euclidean realizations of the modified metric.

mod curve;
mod optimize;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{EmbeddingMap, MetricField};
use crate::manifold::SampledManifold;

pub use curve::embed_curve;
pub use optimize::{optimize_embedding, stress, stress_gradient, Optimized, StressSample};

/// Ambient dimension from the Nash bound, `n(n + 1)(3n + 11)/2`.
pub fn nash_dimension(n: u64) -> Result<u64> {
    if n < 1 {
        return Err(Error::InvalidParameter("manifold dimension must be at least 1".into()));
    }
    // n(n + 1) is even, so halve it before the last product
    n.checked_add(1)
        .and_then(|x| x.checked_mul(n))
        .map(|x| x / 2)
        .zip(n.checked_mul(3).and_then(|x| x.checked_add(11)))
        .and_then(|(a, b)| a.checked_mul(b))
        .ok_or_else(|| Error::InvalidParameter(format!("nash dimension of {n} overflows")))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provider {
    /// Straight segment along the first axis.
    Line,
    /// Closed polygon inscribed in a circle.
    Circle,
    /// Planar spiral `r(t) = ρ∞·(1 + 1/(1 + t))`, winding onto the limit circle.
    SpiralToCircle,
    /// Planar spiral `r(t) = ρ∞/(1 + t)`, winding into the origin.
    SpiralToPoint,
    /// Stress minimization from a random start.
    Optimizer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerParams {
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once every edge length is within this relative error.
    pub rel_tol: f64,
    /// Stop once the gradient norm falls below this fraction of its initial value.
    pub grad_tol: f64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            seed: 42,
            max_iters: 20_000,
            rel_tol: 1e-10,
            grad_tol: 1e-14,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedRequest {
    pub ambient_dim: usize,
    pub provider: Provider,
    /// Limit radius `ρ∞` of the spiral providers.
    pub spiral_radius: f64,
    pub optimizer: OptimizerParams,
}

impl Default for EmbedRequest {
    fn default() -> Self {
        EmbedRequest {
            ambient_dim: 2,
            provider: Provider::Line,
            spiral_radius: 1.0,
            optimizer: OptimizerParams::default(),
        }
    }
}

/// Relative edge-length errors of an embedding against target lengths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    pub max_rel_edge_error: f64,
    pub mean_rel_edge_error: f64,
    /// `Σ (|X(u) − X(v)|² − ℓ²)²` over edges.
    pub stress: f64,
    /// Always true for the explicit providers.
    pub converged: bool,
}

/// Edge lengths of `m` under the cell metric `gt`.
pub fn target_lengths(m: &SampledManifold, gt: &MetricField) -> Result<Vec<f64>> {
    gt.check_on(m)?;
    (0..m.edges().len())
        .map(|k| {
            let sq = m.edge_sq_length_under(k, gt);
            if sq > 0.0 && sq.is_finite() {
                Ok(sq.sqrt())
            } else {
                Err(Error::Degenerate {
                    cell: m.edges()[k].cells[0],
                    reason: format!("edge {k} has length {sq}"),
                })
            }
        })
        .collect()
}

pub fn distortion(x: &EmbeddingMap, m: &SampledManifold, gt: &MetricField) -> Result<DistortionReport> {
    let targets = target_lengths(m, gt)?;
    distortion_against(x, m, &targets)
}

/// Distortion against explicit per-edge target lengths.
pub fn distortion_against(x: &EmbeddingMap, m: &SampledManifold, targets: &[f64]) -> Result<DistortionReport> {
    x.check_on(m)?;
    if targets.len() != m.edges().len() {
        return Err(Error::SizeMismatch {
            expected: m.edges().len(),
            got: targets.len(),
        });
    }
    let (mut max, mut sum, mut stress) = (0.0f64, 0.0, 0.0);
    for (e, &l) in m.edges().iter().zip(targets) {
        let d = x.distance(e.a, e.b);
        let rel = (d - l).abs() / l;
        max = max.max(rel);
        sum += rel;
        stress += (d * d - l * l).powi(2);
    }
    let n = targets.len().max(1) as f64;
    Ok(DistortionReport {
        max_rel_edge_error: max,
        mean_rel_edge_error: sum / n,
        stress,
        converged: true,
    })
}
