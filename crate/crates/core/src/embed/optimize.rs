//! Stress minimization `S(X) = Σ (|X_u − X_v|² − ℓ²)²` by gradient descent
//! with a backtracking line search.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{distortion_against, target_lengths, DistortionReport, EmbedRequest};
use crate::error::{Error, Result};
use crate::fields::{EmbeddingMap, MetricField};
use crate::manifold::SampledManifold;

pub const OPTIMIZER_VERTEX_LIMIT: usize = 5000;
const ARMIJO: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StressSample {
    pub iter: usize,
    pub stress: f64,
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Optimized {
    pub map: EmbeddingMap,
    pub report: DistortionReport,
    pub trace: Vec<StressSample>,
}

fn residuals(m: &SampledManifold, x: &[f64], dim: usize, targets: &[f64]) -> Vec<f64> {
    m.edges()
        .par_iter()
        .zip(targets)
        .map(|(e, l)| {
            let (p, q) = (&x[e.a * dim..(e.a + 1) * dim], &x[e.b * dim..(e.b + 1) * dim]);
            let sq: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
            sq - l * l
        })
        .collect()
}

/// Stress of flat coordinates `x` (`dim` per vertex).
pub fn stress(m: &SampledManifold, x: &[f64], dim: usize, targets: &[f64]) -> f64 {
    residuals(m, x, dim, targets).iter().map(|r| r * r).sum()
}

fn gradient_from(m: &SampledManifold, x: &[f64], dim: usize, res: &[f64]) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    // one vertex per task, neighbors in sorted order: independent of the thread count
    g.par_chunks_mut(dim).enumerate().for_each(|(v, gv)| {
        let xv = &x[v * dim..(v + 1) * dim];
        for &(u, k) in m.neighbors(v) {
            let xu = &x[u * dim..(u + 1) * dim];
            let c = 4.0 * res[k];
            for i in 0..dim {
                gv[i] += c * (xv[i] - xu[i]);
            }
        }
    });
    g
}

pub fn stress_gradient(m: &SampledManifold, x: &[f64], dim: usize, targets: &[f64]) -> Vec<f64> {
    gradient_from(m, x, dim, &residuals(m, x, dim, targets))
}

fn max_rel_error(res: &[f64], targets: &[f64]) -> f64 {
    res.iter()
        .zip(targets)
        .map(|(r, l)| ((r + l * l).max(0.0).sqrt() - l).abs() / l)
        .fold(0.0, f64::max)
}

fn initial_layout(n: usize, dim: usize, radius: f64, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let p: Vec<f64> = loop {
            let p: Vec<f64> = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
            let norm = p.iter().map(|c: &f64| c * c).sum::<f64>().sqrt();
            if norm > 1e-12 {
                break p.into_iter().map(|c| radius * c / norm).collect();
            }
        };
        x.extend(p);
    }
    x
}

pub fn optimize_embedding(m: &SampledManifold, gt: &MetricField, req: &EmbedRequest) -> Result<Optimized> {
    let n = m.vertex_count();
    if n > OPTIMIZER_VERTEX_LIMIT {
        return Err(Error::CapExceeded {
            requested: n,
            cap: OPTIMIZER_VERTEX_LIMIT,
        });
    }
    let dim = req.ambient_dim;
    if dim < m.dim() {
        return Err(Error::Dimension(format!(
            "ambient dimension {dim} is below the manifold dimension {}",
            m.dim()
        )));
    }
    let p = &req.optimizer;
    if !(p.rel_tol >= 0.0 && p.grad_tol >= 0.0) {
        return Err(Error::InvalidParameter(
            "optimizer tolerances must be non-negative".into(),
        ));
    }
    let targets = target_lengths(m, gt)?;
    let mean = targets.iter().sum::<f64>() / targets.len().max(1) as f64;
    let mut x = initial_layout(n, dim, mean.max(f64::MIN_POSITIVE), p.seed);

    let mut res = residuals(m, &x, dim, &targets);
    let mut s: f64 = res.iter().map(|r| r * r).sum();
    let mut trace = vec![StressSample {
        iter: 0,
        stress: s,
        step: 0.0,
    }];
    let mut step = 1.0 / (mean * mean).max(f64::MIN_POSITIVE);
    let mut g0 = None;
    let mut converged = max_rel_error(&res, &targets) <= p.rel_tol;
    let mut iter = 0;
    while !converged && iter < p.max_iters {
        let g = gradient_from(m, &x, dim, &res);
        let gg: f64 = g.iter().map(|c| c * c).sum();
        let g0 = *g0.get_or_insert(gg.sqrt());
        if gg.sqrt() <= p.grad_tol * g0 || gg == 0.0 {
            break;
        }
        let accepted = loop {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let tres = residuals(m, &trial, dim, &targets);
            let ts: f64 = tres.iter().map(|r| r * r).sum();
            if ts <= s - ARMIJO * step * gg {
                break Some((trial, tres, ts));
            }
            step *= 0.5;
            if step < f64::MIN_POSITIVE {
                break None;
            }
        };
        let Some((trial, tres, ts)) = accepted else { break };
        assert!(ts <= s, "stress increased on an accepted step");
        iter += 1;
        trace.push(StressSample { iter, stress: ts, step });
        x = trial;
        res = tres;
        s = ts;
        step *= 2.0;
        converged = max_rel_error(&res, &targets) <= p.rel_tol;
    }
    let map = EmbeddingMap::new(dim, x)?;
    let mut report = distortion_against(&map, m, &targets)?;
    report.converged = converged;
    Ok(Optimized { map, report, trace })
}
