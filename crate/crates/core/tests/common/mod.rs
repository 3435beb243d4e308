#![allow(dead_code)]

use std::collections::BTreeSet;

use proper_lift::embed::{stress, stress_gradient};
use proper_lift::SampledManifold;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type EdgeList = Vec<(usize, usize, f64)>;

/// Random connected graph on at most `max_n` vertices: a random spanning
/// tree plus extra edges. Half the instances use small integer lengths so
/// that ties are common.
pub fn random_graph(seed: u64, max_n: usize) -> (usize, EdgeList, usize) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(1..=max_n);
    let integer = rng.random_bool(0.5);
    let len = |rng: &mut ChaCha8Rng| {
        if integer {
            rng.random_range(1..4) as f64
        } else {
            rng.random_range(0.01..10.0)
        }
    };
    let mut seen = BTreeSet::new();
    let mut edges = Vec::new();
    for v in 1..n {
        let u = rng.random_range(0..v);
        seen.insert((u, v));
        let l = len(&mut rng);
        edges.push((u, v, l));
    }
    let extra = rng.random_range(0..=n * n.saturating_sub(1) / 2);
    for _ in 0..extra {
        let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
        if a != b && seen.insert((a.min(b), a.max(b))) {
            let l = len(&mut rng);
            edges.push((a, b, l));
        }
    }
    let base = rng.random_range(0..n);
    (n, edges, base)
}

/// Shortest distances by enumerating every simple path from `base`.
pub fn brute_force_distances(n: usize, edges: &[(usize, usize, f64)], base: usize) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b, l) in edges {
        adj[a].push((b, l));
        adj[b].push((a, l));
    }
    let mut best = vec![f64::INFINITY; n];
    let mut on_path = vec![false; n];
    fn walk(v: usize, acc: f64, adj: &[Vec<(usize, f64)>], on_path: &mut [bool], best: &mut [f64]) {
        best[v] = best[v].min(acc);
        on_path[v] = true;
        for &(u, l) in &adj[v] {
            if !on_path[u] {
                walk(u, acc + l, adj, on_path, best);
            }
        }
        on_path[v] = false;
    }
    walk(base, 0.0, &adj, &mut on_path, &mut best);
    best
}

/// Relative error of the analytic stress gradient against central
/// differences on a random instance.
pub fn gradient_check(seed: u64) -> f64 {
    let (n, edges, base) = random_graph(seed, 8);
    let m = SampledManifold::from_edge_lengths(n, &edges, base).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let dim = rng.random_range(1..=4);
    let x: Vec<f64> = (0..n * dim).map(|_| rng.random_range(-1.0..1.0)).collect();
    let targets: Vec<f64> = (0..m.edges().len()).map(|_| rng.random_range(0.2..2.0)).collect();
    let g = stress_gradient(&m, &x, dim, &targets);
    let h = 1e-5;
    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..x.len() {
        let (mut xp, mut xm) = (x.clone(), x.clone());
        xp[i] += h;
        xm[i] -= h;
        let fd = (stress(&m, &xp, dim, &targets) - stress(&m, &xm, dim, &targets)) / (2.0 * h);
        num += (fd - g[i]).powi(2);
        den += g[i].powi(2);
    }
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Continuum model of the smoother on a 1-D domain: repeated truncated
/// Gaussian averaging of `f`, evaluated by Simpson quadrature on a fine
/// uniform grid, with the same clamp.
pub struct QuadratureSmoother {
    pub xs: Vec<f64>,
    pub f: Vec<f64>,
    pub period: Option<f64>,
}

impl QuadratureSmoother {
    /// Gaussian averages with per-point widths, Simpson weights over the
    /// symmetric window, clipped to the domain.
    pub fn average(&self, values: &[f64], sigmas: &[f64]) -> Vec<f64> {
        let n = self.xs.len();
        let dx = self.xs[1] - self.xs[0];
        let floor = (-4.5f64).exp();
        (0..n)
            .map(|i| {
                let sigma = sigmas[i];
                let reach = (3.0 * sigma / dx).ceil() as isize;
                let (mut wsum, mut acc) = (0.0, 0.0);
                for k in -reach..=reach {
                    let j = i as isize + k;
                    let j = match self.period {
                        Some(_) => j.rem_euclid(n as isize) as usize,
                        None if j < 0 || j >= n as isize => continue,
                        None => j as usize,
                    };
                    let d = (k as f64 * dx).abs();
                    let w = ((-0.5 * (d / sigma).powi(2)).exp() - floor).max(0.0);
                    let simpson = if k == -reach || k == reach {
                        1.0
                    } else if k % 2 == 0 {
                        2.0
                    } else {
                        4.0
                    };
                    wsum += simpson * w;
                    acc += simpson * w * values[j];
                }
                acc / wsum
            })
            .collect()
    }

    /// Widths proportional to `f` after one fixed-width pass at the smallest width.
    pub fn widths(&self, width_fraction: f64) -> Vec<f64> {
        let min = self.f.iter().copied().fold(f64::INFINITY, f64::min);
        let narrow = vec![width_fraction * min; self.f.len()];
        self.average(&self.f, &narrow)
            .into_iter()
            .map(|x| width_fraction * x)
            .collect()
    }

    pub fn pass(&self, values: &[f64], widths: &[f64], band: f64) -> Vec<f64> {
        self.average(values, widths)
            .into_iter()
            .zip(&self.f)
            .map(|(p, f)| p.clamp(f * (1.0 - band), f * (1.0 + band)))
            .collect()
    }

    /// Largest difference quotient over all pairs of grid points.
    pub fn pairwise_lipschitz(&self, values: &[f64]) -> f64 {
        let n = self.xs.len();
        let mut best: f64 = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let mut d = (self.xs[j] - self.xs[i]).abs();
                if let Some(p) = self.period {
                    d = d.min(p - d);
                }
                best = best.max((values[j] - values[i]).abs() / d);
            }
        }
        best
    }
}
