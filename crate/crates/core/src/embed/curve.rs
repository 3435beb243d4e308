//! Explicit embeddings of curves.

use super::{target_lengths, EmbedRequest, Provider};
use crate::error::{Error, Result};
use crate::fields::{EmbeddingMap, MetricField};
use crate::manifold::{ChainOrder, SampledManifold};

const BISECTION_STEPS: usize = 200;

pub fn embed_curve(m: &SampledManifold, gt: &MetricField, req: &EmbedRequest) -> Result<EmbeddingMap> {
    if m.dim() != 1 {
        return Err(Error::Dimension(format!(
            "curve providers need a 1-manifold, got dimension {}",
            m.dim()
        )));
    }
    let chain = m
        .chain_order()
        .ok_or_else(|| Error::Unsupported("curve providers need a simple path or cycle".into()))?;
    let lengths = target_lengths(m, gt)?;
    let planar = !matches!(req.provider, Provider::Line);
    let need = if planar { 2 } else { 1 };
    if req.ambient_dim < need {
        return Err(Error::Dimension(format!(
            "{:?} provider needs ambient dimension ≥ {need}",
            req.provider
        )));
    }
    if chain.closed != matches!(req.provider, Provider::Circle) {
        let want = if chain.closed { "an open" } else { "a closed" };
        return Err(Error::Unsupported(format!(
            "{:?} provider needs {want} curve",
            req.provider
        )));
    }
    let planar_points = match req.provider {
        Provider::Line => line(&chain, &lengths),
        Provider::Circle => circle(&chain, &lengths)?,
        Provider::SpiralToCircle | Provider::SpiralToPoint => {
            let rho = req.spiral_radius;
            if !(rho > 0.0 && rho.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "spiral radius must be positive, got {rho}"
                )));
            }
            let radius: fn(f64, f64) -> f64 = match req.provider {
                Provider::SpiralToCircle => |rho, t| rho * (1.0 + 1.0 / (1.0 + t)),
                _ => |rho, t| rho / (1.0 + t),
            };
            spiral(m, &chain, &lengths, |t| radius(rho, t))?
        }
        Provider::Optimizer => return Err(Error::InvalidParameter("the optimizer is not a curve provider".into())),
    };
    let mut coords = vec![0.0; m.vertex_count() * req.ambient_dim];
    for (v, p) in planar_points.iter().enumerate() {
        coords[v * req.ambient_dim..v * req.ambient_dim + need].copy_from_slice(&p[..need]);
    }
    EmbeddingMap::new(req.ambient_dim, coords)
}

/// Per-vertex planar points from a walk that places `order[i + 1]` given `order[i]`.
fn walk(chain: &ChainOrder, mut step: impl FnMut(usize, usize, [f64; 2]) -> Result<[f64; 2]>) -> Result<Vec<[f64; 2]>> {
    let n = chain.vertices.len();
    let mut pts = vec![[0.0; 2]; n];
    let mut cur = step(usize::MAX, chain.vertices[0], [0.0; 2])?;
    pts[chain.vertices[0]] = cur;
    for i in 0..n - 1 {
        cur = step(chain.edges[i], chain.vertices[i + 1], cur)?;
        pts[chain.vertices[i + 1]] = cur;
    }
    Ok(pts)
}

fn line(chain: &ChainOrder, lengths: &[f64]) -> Vec<[f64; 2]> {
    walk(chain, |k, _, p| {
        Ok(if k == usize::MAX { p } else { [p[0] + lengths[k], 0.0] })
    })
    .expect("line walk cannot fail")
}

/// Inscribed polygon whose chords match the edge lengths; the radius solves
/// `Σ 2·asin(ℓᵢ/2R) = 2π`.
fn circle(chain: &ChainOrder, lengths: &[f64]) -> Result<Vec<[f64; 2]>> {
    let ls: Vec<f64> = chain.edges.iter().map(|&k| lengths[k]).collect();
    let turn = |r: f64| ls.iter().map(|l| 2.0 * (l / (2.0 * r)).min(1.0).asin()).sum::<f64>();
    let longest = ls.iter().copied().fold(0.0, f64::max);
    let mut lo = 0.5 * longest;
    if turn(lo) < 2.0 * std::f64::consts::PI {
        return Err(Error::Infeasible {
            edge: chain.edges[0],
            reason: "one edge is longer than all the others together allow for an inscribed polygon".into(),
        });
    }
    let mut hi = ls.iter().sum::<f64>();
    while turn(hi) > 2.0 * std::f64::consts::PI {
        hi *= 2.0;
    }
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if turn(mid) > 2.0 * std::f64::consts::PI {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let mut theta = 0.0;
    walk(chain, |k, _, _| {
        if k != usize::MAX {
            theta = wrap(theta + 2.0 * (lengths[k] / (2.0 * r)).min(1.0).asin());
        }
        Ok([r * theta.cos(), r * theta.sin()])
    })
}

/// Keeps the running angle in `[0, 2π)` so its rounding stays at the level
/// of a single increment however many turns the curve makes.
fn wrap(theta: f64) -> f64 {
    if theta >= std::f64::consts::TAU {
        theta - std::f64::consts::TAU
    } else {
        theta
    }
}

/// Chord between points at radii `ra`, `rb` separated by angle `dtheta`.
fn chord(ra: f64, rb: f64, dtheta: f64) -> f64 {
    let s = (0.5 * dtheta).sin();
    ((ra - rb).powi(2) + 4.0 * ra * rb * s * s).sqrt()
}

/// Angle increment in `[0, π]` whose chord is `len`, by bisection.
fn angle_for_chord(ra: f64, rb: f64, len: f64) -> Option<f64> {
    if !(len >= (ra - rb).abs() && len <= ra + rb) {
        return None;
    }
    let (mut lo, mut hi) = (0.0f64, std::f64::consts::PI);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if chord(ra, rb, mid) < len {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

fn spiral(
    m: &SampledManifold,
    chain: &ChainOrder,
    lengths: &[f64],
    radius: impl Fn(f64) -> f64,
) -> Result<Vec<[f64; 2]>> {
    let mut theta = 0.0;
    let mut prev_r = 0.0;
    walk(chain, |k, v, _| {
        let r = radius(m.chart()[v][0]);
        if k != usize::MAX {
            let len = lengths[k];
            let step = angle_for_chord(prev_r, r, len).ok_or_else(|| Error::Infeasible {
                edge: k,
                reason: format!(
                    "length {len} outside the reachable chord range [{}, {}]",
                    (prev_r - r).abs(),
                    prev_r + r
                ),
            })?;
            theta = wrap(theta + step);
        }
        prev_r = r;
        Ok([r * theta.cos(), r * theta.sin()])
    })
}
