//! The one-coordinate lift `ε = (ε̃, ½φ)` and its verification.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{distortion_against, DistortionReport};
use crate::error::{Error, Result};
use crate::fields::{dist, EmbeddingMap, ScalarField};
use crate::manifold::SampledManifold;

/// Appends `½φ` as a new last coordinate.
pub fn lift(et: &EmbeddingMap, phi: &ScalarField) -> Result<EmbeddingMap> {
    if et.vertex_count() != phi.len() {
        return Err(Error::SizeMismatch {
            expected: et.vertex_count(),
            got: phi.len(),
        });
    }
    let m = et.ambient_dim();
    let mut coords = Vec::with_capacity(et.vertex_count() * (m + 1));
    for (p, &f) in et.points().zip(phi.values()) {
        coords.extend_from_slice(p);
        coords.push(0.5 * f);
    }
    EmbeddingMap::new(m + 1, coords)
}

/// Edge lengths of `e` against the lengths of `m` under its own metric,
/// integrated exactly when an analytic metric is attached.
pub fn pullback_check(e: &EmbeddingMap, m: &SampledManifold) -> Result<DistortionReport> {
    distortion_against(e, m, &m.exact_edge_lengths()?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EscapeReport {
    /// Vertices with `D > r_ball`.
    pub checked: usize,
    /// Vertices where the last coordinate is not above `D/4`.
    pub violations: Vec<usize>,
    /// Smallest `last − D/4` over the checked vertices (absent when none).
    pub min_margin: Option<f64>,
}

impl EscapeReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn last(e: &EmbeddingMap, v: usize) -> f64 {
    *e.point(v).last().expect("ambient dimension ≥ 1")
}

pub fn escape_bound_check(e: &EmbeddingMap, d: &ScalarField, r_ball: f64) -> Result<EscapeReport> {
    if e.vertex_count() != d.len() {
        return Err(Error::SizeMismatch {
            expected: e.vertex_count(),
            got: d.len(),
        });
    }
    let (mut checked, mut violations, mut min_margin) = (0, Vec::new(), None::<f64>);
    for v in 0..d.len() {
        if d[v] > r_ball {
            checked += 1;
            let margin = last(e, v) - d[v] / 4.0;
            if !(margin > 0.0) {
                violations.push(v);
            }
            min_margin = Some(min_margin.map_or(margin, |m| m.min(margin)));
        }
    }
    Ok(EscapeReport {
        checked,
        violations,
        min_margin,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropernessCertificate {
    pub query: Vec<f64>,
    /// Last coordinate of the query point.
    pub q_height: f64,
    /// Vertices with `D ≤ max(8Q, r_ball)` are checked one by one.
    pub near_radius: f64,
    /// Lower bound on the distance from the query to the image of the far
    /// part: `Q` when the escape bound holds there, else 0.
    pub far_bound: f64,
    pub far_count: usize,
    /// Smallest distance from the query to an image vertex of the far part,
    /// for comparison against `far_bound`.
    pub far_min_sampled: Option<f64>,
    /// Exact minimum over the near vertices; absent when there are none.
    pub near_min: Option<f64>,
    pub near_count: usize,
    /// Sampling resolution the near bound is valid up to.
    pub mesh_scale: f64,
    pub verdict: bool,
}

/// Distance bound from `q = (…, Q)` to the lifted image. Far vertices
/// (`D > 8Q`) sit at height above `D/4 > 2Q` once the escape bound holds, so
/// they are at least `Q` away without being enumerated.
pub fn properness_certificate(
    e: &EmbeddingMap,
    m: &SampledManifold,
    d: &ScalarField,
    q: &[f64],
    r_ball: f64,
) -> Result<PropernessCertificate> {
    if q.len() != e.ambient_dim() {
        return Err(Error::SizeMismatch {
            expected: e.ambient_dim(),
            got: q.len(),
        });
    }
    if q.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter("query point must be finite".into()));
    }
    let height = *q.last().expect("checked length");
    if !(height > 0.0) {
        return Err(Error::Unsupported(format!(
            "query height Q = {height}: only points above the base plane (Q > 0) are certified"
        )));
    }
    let near_radius = (8.0 * height).max(r_ball);
    if e.vertex_count() != d.len() {
        return Err(Error::SizeMismatch {
            expected: e.vertex_count(),
            got: d.len(),
        });
    }
    let far: Vec<usize> = (0..d.len()).filter(|&v| d[v] > near_radius).collect();
    // the escape bound restricted to the far part
    let far_certified = far.iter().all(|&v| last(e, v) > d[v] / 4.0);
    let far_bound = if far_certified { height } else { 0.0 };
    let min_over = |vs: &[usize]| vs.par_iter().map(|&v| dist(e.point(v), q)).reduce_with(f64::min);
    let near: Vec<usize> = (0..d.len()).filter(|&v| d[v] <= near_radius).collect();
    let near_min = min_over(&near);
    Ok(PropernessCertificate {
        query: q.to_vec(),
        q_height: height,
        near_radius,
        far_bound,
        far_count: far.len(),
        far_min_sampled: min_over(&far),
        near_min,
        near_count: near.len(),
        mesh_scale: m.mesh_scale(),
        verdict: far_bound > 0.0 && near_min.is_none_or(|x| x > 0.0),
    })
}

/// `(0, …, 0, Q)` in the lifted space.
pub fn axis_query(ambient_dim: usize, height: f64) -> Vec<f64> {
    let mut q = vec![0.0; ambient_dim];
    if let Some(l) = q.last_mut() {
        *l = height;
    }
    q
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WitnessParams {
    /// Only targets with `|y| ≤ radius` are considered.
    pub radius: Option<f64>,
    /// Target point; the image of the last sample when absent.
    pub target: Option<Vec<f64>>,
    /// Returns count when closer than `threshold/(1 + t)`.
    pub threshold: f64,
    pub min_returns: usize,
    /// Only the part of the curve with parameter `t ≤ horizon` is searched.
    pub horizon: Option<f64>,
}

impl Default for WitnessParams {
    fn default() -> Self {
        WitnessParams {
            radius: None,
            target: None,
            threshold: 10.0,
            min_returns: 5,
            horizon: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Return {
    pub t: f64,
    pub distance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonPropernessWitness {
    pub target: Vec<f64>,
    pub threshold: f64,
    /// Returns with increasing `t` and strictly decreasing distance.
    pub returns: Vec<Return>,
}

/// Closest point of segment `a→b` to `y`: (fraction along the segment, distance).
fn closest_on_segment(a: &[f64], b: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut ab2, mut ay_ab) = (0.0, 0.0);
    for i in 0..a.len() {
        let ab = b[i] - a[i];
        ab2 += ab * ab;
        ay_ab += (y[i] - a[i]) * ab;
    }
    let s = if ab2 > 0.0 { (ay_ab / ab2).clamp(0.0, 1.0) } else { 0.0 };
    let d2: f64 = (0..a.len())
        .map(|i| {
            let p = a[i] + s * (b[i] - a[i]);
            (p - y[i]) * (p - y[i])
        })
        .sum();
    (s, d2.sqrt())
}

/// Looks for a point the curve keeps coming back to: local minima of the
/// distance from the polyline to the target, closer than `threshold/(1+t)`
/// and strictly decreasing, at least `min_returns` of them.
pub fn non_properness_witness(
    e: &EmbeddingMap,
    m: &SampledManifold,
    params: &WitnessParams,
) -> Result<Option<NonPropernessWitness>> {
    if m.dim() != 1 {
        return Err(Error::Dimension("witness search needs a curve".into()));
    }
    e.check_on(m)?;
    let chain = m
        .chain_order()
        .filter(|c| !c.closed)
        .ok_or_else(|| Error::Unsupported("witness search needs an open path".into()))?;
    let horizon = params.horizon.unwrap_or(f64::INFINITY);
    let t_of = |v: usize| m.chart()[v][0];
    let verts: Vec<usize> = chain
        .vertices
        .iter()
        .copied()
        .take_while(|&v| t_of(v) <= horizon)
        .collect();
    if verts.len() < 2 {
        return Ok(None);
    }
    let y = match &params.target {
        Some(y) if y.len() != e.ambient_dim() => {
            return Err(Error::SizeMismatch {
                expected: e.ambient_dim(),
                got: y.len(),
            })
        }
        Some(y) => y.clone(),
        None => e.point(*verts.last().expect("non-empty")).to_vec(),
    };
    if params
        .radius
        .is_some_and(|r| y.iter().map(|c| c * c).sum::<f64>().sqrt() > r)
    {
        return Ok(None);
    }
    let segs: Vec<(f64, f64)> = verts
        .par_windows(2)
        .map(|w| {
            let (s, d) = closest_on_segment(e.point(w[0]), e.point(w[1]), &y);
            (t_of(w[0]) + s * (t_of(w[1]) - t_of(w[0])), d)
        })
        .collect();
    let mut returns: Vec<Return> = Vec::new();
    for i in 0..segs.len() {
        let (t, d) = segs[i];
        let left = i == 0 || d < segs[i - 1].1;
        let right = i + 1 == segs.len() || d <= segs[i + 1].1;
        if !(left && right) || !(d < params.threshold / (1.0 + t)) {
            continue;
        }
        if returns.last().is_none_or(|r| d < r.distance) {
            returns.push(Return { t, distance: d });
        }
    }
    Ok((returns.len() >= params.min_returns).then_some(NonPropernessWitness {
        target: y,
        threshold: params.threshold,
        returns,
    }))
}
