//! Truncated distance, its tube, and a certified smooth approximation.
//!
//! The smoother runs passes of geodesic Gaussian averaging whose width at a
//! vertex is proportional to the local value of `f`, clamps each pass into
//! the band `[f − ρ, f + ρ]` with `ρ = tube_margin·f/4`, and certifies the
//! result a posteriori: tube containment with clearance and a sampled
//! Lipschitz number of at most 3/4.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::distance::distance_from;
use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::manifold::SampledManifold;

/// Lipschitz bound the smoothed function must meet.
pub const PHI_LIPSCHITZ_BOUND: f64 = 0.75;
/// Lipschitz number of the truncated distance.
pub const TRUNCATION_SLOPE: f64 = 2.0 / 3.0;
/// Vertex count up to which Lipschitz numbers include all vertex pairs.
pub const PAIRWISE_LIPSCHITZ_LIMIT: usize = 1000;

const KERNEL_CUTOFF: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SmoothingParams {
    /// Radius of the ball around the base on which `f` is constant.
    pub r_ball: f64,
    /// Slack added to the truncation slope 2/3.
    pub r_slack: f64,
    pub tube_margin: f64,
    /// Kernel width as a fraction of the local value of `f`.
    pub kernel_width_fraction: f64,
    pub min_passes: usize,
    pub max_passes: usize,
}

impl Default for SmoothingParams {
    fn default() -> Self {
        SmoothingParams {
            r_ball: 0.2,
            r_slack: 1.0 / 12.0,
            tube_margin: 0.5,
            kernel_width_fraction: 0.25,
            min_passes: 2,
            max_passes: 8,
        }
    }
}

impl SmoothingParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if !(self.r_ball > 0.0 && self.r_ball < 0.25) {
            return bad(format!("r_ball = {} must lie in (0, 1/4)", self.r_ball));
        }
        if !(self.r_slack > 0.0 && self.r_slack <= 1.0 / 12.0 + 1e-15) {
            return bad(format!("r_slack = {} must lie in (0, 1/12]", self.r_slack));
        }
        if !(self.tube_margin > 0.0 && self.tube_margin < 1.0) {
            return bad(format!("tube_margin = {} must lie in (0, 1)", self.tube_margin));
        }
        if !(self.kernel_width_fraction >= 0.0 && self.kernel_width_fraction.is_finite()) {
            return bad(format!(
                "kernel_width_fraction = {} must be non-negative",
                self.kernel_width_fraction
            ));
        }
        if self.max_passes == 0 || self.min_passes > self.max_passes {
            return bad(format!(
                "passes: need 1 ≤ max_passes and min_passes ≤ max_passes (got {}, {})",
                self.min_passes, self.max_passes
            ));
        }
        Ok(())
    }

    /// `2/3 + r_slack`, which equals 3/4 at the default slack.
    pub fn lipschitz_bound(&self) -> f64 {
        if self.r_slack >= 1.0 / 12.0 - 1e-15 {
            PHI_LIPSCHITZ_BOUND
        } else {
            TRUNCATION_SLOPE + self.r_slack
        }
    }

    /// Half-width of the clamping band relative to `f`.
    pub fn band(&self) -> f64 {
        self.tube_margin / 4.0
    }

    /// Clearance from the tube boundary relative to `f` that certification
    /// demands.
    pub fn required_clearance(&self) -> f64 {
        self.tube_margin / 8.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmoothingCertificate {
    pub measured_lipschitz: f64,
    pub lipschitz_bound: f64,
    /// Largest amount by which `φ` leaves `[3f/4, 3f/2]`.
    pub max_tube_violation: f64,
    /// Smallest distance to the tube boundary, relative to `f`.
    pub min_tube_clearance: f64,
    pub required_clearance: f64,
    pub kernel_passes: usize,
    pub valid: bool,
}

/// Sampled Lipschitz quotient: edge quotients, plus all vertex pairs with
/// geodesic distances on manifolds of at most [`PAIRWISE_LIPSCHITZ_LIMIT`]
/// vertices.
pub fn lipschitz_number(m: &SampledManifold, field: &ScalarField) -> Result<f64> {
    field.check_on(m)?;
    let nv = m.vertex_count();
    if nv < 2 {
        return Ok(0.0);
    }
    let vals = field.values();
    let mut best = m
        .edges()
        .iter()
        .map(|e| (vals[e.a] - vals[e.b]).abs() / e.length)
        .fold(0.0, f64::max);
    if nv <= PAIRWISE_LIPSCHITZ_LIMIT {
        let pair_best = (0..nv)
            .into_par_iter()
            .map(|u| -> Result<f64> {
                let d = distance_from(m, u)?;
                Ok((0..nv)
                    .filter(|&v| v != u && d[v] > 0.0)
                    .map(|v| (vals[u] - vals[v]).abs() / d[v])
                    .fold(0.0, f64::max))
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        best = best.max(pair_best);
    }
    Ok(best)
}

/// Rounding allowance on a sampled Lipschitz number: differences of values
/// near `max|f|` over the shortest edge lose `max|f|·ε/h` to cancellation.
pub fn lipschitz_rounding(m: &SampledManifold, f: &ScalarField) -> f64 {
    let scale = f.values().iter().fold(0.0f64, |a, x| a.max(x.abs()));
    let h = m.edges().iter().map(|e| e.length).fold(f64::INFINITY, f64::min);
    if h.is_finite() && h > 0.0 {
        (8.0 * f64::EPSILON * scale / h).max(1e-12)
    } else {
        1e-12
    }
}

/// `f = (2/3)·max(D, r_ball)`.
pub fn truncate_distance(d: &ScalarField, params: &SmoothingParams) -> Result<ScalarField> {
    if !(params.r_ball > 0.0 && params.r_ball < 0.25) {
        return Err(Error::InvalidParameter(format!(
            "r_ball = {} must lie in (0, 1/4)",
            params.r_ball
        )));
    }
    d.map(|x| TRUNCATION_SLOPE * x.max(params.r_ball))
}

fn check_positive(f: &ScalarField) -> Result<()> {
    match f.values().iter().position(|&x| !(x > 0.0)) {
        Some(v) => Err(Error::NonPositive { vertex: v, value: f[v] }),
        None => Ok(()),
    }
}

/// `(3f/4, 3f/2)`.
pub fn tube_bounds(f: &ScalarField) -> Result<(ScalarField, ScalarField)> {
    check_positive(f)?;
    Ok((f.map(|x| 0.75 * x)?, f.map(|x| 1.5 * x)?))
}

/// Visits every vertex within geodesic distance `radius` of a vertex.
pub(crate) enum Neighborhoods {
    /// Paths and cycles: walk the chain both ways.
    Chain {
        index: Vec<usize>,
        order: Vec<usize>,
        prefix: Vec<f64>,
        closed: bool,
    },
    /// Bounded Dijkstra on the edge graph.
    Graph,
}

impl Neighborhoods {
    pub(crate) fn new(m: &SampledManifold) -> Self {
        match m.chain_order() {
            Some(c) => {
                let mut index = vec![0; m.vertex_count()];
                for (i, &v) in c.vertices.iter().enumerate() {
                    index[v] = i;
                }
                let mut prefix = Vec::with_capacity(c.edges.len() + 1);
                prefix.push(0.0);
                let mut acc = 0.0;
                for &k in &c.edges {
                    acc += m.edges()[k].length;
                    prefix.push(acc);
                }
                Neighborhoods::Chain {
                    index,
                    order: c.vertices,
                    prefix,
                    closed: c.closed,
                }
            }
            None => Neighborhoods::Graph,
        }
    }

    pub(crate) fn visit(&self, m: &SampledManifold, v: usize, radius: f64, mut f: impl FnMut(usize, f64)) {
        f(v, 0.0);
        match self {
            Neighborhoods::Chain {
                index,
                order,
                prefix,
                closed,
            } => {
                let n = order.len();
                let i = index[v];
                let total = *prefix.last().unwrap_or(&0.0);
                if *closed {
                    // each vertex is reached from the side where it is closer,
                    // and the backward walk never revisits what the forward walk saw
                    let ahead = |j: usize| {
                        if j > i {
                            prefix[j] - prefix[i]
                        } else {
                            total - prefix[i] + prefix[j]
                        }
                    };
                    let mut forward = 0;
                    for step in 1..n {
                        let j = (i + step) % n;
                        let d = ahead(j);
                        if d > radius || d > total - d {
                            break;
                        }
                        f(order[j], d);
                        forward = step;
                    }
                    for step in 1..n - forward {
                        let j = (i + n - step) % n;
                        let d = total - ahead(j);
                        if d > radius {
                            break;
                        }
                        f(order[j], d);
                    }
                } else {
                    for j in i + 1..n {
                        let d = prefix[j] - prefix[i];
                        if d > radius {
                            break;
                        }
                        f(order[j], d);
                    }
                    for j in (0..i).rev() {
                        let d = prefix[i] - prefix[j];
                        if d > radius {
                            break;
                        }
                        f(order[j], d);
                    }
                }
            }
            Neighborhoods::Graph => {
                use std::collections::{BinaryHeap, HashMap};
                #[derive(PartialEq)]
                struct S(f64, usize);
                impl Eq for S {}
                impl Ord for S {
                    fn cmp(&self, o: &Self) -> std::cmp::Ordering {
                        o.0.total_cmp(&self.0).then_with(|| o.1.cmp(&self.1))
                    }
                }
                impl PartialOrd for S {
                    fn partial_cmp(&self, o: &Self) -> Option<std::cmp::Ordering> {
                        Some(self.cmp(o))
                    }
                }
                let mut best: HashMap<usize, f64> = HashMap::from([(v, 0.0)]);
                let mut done: HashMap<usize, ()> = HashMap::new();
                let mut heap = BinaryHeap::from([S(0.0, v)]);
                while let Some(S(d, u)) = heap.pop() {
                    if done.insert(u, ()).is_some() {
                        continue;
                    }
                    if u != v {
                        f(u, d);
                    }
                    for &(w, k) in m.neighbors(u) {
                        let nd = d + m.edges()[k].length;
                        if nd <= radius && best.get(&w).is_none_or(|&b| nd < b) {
                            best.insert(w, nd);
                            heap.push(S(nd, w));
                        }
                    }
                }
            }
        }
    }
}

fn kernel_weight(d: f64, sigma: f64) -> f64 {
    if sigma <= 0.0 {
        return if d == 0.0 { 1.0 } else { 0.0 };
    }
    let floor = (-0.5 * KERNEL_CUTOFF * KERNEL_CUTOFF).exp();
    ((-0.5 * (d / sigma).powi(2)).exp() - floor).max(0.0)
}

/// One averaging pass with per-vertex kernel widths, integrating against the
/// lumped vertex measure. Weights are positive, so the pass is monotone in
/// `values`, and it fixes constants exactly.
pub fn mollify_pass(m: &SampledManifold, values: &[f64], widths: &[f64]) -> Result<Vec<f64>> {
    let nb = Neighborhoods::new(m);
    mollify_with(m, &nb, &m.vertex_measure(), values, widths)
}

fn mollify_with(
    m: &SampledManifold,
    nb: &Neighborhoods,
    measure: &[f64],
    values: &[f64],
    widths: &[f64],
) -> Result<Vec<f64>> {
    let nv = m.vertex_count();
    if values.len() != nv || widths.len() != nv {
        return Err(Error::SizeMismatch {
            expected: nv,
            got: values.len().min(widths.len()),
        });
    }
    Ok((0..nv)
        .into_par_iter()
        .map(|v| {
            let sigma = widths[v];
            let center = values[v];
            let (mut wsum, mut acc) = (0.0, 0.0);
            nb.visit(m, v, KERNEL_CUTOFF * sigma, |u, d| {
                let w = kernel_weight(d, sigma) * measure[u];
                wsum += w;
                acc += w * (values[u] - center);
            });
            center + acc / wsum
        })
        .collect())
}

/// Iterated mollification with clamping, certified after each pass from
/// `min_passes` on.
pub fn smooth_approx(
    m: &SampledManifold,
    f: &ScalarField,
    params: &SmoothingParams,
) -> Result<(ScalarField, SmoothingCertificate)> {
    params.validate()?;
    f.check_on(m)?;
    check_positive(f)?;
    let lf = lipschitz_number(m, f)?;
    if lf > TRUNCATION_SLOPE + lipschitz_rounding(m, f) {
        return Err(Error::InvalidParameter(format!(
            "input has Lipschitz number {lf}, above 2/3"
        )));
    }
    let nb = Neighborhoods::new(m);
    let measure = m.vertex_measure();
    let fv = f.values();
    // widths follow f, but f itself has a kink at the ball radius; one
    // fixed-width pass first keeps that kink out of the width field
    let narrow = vec![params.kernel_width_fraction * f.min(); fv.len()];
    let widths: Vec<f64> = mollify_with(m, &nb, &measure, fv, &narrow)?
        .into_iter()
        .map(|x| params.kernel_width_fraction * x)
        .collect();
    let band = params.band();
    let mut phi = fv.to_vec();
    let mut cert = None;
    for pass in 1..=params.max_passes {
        phi = mollify_with(m, &nb, &measure, &phi, &widths)?
            .into_iter()
            .zip(fv)
            .map(|(p, &x)| p.clamp(x - band * x, x + band * x))
            .collect();
        if pass >= params.min_passes {
            let field = ScalarField::new(phi.clone())?;
            let c = certify(m, &field, f, params, pass)?;
            if c.valid {
                return Ok((field, c));
            }
            cert = Some(c);
        }
    }
    Err(Error::Certification(Box::new(
        cert.expect("max_passes ≥ min_passes ≥ 1 or certified"),
    )))
}

pub fn certify(
    m: &SampledManifold,
    phi: &ScalarField,
    f: &ScalarField,
    params: &SmoothingParams,
    passes: usize,
) -> Result<SmoothingCertificate> {
    phi.check_on(m)?;
    f.check_on(m)?;
    let measured_lipschitz = lipschitz_number(m, phi)?;
    let mut max_tube_violation: f64 = 0.0;
    let mut min_tube_clearance = f64::INFINITY;
    for (&p, &x) in phi.values().iter().zip(f.values()) {
        let (lo, hi) = (0.75 * x, 1.5 * x);
        max_tube_violation = max_tube_violation.max(lo - p).max(p - hi);
        min_tube_clearance = min_tube_clearance.min((p - lo).min(hi - p) / x);
    }
    let lipschitz_bound = params.lipschitz_bound();
    let required_clearance = params.required_clearance();
    let valid =
        measured_lipschitz <= lipschitz_bound && max_tube_violation <= 0.0 && min_tube_clearance >= required_clearance;
    Ok(SmoothingCertificate {
        measured_lipschitz,
        lipschitz_bound,
        max_tube_violation,
        min_tube_clearance,
        required_clearance,
        kernel_passes: passes,
        valid,
    })
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TubeReport {
    /// Vertices where `3f/4 < φ < 3f/2` fails.
    pub tube_violations: Vec<usize>,
    /// Vertices outside the ball where `D/2 < φ < D` fails.
    pub distance_violations: Vec<usize>,
}

impl TubeReport {
    pub fn passed(&self) -> bool {
        self.tube_violations.is_empty() && self.distance_violations.is_empty()
    }
}

pub fn verify_tube(
    phi: &ScalarField,
    f: &ScalarField,
    d: &ScalarField,
    params: &SmoothingParams,
) -> Result<TubeReport> {
    if phi.len() != f.len() || phi.len() != d.len() {
        return Err(Error::SizeMismatch {
            expected: phi.len(),
            got: f.len().min(d.len()),
        });
    }
    let mut report = TubeReport::default();
    for v in 0..phi.len() {
        let (p, x, dv) = (phi[v], f[v], d[v]);
        if !(0.75 * x < p && p < 1.5 * x) {
            report.tube_violations.push(v);
        }
        if dv > params.r_ball && !(0.5 * dv < p && p < dv) {
            report.distance_violations.push(v);
        }
    }
    Ok(report)
}

/// Largest `|φ(v_{i+1}) − 2φ(v_i) + φ(v_{i−1})| / h²` along a uniformly
/// sampled chain, a finite-difference smoothness proxy. `None` for
/// manifolds that are not paths or cycles.
pub fn max_second_difference(m: &SampledManifold, phi: &ScalarField) -> Option<f64> {
    let c = m.chain_order()?;
    let n = c.vertices.len();
    let h = m.mesh_scale();
    let range = if c.closed { 0..n } else { 1..n.saturating_sub(1) };
    Some(
        range
            .map(|i| {
                let prev = c.vertices[(i + n - 1) % n];
                let next = c.vertices[(i + 1) % n];
                (phi[next] - 2.0 * phi[c.vertices[i]] + phi[prev]).abs() / (h * h)
            })
            .fold(0.0, f64::max),
    )
}
