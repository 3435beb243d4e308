//! Manifolds built from closed-form descriptions.

use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticMetric;
use crate::error::{Error, Result};
use crate::manifold::{Cell, ManifoldParts, SampledManifold};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Generator {
    /// Interval `[t0, t1]` split into `edges` equal chart spans.
    LineSegment {
        t0: f64,
        t1: f64,
        edges: usize,
        metric: String,
    },
    /// Closed loop of the given circumference with unit metric.
    Circle { circumference: f64, edges: usize },
    /// The half-line `[0, horizon]` with unit metric.
    HalfLine { horizon: f64, edges: usize },
    /// `k × k` vertex grid on `[0, size]²`, base vertex at the center.
    GridPatch { k: usize, size: f64 },
    /// Patch of a surface of revolution parametrized by the arc length `x`
    /// of the profile curve and the angle `y`; `radius` is the profile
    /// radius as an expression in `x`.
    SurfaceOfRevolution {
        radius: String,
        s_range: [f64; 2],
        theta_range: [f64; 2],
        k: usize,
    },
}

impl Generator {
    pub fn build(&self) -> Result<SampledManifold> {
        match self {
            Generator::LineSegment { t0, t1, edges, metric } => {
                curve_uniform(*t0, *t1, *edges, false, AnalyticMetric::curve(metric.clone()))
            }
            Generator::Circle { circumference, edges } => {
                curve_uniform(0.0, *circumference, *edges, true, AnalyticMetric::curve("1"))
            }
            Generator::HalfLine { horizon, edges } => {
                curve_uniform(0.0, *horizon, *edges, false, AnalyticMetric::curve("1"))
            }
            Generator::GridPatch { k, size } => grid(
                *k,
                *k,
                [0.0, *size],
                [0.0, *size],
                AnalyticMetric::surface("1", "0", "1"),
            ),
            Generator::SurfaceOfRevolution {
                radius,
                s_range,
                theta_range,
                k,
            } => grid(
                *k,
                *k,
                *s_range,
                *theta_range,
                AnalyticMetric::surface("1", "0", format!("({radius})^2")),
            ),
        }
    }
}

/// Uniform sampling of `[t0, t1]` (or the loop `[t0, t1)` when `closed`)
/// with the metric sampled at edge midpoints.
pub fn curve_uniform(t0: f64, t1: f64, edges: usize, closed: bool, metric: AnalyticMetric) -> Result<SampledManifold> {
    if edges == 0 || !(t1 > t0) {
        return Err(Error::InvalidParameter(format!(
            "curve needs t1 > t0 and at least one edge (got [{t0}, {t1}], {edges} edges)"
        )));
    }
    if closed && edges < 2 {
        return Err(Error::InvalidParameter("a closed curve needs at least 2 edges".into()));
    }
    if metric.dim() != 1 {
        return Err(Error::InvalidParameter("curve metric must have one component".into()));
    }
    let compiled = metric.compile()?;
    let span = (t1 - t0) / edges as f64;
    let nv = if closed { edges } else { edges + 1 };
    let chart = (0..nv).map(|i| [t0 + span * i as f64, 0.0]).collect();
    let cells: Vec<Cell> = (0..edges)
        .map(|i| Cell::Edge {
            a: i,
            b: (i + 1) % nv,
            span,
        })
        .collect();
    let tensors = (0..edges)
        .map(|i| compiled.eval([t0 + span * (i as f64 + 0.5), 0.0]))
        .collect::<Result<Vec<_>>>()?;
    SampledManifold::new(ManifoldParts {
        dim: 1,
        chart,
        cells,
        metric: tensors,
        base: 0,
        period: closed.then_some(t1 - t0),
        analytic: Some(metric),
    })
}

/// Triangulated `nx × ny` grid, each square split along its main diagonal.
pub fn grid(nx: usize, ny: usize, xr: [f64; 2], yr: [f64; 2], metric: AnalyticMetric) -> Result<SampledManifold> {
    if nx < 2 || ny < 2 || !(xr[1] > xr[0]) || !(yr[1] > yr[0]) {
        return Err(Error::InvalidParameter(
            "grid needs at least 2×2 vertices and a non-empty box".into(),
        ));
    }
    if metric.dim() != 2 {
        return Err(Error::InvalidParameter(
            "surface metric must have three components".into(),
        ));
    }
    let compiled = metric.compile()?;
    let id = |i: usize, j: usize| j * nx + i;
    let mut chart = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let x = xr[0] + (xr[1] - xr[0]) * i as f64 / (nx - 1) as f64;
            let y = yr[0] + (yr[1] - yr[0]) * j as f64 / (ny - 1) as f64;
            chart.push([x, y]);
        }
    }
    let mut cells = Vec::with_capacity(2 * (nx - 1) * (ny - 1));
    for j in 0..ny - 1 {
        for i in 0..nx - 1 {
            cells.push(Cell::Triangle([id(i, j), id(i + 1, j), id(i + 1, j + 1)]));
            cells.push(Cell::Triangle([id(i, j), id(i + 1, j + 1), id(i, j + 1)]));
        }
    }
    let tensors = cells
        .iter()
        .map(|c| compiled.eval(centroid(&chart, c)))
        .collect::<Result<Vec<_>>>()?;
    SampledManifold::new(ManifoldParts {
        dim: 2,
        chart,
        cells,
        metric: tensors,
        base: id(nx / 2, ny / 2),
        period: None,
        analytic: Some(metric),
    })
}

pub(crate) fn centroid(chart: &[[f64; 2]], c: &Cell) -> [f64; 2] {
    let vs = c.vertices();
    let n = vs.len() as f64;
    let sx: f64 = vs.iter().map(|&v| chart[v][0]).sum();
    let sy: f64 = vs.iter().map(|&v| chart[v][1]).sum();
    [sx / n, sy / n]
}
