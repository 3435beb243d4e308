//! Midpoint subdivision.
//!
//! Original vertices keep their ids; new vertices are appended. Cell metrics
//! are re-sampled from the analytic metric when one is attached and
//! inherited from the parent cell otherwise.

use std::collections::HashMap;

use crate::analytic::CompiledMetric;
use crate::error::{Error, Result};
use crate::generators::centroid;
use crate::manifold::{Cell, SampledManifold};
use crate::tensor::SymTensor;

pub const DEFAULT_VERTEX_CAP: usize = 2_000_000;

pub fn refine(m: &SampledManifold, k: u32) -> Result<SampledManifold> {
    refine_with_cap(m, k, DEFAULT_VERTEX_CAP)
}

pub fn refine_with_cap(m: &SampledManifold, k: u32, cap: usize) -> Result<SampledManifold> {
    if k == 0 {
        return Err(Error::InvalidParameter("refinement level must be at least 1".into()));
    }
    let requested = predicted_vertex_count(m, k);
    if requested > cap {
        return Err(Error::CapExceeded { requested, cap });
    }
    let compiled = m.analytic_metric().map(|a| a.compile()).transpose()?;
    match m.dim() {
        1 => refine_curve(m, k, compiled.as_ref()),
        _ => {
            let mut cur = m.clone();
            for _ in 0..k {
                cur = split_triangles(&cur, compiled.as_ref())?;
            }
            Ok(cur)
        }
    }
}

/// Vertex count after `k` levels, saturating on overflow.
pub fn predicted_vertex_count(m: &SampledManifold, k: u32) -> usize {
    let (mut v, mut e, mut f) = (m.vertex_count(), m.edges().len(), m.cell_count());
    if m.dim() == 1 {
        let pieces = 1usize.checked_shl(k).unwrap_or(usize::MAX);
        return e
            .checked_mul(pieces.saturating_sub(1))
            .and_then(|x| x.checked_add(v))
            .unwrap_or(usize::MAX);
    }
    for _ in 0..k {
        v = v.saturating_add(e);
        e = e.saturating_mul(2).saturating_add(f.saturating_mul(3));
        f = f.saturating_mul(4);
    }
    v
}

fn refine_curve(m: &SampledManifold, k: u32, analytic: Option<&CompiledMetric>) -> Result<SampledManifold> {
    let pieces = 1usize << k;
    let mut parts = m.parts();
    let wrap = |t: f64| match m.period() {
        Some(p) => {
            let t0 = m.chart()[0][0];
            t0 + (t - t0).rem_euclid(p)
        }
        None => t,
    };
    let mut cells = Vec::with_capacity(m.cell_count() * pieces);
    let mut metric = Vec::with_capacity(m.cell_count() * pieces);
    for (ci, c) in m.cells().iter().enumerate() {
        let Cell::Edge { a, b, span } = *c else {
            unreachable!("validated curve")
        };
        let sub = span / pieces as f64;
        let ta = m.chart()[a][0];
        let mut prev = a;
        for j in 0..pieces {
            let next = if j + 1 == pieces {
                b
            } else {
                parts.chart.push([wrap(ta + sub * (j + 1) as f64), 0.0]);
                parts.chart.len() - 1
            };
            cells.push(Cell::Edge {
                a: prev,
                b: next,
                span: sub,
            });
            metric.push(match analytic {
                Some(cm) => cm.eval([ta + sub * (j as f64 + 0.5), 0.0])?,
                None => m.metric()[ci],
            });
            prev = next;
        }
    }
    parts.cells = cells;
    parts.metric = metric;
    SampledManifold::new(parts)
}

fn split_triangles(m: &SampledManifold, analytic: Option<&CompiledMetric>) -> Result<SampledManifold> {
    let mut parts = m.parts();
    let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
    let mut cells = Vec::with_capacity(4 * m.cell_count());
    let mut metric: Vec<SymTensor> = Vec::with_capacity(4 * m.cell_count());
    for (ci, c) in m.cells().iter().enumerate() {
        let Cell::Triangle([a, b, c3]) = *c else {
            unreachable!("validated surface")
        };
        let mut midpoint = |u: usize, v: usize| {
            *mid.entry((u.min(v), u.max(v))).or_insert_with(|| {
                let (p, q) = (parts.chart[u], parts.chart[v]);
                parts.chart.push([0.5 * (p[0] + q[0]), 0.5 * (p[1] + q[1])]);
                parts.chart.len() - 1
            })
        };
        let ab = midpoint(a, b);
        let bc = midpoint(b, c3);
        let ca = midpoint(c3, a);
        let children = [[a, ab, ca], [ab, b, bc], [ca, bc, c3], [ab, bc, ca]];
        for t in children {
            let cell = Cell::Triangle(t);
            metric.push(match analytic {
                Some(cm) => cm.eval(centroid(&parts.chart, &cell))?,
                None => m.metric()[ci],
            });
            cells.push(cell);
        }
    }
    parts.cells = cells;
    parts.metric = metric;
    SampledManifold::new(parts)
}
