//! Discretized Riemannian manifolds of dimension one or two.
//!
//! Curves are metric graphs whose cells are edges with a chart span; each
//! edge carries a constant metric coefficient, so its length is
//! `sqrt(g)·span`. Surfaces are triangle meshes in a global affine chart with
//! one constant metric per triangle. Graph edges of a surface take their
//! squared length as the mean over the incident triangles.

use std::collections::{BTreeMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::analytic::AnalyticMetric;
use crate::error::{Error, Result};
use crate::fields::MetricField;
use crate::tensor::SymTensor;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Edge { a: usize, b: usize, span: f64 },
    Triangle([usize; 3]),
}

impl Cell {
    pub fn vertices(&self) -> Vec<usize> {
        match *self {
            Cell::Edge { a, b, .. } => vec![a, b],
            Cell::Triangle(t) => t.to_vec(),
        }
    }
}

/// An undirected edge of the connectivity graph.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphEdge {
    pub a: usize,
    pub b: usize,
    /// Cells containing this edge (one for curves, one or two for surfaces).
    pub cells: Vec<usize>,
    /// Chart displacement from `a` to `b`.
    pub disp: [f64; 2],
    /// Length under the manifold metric.
    pub length: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampledManifold {
    dim: usize,
    chart: Vec<[f64; 2]>,
    cells: Vec<Cell>,
    metric: MetricField,
    base: usize,
    period: Option<f64>,
    analytic: Option<AnalyticMetric>,
    edges: Vec<GraphEdge>,
    adjacency: Vec<Vec<(usize, usize)>>,
    mesh_scale: f64,
}

/// Constructor inputs, so generators and loaders share one validation path.
#[derive(Clone, Debug)]
pub struct ManifoldParts {
    pub dim: usize,
    pub chart: Vec<[f64; 2]>,
    pub cells: Vec<Cell>,
    pub metric: Vec<SymTensor>,
    pub base: usize,
    pub period: Option<f64>,
    pub analytic: Option<AnalyticMetric>,
}

impl SampledManifold {
    pub fn new(parts: ManifoldParts) -> Result<Self> {
        let ManifoldParts {
            dim,
            chart,
            cells,
            metric,
            base,
            period,
            analytic,
        } = parts;
        if !(1..=2).contains(&dim) {
            return Err(Error::Validation(format!("unsupported dimension {dim}")));
        }
        let nv = chart.len();
        if nv == 0 {
            return Err(Error::Validation("manifold has no vertices".into()));
        }
        if base >= nv {
            return Err(Error::Validation(format!("base vertex {base} of {nv} does not exist")));
        }
        if chart.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(Error::Validation("non-finite chart coordinate".into()));
        }
        if let Some(p) = period {
            if dim != 1 || !(p > 0.0 && p.is_finite()) {
                return Err(Error::Validation("period must be positive and only on curves".into()));
            }
        }
        if let Some(a) = &analytic {
            if a.dim() != dim {
                return Err(Error::Validation("analytic metric dimension mismatch".into()));
            }
        }
        if metric.len() != cells.len() {
            return Err(Error::Validation(format!(
                "{} metric entries for {} cells",
                metric.len(),
                cells.len()
            )));
        }
        for (i, c) in cells.iter().enumerate() {
            match (dim, c) {
                (1, Cell::Edge { a, b, span }) => {
                    if *a >= nv || *b >= nv {
                        return Err(Error::Validation(format!(
                            "cell {i} references a vertex outside 0..{nv}"
                        )));
                    }
                    if !(*span > 0.0 && span.is_finite()) {
                        return Err(Error::Degenerate {
                            cell: i,
                            reason: format!("span {span}"),
                        });
                    }
                    if a == b {
                        return Err(Error::Degenerate {
                            cell: i,
                            reason: "loop edge".into(),
                        });
                    }
                }
                (2, Cell::Triangle(t)) => {
                    if t.iter().any(|&v| v >= nv) {
                        return Err(Error::Validation(format!(
                            "cell {i} references a vertex outside 0..{nv}"
                        )));
                    }
                    if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                        return Err(Error::Degenerate {
                            cell: i,
                            reason: "repeated vertex".into(),
                        });
                    }
                    if triangle_area2(&chart, t) == 0.0 {
                        return Err(Error::Degenerate {
                            cell: i,
                            reason: "zero chart area".into(),
                        });
                    }
                }
                _ => {
                    return Err(Error::Validation(format!("cell {i} does not match dimension {dim}")));
                }
            }
        }
        let metric = MetricField::new(dim, metric)?;
        for (i, g) in metric.tensors().iter().enumerate() {
            if !g.is_positive_definite() {
                return Err(Error::Validation(format!(
                    "metric on cell {i} is not positive definite (min eigenvalue {})",
                    g.min_eigenvalue()
                )));
            }
        }

        let edges = build_edges(dim, &chart, &cells, &metric);
        let mut adjacency = vec![Vec::new(); nv];
        for (k, e) in edges.iter().enumerate() {
            adjacency[e.a].push((e.b, k));
            adjacency[e.b].push((e.a, k));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }
        let mesh_scale = edges.iter().map(|e| e.length).fold(0.0, f64::max);

        let m = SampledManifold {
            dim,
            chart,
            cells,
            metric,
            base,
            period,
            analytic,
            edges,
            adjacency,
            mesh_scale,
        };
        if let Some(v) = m.first_unreachable() {
            return Err(Error::Validation(format!(
                "connectivity graph is disconnected (vertex {v} unreachable)"
            )));
        }
        Ok(m)
    }

    /// Metric graph with explicit edge lengths, unit metric and span = length.
    pub fn from_edge_lengths(vertex_count: usize, edges: &[(usize, usize, f64)], base: usize) -> Result<Self> {
        let chart = (0..vertex_count).map(|i| [i as f64, 0.0]).collect();
        let cells = edges
            .iter()
            .map(|&(a, b, len)| Cell::Edge { a, b, span: len })
            .collect();
        SampledManifold::new(ManifoldParts {
            dim: 1,
            chart,
            cells,
            metric: vec![SymTensor::One(1.0); edges.len()],
            base,
            period: None,
            analytic: None,
        })
    }

    pub fn parts(&self) -> ManifoldParts {
        ManifoldParts {
            dim: self.dim,
            chart: self.chart.clone(),
            cells: self.cells.clone(),
            metric: self.metric.tensors().to_vec(),
            base: self.base,
            period: self.period,
            analytic: self.analytic.clone(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertex_count(&self) -> usize {
        self.chart.len()
    }

    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    pub fn chart(&self) -> &[[f64; 2]] {
        &self.chart
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn metric(&self) -> &MetricField {
        &self.metric
    }

    pub fn base_vertex(&self) -> usize {
        self.base
    }

    pub fn period(&self) -> Option<f64> {
        self.period
    }

    pub fn analytic_metric(&self) -> Option<&AnalyticMetric> {
        self.analytic.as_ref()
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    /// `(neighbor, edge index)` pairs sorted by neighbor id.
    pub fn neighbors(&self, v: usize) -> &[(usize, usize)] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    /// Largest edge length under the metric, the diameter of the largest cell.
    pub fn mesh_scale(&self) -> f64 {
        self.mesh_scale
    }

    /// Squared length of graph edge `k` under an arbitrary metric field on
    /// the same cells.
    pub fn edge_sq_length_under(&self, k: usize, metric: &MetricField) -> f64 {
        let e = &self.edges[k];
        let sum: f64 = e.cells.iter().map(|&c| metric[c].quad(&e.disp)).sum();
        sum / e.cells.len() as f64
    }

    /// Length of graph edge `k` against the analytic metric when one is
    /// attached, otherwise the discrete length.
    pub fn exact_edge_lengths(&self) -> Result<Vec<f64>> {
        match &self.analytic {
            None => Ok(self.edges.iter().map(|e| e.length).collect()),
            Some(a) => {
                let cm = a.compile()?;
                self.edges
                    .iter()
                    .map(|e| cm.segment_length(self.chart[e.a], e.disp))
                    .collect()
            }
        }
    }

    /// Total metric length of all cells (curves) or sum of edge lengths.
    pub fn total_edge_length(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Lumped Riemannian measure: each cell's length or area split evenly
    /// among its vertices.
    pub fn vertex_measure(&self) -> Vec<f64> {
        let mut mu = vec![0.0; self.vertex_count()];
        for (i, c) in self.cells.iter().enumerate() {
            let g = &self.metric[i];
            match *c {
                Cell::Edge { a, b, span } => {
                    let l = 0.5 * g.det().sqrt() * span;
                    mu[a] += l;
                    mu[b] += l;
                }
                Cell::Triangle(t) => {
                    let area = 0.5 * triangle_area2(&self.chart, &t).abs() * g.det().sqrt();
                    for v in t {
                        mu[v] += area / 3.0;
                    }
                }
            }
        }
        mu
    }

    /// Vertices of a path or cycle in traversal order, starting from an
    /// endpoint (paths) or from vertex 0 (cycles). `None` unless the curve
    /// is a simple path or cycle.
    pub fn chain_order(&self) -> Option<ChainOrder> {
        if self.dim != 1 {
            return None;
        }
        let nv = self.vertex_count();
        if self.adjacency.iter().any(|a| a.len() > 2) {
            return None;
        }
        let closed = self.edges.len() == nv && nv > 1;
        if !closed && self.edges.len() + 1 != nv {
            return None;
        }
        let start = if closed {
            0
        } else {
            (0..nv).find(|&v| self.adjacency[v].len() <= 1)?
        };
        let mut vertices = vec![start];
        let mut edges = Vec::with_capacity(self.edges.len());
        let mut used = vec![false; self.edges.len()];
        let mut cur = start;
        while let Some(&(next, k)) = self.adjacency[cur].iter().find(|(_, k)| !used[*k]) {
            used[k] = true;
            edges.push(k);
            if next == start {
                break;
            }
            vertices.push(next);
            cur = next;
        }
        (edges.len() == self.edges.len() && vertices.len() == nv).then_some(ChainOrder {
            vertices,
            edges,
            closed,
        })
    }

    fn first_unreachable(&self) -> Option<usize> {
        let nv = self.vertex_count();
        let mut seen = vec![false; nv];
        let mut queue = VecDeque::from([self.base]);
        seen[self.base] = true;
        while let Some(u) = queue.pop_front() {
            for &(v, _) in &self.adjacency[u] {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        seen.iter().position(|s| !s)
    }
}

/// Traversal of a 1-D manifold that is a path or a cycle.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainOrder {
    pub vertices: Vec<usize>,
    /// `edges[i]` joins `vertices[i]` and `vertices[i + 1]` (wrapping for cycles).
    pub edges: Vec<usize>,
    pub closed: bool,
}

pub(crate) fn triangle_area2(chart: &[[f64; 2]], t: &[usize; 3]) -> f64 {
    let [p, q, r] = t.map(|v| chart[v]);
    (q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1])
}

fn build_edges(dim: usize, chart: &[[f64; 2]], cells: &[Cell], metric: &MetricField) -> Vec<GraphEdge> {
    let make = |a: usize, b: usize, cells: Vec<usize>, disp: [f64; 2]| {
        let sq: f64 = cells.iter().map(|&c| metric[c].quad(&disp)).sum::<f64>() / cells.len() as f64;
        GraphEdge {
            a,
            b,
            cells,
            disp,
            length: sq.sqrt(),
        }
    };
    if dim == 1 {
        return cells
            .iter()
            .enumerate()
            .map(|(i, c)| match *c {
                // sqrt(g)·|span| rather than sqrt(g·span²), so unit-metric
                // lengths come back bit-exact
                Cell::Edge { a, b, span } => GraphEdge {
                    a,
                    b,
                    cells: vec![i],
                    disp: [span, 0.0],
                    length: metric[i].det().sqrt() * span.abs(),
                },
                Cell::Triangle(_) => unreachable!("validated"),
            })
            .collect();
    }
    let mut by_pair: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (i, c) in cells.iter().enumerate() {
        if let Cell::Triangle(t) = c {
            for (u, v) in [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])] {
                by_pair.entry((u.min(v), u.max(v))).or_default().push(i);
            }
        }
    }
    by_pair
        .into_iter()
        .map(|((a, b), cs)| {
            let disp = [chart[b][0] - chart[a][0], chart[b][1] - chart[a][1]];
            make(a, b, cs, disp)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn equilateral() -> ManifoldParts {
        let s = 3f64.sqrt() / 2.0;
        ManifoldParts {
            dim: 2,
            chart: vec![[0.0, 0.0], [1.0, 0.0], [0.5, s]],
            cells: vec![Cell::Triangle([0, 1, 2])],
            metric: vec![SymTensor::identity(2)],
            base: 0,
            period: None,
            analytic: None,
        }
    }

    #[test]
    fn single_edge_curve() {
        let m = SampledManifold::from_edge_lengths(2, &[(0, 1, 1.0)], 0).unwrap();
        assert_eq!(m.dim(), 1);
        assert_eq!(m.mesh_scale(), 1.0);
    }

    #[test]
    fn equilateral_triangle_has_three_edges() {
        let m = SampledManifold::new(equilateral()).unwrap();
        assert_eq!(m.edges().len(), 3);
        for e in m.edges() {
            assert!((e.length - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn rejects_dangling_vertex_reference() {
        let err = SampledManifold::from_edge_lengths(3, &[(0, 1, 1.0), (1, 7, 1.0)], 0).unwrap_err();
        assert!(matches!(err, Error::Validation(_)), "{err}");
    }

    #[test]
    fn rejects_disconnected() {
        let err = SampledManifold::from_edge_lengths(4, &[(0, 1, 1.0), (2, 3, 1.0)], 0).unwrap_err();
        assert!(err.to_string().contains("disconnected"));
    }

    #[test]
    fn rejects_indefinite_metric() {
        let mut p = equilateral();
        p.metric = vec![SymTensor::Two {
            xx: 1.0,
            xy: 0.0,
            yy: 0.0,
        }];
        assert!(SampledManifold::new(p).is_err());
        let mut p = equilateral();
        p.metric = vec![SymTensor::Two {
            xx: 1.0,
            xy: 2.0,
            yy: 1.0,
        }];
        assert!(SampledManifold::new(p).is_err());
    }

    #[test]
    fn rejects_flat_triangle() {
        let mut p = equilateral();
        p.chart[2] = [2.0, 0.0];
        assert!(matches!(SampledManifold::new(p), Err(Error::Degenerate { .. })));
    }

    #[test]
    fn rejects_missing_base() {
        let mut p = equilateral();
        p.base = 3;
        assert!(SampledManifold::new(p).is_err());
    }

    #[test]
    fn chain_order_of_shuffled_path() {
        // path 2 - 0 - 1
        let m = SampledManifold::from_edge_lengths(3, &[(0, 1, 1.0), (2, 0, 2.0)], 0).unwrap();
        let c = m.chain_order().unwrap();
        assert!(!c.closed);
        assert_eq!(c.vertices, vec![1, 0, 2]);
        assert_eq!(c.edges, vec![0, 1]);
    }

    #[test]
    fn chain_order_of_cycle() {
        let m = SampledManifold::from_edge_lengths(3, &[(0, 1, 1.0), (1, 2, 1.0), (2, 0, 1.0)], 0).unwrap();
        let c = m.chain_order().unwrap();
        assert!(c.closed);
        assert_eq!(c.vertices, vec![0, 1, 2]);
    }

    #[test]
    fn star_is_not_a_chain() {
        let m = SampledManifold::from_edge_lengths(4, &[(0, 1, 1.0), (0, 2, 1.0), (0, 3, 1.0)], 0).unwrap();
        assert!(m.chain_order().is_none());
    }
}
