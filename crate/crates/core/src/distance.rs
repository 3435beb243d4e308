//! Geodesic distance from the base vertex.
//!
//! Curves get exact graph distances. Surfaces get edge-graph Dijkstra, one
//! sweep of triangle-unfolding updates in increasing distance order, and a
//! final relaxation so that `D(v) ≤ D(u) + len(u, v)` holds on every edge.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};
use crate::fields::ScalarField;
use crate::manifold::{Cell, SampledManifold};

#[derive(Copy, Clone, PartialEq)]
struct State {
    dist: f64,
    vertex: usize,
}

impl Eq for State {}

impl Ord for State {
    // min-heap on distance, ties go to the smaller vertex id
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Multi-source Dijkstra over graph edges starting from `init` (∞ where
/// unseeded). Returns the settled distances and the settle order.
pub(crate) fn relax(m: &SampledManifold, mut dist: Vec<f64>) -> (Vec<f64>, Vec<usize>) {
    let mut heap: BinaryHeap<State> = dist
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_finite())
        .map(|(v, &d)| State { dist: d, vertex: v })
        .collect();
    let mut done = vec![false; dist.len()];
    let mut order = Vec::with_capacity(dist.len());
    while let Some(State { dist: d, vertex: u }) = heap.pop() {
        if done[u] || d > dist[u] {
            continue;
        }
        done[u] = true;
        order.push(u);
        for &(v, k) in m.neighbors(u) {
            let nd = d + m.edges()[k].length;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(State { dist: nd, vertex: v });
            }
        }
    }
    (dist, order)
}

pub fn distance_field(m: &SampledManifold) -> Result<ScalarField> {
    distance_from(m, m.base_vertex())
}

/// Distance field from an arbitrary source vertex.
pub fn distance_from(m: &SampledManifold, source: usize) -> Result<ScalarField> {
    if source >= m.vertex_count() {
        return Err(Error::Validation(format!("source vertex {source} does not exist")));
    }
    let mut init = vec![f64::INFINITY; m.vertex_count()];
    init[source] = 0.0;
    let (mut dist, order) = relax(m, init);
    if let Some(v) = dist.iter().position(|d| !d.is_finite()) {
        return Err(Error::Unreachable(v));
    }
    if m.dim() == 2 {
        unfold_sweep(m, &mut dist, &order);
        dist[source] = 0.0;
        dist = relax(m, dist).0;
    }
    Ok(ScalarField::from_vec_unchecked(dist))
}

/// Vertex → incident triangle ids.
fn incident_cells(m: &SampledManifold) -> Vec<Vec<usize>> {
    let mut inc = vec![Vec::new(); m.vertex_count()];
    for (i, c) in m.cells().iter().enumerate() {
        for v in c.vertices() {
            inc[v].push(i);
        }
    }
    inc
}

fn unfold_sweep(m: &SampledManifold, dist: &mut [f64], order: &[usize]) {
    let inc = incident_cells(m);
    let mut rank = vec![usize::MAX; dist.len()];
    for (r, &v) in order.iter().enumerate() {
        rank[v] = r;
    }
    for &c in order {
        for &ci in &inc[c] {
            let Cell::Triangle(t) = m.cells()[ci] else { continue };
            let others: Vec<usize> = t.iter().copied().filter(|&v| v != c).collect();
            let (a, b) = (others[0], others[1]);
            if rank[a] > rank[c] || rank[b] > rank[c] {
                continue;
            }
            if let Some(cand) = unfold_update(m, ci, a, b, c, dist[a], dist[b]) {
                if cand < dist[c] {
                    dist[c] = cand;
                }
            }
        }
    }
}

/// Straight-line distance to `c` from the virtual source that sits at
/// distances `da`, `db` from `a`, `b` across edge `ab`, measured in the
/// triangle's own flat metric. `None` unless the ray crosses edge `ab`.
fn unfold_update(m: &SampledManifold, cell: usize, a: usize, b: usize, c: usize, da: f64, db: f64) -> Option<f64> {
    let g = m.metric()[cell];
    let (l11, l21, l22) = g.cholesky()?;
    // isometric coordinates: y = L^T x
    let iso = |v: usize| {
        let p = m.chart()[v];
        [l11 * p[0] + l21 * p[1], l22 * p[1]]
    };
    let (pa, pb, pc) = (iso(a), iso(b), iso(c));
    let ab = [pb[0] - pa[0], pb[1] - pa[1]];
    let ac = [pc[0] - pa[0], pc[1] - pa[1]];
    let lab = ab[0].hypot(ab[1]);
    if lab == 0.0 {
        return None;
    }
    let ex = [ab[0] / lab, ab[1] / lab];
    let ey = [-ex[1], ex[0]];
    let cx = ac[0] * ex[0] + ac[1] * ex[1];
    let mut cy = ac[0] * ey[0] + ac[1] * ey[1];
    if cy == 0.0 {
        return None;
    }
    cy = cy.abs();
    let sx = (da * da - db * db + lab * lab) / (2.0 * lab);
    let h2 = da * da - sx * sx;
    if h2 < 0.0 {
        return None;
    }
    let sy = -h2.sqrt();
    // crossing of segment s→c with the line through a, b
    let tcross = -sy / (cy - sy);
    let xcross = sx + tcross * (cx - sx);
    if !(0.0..=lab).contains(&xcross) {
        return None;
    }
    Some((cx - sx).hypot(cy - sy))
}

/// `{v : D(v) ≤ radius}` in increasing id order.
pub fn metric_ball(m: &SampledManifold, d: &ScalarField, radius: f64) -> Result<Vec<usize>> {
    d.check_on(m)?;
    Ok(d.values()
        .iter()
        .enumerate()
        .filter(|(_, &x)| x <= radius)
        .map(|(v, _)| v)
        .collect())
}
