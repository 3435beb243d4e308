//! The differential of φ and the rank-one metric update `g − ¼·dφ⊗dφ`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fields::{CovectorField, MetricField, ScalarField};
use crate::manifold::{triangle_area2, Cell, SampledManifold};

/// Lower bound on `g̃(v,v)/g(v,v)` when `‖dφ‖ < 3/4`: `1 − (1/4)(3/4)² = 55/64`.
pub const SURGERY_EIGEN_FLOOR: f64 = 55.0 / 64.0;
pub const SPD_TOLERANCE: f64 = 1e-9;

/// Per-cell gradient covector of the piecewise-affine interpolant of `phi`.
pub fn differential(m: &SampledManifold, phi: &ScalarField) -> Result<CovectorField> {
    phi.check_on(m)?;
    let comps = m
        .cells()
        .iter()
        .enumerate()
        .map(|(i, c)| match *c {
            Cell::Edge { a, b, span } => {
                if !(span > 0.0) {
                    return Err(Error::Degenerate {
                        cell: i,
                        reason: "zero span".into(),
                    });
                }
                Ok([(phi[b] - phi[a]) / span, 0.0])
            }
            Cell::Triangle(t) => {
                let det = triangle_area2(m.chart(), &t);
                if det == 0.0 {
                    return Err(Error::Degenerate {
                        cell: i,
                        reason: "zero area".into(),
                    });
                }
                let [p0, p1, p2] = t.map(|v| m.chart()[v]);
                let (e1, e2) = ([p1[0] - p0[0], p1[1] - p0[1]], [p2[0] - p0[0], p2[1] - p0[1]]);
                let (d1, d2) = (phi[t[1]] - phi[t[0]], phi[t[2]] - phi[t[0]]);
                // [e1; e2] w = [d1; d2] by Cramer's rule
                Ok([(d1 * e2[1] - d2 * e1[1]) / det, (e1[0] * d2 - e2[0] * d1) / det])
            }
        })
        .collect::<Result<Vec<_>>>()?;
    CovectorField::new(m.dim(), comps)
}

/// Per-cell dual norm `sqrt(wᵀ g⁻¹ w)`.
pub fn covector_norm(w: &CovectorField, g: &MetricField) -> Result<Vec<f64>> {
    if w.len() != g.len() || w.dim() != g.dim() {
        return Err(Error::SizeMismatch {
            expected: g.len(),
            got: w.len(),
        });
    }
    w.components()
        .iter()
        .zip(g.tensors())
        .enumerate()
        .map(|(i, (wc, gc))| gc.dual_norm(wc).ok_or(Error::SingularMetric { cell: i }))
        .collect()
}

/// `g̃ = g − ¼ w⊗w` per cell, refused on any cell where `‖w‖_g ≥ 1`.
pub fn modify_metric(g: &MetricField, w: &CovectorField) -> Result<MetricField> {
    let norms = covector_norm(w, g)?;
    if let Some((cell, &norm)) = norms.iter().enumerate().find(|(_, n)| !(**n < 1.0)) {
        return Err(Error::Surgery { cell, norm });
    }
    let tensors = g
        .tensors()
        .iter()
        .zip(w.components())
        .map(|(gc, wc)| gc.rank_one_update(wc, -0.25))
        .collect();
    MetricField::new(g.dim(), tensors)
}

/// Largest relative residual of `g̃ + ¼ w⊗w − g`, measured entrywise against
/// the largest entry of `g`.
pub fn reconstruction_residual(gt: &MetricField, g: &MetricField, w: &CovectorField) -> Result<f64> {
    if gt.len() != g.len() || w.len() != g.len() {
        return Err(Error::SizeMismatch {
            expected: g.len(),
            got: gt.len().min(w.len()),
        });
    }
    Ok(gt
        .tensors()
        .iter()
        .zip(g.tensors())
        .zip(w.components())
        .map(|((a, b), wc)| {
            let back = a.rank_one_update(wc, 0.25).coefficients();
            let orig = b.coefficients();
            let scale = orig.iter().map(|c| c.abs()).fold(0.0, f64::max);
            back.iter()
                .zip(&orig)
                .map(|(x, y)| (x - y).abs() / scale)
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpdReport {
    /// Per-cell smallest eigenvalue of `g̃`.
    pub min_eigenvalues: Vec<f64>,
    /// Per-cell smallest generalized eigenvalue of `(g̃, g)`.
    pub generalized: Vec<f64>,
    pub failing_cells: Vec<usize>,
    pub min_generalized: f64,
    pub passed: bool,
}

/// Positive definiteness of `gt` and the bound `gt(v,v) ≥ (55/64)·g(v,v)`.
pub fn spd_check(gt: &MetricField, g: &MetricField) -> Result<SpdReport> {
    if gt.len() != g.len() || gt.dim() != g.dim() {
        return Err(Error::SizeMismatch {
            expected: g.len(),
            got: gt.len(),
        });
    }
    let mut min_eigenvalues = Vec::with_capacity(g.len());
    let mut generalized = Vec::with_capacity(g.len());
    let mut failing_cells = Vec::new();
    for (i, (a, b)) in gt.tensors().iter().zip(g.tensors()).enumerate() {
        let ev = a.min_eigenvalue();
        let gen = a.min_generalized_eigenvalue(b).unwrap_or(f64::NEG_INFINITY);
        if !(ev > 0.0 && gen >= SURGERY_EIGEN_FLOOR - SPD_TOLERANCE) {
            failing_cells.push(i);
        }
        min_eigenvalues.push(ev);
        generalized.push(gen);
    }
    let min_generalized = generalized.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(SpdReport {
        passed: failing_cells.is_empty(),
        min_eigenvalues,
        generalized,
        failing_cells,
        min_generalized,
    })
}

/// Predicted spectrum floor of a rank-one update: `1 − ¼‖w‖²` per cell.
pub fn rank_one_floor(norms: &[f64]) -> Vec<f64> {
    norms.iter().map(|n| 1.0 - 0.25 * n * n).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifold::ManifoldParts;
    use crate::tensor::SymTensor;

    fn unit_right_triangle() -> SampledManifold {
        SampledManifold::new(ManifoldParts {
            dim: 2,
            chart: vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]],
            cells: vec![Cell::Triangle([0, 1, 2])],
            metric: vec![SymTensor::identity(2)],
            base: 0,
            period: None,
            analytic: None,
        })
        .unwrap()
    }

    fn one_edge() -> SampledManifold {
        SampledManifold::from_edge_lengths(2, &[(0, 1, 1.0)], 0).unwrap()
    }

    fn metric1(g: f64) -> MetricField {
        MetricField::new(1, vec![SymTensor::One(g)]).unwrap()
    }

    #[test]
    fn differential_of_constant_is_zero() {
        let m = unit_right_triangle();
        let w = differential(&m, &ScalarField::constant(&m, 2.0)).unwrap();
        assert_eq!(w.components(), &[[0.0, 0.0]]);
    }

    #[test]
    fn differential_on_edge() {
        let m = one_edge();
        let w = differential(&m, &ScalarField::new(vec![0.0, 0.75]).unwrap()).unwrap();
        assert_eq!(w.components(), &[[0.75, 0.0]]);
    }

    #[test]
    fn differential_on_right_triangle() {
        let m = unit_right_triangle();
        let w = differential(&m, &ScalarField::new(vec![0.0, 1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(w.components(), &[[1.0, 0.0]]);
    }

    #[test]
    fn norms() {
        let w0 = CovectorField::new(2, vec![[0.0, 0.0]]).unwrap();
        let id = MetricField::new(2, vec![SymTensor::identity(2)]).unwrap();
        assert_eq!(covector_norm(&w0, &id).unwrap(), vec![0.0]);
        let w = CovectorField::new(2, vec![[0.6, 0.0]]).unwrap();
        assert!((covector_norm(&w, &id).unwrap()[0] - 0.6).abs() < 1e-15);
        let g = MetricField::new(2, vec![SymTensor::diag2(4.0, 1.0)]).unwrap();
        let w = CovectorField::new(2, vec![[1.0, 0.0]]).unwrap();
        assert!((covector_norm(&w, &g).unwrap()[0] - 0.5).abs() < 1e-15);
        let singular = MetricField::new(2, vec![SymTensor::diag2(0.0, 1.0)]).unwrap();
        assert!(matches!(
            covector_norm(&w, &singular),
            Err(Error::SingularMetric { cell: 0 })
        ));
    }

    #[test]
    fn modify_identity_cases() {
        let g = metric1(1.0);
        let w0 = CovectorField::new(1, vec![[0.0, 0.0]]).unwrap();
        assert_eq!(modify_metric(&g, &w0).unwrap(), g);
        let w = CovectorField::new(1, vec![[0.75, 0.0]]).unwrap();
        assert_eq!(modify_metric(&g, &w).unwrap()[0], SymTensor::One(0.859375));
        let g2 = MetricField::new(2, vec![SymTensor::identity(2)]).unwrap();
        let w2 = CovectorField::new(2, vec![[0.75, 0.0]]).unwrap();
        assert_eq!(modify_metric(&g2, &w2).unwrap()[0], SymTensor::diag2(0.859375, 1.0));
    }

    #[test]
    fn modify_refuses_large_covector() {
        let w = CovectorField::new(1, vec![[1.2, 0.0]]).unwrap();
        assert!(matches!(
            modify_metric(&metric1(1.0), &w),
            Err(Error::Surgery { cell: 0, .. })
        ));
    }

    #[test]
    fn spd_cases() {
        let g = metric1(1.0);
        let r = spd_check(&g, &g).unwrap();
        assert!(r.passed);
        assert_eq!(r.generalized, vec![1.0]);

        let r = spd_check(&metric1(0.859375), &g).unwrap();
        assert_eq!(r.min_generalized, 55.0 / 64.0);
        assert!(r.passed);

        // w with norm 1.2 built by hand: 1 − 0.36
        let r = spd_check(&metric1(1.0 - 0.25 * 1.44), &g).unwrap();
        assert!(!r.passed);
        assert_eq!(r.failing_cells, vec![0]);
    }

    #[test]
    fn differential_rejects_wrong_size() {
        let m = unit_right_triangle();
        assert!(differential(&m, &ScalarField::new(vec![0.0, 1.0]).unwrap()).is_err());
    }
}
