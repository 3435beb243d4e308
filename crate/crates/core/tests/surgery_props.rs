use proper_lift::generators::Generator;
use proper_lift::manifold::{Cell, ManifoldParts};
use proper_lift::surgery::{covector_norm, differential, modify_metric, reconstruction_residual, spd_check};
use proper_lift::{CovectorField, MetricField, SampledManifold, ScalarField, SymTensor};
use proptest::prelude::*;

/// SPD 2×2 tensor from a Cholesky-like parametrisation.
fn spd((a, b, c): (f64, f64, f64)) -> SymTensor {
    SymTensor::Two {
        xx: a * a,
        xy: a * b,
        yy: b * b + c * c,
    }
}

fn factor() -> impl Strategy<Value = (f64, f64, f64)> {
    (0.3f64..3.0, -2.0f64..2.0, 0.3f64..3.0)
}

/// Covector of prescribed g-norm along the direction `theta`.
fn with_norm(g: &SymTensor, theta: f64, norm: f64) -> [f64; 2] {
    let w = [theta.cos(), theta.sin()];
    let SymTensor::Two { xx, xy, yy } = *g else {
        unreachable!()
    };
    let det = xx * yy - xy * xy;
    let n2 = (yy * w[0] * w[0] - 2.0 * xy * w[0] * w[1] + xx * w[1] * w[1]) / det;
    let s = norm / n2.sqrt();
    [w[0] * s, w[1] * s]
}

/// Smallest eigenvalue of the symmetric matrix `L⁻¹ gt L⁻ᵀ`, where `L` is the
/// lower factor of `g` from [`spd`].
fn generalized_min(gt: &SymTensor, (a, b, c): (f64, f64, f64)) -> f64 {
    let SymTensor::Two { xx, xy, yy } = *gt else {
        unreachable!()
    };
    let li = [[1.0 / a, 0.0], [-b / (a * c), 1.0 / c]];
    let t = [[xx, xy], [xy, yy]];
    let mut m = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                for l in 0..2 {
                    m[i][j] += li[i][k] * t[k][l] * li[j][l];
                }
            }
        }
    }
    0.5 * (m[0][0] + m[1][1]) - (0.5 * (m[0][0] - m[1][1])).hypot(m[0][1])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn reconstruction_is_exact(gs in prop::collection::vec(factor(), 1..20), dirs in prop::collection::vec((0.0f64..6.3, 0.0f64..0.999), 20)) {
        let g: Vec<SymTensor> = gs.iter().copied().map(spd).collect();
        let w: Vec<[f64; 2]> = g.iter().zip(&dirs).map(|(g, &(t, n))| with_norm(g, t, n)).collect();
        let g = MetricField::new(2, g).unwrap();
        let w = CovectorField::new(2, w).unwrap();
        let gt = modify_metric(&g, &w).unwrap();
        prop_assert!(reconstruction_residual(&gt, &g, &w).unwrap() <= 1e-15);
    }

    #[test]
    fn generalized_eigenvalue_is_one_minus_quarter_norm_squared(f in factor(), theta in 0.0f64..6.3, norm in 0.0f64..0.999) {
        let g = spd(f);
        let w = with_norm(&g, theta, norm);
        let gm = MetricField::new(2, vec![g]).unwrap();
        let wf = CovectorField::new(2, vec![w]).unwrap();
        let gt = modify_metric(&gm, &wf).unwrap();
        let expected = 1.0 - 0.25 * norm * norm;
        prop_assert!((generalized_min(&gt[0], f) - expected).abs() < 1e-12);
        let r = spd_check(&gt, &gm).unwrap();
        prop_assert!((r.min_generalized - expected).abs() < 1e-12);
        prop_assert!(r.min_eigenvalues[0] > 0.0);
        prop_assert_eq!(r.passed, norm <= 0.75 + 1e-9 || expected >= 55.0 / 64.0 - 1e-9);
    }

    #[test]
    fn one_dimensional_update(g in 0.01f64..100.0, frac in -0.999f64..0.999) {
        let w = [frac * g.sqrt(), 0.0];
        let gm = MetricField::new(1, vec![SymTensor::One(g)]).unwrap();
        let wf = CovectorField::new(1, vec![w]).unwrap();
        let n = covector_norm(&wf, &gm).unwrap()[0];
        prop_assert!((n - frac.abs()).abs() < 1e-15 * (1.0 + frac.abs()) * 4.0);
        let gt = modify_metric(&gm, &wf).unwrap();
        let SymTensor::One(v) = gt[0] else { unreachable!() };
        prop_assert!((v / g - (1.0 - 0.25 * frac * frac)).abs() < 1e-14);
    }

    #[test]
    fn refuses_covectors_of_norm_one_or_more(f in factor(), theta in 0.0f64..6.3, norm in 1.0f64..10.0) {
        let g = spd(f);
        let gm = MetricField::new(2, vec![g]).unwrap();
        let w = CovectorField::new(2, vec![with_norm(&g, theta, norm)]).unwrap();
        // rounding may land a hair below 1 at the boundary
        if covector_norm(&w, &gm).unwrap()[0] >= 1.0 {
            prop_assert!(modify_metric(&gm, &w).is_err());
        }
    }

    #[test]
    fn differential_recovers_affine_gradients(
        pts in prop::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 3),
        grad in (-2.0f64..2.0, -2.0f64..2.0),
        c in -10.0f64..10.0,
    ) {
        let chart: Vec<[f64; 2]> = pts.iter().map(|&(x, y)| [x, y]).collect();
        let area = (chart[1][0] - chart[0][0]) * (chart[2][1] - chart[0][1])
            - (chart[2][0] - chart[0][0]) * (chart[1][1] - chart[0][1]);
        prop_assume!(area.abs() > 0.5);
        let m = SampledManifold::new(ManifoldParts {
            dim: 2,
            chart: chart.clone(),
            cells: vec![Cell::Triangle([0, 1, 2])],
            metric: vec![SymTensor::identity(2)],
            base: 0,
            period: None,
            analytic: None,
        })
        .unwrap();
        let phi = ScalarField::new(chart.iter().map(|p| c + grad.0 * p[0] + grad.1 * p[1]).collect()).unwrap();
        let w = differential(&m, &phi).unwrap();
        let got = w.components()[0];
        prop_assert!((got[0] - grad.0).abs() < 1e-11 && (got[1] - grad.1).abs() < 1e-11, "{:?} vs {:?}", got, grad);
    }
}

#[test]
fn pipeline_surgery_on_grid_keeps_floor() {
    use proper_lift::distance::distance_field;
    use proper_lift::smoothing::{smooth_approx, truncate_distance, SmoothingParams};
    let m = Generator::GridPatch { k: 17, size: 1.0 }.build().unwrap();
    let p = SmoothingParams::default();
    let f = truncate_distance(&distance_field(&m).unwrap(), &p).unwrap();
    let (phi, _) = smooth_approx(&m, &f, &p).unwrap();
    let w = differential(&m, &phi).unwrap();
    let gt = modify_metric(m.metric(), &w).unwrap();
    let r = spd_check(&gt, m.metric()).unwrap();
    assert!(r.passed);
    let norms = covector_norm(&w, m.metric()).unwrap();
    for (g, n) in r.generalized.iter().zip(&norms) {
        assert!(*n < 0.75);
        assert!((g - (1.0 - 0.25 * n * n)).abs() < 1e-12);
    }
    assert!(reconstruction_residual(&gt, m.metric(), &w).unwrap() <= 1e-15);
}
