mod common;

use proper_lift::distance::distance_field;
use proper_lift::embed::{
    distortion, distortion_against, embed_curve, nash_dimension, optimize_embedding, target_lengths, EmbedRequest,
    OptimizerParams, Provider,
};
use proper_lift::generators::Generator;
use proper_lift::smoothing::{smooth_approx, truncate_distance, SmoothingParams};
use proper_lift::surgery::{differential, modify_metric};
use proper_lift::{Cell, EmbeddingMap, MetricField, SampledManifold, ScalarField};

fn closed_form(n: u128) -> u128 {
    n * (n + 1) * (3 * n + 11) / 2
}

#[test]
fn nash_dimension_matches_closed_form() {
    let mut prev = 0;
    for n in 1..=20u64 {
        let got = nash_dimension(n).unwrap();
        assert_eq!(u128::from(got), closed_form(u128::from(n)), "n = {n}");
        assert!(got > prev);
        prev = got;
    }
    assert_eq!([1, 2, 3, 4].map(|n| nash_dimension(n).unwrap()), [14, 51, 120, 230]);
    assert!(nash_dimension(0).is_err());
    assert!(nash_dimension(u64::MAX).is_err());
}

#[test]
fn stress_gradient_matches_finite_differences() {
    for seed in 0..50 {
        let err = common::gradient_check(seed);
        assert!(err < 1e-6, "seed {seed}: relative error {err}");
    }
}

/// φ and `g̃` on a half-line, as the pipeline would produce them.
fn modified_half_line(horizon: f64, edges: usize) -> (SampledManifold, ScalarField, MetricField) {
    let m = Generator::HalfLine { horizon, edges }.build().unwrap();
    let p = SmoothingParams::default();
    let f = truncate_distance(&distance_field(&m).unwrap(), &p).unwrap();
    let (phi, _) = smooth_approx(&m, &f, &p).unwrap();
    let gt = modify_metric(m.metric(), &differential(&m, &phi).unwrap()).unwrap();
    (m, phi, gt)
}

/// `sqrt(g·span² − ¼Δφ²)` per edge, straight from the cells.
fn expected_lengths(m: &SampledManifold, phi: &ScalarField) -> Vec<f64> {
    m.edges()
        .iter()
        .map(|e| {
            let Cell::Edge { span, .. } = m.cells()[e.cells[0]] else {
                unreachable!()
            };
            let g = m.metric()[e.cells[0]].coefficients()[0];
            let dphi = phi[e.b] - phi[e.a];
            (g * span * span - 0.25 * dphi * dphi).sqrt()
        })
        .collect()
}

type RadiusCase = (Provider, fn(f64) -> f64);

#[test]
fn spirals_have_modified_speed() {
    let (m, phi, gt) = modified_half_line(10.0, 10_000);
    assert!(m.mesh_scale() <= 1e-3);
    let expected = expected_lengths(&m, &phi);
    let cases: [RadiusCase; 2] = [
        (Provider::SpiralToCircle, |t: f64| 1.0 + 1.0 / (1.0 + t)),
        (Provider::SpiralToPoint, |t: f64| 1.0 / (1.0 + t)),
    ];
    for (provider, radius) in cases {
        let req = EmbedRequest {
            provider,
            ..Default::default()
        };
        let x = embed_curve(&m, &gt, &req).unwrap();
        let r = distortion_against(&x, &m, &expected).unwrap();
        assert!(r.max_rel_edge_error <= 1e-6, "{provider:?}: {}", r.max_rel_edge_error);
        for v in 0..m.vertex_count() {
            let t = m.chart()[v][0];
            let p = x.point(v);
            assert!((p[0].hypot(p[1]) - radius(t)).abs() < 1e-12, "{provider:?} at t = {t}");
        }
    }
}

#[test]
fn line_provider_is_arc_length() {
    let (m, phi, gt) = modified_half_line(5.0, 5000);
    let x = embed_curve(
        &m,
        &gt,
        &EmbedRequest {
            ambient_dim: 1,
            ..Default::default()
        },
    )
    .unwrap();
    let expected = expected_lengths(&m, &phi);
    let r = distortion_against(&x, &m, &expected).unwrap();
    assert!(r.max_rel_edge_error <= 1e-12);
    // strictly increasing along the chain
    let c = m.chain_order().unwrap();
    assert!(c.vertices.windows(2).all(|w| x.point(w[1])[0] > x.point(w[0])[0]));
}

#[test]
fn collapsed_embedding_has_unit_error() {
    let m = Generator::Circle {
        circumference: 2.0,
        edges: 50,
    }
    .build()
    .unwrap();
    let x = EmbeddingMap::new(3, vec![0.25; 3 * 50]).unwrap();
    let r = distortion(&x, &m, m.metric()).unwrap();
    assert_eq!(r.max_rel_edge_error, 1.0);
    assert_eq!(r.mean_rel_edge_error, 1.0);
}

#[test]
fn optimizer_reaches_tolerance_on_small_grid() {
    let m = Generator::GridPatch { k: 9, size: 1.0 }.build().unwrap();
    let req = EmbedRequest {
        ambient_dim: 6,
        provider: Provider::Optimizer,
        optimizer: OptimizerParams {
            rel_tol: 1e-8,
            ..Default::default()
        },
        ..Default::default()
    };
    let out = optimize_embedding(&m, m.metric(), &req).unwrap();
    assert!(out.report.converged);
    assert!(out.report.max_rel_edge_error <= 1e-8);
    let targets = target_lengths(&m, m.metric()).unwrap();
    assert_eq!(distortion_against(&out.map, &m, &targets).unwrap(), out.report);
    assert!(out.trace.windows(2).all(|w| w[1].stress <= w[0].stress));
}

#[test]
fn optimizer_depends_on_seed_only() {
    let m = Generator::GridPatch { k: 5, size: 1.0 }.build().unwrap();
    let req = |seed| EmbedRequest {
        ambient_dim: 8,
        provider: Provider::Optimizer,
        optimizer: OptimizerParams {
            seed,
            max_iters: 200,
            ..Default::default()
        },
        ..Default::default()
    };
    let a = optimize_embedding(&m, m.metric(), &req(3)).unwrap();
    let b = optimize_embedding(&m, m.metric(), &req(3)).unwrap();
    let c = optimize_embedding(&m, m.metric(), &req(4)).unwrap();
    assert_eq!(a.map, b.map);
    assert_ne!(a.map, c.map);
}
