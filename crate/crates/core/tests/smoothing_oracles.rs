mod common;

use common::QuadratureSmoother;
use proper_lift::distance::distance_field;
use proper_lift::generators::Generator;
use proper_lift::refine::refine;
use proper_lift::smoothing::{
    lipschitz_number, mollify_pass, smooth_approx, truncate_distance, verify_tube, SmoothingParams,
};
use proper_lift::{SampledManifold, ScalarField};
use proptest::prelude::*;

fn pipeline_phi(m: &SampledManifold, p: &SmoothingParams) -> (ScalarField, ScalarField, ScalarField, usize) {
    let d = distance_field(m).unwrap();
    let f = truncate_distance(&d, p).unwrap();
    let (phi, cert) = smooth_approx(m, &f, p).unwrap();
    assert!(cert.valid, "{cert:?}");
    (d, f, phi, cert.kernel_passes)
}

#[test]
fn line_matches_quadrature_oracle() {
    let p = SmoothingParams::default();
    let m = Generator::HalfLine {
        horizon: 3.0,
        edges: 3000,
    }
    .build()
    .unwrap();
    let (_, f, phi, passes) = pipeline_phi(&m, &p);

    // continuum model on a grid four times finer, then restricted to the samples
    let fine = 4;
    let xs: Vec<f64> = (0..=3000 * fine).map(|i| i as f64 * 1e-3 / fine as f64).collect();
    let fo: Vec<f64> = xs.iter().map(|&x| 2.0 / 3.0 * x.max(p.r_ball)).collect();
    let oracle = QuadratureSmoother {
        xs: xs.clone(),
        f: fo.clone(),
        period: None,
    };
    let widths = oracle.widths(p.kernel_width_fraction);
    let mut vals = fo.clone();
    for _ in 0..passes {
        vals = oracle.pass(&vals, &widths, p.band());
    }
    let worst = (0..=3000)
        .map(|i| (phi[i] - vals[i * fine]).abs() / f[i])
        .fold(0.0, f64::max);
    assert!(worst < 2e-3, "sampled and continuum smoothing differ by {worst}");

    // tube and Lipschitz of the continuum function
    let sub: Vec<usize> = (0..xs.len()).step_by(8).collect();
    let coarse = QuadratureSmoother {
        xs: sub.iter().map(|&i| xs[i]).collect(),
        f: sub.iter().map(|&i| fo[i]).collect(),
        period: None,
    };
    let cv: Vec<f64> = sub.iter().map(|&i| vals[i]).collect();
    assert!(coarse.pairwise_lipschitz(&cv) <= 0.70);
    assert!(cv.iter().zip(&coarse.f).all(|(v, f)| 0.75 * f < *v && *v < 1.5 * f));
    assert!(lipschitz_number(&m, &phi).unwrap() <= 0.70);
}

#[test]
fn circle_kink_is_smoothed() {
    let p = SmoothingParams::default();
    let m = Generator::Circle {
        circumference: 2.0,
        edges: 10_000,
    }
    .build()
    .unwrap();
    let (d, f, phi, passes) = pipeline_phi(&m, &p);
    let cut = (0..m.vertex_count()).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
    assert!((d[cut] - 1.0).abs() < 1e-12);
    assert!((phi[cut] - f[cut]).abs() <= f[cut] / 8.0);

    let xs: Vec<f64> = (0..10_000).map(|i| i as f64 * 2e-4).collect();
    let fo: Vec<f64> = xs.iter().map(|&x| 2.0 / 3.0 * x.min(2.0 - x).max(p.r_ball)).collect();
    let oracle = QuadratureSmoother {
        xs,
        f: fo.clone(),
        period: Some(2.0),
    };
    let widths = oracle.widths(p.kernel_width_fraction);
    let mut vals = fo;
    for _ in 0..passes {
        vals = oracle.pass(&vals, &widths, p.band());
    }
    // the vertex ids of the generator follow the chart parameter
    assert!((vals[cut] - phi[cut]).abs() < 1e-3, "{} vs {}", vals[cut], phi[cut]);
    // the shrunken band is what bounds the deviation at the cut
    assert!(phi[cut] >= 0.875 * f[cut] - 1e-15);
    assert!(lipschitz_number(&m, &phi).unwrap() <= 0.75);
}

#[test]
fn constant_field_is_fixed() {
    let m = Generator::HalfLine {
        horizon: 5.0,
        edges: 500,
    }
    .build()
    .unwrap();
    let f = ScalarField::constant(&m, 0.7);
    let (phi, cert) = smooth_approx(&m, &f, &SmoothingParams::default()).unwrap();
    assert!(phi.values().iter().all(|&x| x == 0.7));
    assert_eq!(cert.measured_lipschitz, 0.0);
    assert!((cert.min_tube_clearance - 0.25).abs() < 1e-15);
}

#[test]
fn spiral_domain_passes_distance_tube() {
    let p = SmoothingParams::default();
    let m = Generator::HalfLine {
        horizon: 100.0,
        edges: 10_000,
    }
    .build()
    .unwrap();
    let (d, f, phi, _) = pipeline_phi(&m, &p);
    assert!(verify_tube(&phi, &f, &d, &p).unwrap().passed());
}

/// Largest `|Δ²φ|/h²` over chain vertices with `D ≤ d_max`.
fn interior_second_difference(m: &SampledManifold, phi: &ScalarField, d: &ScalarField, d_max: f64) -> f64 {
    let c = m.chain_order().unwrap();
    let v = &c.vertices;
    let h = m.mesh_scale();
    (1..v.len() - 1)
        .filter(|&i| d[v[i]] <= d_max)
        .map(|i| (phi[v[i + 1]] - 2.0 * phi[v[i]] + phi[v[i - 1]]).abs() / (h * h))
        .fold(0.0, f64::max)
}

#[test]
fn second_differences_stay_bounded_under_refinement() {
    let p = SmoothingParams::default();
    let mut m = Generator::LineSegment {
        t0: 0.0,
        t1: 4.0,
        edges: 400,
        metric: "(1 + 0.1 * math::sin(t))^2".into(),
    }
    .build()
    .unwrap();
    let mut bounds = Vec::new();
    for _ in 0..3 {
        let (d, _, phi, _) = pipeline_phi(&m, &p);
        // the one-sided average at the far end leaves the band and gets clamped,
        // so only the part whose kernels never reach it is compared
        bounds.push(interior_second_difference(&m, &phi, &d, d.max() / 2.0));
        m = refine(&m, 1).unwrap();
    }
    assert!(bounds.iter().all(|b| b.is_finite() && *b < 10.0), "{bounds:?}");
    assert!(bounds[2] < 1.2 * bounds[0], "{bounds:?}");
}

fn random_path(lengths: &[f64], base: usize) -> SampledManifold {
    let edges: Vec<_> = lengths.iter().enumerate().map(|(i, &l)| (i, i + 1, l)).collect();
    SampledManifold::from_edge_lengths(lengths.len() + 1, &edges, base % (lengths.len() + 1)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn certified_phi_stays_in_tube(lengths in prop::collection::vec(0.002f64..0.02, 50..400), base in any::<usize>()) {
        let p = SmoothingParams::default();
        let m = random_path(&lengths, base);
        let d = distance_field(&m).unwrap();
        let f = truncate_distance(&d, &p).unwrap();
        match smooth_approx(&m, &f, &p) {
            Ok((phi, cert)) => {
                prop_assert!(cert.valid);
                for v in 0..phi.len() {
                    let r = phi[v] / f[v];
                    prop_assert!(0.75 < r && r < 1.5, "ratio {} at {}", r, v);
                }
                prop_assert!(lipschitz_number(&m, &phi).unwrap() <= 0.75);
            }
            Err(e) => prop_assert!(false, "random metric not certified: {}", e),
        }
    }

    #[test]
    fn mollification_is_monotone(
        lengths in prop::collection::vec(0.01f64..0.1, 5..80),
        lo in prop::collection::vec(0.1f64..2.0, 81),
        bump in prop::collection::vec(prop_oneof![Just(0.0), 1e-6f64..1.0], 81),
        width in 0.01f64..0.3,
    ) {
        let m = random_path(&lengths, 0);
        let n = m.vertex_count();
        let f1: Vec<f64> = lo[..n].to_vec();
        let f2: Vec<f64> = f1.iter().zip(&bump).map(|(a, b)| a + b).collect();
        let widths = vec![width; n];
        let p1 = mollify_pass(&m, &f1, &widths).unwrap();
        let p2 = mollify_pass(&m, &f2, &widths).unwrap();
        for v in 0..n {
            // rounding of the weighted sums allows a few ulps
            prop_assert!(p1[v] <= p2[v] + 1e-14 * p2[v].abs(), "{} > {} at {}", p1[v], p2[v], v);
        }
    }
}
