//! Invariants of the regularity report and of catalog constructions.

use ureg_core::catalog::{self, Coordinates};
use ureg_core::regularity::{regularity_report, Estimate, ReportConfig, Verdict};
use ureg_core::tensor::curvature;
use ureg_core::{Expr, PointRef, SamplingPlan};

fn light() -> ReportConfig {
    ReportConfig { k_max: 3, ..ReportConfig::default() }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

fn assert_close_estimates(a: &[Estimate], b: &[Estimate], tol: f64) {
    for (x, y) in a.iter().zip(b) {
        assert!(x.value < 1e-9 && y.value < 1e-9 || rel(x.value, y.value) <= tol, "{}: {} vs {}", x.quantity, x.value, y.value);
    }
}

#[test]
fn rotation_pullback_preserves_constants() {
    let (f, g) = catalog::rotation_2d(0.7);
    for base in [catalog::sphere(2).unwrap(), catalog::poincare_ball(2).unwrap()] {
        let rotated = catalog::pullback(&base, &f, &g).unwrap();
        let a = regularity_report(&base, &light()).unwrap();
        let b = regularity_report(&rotated, &light()).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert!(rel(a.metric_equivalence.value, b.metric_equivalence.value) <= 0.05);
        assert_close_estimates(&a.metric_bounds, &b.metric_bounds, 0.05);
        assert_close_estimates(&a.curvature_bounds, &b.curvature_bounds, 0.05);
    }
}

#[test]
fn product_scalar_curvature_is_additive() {
    let s2 = catalog::sphere(2).unwrap();
    let h2 = catalog::poincare_ball(2).unwrap();
    let prod = catalog::product(&s2, &h2).unwrap();
    let nb = h2.atlas.charts.len();
    for (p, q) in [([0.1, -0.2], [0.3, 0.05]), ([0.4, 0.0], [-0.2, 0.6])] {
        let a = curvature(&s2.atlas.charts[0], &p).unwrap();
        let b = curvature(&h2.atlas.charts[3], &q).unwrap();
        let x = [p[0], p[1], q[0], q[1]];
        let c = curvature(&prod.atlas.charts[3], &x).unwrap();
        assert_eq!(prod.atlas.charts[3].id, 3);
        assert!(nb > 3);
        assert!((c.scalar - (a.scalar + b.scalar)).abs() < 1e-5, "{} vs {}", c.scalar, a.scalar + b.scalar);
        assert!(c.norm().unwrap() <= a.norm().unwrap() + b.norm().unwrap() + 1e-9);
        assert!((a.scalar - 2.0).abs() < 1e-9 && (b.scalar + 2.0).abs() < 1e-9);
    }
}

#[test]
fn constant_rescaling_scales_c_and_curvature() {
    // metric / ρ² with ρ = 1/2 is the metric scaled by λ² = 4
    let base = catalog::sphere(2).unwrap();
    let scaled = catalog::rescale_singular(&base, &Expr::num(0.5), Coordinates::Chart).unwrap();
    let a = regularity_report(&base, &light()).unwrap();
    let b = regularity_report(&scaled, &light()).unwrap();
    assert!(rel(b.metric_equivalence.value, 4.0 * a.metric_equivalence.value) < 1e-9);
    let x = [0.2, -0.3];
    let (u, v) = ([1.0, 0.0], [0.3, 1.0]);
    let k0 = curvature(&base.atlas.charts[0], &x).unwrap().sectional(&u, &v).unwrap();
    let k1 = curvature(&scaled.atlas.charts[0], &x).unwrap().sectional(&u, &v).unwrap();
    assert!((k1 - k0 / 4.0).abs() < 1e-9, "{k0} {k1}");
}

#[test]
fn estimates_are_monotone_and_reports_deterministic() {
    for name in ["funnel1", "corner-unstretched", "poincare3"] {
        let d = catalog::by_name(name).unwrap().build().unwrap();
        let a = regularity_report(&d, &light()).unwrap();
        for e in a.estimates() {
            assert!(e.by_level.windows(2).all(|w| w[1] >= w[0]), "{name} {}: {:?}", e.quantity, e.by_level);
            assert!(e.value >= 0.0);
        }
        assert!(a.metric_equivalence.value >= 1.0);
        let b = regularity_report(&d, &light()).unwrap();
        assert_eq!(a, b);
    }
}

#[test]
fn verdict_is_seed_independent() {
    let d = catalog::funnel(0.5, 4.0).unwrap();
    let cfg = |seed| ReportConfig { plan: SamplingPlan { seed, ..SamplingPlan::default() }, ..light() };
    let a = regularity_report(&d, &cfg(1)).unwrap();
    let b = regularity_report(&d, &cfg(2)).unwrap();
    assert_eq!(a.verdict, Verdict::Consistent);
    assert_eq!(b.verdict, Verdict::Consistent);
}

#[test]
fn unstretched_corner_witness_sits_at_small_t() {
    let d = catalog::corner(false, 1e-3).unwrap();
    let r = regularity_report(&d, &light()).unwrap();
    assert_eq!(r.verdict, Verdict::Inconsistent);
    let w = r.witness.expect("inconsistent reports carry a witness");
    let chart = &d.atlas.charts[w.chart.unwrap()];
    let t = chart.model_at(w.point.as_ref().unwrap()).unwrap().unwrap()[0];
    assert!(t < 0.01, "witness at t = {t}");
    assert!(w.trend.windows(2).any(|p| p[1] >= 4.0 * p[0]));
}

#[test]
fn rescaled_corner_matches_stretched_metric() {
    let stretched = catalog::corner(true, 1e-3).unwrap();
    let rescaled = catalog::by_name("corner-rescaled").unwrap().build().unwrap();
    for id in [0, 100, 200, 300] {
        for x in SamplingPlan::default().ball_points(3, 0) {
            let a = stretched.atlas.charts[id].metric_at(&x).unwrap();
            let b = rescaled.atlas.charts[id].metric_at(&x).unwrap();
            assert!(a.iter().zip(&b).all(|(p, q)| (p - q).abs() < 1e-9 * (1.0 + p.abs())));
        }
    }
    let p = PointRef::new(5, vec![0.1, 0.2, 0.3]);
    assert_eq!(stretched.atlas.locate(&p).unwrap(), rescaled.atlas.locate(&p).unwrap());
}

/// Compares each chart metric with `JᵀJ` of an embedding of the model
/// coordinates, differentiated by central differences.
fn embedded_oracle(mfd: &ureg_core::ManifoldDescriptor, embed: impl Fn(&[f64]) -> Vec<f64>) -> f64 {
    let atlas = &mfd.atlas;
    let h = 1e-5;
    let mut worst = 0.0f64;
    let pts = ureg_core::sampling::halton_ball(2, 50, 3, 0.95);
    for (i, x) in pts.iter().enumerate() {
        let chart = atlas.chart(i * 7 % atlas.charts.len()).unwrap();
        let e = |y: &[f64]| embed(&chart.model_at(y).unwrap().unwrap());
        let cols: Vec<Vec<f64>> = (0..2)
            .map(|j| {
                let (mut p, mut q) = (x.clone(), x.clone());
                p[j] += h;
                q[j] -= h;
                e(&p).iter().zip(e(&q)).map(|(a, b)| (a - b) / (2.0 * h)).collect()
            })
            .collect();
        let g = chart.metric_at(x).unwrap();
        for a in 0..2 {
            for b in 0..2 {
                let ff: f64 = cols[a].iter().zip(&cols[b]).map(|(u, v)| u * v).sum();
                worst = worst.max((ff - g[a * 2 + b]).abs());
            }
        }
    }
    worst
}

#[test]
fn funnel_and_b_metrics_match_embedded_surfaces() {
    for alpha in [0.0, 0.5, 1.0] {
        let mfd = catalog::funnel(alpha, 4.0).unwrap();
        let err = embedded_oracle(&mfd, |m| {
            let r = m[0].powf(alpha);
            vec![m[0], r * m[1].cos(), r * m[1].sin()]
        });
        assert!(err < 1e-6, "funnel alpha {alpha}: {err:e}");
    }
    let mfd = catalog::b_manifold(1e-3).unwrap();
    let err = embedded_oracle(&mfd, |m| vec![m[0].ln(), m[1].cos(), m[1].sin()]);
    assert!(err < 1e-6, "b-manifold: {err:e}");
}

#[test]
fn b_manifold_axial_distance_is_log_length() {
    use ureg_core::geodesic::{distance_estimate, DistanceOptions};
    let mfd = catalog::b_manifold(1e-3).unwrap();
    // point with model coordinates (e^s, 0)
    let at = |s: f64| {
        mfd.atlas
            .charts
            .iter()
            .find_map(|c| {
                let o = c.model_at(&[0.0, 0.0]).unwrap().unwrap();
                let x = vec![s - o[0].ln(), -o[1]];
                (x[0].hypot(x[1]) < 0.5).then(|| PointRef::new(c.id, x))
            })
            .unwrap()
    };
    let big_l = 2.0;
    let d = distance_estimate(&mfd.atlas, &at(0.0), &at(-big_l), &DistanceOptions::default()).unwrap();
    assert!((d.upper.unwrap() - big_l).abs() < 1e-3 && d.lower <= big_l, "{d:?}");
}

#[test]
fn circle_has_circumference_two_pi() {
    use ureg_core::geodesic::{distance_estimate, DistanceOptions};
    let mfd = catalog::sphere(1).unwrap();
    let d = distance_estimate(&mfd.atlas, &PointRef::new(0, vec![0.0]), &PointRef::new(1, vec![0.0]), &DistanceOptions::default())
        .unwrap();
    assert!((2.0 * d.upper.unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-2, "{d:?}");
}

#[test]
fn poincare_charts_share_one_constant() {
    use ureg_core::regularity::metric_equivalence_constant;
    for m in [2, 3] {
        let mfd = catalog::poincare_ball(m).unwrap();
        let pts = SamplingPlan::default().ball_points(m, 1);
        let cs: Vec<f64> =
            mfd.atlas.charts.iter().map(|c| metric_equivalence_constant(c, &pts).unwrap()).collect();
        assert!(cs.iter().all(|c| (c - cs[0]).abs() < 1e-12), "{cs:?}");
        assert!((cs[0] - 1.0 / (1.0 - 0.25 * 0.99 * 0.99f64).powi(2)).abs() < 0.05 * cs[0], "{}", cs[0]);
    }
}
