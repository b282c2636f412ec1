//! Properties of piecewise-linear cost curves: the four evaluation forms
//! agree with plain interpolation, and cleanup is idempotent and value
//! preserving.

use proptest::prelude::*;

use opfpwl::pwlcost::{check_assumptions, evaluate, preprocess, PwlCurve, DEFAULT_SLOPE_TOL};

/// Strictly convex curve with 2 to 8 points.
fn convex_points() -> impl Strategy<Value = Vec<(f64, f64)>> {
    (2usize..=8)
        .prop_flat_map(|n| {
            (
                -50.0..50.0f64,
                -20.0..50.0f64,
                0.0..100.0f64,
                prop::collection::vec(0.01..10.0f64, n - 1),
                prop::collection::vec(1e-3..20.0f64, n - 1),
            )
        })
        .prop_map(|(p0, s0, c0, widths, rises)| {
            let mut pts = vec![(p0, c0)];
            let mut slope = s0;
            for (w, r) in widths.iter().zip(&rises) {
                let &(p, c) = pts.last().unwrap();
                pts.push((p + w, c + slope * w));
                slope += r;
            }
            pts
        })
}

/// Linear interpolation between the bracketing breakpoints; outside the
/// points, the end segments are extended.
fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    let n = pts.len();
    let l = pts.windows(2).position(|w| x <= w[1].0).unwrap_or(n - 2);
    let ((p0, c0), (p1, c1)) = (pts[l], pts[l + 1]);
    c0 + (c1 - c0) / (p1 - p0) * (x - p0)
}

fn forms(curve: &PwlCurve, x: f64) -> [f64; 4] {
    let pts = curve.points();
    let s = curve.slopes();
    let max_form = evaluate(curve, x).unwrap();
    let lambda: f64 = curve.lambda_weights(x).unwrap().iter().zip(pts).map(|(w, p)| w * p.1).sum();
    let delta = pts[0].1 + curve.delta_bins(x).unwrap().iter().zip(s).map(|(b, s)| b * s).sum::<f64>();
    let phi = s[0] * x
        + curve.intercepts()[0]
        + (1..s.len()).map(|l| (s[l] - s[l - 1]) * (x - pts[l].0).max(0.0)).sum::<f64>();
    [max_form, lambda, delta, phi]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn four_forms_agree(points in convex_points(), ts in prop::collection::vec(0.0..=1.0f64, 100)) {
        let curve = PwlCurve::new(points.clone()).unwrap();
        let (lo, hi) = curve.domain();
        for t in ts {
            let x = lo + t * (hi - lo);
            let want = interpolate(&points, x);
            for (k, v) in forms(&curve, x).into_iter().enumerate() {
                prop_assert!((v - want).abs() <= 1e-9 * (1.0 + want.abs()), "form {k} at {x}: {v} vs {want}");
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn lambda_weights_are_adjacent_convex_combinations(points in convex_points(), t in 0.0..=1.0f64) {
        let curve = PwlCurve::new(points.clone()).unwrap();
        let (lo, hi) = curve.domain();
        let x = lo + t * (hi - lo);
        let w = curve.lambda_weights(x).unwrap();
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let px: f64 = w.iter().zip(&points).map(|(w, p)| w * p.0).sum();
        prop_assert!((px - x).abs() < 1e-9 * (1.0 + x.abs()));
        let nz: Vec<usize> = (0..w.len()).filter(|&i| w[i] > 1e-12).collect();
        prop_assert!(nz.len() <= 2 && nz.windows(2).all(|p| p[1] == p[0] + 1));
    }

    #[test]
    fn delta_bins_fill_in_order(points in convex_points(), t in 0.0..=1.0f64) {
        let curve = PwlCurve::new(points.clone()).unwrap();
        let (lo, hi) = curve.domain();
        let x = lo + t * (hi - lo);
        let bins = curve.delta_bins(x).unwrap();
        let widths: Vec<f64> = points.windows(2).map(|w| w[1].0 - w[0].0).collect();
        prop_assert!((lo + bins.iter().sum::<f64>() - x).abs() < 1e-9 * (1.0 + x.abs()));
        for l in 1..bins.len() {
            if bins[l] > 1e-12 {
                prop_assert!((bins[l - 1] - widths[l - 1]).abs() < 1e-9, "bin {l} used before {} is full", l - 1);
            }
        }
    }

    #[test]
    fn evaluate_is_convex(points in convex_points(), a in 0.0..=1.0f64, b in 0.0..=1.0f64, t in 0.0..=1.0f64) {
        let curve = PwlCurve::new(points).unwrap();
        let (lo, hi) = curve.domain();
        let (x1, x2) = (lo + a * (hi - lo), lo + b * (hi - lo));
        let f = |x: f64| evaluate(&curve, x).unwrap();
        prop_assert!(f(t * x1 + (1.0 - t) * x2) <= t * f(x1) + (1.0 - t) * f(x2) + 1e-9 * (1.0 + f(x1).abs() + f(x2).abs()));
    }

    #[test]
    fn preprocess_is_idempotent_and_value_preserving(
        points in convex_points(),
        a in -0.3..1.3f64,
        b in -0.3..1.3f64,
    ) {
        let raw = PwlCurve::new(points.clone()).unwrap();
        let (lo, hi) = raw.domain();
        let (pmin, pmax) = (lo + a.min(b) * (hi - lo), lo + a.max(b) * (hi - lo));
        let clean = preprocess(&raw, pmin, pmax, DEFAULT_SLOPE_TOL).unwrap();
        prop_assert!(check_assumptions(&clean, pmin, pmax).is_empty());
        prop_assert_eq!(&preprocess(&clean, pmin, pmax, DEFAULT_SLOPE_TOL).unwrap(), &clean);
        let (clo, chi) = clean.domain();
        prop_assert!(clo <= pmin && chi >= pmax);
        for i in 0..=20 {
            let x = (pmin + (pmax - pmin) * i as f64 / 20.0).min(pmax);
            let want = interpolate(&points, x);
            let got = evaluate(&clean, x).unwrap();
            prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want.abs()), "at {x}: {got} vs {want}");
        }
    }
}

#[test]
fn preprocess_extends_trims_and_merges() {
    let curve = |p: &[f64], c: &[f64]| PwlCurve::new(p.iter().copied().zip(c.iter().copied()).collect()).unwrap();
    // first segment lies below pmin, last one is extended to pmax at slope 4
    let raw = curve(&[0.0, 10.0, 20.0, 30.0, 40.0], &[0.0, 10.0, 30.0, 60.0, 100.0]);
    let clean = preprocess(&raw, 15.0, 45.0, DEFAULT_SLOPE_TOL).unwrap();
    assert_eq!(clean.points(), &[(10.0, 10.0), (20.0, 30.0), (30.0, 60.0), (45.0, 120.0)]);
    for x in [15.0, 20.0, 33.0, 40.0] {
        assert!((evaluate(&clean, x).unwrap() - interpolate(raw.points(), x)).abs() < 1e-12);
    }
    // equal slopes merge
    let raw = curve(&[0.0, 10.0, 20.0, 30.0], &[0.0, 10.0, 20.0, 40.0]);
    let clean = preprocess(&raw, 0.0, 30.0, DEFAULT_SLOPE_TOL).unwrap();
    assert_eq!(clean.points(), &[(0.0, 0.0), (20.0, 20.0), (30.0, 40.0)]);
    for &(p, c) in raw.points() {
        assert_eq!(evaluate(&clean, p).unwrap(), c);
    }
}

#[test]
fn concave_curve_is_rejected() {
    let raw = PwlCurve::new(vec![(0.0, 0.0), (1.0, 3.0), (2.0, 4.0)]).unwrap();
    assert!(preprocess(&raw, 0.0, 2.0, DEFAULT_SLOPE_TOL).is_err());
}
