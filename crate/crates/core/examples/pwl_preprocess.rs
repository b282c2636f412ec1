//! Cleans up a piecewise-linear cost curve against generator bounds and
//! evaluates it through the four encodings.
//!
//! The curve below has a redundant collinear breakpoint and a first
//! breakpoint above `pmin`. Preprocessing extends the first segment down to
//! `pmin`, trims the last segment to `pmax` and merges the collinear pair.
//!
//! ```text
//! cargo run --example pwl_preprocess
//! ```

use opfpwl::pwlcost::{check_assumptions, evaluate, preprocess, PwlCurve, DEFAULT_SLOPE_TOL};

fn main() -> anyhow::Result<()> {
    let raw = PwlCurve::new(vec![(0.2, 30.0), (0.4, 60.0), (0.6, 90.0), (1.0, 200.0), (1.6, 400.0)])?;
    let (pmin, pmax) = (0.1, 1.2);
    println!("raw points   {:?}", raw.points());
    println!("raw slopes   {:?}", raw.slopes());
    println!("violations   {:?}", check_assumptions(&raw, pmin, pmax));

    let curve = preprocess(&raw, pmin, pmax, DEFAULT_SLOPE_TOL)?;
    println!("clean points {:?}", curve.points());
    println!("clean slopes {:?}", curve.slopes());
    println!("violations   {:?}", check_assumptions(&curve, pmin, pmax));
    println!("idempotent   {}", preprocess(&curve, pmin, pmax, DEFAULT_SLOPE_TOL)? == curve);

    let pts = curve.points();
    let slopes = curve.slopes();
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "p", "max-form", "lambda", "delta", "phi");
    for i in 0..=8 {
        let p = pmin + (pmax - pmin) * i as f64 / 8.0;
        let max_form = evaluate(&curve, p)?;
        let lambda: f64 = curve.lambda_weights(p)?.iter().zip(pts).map(|(w, &(_, c))| w * c).sum();
        let delta: f64 = pts[0].1 + curve.delta_bins(p)?.iter().zip(slopes).map(|(d, s)| d * s).sum::<f64>();
        let phi: f64 = curve.intercepts()[0]
            + slopes[0] * p
            + curve.phi_excess(p)?.iter().enumerate().map(|(l, e)| e * (slopes[l + 1] - slopes[l])).sum::<f64>();
        println!("{p:>6.3} {max_form:>12.6} {lambda:>12.6} {delta:>12.6} {phi:>12.6}");
    }
    Ok(())
}
