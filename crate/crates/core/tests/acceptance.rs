//! Acceptance run: one PASS/FAIL line per criterion with the measured value
//! and its pinned tolerance. Exits non-zero if any criterion fails.
//!
//! ```text
//! cargo test --test acceptance
//! ```

mod common;

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use opfpwl::bench::{render_report, run_suite, BenchConfig, ReportFormat};
use opfpwl::formulations::{build, BuildOptions, CostKind, PowerFlowKind};
use opfpwl::ipm::{kkt_check, solve, SolverOptions};
use opfpwl::modelir::{AcFlowPolar, Block, BlockKind, ModelIR, SolveStatus};
use opfpwl::pwlcost::{check_assumptions, evaluate, preprocess, PwlCurve, DEFAULT_SLOPE_TOL};

use common::{case_path, fd_jacobian, load, vertex_enumeration_min, PWL_CASES};

const EQUIVALENCE_TOL: f64 = 1e-5;
const SUITE_TIME_LIMIT: Duration = Duration::from_secs(120);
const RELAXATION_TOL: f64 = 1e-6;
const LP_ORACLE_TOL: f64 = 1e-8;
const LP_ORACLE_MAX_VARS: usize = 12;
const PWL_TOL: f64 = 1e-9;
const DERIVATIVE_TOL: f64 = 1e-5;
const KKT_TOL: f64 = 1e-6;
const STRESS_CASE: &str = "case30_syn";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// One solved cell of the suite.
struct Solved {
    status: SolveStatus,
    objective: f64,
    kkt: f64,
}

type Suite = BTreeMap<(&'static str, PowerFlowKind, CostKind), Solved>;

fn solve_suite() -> (Suite, Duration) {
    let start = Instant::now();
    let mut out = Suite::new();
    let opts = SolverOptions::default();
    for name in PWL_CASES {
        let net = load(name);
        for pf in PowerFlowKind::ALL {
            for cost in CostKind::PWL {
                let opf = build(&net, pf, cost, &BuildOptions::default()).expect("bundled case builds");
                let (res, _) = solve(&opf.model, &opts);
                let kkt = kkt_check(&opf.model, &res).max();
                out.insert((name, pf, cost), Solved { status: res.status, objective: res.objective, kkt });
            }
        }
    }
    (out, start.elapsed())
}

fn cross_encoding(suite: &Suite, elapsed: Duration) -> Outcome {
    let mut worst = 0.0f64;
    let mut failures = Vec::new();
    for name in PWL_CASES {
        for pf in PowerFlowKind::ALL {
            let cells: Vec<&Solved> = CostKind::PWL.iter().map(|&k| &suite[&(name, pf, k)]).collect();
            if cells.iter().any(|c| c.status != SolveStatus::Optimal) {
                failures.push(format!("{name}/{}", pf.name()));
                continue;
            }
            let lo = cells.iter().map(|c| c.objective).fold(f64::INFINITY, f64::min);
            let hi = cells.iter().map(|c| c.objective).fold(f64::NEG_INFINITY, f64::max);
            worst = worst.max((hi - lo) / lo.abs().max(1.0));
        }
    }
    let pass = failures.is_empty() && worst <= EQUIVALENCE_TOL && elapsed < SUITE_TIME_LIMIT && PWL_CASES.len() >= 6;
    outcome(
        pass,
        format!(
            "{} cases x 3 models, max objective spread {worst:.2e} rel (tol {EQUIVALENCE_TOL:.0e}), {:.1} s (limit {} s){}",
            PWL_CASES.len(),
            elapsed.as_secs_f64(),
            SUITE_TIME_LIMIT.as_secs(),
            if failures.is_empty() { String::new() } else { format!(", not optimal: {}", failures.join(" ")) }
        ),
    )
}

fn relaxation_bound(suite: &Suite) -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut checked = 0;
    for name in PWL_CASES {
        for cost in CostKind::PWL {
            let (ac, soc) = (&suite[&(name, PowerFlowKind::Ac, cost)], &suite[&(name, PowerFlowKind::Soc, cost)]);
            if ac.status == SolveStatus::Optimal && soc.status == SolveStatus::Optimal {
                worst = worst.max((soc.objective - ac.objective) / ac.objective.abs());
                checked += 1;
            }
        }
    }
    let expected = PWL_CASES.len() * CostKind::PWL.len();
    outcome(
        checked == expected && worst <= RELAXATION_TOL,
        format!("{checked}/{expected} pairs, max (SOC - AC)/|AC| = {worst:.2e} (tol {RELAXATION_TOL:.0e})"),
    )
}

fn lp_oracle() -> Outcome {
    let opts = SolverOptions { tol: 1e-10, ..SolverOptions::default() };
    let mut worst = 0.0f64;
    let mut count = 0;
    let mut ok = true;
    for name in PWL_CASES {
        let net = load(name);
        for cost in CostKind::PWL {
            let opf = build(&net, PowerFlowKind::Dc, cost, &BuildOptions::default()).unwrap();
            if opf.model.n_vars() > LP_ORACLE_MAX_VARS {
                continue;
            }
            count += 1;
            let (res, _) = solve(&opf.model, &opts);
            match vertex_enumeration_min(&opf.model) {
                Some(v) if res.status == SolveStatus::Optimal => worst = worst.max((res.objective - v).abs()),
                _ => ok = false,
            }
        }
    }
    outcome(
        ok && count > 0 && worst <= LP_ORACLE_TOL,
        format!("{count} DC builds with <= {LP_ORACLE_MAX_VARS} variables, max |ipm - vertex| = {worst:.2e} (tol {LP_ORACLE_TOL:.0e})"),
    )
}

fn random_curve(rng: &mut ChaCha8Rng) -> PwlCurve {
    let n = rng.gen_range(2..=8);
    let mut pts = vec![(rng.gen_range(-5.0..5.0), rng.gen_range(0.0..100.0))];
    let mut slope = rng.gen_range(-20.0..50.0);
    for _ in 1..n {
        let &(p, c) = pts.last().unwrap();
        let w = rng.gen_range(0.05..3.0);
        pts.push((p + w, c + slope * w));
        slope += rng.gen_range(1e-3..20.0);
    }
    PwlCurve::new(pts).unwrap()
}

fn interpolate(pts: &[(f64, f64)], x: f64) -> f64 {
    let l = pts.windows(2).position(|w| x <= w[1].0).unwrap_or(pts.len() - 2);
    let ((p0, c0), (p1, c1)) = (pts[l], pts[l + 1]);
    c0 + (c1 - c0) / (p1 - p0) * (x - p0)
}

fn pwl_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    let mut preprocess_ok = true;
    for _ in 0..1000 {
        let curve = random_curve(&mut rng);
        let pts = curve.points();
        let s = curve.slopes();
        let (lo, hi) = curve.domain();
        for _ in 0..100 {
            let x = rng.gen_range(lo..=hi);
            let want = interpolate(pts, x);
            let max_form = evaluate(&curve, x).unwrap();
            let lambda: f64 = curve.lambda_weights(x).unwrap().iter().zip(pts).map(|(w, p)| w * p.1).sum();
            let delta = pts[0].1 + curve.delta_bins(x).unwrap().iter().zip(s).map(|(b, s)| b * s).sum::<f64>();
            let phi = s[0] * x
                + curve.intercepts()[0]
                + (1..s.len()).map(|l| (s[l] - s[l - 1]) * (x - pts[l].0).max(0.0)).sum::<f64>();
            for v in [max_form, lambda, delta, phi] {
                worst = worst.max((v - want).abs());
            }
        }
        let (a, b) = (rng.gen_range(-0.3..1.3), rng.gen_range(-0.3..1.3));
        let (pmin, pmax) = (lo + f64::min(a, b) * (hi - lo), lo + f64::max(a, b) * (hi - lo));
        let clean = preprocess(&curve, pmin, pmax, DEFAULT_SLOPE_TOL).unwrap();
        preprocess_ok &= check_assumptions(&clean, pmin, pmax).is_empty();
        preprocess_ok &= preprocess(&clean, pmin, pmax, DEFAULT_SLOPE_TOL).unwrap() == clean;
        for i in 0..=20 {
            let x = (pmin + (pmax - pmin) * i as f64 / 20.0).min(pmax);
            preprocess_ok &= (evaluate(&clean, x).unwrap() - interpolate(pts, x)).abs() <= PWL_TOL;
        }
    }
    outcome(
        worst <= PWL_TOL && preprocess_ok,
        format!(
            "1000 curves x 100 points, max form disagreement {worst:.2e} abs (tol {PWL_TOL:.0e}), preprocess idempotent and value preserving: {preprocess_ok}"
        ),
    )
}

fn derivative_model(kind: BlockKind, rng: &mut ChaCha8Rng) -> ModelIR {
    let mut m = ModelIR::new();
    let v: Vec<usize> = (0..6).map(|i| m.add_variable(format!("x{i}"), -10.0, 10.0, 0.0)).collect();
    let mut c = || rng.gen_range(-3.0..3.0);
    let body = match kind {
        BlockKind::LinearEq => Block::Linear { terms: vec![(v[0], c()), (v[3], c())], lower: 1.0, upper: 1.0 },
        BlockKind::LinearIneq => Block::Linear { terms: vec![(v[1], c()), (v[2], c())], lower: -1.0, upper: 2.0 },
        BlockKind::QuadraticIneq => Block::Quadratic {
            quadratic: vec![(v[0], v[0], c()), (v[1], v[2], c())],
            linear: vec![(v[4], c())],
            lower: f64::NEG_INFINITY,
            upper: 1.0,
        },
        BlockKind::SocCone => Block::SocCone { wr: v[0], wi: v[1], wii: v[2], wjj: v[3] },
        BlockKind::AcFlowPolar => Block::AcFlow(AcFlowPolar {
            vm_a: v[0],
            vm_b: v[1],
            va_a: v[2],
            va_b: v[3],
            p: v[4],
            q: v[5],
            g_own: c(),
            b_own: c(),
            g_mut: c(),
            b_mut: c(),
        }),
        BlockKind::ApparentPowerLimit => Block::ApparentPower { p: v[2], q: v[5], limit: 1.5 },
    };
    m.add_block(kind.name(), body);
    m
}

fn derivative_audit() -> Outcome {
    const H: f64 = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst = 0.0f64;
    let rel = |a: f64, b: f64| (a - b).abs() / a.abs().max(b.abs()).max(1.0);
    for kind in BlockKind::ALL {
        for _ in 0..100 {
            let m = derivative_model(kind, &mut rng);
            let n = m.n_vars();
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let y: Vec<f64> = (0..m.n_rows()).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let jac = m.eval_jacobian(&x).unwrap().to_dense();
            let fd = fd_jacobian(&m, &x, H);
            for (ra, rf) in jac.iter().zip(&fd) {
                for (a, f) in ra.iter().zip(rf) {
                    worst = worst.max(rel(*a, *f));
                }
            }
            let hess = m.eval_lagrangian_hessian(&x, &y, 1.0).unwrap().to_dense();
            let grad = |x: &[f64]| -> Vec<f64> {
                let j = m.eval_jacobian(x).unwrap().to_dense();
                (0..n).map(|c| (0..y.len()).map(|r| y[r] * j[r][c]).sum()).collect()
            };
            let mut xp = x.clone();
            for j in 0..n {
                xp[j] = x[j] + H;
                let up = grad(&xp);
                xp[j] = x[j] - H;
                let dn = grad(&xp);
                xp[j] = x[j];
                for i in 0..n {
                    worst = worst.max(rel(hess[i][j], (up[i] - dn[i]) / (2.0 * H)));
                }
            }
        }
    }
    outcome(
        worst <= DERIVATIVE_TOL,
        format!("{} kinds x 100 points, max rel error {worst:.2e} (tol {DERIVATIVE_TOL:.0e})", BlockKind::ALL.len()),
    )
}

fn kkt_audit(suite: &Suite) -> Outcome {
    let optimal: Vec<&Solved> = suite.values().filter(|s| s.status == SolveStatus::Optimal).collect();
    let worst = optimal.iter().map(|s| s.kkt).fold(0.0, f64::max);
    outcome(
        !optimal.is_empty() && worst <= KKT_TOL,
        format!("{} optimal results, max KKT residual {worst:.2e} (tol {KKT_TOL:.0e})", optimal.len()),
    )
}

fn table_reproduction() -> Outcome {
    let cfg = BenchConfig {
        cases: PWL_CASES.iter().map(|c| case_path(c)).collect(),
        trials: 1,
        ..BenchConfig::default()
    };
    let (first, second) = match (run_suite(&cfg), run_suite(&cfg)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, format!("bench failed: {e}")),
    };
    let csv = render_report(&first, ReportFormat::Csv);
    let header_ok = csv.starts_with(
        "case,pf,buses,branches,obj_lambda,delta_delta,delta_phi,delta_psi,t_lambda,t_delta,t_phi,t_psi,ratio_lambda,ratio_delta,ratio_phi,ratio_psi",
    );
    let mut worst_delta = 0.0f64;
    let mut min_ratio = f64::INFINITY;
    let mut complete = true;
    for row in &first.rows {
        let (Some(reference), Some(ratios)) = (row.reference_objective(), row.ratios()) else {
            complete = false;
            continue;
        };
        for k in CostKind::PWL {
            worst_delta = worst_delta.max(row.delta(k).map_or(f64::INFINITY, |d| d.abs() / reference.abs()));
            min_ratio = min_ratio.min(ratios[&k]);
        }
    }
    let deterministic = first.without_timings() == second.without_timings()
        && render_report(&first.without_timings(), ReportFormat::Csv) == render_report(&second.without_timings(), ReportFormat::Csv);
    outcome(
        header_ok && complete && worst_delta <= EQUIVALENCE_TOL && min_ratio >= 1.0 && deterministic,
        format!(
            "{} rows, max |delta| {worst_delta:.2e} rel (tol {EQUIVALENCE_TOL:.0e}), min ratio {min_ratio:.3} (>= 1), deterministic: {deterministic}",
            first.rows.len()
        ),
    )
}

fn psi_stress() -> Outcome {
    let net = load(STRESS_CASE);
    let mut iters = BTreeMap::new();
    let mut min_points = usize::MAX;
    for cost in CostKind::PWL {
        let opf = build(&net, PowerFlowKind::Ac, cost, &BuildOptions::default()).unwrap();
        min_points = opf.costs.iter().map(|c| c.as_piecewise().unwrap().len()).min().unwrap();
        let (res, _) = solve(&opf.model, &SolverOptions::default());
        if res.status != SolveStatus::Optimal {
            return outcome(false, format!("{STRESS_CASE} AC {} not optimal", cost.name()));
        }
        iters.insert(cost, res.iterations);
    }
    let others = [CostKind::Lambda, CostKind::Delta, CostKind::Phi].iter().map(|k| iters[k]).min().unwrap();
    let psi = iters[&CostKind::Psi];
    outcome(
        min_points >= 4 && psi >= others,
        format!("{STRESS_CASE} AC (>= {min_points} points per curve): psi {psi} iterations, min of lambda/delta/phi {others}"),
    )
}

fn main() {
    let (suite, elapsed) = solve_suite();
    let results = [
        ("cross-encoding equivalence", cross_encoding(&suite, elapsed)),
        ("relaxation bound", relaxation_bound(&suite)),
        ("LP oracle equivalence", lp_oracle()),
        ("PWL function equivalence", pwl_equivalence()),
        ("derivative audit", derivative_audit()),
        ("KKT audit", kkt_audit(&suite)),
        ("formulation table", table_reproduction()),
        ("psi stress signal", psi_stress()),
    ];
    let mut failed = 0;
    for (i, (name, o)) in results.iter().enumerate() {
        println!("{} {}. {name}: {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
        failed += usize::from(!o.pass);
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
