//! Helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};

use opfpwl::modelir::{Block, ModelIR};
use opfpwl::netdata::{parse_case, Network};

pub fn data_dir() -> PathBuf {
    PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data"))
}

pub fn case_path(name: &str) -> PathBuf {
    data_dir().join(format!("{name}.m"))
}

pub fn load(name: &str) -> Network {
    let text = std::fs::read_to_string(case_path(name)).expect("bundled case");
    parse_case(&text).expect("bundled case parses")
}

/// Bundled cases whose generators all carry piecewise-linear costs.
pub const PWL_CASES: [&str; 8] = [
    "case1_pwl",
    "case2_pwl",
    "case3_pwl",
    "case5_pjm",
    "case14_syn",
    "case30_syn",
    "case57_syn",
    "case118_syn",
];

pub fn rel_diff(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1.0)
}

/// One linear constraint `a·x (=|>=|<=) rhs` gathered from a model.
struct Halfspace {
    a: Vec<f64>,
    rhs: f64,
    equality: bool,
    /// `a·x >= rhs` when true, `a·x <= rhs` otherwise.
    lower: bool,
}

fn linear_constraints(m: &ModelIR) -> Vec<Halfspace> {
    let n = m.n_vars();
    let mut out = Vec::new();
    let mut push = |a: Vec<f64>, lo: f64, hi: f64| {
        if lo == hi {
            out.push(Halfspace { a, rhs: lo, equality: true, lower: true });
            return;
        }
        if lo.is_finite() {
            out.push(Halfspace { a: a.clone(), rhs: lo, equality: false, lower: true });
        }
        if hi.is_finite() {
            out.push(Halfspace { a, rhs: hi, equality: false, lower: false });
        }
    };
    for (j, v) in m.variables.iter().enumerate() {
        let mut a = vec![0.0; n];
        a[j] = 1.0;
        push(a, v.lower, v.upper);
    }
    for b in &m.blocks {
        let Block::Linear { terms, lower, upper } = &b.body else {
            panic!("vertex enumeration needs a linear model, found {}", b.label);
        };
        let mut a = vec![0.0; n];
        for &(j, c) in terms {
            a[j] += c;
        }
        push(a, *lower, *upper);
    }
    out
}

fn combinations(n: usize, k: usize, f: &mut impl FnMut(&[usize])) {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, f: &mut impl FnMut(&[usize])) {
        if cur.len() == k {
            f(cur);
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, f);
            cur.pop();
        }
    }
    rec(0, n, k, &mut Vec::new(), f);
}

/// Minimum of a linear model's objective over its polyhedron, by solving
/// every system of `n` linearly independent active constraints and keeping
/// the feasible solutions. Returns `None` when no vertex is feasible.
pub fn vertex_enumeration_min(m: &ModelIR) -> Option<f64> {
    let n = m.n_vars();
    let cons = linear_constraints(m);
    let eq: Vec<&Halfspace> = cons.iter().filter(|h| h.equality).collect();
    let ineq: Vec<&Halfspace> = cons.iter().filter(|h| !h.equality).collect();
    let rank_eq = if eq.is_empty() {
        0
    } else {
        DMatrix::from_fn(eq.len(), n, |i, j| eq[i].a[j]).rank(1e-10)
    };
    let k = n.checked_sub(rank_eq)?;
    let cost = m.objective.gradient(n);
    let feasible = |x: &DVector<f64>| {
        cons.iter().all(|h| {
            let v: f64 = h.a.iter().zip(x.iter()).map(|(a, x)| a * x).sum();
            let scale: f64 = h.a.iter().zip(x.iter()).map(|(a, x)| (a * x).abs()).sum();
            let tol = 1e-12 * (1.0 + h.rhs.abs() + scale);
            if h.equality {
                (v - h.rhs).abs() <= tol
            } else if h.lower {
                v >= h.rhs - tol
            } else {
                v <= h.rhs + tol
            }
        })
    };
    let mut best: Option<f64> = None;
    combinations(ineq.len(), k, &mut |pick| {
        let active: Vec<&Halfspace> = eq.iter().copied().chain(pick.iter().map(|&i| ineq[i])).collect();
        let a = DMatrix::from_fn(active.len(), n, |i, j| active[i].a[j]);
        let b = DVector::from_iterator(active.len(), active.iter().map(|h| h.rhs));
        let svd = a.clone().svd(true, true);
        if svd.rank(1e-10) < n {
            return;
        }
        let Ok(x) = svd.solve(&b, 1e-12) else { return };
        if (&a * &x - &b).amax() > 1e-10 * (1.0 + b.amax()) || !feasible(&x) {
            return;
        }
        let f: f64 = cost.iter().zip(x.iter()).map(|(c, x)| c * x).sum::<f64>() + m.objective.offset;
        best = Some(best.map_or(f, |b: f64| b.min(f)));
    });
    best
}

/// Central finite-difference Jacobian of the model's rows.
pub fn fd_jacobian(m: &ModelIR, x: &[f64], h: f64) -> Vec<Vec<f64>> {
    let rows = m.n_rows();
    let mut jac = vec![vec![0.0; x.len()]; rows];
    let mut xp = x.to_vec();
    for j in 0..x.len() {
        xp[j] = x[j] + h;
        let up = m.eval_rows(&xp).unwrap();
        xp[j] = x[j] - h;
        let dn = m.eval_rows(&xp).unwrap();
        xp[j] = x[j];
        for r in 0..rows {
            jac[r][j] = (up[r] - dn[r]) / (2.0 * h);
        }
    }
    jac
}
