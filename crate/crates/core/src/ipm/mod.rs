//! Primal-dual interior-point solver for [`ModelIR`] instances.
//!
//! Inequality rows get bounded slacks, bounds are handled by a logarithmic
//! barrier, and each iteration solves the regularized augmented KKT system
//! with a sparse LDLᵀ factorization whose inertia drives Hessian
//! regularization. Steps are globalized by backtracking on an ℓ1 exact
//! penalty merit function with a second-order correction.
//!
//! ```
//! use opfpwl::ipm::{solve, SolverOptions};
//! use opfpwl::modelir::{Block, ModelIR};
//! use opfpwl::modelir::SolveStatus;
//!
//! // minimize x subject to x >= 1
//! let mut m = ModelIR::new();
//! let x = m.add_variable("x", f64::NEG_INFINITY, f64::INFINITY, 0.0);
//! m.add_block("floor", Block::Linear { terms: vec![(x, 1.0)], lower: 1.0, upper: f64::INFINITY });
//! m.objective.add_term(x, 1.0);
//! let (result, _log) = solve(&m, &SolverOptions::default());
//! assert_eq!(result.status, SolveStatus::Optimal);
//! assert!((result.objective - 1.0).abs() < 1e-6);
//! ```

pub mod linalg;
mod solver;

use std::fmt::Write as _;
use std::time::Duration;

use crate::modelir::{ModelIR, SolveResult};

pub use solver::solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierStrategy {
    /// Fiacco–McCormick: μ shrinks once the barrier subproblem is solved
    /// to within a multiple of μ, and never grows.
    Monotone,
    /// μ follows the average complementarity with a centrality-based
    /// factor, as in LOQO.
    Adaptive,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Tolerance on the scaled KKT residual.
    pub tol: f64,
    pub max_iter: usize,
    pub barrier: BarrierStrategy,
    pub mu_init: f64,
    /// Smallest nonzero primal regularization tried by inertia correction.
    pub reg_floor: f64,
    /// Fraction-to-boundary parameter.
    pub tau: f64,
    pub time_limit: Option<Duration>,
    /// Models with fewer variables than this use the dense factorization.
    pub dense_below: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-6,
            max_iter: 500,
            barrier: BarrierStrategy::Monotone,
            mu_init: 0.1,
            reg_floor: 1e-8,
            tau: 0.995,
            time_limit: None,
            dense_below: 200,
        }
    }
}

/// One row of the iteration log. Infeasibilities are measured at the start
/// of the iteration; step sizes and regularization belong to the step taken.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    pub mu: f64,
    pub primal_inf: f64,
    pub dual_inf: f64,
    pub compl: f64,
    pub alpha_primal: f64,
    pub alpha_dual: f64,
    /// Primal regularization used for the step.
    pub reg: f64,
    /// Extra factorizations spent correcting the inertia.
    pub inertia_corrections: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    pub records: Vec<IterationRecord>,
}

impl IterationLog {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_inertia_corrections(&self) -> usize {
        self.records.iter().map(|r| r.inertia_corrections).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,mu,primal_inf,dual_inf,compl,alpha_primal,alpha_dual,reg\n");
        for r in &self.records {
            let _ = writeln!(
                s,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}",
                r.iter, r.mu, r.primal_inf, r.dual_inf, r.compl, r.alpha_primal, r.alpha_dual, r.reg
            );
        }
        s
    }
}

/// KKT residual components of a primal-dual point, each a max-norm.
/// Stationarity and complementarity are divided by `1 + ‖duals‖∞`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KktReport {
    pub stationarity: f64,
    pub primal: f64,
    pub complementarity: f64,
    /// Largest multiplier with the wrong sign for its bound or row side.
    pub dual_sign: f64,
    /// The `1 + ‖duals‖∞` divisor applied above.
    pub dual_scale: f64,
}

impl KktReport {
    pub fn max(&self) -> f64 {
        self.stationarity.max(self.primal).max(self.complementarity).max(self.dual_sign)
    }
}

/// Recomputes the KKT residuals of `result` from model evaluations alone.
///
/// Fixed variables are excluded from stationarity. Row complementarity
/// pairs a negative row dual with the distance to the lower range bound
/// and a positive one with the distance to the upper bound; equality rows
/// carry free multipliers.
pub fn kkt_check(m: &ModelIR, result: &SolveResult) -> KktReport {
    let n = m.n_vars();
    let x = &result.primal;
    let y = &result.constraint_duals;
    let (zl, zu) = (&result.lower_bound_duals, &result.upper_bound_duals);
    let bad = KktReport {
        stationarity: f64::INFINITY,
        primal: f64::INFINITY,
        complementarity: f64::INFINITY,
        dual_sign: f64::INFINITY,
        dual_scale: 1.0,
    };
    if x.len() != n || y.len() != m.n_rows() || zl.len() != n || zu.len() != n {
        return bad;
    }
    let Ok(rows) = m.eval_rows(x) else { return bad };
    let Ok(jac) = m.eval_jacobian(x) else { return bad };

    let dual_norm = y.iter().chain(zl).chain(zu).fold(0.0f64, |a, v| a.max(v.abs()));
    let scale = 1.0 + dual_norm;

    let mut grad = m.objective.gradient(n);
    for &(r, j, v) in &jac.entries {
        grad[j] += y[r] * v;
    }
    let mut stationarity = 0.0f64;
    let mut primal = 0.0f64;
    let mut compl = 0.0f64;
    let mut sign = 0.0f64;
    for (j, var) in m.variables.iter().enumerate() {
        if !var.is_fixed() {
            stationarity = stationarity.max((grad[j] - zl[j] + zu[j]).abs());
        }
        primal = primal.max(var.lower - x[j]).max(x[j] - var.upper);
        if var.lower.is_finite() {
            compl = compl.max((zl[j] * (x[j] - var.lower)).abs());
        } else {
            sign = sign.max(zl[j].abs());
        }
        if var.upper.is_finite() {
            compl = compl.max((zu[j] * (var.upper - x[j])).abs());
        } else {
            sign = sign.max(zu[j].abs());
        }
        sign = sign.max(-zl[j]).max(-zu[j]);
    }
    for ((&g, (lo, hi)), &yr) in rows.iter().zip(m.row_bounds()).zip(y) {
        primal = primal.max(lo - g).max(g - hi);
        if lo == hi {
            continue;
        }
        if yr < 0.0 {
            if lo.is_finite() {
                compl = compl.max(-yr * (g - lo).abs());
            } else {
                sign = sign.max(-yr);
            }
        } else if yr > 0.0 {
            if hi.is_finite() {
                compl = compl.max(yr * (hi - g).abs());
            } else {
                sign = sign.max(yr);
            }
        }
    }
    KktReport {
        stationarity: stationarity / scale,
        primal: primal.max(0.0),
        complementarity: compl / scale,
        dual_sign: sign,
        dual_scale: scale,
    }
}
