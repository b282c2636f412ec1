use std::collections::VecDeque;
use std::time::{Duration, Instant};

use log::debug;

use super::linalg::{gmres, sym_matvec, Factorization, Inertia};
use super::{kkt_check, BarrierStrategy, IterationLog, IterationRecord, SolverOptions};
use crate::modelir::{ModelIR, SolveResult, SolveStatus};

const BOUND_PUSH: f64 = 1e-2;
const KAPPA_EPS: f64 = 10.0;
const KAPPA_MU: f64 = 0.2;
const THETA_MU: f64 = 1.5;
const KAPPA_SIGMA: f64 = 1e10;
const DUAL_REG: f64 = 1e-8;
const MAX_REG: f64 = 1e40;
const ARMIJO_ETA: f64 = 1e-4;
const PENALTY_RHO: f64 = 0.1;
const MAX_LS_FAILURES: usize = 20;
const KRYLOV_RESTART: usize = 20;
const KRYLOV_CYCLES: usize = 3;
const GRADIENT_CAP: f64 = 100.0;
const DUAL_BLOWUP: f64 = 1e12;
const MIN_STEP: f64 = 1e-12;
/// Number of recent iterates the Armijo test may compare against.
const NONMONOTONE_DEPTH: usize = 4;
/// Largest accepted relative residual of a Newton system solve.
const SOLVE_TOL: f64 = 1e-8;

/// Model data in solver coordinates: non-fixed variables followed by one
/// slack per ranged row, with rows scaled by `row_scale`.
struct Problem<'a> {
    model: &'a ModelIR,
    free: Vec<usize>,
    /// Number of free model variables; slacks follow.
    n: usize,
    /// Free variables plus slacks.
    dim: usize,
    m: usize,
    x_full: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    /// Scaled right-hand side of equality rows; unused for ranged rows.
    rhs: Vec<f64>,
    slack_of_row: Vec<Option<usize>>,
    row_scale: Vec<f64>,
    /// Factor converting solver multipliers of each coordinate to model
    /// units before division by the objective scale: 1 for variables, the
    /// row scale for slacks.
    unit: Vec<f64>,
    obj_scale: f64,
    grad: Vec<f64>,
    jac_pattern: Vec<(usize, usize)>,
    /// Solver column of each model Jacobian entry, `None` for fixed columns.
    jac_cols: Vec<Option<usize>>,
    hess_map: Vec<Option<(usize, usize)>>,
    kkt: KktLayout,
}

/// Lower-triangle coordinates of the augmented matrix, grouped as
/// primal diagonal, Hessian, Jacobian, slack columns and dual diagonal.
struct KktLayout {
    lower: Vec<(usize, usize)>,
    hess_start: usize,
    jac_start: usize,
    slack_start: usize,
    dual_start: usize,
}

struct Eval {
    rows: Vec<f64>,
    c: Vec<f64>,
}

struct Iterate {
    z: Vec<f64>,
    y: Vec<f64>,
    zl: Vec<f64>,
    zu: Vec<f64>,
}

struct Errors {
    primal: f64,
    dual: f64,
    compl: f64,
    /// Unscaled complementarity, also held to the tolerance so that the
    /// duality gap stays small when multipliers are large.
    compl_abs: f64,
    total: f64,
    dual_norm: f64,
}

impl<'a> Problem<'a> {
    fn new(model: &'a ModelIR) -> Self {
        let free: Vec<usize> = (0..model.n_vars()).filter(|&j| !model.variables[j].is_fixed()).collect();
        let mut pos = vec![None; model.n_vars()];
        for (k, &j) in free.iter().enumerate() {
            pos[j] = Some(k);
        }
        let n = free.len();
        let bounds = model.row_bounds();
        let m = bounds.len();
        let mut slack_of_row = vec![None; m];
        let mut ns = 0;
        for (r, &(lo, hi)) in bounds.iter().enumerate() {
            if lo != hi {
                slack_of_row[r] = Some(n + ns);
                ns += 1;
            }
        }
        let dim = n + ns;

        let x_full = model.initial_point();
        let jac_pattern = model.jacobian_structure();
        let jac_cols: Vec<Option<usize>> = jac_pattern.iter().map(|&(_, j)| pos[j]).collect();
        let hess_map: Vec<Option<(usize, usize)>> = model
            .hessian_structure()
            .iter()
            .map(|&(i, j)| match (pos[i], pos[j]) {
                (Some(a), Some(b)) => Some((a.max(b), a.min(b))),
                _ => None,
            })
            .collect();

        let mut lower: Vec<(usize, usize)> = (0..dim).map(|i| (i, i)).collect();
        let hess_start = lower.len();
        lower.extend(hess_map.iter().flatten().copied());
        let jac_start = lower.len();
        for (&(r, _), col) in jac_pattern.iter().zip(&jac_cols) {
            if let Some(c) = col {
                lower.push((dim + r, *c));
            }
        }
        let slack_start = lower.len();
        for (r, s) in slack_of_row.iter().enumerate() {
            if let Some(s) = s {
                lower.push((dim + r, *s));
            }
        }
        let dual_start = lower.len();
        lower.extend((0..m).map(|r| (dim + r, dim + r)));

        let grad_model = model.objective.gradient(model.n_vars());
        let gmax = free.iter().fold(0.0f64, |a, &j| a.max(grad_model[j].abs()));
        let obj_scale = if gmax > GRADIENT_CAP { GRADIENT_CAP / gmax } else { 1.0 };
        let mut grad = vec![0.0; dim];
        for (k, &j) in free.iter().enumerate() {
            grad[k] = obj_scale * grad_model[j];
        }

        let mut p = Problem {
            model,
            free,
            n,
            dim,
            m,
            x_full,
            lower: vec![f64::NEG_INFINITY; dim],
            upper: vec![f64::INFINITY; dim],
            rhs: vec![0.0; m],
            slack_of_row,
            row_scale: vec![1.0; m],
            unit: vec![1.0; dim],
            obj_scale,
            grad,
            jac_pattern,
            jac_cols,
            hess_map,
            kkt: KktLayout { lower, hess_start, jac_start, slack_start, dual_start },
        };
        for (k, &j) in p.free.iter().enumerate() {
            p.lower[k] = model.variables[j].lower;
            p.upper[k] = model.variables[j].upper;
        }
        p.compute_row_scaling();
        for (r, &(lo, hi)) in bounds.iter().enumerate() {
            let d = p.row_scale[r];
            match p.slack_of_row[r] {
                Some(s) => {
                    p.lower[s] = d * lo;
                    p.upper[s] = d * hi;
                    p.unit[s] = d;
                }
                None => p.rhs[r] = d * lo,
            }
        }
        p
    }

    /// Scales each row so its largest gradient entry at the initial point
    /// is at most `GRADIENT_CAP`.
    fn compute_row_scaling(&mut self) {
        let x0 = self.pushed_start();
        self.set_x(&x0);
        let mut vals = vec![0.0; self.jac_pattern.len()];
        self.model.jacobian_values_into(&self.x_full, &mut vals);
        let mut maxg = vec![0.0f64; self.m];
        for ((&(r, _), col), v) in self.jac_pattern.iter().zip(&self.jac_cols).zip(&vals) {
            if col.is_some() && v.is_finite() {
                maxg[r] = maxg[r].max(v.abs());
            }
        }
        for (d, g) in self.row_scale.iter_mut().zip(maxg) {
            *d = if g > GRADIENT_CAP { (GRADIENT_CAP / g).max(1e-8) } else { 1.0 };
        }
    }

    /// Initial point of the free variables pushed strictly inside bounds.
    fn pushed_start(&self) -> Vec<f64> {
        self.free
            .iter()
            .enumerate()
            .map(|(k, &j)| push_inside(self.model.variables[j].initial, self.lower[k], self.upper[k]))
            .collect()
    }

    fn set_x(&mut self, z: &[f64]) {
        for (k, &j) in self.free.iter().enumerate() {
            self.x_full[j] = z[k];
        }
    }

    fn objective(&self, z: &[f64]) -> f64 {
        let lin: f64 = self.grad.iter().zip(z).map(|(g, v)| g * v).sum();
        lin + self.obj_scale * self.model.objective.offset
    }

    fn evaluate(&mut self, z: &[f64], out: &mut Eval) -> bool {
        self.set_x(z);
        self.model.eval_rows_into(&self.x_full, &mut out.rows);
        for r in 0..self.m {
            let g = self.row_scale[r] * out.rows[r];
            out.c[r] = match self.slack_of_row[r] {
                Some(s) => g - z[s],
                None => g - self.rhs[r],
            };
        }
        out.c.iter().all(|v| v.is_finite())
    }

    /// Scaled Jacobian values in the solver's column space, in pattern order.
    fn jacobian(&mut self, z: &[f64], model_vals: &mut [f64], out: &mut Vec<(usize, usize, f64)>) {
        self.set_x(z);
        self.model.jacobian_values_into(&self.x_full, model_vals);
        out.clear();
        for ((&(r, _), col), &v) in self.jac_pattern.iter().zip(&self.jac_cols).zip(model_vals.iter()) {
            if let Some(c) = col {
                out.push((r, *c, self.row_scale[r] * v));
            }
        }
        for (r, s) in self.slack_of_row.iter().enumerate() {
            if let Some(s) = s {
                out.push((r, *s, -1.0));
            }
        }
    }

    fn new_eval(&self) -> Eval {
        Eval { rows: vec![0.0; self.m], c: vec![0.0; self.m] }
    }
}

fn push_inside(x: f64, l: f64, u: f64) -> f64 {
    let mut x = x;
    match (l.is_finite(), u.is_finite()) {
        (true, true) => {
            let pl = (BOUND_PUSH * l.abs().max(1.0)).min(BOUND_PUSH * (u - l));
            let pu = (BOUND_PUSH * u.abs().max(1.0)).min(BOUND_PUSH * (u - l));
            x = x.max(l + pl).min(u - pu);
        }
        (true, false) => x = x.max(l + BOUND_PUSH * l.abs().max(1.0)),
        (false, true) => x = x.min(u - BOUND_PUSH * u.abs().max(1.0)),
        (false, false) => {}
    }
    x
}

fn max_step(v: &[f64], dv: &[f64], lo: &[f64], hi: &[f64], tau: f64) -> f64 {
    let mut alpha = 1.0f64;
    for i in 0..v.len() {
        if dv[i] < 0.0 && lo[i].is_finite() {
            alpha = alpha.min(-tau * (v[i] - lo[i]) / dv[i]);
        } else if dv[i] > 0.0 && hi[i].is_finite() {
            alpha = alpha.min(tau * (hi[i] - v[i]) / dv[i]);
        }
    }
    alpha.max(0.0)
}

fn max_dual_step(z: &[f64], dz: &[f64], tau: f64) -> f64 {
    let mut alpha = 1.0f64;
    for (&v, &d) in z.iter().zip(dz) {
        if d < 0.0 && v > 0.0 {
            alpha = alpha.min(-tau * v / d);
        }
    }
    alpha
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn one_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

struct Workspace {
    jac_model: Vec<f64>,
    jac: Vec<(usize, usize, f64)>,
    hess_model: Vec<f64>,
    kkt_vals: Vec<f64>,
    factor: Factorization,
}

impl Problem<'_> {
    fn barrier(&self, z: &[f64], mu: f64) -> f64 {
        let mut b = 0.0;
        for i in 0..self.dim {
            if self.lower[i].is_finite() {
                b -= (z[i] - self.lower[i]).ln();
            }
            if self.upper[i].is_finite() {
                b -= (self.upper[i] - z[i]).ln();
            }
        }
        mu * b
    }

    fn barrier_gradient(&self, z: &[f64], mu: f64) -> Vec<f64> {
        (0..self.dim)
            .map(|i| {
                let mut g = self.grad[i];
                if self.lower[i].is_finite() {
                    g -= mu / (z[i] - self.lower[i]);
                }
                if self.upper[i].is_finite() {
                    g += mu / (self.upper[i] - z[i]);
                }
                g
            })
            .collect()
    }

    /// Stationarity of the Lagrangian in solver units, `∇f + Jᵀy - zl + zu`.
    fn lagrangian_gradient(&self, jac: &[(usize, usize, f64)], it: &Iterate) -> Vec<f64> {
        let mut g = self.grad.clone();
        for &(r, c, v) in jac {
            g[c] += v * it.y[r];
        }
        for i in 0..self.dim {
            g[i] += it.zu[i] - it.zl[i];
        }
        g
    }

    /// Errors in model units; stationarity and complementarity divided by
    /// `1 + ‖duals‖∞`.
    fn errors(&self, ev: &Eval, lag: &[f64], it: &Iterate, mu: f64) -> Errors {
        let s = self.obj_scale;
        let primal = ev.c.iter().zip(&self.row_scale).fold(0.0f64, |a, (c, d)| a.max((c / d).abs()));
        let mut dual = 0.0f64;
        for (i, &g) in lag.iter().enumerate() {
            let unit = self.unit[i];
            dual = dual.max((g * unit / s).abs());
        }
        let mut compl = 0.0f64;
        let mut dual_norm = 0.0f64;
        for i in 0..self.dim {
            let unit = self.unit[i];
            if self.lower[i].is_finite() {
                compl = compl.max((it.zl[i] * (it.z[i] - self.lower[i]) - mu).abs() / s);
                dual_norm = dual_norm.max(it.zl[i] * unit / s);
            }
            if self.upper[i].is_finite() {
                compl = compl.max((it.zu[i] * (self.upper[i] - it.z[i]) - mu).abs() / s);
                dual_norm = dual_norm.max(it.zu[i] * unit / s);
            }
        }
        for (r, &y) in it.y.iter().enumerate() {
            dual_norm = dual_norm.max((y * self.row_scale[r] / s).abs());
        }
        let scale = 1.0 + dual_norm;
        Errors {
            primal,
            dual: dual / scale,
            compl: compl / scale,
            compl_abs: compl,
            total: primal.max(dual / scale).max(compl / scale),
            dual_norm,
        }
    }

    /// Barrier-subproblem error in solver units.
    fn barrier_error(&self, ev: &Eval, lag: &[f64], it: &Iterate, mu: f64) -> f64 {
        const S_MAX: f64 = 100.0;
        let mut zsum = 0.0;
        let mut count = self.m;
        let mut compl = 0.0f64;
        for i in 0..self.dim {
            if self.lower[i].is_finite() {
                zsum += it.zl[i];
                count += 1;
                compl = compl.max((it.zl[i] * (it.z[i] - self.lower[i]) - mu).abs());
            }
            if self.upper[i].is_finite() {
                zsum += it.zu[i];
                count += 1;
                compl = compl.max((it.zu[i] * (self.upper[i] - it.z[i]) - mu).abs());
            }
        }
        let ysum = one_norm(&it.y);
        let sd = ((ysum + zsum) / count.max(1) as f64).max(S_MAX) / S_MAX;
        let zcount = count - self.m;
        let sc = (zsum / zcount.max(1) as f64).max(S_MAX) / S_MAX;
        (inf_norm(lag) / sd).max(inf_norm(&ev.c)).max(compl / sc)
    }


    /// Fills the KKT values for Hessian weights `y`, primal diagonal `diag`
    /// and dual regularization `dual_reg`.
    fn fill_kkt(&mut self, z: &[f64], y: Option<&[f64]>, diag: &[f64], dual_reg: f64, ws: &mut Workspace) {
        let (hess_start, jac_start, slack_start, dual_start) =
            (self.kkt.hess_start, self.kkt.jac_start, self.kkt.slack_start, self.kkt.dual_start);
        ws.kkt_vals.clear();
        ws.kkt_vals.resize(self.kkt.lower.len(), 0.0);
        ws.kkt_vals[..self.dim].copy_from_slice(diag);
        if let Some(y) = y {
            let weights: Vec<f64> = y.iter().zip(&self.row_scale).map(|(a, d)| a * d).collect();
            self.set_x(z);
            self.model.hessian_values_into(&self.x_full, &weights, &mut ws.hess_model);
            let mut p = hess_start;
            for (map, &v) in self.hess_map.iter().zip(&ws.hess_model) {
                if map.is_some() {
                    ws.kkt_vals[p] = v;
                    p += 1;
                }
            }
        }
        for (dst, &(_, _, v)) in ws.kkt_vals[jac_start..slack_start].iter_mut().zip(&ws.jac) {
            *dst = v;
        }
        for v in &mut ws.kkt_vals[slack_start..dual_start] {
            *v = -1.0;
        }
        for v in &mut ws.kkt_vals[dual_start..] {
            *v = -dual_reg;
        }
    }

    /// Solves the factored system, then corrects toward the matrix without
    /// dual regularization by GMRES preconditioned with the factorization.
    /// Also returns the final residual relative to `1 + ‖rhs‖∞`.
    fn solve_refined(&self, ws: &Workspace, rhs: &[f64]) -> (Vec<f64>, f64) {
        let mut x = rhs.to_vec();
        ws.factor.solve(&mut x);
        let mut exact_vals = ws.kkt_vals.clone();
        for v in &mut exact_vals[self.kkt.dual_start..] {
            *v = 0.0;
        }
        let scale = 1.0 + inf_norm(rhs);
        let rn = gmres(
            |v, out| sym_matvec(&self.kkt.lower, &exact_vals, v, out),
            |v| ws.factor.solve(v),
            rhs,
            &mut x,
            1e-12 * scale,
            KRYLOV_RESTART,
            KRYLOV_CYCLES,
        );
        (x, rn / scale)
    }
}

/// Solves `m` and returns the result in model units with the per-iteration
/// log. Identical inputs give identical iterates.
pub fn solve(m: &ModelIR, opts: &SolverOptions) -> (SolveResult, IterationLog) {
    let start = Instant::now();
    let mut log = IterationLog::default();
    if m.validate().is_err() {
        let result = failed_result(m, SolveStatus::NumericalError, start.elapsed());
        return (result, log);
    }
    let mut p = Problem::new(m);
    let dim = p.dim;
    let total = dim + p.m;
    let dense = m.n_vars() < opts.dense_below;
    let mut ws = Workspace {
        jac_model: vec![0.0; p.jac_pattern.len()],
        jac: Vec::new(),
        hess_model: vec![0.0; p.hess_map.len()],
        kkt_vals: Vec::new(),
        factor: Factorization::new(total, &p.kkt.lower, dense),
    };

    // starting point
    let mut z = vec![0.0; dim];
    z[..p.n].copy_from_slice(&p.pushed_start());
    let mut ev = p.new_eval();
    p.set_x(&z);
    m.eval_rows_into(&p.x_full, &mut ev.rows);
    for r in 0..p.m {
        if let Some(s) = p.slack_of_row[r] {
            z[s] = push_inside(p.row_scale[r] * ev.rows[r], p.lower[s], p.upper[s]);
        }
    }
    if !p.evaluate(&z, &mut ev) {
        let result = failed_result(m, SolveStatus::NumericalError, start.elapsed());
        return (result, log);
    }
    let zl: Vec<f64> = p.lower.iter().map(|l| if l.is_finite() { 1.0 } else { 0.0 }).collect();
    let zu: Vec<f64> = p.upper.iter().map(|u| if u.is_finite() { 1.0 } else { 0.0 }).collect();
    let mut it = Iterate { z, y: vec![0.0; p.m], zl, zu };
    p.jacobian(&it.z, &mut ws.jac_model, &mut ws.jac);

    // least-squares multiplier estimate
    if p.m > 0 {
        let ones = vec![1.0; dim];
        p.fill_kkt(&it.z, None, &ones, DUAL_REG, &mut ws);
        if ws.factor.factor(&ws.kkt_vals).is_some() {
            let mut rhs = vec![0.0; total];
            for i in 0..dim {
                rhs[i] = -(p.grad[i] - it.zl[i] + it.zu[i]);
            }
            let (sol, _) = p.solve_refined(&ws, &rhs);
            let y = &sol[dim..];
            if inf_norm(y) <= 1e3 {
                it.y.copy_from_slice(y);
            }
        }
    }

    let mut mu = opts.mu_init;
    let mu_min = opts.tol * p.obj_scale.min(1.0) / 10.0;
    let mut nu = 1e-6f64;
    // (objective + barrier, ‖c‖₁) of recent iterates at the current μ
    let mut history: VecDeque<(f64, f64)> = VecDeque::with_capacity(NONMONOTONE_DEPTH);
    let mut history_mu = f64::NAN;
    let mut last_reg = 0.0f64;
    let mut ls_failures = 0usize;
    let mut audit_failures = 0usize;
    let mut iter = 0usize;

    let status = loop {
        let lag = p.lagrangian_gradient(&ws.jac, &it);
        let err = p.errors(&ev, &lag, &it, 0.0);

        if err.total <= opts.tol && err.compl_abs <= opts.tol {
            let result = build_result(&mut p, &it, SolveStatus::Optimal, iter, start.elapsed());
            let audit = kkt_check(m, &result);
            if audit.max() <= opts.tol {
                break SolveStatus::Optimal;
            }
            audit_failures += 1;
            debug!("kkt audit rejected point at iter {iter}: {audit:?}");
            if audit_failures > 5 && mu <= mu_min {
                break SolveStatus::NumericalError;
            }
        }
        if iter >= opts.max_iter {
            break SolveStatus::IterationLimit;
        }
        if opts.time_limit.is_some_and(|t| start.elapsed() >= t) {
            break SolveStatus::IterationLimit;
        }
        if err.dual_norm > DUAL_BLOWUP {
            break SolveStatus::Infeasible;
        }

        // barrier parameter
        match opts.barrier {
            BarrierStrategy::Monotone => {
                while mu > mu_min && p.barrier_error(&ev, &lag, &it, mu) <= KAPPA_EPS * mu {
                    mu = (KAPPA_MU * mu).min(mu.powf(THETA_MU)).max(mu_min);
                }
                if err.total <= opts.tol {
                    mu = (KAPPA_MU * mu).max(mu_min);
                }
            }
            BarrierStrategy::Adaptive => {
                mu = adaptive_mu(&p, &it).max(mu_min);
            }
        }
        let tau = opts.tau.max(1.0 - mu);

        // primal diagonal Σ
        let sigma: Vec<f64> = (0..dim)
            .map(|i| {
                let mut s = 0.0;
                if p.lower[i].is_finite() {
                    s += it.zl[i] / (it.z[i] - p.lower[i]);
                }
                if p.upper[i].is_finite() {
                    s += it.zu[i] / (p.upper[i] - it.z[i]);
                }
                s
            })
            .collect();

        let mut reg = 0.0f64;
        let mut corrections = 0usize;
        let want = Inertia { positive: dim, negative: p.m, zero: 0 };
        let bgrad = p.barrier_gradient(&it.z, mu);
        let mut rhs = vec![0.0; total];
        for i in 0..dim {
            rhs[i] = -bgrad[i];
        }
        for &(r, c, v) in &ws.jac {
            rhs[c] -= v * it.y[r];
        }
        for r in 0..p.m {
            rhs[dim + r] = -ev.c[r];
        }

        // factorization with inertia correction; an inaccurate solve is
        // treated like a wrong inertia since the factorization does not pivot
        let solved = loop {
            let diag: Vec<f64> = sigma.iter().map(|s| s + reg).collect();
            p.fill_kkt(&it.z, Some(&it.y), &diag, DUAL_REG, &mut ws);
            if ws.factor.factor(&ws.kkt_vals) == Some(want) {
                let (sol, residual) = p.solve_refined(&ws, &rhs);
                if residual <= SOLVE_TOL {
                    break Some(sol);
                }
                debug!("iter {iter}: linear solve residual {residual:.1e} at reg {reg:.1e}");
            }
            corrections += 1;
            reg = if reg == 0.0 { opts.reg_floor.max(last_reg / 3.0) } else { reg * 10.0 };
            if reg > MAX_REG {
                break None;
            }
        };
        let Some(sol) = solved else {
            break SolveStatus::NumericalError;
        };
        last_reg = reg;

        let (mut dz, mut dy) = (sol[..dim].to_vec(), sol[dim..].to_vec());

        // merit penalty
        let theta = one_norm(&ev.c);
        let slope_obj: f64 = bgrad.iter().zip(&dz).map(|(g, d)| g * d).sum();
        if theta > 0.0 {
            let mut wdz = vec![0.0; total];
            let mut dz_ext = dz.clone();
            dz_ext.resize(total, 0.0);
            let mut primal_vals = ws.kkt_vals.clone();
            for v in &mut primal_vals[p.kkt.jac_start..] {
                *v = 0.0;
            }
            sym_matvec(&p.kkt.lower, &primal_vals, &dz_ext, &mut wdz);
            let curv: f64 = dz.iter().zip(&wdz).map(|(a, b)| a * b).sum();
            let nu_trial = (slope_obj + 0.5 * curv.max(0.0)) / ((1.0 - PENALTY_RHO) * theta);
            if nu < nu_trial {
                nu = 1.1 * nu_trial + 1e-8;
            }
        }
        let dphi = slope_obj - nu * theta;
        let merit = |p: &Problem, z: &[f64], c: &[f64]| p.objective(z) + p.barrier(z, mu) + nu * one_norm(c);
        let phi_here = merit(&p, &it.z, &ev.c);
        if history_mu != mu {
            history.clear();
            history_mu = mu;
        }
        if history.len() == NONMONOTONE_DEPTH {
            history.pop_front();
        }
        history.push_back((phi_here - nu * theta, theta));
        // nonmonotone reference: worst merit over recent iterates
        let phi0 = history.iter().fold(phi_here, |a, &(fb, th)| a.max(fb + nu * th));

        let alpha_max = max_step(&it.z, &dz, &p.lower, &p.upper, tau);
        let tiny = dz.iter().zip(&it.z).all(|(d, v)| d.abs() <= 10.0 * f64::EPSILON * (1.0 + v.abs()));

        let mut trial_ev = p.new_eval();
        let mut alpha = alpha_max;
        let mut trial = vec![0.0; dim];
        if tiny {
            ls_failures = 0;
            for i in 0..dim {
                trial[i] = it.z[i] + alpha * dz[i];
            }
            p.evaluate(&trial, &mut trial_ev);
        } else {
            let mut accepted = false;
            let mut first = true;
            let mut full_step: Option<(Vec<f64>, Eval, f64)> = None;
            while alpha >= MIN_STEP * alpha_max.max(MIN_STEP) && alpha > 0.0 {
                for i in 0..dim {
                    trial[i] = it.z[i] + alpha * dz[i];
                }
                let finite = p.evaluate(&trial, &mut trial_ev);
                let phi = if finite { merit(&p, &trial, &trial_ev.c) } else { f64::INFINITY };
                if phi.is_finite() && phi <= phi0 + ARMIJO_ETA * alpha * dphi + 10.0 * f64::EPSILON * phi0.abs() {
                    accepted = true;
                    break;
                }
                if first {
                    first = false;
                    if finite {
                        full_step = Some((trial.clone(), p.new_eval_from(&trial_ev), one_norm(&trial_ev.c)));
                    }
                    if finite && p.m > 0 {
                        // second-order correction
                        let mut rhs_soc = rhs.clone();
                        for r in 0..p.m {
                            rhs_soc[dim + r] = -(alpha * ev.c[r] + trial_ev.c[r]);
                        }
                        let (sol, _) = p.solve_refined(&ws, &rhs_soc);
                        let dz_soc = &sol[..dim];
                        let a_soc = max_step(&it.z, dz_soc, &p.lower, &p.upper, tau);
                        let mut t2 = vec![0.0; dim];
                        for i in 0..dim {
                            t2[i] = it.z[i] + a_soc * dz_soc[i];
                        }
                        let mut ev2 = p.new_eval();
                        if p.evaluate(&t2, &mut ev2) {
                            let phi2 = merit(&p, &t2, &ev2.c);
                            if phi2 <= phi0 + ARMIJO_ETA * alpha * dphi + 10.0 * f64::EPSILON * phi0.abs() {
                                dz = dz_soc.iter().map(|v| v * a_soc).collect();
                                dy = sol[dim..].iter().map(|v| v * a_soc).collect();
                                alpha = 1.0;
                                trial = t2;
                                trial_ev = ev2;
                                accepted = true;
                                break;
                            }
                        }
                    }
                }
                alpha *= 0.5;
            }
            if !accepted {
                ls_failures += 1;
                // fall back to the full step when it reduces infeasibility
                match full_step {
                    Some((t, e, th)) if th < theta => {
                        alpha = alpha_max;
                        trial = t;
                        trial_ev = e;
                    }
                    _ => {
                        alpha = alpha.max(MIN_STEP);
                        for i in 0..dim {
                            trial[i] = it.z[i] + alpha * dz[i];
                        }
                        if !p.evaluate(&trial, &mut trial_ev) {
                            break SolveStatus::NumericalError;
                        }
                    }
                }
                if ls_failures >= MAX_LS_FAILURES {
                    break if err.primal > opts.tol.sqrt() { SolveStatus::Infeasible } else { SolveStatus::NumericalError };
                }
            } else {
                ls_failures = 0;
            }
        }

        // dual step
        let mut dzl = vec![0.0; dim];
        let mut dzu = vec![0.0; dim];
        for i in 0..dim {
            if p.lower[i].is_finite() {
                let s = it.z[i] - p.lower[i];
                dzl[i] = mu / s - it.zl[i] - it.zl[i] / s * dz[i];
            }
            if p.upper[i].is_finite() {
                let s = p.upper[i] - it.z[i];
                dzu[i] = mu / s - it.zu[i] + it.zu[i] / s * dz[i];
            }
        }
        let alpha_dual = max_dual_step(&it.zl, &dzl, tau).min(max_dual_step(&it.zu, &dzu, tau));
        let primal_alpha_logged = alpha;
        for r in 0..p.m {
            it.y[r] += alpha * dy[r];
        }
        it.z.copy_from_slice(&trial);
        for i in 0..dim {
            if p.lower[i].is_finite() {
                let s = it.z[i] - p.lower[i];
                let v = it.zl[i] + alpha_dual * dzl[i];
                it.zl[i] = v.max(mu / (KAPPA_SIGMA * s)).min(KAPPA_SIGMA * mu / s);
            }
            if p.upper[i].is_finite() {
                let s = p.upper[i] - it.z[i];
                let v = it.zu[i] + alpha_dual * dzu[i];
                it.zu[i] = v.max(mu / (KAPPA_SIGMA * s)).min(KAPPA_SIGMA * mu / s);
            }
        }
        ev = trial_ev;
        p.jacobian(&it.z, &mut ws.jac_model, &mut ws.jac);

        log.records.push(IterationRecord {
            iter,
            mu,
            primal_inf: err.primal,
            dual_inf: err.dual,
            compl: err.compl,
            alpha_primal: primal_alpha_logged,
            alpha_dual,
            reg,
            inertia_corrections: corrections,
        });
        debug!(
            "iter {iter:4} mu {mu:.2e} pr {:.2e} du {:.2e} co {:.2e} ap {:.2e} ad {:.2e} reg {reg:.1e}",
            err.primal, err.dual, err.compl, primal_alpha_logged, alpha_dual
        );
        iter += 1;
    };

    let mut result = build_result(&mut p, &it, status, iter, start.elapsed());
    result.kkt_residual = kkt_check(m, &result).max();
    (result, log)
}

impl Problem<'_> {
    fn new_eval_from(&self, e: &Eval) -> Eval {
        Eval { rows: e.rows.clone(), c: e.c.clone() }
    }
}

/// LOQO rule: μ = σ · average complementarity with σ driven by how far the
/// smallest product is from the average.
fn adaptive_mu(p: &Problem, it: &Iterate) -> f64 {
    let mut products = Vec::new();
    for i in 0..p.dim {
        if p.lower[i].is_finite() {
            products.push(it.zl[i] * (it.z[i] - p.lower[i]));
        }
        if p.upper[i].is_finite() {
            products.push(it.zu[i] * (p.upper[i] - it.z[i]));
        }
    }
    if products.is_empty() {
        return 0.0;
    }
    let avg = products.iter().sum::<f64>() / products.len() as f64;
    let min = products.iter().copied().fold(f64::INFINITY, f64::min);
    let xi = if avg > 0.0 { min / avg } else { 1.0 };
    let sigma = 0.1 * (0.05 * (1.0 - xi) / xi.max(1e-12)).min(2.0).powi(3);
    sigma * avg
}

fn build_result(p: &mut Problem, it: &Iterate, status: SolveStatus, iterations: usize, wall: Duration) -> SolveResult {
    let m = p.model;
    let s = p.obj_scale;
    p.set_x(&it.z);
    let primal = p.x_full.clone();
    let constraint_duals: Vec<f64> = it.y.iter().zip(&p.row_scale).map(|(y, d)| y * d / s).collect();
    let mut zl = vec![0.0; m.n_vars()];
    let mut zu = vec![0.0; m.n_vars()];
    for (k, &j) in p.free.iter().enumerate() {
        zl[j] = it.zl[k] / s;
        zu[j] = it.zu[k] / s;
    }
    // multipliers of fixed variables absorb their stationarity residual
    if p.free.len() < m.n_vars() {
        let mut grad = m.objective.gradient(m.n_vars());
        if let Ok(jac) = m.eval_jacobian(&primal) {
            for &(r, j, v) in &jac.entries {
                grad[j] += constraint_duals[r] * v;
            }
        }
        for (j, var) in m.variables.iter().enumerate() {
            if var.is_fixed() {
                if grad[j] >= 0.0 {
                    zl[j] = grad[j];
                } else {
                    zu[j] = -grad[j];
                }
            }
        }
    }
    let objective = m.eval_objective(&primal).unwrap_or(f64::NAN);
    SolveResult {
        status,
        objective,
        primal,
        constraint_duals,
        lower_bound_duals: zl,
        upper_bound_duals: zu,
        kkt_residual: f64::NAN,
        iterations,
        wall_time: wall,
    }
}

fn failed_result(m: &ModelIR, status: SolveStatus, wall: Duration) -> SolveResult {
    let n = m.n_vars();
    SolveResult {
        status,
        objective: f64::NAN,
        primal: m.initial_point(),
        constraint_duals: vec![0.0; m.n_rows()],
        lower_bound_duals: vec![0.0; n],
        upper_bound_duals: vec![0.0; n],
        kkt_residual: f64::INFINITY,
        iterations: 0,
        wall_time: wall,
    }
}
