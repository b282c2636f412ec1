//! Structured optimization models: bounded variables, constraint blocks from
//! a closed set of kinds, and a linear objective.
//!
//! Every block evaluates its rows, Jacobian and Lagrangian Hessian
//! analytically, with sparsity patterns fixed at construction. Row values
//! `g(x)` must lie in per-row ranges `[lower, upper]`; equal bounds make a
//! row an equality.

mod block;
mod dump;

use std::collections::BTreeMap;
use std::time::Duration;

use thiserror::Error;

pub use block::{AcFlowPolar, Block, BlockKind};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("block `{block}` references variable {index} but the model has {n_vars}")]
    IndexOutOfRange { block: String, index: usize, n_vars: usize },
    #[error("variable `{name}` has empty bounds [{lower}, {upper}]")]
    EmptyBounds { name: String, lower: f64, upper: f64 },
    #[error("block `{block}` has empty row range")]
    EmptyRange { block: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Variable {
    pub name: String,
    pub lower: f64,
    pub upper: f64,
    pub initial: f64,
}

impl Variable {
    /// Creates a variable; `initial` is clamped into the bounds.
    pub fn new(name: impl Into<String>, lower: f64, upper: f64, initial: f64) -> Self {
        let initial = if lower <= upper { initial.clamp(lower, upper) } else { initial };
        Variable {
            name: name.into(),
            lower,
            upper,
            initial,
        }
    }

    pub fn is_fixed(&self) -> bool {
        self.lower == self.upper
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintBlock {
    pub label: String,
    pub body: Block,
}

impl ConstraintBlock {
    pub fn kind(&self) -> BlockKind {
        self.body.kind()
    }
}

/// Linear objective `Σ c_j x_j + offset`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Objective {
    coeffs: BTreeMap<usize, f64>,
    pub offset: f64,
}

impl Objective {
    pub fn add_term(&mut self, index: usize, coeff: f64) {
        *self.coeffs.entry(index).or_insert(0.0) += coeff;
    }

    /// Terms in increasing variable order.
    pub fn terms(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coeffs.iter().map(|(&j, &c)| (j, c))
    }

    pub fn gradient(&self, n: usize) -> Vec<f64> {
        let mut g = vec![0.0; n];
        for (j, c) in self.terms() {
            g[j] += c;
        }
        g
    }
}

/// Sparse matrix as coordinate triplets; duplicates are summed. A
/// `lower_symmetric` matrix stores only entries with `row >= col`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub entries: Vec<(usize, usize, f64)>,
    pub lower_symmetric: bool,
}

impl SparseMatrix {
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.ncols]; self.nrows];
        for &(i, j, v) in &self.entries {
            d[i][j] += v;
            if self.lower_symmetric && i != j {
                d[j][i] += v;
            }
        }
        d
    }

    pub fn pattern(&self) -> Vec<(usize, usize)> {
        self.entries.iter().map(|&(i, j, _)| (i, j)).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
    NumericalError,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SolveStatus::Optimal => "optimal",
            SolveStatus::Infeasible => "infeasible",
            SolveStatus::IterationLimit => "iteration-limit",
            SolveStatus::NumericalError => "numerical-error",
        }
    }
}

/// Solver output in model units.
///
/// Sign conventions: the Lagrangian is
/// `f(x) + Σ y_r g_r(x) - Σ zl_j (x_j - l_j) - Σ zu_j (u_j - x_j)`.
/// A row dual is negative when the row sits at its lower range bound and
/// positive at its upper bound.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub status: SolveStatus,
    pub objective: f64,
    pub primal: Vec<f64>,
    pub constraint_duals: Vec<f64>,
    pub lower_bound_duals: Vec<f64>,
    pub upper_bound_duals: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
    pub wall_time: Duration,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelIR {
    pub variables: Vec<Variable>,
    pub blocks: Vec<ConstraintBlock>,
    pub objective: Objective,
}

impl ModelIR {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_variable(&mut self, name: impl Into<String>, lower: f64, upper: f64, initial: f64) -> usize {
        self.variables.push(Variable::new(name, lower, upper, initial));
        self.variables.len() - 1
    }

    pub fn add_block(&mut self, label: impl Into<String>, body: Block) -> usize {
        self.blocks.push(ConstraintBlock { label: label.into(), body });
        self.blocks.len() - 1
    }

    pub fn n_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn n_rows(&self) -> usize {
        self.blocks.iter().map(|b| b.body.n_rows()).sum()
    }

    pub fn count_blocks(&self, kind: BlockKind) -> usize {
        self.blocks.iter().filter(|b| b.kind() == kind).count()
    }

    /// First row of each block, plus the total row count at the end.
    pub fn row_offsets(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.blocks.len() + 1);
        let mut r = 0;
        for b in &self.blocks {
            out.push(r);
            r += b.body.n_rows();
        }
        out.push(r);
        out
    }

    pub fn row_bounds(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::with_capacity(self.n_rows());
        for b in &self.blocks {
            b.body.row_bounds(&mut out);
        }
        out
    }

    pub fn initial_point(&self) -> Vec<f64> {
        self.variables.iter().map(|v| v.initial).collect()
    }

    /// Checks index ranges and bound consistency.
    pub fn validate(&self) -> Result<(), ModelError> {
        let n = self.n_vars();
        for v in &self.variables {
            if !(v.lower <= v.upper) || v.lower == f64::INFINITY || v.upper == f64::NEG_INFINITY {
                return Err(ModelError::EmptyBounds {
                    name: v.name.clone(),
                    lower: v.lower,
                    upper: v.upper,
                });
            }
        }
        let mut bounds = Vec::new();
        for b in &self.blocks {
            if let Some(&index) = b.body.variables().iter().find(|&&j| j >= n) {
                return Err(ModelError::IndexOutOfRange {
                    block: b.label.clone(),
                    index,
                    n_vars: n,
                });
            }
            bounds.clear();
            b.body.row_bounds(&mut bounds);
            if bounds.iter().any(|&(lo, hi)| !(lo <= hi)) {
                return Err(ModelError::EmptyRange { block: b.label.clone() });
            }
        }
        if let Some((index, _)) = self.objective.terms().find(|&(j, _)| j >= n) {
            return Err(ModelError::IndexOutOfRange {
                block: "objective".into(),
                index,
                n_vars: n,
            });
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), ModelError> {
        if x.len() != self.n_vars() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_vars(),
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn eval_objective(&self, x: &[f64]) -> Result<f64, ModelError> {
        self.check_dim(x)?;
        let dot: f64 = self.objective.terms().map(|(j, c)| c * x[j]).sum();
        Ok(dot + self.objective.offset)
    }

    /// Row values `g(x)` in block order.
    pub fn eval_rows(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        self.check_dim(x)?;
        let mut out = vec![0.0; self.n_rows()];
        self.eval_rows_into(x, &mut out);
        Ok(out)
    }

    pub(crate) fn eval_rows_into(&self, x: &[f64], out: &mut [f64]) {
        let mut r = 0;
        for b in &self.blocks {
            let n = b.body.n_rows();
            b.body.eval(x, &mut out[r..r + n]);
            r += n;
        }
    }

    /// Residuals per row: `g(x) - rhs` for equalities and the signed
    /// distance outside `[lower, upper]` (zero inside) for ranged rows.
    pub fn eval_residuals(&self, x: &[f64]) -> Result<Vec<f64>, ModelError> {
        let rows = self.eval_rows(x)?;
        Ok(rows
            .iter()
            .zip(self.row_bounds())
            .map(|(&g, (lo, hi))| {
                if lo == hi || g < lo {
                    g - lo
                } else if g > hi {
                    g - hi
                } else {
                    0.0
                }
            })
            .collect())
    }

    /// Jacobian pattern as `(row, column)` in block order.
    pub fn jacobian_structure(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut local = Vec::new();
        let mut r = 0;
        for b in &self.blocks {
            local.clear();
            b.body.jacobian_pattern(&mut local);
            out.extend(local.iter().map(|&(lr, c)| (r + lr, c)));
            r += b.body.n_rows();
        }
        out
    }

    pub(crate) fn jacobian_values_into(&self, x: &[f64], out: &mut [f64]) {
        let mut k = 0;
        let mut local = Vec::new();
        for b in &self.blocks {
            local.clear();
            b.body.jacobian_pattern(&mut local);
            let n = local.len();
            b.body.jacobian_values(x, &mut out[k..k + n]);
            k += n;
        }
    }

    pub fn eval_jacobian(&self, x: &[f64]) -> Result<SparseMatrix, ModelError> {
        self.check_dim(x)?;
        let pattern = self.jacobian_structure();
        let mut vals = vec![0.0; pattern.len()];
        self.jacobian_values_into(x, &mut vals);
        Ok(SparseMatrix {
            nrows: self.n_rows(),
            ncols: self.n_vars(),
            entries: pattern.iter().zip(vals).map(|(&(i, j), v)| (i, j, v)).collect(),
            lower_symmetric: false,
        })
    }

    /// Lower-triangle Hessian pattern of the constraint part of the Lagrangian.
    pub fn hessian_structure(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for b in &self.blocks {
            b.body.hessian_pattern(&mut out);
        }
        out
    }

    pub(crate) fn hessian_values_into(&self, x: &[f64], duals: &[f64], out: &mut [f64]) {
        let mut k = 0;
        let mut r = 0;
        let mut local = Vec::new();
        for b in &self.blocks {
            local.clear();
            b.body.hessian_pattern(&mut local);
            let n = local.len();
            let rows = b.body.n_rows();
            if n > 0 {
                b.body.hessian_values(x, &duals[r..r + rows], &mut out[k..k + n]);
            }
            k += n;
            r += rows;
        }
    }

    /// Hessian of `obj_scale · f(x) + Σ y_r g_r(x)`. The objective is linear,
    /// so `obj_scale` only matters for API symmetry with nonlinear objectives.
    pub fn eval_lagrangian_hessian(&self, x: &[f64], duals: &[f64], obj_scale: f64) -> Result<SparseMatrix, ModelError> {
        let _ = obj_scale;
        self.check_dim(x)?;
        if duals.len() != self.n_rows() {
            return Err(ModelError::DimensionMismatch {
                expected: self.n_rows(),
                got: duals.len(),
            });
        }
        let pattern = self.hessian_structure();
        let mut vals = vec![0.0; pattern.len()];
        self.hessian_values_into(x, duals, &mut vals);
        Ok(SparseMatrix {
            nrows: self.n_vars(),
            ncols: self.n_vars(),
            entries: pattern.iter().zip(vals).map(|(&(i, j), v)| (i, j, v)).collect(),
            lower_symmetric: true,
        })
    }

    /// Text listing of variables, blocks and objective.
    pub fn dump(&self) -> String {
        dump::dump(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_equality_residual() {
        let mut m = ModelIR::new();
        let a = m.add_variable("a", 0.0, 1.0, 0.5);
        let b = m.add_variable("b", 0.0, 1.0, 0.5);
        m.add_block("sum", Block::Linear { terms: vec![(a, 1.0), (b, 1.0)], lower: 1.0, upper: 1.0 });
        assert_eq!(m.eval_residuals(&[0.5, 0.5]).unwrap(), vec![0.0]);
        assert_eq!(m.eval_residuals(&[0.5, 0.75]).unwrap(), vec![0.25]);
        assert_eq!(m.blocks[0].kind(), BlockKind::LinearEq);
    }

    #[test]
    fn cone_boundary_residual() {
        let mut m = ModelIR::new();
        let ids: Vec<usize> = (0..4).map(|i| m.add_variable(format!("w{i}"), -10.0, 10.0, 0.0)).collect();
        m.add_block("cone", Block::SocCone { wr: ids[0], wi: ids[1], wii: ids[2], wjj: ids[3] });
        assert_eq!(m.eval_rows(&[3.0, 4.0, 5.0, 5.0]).unwrap(), vec![0.0]);
        assert_eq!(m.eval_residuals(&[3.0, 4.0, 5.0, 5.0]).unwrap(), vec![0.0]);
        assert_eq!(m.eval_residuals(&[3.0, 4.0, 4.0, 5.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn polar_flow_on_lossless_line() {
        // series admittance 1/(j0.1) = -j10, so the mutual term is +j10
        let mut m = ModelIR::new();
        let v1 = m.add_variable("v1", 0.9, 1.1, 1.0);
        let v2 = m.add_variable("v2", 0.9, 1.1, 1.0);
        let t1 = m.add_variable("t1", -1.0, 1.0, 0.1);
        let t2 = m.add_variable("t2", -1.0, 1.0, 0.0);
        let p = m.add_variable("p", -10.0, 10.0, 0.0);
        let q = m.add_variable("q", -10.0, 10.0, 0.0);
        m.add_block(
            "ohm",
            Block::AcFlow(AcFlowPolar {
                vm_a: v1,
                vm_b: v2,
                va_a: t1,
                va_b: t2,
                p,
                q,
                g_own: 0.0,
                b_own: -10.0,
                g_mut: 0.0,
                b_mut: 10.0,
            }),
        );
        let r = m.eval_residuals(&[1.0, 1.0, 0.1, 0.0, 0.0, 0.0]).unwrap();
        assert!((r[0] - 10.0 * 0.1f64.sin()).abs() < 1e-12);
        assert!((r[0] - 0.9983).abs() < 1e-4);
        let r = m.eval_residuals(&[1.0, 1.0, 0.1, 0.0, 10.0 * 0.1f64.sin(), 10.0 - 10.0 * 0.1f64.cos()]).unwrap();
        assert!(r.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn linear_model_has_zero_hessian() {
        let mut m = ModelIR::new();
        let a = m.add_variable("a", 0.0, 1.0, 0.5);
        m.add_block("le", Block::Linear { terms: vec![(a, 2.0)], lower: f64::NEG_INFINITY, upper: 1.0 });
        let h = m.eval_lagrangian_hessian(&[0.3], &[5.0], 1.0).unwrap();
        assert!(h.entries.iter().all(|e| e.2 == 0.0));
    }

    #[test]
    fn cone_hessian_structure() {
        let mut m = ModelIR::new();
        for i in 0..4 {
            m.add_variable(format!("w{i}"), -1.0, 1.0, 0.0);
        }
        m.add_block("cone", Block::SocCone { wr: 0, wi: 1, wii: 2, wjj: 3 });
        let h = m.eval_lagrangian_hessian(&[0.1, 0.2, 0.9, 0.8], &[1.0], 1.0).unwrap().to_dense();
        assert_eq!(h[0], vec![2.0, 0.0, 0.0, 0.0]);
        assert_eq!(h[1], vec![0.0, 2.0, 0.0, 0.0]);
        assert_eq!(h[2], vec![0.0, 0.0, 0.0, -1.0]);
        assert_eq!(h[3], vec![0.0, 0.0, -1.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let mut m = ModelIR::new();
        m.add_variable("a", 0.0, 1.0, 0.0);
        assert_eq!(
            m.eval_rows(&[1.0, 2.0]),
            Err(ModelError::DimensionMismatch { expected: 1, got: 2 })
        );
    }

    #[test]
    fn initial_values_are_clamped() {
        let v = Variable::new("x", 0.0, 1.0, 3.0);
        assert_eq!(v.initial, 1.0);
    }
}
