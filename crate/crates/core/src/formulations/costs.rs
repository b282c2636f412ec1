//! The four piecewise-linear cost encodings and the polynomial lowering.
//!
//! Each `attach_cost_*` adds auxiliary variables and rows for every
//! generator, adds the generator's cost to the objective, and returns the
//! auxiliary indices per generator. Auxiliaries start at the values the
//! encoding takes at the dispatch variable's initial value.

use super::BuildError;
use crate::modelir::{Block, ModelIR};
use crate::pwlcost::{evaluate, PwlCurve};

const INF: f64 = f64::INFINITY;

/// A generator's dispatch variable and validated curve.
#[derive(Debug, Clone, Copy)]
pub struct PwlGen<'a> {
    pub pg: usize,
    pub curve: &'a PwlCurve,
}

/// A generator's dispatch variable and `c p² + b p + a` coefficients.
#[derive(Debug, Clone, Copy)]
pub struct PolyGen {
    pub pg: usize,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

fn checked<'a>(m: &ModelIR, gens: &[PwlGen<'a>]) -> Result<Vec<f64>, BuildError> {
    gens.iter()
        .enumerate()
        .map(|(k, g)| {
            if !g.curve.is_validated() {
                return Err(BuildError::UnvalidatedCurve { generator: k });
            }
            let var = m.variables.get(g.pg).ok_or(BuildError::BadVariable(g.pg))?;
            let (lo, hi) = g.curve.domain();
            Ok(var.initial.clamp(lo, hi))
        })
        .collect()
}

/// Ψ: epigraph variable `c ≥ slope_l p + intercept_l` for every segment.
pub fn attach_cost_psi(m: &mut ModelIR, gens: &[PwlGen]) -> Result<Vec<Vec<usize>>, BuildError> {
    let start = checked(m, gens)?;
    let mut aux = Vec::with_capacity(gens.len());
    for (k, g) in gens.iter().enumerate() {
        let c0 = evaluate(g.curve, start[k]).map_err(|source| BuildError::Curve { generator: k, source })?;
        let cg = m.add_variable(format!("cg[{k}]"), g.curve.min_cost(), g.curve.max_cost(), c0);
        for (l, (&slope, &icpt)) in g.curve.slopes().iter().zip(g.curve.intercepts()).enumerate() {
            m.add_block(
                format!("epigraph[{k},{l}]"),
                Block::Linear { terms: vec![(cg, 1.0), (g.pg, -slope)], lower: icpt, upper: INF },
            );
        }
        m.objective.add_term(cg, 1.0);
        aux.push(vec![cg]);
    }
    Ok(aux)
}

/// λ: convex-combination weights over the breakpoints.
pub fn attach_cost_lambda(m: &mut ModelIR, gens: &[PwlGen]) -> Result<Vec<Vec<usize>>, BuildError> {
    let start = checked(m, gens)?;
    let mut aux = Vec::with_capacity(gens.len());
    for (k, g) in gens.iter().enumerate() {
        let w0 = g.curve.lambda_weights(start[k]).map_err(|source| BuildError::Curve { generator: k, source })?;
        let vars: Vec<usize> = (0..g.curve.len())
            .map(|l| m.add_variable(format!("lambda[{k},{l}]"), 0.0, 1.0, w0[l]))
            .collect();
        let mut link: Vec<(usize, f64)> = vars.iter().zip(g.curve.points()).map(|(&v, &(p, _))| (v, p)).collect();
        link.push((g.pg, -1.0));
        m.add_block(format!("lambda_dispatch[{k}]"), Block::Linear { terms: link, lower: 0.0, upper: 0.0 });
        m.add_block(
            format!("lambda_sum[{k}]"),
            Block::Linear { terms: vars.iter().map(|&v| (v, 1.0)).collect(), lower: 1.0, upper: 1.0 },
        );
        for (&v, &(_, c)) in vars.iter().zip(g.curve.points()) {
            m.objective.add_term(v, c);
        }
        aux.push(vars);
    }
    Ok(aux)
}

/// Δ: one bin per segment filled in order, `p = p_1 + Σ Δ_l`.
pub fn attach_cost_delta(m: &mut ModelIR, gens: &[PwlGen]) -> Result<Vec<Vec<usize>>, BuildError> {
    let start = checked(m, gens)?;
    let mut aux = Vec::with_capacity(gens.len());
    for (k, g) in gens.iter().enumerate() {
        let b0 = g.curve.delta_bins(start[k]).map_err(|source| BuildError::Curve { generator: k, source })?;
        let pts = g.curve.points();
        let vars: Vec<usize> = pts
            .windows(2)
            .enumerate()
            .map(|(l, w)| m.add_variable(format!("delta[{k},{l}]"), 0.0, w[1].0 - w[0].0, b0[l]))
            .collect();
        let mut link: Vec<(usize, f64)> = vec![(g.pg, 1.0)];
        link.extend(vars.iter().map(|&v| (v, -1.0)));
        m.add_block(format!("delta_dispatch[{k}]"), Block::Linear { terms: link, lower: pts[0].0, upper: pts[0].0 });
        m.objective.offset += pts[0].1;
        for (&v, &slope) in vars.iter().zip(g.curve.slopes()) {
            m.objective.add_term(v, slope);
        }
        aux.push(vars);
    }
    Ok(aux)
}

/// Φ: excess over each interior breakpoint, `Φ_l ≥ p − p_l`, priced at the
/// slope increase there on top of the first segment's line.
pub fn attach_cost_phi(m: &mut ModelIR, gens: &[PwlGen]) -> Result<Vec<Vec<usize>>, BuildError> {
    let start = checked(m, gens)?;
    let mut aux = Vec::with_capacity(gens.len());
    for (k, g) in gens.iter().enumerate() {
        let e0 = g.curve.phi_excess(start[k]).map_err(|source| BuildError::Curve { generator: k, source })?;
        let pmax = m.variables[g.pg].upper;
        let pts = g.curve.points();
        let slopes = g.curve.slopes();
        m.objective.add_term(g.pg, slopes[0]);
        m.objective.offset += g.curve.intercepts()[0];
        let mut vars = Vec::with_capacity(pts.len().saturating_sub(2));
        for l in 1..pts.len() - 1 {
            let pl = pts[l].0;
            let v = m.add_variable(format!("phi[{k},{l}]"), 0.0, pmax - pl, e0[l - 1]);
            m.add_block(
                format!("excess[{k},{l}]"),
                Block::Linear { terms: vec![(v, 1.0), (g.pg, -1.0)], lower: -pl, upper: INF },
            );
            m.objective.add_term(v, slopes[l] - slopes[l - 1]);
            vars.push(v);
        }
        aux.push(vars);
    }
    Ok(aux)
}

/// Polynomial costs: linear costs go straight into the objective; convex
/// quadratics get an epigraph variable `c ≥ c₂ p² + b p + a`.
pub fn attach_cost_polynomial(m: &mut ModelIR, gens: &[PolyGen]) -> Result<Vec<Vec<usize>>, BuildError> {
    let mut aux = Vec::with_capacity(gens.len());
    for (k, g) in gens.iter().enumerate() {
        if g.c < 0.0 || !g.c.is_finite() {
            return Err(BuildError::NonConvexCost { generator: k, c: g.c });
        }
        let var = m.variables.get(g.pg).ok_or(BuildError::BadVariable(g.pg))?;
        if g.c == 0.0 {
            m.objective.add_term(g.pg, g.b);
            m.objective.offset += g.a;
            aux.push(Vec::new());
            continue;
        }
        let p0 = var.initial;
        let cg = m.add_variable(format!("cg[{k}]"), -INF, INF, g.c * p0 * p0 + g.b * p0 + g.a);
        m.add_block(
            format!("quadratic_cost[{k}]"),
            Block::Quadratic {
                quadratic: vec![(g.pg, g.pg, g.c)],
                linear: vec![(g.pg, g.b), (cg, -1.0)],
                lower: -INF,
                upper: -g.a,
            },
        );
        m.objective.add_term(cg, 1.0);
        aux.push(vec![cg]);
    }
    Ok(aux)
}
