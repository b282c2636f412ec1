//! Optimal power flow models: {AC, SOC, DC} power flow crossed with the
//! Ψ, λ, Δ, Φ piecewise-linear cost encodings (and a polynomial baseline).
//!
//! All builds share the per-unit network data and produce a [`ModelIR`]
//! with a linear objective. Flow variables exist for both orientations of
//! every branch, each with its own Ohm's-law rows and thermal limit.
//!
//! ```
//! use opfpwl::formulations::{build, BuildOptions, CostKind, PowerFlowKind};
//! use opfpwl::netdata::parse_case;
//!
//! let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/data/case3_pwl.m")).unwrap();
//! let net = parse_case(&text).unwrap();
//! let opf = build(&net, PowerFlowKind::Dc, CostKind::Lambda, &BuildOptions::default()).unwrap();
//! assert_eq!(opf.layout.va.len(), 3);
//! ```

mod costs;
mod power_flow;
mod recover;

use log::info;
use thiserror::Error;

use crate::modelir::ModelIR;
use crate::netdata::{validate_network, NetError, Network};
use crate::pwlcost::{preprocess, CostSpec, PwlCurve, PwlError, Violation, DEFAULT_SLOPE_TOL};

pub use costs::{attach_cost_delta, attach_cost_lambda, attach_cost_phi, attach_cost_polynomial, attach_cost_psi, PolyGen, PwlGen};
pub use power_flow::build_power_flow;
pub use recover::{recover_solution, BusVoltages, OpfSolution, RecoveryError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PowerFlowKind {
    Ac,
    Soc,
    Dc,
}

impl PowerFlowKind {
    pub const ALL: [PowerFlowKind; 3] = [PowerFlowKind::Ac, PowerFlowKind::Soc, PowerFlowKind::Dc];

    pub fn name(self) -> &'static str {
        match self {
            PowerFlowKind::Ac => "ac",
            PowerFlowKind::Soc => "soc",
            PowerFlowKind::Dc => "dc",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name().eq_ignore_ascii_case(s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum CostKind {
    Psi,
    Lambda,
    Delta,
    Phi,
    Polynomial,
}

impl CostKind {
    /// The piecewise-linear encodings in declaration order.
    pub const PWL: [CostKind; 4] = [CostKind::Psi, CostKind::Lambda, CostKind::Delta, CostKind::Phi];

    pub fn name(self) -> &'static str {
        match self {
            CostKind::Psi => "psi",
            CostKind::Lambda => "lambda",
            CostKind::Delta => "delta",
            CostKind::Phi => "phi",
            CostKind::Polynomial => "poly",
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CostKind::Psi => "Ψ",
            CostKind::Lambda => "λ",
            CostKind::Delta => "Δ",
            CostKind::Phi => "Φ",
            CostKind::Polynomial => "poly",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        [CostKind::Psi, CostKind::Lambda, CostKind::Delta, CostKind::Phi, CostKind::Polynomial]
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
    }

    pub fn is_piecewise(self) -> bool {
        self != CostKind::Polynomial
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("network failed validation: {}", .0.join("; "))]
    InvalidNetwork(Vec<String>),
    #[error(transparent)]
    Network(#[from] NetError),
    #[error("generator {generator}: cost curve is not validated")]
    UnvalidatedCurve { generator: usize },
    #[error("generator {generator}: cost curve violates assumptions {violations:?}")]
    Assumptions { generator: usize, violations: Vec<Violation> },
    #[error("generator {generator}: {source}")]
    Curve { generator: usize, source: PwlError },
    #[error("generator {generator}: {expected} cost required by this encoding")]
    CostModelMismatch { generator: usize, expected: &'static str },
    #[error("generator {generator}: polynomial cost is not convex (c = {c})")]
    NonConvexCost { generator: usize, c: f64 },
    #[error("variable index {0} is out of range")]
    BadVariable(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    /// Require curves that already satisfy every assumption instead of
    /// preprocessing them.
    pub strict: bool,
    pub slope_tol: f64,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions { strict: false, slope_tol: DEFAULT_SLOPE_TOL }
    }
}

/// Variable indices of a power-flow model. Vectors that do not apply to
/// the power-flow kind are empty.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Layout {
    /// Active dispatch per generator.
    pub pg: Vec<usize>,
    /// Reactive dispatch per generator (AC, SOC).
    pub qg: Vec<usize>,
    /// Voltage magnitude per bus (AC).
    pub vm: Vec<usize>,
    /// Voltage angle per bus (AC, DC).
    pub va: Vec<usize>,
    /// Squared magnitude per bus (SOC).
    pub wii: Vec<usize>,
    /// Real and imaginary part of `V_from V_to^*` per branch (SOC).
    pub wr: Vec<usize>,
    pub wi: Vec<usize>,
    /// Flows per branch in the from→to and to→from orientations.
    pub p_from: Vec<usize>,
    pub p_to: Vec<usize>,
    /// Reactive flows (AC, SOC).
    pub q_from: Vec<usize>,
    pub q_to: Vec<usize>,
    /// Cost auxiliaries per generator, in encoding order.
    pub cost_aux: Vec<Vec<usize>>,
}

/// A built formulation: the model, where its variables live, and the cost
/// data the objective was built from.
#[derive(Debug, Clone)]
pub struct OpfModel {
    pub model: ModelIR,
    pub layout: Layout,
    pub power_flow: PowerFlowKind,
    pub cost: CostKind,
    /// Cost per generator after preprocessing.
    pub costs: Vec<CostSpec>,
    /// Notes on conventions applied while building.
    pub notes: Vec<String>,
}

/// Builds the full formulation for one power-flow kind and cost encoding.
///
/// Piecewise curves are preprocessed against each generator's bounds unless
/// `opts.strict` is set, in which case they must already satisfy every
/// assumption.
pub fn build(net: &Network, pf: PowerFlowKind, cost: CostKind, opts: &BuildOptions) -> Result<OpfModel, BuildError> {
    let errors: Vec<String> = validate_network(net)
        .into_iter()
        .filter(|f| f.is_error())
        .map(|f| f.to_string())
        .collect();
    if !errors.is_empty() {
        return Err(BuildError::InvalidNetwork(errors));
    }
    let (mut model, mut layout) = build_power_flow(net, pf)?;
    let mut notes = Vec::new();
    let mut costs = Vec::with_capacity(net.generators.len());

    if cost.is_piecewise() {
        let mut curves: Vec<PwlCurve> = Vec::with_capacity(net.generators.len());
        for (k, g) in net.generators.iter().enumerate() {
            let CostSpec::Piecewise(raw) = &g.cost else {
                return Err(BuildError::CostModelMismatch { generator: k, expected: "piecewise-linear" });
            };
            let curve = if opts.strict {
                raw.clone()
                    .validate(g.pmin, g.pmax)
                    .map_err(|violations| BuildError::Assumptions { generator: k, violations })?
            } else {
                preprocess(raw, g.pmin, g.pmax, opts.slope_tol).map_err(|source| BuildError::Curve { generator: k, source })?
            };
            if cost == CostKind::Phi && curve.len() == 2 {
                let note = format!("generator {k}: two-point curve, Φ encoding reduces to a linear cost");
                info!("{note}");
                notes.push(note);
            }
            curves.push(curve);
        }
        let gens: Vec<PwlGen> = curves.iter().enumerate().map(|(k, c)| PwlGen { pg: layout.pg[k], curve: c }).collect();
        layout.cost_aux = match cost {
            CostKind::Psi => attach_cost_psi(&mut model, &gens)?,
            CostKind::Lambda => attach_cost_lambda(&mut model, &gens)?,
            CostKind::Delta => attach_cost_delta(&mut model, &gens)?,
            CostKind::Phi => attach_cost_phi(&mut model, &gens)?,
            CostKind::Polynomial => unreachable!(),
        };
        costs.extend(curves.into_iter().map(CostSpec::Piecewise));
    } else {
        let mut gens = Vec::with_capacity(net.generators.len());
        for (k, g) in net.generators.iter().enumerate() {
            let CostSpec::Polynomial { a, b, c } = g.cost else {
                return Err(BuildError::CostModelMismatch { generator: k, expected: "polynomial" });
            };
            gens.push(PolyGen { pg: layout.pg[k], a, b, c });
            costs.push(g.cost.clone());
        }
        layout.cost_aux = attach_cost_polynomial(&mut model, &gens)?;
    }
    Ok(OpfModel { model, layout, power_flow: pf, cost, costs, notes })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_round_trip() {
        for k in PowerFlowKind::ALL {
            assert_eq!(PowerFlowKind::parse(k.name()), Some(k));
        }
        for k in CostKind::PWL.into_iter().chain([CostKind::Polynomial]) {
            assert_eq!(CostKind::parse(k.name()), Some(k));
        }
        assert_eq!(CostKind::parse("PSI"), Some(CostKind::Psi));
        assert_eq!(PowerFlowKind::parse("xx"), None);
    }
}
