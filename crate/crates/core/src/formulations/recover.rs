use thiserror::Error;

use super::{OpfModel, PowerFlowKind};
use crate::modelir::{SolveResult, SolveStatus};
use crate::netdata::ComplexPU;
use crate::pwlcost::CostSpec;

/// Relative agreement required between the solver objective and the cost
/// recomputed from dispatch alone.
pub const RECOVERY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("solve did not reach optimality ({0})")]
    NotOptimal(&'static str),
    #[error("primal vector has {got} entries, model has {expected}")]
    Dimension { expected: usize, got: usize },
    #[error("generator {generator}: dispatch {dispatch} outside its cost curve")]
    Dispatch { generator: usize, dispatch: f64 },
    #[error("recomputed cost {recomputed} differs from solver objective {objective}")]
    Mismatch { objective: f64, recomputed: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum BusVoltages {
    /// Magnitude and angle (AC).
    Polar { vm: Vec<f64>, va: Vec<f64> },
    /// Squared magnitudes `W_ii` (SOC).
    Lifted { wii: Vec<f64> },
    /// Angles at unit magnitude (DC).
    Angles { va: Vec<f64> },
}

/// Physical solution of one formulation.
#[derive(Debug, Clone, PartialEq)]
pub struct OpfSolution {
    /// `S^g` per generator; reactive parts are zero in DC.
    pub dispatch: Vec<ComplexPU>,
    pub voltages: BusVoltages,
    /// `(S_from→to, S_to→from)` per branch.
    pub flows: Vec<(ComplexPU, ComplexPU)>,
    /// Solver objective in $/h.
    pub objective: f64,
    /// Cost per generator recomputed from its dispatch.
    pub generator_costs: Vec<f64>,
}

impl OpfSolution {
    pub fn total_cost(&self) -> f64 {
        self.generator_costs.iter().sum()
    }
}

/// Extracts the physical solution and checks that the objective equals the
/// cost of the dispatch, evaluated on each generator's (preprocessed) cost.
pub fn recover_solution(opf: &OpfModel, result: &SolveResult) -> Result<OpfSolution, RecoveryError> {
    if result.status != SolveStatus::Optimal {
        return Err(RecoveryError::NotOptimal(result.status.as_str()));
    }
    let x = &result.primal;
    if x.len() != opf.model.n_vars() {
        return Err(RecoveryError::Dimension { expected: opf.model.n_vars(), got: x.len() });
    }
    let lay = &opf.layout;
    let get = |idx: &[usize]| -> Vec<f64> { idx.iter().map(|&i| x[i]).collect() };
    let q_or_zero = |idx: &[usize], k: usize| idx.get(k).map_or(0.0, |&i| x[i]);

    let dispatch: Vec<ComplexPU> =
        lay.pg.iter().enumerate().map(|(k, &i)| ComplexPU::new(x[i], q_or_zero(&lay.qg, k))).collect();
    let voltages = match opf.power_flow {
        PowerFlowKind::Ac => BusVoltages::Polar { vm: get(&lay.vm), va: get(&lay.va) },
        PowerFlowKind::Soc => BusVoltages::Lifted { wii: get(&lay.wii) },
        PowerFlowKind::Dc => BusVoltages::Angles { va: get(&lay.va) },
    };
    let flows = (0..lay.p_from.len())
        .map(|e| {
            (
                ComplexPU::new(x[lay.p_from[e]], q_or_zero(&lay.q_from, e)),
                ComplexPU::new(x[lay.p_to[e]], q_or_zero(&lay.q_to, e)),
            )
        })
        .collect();

    let mut generator_costs = Vec::with_capacity(dispatch.len());
    for (k, (s, cost)) in dispatch.iter().zip(&opf.costs).enumerate() {
        let p = match cost {
            CostSpec::Piecewise(curve) => {
                // iterates sit strictly inside bounds; allow rounding at the ends
                let (lo, hi) = curve.domain();
                let slack = 1e-9 * (1.0 + hi.abs().max(lo.abs()));
                if s.re < lo - slack || s.re > hi + slack {
                    return Err(RecoveryError::Dispatch { generator: k, dispatch: s.re });
                }
                s.re.clamp(lo, hi)
            }
            CostSpec::Polynomial { .. } => s.re,
        };
        let c = cost.evaluate(p).map_err(|_| RecoveryError::Dispatch { generator: k, dispatch: s.re })?;
        generator_costs.push(c);
    }
    let recomputed: f64 = generator_costs.iter().sum();
    if (recomputed - result.objective).abs() > RECOVERY_TOL * result.objective.abs().max(1.0) {
        return Err(RecoveryError::Mismatch { objective: result.objective, recomputed });
    }
    Ok(OpfSolution { dispatch, voltages, flows, objective: result.objective, generator_costs })
}
