//! DC models small enough to enumerate every vertex: the interior-point
//! optimum must match the best feasible vertex.

mod common;

use opfpwl::formulations::{build, BuildOptions, CostKind, PowerFlowKind};
use opfpwl::ipm::{solve, SolverOptions};
use opfpwl::modelir::{ModelIR, SolveStatus};

use common::{load, vertex_enumeration_min, PWL_CASES};

pub const MAX_VARS: usize = 12;

fn small_dc_models() -> Vec<(String, ModelIR)> {
    let mut out = Vec::new();
    for name in PWL_CASES {
        let net = load(name);
        for cost in CostKind::PWL {
            let opf = build(&net, PowerFlowKind::Dc, cost, &BuildOptions::default()).unwrap();
            if opf.model.n_vars() <= MAX_VARS {
                out.push((format!("{name}/{}", cost.name()), opf.model));
            }
        }
    }
    out
}

#[test]
fn interior_point_matches_vertex_enumeration() {
    let models = small_dc_models();
    assert!(models.len() >= 6, "only {} small DC builds", models.len());
    let opts = SolverOptions { tol: 1e-10, ..SolverOptions::default() };
    for (label, m) in &models {
        let oracle = vertex_enumeration_min(m).expect("feasible polytope");
        let (res, _) = solve(m, &opts);
        assert_eq!(res.status, SolveStatus::Optimal, "{label}");
        assert!((res.objective - oracle).abs() <= 1e-8, "{label}: {} vs {oracle}", res.objective);
    }
}

#[test]
fn enumeration_on_a_textbook_lp() {
    // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6, x, y >= 0  ->  (1.6, 1.2)
    let mut m = ModelIR::new();
    let x = m.add_variable("x", 0.0, f64::INFINITY, 0.0);
    let y = m.add_variable("y", 0.0, f64::INFINITY, 0.0);
    use opfpwl::modelir::Block;
    m.add_block("a", Block::Linear { terms: vec![(x, 1.0), (y, 2.0)], lower: f64::NEG_INFINITY, upper: 4.0 });
    m.add_block("b", Block::Linear { terms: vec![(x, 3.0), (y, 1.0)], lower: f64::NEG_INFINITY, upper: 6.0 });
    m.objective.add_term(x, -1.0);
    m.objective.add_term(y, -1.0);
    let v = vertex_enumeration_min(&m).unwrap();
    assert!((v + 2.8).abs() < 1e-12);
}
