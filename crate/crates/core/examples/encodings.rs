//! Solves one case under every power-flow model and piecewise-linear cost
//! encoding and prints objective, iterations and solve time.
//!
//! ```text
//! cargo run --release --example encodings -- data/case5_pjm.m
//! ```

use opfpwl::formulations::{build, recover_solution, BuildOptions, CostKind, PowerFlowKind};
use opfpwl::ipm::{solve, SolverOptions};
use opfpwl::netdata::parse_case;

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case5_pjm.m").into());
    let net = parse_case(&std::fs::read_to_string(&path)?)?;
    println!("{}: {} buses, {} branches, {} generators", net.name, net.buses.len(), net.branches.len(), net.generators.len());
    println!("{:<4} {:<7} {:>8} {:>8} {:>16} {:>6} {:>10}", "pf", "cost", "vars", "rows", "objective", "iters", "time");
    for pf in PowerFlowKind::ALL {
        for cost in CostKind::PWL {
            let opf = build(&net, pf, cost, &BuildOptions::default())?;
            let (res, _) = solve(&opf.model, &SolverOptions::default());
            let check = match recover_solution(&opf, &res) {
                Ok(_) => String::new(),
                Err(e) => format!("  ({e})"),
            };
            println!(
                "{:<4} {:<7} {:>8} {:>8} {:>16.6} {:>6} {:>9.1?}{}",
                pf.name(),
                cost.name(),
                opf.model.n_vars(),
                opf.model.n_rows(),
                res.objective,
                res.iterations,
                res.wall_time,
                check
            );
        }
    }
    Ok(())
}
