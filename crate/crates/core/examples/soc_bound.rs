//! Compares the SOC relaxation with the AC model on every bundled case.
//! The SOC objective is a lower bound on the AC objective; the gap shows
//! how tight the relaxation is.
//!
//! ```text
//! cargo run --release --example soc_bound
//! ```

use opfpwl::formulations::{build, BuildOptions, CostKind, PowerFlowKind};
use opfpwl::ipm::{solve, SolverOptions};
use opfpwl::modelir::SolveStatus;
use opfpwl::netdata::parse_case;

fn main() -> anyhow::Result<()> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/data");
    let mut paths: Vec<_> = glob::glob(&format!("{dir}/*.m"))?.collect::<Result<_, _>>()?;
    paths.sort();
    println!("{:<14} {:>14} {:>14} {:>9}", "case", "AC", "SOC", "gap %");
    for path in paths {
        let net = parse_case(&std::fs::read_to_string(&path)?)?;
        let objective = |pf| -> anyhow::Result<Option<f64>> {
            let opf = match build(&net, pf, CostKind::Lambda, &BuildOptions::default()) {
                Ok(opf) => opf,
                Err(_) => return Ok(None),
            };
            let (res, _) = solve(&opf.model, &SolverOptions::default());
            Ok((res.status == SolveStatus::Optimal).then_some(res.objective))
        };
        match (objective(PowerFlowKind::Ac)?, objective(PowerFlowKind::Soc)?) {
            (Some(ac), Some(soc)) => {
                println!("{:<14} {ac:>14.4} {soc:>14.4} {:>9.4}", net.name, 100.0 * (ac - soc) / ac.abs());
            }
            _ => println!("{:<14} skipped (no piecewise costs or no optimum)", net.name),
        }
    }
    Ok(())
}
