//! Prints the solver's per-iteration log as CSV.
//!
//! ```text
//! cargo run --release --example iteration_log -- data/case5_pjm.m ac psi
//! ```

use opfpwl::formulations::{build, BuildOptions, CostKind, PowerFlowKind};
use opfpwl::ipm::{solve, SolverOptions};
use opfpwl::netdata::parse_case;

fn main() -> anyhow::Result<()> {
    env_logger::init();
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args
        .first()
        .cloned()
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case5_pjm.m").into());
    let pf = args.get(1).and_then(|s| PowerFlowKind::parse(s)).unwrap_or(PowerFlowKind::Ac);
    let cost = args.get(2).and_then(|s| CostKind::parse(s)).unwrap_or(CostKind::Psi);

    let net = parse_case(&std::fs::read_to_string(&path)?)?;
    let opf = build(&net, pf, cost, &BuildOptions::default())?;
    let (res, log) = solve(&opf.model, &SolverOptions::default());
    print!("{}", log.to_csv());
    eprintln!(
        "{} {}/{}: {} after {} iterations, objective {:.6}, {} inertia corrections",
        net.name,
        pf.name(),
        cost.name(),
        res.status.as_str(),
        res.iterations,
        res.objective,
        log.total_inertia_corrections()
    );
    Ok(())
}
