//! Recomputes the KKT residuals of a solution from model evaluations alone,
//! independently of the solver's own bookkeeping.
//!
//! ```text
//! cargo run --release --example kkt_audit -- data/case14_syn.m soc phi
//! ```

use anyhow::Context;

use opfpwl::formulations::{build, BuildOptions, CostKind, PowerFlowKind};
use opfpwl::ipm::{kkt_check, solve, SolverOptions};
use opfpwl::netdata::parse_case;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let path = args.first().cloned().unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case5_pjm.m").into());
    let pf = PowerFlowKind::parse(args.get(1).map_or("ac", String::as_str)).context("power flow: ac, soc or dc")?;
    let cost = CostKind::parse(args.get(2).map_or("lambda", String::as_str)).context("unknown cost encoding")?;

    let net = parse_case(&std::fs::read_to_string(&path)?)?;
    let opf = build(&net, pf, cost, &BuildOptions::default())?;
    let opts = SolverOptions::default();
    let (res, _) = solve(&opf.model, &opts);
    let kkt = kkt_check(&opf.model, &res);
    println!("{} {} {}: {} after {} iterations", net.name, pf.name(), cost.name(), res.status.as_str(), res.iterations);
    println!("  stationarity     {:.3e}", kkt.stationarity);
    println!("  primal           {:.3e}", kkt.primal);
    println!("  complementarity  {:.3e}", kkt.complementarity);
    println!("  dual sign        {:.3e}", kkt.dual_sign);
    println!("  dual scale       {:.3e}", kkt.dual_scale);
    println!("  max              {:.3e} (tolerance {:.0e})", kkt.max(), opts.tol);
    println!("  solver reported  {:.3e}", res.kkt_residual);
    Ok(())
}
