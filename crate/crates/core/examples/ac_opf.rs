//! Solves the polar AC model with the Δ encoding from a flat start and
//! prints bus voltages, dispatch and network losses.
//!
//! ```text
//! cargo run --release --example ac_opf -- data/case14_syn.m
//! ```

use opfpwl::formulations::{build, recover_solution, BuildOptions, BusVoltages, CostKind, PowerFlowKind};
use opfpwl::ipm::{solve, SolverOptions};
use opfpwl::netdata::parse_case;

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case5_pjm.m").into());
    let net = parse_case(&std::fs::read_to_string(&path)?)?;
    let opf = build(&net, PowerFlowKind::Ac, CostKind::Delta, &BuildOptions::default())?;
    let (res, _) = solve(&opf.model, &SolverOptions::default());
    let sol = recover_solution(&opf, &res)?;
    println!("{}: objective {:.4} $/h in {} iterations", net.name, res.objective, res.iterations);

    if let BusVoltages::Polar { vm, va } = &sol.voltages {
        for (b, bus) in net.buses.iter().enumerate() {
            println!("  bus {:>3}: |V| = {:.4}  angle = {:>8.3} deg", bus.id, vm[b], va[b].to_degrees());
        }
    }
    for (k, s) in sol.dispatch.iter().enumerate() {
        println!("  gen {k}: {:>9.3} MW {:>9.3} MVAr", net.to_mw(s.re), net.to_mw(s.im));
    }
    let losses: f64 = sol.flows.iter().map(|(f, t)| f.re + t.re).sum();
    let generated: f64 = sol.dispatch.iter().map(|s| s.re).sum();
    println!(
        "generation {:.3} MW, demand {:.3} MW, losses {:.3} MW",
        net.to_mw(generated),
        net.to_mw(net.total_demand().re),
        net.to_mw(losses)
    );
    Ok(())
}
