//! Solves the DC approximation with the λ encoding and prints dispatch,
//! branch flows and locational marginal prices.
//!
//! Prices are the sensitivities of the objective to each bus's demand, read
//! from the duals of the active power balance rows.
//!
//! ```text
//! cargo run --example dc_opf -- data/case5_pjm.m
//! ```

use opfpwl::formulations::{build, recover_solution, BuildOptions, CostKind, PowerFlowKind};
use opfpwl::ipm::{solve, SolverOptions};
use opfpwl::netdata::parse_case;

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case5_pjm.m").into());
    let net = parse_case(&std::fs::read_to_string(&path)?)?;
    let opf = build(&net, PowerFlowKind::Dc, CostKind::Lambda, &BuildOptions::default())?;
    let (res, _) = solve(&opf.model, &SolverOptions::default());
    let sol = recover_solution(&opf, &res)?;
    println!("{}: objective {:.4} $/h in {} iterations", net.name, res.objective, res.iterations);

    for (k, (s, c)) in sol.dispatch.iter().zip(&sol.generator_costs).enumerate() {
        let g = &net.generators[k];
        println!("  gen {k} at bus {}: {:>9.3} MW  {:>10.3} $/h", g.bus, net.to_mw(s.re), c);
    }
    for (e, (f, _)) in sol.flows.iter().enumerate() {
        let br = &net.branches[e];
        let limit = if br.has_thermal_limit() { format!("{:.0}", net.to_mw(br.rate)) } else { "-".into() };
        println!("  branch {}-{}: {:>9.3} MW (limit {limit})", br.from_bus, br.to_bus, net.to_mw(f.re));
    }

    // the balance row's dual y gives d(objective)/d(demand) = -y per unit
    let offsets = opf.model.row_offsets();
    for (b, blk) in opf.model.blocks.iter().enumerate() {
        if let Some(id) = blk.label.strip_prefix("balance_p[") {
            let lmp = -res.constraint_duals[offsets[b]] / net.base_mva;
            println!("  bus {}: LMP {lmp:.4} $/MWh", id.trim_end_matches(']'));
        }
    }
    Ok(())
}
