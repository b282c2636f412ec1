//! Parses a Matpower case, lists validation findings, and checks that
//! writing and re-reading the network reproduces it.
//!
//! ```text
//! cargo run --example parse_case -- data/case14_syn.m
//! ```

use opfpwl::netdata::{parse_case, validate_network, write_case};
use opfpwl::pwlcost::CostSpec;

fn main() -> anyhow::Result<()> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case5_pjm.m").into());
    let net = parse_case(&std::fs::read_to_string(&path)?)?;
    let demand = net.total_demand();
    println!("{} (base {} MVA)", net.name, net.base_mva);
    println!("  buses       {}", net.buses.len());
    println!("  branches    {}", net.branches.len());
    println!("  generators  {}", net.generators.len());
    println!("  demand      {:.1} MW, {:.1} MVAr", net.to_mw(demand.re), net.to_mw(demand.im));
    println!("  reference   bus {:?}", net.reference_bus());

    for (k, g) in net.generators.iter().enumerate() {
        let cost = match &g.cost {
            CostSpec::Piecewise(c) => format!("{} breakpoints", c.len()),
            CostSpec::Polynomial { a, b, c } => format!("{c} p² + {b} p + {a}"),
        };
        println!(
            "  gen {k} at bus {}: [{:.1}, {:.1}] MW, {cost}",
            g.bus,
            net.to_mw(g.pmin),
            net.to_mw(g.pmax)
        );
    }

    let findings = validate_network(&net);
    println!("{} findings", findings.len());
    for f in &findings {
        println!("  {f}");
    }

    let again = parse_case(&write_case(&net))?;
    println!("round trip {}", if again == net { "exact" } else { "DIFFERS" });
    Ok(())
}
