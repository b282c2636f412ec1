//! Runs the full formulation grid over the small bundled cases and prints
//! the Markdown report: λ objectives, deltas of the other encodings,
//! runtimes and runtime ratios.
//!
//! ```text
//! cargo run --release --example bench_grid -- 'data/case*_syn.m'
//! ```

use opfpwl::bench::{render_report, run_suite, BenchConfig, ReportFormat};

fn main() -> anyhow::Result<()> {
    let pattern = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/data/case[0-9]_p*.m").into());
    let mut cases: Vec<_> = glob::glob(&pattern)?.collect::<Result<_, _>>()?;
    cases.sort();
    let cfg = BenchConfig { cases, trials: 3, ..BenchConfig::default() };
    let report = run_suite(&cfg)?;
    print!("{}", render_report(&report, ReportFormat::Markdown));
    for row in &report.rows {
        if let Some(k) = row.fastest() {
            println!("{} {}: fastest encoding {}", row.case, row.power_flow.name(), k.symbol());
        }
    }
    let violations = report.relaxation_violations();
    println!("relaxation violations: {}", violations.len());
    Ok(())
}
