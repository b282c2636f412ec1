//! Command-line front end: validate, preprocess, solve and benchmark cases.
//!
//! Exit codes: 0 success, 1 solver finished without optimality, 2 input error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use opfpwl::bench::{render_report, run_suite, BenchConfig, ReportFormat};
use opfpwl::formulations::{build, recover_solution, BuildOptions, CostKind, PowerFlowKind};
use opfpwl::ipm::{solve, SolverOptions};
use opfpwl::modelir::SolveStatus;
use opfpwl::netdata::{parse_case, validate_network, Network};
use opfpwl::pwlcost::{preprocess, CostSpec, DEFAULT_SLOPE_TOL};

#[derive(Parser)]
#[command(name = "opfbench", version, about = "Optimal power flow with piecewise-linear costs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a case and report structural findings.
    Validate { case: PathBuf },
    /// Show each generator's cost curve before and after cleanup.
    Preprocess {
        case: PathBuf,
        #[arg(long, default_value_t = DEFAULT_SLOPE_TOL)]
        slope_tol: f64,
    },
    /// Build and solve one formulation.
    Solve {
        case: PathBuf,
        #[arg(long, value_enum)]
        pf: Pf,
        #[arg(long, value_enum)]
        cost: Cost,
        #[arg(long, default_value_t = SolverOptions::default().tol)]
        tol: f64,
        #[arg(long, default_value_t = SolverOptions::default().max_iter)]
        max_iter: usize,
        /// Write the per-iteration log as CSV.
        #[arg(long)]
        log_iters: Option<PathBuf>,
    },
    /// Run the formulation grid over a set of cases.
    Bench {
        /// Glob pattern; may be repeated.
        #[arg(long, required = true)]
        cases: Vec<String>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Pf::Ac, Pf::Soc, Pf::Dc])]
        pf: Vec<Pf>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Cost::Psi, Cost::Lambda, Cost::Delta, Cost::Phi])]
        cost: Vec<Cost>,
        #[arg(long, default_value_t = 5)]
        trials: usize,
        /// Output file; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Pf {
    Ac,
    Soc,
    Dc,
}

impl From<Pf> for PowerFlowKind {
    fn from(p: Pf) -> Self {
        match p {
            Pf::Ac => PowerFlowKind::Ac,
            Pf::Soc => PowerFlowKind::Soc,
            Pf::Dc => PowerFlowKind::Dc,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Cost {
    Psi,
    Lambda,
    Delta,
    Phi,
    Poly,
}

impl From<Cost> for CostKind {
    fn from(c: Cost) -> Self {
        match c {
            Cost::Psi => CostKind::Psi,
            Cost::Lambda => CostKind::Lambda,
            Cost::Delta => CostKind::Delta,
            Cost::Phi => CostKind::Phi,
            Cost::Poly => CostKind::Polynomial,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Md,
}

/// Failure that is not an input error.
#[derive(Debug)]
struct NotOptimal(SolveStatus);

impl std::fmt::Display for NotOptimal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "solver finished with status {}", self.0.as_str())
    }
}

impl std::error::Error for NotOptimal {}

fn load(path: &Path) -> Result<Network> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse_case(&text).with_context(|| format!("parsing {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Validate { case } => {
            let net = load(&case)?;
            let findings = validate_network(&net);
            println!(
                "{}: {} buses, {} branches, {} generators",
                net.name,
                net.buses.len(),
                net.branches.len(),
                net.generators.len()
            );
            for f in &findings {
                println!("{f}");
            }
            if findings.iter().any(|f| f.is_error()) {
                bail!("{} has structural errors", case.display());
            }
        }
        Command::Preprocess { case, slope_tol } => {
            let net = load(&case)?;
            for (k, g) in net.generators.iter().enumerate() {
                let CostSpec::Piecewise(curve) = &g.cost else {
                    println!("gen {k}: polynomial cost, nothing to do");
                    continue;
                };
                let clean = preprocess(curve, g.pmin, g.pmax, slope_tol)
                    .with_context(|| format!("generator {k}"))?;
                let mw = |pts: &[(f64, f64)]| {
                    pts.iter()
                        .map(|&(p, c)| format!("({}, {c})", net.to_mw(p)))
                        .collect::<Vec<_>>()
                        .join(" ")
                };
                println!("gen {k}: {} -> {} points", curve.len(), clean.len());
                println!("  before: {}", mw(curve.points()));
                println!("  after:  {}", mw(clean.points()));
            }
        }
        Command::Solve { case, pf, cost, tol, max_iter, log_iters } => {
            let net = load(&case)?;
            let opf = build(&net, pf.into(), cost.into(), &BuildOptions::default())?;
            let opts = SolverOptions { tol, max_iter, ..SolverOptions::default() };
            let (result, log) = solve(&opf.model, &opts);
            if let Some(path) = log_iters {
                std::fs::write(&path, log.to_csv()).with_context(|| format!("writing {}", path.display()))?;
            }
            println!("status      {}", result.status.as_str());
            println!("objective   {:.6}", result.objective);
            println!("iterations  {}", result.iterations);
            println!("solve time  {:.3} s", result.wall_time.as_secs_f64());
            if result.status != SolveStatus::Optimal {
                return Err(NotOptimal(result.status).into());
            }
            let sol = recover_solution(&opf, &result)?;
            for (k, (s, c)) in sol.dispatch.iter().zip(&sol.generator_costs).enumerate() {
                println!("gen {k}: p = {:.4} MW, q = {:.4} MVAr, cost = {c:.4} $/h", net.to_mw(s.re), net.to_mw(s.im));
            }
        }
        Command::Bench { cases, pf, cost, trials, out, format } => {
            let mut paths = Vec::new();
            for pattern in &cases {
                for entry in glob::glob(pattern).with_context(|| format!("bad pattern {pattern}"))? {
                    paths.push(entry?);
                }
            }
            paths.sort();
            paths.dedup();
            if paths.is_empty() {
                bail!("no case files match {}", cases.join(", "));
            }
            let cfg = BenchConfig {
                cases: paths,
                power_flows: pf.into_iter().map(Into::into).collect(),
                costs: cost.into_iter().map(Into::into).collect(),
                trials,
                ..BenchConfig::default()
            };
            let report = run_suite(&cfg)?;
            let fmt = match format {
                Format::Csv => ReportFormat::Csv,
                Format::Md => ReportFormat::Markdown,
            };
            let text = render_report(&report, fmt);
            match out {
                Some(path) => std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{text}"),
            }
            for (case, k) in report.relaxation_violations() {
                log::warn!("{case}: SOC objective above AC with the {} encoding", k.name());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<NotOptimal>() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
