//! The formulation grid: solve every (case, power flow, encoding) cell,
//! compare objectives against the λ encoding and runtimes against the
//! fastest encoding, and render the result as CSV or Markdown.
//!
//! ```
//! use std::collections::BTreeMap;
//! use opfpwl::bench::runtime_ratio;
//! use opfpwl::formulations::CostKind;
//!
//! let times = BTreeMap::from([
//!     (CostKind::Psi, 10.0),
//!     (CostKind::Lambda, 2.0),
//!     (CostKind::Delta, 2.0),
//!     (CostKind::Phi, 4.0),
//! ]);
//! let ratios = runtime_ratio(&times).unwrap();
//! assert_eq!(ratios[&CostKind::Psi], 5.0);
//! assert_eq!(ratios[&CostKind::Phi], 2.0);
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;
use std::time::Duration;

use thiserror::Error;

use crate::formulations::{build, BuildOptions, CostKind, PowerFlowKind};
use crate::ipm::{solve, SolverOptions};
use crate::modelir::SolveStatus;
use crate::netdata::parse_case;

/// Relative tolerance of the relaxation check `SOC ≤ AC`.
pub const RELAXATION_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BenchError {
    #[error("no time recorded for the {0} encoding")]
    IncompleteCell(&'static str),
    #[error("runtime of the {0} encoding is not positive")]
    NonPositiveTime(&'static str),
    #[error("{path}: {message}")]
    Case { path: String, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimingStatistic {
    #[default]
    Median,
    Min,
}

impl TimingStatistic {
    pub fn name(self) -> &'static str {
        match self {
            TimingStatistic::Median => "median",
            TimingStatistic::Min => "min",
        }
    }

    fn apply(self, samples: &mut [Duration]) -> Duration {
        samples.sort();
        match self {
            TimingStatistic::Min => samples[0],
            TimingStatistic::Median => {
                let n = samples.len();
                if n % 2 == 1 {
                    samples[n / 2]
                } else {
                    (samples[n / 2 - 1] + samples[n / 2]) / 2
                }
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub cases: Vec<PathBuf>,
    pub power_flows: Vec<PowerFlowKind>,
    /// Piecewise-linear encodings to run.
    pub costs: Vec<CostKind>,
    pub trials: usize,
    pub statistic: TimingStatistic,
    pub solver: SolverOptions,
    pub build: BuildOptions,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            cases: Vec::new(),
            power_flows: PowerFlowKind::ALL.to_vec(),
            costs: CostKind::PWL.to_vec(),
            trials: 5,
            statistic: TimingStatistic::Median,
            solver: SolverOptions::default(),
            build: BuildOptions::default(),
        }
    }
}

/// Outcome of one cell: a solver status or a failed build.
#[derive(Debug, Clone, PartialEq)]
pub enum CellStatus {
    Solved(SolveStatus),
    BuildFailed(String),
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Solved(s) => s.as_str(),
            CellStatus::BuildFailed(_) => "build-error",
        }
    }

    pub fn is_optimal(&self) -> bool {
        *self == CellStatus::Solved(SolveStatus::Optimal)
    }
}

/// One (case, power flow, encoding) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub cost: CostKind,
    pub status: CellStatus,
    /// Objective of the first trial in $/h.
    pub objective: f64,
    pub iterations: usize,
    /// Timing statistic over the trials; solve only, build excluded.
    pub time: Duration,
}

/// One report row: a case under one power-flow model.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub case: String,
    pub power_flow: PowerFlowKind,
    pub buses: usize,
    pub branches: usize,
    /// Cells in encoding declaration order.
    pub cells: Vec<Cell>,
}

impl BenchRow {
    pub fn cell(&self, cost: CostKind) -> Option<&Cell> {
        self.cells.iter().find(|c| c.cost == cost)
    }

    /// Objective of the λ encoding when it solved to optimality.
    pub fn reference_objective(&self) -> Option<f64> {
        self.cell(CostKind::Lambda).filter(|c| c.status.is_optimal()).map(|c| c.objective)
    }

    /// `objective − λ objective` for an optimal cell.
    pub fn delta(&self, cost: CostKind) -> Option<f64> {
        let reference = self.reference_objective()?;
        self.cell(cost).filter(|c| c.status.is_optimal()).map(|c| c.objective - reference)
    }

    /// Runtime ratios when all four encodings solved to optimality.
    pub fn ratios(&self) -> Option<BTreeMap<CostKind, f64>> {
        let times: BTreeMap<CostKind, f64> = self
            .cells
            .iter()
            .filter(|c| c.status.is_optimal())
            .map(|c| (c.cost, c.time.as_secs_f64()))
            .collect();
        runtime_ratio(&times).ok()
    }

    /// The encoding with ratio 1; ties go to the first in declaration order.
    pub fn fastest(&self) -> Option<CostKind> {
        let ratios = self.ratios()?;
        CostKind::PWL.into_iter().find(|k| ratios[k] == 1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub trials: usize,
    pub statistic: TimingStatistic,
}

impl BenchReport {
    /// Cells where the SOC objective exceeds the AC objective of the same
    /// case and encoding by more than [`RELAXATION_TOL`] relative.
    pub fn relaxation_violations(&self) -> Vec<(String, CostKind)> {
        let mut out = Vec::new();
        for soc in self.rows.iter().filter(|r| r.power_flow == PowerFlowKind::Soc) {
            let Some(ac) = self.rows.iter().find(|r| r.case == soc.case && r.power_flow == PowerFlowKind::Ac) else {
                continue;
            };
            for cell in soc.cells.iter().filter(|c| c.status.is_optimal()) {
                if let Some(a) = ac.cell(cell.cost).filter(|c| c.status.is_optimal()) {
                    if cell.objective > a.objective + RELAXATION_TOL * a.objective.abs() {
                        out.push((soc.case.clone(), cell.cost));
                    }
                }
            }
        }
        out
    }

    /// Everything except timings, for determinism checks.
    pub fn without_timings(&self) -> BenchReport {
        let mut r = self.clone();
        for row in &mut r.rows {
            for c in &mut row.cells {
                c.time = Duration::ZERO;
            }
        }
        r
    }
}

/// `time_m / min_n time_n` over the four encodings.
pub fn runtime_ratio(times: &BTreeMap<CostKind, f64>) -> Result<BTreeMap<CostKind, f64>, BenchError> {
    for k in CostKind::PWL {
        match times.get(&k) {
            None => return Err(BenchError::IncompleteCell(k.name())),
            Some(&t) if !(t > 0.0) => return Err(BenchError::NonPositiveTime(k.name())),
            Some(_) => {}
        }
    }
    let best = CostKind::PWL.iter().map(|k| times[k]).fold(f64::INFINITY, f64::min);
    Ok(CostKind::PWL.into_iter().map(|k| (k, times[&k] / best)).collect())
}

/// Runs every cell sequentially in (case, power flow, encoding) order; power
/// flows and encodings follow declaration order whatever the config order.
/// Cell failures are recorded in the report; unreadable cases are errors.
pub fn run_suite(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.trials == 0 {
        return Err(BenchError::Config("trials must be at least 1".into()));
    }
    if let Some(k) = cfg.costs.iter().find(|k| !k.is_piecewise()) {
        return Err(BenchError::Config(format!("{} is not a piecewise-linear encoding", k.name())));
    }
    let mut costs = cfg.costs.clone();
    costs.sort();
    costs.dedup();
    let mut power_flows = cfg.power_flows.clone();
    power_flows.sort();
    power_flows.dedup();

    let mut rows = Vec::new();
    for path in &cfg.cases {
        let case_err = |message: String| BenchError::Case { path: path.display().to_string(), message };
        let text = std::fs::read_to_string(path).map_err(|e| case_err(e.to_string()))?;
        let net = parse_case(&text).map_err(|e| case_err(e.to_string()))?;
        for &pf in &power_flows {
            let mut cells = Vec::with_capacity(costs.len());
            for &cost in &costs {
                let cell = match build(&net, pf, cost, &cfg.build) {
                    Err(e) => Cell {
                        cost,
                        status: CellStatus::BuildFailed(e.to_string()),
                        objective: f64::NAN,
                        iterations: 0,
                        time: Duration::ZERO,
                    },
                    Ok(opf) => {
                        let mut samples = Vec::with_capacity(cfg.trials);
                        let (first, _) = solve(&opf.model, &cfg.solver);
                        samples.push(first.wall_time);
                        for _ in 1..cfg.trials {
                            let (r, _) = solve(&opf.model, &cfg.solver);
                            samples.push(r.wall_time);
                        }
                        Cell {
                            cost,
                            status: CellStatus::Solved(first.status),
                            objective: first.objective,
                            iterations: first.iterations,
                            time: cfg.statistic.apply(&mut samples),
                        }
                    }
                };
                log::info!(
                    "{} {} {}: {} in {} iterations",
                    net.name,
                    pf.name(),
                    cost.name(),
                    cell.status.as_str(),
                    cell.iterations
                );
                cells.push(cell);
            }
            rows.push(BenchRow {
                case: net.name.clone(),
                power_flow: pf,
                buses: net.buses.len(),
                branches: net.branches.len(),
                cells,
            });
        }
    }
    Ok(BenchReport { rows, trials: cfg.trials, statistic: cfg.statistic })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Markdown,
}

impl ReportFormat {
    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Some(ReportFormat::Csv),
            "md" | "markdown" => Some(ReportFormat::Markdown),
            _ => None,
        }
    }
}

/// Table column order: λ first, then Δ, Φ, Ψ.
const COLUMN_ORDER: [CostKind; 4] = [CostKind::Lambda, CostKind::Delta, CostKind::Phi, CostKind::Psi];
const DELTA_ORDER: [CostKind; 3] = [CostKind::Delta, CostKind::Phi, CostKind::Psi];

pub fn render_report(r: &BenchReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Csv => render_csv(r),
        ReportFormat::Markdown => render_markdown(r),
    }
}

struct RowText {
    objective: String,
    deltas: Vec<String>,
    times: Vec<String>,
    ratios: Vec<String>,
    iterations: Vec<String>,
}

/// Cell strings shared by both formats. Failed cells show their status in
/// place of the objective or delta; ratios are blank unless all four
/// encodings solved.
fn row_text(row: &BenchRow, num: impl Fn(f64) -> String) -> RowText {
    let objective = match row.cell(CostKind::Lambda) {
        Some(c) if c.status.is_optimal() => num(c.objective),
        Some(c) => c.status.as_str().to_string(),
        None => String::new(),
    };
    let deltas = DELTA_ORDER
        .iter()
        .map(|&k| match (row.cell(k), row.delta(k)) {
            (_, Some(d)) => num(d),
            (Some(c), None) if !c.status.is_optimal() => c.status.as_str().to_string(),
            _ => String::new(),
        })
        .collect();
    let times = COLUMN_ORDER
        .iter()
        .map(|&k| match row.cell(k) {
            Some(c) if c.status.is_optimal() => format!("{:.6}", c.time.as_secs_f64()),
            _ => String::new(),
        })
        .collect();
    let ratios = match row.ratios() {
        Some(ratios) => COLUMN_ORDER.iter().map(|k| format!("{:.3}", ratios[k])).collect(),
        None => vec![String::new(); 4],
    };
    let iterations = COLUMN_ORDER
        .iter()
        .map(|&k| row.cell(k).map(|c| c.iterations.to_string()).unwrap_or_default())
        .collect();
    RowText { objective, deltas, times, ratios, iterations }
}

fn render_csv(r: &BenchReport) -> String {
    let mut s = String::from(
        "case,pf,buses,branches,obj_lambda,delta_delta,delta_phi,delta_psi,\
         t_lambda,t_delta,t_phi,t_psi,ratio_lambda,ratio_delta,ratio_phi,ratio_psi,\
         iters_lambda,iters_delta,iters_phi,iters_psi\n",
    );
    for row in &r.rows {
        let t = row_text(row, |v| format!("{v:.10e}"));
        let fields: Vec<String> = [row.case.clone(), row.power_flow.name().into(), row.buses.to_string(), row.branches.to_string(), t.objective]
            .into_iter()
            .chain(t.deltas)
            .chain(t.times)
            .chain(t.ratios)
            .chain(t.iterations)
            .collect();
        s.push_str(&fields.join(","));
        s.push('\n');
    }
    s
}

fn render_markdown(r: &BenchReport) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "Runtimes are the {} of {} solve{} in seconds; model build time is excluded.\n",
        r.statistic.name(),
        r.trials,
        if r.trials == 1 { "" } else { "s" }
    );
    s.push_str(
        "| Test Case | PF | \\|N\\| | \\|E\\| | λ ($/h) | Δ delta | Φ delta | Ψ delta \
         | λ (s) | Δ (s) | Φ (s) | Ψ (s) | λ ratio | Δ ratio | Φ ratio | Ψ ratio \
         | λ iters | Δ iters | Φ iters | Ψ iters |\n",
    );
    s.push_str(&format!("|{}\n", "---|".repeat(20)));
    for row in &r.rows {
        let t = row_text(row, |v| format!("{v:.4e}"));
        let mut fields = vec![
            row.case.clone(),
            row.power_flow.name().to_uppercase(),
            row.buses.to_string(),
            row.branches.to_string(),
            t.objective,
        ];
        fields.extend(t.deltas);
        fields.extend(t.times);
        fields.extend(t.ratios);
        fields.extend(t.iterations);
        let _ = writeln!(s, "| {} |", fields.join(" | "));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn times(v: [f64; 4]) -> BTreeMap<CostKind, f64> {
        CostKind::PWL.into_iter().zip(v).collect()
    }

    #[test]
    fn ratios_follow_the_fastest_encoding() {
        let r = runtime_ratio(&times([10.0, 2.0, 2.0, 4.0])).unwrap();
        assert_eq!(r.values().copied().collect::<Vec<_>>(), vec![5.0, 1.0, 1.0, 2.0]);
        let r = runtime_ratio(&times([3.0; 4])).unwrap();
        assert!(r.values().all(|&v| v == 1.0));
        let r = runtime_ratio(&times([1.0, 1.0, 1.0, 1.7])).unwrap();
        assert_eq!(r[&CostKind::Phi], 1.7);
    }

    #[test]
    fn ratio_errors() {
        let mut t = times([1.0; 4]);
        t.remove(&CostKind::Delta);
        assert_eq!(runtime_ratio(&t), Err(BenchError::IncompleteCell("delta")));
        assert_eq!(runtime_ratio(&times([1.0, 0.0, 1.0, 1.0])), Err(BenchError::NonPositiveTime("lambda")));
    }

    fn cell(cost: CostKind, status: SolveStatus, objective: f64, ms: u64) -> Cell {
        Cell { cost, status: CellStatus::Solved(status), objective, iterations: 7, time: Duration::from_millis(ms) }
    }

    fn row(cells: Vec<Cell>) -> BenchRow {
        BenchRow { case: "c".into(), power_flow: PowerFlowKind::Dc, buses: 3, branches: 2, cells }
    }

    #[test]
    fn empty_report_is_header_only() {
        let r = BenchReport { rows: vec![], trials: 5, statistic: TimingStatistic::Median };
        let csv = render_report(&r, ReportFormat::Csv);
        assert_eq!(csv.lines().count(), 1);
        assert!(csv.starts_with("case,pf,buses,branches,obj_lambda,delta_delta"));
    }

    #[test]
    fn one_row_has_four_ratio_columns() {
        let cells = CostKind::PWL.into_iter().map(|k| cell(k, SolveStatus::Optimal, 100.0, 2)).collect();
        let r = BenchReport { rows: vec![row(cells)], trials: 5, statistic: TimingStatistic::Median };
        let csv = render_report(&r, ReportFormat::Csv);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 2);
        let header: Vec<&str> = lines[0].split(',').collect();
        let data: Vec<&str> = lines[1].split(',').collect();
        assert_eq!(header.len(), data.len());
        for (h, d) in header.iter().zip(&data) {
            if h.starts_with("ratio_") {
                assert_eq!(*d, "1.000");
            }
        }
        assert_eq!(r.rows[0].fastest(), Some(CostKind::Psi));
    }

    #[test]
    fn failed_cell_shows_status_and_drops_ratios() {
        let cells = vec![
            cell(CostKind::Psi, SolveStatus::IterationLimit, 90.0, 5),
            cell(CostKind::Lambda, SolveStatus::Optimal, 100.0, 2),
            cell(CostKind::Delta, SolveStatus::Optimal, 100.5, 2),
            cell(CostKind::Phi, SolveStatus::Optimal, 100.0, 3),
        ];
        let r = BenchReport { rows: vec![row(cells)], trials: 1, statistic: TimingStatistic::Min };
        let csv = render_report(&r, ReportFormat::Csv);
        let data: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
        assert_eq!(data[4], "1.0000000000e2");
        assert_eq!(data[5], "5.0000000000e-1");
        assert_eq!(data[7], "iteration-limit");
        assert!(data[12..16].iter().all(|v| v.is_empty()));
        let md = render_report(&r, ReportFormat::Markdown);
        assert!(md.contains("model build time is excluded"));
        assert!(md.contains("iteration-limit"));
    }

    #[test]
    fn statistics() {
        let ms = |v: &[u64]| v.iter().map(|&m| Duration::from_millis(m)).collect::<Vec<_>>();
        assert_eq!(TimingStatistic::Median.apply(&mut ms(&[5, 1, 3])), Duration::from_millis(3));
        assert_eq!(TimingStatistic::Median.apply(&mut ms(&[4, 1, 3, 2])), Duration::from_micros(2500));
        assert_eq!(TimingStatistic::Min.apply(&mut ms(&[5, 1, 3])), Duration::from_millis(1));
    }
}
