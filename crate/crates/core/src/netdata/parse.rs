use std::collections::BTreeMap;

use super::{Branch, Bus, BusType, ComplexPU, Generator, NetError, Network};
use crate::pwlcost::{CostSpec, PwlCurve};

struct Row {
    line: usize,
    values: Vec<f64>,
}

#[derive(Default)]
struct CaseTables {
    name: Option<String>,
    scalars: BTreeMap<String, (usize, f64)>,
    tables: BTreeMap<String, (usize, Vec<Row>)>,
}

fn parse_number(tok: &str, line: usize) -> Result<f64, NetError> {
    let v = match tok {
        "Inf" | "inf" | "+Inf" => f64::INFINITY,
        "-Inf" | "-inf" => f64::NEG_INFINITY,
        _ => tok.parse::<f64>().map_err(|_| NetError::Parse {
            line,
            message: format!("malformed number `{tok}`"),
        })?,
    };
    if v.is_nan() {
        return Err(NetError::Parse {
            line,
            message: "NaN is not a valid case value".into(),
        });
    }
    Ok(v)
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(i) => &line[..i],
        None => line,
    }
}

/// Splits the text into `mpc.<name>` scalars and matrices.
fn scan(text: &str) -> Result<CaseTables, NetError> {
    enum Mode {
        Top,
        Matrix { name: String, start: usize, rows: Vec<Row>, current: Vec<f64>, current_line: usize },
        Cell,
    }
    let mut out = CaseTables::default();
    let mut mode = Mode::Top;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let mut rest: String = strip_comment(raw).to_string();
        loop {
            match &mut mode {
                Mode::Top => {
                    let trimmed = rest.trim();
                    if trimmed.is_empty() {
                        break;
                    }
                    if let Some(def) = trimmed.strip_prefix("function") {
                        if let Some((_, name)) = def.split_once('=') {
                            out.name = Some(name.trim().trim_end_matches(';').to_string());
                        }
                        break;
                    }
                    let Some(assign) = trimmed.strip_prefix("mpc.") else {
                        break;
                    };
                    let Some((lhs, rhs)) = assign.split_once('=') else {
                        return Err(NetError::Parse {
                            line: line_no,
                            message: format!("expected assignment in `{trimmed}`"),
                        });
                    };
                    let name = lhs.trim().to_string();
                    let rhs = rhs.trim_start();
                    if let Some(body) = rhs.strip_prefix('[') {
                        mode = Mode::Matrix {
                            name,
                            start: line_no,
                            rows: Vec::new(),
                            current: Vec::new(),
                            current_line: line_no,
                        };
                        rest = body.to_string();
                        continue;
                    } else if let Some(body) = rhs.strip_prefix('{') {
                        mode = Mode::Cell;
                        rest = body.to_string();
                        continue;
                    } else if rhs.starts_with('\'') || rhs.starts_with('"') {
                        break;
                    } else {
                        let tok = rhs.trim().trim_end_matches(';').trim();
                        let v = parse_number(tok, line_no)?;
                        out.scalars.insert(name, (line_no, v));
                        break;
                    }
                }
                Mode::Cell => {
                    if let Some(i) = rest.find('}') {
                        rest = rest[i + 1..].trim_start_matches(';').to_string();
                        mode = Mode::Top;
                        continue;
                    }
                    break;
                }
                Mode::Matrix { name, start, rows, current, current_line } => {
                    let mut closed = None;
                    let mut token = String::new();
                    let chars: Vec<char> = rest.chars().collect();
                    let mut i = 0;
                    let flush = |token: &mut String, current: &mut Vec<f64>, current_line: &mut usize| -> Result<(), NetError> {
                        if !token.is_empty() {
                            if current.is_empty() {
                                *current_line = line_no;
                            }
                            current.push(parse_number(token, line_no)?);
                            token.clear();
                        }
                        Ok(())
                    };
                    while i < chars.len() {
                        let ch = chars[i];
                        match ch {
                            ' ' | '\t' | ',' | '\r' => flush(&mut token, current, current_line)?,
                            ';' => {
                                flush(&mut token, current, current_line)?;
                                if !current.is_empty() {
                                    rows.push(Row { line: *current_line, values: std::mem::take(current) });
                                }
                            }
                            ']' => {
                                flush(&mut token, current, current_line)?;
                                if !current.is_empty() {
                                    rows.push(Row { line: *current_line, values: std::mem::take(current) });
                                }
                                closed = Some(i + 1);
                                break;
                            }
                            c if c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '+' => token.push(c),
                            other => {
                                return Err(NetError::Parse {
                                    line: line_no,
                                    message: format!("unexpected character `{other}` in mpc.{name}"),
                                })
                            }
                        }
                        i += 1;
                    }
                    match closed {
                        Some(after) => {
                            let name = std::mem::take(name);
                            let start = *start;
                            let rows = std::mem::take(rows);
                            out.tables.insert(name, (start, rows));
                            rest = chars[after..].iter().collect::<String>().trim_start_matches(';').to_string();
                            mode = Mode::Top;
                            continue;
                        }
                        None => {
                            flush(&mut token, current, current_line)?;
                            // a newline also terminates a row
                            if !current.is_empty() {
                                rows.push(Row { line: *current_line, values: std::mem::take(current) });
                            }
                            break;
                        }
                    }
                }
            }
        }
    }
    if let Mode::Matrix { name, start, .. } = mode {
        return Err(NetError::Parse {
            line: start,
            message: format!("mpc.{name} is not terminated by `]`"),
        });
    }
    Ok(out)
}

fn need_columns(row: &Row, n: usize, table: &str) -> Result<(), NetError> {
    if row.values.len() < n {
        return Err(NetError::Parse {
            line: row.line,
            message: format!("mpc.{table} row has {} columns, expected at least {n}", row.values.len()),
        });
    }
    Ok(())
}

fn as_id(v: f64, line: usize, what: &str) -> Result<usize, NetError> {
    if v >= 1.0 && v.fract() == 0.0 && v < 1e15 {
        Ok(v as usize)
    } else {
        Err(NetError::Parse {
            line,
            message: format!("{what} must be a positive integer, got {v}"),
        })
    }
}

/// Unit conversions shared with the writer so round trips are exact.
pub(super) mod units {
    pub fn power_to_pu(mw: f64, base: f64) -> f64 {
        mw / base
    }
    pub fn quadratic_to_pu(c2: f64, base: f64) -> f64 {
        c2 * (base * base)
    }
    pub fn linear_to_pu(c1: f64, base: f64) -> f64 {
        c1 * base
    }
    pub fn degrees_to_radians(deg: f64) -> f64 {
        deg.to_radians()
    }
}

/// Parses a Matpower case file.
///
/// Honors `baseMVA`, the `bus`, `gen`, `branch` and `gencost` tables, and
/// converts powers to per-unit and angles to radians. Bus shunts, phase
/// shifters and out-of-service elements are rejected.
pub fn parse_case(text: &str) -> Result<Network, NetError> {
    let tables = scan(text)?;
    let base = match tables.scalars.get("baseMVA") {
        Some(&(line, v)) if v > 0.0 && v.is_finite() => {
            let _ = line;
            v
        }
        Some(&(line, v)) => {
            return Err(NetError::Parse {
                line,
                message: format!("baseMVA must be positive, got {v}"),
            })
        }
        None => return Err(NetError::Structure("missing mpc.baseMVA".into())),
    };
    let table = |name: &str| {
        tables
            .tables
            .get(name)
            .map(|(_, rows)| rows)
            .ok_or_else(|| NetError::Structure(format!("missing mpc.{name} table")))
    };

    let mut buses = Vec::new();
    for row in table("bus")? {
        need_columns(row, 13, "bus")?;
        let v = &row.values;
        let id = as_id(v[0], row.line, "bus id")?;
        let kind = BusType::from_code(v[1] as i64)
            .filter(|_| v[1].fract() == 0.0)
            .ok_or_else(|| NetError::Parse {
                line: row.line,
                message: format!("unknown bus type {}", v[1]),
            })?;
        if v[4] != 0.0 || v[5] != 0.0 {
            return Err(NetError::Unsupported {
                line: row.line,
                feature: format!("bus shunt at bus {id}"),
            });
        }
        buses.push(Bus {
            id,
            kind,
            vmin: v[12],
            vmax: v[11],
            demand: ComplexPU::new(units::power_to_pu(v[2], base), units::power_to_pu(v[3], base)),
        });
    }

    let mut generators = Vec::new();
    let gen_rows = table("gen")?;
    for row in gen_rows {
        need_columns(row, 10, "gen")?;
        let v = &row.values;
        if v[7] <= 0.0 {
            return Err(NetError::Unsupported {
                line: row.line,
                feature: "out-of-service generator".into(),
            });
        }
        generators.push(Generator {
            bus: as_id(v[0], row.line, "generator bus")?,
            pmin: units::power_to_pu(v[9], base),
            pmax: units::power_to_pu(v[8], base),
            qmin: units::power_to_pu(v[4], base),
            qmax: units::power_to_pu(v[3], base),
            cost: CostSpec::Polynomial { a: 0.0, b: 0.0, c: 0.0 },
        });
    }

    let mut branches = Vec::new();
    for row in table("branch")? {
        need_columns(row, 11, "branch")?;
        let v = &row.values;
        if v[9] != 0.0 {
            return Err(NetError::Unsupported {
                line: row.line,
                feature: "phase-shifting transformer".into(),
            });
        }
        if v[10] <= 0.0 {
            return Err(NetError::Unsupported {
                line: row.line,
                feature: "out-of-service branch".into(),
            });
        }
        if v[8] < 0.0 {
            return Err(NetError::Parse {
                line: row.line,
                message: format!("negative tap ratio {}", v[8]),
            });
        }
        let (angmin, angmax) = if v.len() >= 13 {
            (units::degrees_to_radians(v[11]), units::degrees_to_radians(v[12]))
        } else {
            (0.0, 0.0)
        };
        branches.push(Branch {
            from_bus: as_id(v[0], row.line, "branch from-bus")?,
            to_bus: as_id(v[1], row.line, "branch to-bus")?,
            series_impedance: ComplexPU::new(v[2], v[3]),
            charging: v[4],
            tap_ratio: v[8],
            rate: units::power_to_pu(v[5], base),
            angmin,
            angmax,
        });
    }

    let cost_rows = table("gencost")?;
    if cost_rows.len() != generators.len() {
        return Err(NetError::Structure(format!(
            "mpc.gencost has {} rows for {} generators",
            cost_rows.len(),
            generators.len()
        )));
    }
    for (gen, row) in generators.iter_mut().zip(cost_rows) {
        need_columns(row, 4, "gencost")?;
        let v = &row.values;
        let n = v[3];
        if n < 0.0 || n.fract() != 0.0 {
            return Err(NetError::Parse {
                line: row.line,
                message: format!("invalid gencost point/coefficient count {n}"),
            });
        }
        let n = n as usize;
        gen.cost = match v[0] as i64 {
            1 if v[0] == 1.0 => {
                need_columns(row, 4 + 2 * n, "gencost")?;
                let points = v[4..4 + 2 * n]
                    .chunks(2)
                    .map(|pc| (units::power_to_pu(pc[0], base), pc[1]))
                    .collect();
                let curve = PwlCurve::new(points).map_err(|e| NetError::Parse {
                    line: row.line,
                    message: e.to_string(),
                })?;
                CostSpec::Piecewise(curve)
            }
            2 if v[0] == 2.0 => {
                need_columns(row, 4 + n, "gencost")?;
                if n > 3 {
                    return Err(NetError::Unsupported {
                        line: row.line,
                        feature: format!("polynomial cost with {n} coefficients"),
                    });
                }
                // high-to-low degree
                let coeffs = &v[4..4 + n];
                let get = |deg: usize| if deg < n { coeffs[n - 1 - deg] } else { 0.0 };
                CostSpec::Polynomial {
                    a: get(0),
                    b: units::linear_to_pu(get(1), base),
                    c: units::quadratic_to_pu(get(2), base),
                }
            }
            _ => {
                return Err(NetError::Unsupported {
                    line: row.line,
                    feature: format!("cost model code {}", v[0]),
                })
            }
        };
    }

    Ok(Network::new(
        tables.name.unwrap_or_else(|| "case".to_string()),
        base,
        buses,
        branches,
        generators,
    ))
}
