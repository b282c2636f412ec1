use std::fmt::Write as _;

use super::{Block, ModelIR};

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.10e}")
    }
}

fn linear(s: &mut String, m: &ModelIR, terms: &[(usize, f64)]) {
    for &(j, a) in terms {
        let _ = write!(s, " {}*{}", num(a), m.variables[j].name);
    }
}

pub(super) fn dump(m: &ModelIR) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "variables {}", m.n_vars());
    for v in &m.variables {
        let _ = writeln!(s, "  {} [{}, {}] init {}", v.name, num(v.lower), num(v.upper), num(v.initial));
    }
    let _ = writeln!(s, "blocks {} rows {}", m.blocks.len(), m.n_rows());
    let name = |j: usize| m.variables[j].name.as_str();
    for b in &m.blocks {
        let _ = write!(s, "  {} {}:", b.kind().name(), b.label);
        match &b.body {
            Block::Linear { terms, lower, upper } => {
                linear(&mut s, m, terms);
                let _ = write!(s, " in [{}, {}]", num(*lower), num(*upper));
            }
            Block::Quadratic { quadratic, linear: lin, lower, upper } => {
                for &(i, j, c) in quadratic {
                    let _ = write!(s, " {}*{}*{}", num(c), name(i), name(j));
                }
                linear(&mut s, m, lin);
                let _ = write!(s, " in [{}, {}]", num(*lower), num(*upper));
            }
            Block::SocCone { wr, wi, wii, wjj } => {
                let _ = write!(s, " {}^2 + {}^2 <= {}*{}", name(*wr), name(*wi), name(*wii), name(*wjj));
            }
            Block::AcFlow(f) => {
                let _ = write!(
                    s,
                    " ({}, {}) from ({}, {}, {}, {}) own {} {} mutual {} {}",
                    name(f.p),
                    name(f.q),
                    name(f.vm_a),
                    name(f.vm_b),
                    name(f.va_a),
                    name(f.va_b),
                    num(f.g_own),
                    num(f.b_own),
                    num(f.g_mut),
                    num(f.b_mut)
                );
            }
            Block::ApparentPower { p, q, limit } => {
                let _ = write!(s, " {}^2 + {}^2 <= {}^2", name(*p), name(*q), num(*limit));
            }
        }
        s.push('\n');
    }
    let _ = write!(s, "minimize");
    let terms: Vec<(usize, f64)> = m.objective.terms().collect();
    linear(&mut s, m, &terms);
    let _ = writeln!(s, " + {}", num(m.objective.offset));
    s
}
