use std::collections::BTreeSet;
use std::fmt;

use super::{branch_admittance, BusType, Network};
use crate::pwlcost::{preprocess, CostSpec, DEFAULT_SLOPE_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Finding {
    pub severity: Severity,
    /// Stable short description, e.g. `"dangling generator bus"`.
    pub message: &'static str,
    /// What the finding is about, e.g. `"generator 3 (bus 99)"`.
    pub subject: String,
}

impl Finding {
    fn warn(message: &'static str, subject: String) -> Self {
        Finding { severity: Severity::Warning, message, subject }
    }

    fn error(message: &'static str, subject: String) -> Self {
        Finding { severity: Severity::Error, message, subject }
    }

    pub fn is_error(&self) -> bool {
        self.severity == Severity::Error
    }
}

impl fmt::Display for Finding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.severity {
            Severity::Warning => "warning",
            Severity::Error => "error",
        };
        write!(f, "{tag}: {}: {}", self.message, self.subject)
    }
}

/// Checks a parsed network for structural problems.
///
/// Errors make the network unusable by the model builders; warnings record
/// conventions applied while building (unlimited branches, default angle
/// bounds, reference-bus fallback).
pub fn validate_network(n: &Network) -> Vec<Finding> {
    let mut out = Vec::new();
    let mut ids = BTreeSet::new();
    for b in &n.buses {
        if !ids.insert(b.id) {
            out.push(Finding::error("duplicate bus id", format!("bus {}", b.id)));
        }
        if !(b.vmin > 0.0 && b.vmin <= b.vmax) {
            out.push(Finding::error("invalid voltage bounds", format!("bus {}", b.id)));
        }
        if !b.demand.is_finite() {
            out.push(Finding::error("non-finite demand", format!("bus {}", b.id)));
        }
    }
    if n.buses.is_empty() {
        out.push(Finding::error("network has no buses", n.name.clone()));
    }

    let mut connected = BTreeSet::new();
    for (e, br) in n.branches.iter().enumerate() {
        let subject = format!("branch {e} ({}-{})", br.from_bus, br.to_bus);
        for end in [br.from_bus, br.to_bus] {
            if n.bus_position(end).is_none() {
                out.push(Finding::error("dangling branch endpoint", subject.clone()));
            }
        }
        if br.from_bus == br.to_bus {
            out.push(Finding::error("branch connects a bus to itself", subject.clone()));
        }
        if branch_admittance(br).is_err() {
            out.push(Finding::error("zero series impedance", subject.clone()));
        }
        if !br.has_thermal_limit() {
            out.push(Finding::warn("thermal limit treated as unlimited", subject.clone()));
        }
        if br.angmin == 0.0 && br.angmax == 0.0 {
            out.push(Finding::warn("angle bounds absent, using ±30 degrees", subject.clone()));
        } else {
            let right = std::f64::consts::FRAC_PI_2;
            if br.angmin <= -right || br.angmax >= right {
                out.push(Finding::warn("angle bound beyond ±90 degrees, using ±60 degrees", subject.clone()));
            }
            if br.angmin > 0.0 || br.angmax < 0.0 {
                out.push(Finding::error("angle bounds exclude zero", subject.clone()));
            }
        }
        connected.insert(br.from_bus);
        connected.insert(br.to_bus);
    }

    for (k, g) in n.generators.iter().enumerate() {
        let subject = format!("generator {k} (bus {})", g.bus);
        if n.bus_position(g.bus).is_none() {
            out.push(Finding::error("dangling generator bus", subject.clone()));
        }
        if !(g.pmin <= g.pmax) {
            out.push(Finding::error("pmin exceeds pmax", subject.clone()));
        }
        if !(g.qmin <= g.qmax) {
            out.push(Finding::error("qmin exceeds qmax", subject.clone()));
        }
        match &g.cost {
            CostSpec::Polynomial { c, .. } if *c < 0.0 => {
                out.push(Finding::error("non-convex polynomial cost", subject.clone()));
            }
            CostSpec::Piecewise(curve)
                if g.pmin <= g.pmax && preprocess(curve, g.pmin, g.pmax, DEFAULT_SLOPE_TOL).is_err() =>
            {
                out.push(Finding::error("piecewise cost is not convex", subject.clone()));
            }
            _ => {}
        }
    }

    if n.buses.len() > 1 {
        for b in &n.buses {
            if !connected.contains(&b.id) {
                out.push(Finding::warn("isolated bus", format!("bus {}", b.id)));
            }
        }
    }
    for b in &n.buses {
        if b.kind == BusType::Isolated {
            out.push(Finding::warn("bus declared isolated (type 4)", format!("bus {}", b.id)));
        }
    }

    if !n.buses.is_empty() && !n.has_declared_reference() {
        let subject = match n.reference_bus() {
            Some(id) => format!("bus {id}"),
            None => "none".into(),
        };
        out.push(Finding::warn("no reference bus declared, using lowest-id generator bus", subject));
    }
    out
}
