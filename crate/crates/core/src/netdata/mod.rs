//! Power-network case data: buses, branches, generators and their costs.
//!
//! Everything inside a [`Network`] is stored in per-unit on the case's
//! `baseMVA`, with angles in radians. Cases are read from and written to the
//! Matpower text format (see [`parse_case`] and [`write_case`]).

mod parse;
mod validate;
mod write;

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

use crate::pwlcost::CostSpec;

pub use parse::parse_case;
pub use validate::{validate_network, Finding, Severity};
pub use write::write_case;

/// Angle-difference bound used when a branch carries `angmin = angmax = 0`.
pub const DEFAULT_ANGLE_LIMIT: f64 = 30.0 * std::f64::consts::PI / 180.0;

/// Angle-difference bound substituted for bounds at or beyond 90 degrees.
pub const WIDE_ANGLE_LIMIT: f64 = 60.0 * std::f64::consts::PI / 180.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("case structure: {0}")]
    Structure(String),
    #[error("unsupported feature (line {line}): {feature}")]
    Unsupported { line: usize, feature: String },
    #[error("branch {from}-{to} has zero series impedance")]
    SingularBranch { from: usize, to: usize },
}

/// A complex quantity in per-unit.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ComplexPU {
    pub re: f64,
    pub im: f64,
}

impl ComplexPU {
    pub const ZERO: ComplexPU = ComplexPU { re: 0.0, im: 0.0 };

    pub fn new(re: f64, im: f64) -> Self {
        debug_assert!(re.is_finite() && im.is_finite(), "non-finite complex value");
        ComplexPU { re, im }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.re * self.re + self.im * self.im
    }

    pub fn norm(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(&self) -> Self {
        ComplexPU::new(self.re, -self.im)
    }

    /// Complex reciprocal, `None` for zero.
    pub fn recip(&self) -> Option<Self> {
        let d = self.norm_sqr();
        if d == 0.0 {
            return None;
        }
        Some(ComplexPU::new(self.re / d, -self.im / d))
    }

    pub fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl fmt::Display for ComplexPU {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.im < 0.0 {
            write!(f, "{}-{}i", self.re, -self.im)
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// Matpower bus type code.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum BusType {
    Pq,
    Pv,
    Reference,
    Isolated,
}

impl BusType {
    pub fn from_code(code: i64) -> Option<Self> {
        match code {
            1 => Some(BusType::Pq),
            2 => Some(BusType::Pv),
            3 => Some(BusType::Reference),
            4 => Some(BusType::Isolated),
            _ => None,
        }
    }

    pub fn code(self) -> i64 {
        match self {
            BusType::Pq => 1,
            BusType::Pv => 2,
            BusType::Reference => 3,
            BusType::Isolated => 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bus {
    pub id: usize,
    pub kind: BusType,
    pub vmin: f64,
    pub vmax: f64,
    /// Complex demand `S^d`.
    pub demand: ComplexPU,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from_bus: usize,
    pub to_bus: usize,
    /// Series impedance `r + jx`.
    pub series_impedance: ComplexPU,
    /// Total line-charging susceptance.
    pub charging: f64,
    /// Off-nominal tap ratio; `0` is read as `1`.
    pub tap_ratio: f64,
    /// Apparent-power limit in per-unit; `0` means unlimited.
    pub rate: f64,
    /// Angle-difference bounds in radians, as given in the case.
    pub angmin: f64,
    pub angmax: f64,
}

impl Branch {
    pub fn tap(&self) -> f64 {
        if self.tap_ratio == 0.0 {
            1.0
        } else {
            self.tap_ratio
        }
    }

    pub fn has_thermal_limit(&self) -> bool {
        self.rate > 0.0
    }

    /// Angle-difference bounds after normalization: absent bounds
    /// (`0, 0`) become `±30°`, bounds at or beyond `±90°` become `±60°`.
    pub fn angle_bounds(&self) -> (f64, f64) {
        if self.angmin == 0.0 && self.angmax == 0.0 {
            return (-DEFAULT_ANGLE_LIMIT, DEFAULT_ANGLE_LIMIT);
        }
        let right_angle = std::f64::consts::FRAC_PI_2;
        let lo = if self.angmin <= -right_angle {
            -WIDE_ANGLE_LIMIT
        } else {
            self.angmin
        };
        let hi = if self.angmax >= right_angle {
            WIDE_ANGLE_LIMIT
        } else {
            self.angmax
        };
        (lo, hi)
    }

    /// Admittances of the Π-model seen from each end.
    ///
    /// Returns `(own, mutual)` for the requested orientation, such that the
    /// complex flow leaving bus `a` toward bus `b` is
    /// `S_ab = V_a (own V_a + mutual V_b)^*`.
    pub fn pi_admittances(&self, from_side: bool) -> Result<(ComplexPU, ComplexPU), NetError> {
        let y = branch_admittance(self)?;
        let t = self.tap();
        let half_charging = 0.5 * self.charging;
        let mutual = ComplexPU::new(-y.re / t, -y.im / t);
        let own = if from_side {
            ComplexPU::new(y.re / (t * t), (y.im + half_charging) / (t * t))
        } else {
            ComplexPU::new(y.re, y.im + half_charging)
        };
        Ok((own, mutual))
    }
}

/// Series admittance `1 / (r + jx)` of a branch.
pub fn branch_admittance(b: &Branch) -> Result<ComplexPU, NetError> {
    b.series_impedance.recip().ok_or(NetError::SingularBranch {
        from: b.from_bus,
        to: b.to_bus,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Generator {
    pub bus: usize,
    pub pmin: f64,
    pub pmax: f64,
    pub qmin: f64,
    pub qmax: f64,
    pub cost: CostSpec,
}

/// A power network in per-unit.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub name: String,
    pub base_mva: f64,
    pub buses: Vec<Bus>,
    pub branches: Vec<Branch>,
    pub generators: Vec<Generator>,
    gens_at_bus: BTreeMap<usize, Vec<usize>>,
    bus_index: BTreeMap<usize, usize>,
}

impl Network {
    /// Assembles a network and its lookup indices. Dangling references are
    /// allowed here; [`validate_network`] reports them.
    pub fn new(
        name: impl Into<String>,
        base_mva: f64,
        buses: Vec<Bus>,
        branches: Vec<Branch>,
        generators: Vec<Generator>,
    ) -> Self {
        let mut gens_at_bus: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (k, g) in generators.iter().enumerate() {
            gens_at_bus.entry(g.bus).or_default().push(k);
        }
        let mut bus_index = BTreeMap::new();
        for (i, b) in buses.iter().enumerate() {
            bus_index.entry(b.id).or_insert(i);
        }
        Network {
            name: name.into(),
            base_mva,
            buses,
            branches,
            generators,
            gens_at_bus,
            bus_index,
        }
    }

    /// Generators connected at bus `id` (the set `G_i`).
    pub fn gens_at_bus(&self, id: usize) -> &[usize] {
        self.gens_at_bus.get(&id).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn gens_at_bus_map(&self) -> &BTreeMap<usize, Vec<usize>> {
        &self.gens_at_bus
    }

    /// Position of bus `id` in `buses`.
    pub fn bus_position(&self, id: usize) -> Option<usize> {
        self.bus_index.get(&id).copied()
    }

    /// The angle reference: the first type-3 bus, otherwise the lowest-id bus
    /// hosting a generator, otherwise the first bus.
    pub fn reference_bus(&self) -> Option<usize> {
        if let Some(b) = self.buses.iter().find(|b| b.kind == BusType::Reference) {
            return Some(b.id);
        }
        if let Some(id) = self
            .gens_at_bus
            .keys()
            .copied()
            .find(|id| self.bus_index.contains_key(id))
        {
            return Some(id);
        }
        self.buses.first().map(|b| b.id)
    }

    pub fn has_declared_reference(&self) -> bool {
        self.buses.iter().any(|b| b.kind == BusType::Reference)
    }

    pub fn total_demand(&self) -> ComplexPU {
        self.buses.iter().fold(ComplexPU::ZERO, |acc, b| {
            ComplexPU::new(acc.re + b.demand.re, acc.im + b.demand.im)
        })
    }

    pub fn to_mw(&self, pu: f64) -> f64 {
        pu * self.base_mva
    }

    pub fn to_pu(&self, mw: f64) -> f64 {
        mw / self.base_mva
    }
}
