//! Convex piecewise-linear generator costs.
//!
//! A curve is a sequence of `(power, cost)` breakpoints with strictly
//! increasing power. Segment `l` (0-based) joins points `l` and `l + 1`;
//! its slope and intercept are stored alongside the points so the max-form
//! `max_l { slope_l x + intercept_l }` can be evaluated directly.
//!
//! Besides the max-form, this module exposes the values the interpolation
//! (`λ`), bin (`Δ`) and excess (`Φ`) encodings take at a given dispatch.
//! The formulation builders use them to seed auxiliary variables.

use thiserror::Error;

/// Default tolerance for merging adjacent segments with nearly equal slopes.
pub const DEFAULT_SLOPE_TOL: f64 = 1e-7;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PwlError {
    #[error("a cost curve needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("cost curve point {index} is not finite")]
    NonFinite { index: usize },
    #[error("degenerate segment: power coordinate of point {index} does not increase")]
    DegenerateSegment { index: usize },
    #[error("cost curve is not convex at breakpoint {index} (slope {left} then {right})")]
    NonConvex { index: usize, left: f64, right: f64 },
    #[error("{x} lies outside the curve domain [{lo}, {hi}]")]
    Domain { x: f64, lo: f64, hi: f64 },
    #[error("invalid generator bounds [{pmin}, {pmax}]")]
    InvalidBounds { pmin: f64, pmax: f64 },
}

/// A violated data assumption on a curve relative to its generator bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Violation {
    /// `pmin` does not fall in the first segment.
    LowerBoundOutsideFirstSegment,
    /// `pmax` does not fall in the last segment.
    UpperBoundOutsideLastSegment,
    /// Slopes of segments `segment - 1` and `segment` are not strictly increasing.
    SlopesNotIncreasing { segment: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct PwlCurve {
    points: Vec<(f64, f64)>,
    slopes: Vec<f64>,
    intercepts: Vec<f64>,
    validated: bool,
}

impl PwlCurve {
    /// Builds a curve from raw breakpoints. Checks structure only (point
    /// count, finiteness, increasing power); convexity is checked by
    /// [`check_assumptions`] and [`preprocess`].
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self, PwlError> {
        for (index, &(p, c)) in points.iter().enumerate() {
            if !p.is_finite() || !c.is_finite() {
                return Err(PwlError::NonFinite { index });
            }
        }
        let (slopes, intercepts) = derive_slopes_intercepts(&points)?;
        Ok(PwlCurve {
            points,
            slopes,
            intercepts,
            validated: false,
        })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn intercepts(&self) -> &[f64] {
        &self.intercepts
    }

    /// Number of breakpoints, `p_k`.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_validated(&self) -> bool {
        self.validated
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn min_cost(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }

    pub fn max_cost(&self) -> f64 {
        self.points.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Marks the curve validated if it satisfies every assumption for the
    /// given generator bounds.
    pub fn validate(mut self, pmin: f64, pmax: f64) -> Result<Self, Vec<Violation>> {
        let violations = check_assumptions(&self, pmin, pmax);
        if violations.is_empty() {
            self.validated = true;
            Ok(self)
        } else {
            Err(violations)
        }
    }

    /// Index of the segment containing `x` (the first one for breakpoints).
    fn segment_of(&self, x: f64) -> usize {
        let last = self.slopes.len() - 1;
        self.points[1..]
            .iter()
            .position(|&(p, _)| x <= p)
            .unwrap_or(last)
            .min(last)
    }

    fn check_domain(&self, x: f64) -> Result<(), PwlError> {
        let (lo, hi) = self.domain();
        if x < lo || x > hi || x.is_nan() {
            return Err(PwlError::Domain { x, lo, hi });
        }
        Ok(())
    }

    /// Convex-combination weights over the points for dispatch `x`: at most
    /// two adjacent nonzero entries.
    pub fn lambda_weights(&self, x: f64) -> Result<Vec<f64>, PwlError> {
        self.check_domain(x)?;
        let l = self.segment_of(x);
        let (p0, _) = self.points[l];
        let (p1, _) = self.points[l + 1];
        let t = (x - p0) / (p1 - p0);
        let mut w = vec![0.0; self.points.len()];
        w[l] = 1.0 - t;
        w[l + 1] = t;
        Ok(w)
    }

    /// Greedy bin filling: the power taken from each segment for dispatch `x`.
    pub fn delta_bins(&self, x: f64) -> Result<Vec<f64>, PwlError> {
        self.check_domain(x)?;
        let base = self.points[0].0;
        let mut remaining = x - base;
        Ok(self
            .points
            .windows(2)
            .map(|w| {
                let take = remaining.clamp(0.0, w[1].0 - w[0].0);
                remaining -= take;
                take
            })
            .collect())
    }

    /// Excess of `x` over each breakpoint that starts a segment after the
    /// first: `max(0, x - p_l)` for `l = 1..len-2`.
    pub fn phi_excess(&self, x: f64) -> Result<Vec<f64>, PwlError> {
        self.check_domain(x)?;
        Ok(self.points[1..self.points.len() - 1]
            .iter()
            .map(|&(p, _)| (x - p).max(0.0))
            .collect())
    }
}

/// A generator cost function.
#[derive(Debug, Clone, PartialEq)]
pub enum CostSpec {
    /// `c x² + b x + a`, with `x` in per-unit.
    Polynomial { a: f64, b: f64, c: f64 },
    Piecewise(PwlCurve),
}

impl CostSpec {
    pub fn evaluate(&self, x: f64) -> Result<f64, PwlError> {
        match self {
            CostSpec::Polynomial { a, b, c } => Ok(evaluate_polynomial(*a, *b, *c, x)),
            CostSpec::Piecewise(curve) => evaluate(curve, x),
        }
    }

    pub fn as_piecewise(&self) -> Option<&PwlCurve> {
        match self {
            CostSpec::Piecewise(c) => Some(c),
            CostSpec::Polynomial { .. } => None,
        }
    }
}

/// Slopes and intercepts of consecutive segments.
pub fn derive_slopes_intercepts(points: &[(f64, f64)]) -> Result<(Vec<f64>, Vec<f64>), PwlError> {
    if points.len() < 2 {
        return Err(PwlError::TooFewPoints(points.len()));
    }
    let mut slopes = Vec::with_capacity(points.len() - 1);
    let mut intercepts = Vec::with_capacity(points.len() - 1);
    for (i, w) in points.windows(2).enumerate() {
        let (p0, c0) = w[0];
        let (p1, c1) = w[1];
        if p1 <= p0 {
            return Err(PwlError::DegenerateSegment { index: i + 1 });
        }
        let slope = (c1 - c0) / (p1 - p0);
        slopes.push(slope);
        intercepts.push(c1 - slope * p1);
    }
    Ok((slopes, intercepts))
}

/// Lists the violated assumptions of `curve` for bounds `[pmin, pmax]`.
///
/// For a fixed generator (`pmin == pmax`) the curve must be a single segment
/// containing the set point; the strict inequalities cannot hold there.
pub fn check_assumptions(curve: &PwlCurve, pmin: f64, pmax: f64) -> Vec<Violation> {
    let pts = &curve.points;
    let n = pts.len();
    let mut out = Vec::new();
    if pmin == pmax {
        if pmin < pts[0].0 || (n > 2 && pmin >= pts[1].0) {
            out.push(Violation::LowerBoundOutsideFirstSegment);
        }
        if pmax > pts[n - 1].0 || (n > 2 && pmax <= pts[n - 2].0) {
            out.push(Violation::UpperBoundOutsideLastSegment);
        }
    } else {
        if !(pts[0].0 <= pmin && pmin < pts[1].0) {
            out.push(Violation::LowerBoundOutsideFirstSegment);
        }
        if !(pts[n - 2].0 < pmax && pmax <= pts[n - 1].0) {
            out.push(Violation::UpperBoundOutsideLastSegment);
        }
    }
    for (l, w) in curve.slopes.windows(2).enumerate() {
        if w[0] >= w[1] {
            out.push(Violation::SlopesNotIncreasing { segment: l + 1 });
        }
    }
    out
}

/// Cleans a convex curve so that it satisfies [`check_assumptions`] for
/// `[pmin, pmax]`.
///
/// Rules are applied in order: the end segments are extended along their
/// own slopes to cover the bounds, segments lying entirely outside the
/// bounds are dropped, and adjacent segments whose slopes differ by at most
/// `slope_tol` are merged. Slopes that decrease by more than `slope_tol` are
/// rejected as non-convex.
pub fn preprocess(curve: &PwlCurve, pmin: f64, pmax: f64, slope_tol: f64) -> Result<PwlCurve, PwlError> {
    if !(pmin <= pmax) || !pmin.is_finite() || !pmax.is_finite() {
        return Err(PwlError::InvalidBounds { pmin, pmax });
    }
    for (l, w) in curve.slopes.windows(2).enumerate() {
        if w[1] < w[0] - slope_tol {
            return Err(PwlError::NonConvex {
                index: l + 1,
                left: w[0],
                right: w[1],
            });
        }
    }

    let mut pts = curve.points.clone();
    let slopes = &curve.slopes;

    // extend
    let first = pts[0];
    if pmin < first.0 {
        pts[0] = (pmin, first.1 + slopes[0] * (pmin - first.0));
    }
    let n = pts.len();
    let last = pts[n - 1];
    if last.0 < pmax {
        pts[n - 1] = (pmax, last.1 + slopes[slopes.len() - 1] * (pmax - last.0));
    }

    // trim
    if pmin == pmax {
        let l = pts
            .windows(2)
            .position(|w| w[0].0 <= pmin && pmin <= w[1].0)
            .expect("extended curve covers the set point");
        pts = vec![pts[l], pts[l + 1]];
    } else {
        let start = pts
            .windows(2)
            .position(|w| pmin < w[1].0)
            .unwrap_or(pts.len() - 2);
        pts.drain(..start);
        let keep = pts
            .iter()
            .rposition(|&(p, _)| p < pmax)
            .map_or(2, |i| (i + 2).max(2))
            .min(pts.len());
        pts.truncate(keep);
    }

    // merge
    loop {
        let (slopes, _) = derive_slopes_intercepts(&pts)?;
        match slopes.windows(2).position(|w| (w[1] - w[0]).abs() <= slope_tol) {
            Some(l) => {
                pts.remove(l + 1);
            }
            None => break,
        }
    }

    let out = PwlCurve::new(pts)?;
    out.validate(pmin, pmax).map_err(|v| {
        // The rules above establish every assumption; reaching this means
        // slopes decreased within tolerance without being merged.
        let segment = v
            .iter()
            .find_map(|x| match x {
                Violation::SlopesNotIncreasing { segment } => Some(*segment),
                _ => None,
            })
            .unwrap_or(1);
        PwlError::NonConvex {
            index: segment,
            left: f64::NAN,
            right: f64::NAN,
        }
    })
}

/// Max-form evaluation `max_l { slope_l x + intercept_l }` on the curve domain.
pub fn evaluate(curve: &PwlCurve, x: f64) -> Result<f64, PwlError> {
    curve.check_domain(x)?;
    Ok(curve
        .slopes
        .iter()
        .zip(&curve.intercepts)
        .map(|(s, b)| s * x + b)
        .fold(f64::NEG_INFINITY, f64::max))
}

pub fn evaluate_polynomial(a: f64, b: f64, c: f64, x: f64) -> f64 {
    c * x * x + b * x + a
}
