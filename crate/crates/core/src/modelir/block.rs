//! Constraint kinds with hand-derived first and second derivatives.

/// Polar AC flow leaving bus `a` toward bus `b` on one branch orientation.
///
/// Rows are `P(v, θ) - p = 0` and `Q(v, θ) - q = 0` with
///
/// ```text
/// P = g_own v_a² + v_a v_b ( g_mut cos(θ_a-θ_b) + b_mut sin(θ_a-θ_b))
/// Q = -b_own v_a² + v_a v_b ( g_mut sin(θ_a-θ_b) - b_mut cos(θ_a-θ_b))
/// ```
///
/// i.e. `S_ab = V_a (Y_own V_a + Y_mut V_b)^*`.
#[derive(Debug, Clone, PartialEq)]
pub struct AcFlowPolar {
    pub vm_a: usize,
    pub vm_b: usize,
    pub va_a: usize,
    pub va_b: usize,
    pub p: usize,
    pub q: usize,
    pub g_own: f64,
    pub b_own: f64,
    pub g_mut: f64,
    pub b_mut: f64,
}

/// Structured constraint payloads.
#[derive(Debug, Clone, PartialEq)]
pub enum Block {
    /// `lower <= Σ a_j x_j <= upper`; an equality when the bounds coincide.
    Linear {
        terms: Vec<(usize, f64)>,
        lower: f64,
        upper: f64,
    },
    /// `lower <= Σ q_t x_i x_j + Σ a_j x_j <= upper`.
    Quadratic {
        quadratic: Vec<(usize, usize, f64)>,
        linear: Vec<(usize, f64)>,
        lower: f64,
        upper: f64,
    },
    /// Rotated cone `wr² + wi² - wii wjj <= 0`.
    SocCone {
        wr: usize,
        wi: usize,
        wii: usize,
        wjj: usize,
    },
    /// Two equality rows (active, reactive).
    AcFlow(AcFlowPolar),
    /// `p² + q² <= limit²`.
    ApparentPower { p: usize, q: usize, limit: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BlockKind {
    LinearEq,
    LinearIneq,
    QuadraticIneq,
    SocCone,
    AcFlowPolar,
    ApparentPowerLimit,
}

impl BlockKind {
    pub const ALL: [BlockKind; 6] = [
        BlockKind::LinearEq,
        BlockKind::LinearIneq,
        BlockKind::QuadraticIneq,
        BlockKind::SocCone,
        BlockKind::AcFlowPolar,
        BlockKind::ApparentPowerLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BlockKind::LinearEq => "LinearEq",
            BlockKind::LinearIneq => "LinearIneq",
            BlockKind::QuadraticIneq => "QuadraticIneq",
            BlockKind::SocCone => "SocCone",
            BlockKind::AcFlowPolar => "AcFlowPolar",
            BlockKind::ApparentPowerLimit => "ApparentPowerLimit",
        }
    }
}

/// Collects lower-triangle Hessian entries, doubling off-diagonal second
/// derivatives whose two variables alias the same index.
struct HessSink<'a> {
    pattern: Option<&'a mut Vec<(usize, usize)>>,
    values: Option<(&'a mut [f64], usize)>,
}

impl HessSink<'_> {
    fn push(&mut self, i: usize, j: usize, value: f64) {
        if let Some(p) = self.pattern.as_deref_mut() {
            p.push((i.max(j), i.min(j)));
        }
        if let Some((vals, pos)) = self.values.as_mut() {
            vals[*pos] = value;
            *pos += 1;
        }
    }

    fn diag(&mut self, i: usize, value: f64) {
        self.push(i, i, value);
    }

    fn cross(&mut self, i: usize, j: usize, value: f64) {
        let v = if i == j { 2.0 * value } else { value };
        self.push(i, j, v);
    }
}

impl Block {
    pub fn kind(&self) -> BlockKind {
        match self {
            Block::Linear { lower, upper, .. } if lower == upper => BlockKind::LinearEq,
            Block::Linear { .. } => BlockKind::LinearIneq,
            Block::Quadratic { .. } => BlockKind::QuadraticIneq,
            Block::SocCone { .. } => BlockKind::SocCone,
            Block::AcFlow(_) => BlockKind::AcFlowPolar,
            Block::ApparentPower { .. } => BlockKind::ApparentPowerLimit,
        }
    }

    pub fn n_rows(&self) -> usize {
        match self {
            Block::AcFlow(_) => 2,
            _ => 1,
        }
    }

    pub fn row_bounds(&self, out: &mut Vec<(f64, f64)>) {
        match self {
            Block::Linear { lower, upper, .. } | Block::Quadratic { lower, upper, .. } => {
                out.push((*lower, *upper))
            }
            Block::SocCone { .. } => out.push((f64::NEG_INFINITY, 0.0)),
            Block::AcFlow(_) => {
                out.push((0.0, 0.0));
                out.push((0.0, 0.0));
            }
            Block::ApparentPower { limit, .. } => out.push((f64::NEG_INFINITY, limit * limit)),
        }
    }

    /// Every variable index the block references.
    pub fn variables(&self) -> Vec<usize> {
        match self {
            Block::Linear { terms, .. } => terms.iter().map(|t| t.0).collect(),
            Block::Quadratic { quadratic, linear, .. } => quadratic
                .iter()
                .flat_map(|&(i, j, _)| [i, j])
                .chain(linear.iter().map(|t| t.0))
                .collect(),
            Block::SocCone { wr, wi, wii, wjj } => vec![*wr, *wi, *wii, *wjj],
            Block::AcFlow(f) => vec![f.vm_a, f.vm_b, f.va_a, f.va_b, f.p, f.q],
            Block::ApparentPower { p, q, .. } => vec![*p, *q],
        }
    }

    pub fn eval(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Block::Linear { terms, .. } => out[0] = terms.iter().map(|&(j, a)| a * x[j]).sum(),
            Block::Quadratic { quadratic, linear, .. } => {
                out[0] = quadratic.iter().map(|&(i, j, c)| c * x[i] * x[j]).sum::<f64>()
                    + linear.iter().map(|&(j, a)| a * x[j]).sum::<f64>()
            }
            Block::SocCone { wr, wi, wii, wjj } => {
                out[0] = x[*wr] * x[*wr] + x[*wi] * x[*wi] - x[*wii] * x[*wjj]
            }
            Block::AcFlow(f) => {
                let (p, q) = f.flows(x);
                out[0] = p - x[f.p];
                out[1] = q - x[f.q];
            }
            Block::ApparentPower { p, q, .. } => out[0] = x[*p] * x[*p] + x[*q] * x[*q],
        }
    }

    /// Jacobian sparsity as `(local_row, column)`; the order matches
    /// [`Block::jacobian_values`].
    pub fn jacobian_pattern(&self, out: &mut Vec<(usize, usize)>) {
        match self {
            Block::Linear { terms, .. } => out.extend(terms.iter().map(|t| (0, t.0))),
            Block::Quadratic { quadratic, linear, .. } => {
                for &(i, j, _) in quadratic {
                    out.push((0, i));
                    out.push((0, j));
                }
                out.extend(linear.iter().map(|t| (0, t.0)));
            }
            Block::SocCone { wr, wi, wii, wjj } => {
                out.extend([(0, *wr), (0, *wi), (0, *wii), (0, *wjj)]);
            }
            Block::AcFlow(f) => {
                for row in 0..2 {
                    out.extend([(row, f.vm_a), (row, f.vm_b), (row, f.va_a), (row, f.va_b)]);
                    out.push((row, if row == 0 { f.p } else { f.q }));
                }
            }
            Block::ApparentPower { p, q, .. } => out.extend([(0, *p), (0, *q)]),
        }
    }

    pub fn jacobian_values(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Block::Linear { terms, .. } => {
                for (o, &(_, a)) in out.iter_mut().zip(terms) {
                    *o = a;
                }
            }
            Block::Quadratic { quadratic, linear, .. } => {
                let mut k = 0;
                for &(i, j, c) in quadratic {
                    out[k] = c * x[j];
                    out[k + 1] = c * x[i];
                    k += 2;
                }
                for &(_, a) in linear {
                    out[k] = a;
                    k += 1;
                }
            }
            Block::SocCone { wr, wi, wii, wjj } => {
                out[0] = 2.0 * x[*wr];
                out[1] = 2.0 * x[*wi];
                out[2] = -x[*wjj];
                out[3] = -x[*wii];
            }
            Block::AcFlow(f) => {
                let t = f.terms(x);
                let (va, vb) = (x[f.vm_a], x[f.vm_b]);
                // active row
                out[0] = 2.0 * f.g_own * va + vb * t.u;
                out[1] = va * t.u;
                out[2] = -va * vb * t.w;
                out[3] = va * vb * t.w;
                out[4] = -1.0;
                // reactive row
                out[5] = -2.0 * f.b_own * va + vb * t.w;
                out[6] = va * t.w;
                out[7] = va * vb * t.u;
                out[8] = -va * vb * t.u;
                out[9] = -1.0;
            }
            Block::ApparentPower { p, q, .. } => {
                out[0] = 2.0 * x[*p];
                out[1] = 2.0 * x[*q];
            }
        }
    }

    /// Lower-triangle Hessian sparsity; the order matches
    /// [`Block::hessian_values`]. Linear blocks contribute nothing.
    pub fn hessian_pattern(&self, out: &mut Vec<(usize, usize)>) {
        let mut sink = HessSink { pattern: Some(out), values: None };
        self.hessian_impl(&[], &[], &mut sink);
    }

    /// Second derivatives weighted by the block's row multipliers `duals`.
    pub fn hessian_values(&self, x: &[f64], duals: &[f64], out: &mut [f64]) {
        let mut sink = HessSink { pattern: None, values: Some((out, 0)) };
        self.hessian_impl(x, duals, &mut sink);
    }

    fn hessian_impl(&self, x: &[f64], duals: &[f64], sink: &mut HessSink<'_>) {
        let pattern_only = x.is_empty();
        let dual = |r: usize| if pattern_only { 0.0 } else { duals[r] };
        match self {
            Block::Linear { .. } => {}
            Block::Quadratic { quadratic, .. } => {
                let y = dual(0);
                for &(i, j, c) in quadratic {
                    if i == j {
                        sink.diag(i, 2.0 * c * y);
                    } else {
                        sink.cross(i, j, c * y);
                    }
                }
            }
            Block::SocCone { wr, wi, wii, wjj } => {
                let y = dual(0);
                sink.diag(*wr, 2.0 * y);
                sink.diag(*wi, 2.0 * y);
                sink.cross(*wii, *wjj, -y);
            }
            Block::ApparentPower { p, q, .. } => {
                let y = dual(0);
                sink.diag(*p, 2.0 * y);
                sink.diag(*q, 2.0 * y);
            }
            Block::AcFlow(f) => {
                let (yp, yq) = (dual(0), dual(1));
                let (va, vb, u, w) = if pattern_only {
                    (0.0, 0.0, 0.0, 0.0)
                } else {
                    let t = f.terms(x);
                    (x[f.vm_a], x[f.vm_b], t.u, t.w)
                };
                let (ia, ib, ta, tb) = (f.vm_a, f.vm_b, f.va_a, f.va_b);
                // second derivatives of P (weight yp) and Q (weight yq)
                sink.diag(ia, yp * 2.0 * f.g_own + yq * (-2.0 * f.b_own));
                sink.cross(ia, ib, yp * u + yq * w);
                sink.cross(ia, ta, yp * (-vb * w) + yq * (vb * u));
                sink.cross(ia, tb, yp * (vb * w) + yq * (-vb * u));
                sink.cross(ib, ta, yp * (-va * w) + yq * (va * u));
                sink.cross(ib, tb, yp * (va * w) + yq * (-va * u));
                sink.diag(ta, yp * (-va * vb * u) + yq * (-va * vb * w));
                sink.cross(ta, tb, yp * (va * vb * u) + yq * (va * vb * w));
                sink.diag(tb, yp * (-va * vb * u) + yq * (-va * vb * w));
            }
        }
    }
}

pub(crate) struct FlowTerms {
    /// `g_mut cos + b_mut sin`
    pub u: f64,
    /// `g_mut sin - b_mut cos`
    pub w: f64,
}

impl AcFlowPolar {
    pub(crate) fn terms(&self, x: &[f64]) -> FlowTerms {
        let (s, c) = (x[self.va_a] - x[self.va_b]).sin_cos();
        FlowTerms {
            u: self.g_mut * c + self.b_mut * s,
            w: self.g_mut * s - self.b_mut * c,
        }
    }

    /// `(P, Q)` at the voltage part of `x`.
    pub fn flows(&self, x: &[f64]) -> (f64, f64) {
        let t = self.terms(x);
        let (va, vb) = (x[self.vm_a], x[self.vm_b]);
        (
            self.g_own * va * va + va * vb * t.u,
            -self.b_own * va * va + va * vb * t.w,
        )
    }
}
