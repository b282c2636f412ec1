use super::{BuildError, Layout, PowerFlowKind};
use crate::modelir::{AcFlowPolar, Block, ModelIR};
use crate::netdata::Network;

const INF: f64 = f64::INFINITY;

fn midpoint(lo: f64, hi: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => 0.5 * (lo + hi),
        (true, false) => lo,
        (false, true) => hi,
        (false, false) => 0.0,
    }
}

/// Symmetric bounds from a thermal limit; unlimited branches get free flows.
fn flow_bounds(rate: f64) -> (f64, f64) {
    if rate > 0.0 {
        (-rate, rate)
    } else {
        (-INF, INF)
    }
}

/// Builds the power-flow part of a formulation: variables, bounds and
/// constraint blocks, with an empty objective.
///
/// Bus balance rows read `Σ gen − Σ outgoing flows = demand`. The reference
/// bus angle is pinned to zero in AC and DC.
pub fn build_power_flow(net: &Network, kind: PowerFlowKind) -> Result<(ModelIR, Layout), BuildError> {
    let mut m = ModelIR::new();
    let mut lay = Layout::default();
    let reference = net.reference_bus();
    let reactive = kind != PowerFlowKind::Dc;

    // generators
    for (k, g) in net.generators.iter().enumerate() {
        lay.pg.push(m.add_variable(format!("pg[{k}]"), g.pmin, g.pmax, midpoint(g.pmin, g.pmax)));
        if reactive {
            lay.qg.push(m.add_variable(format!("qg[{k}]"), g.qmin, g.qmax, midpoint(g.qmin, g.qmax)));
        }
    }

    // bus voltages
    for b in &net.buses {
        let pinned = Some(b.id) == reference;
        match kind {
            PowerFlowKind::Ac => {
                lay.vm.push(m.add_variable(format!("vm[{}]", b.id), b.vmin, b.vmax, 1.0));
                let (lo, hi) = if pinned { (0.0, 0.0) } else { (-INF, INF) };
                lay.va.push(m.add_variable(format!("va[{}]", b.id), lo, hi, 0.0));
            }
            PowerFlowKind::Soc => {
                lay.wii.push(m.add_variable(format!("w[{}]", b.id), b.vmin * b.vmin, b.vmax * b.vmax, 1.0));
            }
            PowerFlowKind::Dc => {
                let (lo, hi) = if pinned { (0.0, 0.0) } else { (-INF, INF) };
                lay.va.push(m.add_variable(format!("va[{}]", b.id), lo, hi, 0.0));
            }
        }
    }

    // branch flows
    for (e, br) in net.branches.iter().enumerate() {
        let (lo, hi) = flow_bounds(br.rate);
        let tag = format!("{e}:{}-{}", br.from_bus, br.to_bus);
        lay.p_from.push(m.add_variable(format!("p[{tag}]"), lo, hi, 0.0));
        lay.p_to.push(m.add_variable(format!("p[{tag}]rev"), lo, hi, 0.0));
        if reactive {
            lay.q_from.push(m.add_variable(format!("q[{tag}]"), lo, hi, 0.0));
            lay.q_to.push(m.add_variable(format!("q[{tag}]rev"), lo, hi, 0.0));
        }
        if kind == PowerFlowKind::Soc {
            let (i, j) = (bus(net, br.from_bus)?, bus(net, br.to_bus)?);
            let cap = net.buses[i].vmax * net.buses[j].vmax;
            lay.wr.push(m.add_variable(format!("wr[{tag}]"), 0.0, cap, 1.0));
            lay.wi.push(m.add_variable(format!("wi[{tag}]"), -cap, cap, 0.0));
        }
    }

    // power balance per bus
    for b in &net.buses {
        let mut p_terms: Vec<(usize, f64)> = net.gens_at_bus(b.id).iter().map(|&k| (lay.pg[k], 1.0)).collect();
        let mut q_terms: Vec<(usize, f64)> = if reactive {
            net.gens_at_bus(b.id).iter().map(|&k| (lay.qg[k], 1.0)).collect()
        } else {
            Vec::new()
        };
        for (e, br) in net.branches.iter().enumerate() {
            if br.from_bus == b.id {
                p_terms.push((lay.p_from[e], -1.0));
                if reactive {
                    q_terms.push((lay.q_from[e], -1.0));
                }
            }
            if br.to_bus == b.id {
                p_terms.push((lay.p_to[e], -1.0));
                if reactive {
                    q_terms.push((lay.q_to[e], -1.0));
                }
            }
        }
        let pd = b.demand.re;
        m.add_block(format!("balance_p[{}]", b.id), Block::Linear { terms: p_terms, lower: pd, upper: pd });
        if reactive {
            let qd = b.demand.im;
            m.add_block(format!("balance_q[{}]", b.id), Block::Linear { terms: q_terms, lower: qd, upper: qd });
        }
    }

    // Ohm's law, thermal and angle-difference limits per branch
    for (e, br) in net.branches.iter().enumerate() {
        let (i, j) = (bus(net, br.from_bus)?, bus(net, br.to_bus)?);
        let (own_f, mut_f) = br.pi_admittances(true)?;
        let (own_t, mut_t) = br.pi_admittances(false)?;
        let (amin, amax) = br.angle_bounds();
        let tag = format!("{e}:{}-{}", br.from_bus, br.to_bus);
        match kind {
            PowerFlowKind::Ac => {
                m.add_block(
                    format!("ohm[{tag}]"),
                    Block::AcFlow(AcFlowPolar {
                        vm_a: lay.vm[i],
                        vm_b: lay.vm[j],
                        va_a: lay.va[i],
                        va_b: lay.va[j],
                        p: lay.p_from[e],
                        q: lay.q_from[e],
                        g_own: own_f.re,
                        b_own: own_f.im,
                        g_mut: mut_f.re,
                        b_mut: mut_f.im,
                    }),
                );
                m.add_block(
                    format!("ohm[{tag}]rev"),
                    Block::AcFlow(AcFlowPolar {
                        vm_a: lay.vm[j],
                        vm_b: lay.vm[i],
                        va_a: lay.va[j],
                        va_b: lay.va[i],
                        p: lay.p_to[e],
                        q: lay.q_to[e],
                        g_own: own_t.re,
                        b_own: own_t.im,
                        g_mut: mut_t.re,
                        b_mut: mut_t.im,
                    }),
                );
            }
            PowerFlowKind::Soc => {
                let (wr, wi) = (lay.wr[e], lay.wi[e]);
                let (wf, wt) = (lay.wii[i], lay.wii[j]);
                // p = g_own W_aa + g_mut Re(W_ab) + b_mut Im(W_ab), W_ab = V_a V_b^*
                let lifted = |p: usize, q: usize, w_own: usize, own: (f64, f64), mutual: (f64, f64), sign: f64| {
                    let (go, bo) = own;
                    let (gm, bm) = mutual;
                    (
                        Block::Linear {
                            terms: vec![(w_own, go), (wr, gm), (wi, sign * bm), (p, -1.0)],
                            lower: 0.0,
                            upper: 0.0,
                        },
                        Block::Linear {
                            terms: vec![(w_own, -bo), (wr, -bm), (wi, sign * gm), (q, -1.0)],
                            lower: 0.0,
                            upper: 0.0,
                        },
                    )
                };
                let (pf, qf) = lifted(lay.p_from[e], lay.q_from[e], wf, (own_f.re, own_f.im), (mut_f.re, mut_f.im), 1.0);
                let (pt, qt) = lifted(lay.p_to[e], lay.q_to[e], wt, (own_t.re, own_t.im), (mut_t.re, mut_t.im), -1.0);
                m.add_block(format!("ohm_p[{tag}]"), pf);
                m.add_block(format!("ohm_q[{tag}]"), qf);
                m.add_block(format!("ohm_p[{tag}]rev"), pt);
                m.add_block(format!("ohm_q[{tag}]rev"), qt);
                m.add_block(format!("cone[{tag}]"), Block::SocCone { wr, wi, wii: wf, wjj: wt });
            }
            PowerFlowKind::Dc => {
                // p_ab = -(b / t)(θ_a - θ_b) with b the series susceptance
                let y = crate::netdata::branch_admittance(br)?;
                let k = y.im / br.tap();
                let (ta, tb) = (lay.va[i], lay.va[j]);
                m.add_block(
                    format!("ohm[{tag}]"),
                    Block::Linear { terms: vec![(lay.p_from[e], 1.0), (ta, k), (tb, -k)], lower: 0.0, upper: 0.0 },
                );
                m.add_block(
                    format!("ohm[{tag}]rev"),
                    Block::Linear { terms: vec![(lay.p_to[e], 1.0), (tb, k), (ta, -k)], lower: 0.0, upper: 0.0 },
                );
            }
        }
        if kind != PowerFlowKind::Dc && br.has_thermal_limit() {
            m.add_block(
                format!("thermal[{tag}]"),
                Block::ApparentPower { p: lay.p_from[e], q: lay.q_from[e], limit: br.rate },
            );
            m.add_block(
                format!("thermal[{tag}]rev"),
                Block::ApparentPower { p: lay.p_to[e], q: lay.q_to[e], limit: br.rate },
            );
        }
        match kind {
            PowerFlowKind::Ac | PowerFlowKind::Dc => {
                m.add_block(
                    format!("angle[{tag}]"),
                    Block::Linear { terms: vec![(lay.va[i], 1.0), (lay.va[j], -1.0)], lower: amin, upper: amax },
                );
            }
            PowerFlowKind::Soc => {
                // tan(amin) Re W <= Im W <= tan(amax) Re W
                let (wr, wi) = (lay.wr[e], lay.wi[e]);
                m.add_block(
                    format!("angle_hi[{tag}]"),
                    Block::Linear { terms: vec![(wi, 1.0), (wr, -amax.tan())], lower: -INF, upper: 0.0 },
                );
                m.add_block(
                    format!("angle_lo[{tag}]"),
                    Block::Linear { terms: vec![(wi, 1.0), (wr, -amin.tan())], lower: 0.0, upper: INF },
                );
            }
        }
    }
    Ok((m, lay))
}

fn bus(net: &Network, id: usize) -> Result<usize, BuildError> {
    net.bus_position(id)
        .ok_or_else(|| BuildError::InvalidNetwork(vec![format!("dangling branch endpoint: bus {id}")]))
}
