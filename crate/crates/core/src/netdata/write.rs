use std::fmt::Write as _;

use super::parse::units;
use super::Network;
use crate::pwlcost::CostSpec;

/// Finds a file value whose conversion reproduces `internal` bit for bit,
/// starting from the algebraic inverse `guess`.
fn exact_preimage(internal: f64, guess: f64, forward: impl Fn(f64) -> f64) -> f64 {
    if !internal.is_finite() || forward(guess) == internal {
        return guess;
    }
    let (mut lo, mut hi) = (guess, guess);
    for _ in 0..256 {
        lo = lo.next_down();
        if forward(lo) == internal {
            return lo;
        }
        hi = hi.next_up();
        if forward(hi) == internal {
            return hi;
        }
    }
    guess
}

fn num(v: f64) -> String {
    if v == f64::INFINITY {
        "Inf".into()
    } else if v == f64::NEG_INFINITY {
        "-Inf".into()
    } else {
        format!("{v:?}")
    }
}

/// Serializes a network as a Matpower case. Parsing the output reproduces
/// the network exactly.
pub fn write_case(net: &Network) -> String {
    let base = net.base_mva;
    let mw = |pu: f64| exact_preimage(pu, pu * base, |x| units::power_to_pu(x, base));
    let deg = |rad: f64| exact_preimage(rad, rad.to_degrees(), units::degrees_to_radians);

    let mut s = String::new();
    let _ = writeln!(s, "function mpc = {}", net.name);
    let _ = writeln!(s, "mpc.version = '2';");
    let _ = writeln!(s, "mpc.baseMVA = {};", num(base));

    let _ = writeln!(s, "\n%% bus data\n%\tbus_i\ttype\tPd\tQd\tGs\tBs\tarea\tVm\tVa\tbaseKV\tzone\tVmax\tVmin");
    let _ = writeln!(s, "mpc.bus = [");
    for b in &net.buses {
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t0\t0\t1\t1\t0\t230\t1\t{}\t{};",
            b.id,
            b.kind.code(),
            num(mw(b.demand.re)),
            num(mw(b.demand.im)),
            num(b.vmax),
            num(b.vmin)
        );
    }
    let _ = writeln!(s, "];");

    let _ = writeln!(s, "\n%% generator data\n%\tbus\tPg\tQg\tQmax\tQmin\tVg\tmBase\tstatus\tPmax\tPmin");
    let _ = writeln!(s, "mpc.gen = [");
    for g in &net.generators {
        let _ = writeln!(
            s,
            "\t{}\t0\t0\t{}\t{}\t1\t{}\t1\t{}\t{};",
            g.bus,
            num(mw(g.qmax)),
            num(mw(g.qmin)),
            num(base),
            num(mw(g.pmax)),
            num(mw(g.pmin))
        );
    }
    let _ = writeln!(s, "];");

    let _ = writeln!(
        s,
        "\n%% branch data\n%\tfbus\ttbus\tr\tx\tb\trateA\trateB\trateC\tratio\tangle\tstatus\tangmin\tangmax"
    );
    let _ = writeln!(s, "mpc.branch = [");
    for br in &net.branches {
        let rate = num(mw(br.rate));
        let _ = writeln!(
            s,
            "\t{}\t{}\t{}\t{}\t{}\t{rate}\t{rate}\t{rate}\t{}\t0\t1\t{}\t{};",
            br.from_bus,
            br.to_bus,
            num(br.series_impedance.re),
            num(br.series_impedance.im),
            num(br.charging),
            num(br.tap_ratio),
            num(deg(br.angmin)),
            num(deg(br.angmax))
        );
    }
    let _ = writeln!(s, "];");

    let _ = writeln!(s, "\n%% generator cost data\n%\tmodel\tstartup\tshutdown\tn\t...");
    let _ = writeln!(s, "mpc.gencost = [");
    for g in &net.generators {
        match &g.cost {
            CostSpec::Polynomial { a, b, c } => {
                let c2 = exact_preimage(*c, c / (base * base), |x| units::quadratic_to_pu(x, base));
                let c1 = exact_preimage(*b, b / base, |x| units::linear_to_pu(x, base));
                let _ = writeln!(s, "\t2\t0\t0\t3\t{}\t{}\t{};", num(c2), num(c1), num(*a));
            }
            CostSpec::Piecewise(curve) => {
                let _ = write!(s, "\t1\t0\t0\t{}", curve.len());
                for &(p, c) in curve.points() {
                    let _ = write!(s, "\t{}\t{}", num(mw(p)), num(c));
                }
                let _ = writeln!(s, ";");
            }
        }
    }
    let _ = writeln!(s, "];");
    s
}
