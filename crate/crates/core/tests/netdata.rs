//! Case parsing: unit conversion, serialization round trips and error
//! reporting.

mod common;

use proptest::prelude::*;

use opfpwl::netdata::{parse_case, validate_network, write_case, Branch, Bus, BusType, ComplexPU, Generator, NetError, Network};
use opfpwl::pwlcost::{CostSpec, PwlCurve};

use common::{case_path, load};

#[test]
fn bundled_cases_round_trip_exactly() {
    let mut count = 0;
    for entry in std::fs::read_dir(common::data_dir()).unwrap() {
        let path = entry.unwrap().path();
        let net = parse_case(&std::fs::read_to_string(&path).unwrap()).unwrap();
        assert_eq!(parse_case(&write_case(&net)).unwrap(), net, "{}", path.display());
        assert!(validate_network(&net).iter().all(|f| !f.is_error()), "{}", path.display());
        count += 1;
    }
    assert!(count >= 9);
}

#[test]
fn powers_and_costs_are_per_unit() {
    let net = load("case2_pwl");
    assert_eq!(net.base_mva, 100.0);
    assert_eq!(net.buses[1].demand, ComplexPU::new(1.5, 0.3));
    assert_eq!(net.branches[0].rate, 1.1);
    assert_eq!(net.branches[0].angmax, 30f64.to_radians());
    let g = &net.generators[1];
    assert_eq!((g.pmin, g.pmax, g.qmin, g.qmax), (0.0, 2.0, -1.2, 1.2));
    let curve = g.cost.as_piecewise().unwrap();
    assert_eq!(curve.points(), &[(0.0, 100.0), (1.0, 3100.0), (2.0, 6600.0)]);

    // c2 p² + c1 p with p in MW equals c2·base² x² + c1·base x with x in p.u.
    let poly = load("case_poly2");
    let cost = &poly.generators[0].cost;
    for mw in [0.0, 37.5, 150.0] {
        let want = 0.02 * mw * mw + 10.0 * mw;
        assert!((cost.evaluate(mw / 100.0).unwrap() - want).abs() < 1e-9);
    }
}

#[test]
fn wide_angle_limits_fall_back() {
    let net = load("case5_pjm");
    let limit = 60f64.to_radians();
    assert!(net.branches.iter().all(|b| b.angle_bounds() == (-limit, limit)));
    let findings = validate_network(&net);
    assert!(findings.iter().any(|f| f.message.contains("angle bound")));
}

fn replace_in(name: &str, from: &str, to: &str) -> String {
    let text = std::fs::read_to_string(case_path(name)).unwrap();
    assert!(text.contains(from), "{from}");
    text.replacen(from, to, 1)
}

#[test]
fn malformed_input_is_reported() {
    let no_base = replace_in("case2_pwl", "mpc.baseMVA = 100;", "");
    assert!(matches!(parse_case(&no_base), Err(NetError::Structure(_))));

    let no_gencost = {
        let text = std::fs::read_to_string(case_path("case2_pwl")).unwrap();
        text[..text.find("%% generator cost data").unwrap()].to_string()
    };
    assert!(matches!(parse_case(&no_gencost), Err(NetError::Structure(_))));

    let short_row = replace_in("case2_pwl", "2	2	150	30	0	0	1	1	0	230	1	1.05	0.95;", "2	2	150;");
    match parse_case(&short_row) {
        Err(NetError::Parse { line, .. }) => assert_eq!(line, 10),
        other => panic!("expected a parse error, got {other:?}"),
    }

    let offline = replace_in("case2_pwl", "0	0	1	-30	30;", "0	0	0	-30	30;");
    assert!(matches!(parse_case(&offline), Err(NetError::Unsupported { .. })));

    let garbage = replace_in("case2_pwl", "150	30", "150	abc");
    assert!(parse_case(&garbage).is_err());
}

#[test]
fn dangling_references_are_validation_errors() {
    let mut net = load("case2_pwl");
    net.generators[0].bus = 99;
    let net = Network::new(net.name, net.base_mva, net.buses, net.branches, net.generators);
    assert!(validate_network(&net).iter().any(|f| f.is_error()));
}

fn arb_network() -> impl Strategy<Value = Network> {
    (2usize..6).prop_flat_map(|n| {
        let buses = prop::collection::vec((0.0..2.0f64, -0.5..0.5f64, 0.85..0.97f64, 1.03..1.15f64), n);
        let branches = prop::collection::vec(
            (0..n, 1..n, 0.0..0.05f64, 0.01..0.5f64, 0.0..0.2f64, prop::option::of(0.9..1.1f64), 0.0..5.0f64, 1.0..59.0f64),
            1..6,
        );
        let gens = prop::collection::vec(
            (0..n, 0.0..1.0f64, 0.1..3.0f64, prop::bool::ANY, prop::collection::vec(0.0..40.0f64, 2..5)),
            1..4,
        );
        (Just(n), buses, branches, gens)
    })
    .prop_map(|(n, buses, branches, gens)| {
        let ids: Vec<usize> = (0..n).map(|i| 3 * i + 2).collect();
        let buses = buses
            .into_iter()
            .enumerate()
            .map(|(i, (p, q, vmin, vmax))| Bus {
                id: ids[i],
                kind: if i == 0 { BusType::Reference } else { BusType::Pq },
                vmin,
                vmax,
                demand: ComplexPU::new(p, q),
            })
            .collect();
        let branches = branches
            .into_iter()
            .map(|(f, step, r, x, b, tap, rate, ang)| Branch {
                from_bus: ids[f],
                to_bus: ids[(f + step) % n],
                series_impedance: ComplexPU::new(r, x),
                charging: b,
                tap_ratio: tap.unwrap_or(0.0),
                rate,
                angmin: -ang.to_radians(),
                angmax: ang.to_radians(),
            })
            .collect();
        let generators = gens
            .into_iter()
            .map(|(bus, pmin, width, poly, slopes)| {
                let pmax = pmin + width;
                let cost = if poly {
                    CostSpec::Polynomial { a: slopes[0], b: slopes[1] * 100.0, c: slopes[0] * 10.0 }
                } else {
                    let mut s: Vec<f64> = slopes.clone();
                    s.sort_by(f64::total_cmp);
                    let step = width / s.len() as f64;
                    let mut pts = vec![(pmin, 0.0)];
                    for sl in s {
                        let &(p, c) = pts.last().unwrap();
                        pts.push((p + step, c + sl * 100.0 * step));
                    }
                    CostSpec::Piecewise(PwlCurve::new(pts).unwrap())
                };
                Generator { bus: ids[bus], pmin, pmax, qmin: -width, qmax: width, cost }
            })
            .collect();
        Network::new("random_case", 100.0, buses, branches, generators)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Exactness holds from parsed networks: not every per-unit value has a
    /// megawatt preimage that divides back to it bit for bit.
    #[test]
    fn written_cases_parse_back_identically(net in arb_network()) {
        let parsed = parse_case(&write_case(&net)).unwrap();
        prop_assert_eq!(parsed.buses.len(), net.buses.len());
        prop_assert!((parsed.generators[0].pmax - net.generators[0].pmax).abs() <= 1e-15 * net.generators[0].pmax.abs());
        prop_assert_eq!(parse_case(&write_case(&parsed)).unwrap(), parsed);
    }
}
