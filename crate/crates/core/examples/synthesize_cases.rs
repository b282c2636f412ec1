//! Generates the synthetic test networks bundled in `data/`.
//!
//! Buses are scattered in the unit square and joined by a nearest-neighbour
//! spanning tree plus short chords. Reactance grows with distance. Each
//! generator gets a convex piecewise-linear curve with 2 to 6 points, and
//! thermal limits are set from a DC power flow of a proportional dispatch.
//! Output is deterministic for a given seed.
//!
//! ```text
//! cargo run --example synthesize_cases -- [output-dir]
//! ```

use std::path::PathBuf;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use opfpwl::netdata::{write_case, Branch, Bus, BusType, ComplexPU, Generator, Network};
use opfpwl::pwlcost::{CostSpec, PwlCurve};

const BASE_MVA: f64 = 100.0;

struct Spec {
    name: &'static str,
    buses: usize,
    generators: usize,
    /// Inclusive range of breakpoint counts per curve.
    points: (usize, usize),
    seed: u64,
}

const SPECS: [Spec; 4] = [
    Spec { name: "case14_syn", buses: 14, generators: 4, points: (2, 6), seed: 14 },
    Spec { name: "case30_syn", buses: 30, generators: 6, points: (4, 6), seed: 30 },
    Spec { name: "case57_syn", buses: 57, generators: 14, points: (2, 6), seed: 57 },
    Spec { name: "case118_syn", buses: 118, generators: 28, points: (2, 6), seed: 118 },
];

fn distance(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

/// Edges of a nearest-neighbour spanning tree plus about `n / 3` chords.
fn topology(rng: &mut ChaCha8Rng, pos: &[(f64, f64)]) -> Vec<(usize, usize)> {
    let n = pos.len();
    let mut edges = Vec::new();
    for i in 1..n {
        let j = (0..i)
            .min_by(|&a, &b| distance(pos[i], pos[a]).total_cmp(&distance(pos[i], pos[b])))
            .unwrap();
        edges.push((j, i));
    }
    let mut candidates: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .filter(|e| !edges.contains(e))
        .collect();
    candidates.sort_by(|a, b| distance(pos[a.0], pos[a.1]).total_cmp(&distance(pos[b.0], pos[b.1])));
    let pool = candidates.len().min(n);
    let mut chords = 0;
    for &e in candidates.iter().take(pool) {
        if chords >= n / 3 {
            break;
        }
        if rng.gen_bool(0.5) {
            edges.push(e);
            chords += 1;
        }
    }
    edges
}

/// Convex curve over `[pmin, pmax]` (MW and $/h) with `count` points.
fn random_curve(rng: &mut ChaCha8Rng, pmin: f64, pmax: f64, count: usize) -> Vec<(f64, f64)> {
    let mut slope = rng.gen_range(10.0..40.0);
    let mut cost = rng.gen_range(0.0..200.0_f64).round();
    let step = (pmax - pmin) / (count - 1) as f64;
    let mut points = vec![(pmin, cost)];
    for l in 1..count {
        cost += (slope * step).round();
        points.push((pmin + step * l as f64, cost));
        slope += rng.gen_range(2.0..15.0);
    }
    points
}

/// DC branch flows in MW for net injections `inj` (MW), with bus 0 as slack.
fn dc_flows(n: usize, edges: &[(usize, usize)], x: &[f64], inj: &[f64]) -> Vec<f64> {
    let mut b = DMatrix::<f64>::zeros(n - 1, n - 1);
    for (&(i, j), &xe) in edges.iter().zip(x) {
        let y = 1.0 / xe;
        for (a, c) in [(i, j), (j, i)] {
            if a > 0 {
                b[(a - 1, a - 1)] += y;
                if c > 0 {
                    b[(a - 1, c - 1)] -= y;
                }
            }
        }
    }
    let p = DVector::from_iterator(n - 1, inj[1..].iter().map(|v| v / BASE_MVA));
    let theta = b.lu().solve(&p).expect("connected network");
    let angle = |k: usize| if k == 0 { 0.0 } else { theta[k - 1] };
    edges
        .iter()
        .zip(x)
        .map(|(&(i, j), &xe)| (angle(i) - angle(j)) / xe * BASE_MVA)
        .collect()
}

fn synthesize(spec: &Spec) -> Network {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.buses;
    let pos: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen(), rng.gen())).collect();
    let edges = topology(&mut rng, &pos);

    // loads in MW / MVAr
    let loads: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            if i > 0 && rng.gen_bool(0.7) {
                let p: f64 = rng.gen_range(10.0..45.0_f64).round();
                (p, (p * rng.gen_range(0.05..0.25)).round())
            } else {
                (0.0, 0.0)
            }
        })
        .collect();
    let total_load: f64 = loads.iter().map(|l| l.0).sum();

    // generators: bus 0 always hosts one
    let mut gen_buses = vec![0usize];
    while gen_buses.len() < spec.generators {
        let b = rng.gen_range(1..n);
        if !gen_buses.contains(&b) {
            gen_buses.push(b);
        }
    }
    let weights: Vec<f64> = gen_buses.iter().map(|_| rng.gen_range(0.5..1.5)).collect();
    let wsum: f64 = weights.iter().sum();
    let pmax: Vec<f64> = weights.iter().map(|w| (1.6 * total_load * w / wsum).round()).collect();
    let pmin: Vec<f64> = pmax
        .iter()
        .map(|&p| if rng.gen_bool(0.5) { 0.0 } else { (p * rng.gen_range(0.1..0.2)).round() })
        .collect();

    // branch parameters
    let x: Vec<f64> = edges.iter().map(|&(i, j)| 0.01 + 0.12 * distance(pos[i], pos[j])).collect();
    let r: Vec<f64> = x.iter().map(|xe| xe / rng.gen_range(5.0..10.0)).collect();
    let charging: Vec<f64> = x.iter().map(|xe| xe * rng.gen_range(0.1..0.3)).collect();

    // thermal limits from a proportional dispatch
    let cap: f64 = pmax.iter().sum();
    let mut inj: Vec<f64> = loads.iter().map(|l| -l.0).collect();
    for (k, &b) in gen_buses.iter().enumerate() {
        inj[b] += total_load * pmax[k] / cap;
    }
    let flows = dc_flows(n, &edges, &x, &inj);
    let rates: Vec<f64> = flows
        .iter()
        .map(|f| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                (1.5 * f.abs()).max(40.0).div_euclid(10.0) * 10.0 + 10.0
            }
        })
        .collect();

    let pu = |mw: f64| mw / BASE_MVA;
    let buses: Vec<Bus> = (0..n)
        .map(|i| Bus {
            id: i + 1,
            kind: if i == 0 {
                BusType::Reference
            } else if gen_buses.contains(&i) {
                BusType::Pv
            } else {
                BusType::Pq
            },
            vmin: 0.94,
            vmax: 1.06,
            demand: ComplexPU::new(pu(loads[i].0), pu(loads[i].1)),
        })
        .collect();
    let branches: Vec<Branch> = edges
        .iter()
        .enumerate()
        .map(|(e, &(i, j))| Branch {
            from_bus: i + 1,
            to_bus: j + 1,
            series_impedance: ComplexPU::new(r[e], x[e]),
            charging: charging[e],
            tap_ratio: 0.0,
            rate: pu(rates[e]),
            angmin: (-30.0f64).to_radians(),
            angmax: 30.0f64.to_radians(),
        })
        .collect();
    let generators: Vec<Generator> = gen_buses
        .iter()
        .enumerate()
        .map(|(k, &b)| {
            let count = rng.gen_range(spec.points.0..=spec.points.1);
            let points = random_curve(&mut rng, pmin[k], pmax[k], count)
                .into_iter()
                .map(|(p, c)| (pu(p), c))
                .collect();
            Generator {
                bus: b + 1,
                pmin: pu(pmin[k]),
                pmax: pu(pmax[k]),
                qmin: pu(-0.4 * pmax[k]),
                qmax: pu(0.5 * pmax[k]),
                cost: CostSpec::Piecewise(PwlCurve::new(points).expect("at least two points")),
            }
        })
        .collect();
    Network::new(spec.name, BASE_MVA, buses, branches, generators)
}

fn main() -> anyhow::Result<()> {
    let dir: PathBuf = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(concat!(env!("CARGO_MANIFEST_DIR"), "/data")));
    std::fs::create_dir_all(&dir)?;
    for spec in &SPECS {
        let net = synthesize(spec);
        let path = dir.join(format!("{}.m", spec.name));
        std::fs::write(&path, write_case(&net))?;
        println!(
            "{}: {} buses, {} branches, {} generators",
            path.display(),
            net.buses.len(),
            net.branches.len(),
            net.generators.len()
        );
    }
    Ok(())
}
