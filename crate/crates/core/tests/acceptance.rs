//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`cargo test --test acceptance`). Failing criteria
//! are reported, not raised, so the rest of the suite still runs; the exit
//! status is nonzero only when a criterion could not be evaluated at all.

use std::time::{Duration, Instant};

use evospread::bounds::{birth_death_survival, corollary1_upper, corollary4_lower, ring_lower, sbm_bounds};
use evospread::coupled::{simulate_coupled_ordered, simulate_coupled_seeded};
use evospread::diagnostics::jump_diagnostics;
use evospread::harness::figures::{compute_figure, fig4_config, fig5_config, fig6_gains, FigureOptions, FIG6_N};
use evospread::harness::{run, spearman, sweep, ExperimentConfig, GraphSpec, SweepAxis, Summary};
use evospread::oracle::{solve_birth_death, solve_exact};
use evospread::rng::stream;
use evospread::{simulate, ControlPolicy, ControlVector, Graph, SimOptions};
use rand::Rng;

const SEED: u64 = 2024;

type Outcome = Result<(bool, String), String>;

fn delta0() -> ControlPolicy {
    ControlPolicy::constant(ControlVector::delta(0, 1.0).unwrap())
}

fn ci(s: &Summary) -> String {
    format!("{:.3} [{:.3}, {:.3}]", s.mean, s.ci_lo, s.ci_hi)
}

fn oracle_agreement() -> Outcome {
    let g = Graph::path(2, 1.0).map_err(|e| e.to_string())?;
    let (et, ej) = solve_exact(&g, 0.8, &delta0()).map_err(|e| e.to_string())?.from_zero();
    let r = run(&ExperimentConfig::new(GraphSpec::Path { n: 2, alpha: 1.0 }, 0.8, delta0(), 100_000, SEED))
        .map_err(|e| e.to_string())?;
    let exact_ok = (et - 2.5).abs() < 1e-9 && (ej - 2.5).abs() < 1e-9;
    let zt = (r.time.mean - et) / r.time.stderr;
    let zj = (r.cost.mean - ej) / r.cost.stderr;
    let pass = exact_ok && zt.abs() <= 3.0 && zj.abs() <= 3.0;
    Ok((pass, format!("exact E[T]={et:.12} E[J]={ej:.12}; MC T {} z={zt:.2}, J z={zj:.2}", ci(&r.time))))
}

fn sandwich_fixtures() -> Result<Vec<Graph>, String> {
    let mut graphs = Vec::new();
    for n in 2..=6 {
        graphs.push(Graph::complete(n, 1.0).map_err(|e| e.to_string())?);
        graphs.push(Graph::path(n, 1.0).map_err(|e| e.to_string())?);
        graphs.push(Graph::star(n, 1.0).map_err(|e| e.to_string())?);
        if n >= 3 {
            graphs.push(Graph::ring(n, 1.0).map_err(|e| e.to_string())?);
        }
    }
    let mut rng = stream(SEED, 7);
    for _ in 0..20 {
        let n = rng.random_range(3..=6);
        let p = rng.random_range(0.3..0.9);
        graphs.push(Graph::erdos_renyi(n, p, 1.0, &mut rng).map_err(|e| e.to_string())?);
    }
    Ok(graphs)
}

fn exact_sandwich() -> Outcome {
    let graphs = sandwich_fixtures()?;
    let mut checked = 0;
    let mut worst = String::new();
    let mut pass = true;
    for g in &graphs {
        let pr = g.profiles_exact(12).map_err(|e| e.to_string())?;
        for beta in [0.6, 0.8, 0.95] {
            let t = solve_exact(g, beta, &delta0()).map_err(|e| e.to_string())?.from_zero().0;
            let hi = corollary1_upper(&pr.phi, beta, 1.0).map_err(|e| e.to_string())?.value;
            let lo = corollary4_lower(&pr.eta, 1, 1.0).map_err(|e| e.to_string())?.value;
            checked += 1;
            if !(lo <= t + 1e-9 && t <= hi + 1e-9) {
                pass = false;
                worst = format!("; violated on {:?} n={} beta={beta}: {lo} <= {t} <= {hi}", g.tag(), g.n());
            }
        }
    }
    Ok((pass, format!("{checked} graph/beta cases over {} graphs{worst}", graphs.len())))
}

fn fig3() -> Outcome {
    let fig = compute_figure(3, SEED, &FigureOptions::default()).map_err(|e| e.to_string())?;
    let table = &fig.tables[0].1;
    let at = |n: f64| table.rows.iter().find(|r| r.axis == n).map(|r| r.result.time);
    let big = at(1000.0).ok_or("n=1000 missing")?;
    let small = at(50.0).ok_or("n=50 missing")?;
    let ok_big = big.overlaps(35.12, 3.54);
    let ok_small = small.overlaps(20.56, 3.35);
    let failing = fig.consistency.iter().filter(|c| !c.pass).count();
    Ok((
        ok_big && ok_small && failing == 0,
        format!(
            "n=1000 T {} vs 35.12+-3.54 ({}); n=50 T {} vs 20.56+-3.35 ({}); bound flags failing {failing}/{}",
            ci(&big),
            if ok_big { "overlap" } else { "no overlap" },
            ci(&small),
            if ok_small { "overlap" } else { "no overlap" },
            fig.consistency.len()
        ),
    ))
}

fn fig4_and_5() -> Result<(Outcome, Outcome), String> {
    let constant = run(&fig4_config(2000, 200, SEED)).map_err(|e| e.to_string())?;
    let lower = sbm_bounds(0.8, 1.0, 2000, 0.4, 0.1, 5, 1.0).map_err(|e| e.to_string())?.0.value;
    let overlap = constant.time.overlaps(139.56, 12.89);
    let c4 = (
        overlap && constant.time.mean >= lower && (lower - 24.0).abs() < 1e-9,
        format!(
            "T {} vs 139.56+-12.89 ({}); sbm_lower {lower:.3}",
            ci(&constant.time),
            if overlap { "overlap" } else { "no overlap" }
        ),
    );
    let feedback = run(&fig5_config(2000, 0.25, 200, SEED)).map_err(|e| e.to_string())?;
    let overlap = feedback.time.overlaps(98.00, 3.96);
    let below = feedback.time.mean < constant.time.mean;
    let c5 = (
        overlap && below,
        format!(
            "feedback T {} vs 98.00+-3.96 ({}); constant T {:.3} ({})",
            ci(&feedback.time),
            if overlap { "overlap" } else { "no overlap" },
            constant.time.mean,
            if below { "feedback faster" } else { "feedback not faster" }
        ),
    );
    Ok((Ok(c4), Ok(c5)))
}

fn feedback_cost() -> Outcome {
    let r = run(&fig5_config(FIG6_N, 0.01, 200, SEED)).map_err(|e| e.to_string())?;
    let bound = (2.0 + 0.8) / (2.0 * 0.8 - 1.0);
    let pass = r.cost.mean <= bound + 3.0 * r.cost.stderr;
    Ok((pass, format!("n={FIG6_N} K=0.01: mean J {:.3} (se {:.3}) vs bound {bound:.4}", r.cost.mean, r.cost.stderr)))
}

fn coupling() -> Outcome {
    let mut rng = stream(SEED, 11);
    let (mut ordered, mut seeded) = (0, 0);
    for i in 0..1000u64 {
        let n = rng.random_range(2..=50);
        // dense enough that a connected draw is likely
        let floor = (2.0 * (n as f64).ln() / n as f64).min(0.9);
        let p = rng.random_range(floor..1.0);
        let g = Graph::erdos_renyi(n, p, 1.0, &mut rng).map_err(|e| e.to_string())?;
        let beta = rng.random_range(0.55..0.95);
        let gamma = rng.random_range(beta..=1.0);
        let mut y0 = vec![false; n];
        for y in y0.iter_mut() {
            *y = rng.random_bool(0.2);
        }
        let out = simulate_coupled_ordered(&g, beta, gamma, &delta0(), &vec![false; n], &y0, &mut stream(SEED, 1000 + i))
            .map_err(|e| e.to_string())?;
        ordered += out.dominated as usize;
        let mut seeds = vec![0];
        seeds.extend((1..n).filter(|_| rng.random_bool(0.1)));
        let out = simulate_coupled_seeded(&g, &delta0(), &vec![false; n], &seeds, &mut stream(SEED, 5000 + i))
            .map_err(|e| e.to_string())?;
        seeded += out.dominated as usize;
    }
    Ok((ordered == 1000 && seeded == 1000, format!("ordered {ordered}/1000 dominated, seeded {seeded}/1000 dominated")))
}

fn jump_identities() -> Outcome {
    let g = Graph::complete(10, 1.0).map_err(|e| e.to_string())?;
    let results: Vec<_> = (0..100_000u64)
        .map(|i| simulate(&g, 1.0, &delta0(), &[false; 10], &mut stream(SEED, i), SimOptions::recording()))
        .collect::<Result<_, _>>()
        .map_err(|e| e.to_string())?;
    let mut pass = true;
    let mut worst_z: f64 = 0.0;
    let mut checked = 0;
    for h in 1..=10 {
        let d = jump_diagnostics(&results, h).map_err(|e| e.to_string())?;
        if d.identity_samples > 1 {
            let z = (d.mean_identity - 1.0) / d.stderr_identity;
            worst_z = worst_z.max(z.abs());
            pass &= z.abs() <= 3.0;
            checked += 1;
        }
    }
    let first = jump_diagnostics(&results, 1).map_err(|e| e.to_string())?;
    let zc = (first.mean_c - 1.0) / first.stderr_c;
    pass &= zc.abs() <= 3.0;
    let nc: Vec<f64> = results.iter().map(|r| r.control_events as f64).collect();
    let j = Summary::of(&results.iter().map(|r| r.control_cost).collect::<Vec<_>>());
    let nc = Summary::of(&nc);
    pass &= nc.mean <= j.mean + 3.0 * j.stderr;
    Ok((
        pass,
        format!(
            "{checked} identity indices, max |z| {worst_z:.2}; mean c_1 {:.4} (z {zc:.2}); E[Nc] {:.4} vs mean J {:.4}",
            first.mean_c, nc.mean, j.mean
        ),
    ))
}

fn birth_death() -> Outcome {
    let mut betas: Vec<f64> = (0..9).map(|k| 0.55 + 0.05 * k as f64).collect();
    betas.push(0.99);
    let mut max_err: f64 = 0.0;
    let mut min_gap = f64::INFINITY;
    for &beta in &betas {
        let floor = (2.0 * beta - 1.0) / beta;
        for n in 1..=50 {
            for a in 1..=n {
                let closed = birth_death_survival(beta, n, a).map_err(|e| e.to_string())?;
                let solved = solve_birth_death(beta, n, a).map_err(|e| e.to_string())?;
                max_err = max_err.max((closed - solved).abs());
                min_gap = min_gap.min(closed - floor);
            }
        }
    }
    // the floor is the n -> infinity limit, reached to rounding for large n - a
    let floor_ok = min_gap >= -1e-12;
    Ok((max_err <= 1e-12 && floor_ok, format!("max |closed - solved| {max_err:.2e}; min value minus floor {min_gap:.2e}")))
}

fn ring_slow() -> Outcome {
    let ns = vec![100, 200, 400, 800];
    let ring = sweep(&ExperimentConfig::new(GraphSpec::Ring { n: 100, alpha: 1.0 }, 0.8, delta0(), 200, SEED), &SweepAxis::N(ns.clone()))
        .map_err(|e| e.to_string())?;
    let complete = sweep(
        &ExperimentConfig::new(GraphSpec::Complete { n: 100, alpha: 1.0 }, 0.8, delta0(), 200, SEED),
        &SweepAxis::N(ns.clone()),
    )
    .map_err(|e| e.to_string())?;
    let mut pass = true;
    let mut detail = Vec::new();
    for (r, c) in ring.rows.iter().zip(&complete.rows) {
        let t = &r.result.time;
        let bound = ring_lower(r.axis as usize, r.result.cost.mean).map_err(|e| e.to_string())?.value;
        pass &= t.mean + t.half_width() >= bound - t.half_width();
        detail.push(format!("n={} ring {:.1} (bound {bound:.3}) complete {:.1}", r.axis, t.mean, c.result.time.mean));
    }
    let ratios: Vec<f64> = ring.mean_times().iter().zip(complete.mean_times()).map(|(r, c)| r / c).collect();
    let increasing = ratios.windows(2).all(|w| w[1] > w[0]);
    pass &= increasing;
    Ok((pass, format!("{}; ring/complete ratio increasing: {increasing}", detail.join(", "))))
}

fn tradeoff() -> Outcome {
    let gains = fig6_gains();
    let table = sweep(&fig5_config(FIG6_N, gains[0], 200, SEED), &SweepAxis::K(gains.clone())).map_err(|e| e.to_string())?;
    let rt = spearman(&gains, &table.mean_times());
    let rj = spearman(&gains, &table.mean_costs());
    Ok((rt < 0.0 && rj > 0.0 && gains.len() >= 8, format!("{} gains: spearman(K, T) {rt:.3}, spearman(K, J) {rj:.3}", gains.len())))
}

fn report(id: u32, name: &str, limit: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let t0 = Instant::now();
    let outcome = f();
    let elapsed = t0.elapsed();
    print_line(id, name, limit, elapsed, outcome)
}

fn print_line(id: u32, name: &str, limit: Duration, elapsed: Duration, outcome: Outcome) -> bool {
    match outcome {
        Ok((pass, detail)) => {
            let in_time = elapsed <= limit;
            let verdict = if pass && in_time { "PASS" } else { "FAIL" };
            let timing = if in_time { String::new() } else { format!(" (over time limit {:?})", limit) };
            println!("{verdict} C{id} {name}: {detail}; {:.1}s{timing}", elapsed.as_secs_f64());
            true
        }
        Err(e) => {
            println!("FAIL C{id} {name}: error: {e}");
            false
        }
    }
}

fn main() {
    // `cargo test` passes harness flags such as `--list`; nothing to list here
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let min = |m: u64| Duration::from_secs(60 * m);
    let mut evaluated = true;
    evaluated &= report(1, "oracle agreement", Duration::from_secs(10), oracle_agreement);
    evaluated &= report(2, "exact sandwich", min(1), exact_sandwich);
    evaluated &= report(3, "complete-graph figure", min(15), fig3);
    let t0 = Instant::now();
    match fig4_and_5() {
        Ok((c4, c5)) => {
            let elapsed = t0.elapsed();
            evaluated &= print_line(4, "block-model constant control", min(30), elapsed, c4);
            evaluated &= print_line(5, "block-model feedback control", min(30), elapsed, c5);
        }
        Err(e) => {
            println!("FAIL C4 block-model constant control: error: {e}");
            println!("FAIL C5 block-model feedback control: error: {e}");
            evaluated = false;
        }
    }
    evaluated &= report(6, "feedback cost bound", min(30), feedback_cost);
    evaluated &= report(7, "coupling invariants", min(30), coupling);
    evaluated &= report(8, "jump identities", min(30), jump_identities);
    evaluated &= report(9, "birth-death survival", min(5), birth_death);
    evaluated &= report(10, "ring slow spread", min(30), ring_slow);
    evaluated &= report(11, "cost-time trade-off", min(30), tradeoff);
    if !evaluated {
        std::process::exit(1);
    }
}
