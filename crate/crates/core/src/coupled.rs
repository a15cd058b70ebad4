//! Coupled pairs of processes on a common probability space.
//!
//! Both constructions share the link clocks of the two processes, so the
//! second process dominates the first at every event time. They are meant
//! for small graphs and scan all links per event.

use rand::Rng;
use rand_distr::Exp1;

use crate::control::ControlPolicy;
use crate::dynamics::{check_beta, check_setup, Configuration, SimError, SimResult, DEFAULT_MAX_EVENTS};
use crate::graph::Graph;

/// Results of a coupled run.
#[derive(Debug, Clone, PartialEq)]
pub struct CoupledOutcome {
    pub x: SimResult,
    pub y: SimResult,
    /// True iff `Y >= X` componentwise at every event time.
    pub dominated: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Mode {
    /// Control clocks flip both processes.
    Ordered,
    /// Control clocks flip `X` only.
    Seeded,
}

struct Tracker {
    state: Vec<bool>,
    ones: usize,
    done_at: Option<f64>,
    cost: f64,
    control_events: u64,
    jumps: u64,
    down_jumps: u64,
}

impl Tracker {
    fn new(x: &[bool]) -> Self {
        let ones = x.iter().filter(|&&b| b).count();
        Tracker {
            state: x.to_vec(),
            ones,
            done_at: (ones == x.len()).then_some(0.0),
            cost: 0.0,
            control_events: 0,
            jumps: 0,
            down_jumps: 0,
        }
    }

    fn set(&mut self, i: usize, value: bool, by_control: bool, t: f64) {
        if self.state[i] == value {
            return;
        }
        self.state[i] = value;
        self.jumps += 1;
        if value {
            self.ones += 1;
            if by_control {
                self.control_events += 1;
            }
        } else {
            self.ones -= 1;
            self.down_jumps += 1;
        }
        if self.ones == self.state.len() {
            self.done_at = Some(t);
        }
    }

    fn finish(self, g: &Graph, complete: bool, t: f64) -> SimResult {
        SimResult {
            spreading_time: self.done_at.unwrap_or(t),
            control_cost: self.cost,
            control_events: self.control_events,
            jump_count: self.jumps,
            down_jumps: self.down_jumps,
            jumps: None,
            final_state: Configuration::new(g, &self.state).expect("length matches"),
            complete,
        }
    }
}

/// Runs two processes on `g` from `x0` and `y0` with win probabilities `beta`
/// and `gamma`, sharing link clocks, conflict outcomes and control clocks.
///
/// A single uniform draw per link event decides both conflicts: below `beta`
/// state 1 wins in both, between `beta` and `gamma` only in `Y`, above
/// `gamma` state 0 wins in both.
pub fn simulate_coupled_ordered<R: Rng + ?Sized>(
    g: &Graph,
    beta: f64,
    gamma: f64,
    policy: &ControlPolicy,
    x0: &[bool],
    y0: &[bool],
    rng: &mut R,
) -> Result<CoupledOutcome, SimError> {
    check_beta(gamma)?;
    check_setup(g, beta, policy, x0)?;
    check_setup(g, gamma, policy, y0)?;
    if !policy.is_open_loop() {
        return Err(SimError::NotOpenLoop);
    }
    if beta > gamma || x0.iter().zip(y0).any(|(&a, &b)| a && !b) {
        return Err(SimError::InvalidOrdering);
    }
    run(g, beta, gamma, policy, x0, y0, Mode::Ordered, rng)
}

/// Runs `X` with control `policy` from `x0` against an uncontrolled `Y`
/// started from the indicator of `seed_set`, both with `beta = 1`. Link clocks
/// are shared; control clocks act on `X` only.
pub fn simulate_coupled_seeded<R: Rng + ?Sized>(
    g: &Graph,
    policy: &ControlPolicy,
    x0: &[bool],
    seed_set: &[usize],
    rng: &mut R,
) -> Result<CoupledOutcome, SimError> {
    check_setup(g, 1.0, policy, x0)?;
    if !policy.is_open_loop() {
        return Err(SimError::NotOpenLoop);
    }
    let n = g.n();
    let mut y0 = vec![false; n];
    for &s in seed_set {
        if s >= n {
            return Err(SimError::InvalidOrdering);
        }
        y0[s] = true;
    }
    let support = policy.support().unwrap_or_default();
    if support.iter().any(|&i| !y0[i]) {
        return Err(SimError::SupportNotSeeded);
    }
    if x0.iter().zip(&y0).any(|(&a, &b)| a && !b) {
        return Err(SimError::InvalidOrdering);
    }
    if seed_set.is_empty() {
        return Err(SimError::PolicyViolatesAssumption2);
    }
    run(g, 1.0, 1.0, policy, x0, &y0, Mode::Seeded, rng)
}

#[allow(clippy::too_many_arguments)]
fn run<R: Rng + ?Sized>(
    g: &Graph,
    beta: f64,
    gamma: f64,
    policy: &ControlPolicy,
    x0: &[bool],
    y0: &[bool],
    mode: Mode,
    rng: &mut R,
) -> Result<CoupledOutcome, SimError> {
    let n = g.n();
    let (breakpoints, rates) = match policy {
        ControlPolicy::Constant { u } => (Vec::new(), vec![u.to_dense(n)?]),
        ControlPolicy::OpenLoop { breakpoints, rates } => {
            (breakpoints.clone(), rates.iter().map(|r| r.to_dense(n)).collect::<Result<Vec<_>, _>>()?)
        }
        _ => return Err(SimError::NotOpenLoop),
    };
    let mut x = Tracker::new(x0);
    let mut y = Tracker::new(y0);
    let mut segment = 0;
    let mut t = 0.0;
    let mut dominated = true;
    let mut events = 0u64;
    let mut weights: Vec<f64> = Vec::with_capacity(g.edge_count() + n);

    while x.done_at.is_none() || y.done_at.is_none() {
        let u = &rates[segment];
        let next_break = breakpoints.get(segment).copied().unwrap_or(f64::INFINITY);
        weights.clear();
        for &(i, j, w) in g.edges() {
            let active = x.state[i] != x.state[j] || y.state[i] != y.state[j];
            weights.push(if active { w } else { 0.0 });
        }
        for i in 0..n {
            let target = match mode {
                Mode::Ordered => !x.state[i] || !y.state[i],
                Mode::Seeded => !x.state[i],
            };
            weights.push(if target { u[i] } else { 0.0 });
        }
        let total: f64 = weights.iter().sum();
        let wait = if total > 0.0 {
            let e: f64 = rng.sample(Exp1);
            e / total
        } else {
            f64::INFINITY
        };
        let step_end = (t + wait).min(next_break);
        let total_u: f64 = u.iter().sum();
        if x.done_at.is_none() {
            x.cost += total_u * (step_end - t);
        }
        if mode == Mode::Ordered && y.done_at.is_none() {
            y.cost += total_u * (step_end - t);
        }
        if t + wait >= next_break {
            t = next_break;
            segment += 1;
            continue;
        }
        if !wait.is_finite() {
            return Err(SimError::PolicyViolatesAssumption2);
        }
        t += wait;
        events += 1;

        let mut target = rng.random::<f64>() * total;
        let mut pick = weights.len() - 1;
        for (k, &w) in weights.iter().enumerate() {
            if w > 0.0 {
                if target < w {
                    pick = k;
                    break;
                }
                target -= w;
                pick = k;
            }
        }
        let m = g.edge_count();
        if pick < m {
            let (i, j, _) = g.edges()[pick];
            let v: f64 = rng.random();
            if x.state[i] != x.state[j] && x.done_at.is_none() {
                let win = v < beta;
                x.set(i, win, false, t);
                x.set(j, win, false, t);
            }
            if y.state[i] != y.state[j] && y.done_at.is_none() {
                let win = v < gamma;
                y.set(i, win, false, t);
                y.set(j, win, false, t);
            }
        } else {
            let i = pick - m;
            if x.done_at.is_none() {
                x.set(i, true, true, t);
            }
            if mode == Mode::Ordered && y.done_at.is_none() {
                y.set(i, true, true, t);
            }
        }
        if x.state.iter().zip(&y.state).any(|(&a, &b)| a && !b) {
            dominated = false;
        }
        if events >= DEFAULT_MAX_EVENTS {
            let partial = x.finish(g, false, t);
            return Err(SimError::MaxEventsExceeded { partial: Box::new(partial) });
        }
    }
    Ok(CoupledOutcome { x: x.finish(g, true, t), y: y.finish(g, true, t), dominated })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControlVector, TargetRule};
    use crate::oracle::solve_exact;
    use crate::rng::stream;

    fn delta0() -> ControlPolicy {
        ControlPolicy::constant(ControlVector::delta(0, 1.0).unwrap())
    }

    #[test]
    fn ordered_pair_stays_dominated() {
        let g = Graph::star(6, 1.0).unwrap();
        let x0 = [false; 6];
        let mut y0 = [false; 6];
        y0[3] = true;
        for i in 0..200 {
            let out = simulate_coupled_ordered(&g, 0.6, 0.9, &delta0(), &x0, &y0, &mut stream(1, i)).unwrap();
            assert!(out.dominated);
            assert!(out.y.spreading_time <= out.x.spreading_time);
            assert!(out.x.complete && out.y.complete);
        }
    }

    #[test]
    fn seeded_pair_stays_dominated() {
        let g = Graph::ring(7, 1.0).unwrap();
        for i in 0..200 {
            let out = simulate_coupled_seeded(&g, &delta0(), &[false; 7], &[0, 4], &mut stream(2, i)).unwrap();
            assert!(out.dominated);
            assert_eq!(out.y.control_cost, 0.0);
            assert_eq!(out.y.down_jumps, 0);
        }
    }

    #[test]
    fn marginals_match_exact_expectations() {
        let g = Graph::path(4, 1.0).unwrap();
        let (beta, gamma) = (0.7, 0.85);
        let ex = solve_exact(&g, beta, &delta0()).unwrap().from_zero().0;
        let ey = solve_exact(&g, gamma, &delta0()).unwrap().from_zero().0;
        let reps = 20_000;
        let (mut sx, mut sy, mut qx, mut qy) = (0.0, 0.0, 0.0, 0.0);
        for i in 0..reps {
            let out = simulate_coupled_ordered(&g, beta, gamma, &delta0(), &[false; 4], &[false; 4], &mut stream(3, i)).unwrap();
            sx += out.x.spreading_time;
            qx += out.x.spreading_time.powi(2);
            sy += out.y.spreading_time;
            qy += out.y.spreading_time.powi(2);
        }
        let r = reps as f64;
        let se = |s: f64, q: f64| ((q / r - (s / r).powi(2)) / r).sqrt();
        assert!((sx / r - ex).abs() < 4.0 * se(sx, qx), "X {} vs {ex}", sx / r);
        assert!((sy / r - ey).abs() < 4.0 * se(sy, qy), "Y {} vs {ey}", sy / r);
    }

    #[test]
    fn rejects_bad_setups() {
        let g = Graph::path(3, 1.0).unwrap();
        let z = [false; 3];
        let mut rng = stream(0, 0);
        let fb = ControlPolicy::feedback(0.5, TargetRule::MaxContact).unwrap();
        assert!(matches!(simulate_coupled_ordered(&g, 0.8, 0.7, &delta0(), &z, &z, &mut rng), Err(SimError::InvalidOrdering)));
        assert!(matches!(
            simulate_coupled_ordered(&g, 0.7, 0.8, &delta0(), &[true, false, false], &z, &mut rng),
            Err(SimError::InvalidOrdering)
        ));
        assert!(matches!(simulate_coupled_ordered(&g, 0.7, 0.8, &fb, &z, &z, &mut rng), Err(SimError::NotOpenLoop)));
        assert!(matches!(simulate_coupled_seeded(&g, &delta0(), &z, &[2], &mut rng), Err(SimError::SupportNotSeeded)));
        let idle = ControlPolicy::constant(ControlVector::zero());
        assert!(matches!(
            simulate_coupled_seeded(&g, &idle, &[false, true, false], &[], &mut rng),
            Err(SimError::InvalidOrdering) | Err(SimError::PolicyViolatesAssumption2)
        ));
    }
}
