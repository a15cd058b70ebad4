//! Exact expected spreading time and control cost on small graphs.
//!
//! Configurations are encoded as `n`-bit integers (bit `i` is node `i`). For
//! a time-homogeneous policy the expectations solve
//!
//! ```text
//! E[T | x] = 1 / r(x)        + sum_y P(x -> y) E[T | y]
//! E[J | x] = 1^T U(x) / r(x) + sum_y P(x -> y) E[J | y]
//! ```
//!
//! with `r(x) = B(x) + C(x)`. With `beta = 1` no transition lowers the
//! number of 1-nodes and the system is solved by back substitution; otherwise
//! Gauss-Seidel sweeps run to a residual below `1e-12`.

use thiserror::Error;

use crate::control::ControlPolicy;
use crate::dynamics::{control_rates, Configuration, SimError};
use crate::graph::Graph;

/// Default largest node count for exact solves.
pub const DEFAULT_ORACLE_LIMIT: usize = 14;

const RESIDUAL_TARGET: f64 = 1e-12;
const MAX_SWEEPS: usize = 2_000_000;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("exact solve limited to {limit} nodes, graph has {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("policy is not time-homogeneous")]
    NonHomogeneousPolicy,
    #[error("configuration {state:#b} has no outgoing transitions and is not absorbing")]
    Unreachable { state: usize },
    #[error("iteration stalled at residual {residual:e}")]
    NotConverged { residual: f64 },
    #[error("beta must lie in (1/2, 1], got {0}")]
    InvalidBeta(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Expected spreading time and cost from every configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactSolution {
    n: usize,
    expected_time: Vec<f64>,
    expected_cost: Vec<f64>,
    /// Largest residual of the normalized system at termination.
    pub residual: f64,
}

/// Bit encoding of a configuration.
pub fn state_index(x: &[bool]) -> usize {
    x.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| 1usize << i).sum()
}

impl ExactSolution {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `E[T | x]`; `+inf` when the process can never leave `x`.
    pub fn time(&self, x: &[bool]) -> f64 {
        self.expected_time[state_index(x)]
    }

    pub fn cost(&self, x: &[bool]) -> f64 {
        self.expected_cost[state_index(x)]
    }

    pub fn time_at(&self, state: usize) -> f64 {
        self.expected_time[state]
    }

    pub fn cost_at(&self, state: usize) -> f64 {
        self.expected_cost[state]
    }

    /// `E[T | 0]` and `E[J | 0]`.
    pub fn from_zero(&self) -> (f64, f64) {
        (self.expected_time[0], self.expected_cost[0])
    }
}

struct Row {
    /// `1 / r(x)`.
    time_rhs: f64,
    /// `1^T U(x) / r(x)`.
    cost_rhs: f64,
    /// `(y, P(x -> y))`.
    next: Vec<(usize, f64)>,
}

fn homogeneous(policy: &ControlPolicy) -> Result<ControlPolicy, OracleError> {
    match policy {
        ControlPolicy::OpenLoop { rates, .. } if policy.is_time_homogeneous() => {
            Ok(ControlPolicy::constant(rates[0].clone()))
        }
        ControlPolicy::OpenLoop { .. } => Err(OracleError::NonHomogeneousPolicy),
        p => Ok(p.clone()),
    }
}

/// Solves for the expectations from every configuration.
pub fn solve_exact(g: &Graph, beta: f64, policy: &ControlPolicy) -> Result<ExactSolution, OracleError> {
    solve_exact_with_limit(g, beta, policy, DEFAULT_ORACLE_LIMIT)
}

pub fn solve_exact_with_limit(
    g: &Graph,
    beta: f64,
    policy: &ControlPolicy,
    limit: usize,
) -> Result<ExactSolution, OracleError> {
    let n = g.n();
    if n > limit || n >= 31 {
        return Err(OracleError::TooLarge { n, limit });
    }
    if !(beta > 0.5 && beta <= 1.0) {
        return Err(OracleError::InvalidBeta(beta));
    }
    let policy = homogeneous(policy)?;
    policy.validate_shape().map_err(SimError::from)?;
    policy.check_nodes(n).map_err(SimError::from)?;
    let states = 1usize << n;
    let full = states - 1;

    // order by decreasing popcount so that back substitution works for beta = 1
    let mut order: Vec<usize> = (0..states).collect();
    order.sort_by_key(|&s| (std::cmp::Reverse(s.count_ones()), s));

    let mut rows: Vec<Option<Row>> = Vec::with_capacity(states);
    let mut stuck = Vec::new();
    let mut x = vec![false; n];
    for s in 0..states {
        if s == full {
            rows.push(None);
            continue;
        }
        for (i, xi) in x.iter_mut().enumerate() {
            *xi = s >> i & 1 == 1;
        }
        let conf = Configuration::new(g, &x)?;
        let control = control_rates(&policy, &conf, 0.0)?;
        let mut u = vec![0.0; n];
        for &(i, r) in &control.per_node {
            u[i] += r;
        }
        let mut next = Vec::with_capacity(n);
        let mut total = 0.0;
        for i in 0..n {
            let rate = if x[i] {
                (1.0 - beta) * conf.down_weight(g, i)
            } else {
                beta * conf.contact(i) + u[i]
            };
            if rate > 0.0 {
                next.push((s ^ (1 << i), rate));
                total += rate;
            }
        }
        if total <= 0.0 {
            stuck.push(s);
            rows.push(None);
            continue;
        }
        for e in &mut next {
            e.1 /= total;
        }
        rows.push(Some(Row { time_rhs: 1.0 / total, cost_rhs: control.total / total, next }));
    }
    if beta < 1.0 {
        if let Some(&state) = stuck.first() {
            return Err(OracleError::Unreachable { state });
        }
    }

    let mut time = vec![0.0; states];
    let mut cost = vec![0.0; states];
    for &s in &stuck {
        time[s] = f64::INFINITY;
        cost[s] = f64::INFINITY;
    }
    let update = |s: usize, time: &[f64], cost: &[f64]| -> Option<(f64, f64)> {
        let row = rows[s].as_ref()?;
        let mut t = row.time_rhs;
        let mut c = row.cost_rhs;
        for &(y, p) in &row.next {
            t += p * time[y];
            c += p * cost[y];
        }
        Some((t, c))
    };
    let residual_of = |time: &[f64], cost: &[f64]| -> f64 {
        let mut worst: f64 = 0.0;
        for s in 0..states {
            if let Some((t, c)) = update(s, time, cost) {
                worst = worst.max((t - time[s]).abs()).max((c - cost[s]).abs());
            }
        }
        worst
    };

    if beta == 1.0 {
        for &s in &order {
            if let Some((t, c)) = update(s, &time, &cost) {
                time[s] = t;
                cost[s] = c;
            }
        }
        let residual = residual_of(&time, &cost);
        return Ok(ExactSolution { n, expected_time: time, expected_cost: cost, residual });
    }

    let mut residual = f64::INFINITY;
    let mut best = f64::INFINITY;
    let mut stalled = 0usize;
    for sweep in 0..MAX_SWEEPS {
        // alternate the sweep direction
        let forward = sweep % 2 == 0;
        let mut change: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for k in 0..states {
            let s = if forward { order[k] } else { order[states - 1 - k] };
            if let Some((t, c)) = update(s, &time, &cost) {
                change = change.max((t - time[s]).abs()).max((c - cost[s]).abs());
                scale = scale.max(t.abs()).max(c.abs());
                time[s] = t;
                cost[s] = c;
            }
        }
        if change > RESIDUAL_TARGET * 0.1 && sweep % 64 != 63 {
            continue;
        }
        residual = residual_of(&time, &cost);
        if residual < RESIDUAL_TARGET {
            break;
        }
        if residual < best * 0.999 {
            best = residual;
            stalled = 0;
        } else {
            stalled += 1;
        }
        if stalled > 20 {
            // rounding floor at the magnitude of the solution
            if residual < 64.0 * f64::EPSILON * scale {
                break;
            }
            return Err(OracleError::NotConverged { residual });
        }
    }
    if residual > 1e-9 {
        return Err(OracleError::NotConverged { residual });
    }
    Ok(ExactSolution { n, expected_time: time, expected_cost: cost, residual })
}

/// Probability that the walk moving up with probability `beta` from level `a`
/// reaches `n` before `a - 1`, by a direct tridiagonal solve of
/// `h_k = beta h_{k+1} + (1 - beta) h_{k-1}`, `h_{a-1} = 0`, `h_n = 1`.
pub fn solve_birth_death(beta: f64, n: usize, a: usize) -> Result<f64, OracleError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(OracleError::InvalidBeta(beta));
    }
    if a == 0 || a > n {
        return Err(OracleError::InvalidInput(format!("level a must lie in 1..={n}, got {a}")));
    }
    if a == n {
        return Ok(1.0);
    }
    // unknowns h_a .. h_{n-1}
    let m = n - a;
    let lower = -(1.0 - beta);
    let upper = -beta;
    let mut c_prime = vec![0.0; m];
    let mut d_prime = vec![0.0; m];
    for k in 0..m {
        let rhs = if k == m - 1 { beta } else { 0.0 };
        let (c_prev, d_prev) = if k == 0 { (0.0, 0.0) } else { (c_prime[k - 1], d_prime[k - 1]) };
        let denom = 1.0 - lower * c_prev;
        c_prime[k] = if k == m - 1 { 0.0 } else { upper / denom };
        d_prime[k] = (rhs - lower * d_prev) / denom;
    }
    let mut h = d_prime[m - 1];
    for k in (0..m - 1).rev() {
        h = d_prime[k] - c_prime[k] * h;
    }
    Ok(h)
}
