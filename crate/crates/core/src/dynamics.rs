//! Exact event-driven simulation of the controlled spreading process.
//!
//! Each undirected link `{i, j}` carries a rate-`W_ij` clock; when it ticks
//! across a 0/1 pair, state 1 takes both endpoints with probability `beta`
//! and state 0 otherwise. Exogenous control adds rate `U_i(t)` of turning a
//! 0-node into a 1-node. Aggregated per node this gives
//!
//! ```text
//! up_i   = (1 - x_i) (beta (W x)_i + U_i)
//! down_i = x_i (1 - beta) (W (1 - x))_i
//! ```
//!
//! and the process is simulated jump by jump with a [`SumTree`] over the
//! `2n` rates.

use std::io::Write;

use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::control::{ControlPolicy, ControlVector, PolicyError, TargetRule};
use crate::graph::Graph;
use crate::sampler::SumTree;

/// Default cap on the number of jumps of a single trajectory.
pub const DEFAULT_MAX_EVENTS: u64 = 100_000_000;

const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("beta must lie in (1/2, 1], got {0}")]
    InvalidBeta(f64),
    #[error("state vector has length {got}, graph has {expected} nodes")]
    StateLength { expected: usize, got: usize },
    #[error(transparent)]
    Policy(#[from] PolicyError),
    #[error("control vanishes while the all-0 configuration is reachable")]
    PolicyViolatesAssumption2,
    #[error("event budget exhausted after {} jumps at t = {}", .partial.jump_count, .partial.spreading_time)]
    MaxEventsExceeded { partial: Box<SimResult> },
    #[error("invariant violated: {0}")]
    InvariantViolation(String),
    #[error("feedback control queried at the all-1 configuration")]
    NoZeroNode,
    #[error("coupled processes need beta <= gamma and x0 <= y0")]
    InvalidOrdering,
    #[error("control support is not contained in the seed set")]
    SupportNotSeeded,
    #[error("coupled simulation requires an open-loop policy")]
    NotOpenLoop,
}

/// Binary configuration with incrementally maintained aggregates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Configuration {
    x: Vec<bool>,
    ones: usize,
    boundary: f64,
    /// `(W x)_i` for every node.
    contact: Vec<f64>,
    one_neighbors: Vec<u32>,
}

impl Configuration {
    pub fn new(g: &Graph, x: &[bool]) -> Result<Self, SimError> {
        if x.len() != g.n() {
            return Err(SimError::StateLength { expected: g.n(), got: x.len() });
        }
        let mut contact = vec![0.0; g.n()];
        let mut one_neighbors = vec![0u32; g.n()];
        for (i, j, w) in g.edges().iter().copied() {
            if x[j] {
                contact[i] += w;
                one_neighbors[i] += 1;
            }
            if x[i] {
                contact[j] += w;
                one_neighbors[j] += 1;
            }
        }
        Ok(Configuration {
            x: x.to_vec(),
            ones: x.iter().filter(|&&b| b).count(),
            boundary: g.boundary(x),
            contact,
            one_neighbors,
        })
    }

    pub fn zeros(g: &Graph) -> Self {
        Self::new(g, &vec![false; g.n()]).expect("length matches")
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn states(&self) -> &[bool] {
        &self.x
    }

    pub fn is_one(&self, i: usize) -> bool {
        self.x[i]
    }

    /// `A = 1^T x`.
    pub fn ones(&self) -> usize {
        self.ones
    }

    /// `B = x^T W (1 - x)`.
    pub fn boundary(&self) -> f64 {
        self.boundary
    }

    pub fn is_absorbed(&self) -> bool {
        self.ones == self.x.len()
    }

    /// `(W x)_i`.
    pub fn contact(&self, i: usize) -> f64 {
        self.contact[i]
    }

    /// `b_i^+ = (1 - x_i) (W x)_i`.
    pub fn up_weight(&self, i: usize) -> f64 {
        if self.x[i] {
            0.0
        } else {
            self.contact[i]
        }
    }

    /// `b_i^- = x_i (W (1 - x))_i`.
    pub fn down_weight(&self, g: &Graph, i: usize) -> f64 {
        if self.x[i] {
            (g.degree_weight(i) - self.contact[i]).max(0.0)
        } else {
            0.0
        }
    }

    /// Flips node `i`, updating every aggregate in `O(deg i)`.
    pub fn flip(&mut self, g: &Graph, i: usize) {
        let delta = g.degree_weight(i) - 2.0 * self.contact[i];
        let (sign, step): (f64, i64) = if self.x[i] { (-1.0, -1) } else { (1.0, 1) };
        self.x[i] = !self.x[i];
        self.ones = (self.ones as i64 + step) as usize;
        self.boundary += sign * delta;
        if self.ones == 0 || self.ones == self.x.len() || self.boundary < 0.0 {
            self.boundary = 0.0;
        }
        for (j, w) in g.neighbors(i) {
            self.one_neighbors[j] = (self.one_neighbors[j] as i64 + step) as u32;
            self.contact[j] = if self.one_neighbors[j] == 0 {
                0.0
            } else if self.one_neighbors[j] as usize == g.degree(j) {
                g.degree_weight(j)
            } else {
                self.contact[j] + sign * w
            };
        }
    }

    /// Largest absolute difference between the maintained aggregates and a
    /// fresh recomputation from `x`.
    pub fn deviation(&self, g: &Graph) -> f64 {
        let fresh = Configuration::new(g, &self.x).expect("length matches");
        let mut worst = (self.boundary - fresh.boundary).abs();
        if self.ones != fresh.ones || self.one_neighbors != fresh.one_neighbors {
            return f64::INFINITY;
        }
        for (a, b) in self.contact.iter().zip(&fresh.contact) {
            worst = worst.max((a - b).abs());
        }
        worst
    }

    fn resync(&mut self, g: &Graph) {
        *self = Configuration::new(g, &self.x).expect("length matches");
    }
}

/// Control rates applied in a given configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlRates {
    /// Nonzero per-node rates `U_i`.
    pub per_node: Vec<(usize, f64)>,
    /// `C = (1 - x)^T U`.
    pub effective: f64,
    /// `1^T U`.
    pub total: f64,
}

/// Feedback rate `mu(a, b)`: `K - b` while `a < n` and `b < K`, else 0.
pub fn feedback_rate(gain: f64, ones: usize, n: usize, boundary: f64) -> f64 {
    if ones < n && boundary < gain {
        gain - boundary
    } else {
        0.0
    }
}

/// Deterministic target choice; `None` when every node is in state 1.
/// `RandomZero` has no deterministic choice and returns `None`.
pub fn deterministic_target(rule: TargetRule, conf: &Configuration) -> Option<usize> {
    match rule {
        TargetRule::LowestIndex => conf.x.iter().position(|&b| !b),
        TargetRule::MaxContact => {
            let mut best: Option<(usize, f64)> = None;
            for (i, &c) in conf.contact.iter().enumerate() {
                if conf.x[i] {
                    continue;
                }
                match best {
                    Some((_, b)) if c <= b + 1e-12 * b.abs().max(c.abs()) => {}
                    _ => best = Some((i, c)),
                }
            }
            best.map(|(i, _)| i)
        }
        TargetRule::RandomZero => None,
    }
}

/// Control rates at time `t` in configuration `conf`.
///
/// For the `random-zero` target rule the rate is reported spread evenly over
/// the 0-nodes, which has the same law as redrawing the target after every
/// jump.
pub fn control_rates(policy: &ControlPolicy, conf: &Configuration, t: f64) -> Result<ControlRates, SimError> {
    let n = conf.n();
    let targeted = |rate: f64, rule: TargetRule| -> Result<ControlRates, SimError> {
        if conf.is_absorbed() {
            return Err(SimError::NoZeroNode);
        }
        let per_node = if rate <= 0.0 {
            Vec::new()
        } else if rule == TargetRule::RandomZero {
            let share = rate / (n - conf.ones) as f64;
            (0..n).filter(|&i| !conf.x[i]).map(|i| (i, share)).collect()
        } else {
            vec![(deterministic_target(rule, conf).expect("a 0-node exists"), rate)]
        };
        Ok(ControlRates { per_node, effective: rate, total: rate })
    };
    match policy {
        ControlPolicy::Feedback { gain, target } => {
            targeted(feedback_rate(*gain, conf.ones, n, conf.boundary), *target)
        }
        ControlPolicy::Targeted { rate, target } => targeted(*rate, *target),
        _ => {
            let u = policy.segment_at(t).expect("open-loop policies have a segment at every time");
            u.check_nodes(n)?;
            let per_node: Vec<_> = u.entries().iter().copied().filter(|e| e.1 > 0.0).collect();
            let effective = per_node.iter().filter(|e| !conf.x[e.0]).map(|e| e.1).sum();
            Ok(ControlRates { per_node, effective, total: u.total() })
        }
    }
}

/// Per-node up and down transition rates for the given dense control vector.
pub fn node_rates(g: &Graph, beta: f64, conf: &Configuration, u: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let up = (0..g.n())
        .map(|i| if conf.x[i] { 0.0 } else { beta * conf.contact[i] + u[i] })
        .collect();
    let down = (0..g.n()).map(|i| (1.0 - beta) * conf.down_weight(g, i)).collect();
    (up, down)
}

/// Cause of a jump.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Trigger {
    SpreadUp,
    SpreadDown,
    Control,
}

impl Trigger {
    pub fn as_str(self) -> &'static str {
        match self {
            Trigger::SpreadUp => "spread-up",
            Trigger::SpreadDown => "spread-down",
            Trigger::Control => "control",
        }
    }
}

/// One jump of a recorded trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JumpRecord {
    /// 1-based jump index `h`.
    pub index: u64,
    /// `T_h`.
    pub time: f64,
    /// `T_h - T_{h-1}`.
    pub hold: f64,
    /// `B_{h-1}`, the boundary during the holding interval.
    pub boundary_before: f64,
    /// `c_h`, integral of the effective control `C` over the holding interval.
    pub effective_control: f64,
    /// `J_h`, integral of `1^T U` over the holding interval.
    pub control_spent: f64,
    pub trigger: Trigger,
    pub node: usize,
    pub ones_after: usize,
    pub boundary_after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    /// `T`, time of absorption at the all-1 configuration.
    pub spreading_time: f64,
    /// `J`, integral of `1^T U` up to `T`.
    pub control_cost: f64,
    /// `N^c`, jumps caused by the control term.
    pub control_events: u64,
    pub jump_count: u64,
    pub down_jumps: u64,
    pub jumps: Option<Vec<JumpRecord>>,
    pub final_state: Configuration,
    /// False when the event budget ran out before absorption.
    pub complete: bool,
}

/// Compact per-trajectory summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimSummary {
    #[serde(rename = "T")]
    pub spreading_time: f64,
    #[serde(rename = "J")]
    pub control_cost: f64,
    #[serde(rename = "Nc")]
    pub control_events: u64,
    pub jumps: u64,
}

impl SimResult {
    pub fn summary(&self) -> SimSummary {
        SimSummary {
            spreading_time: self.spreading_time,
            control_cost: self.control_cost,
            control_events: self.control_events,
            jumps: self.jump_count,
        }
    }

    /// Writes `h t_h a b_h cause` lines; no-op when jumps were not recorded.
    pub fn write_trajectory<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for j in self.jumps.iter().flatten() {
            writeln!(out, "{} {} {} {} {}", j.index, j.time, j.ones_after, j.boundary_after, j.trigger.as_str())?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub record_jumps: bool,
    pub max_events: u64,
    /// Verify the aggregate and rate invariants after every jump.
    pub check_invariants: bool,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions { record_jumps: false, max_events: DEFAULT_MAX_EVENTS, check_invariants: false }
    }
}

impl SimOptions {
    pub fn recording() -> Self {
        SimOptions { record_jumps: true, ..Self::default() }
    }

    pub fn checked() -> Self {
        SimOptions { check_invariants: true, ..Self::default() }
    }
}

pub(crate) fn check_beta(beta: f64) -> Result<(), SimError> {
    if beta > 0.5 && beta <= 1.0 {
        Ok(())
    } else {
        Err(SimError::InvalidBeta(beta))
    }
}

/// Validates the run-independent preconditions shared by all simulators.
pub(crate) fn check_setup(g: &Graph, beta: f64, policy: &ControlPolicy, x0: &[bool]) -> Result<(), SimError> {
    check_beta(beta)?;
    if x0.len() != g.n() {
        return Err(SimError::StateLength { expected: g.n(), got: x0.len() });
    }
    policy.validate_shape()?;
    policy.check_nodes(g.n())?;
    let zero_reachable = beta < 1.0 || x0.iter().all(|&b| !b);
    let absorbed = x0.iter().all(|&b| b);
    if zero_reachable && !absorbed && policy.min_rate_at_zero() <= 0.0 {
        return Err(SimError::PolicyViolatesAssumption2);
    }
    Ok(())
}

enum ControlMode {
    Schedule { breakpoints: Vec<f64>, rates: Vec<ControlVector>, segment: usize },
    Feedback { gain: f64, rule: TargetRule },
    Targeted { rate: f64, rule: TargetRule },
}

struct Engine<'g> {
    g: &'g Graph,
    beta: f64,
    conf: Configuration,
    tree: SumTree,
    u: Vec<f64>,
    u_nodes: Vec<usize>,
    effective: f64,
    total: f64,
    zeros: Vec<usize>,
    zero_pos: Vec<usize>,
}

impl<'g> Engine<'g> {
    fn new(g: &'g Graph, beta: f64, x0: &[bool]) -> Result<Self, SimError> {
        let conf = Configuration::new(g, x0)?;
        let n = g.n();
        let mut zeros = Vec::with_capacity(n);
        let mut zero_pos = vec![usize::MAX; n];
        for i in (0..n).filter(|&i| !x0[i]) {
            zero_pos[i] = zeros.len();
            zeros.push(i);
        }
        let mut engine = Engine {
            g,
            beta,
            conf,
            tree: SumTree::new(2 * n),
            u: vec![0.0; n],
            u_nodes: Vec::new(),
            effective: 0.0,
            total: 0.0,
            zeros,
            zero_pos,
        };
        engine.rebuild_tree();
        Ok(engine)
    }

    fn up_rate(&self, i: usize) -> f64 {
        if self.conf.x[i] {
            0.0
        } else {
            self.beta * self.conf.contact[i] + self.u[i]
        }
    }

    fn down_rate(&self, i: usize) -> f64 {
        if self.conf.x[i] && self.beta < 1.0 {
            (1.0 - self.beta) * (self.g.degree_weight(i) - self.conf.contact[i]).max(0.0)
        } else {
            0.0
        }
    }

    fn rebuild_tree(&mut self) {
        let n = self.g.n();
        let mut w = vec![0.0; 2 * n];
        for i in 0..n {
            w[i] = self.up_rate(i);
            w[n + i] = self.down_rate(i);
        }
        self.tree = SumTree::from_weights(&w);
    }

    fn refresh_up(&mut self, i: usize) {
        let r = self.up_rate(i);
        self.tree.set(i, r);
    }

    fn set_static(&mut self, cv: &ControlVector) {
        for k in std::mem::take(&mut self.u_nodes) {
            self.u[k] = 0.0;
            self.refresh_up(k);
        }
        for &(i, r) in cv.entries() {
            if r > 0.0 {
                self.u[i] = r;
                self.u_nodes.push(i);
                self.refresh_up(i);
            }
        }
        self.total = cv.total();
        self.recompute_effective();
    }

    fn recompute_effective(&mut self) {
        self.effective = self.u_nodes.iter().filter(|&&i| !self.conf.x[i]).map(|&i| self.u[i]).sum();
    }

    fn set_target(&mut self, target: Option<usize>, rate: f64) {
        let target = target.filter(|_| rate > 0.0);
        if let (Some(t), [old]) = (target, self.u_nodes.as_slice()) {
            if *old == t && self.u[t] == rate {
                return;
            }
        }
        for k in std::mem::take(&mut self.u_nodes) {
            self.u[k] = 0.0;
            self.refresh_up(k);
        }
        match target {
            Some(t) => {
                self.u[t] = rate;
                self.u_nodes.push(t);
                self.refresh_up(t);
                self.effective = rate;
                self.total = rate;
            }
            None => {
                self.effective = 0.0;
                self.total = 0.0;
            }
        }
    }

    fn choose_target<R: Rng + ?Sized>(&self, rule: TargetRule, rng: &mut R) -> Option<usize> {
        match rule {
            TargetRule::RandomZero if !self.zeros.is_empty() => {
                Some(self.zeros[rng.random_range(0..self.zeros.len())])
            }
            TargetRule::RandomZero => None,
            rule => deterministic_target(rule, &self.conf),
        }
    }

    fn update_feedback<R: Rng + ?Sized>(&mut self, mode: &ControlMode, rng: &mut R) {
        let n = self.g.n();
        match *mode {
            ControlMode::Feedback { gain, rule } => {
                let rate = feedback_rate(gain, self.conf.ones, n, self.conf.boundary);
                let target = if rate > 0.0 { self.choose_target(rule, rng) } else { None };
                self.set_target(target, rate);
            }
            ControlMode::Targeted { rate, rule } => {
                let target = if self.conf.ones < n { self.choose_target(rule, rng) } else { None };
                self.set_target(target, rate);
            }
            ControlMode::Schedule { .. } => {}
        }
    }

    fn flip(&mut self, i: usize) {
        let n = self.g.n();
        self.conf.flip(self.g, i);
        if self.conf.x[i] {
            let p = self.zero_pos[i];
            let last = *self.zeros.last().expect("flipped node was a 0-node");
            self.zeros.swap_remove(p);
            if last != i {
                self.zero_pos[last] = p;
            }
            self.zero_pos[i] = usize::MAX;
        } else {
            self.zero_pos[i] = self.zeros.len();
            self.zeros.push(i);
        }
        let (up, down) = (self.up_rate(i), self.down_rate(i));
        self.tree.set(i, up);
        self.tree.set(n + i, down);
        let g = self.g;
        for (j, _) in g.neighbors(i) {
            if self.conf.x[j] {
                let r = self.down_rate(j);
                self.tree.set(n + j, r);
            } else {
                let r = self.up_rate(j);
                self.tree.set(j, r);
            }
        }
        if self.u[i] > 0.0 {
            self.recompute_effective();
        }
    }

    fn check(&self, mode: &ControlMode) -> Result<(), SimError> {
        let dev = self.conf.deviation(self.g);
        if dev > CHECK_TOL {
            return Err(SimError::InvariantViolation(format!("aggregates drifted by {dev}")));
        }
        let b = self.conf.boundary;
        let c = self.effective;
        let rate = self.tree.total();
        if (rate - (b + c)).abs() > CHECK_TOL * (1.0 + b + c) {
            return Err(SimError::InvariantViolation(format!("total rate {rate} != B + C = {}", b + c)));
        }
        let n = self.g.n();
        if let ControlMode::Feedback { gain, .. } = *mode {
            if self.conf.ones < n {
                let expect = (gain - b).max(0.0);
                if (self.total - c).abs() > CHECK_TOL || (c - expect).abs() > CHECK_TOL * (1.0 + gain) {
                    return Err(SimError::InvariantViolation(format!(
                        "feedback control {c} (total {}) != max(K - B, 0) = {expect}",
                        self.total
                    )));
                }
                if (b + c - b.max(gain)).abs() > CHECK_TOL * (1.0 + gain + b) {
                    return Err(SimError::InvariantViolation("B + C != max(B, K)".into()));
                }
            }
        }
        if self.conf.ones > 0 && self.conf.ones < n && b + c > 0.0 {
            let up = (self.beta * b + c) / (b + c);
            let down = (1.0 - self.beta) * b / (b + c);
            if up < self.beta - 1e-12 || down > 1.0 - self.beta + 1e-12 {
                return Err(SimError::InvariantViolation(format!("step probabilities {up}/{down} out of bounds")));
            }
        }
        Ok(())
    }
}

/// Simulates one trajectory from `x0` until absorption at the all-1 configuration.
///
/// Waiting times are exact exponentials at the current total rate `B + C`;
/// for piecewise-constant open-loop schedules the clock restarts at every
/// breakpoint, which is exact by memorylessness. When a 0-node's up-flip is
/// selected, the control term is credited as the cause with probability
/// `U_i / (beta (W x)_i + U_i)`.
pub fn simulate<R: Rng + ?Sized>(
    g: &Graph,
    beta: f64,
    policy: &ControlPolicy,
    x0: &[bool],
    rng: &mut R,
    options: SimOptions,
) -> Result<SimResult, SimError> {
    check_setup(g, beta, policy, x0)?;
    let n = g.n();
    let mut engine = Engine::new(g, beta, x0)?;
    let mut mode = match policy.clone() {
        ControlPolicy::Constant { u } => ControlMode::Schedule { breakpoints: vec![], rates: vec![u], segment: 0 },
        ControlPolicy::OpenLoop { breakpoints, rates } => ControlMode::Schedule { breakpoints, rates, segment: 0 },
        ControlPolicy::Feedback { gain, target } => ControlMode::Feedback { gain, rule: target },
        ControlPolicy::Targeted { rate, target } => ControlMode::Targeted { rate, rule: target },
    };
    if let ControlMode::Schedule { rates, .. } = &mode {
        let first = rates[0].clone();
        engine.set_static(&first);
    }
    engine.update_feedback(&mode, rng);

    let mut t = 0.0;
    let mut cost = 0.0;
    let mut control_events = 0u64;
    let mut jump_count = 0u64;
    let mut down_jumps = 0u64;
    let mut records = options.record_jumps.then(Vec::new);
    // accumulators over the current holding interval
    let (mut hold_start, mut c_acc, mut j_acc) = (0.0, 0.0, 0.0);
    let mut boundary_before = engine.conf.boundary;
    let resync_every = (4 * n).max(256) as u64;

    if options.check_invariants {
        engine.check(&mode)?;
    }
    while !engine.conf.is_absorbed() {
        let next_break = match &mode {
            ControlMode::Schedule { breakpoints, segment, .. } => {
                breakpoints.get(*segment).copied().unwrap_or(f64::INFINITY)
            }
            _ => f64::INFINITY,
        };
        let rate = engine.tree.total();
        let wait = if rate > 0.0 {
            let e: f64 = rng.sample(Exp1);
            e / rate
        } else {
            f64::INFINITY
        };
        if t + wait >= next_break {
            let span = next_break - t;
            cost += engine.total * span;
            c_acc += engine.effective * span;
            j_acc += engine.total * span;
            t = next_break;
            if let ControlMode::Schedule { rates, segment, .. } = &mut mode {
                *segment += 1;
                let next = rates[*segment].clone();
                engine.set_static(&next);
            }
            continue;
        }
        if !wait.is_finite() {
            return Err(SimError::PolicyViolatesAssumption2);
        }
        t += wait;
        cost += engine.total * wait;
        c_acc += engine.effective * wait;
        j_acc += engine.total * wait;

        let slot = engine.tree.sample(rng);
        let (node, trigger) = if slot < n {
            let u = engine.u[slot];
            let by_control = u > 0.0 && {
                let spread = beta * engine.conf.contact[slot];
                rng.random::<f64>() * (spread + u) < u
            };
            (slot, if by_control { Trigger::Control } else { Trigger::SpreadUp })
        } else {
            (slot - n, Trigger::SpreadDown)
        };
        engine.flip(node);
        jump_count += 1;
        match trigger {
            Trigger::Control => control_events += 1,
            Trigger::SpreadDown => down_jumps += 1,
            Trigger::SpreadUp => {}
        }
        if jump_count % resync_every == 0 {
            engine.conf.resync(g);
            engine.rebuild_tree();
            if let ControlMode::Schedule { .. } = mode {
                engine.recompute_effective();
            }
        }
        engine.update_feedback(&mode, rng);
        if let Some(recs) = records.as_mut() {
            recs.push(JumpRecord {
                index: jump_count,
                time: t,
                hold: t - hold_start,
                boundary_before,
                effective_control: c_acc,
                control_spent: j_acc,
                trigger,
                node,
                ones_after: engine.conf.ones,
                boundary_after: engine.conf.boundary,
            });
        }
        hold_start = t;
        c_acc = 0.0;
        j_acc = 0.0;
        boundary_before = engine.conf.boundary;
        if options.check_invariants {
            if beta == 1.0 && trigger == Trigger::SpreadDown {
                return Err(SimError::InvariantViolation("state-decreasing jump with beta = 1".into()));
            }
            engine.check(&mode)?;
        }
        if jump_count >= options.max_events && !engine.conf.is_absorbed() {
            let partial = SimResult {
                spreading_time: t,
                control_cost: cost,
                control_events,
                jump_count,
                down_jumps,
                jumps: records,
                final_state: engine.conf,
                complete: false,
            };
            return Err(SimError::MaxEventsExceeded { partial: Box::new(partial) });
        }
    }
    Ok(SimResult {
        spreading_time: t,
        control_cost: cost,
        control_events,
        jump_count,
        down_jumps,
        jumps: records,
        final_state: engine.conf,
        complete: true,
    })
}
