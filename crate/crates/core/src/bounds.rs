//! Closed-form bounds on the expected spreading time and control cost.
//!
//! Every calculator returns a [`BoundReport`] carrying the value together with
//! the hypotheses under which it holds. Division by zero follows the
//! convention `x / 0 = +inf` for `x > 0`; such values are flagged degenerate
//! instead of raising an error.

use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::graph::{Graph, GraphError};

#[derive(Debug, Error)]
pub enum BoundError {
    #[error("beta must lie in (1/2, 1], got {0}")]
    InvalidBeta(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("exhaustive search limited to {limit} nodes, graph has {n}")]
    TooLarge { n: usize, limit: usize },
    #[error("given set does not contain the control support")]
    SupportNotSubset,
    #[error("feedback gain {k} must be below c alpha p / 2 = {limit}")]
    KTooLarge { k: f64, limit: f64 },
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Upper,
    Lower,
    Identity,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub name: String,
    pub kind: BoundKind,
    pub value: f64,
    pub hypotheses: Vec<String>,
    pub inputs: Map<String, Value>,
    /// Set when the value hit a `x / 0` or clamping convention.
    pub degenerate: bool,
}

impl Serialize for BoundReport {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let mut m = s.serialize_map(None)?;
        m.serialize_entry("name", &self.name)?;
        m.serialize_entry("kind", &self.kind)?;
        m.serialize_entry("value", &json_number(self.value))?;
        m.serialize_entry("hypotheses", &self.hypotheses)?;
        m.serialize_entry("inputs", &self.inputs)?;
        if self.degenerate {
            m.serialize_entry("degenerate", &true)?;
        }
        m.end()
    }
}

/// JSON has no infinity; non-finite values are written as strings.
pub fn json_number(v: f64) -> Value {
    if v.is_finite() {
        Value::from(v)
    } else if v.is_nan() {
        Value::from("nan")
    } else if v > 0.0 {
        Value::from("inf")
    } else {
        Value::from("-inf")
    }
}

impl BoundReport {
    fn new(name: &str, kind: BoundKind, value: f64, hypotheses: &[&str], inputs: &[(&str, Value)]) -> Self {
        BoundReport {
            name: name.to_string(),
            kind,
            value,
            hypotheses: hypotheses.iter().map(|h| h.to_string()).collect(),
            inputs: inputs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect(),
            degenerate: !value.is_finite(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("report serializes")
    }
}

fn check_beta(beta: f64) -> Result<(), BoundError> {
    if beta > 0.5 && beta <= 1.0 {
        Ok(())
    } else {
        Err(BoundError::InvalidBeta(beta))
    }
}

fn check_positive(name: &str, v: f64) -> Result<(), BoundError> {
    if v > 0.0 && !v.is_nan() {
        Ok(())
    } else {
        Err(BoundError::InvalidInput(format!("{name} must be positive, got {v}")))
    }
}

fn check_nonneg_profile(name: &str, values: &[f64]) -> Result<(), BoundError> {
    match values.iter().find(|v| v.is_nan() || **v < 0.0) {
        Some(v) => Err(BoundError::InvalidInput(format!("{name} entries must be nonnegative, got {v}"))),
        None => Ok(()),
    }
}

/// `1 / v` with `1 / 0 = +inf` and `1 / inf = 0`.
fn recip(v: f64) -> f64 {
    if v == 0.0 {
        f64::INFINITY
    } else {
        1.0 / v
    }
}

fn harmonic(values: &[f64]) -> f64 {
    values.iter().map(|&v| recip(v)).sum()
}

/// `beta / ((2 beta - 1) f(0)) + (1 / (2 beta - 1)) sum_{a=1}^{n-1} 1 / f(a)`,
/// with `f[a]` holding `f(a)` for `a = 0..n-1`.
pub fn theorem1_upper(f: &[f64], beta: f64) -> Result<BoundReport, BoundError> {
    check_beta(beta)?;
    if f.is_empty() {
        return Err(BoundError::InvalidInput("f needs at least the entry f(0)".into()));
    }
    check_nonneg_profile("f", f)?;
    let d = 2.0 * beta - 1.0;
    let value = beta / d * recip(f[0]) + harmonic(&f[1..]) / d;
    Ok(BoundReport::new(
        "theorem1_upper",
        BoundKind::Upper,
        value,
        &["beta>1/2", "f(a)<=min rate of increase at size a"],
        &[("beta", beta.into()), ("n", f.len().into())],
    ))
}

/// Theorem-1 bound with `f(0) = 1^T u` and `f(a) = phi(a)`; `phi[a - 1] = phi(a)`.
pub fn corollary1_upper(phi: &[f64], beta: f64, total_u: f64) -> Result<BoundReport, BoundError> {
    check_positive("total_u", total_u)?;
    let mut f = Vec::with_capacity(phi.len() + 1);
    f.push(total_u);
    f.extend_from_slice(phi);
    let mut r = theorem1_upper(&f, beta)?;
    r.name = "corollary1_upper".into();
    r.hypotheses = vec!["constant-policy".into(), "beta>1/2".into(), "x0=0".into()];
    r.inputs.insert("total_u".into(), total_u.into());
    Ok(r)
}

/// `sum_{h=|U|}^{n-1} 1 / eta(h)` with `eta[h - 1] = eta(h)`.
pub fn corollary3_lower(eta: &[f64], support_size: usize) -> Result<BoundReport, BoundError> {
    let n = eta.len() + 1;
    if support_size == 0 || support_size >= n {
        return Err(BoundError::InvalidInput(format!("support size must lie in 1..={}, got {support_size}", n - 1)));
    }
    check_nonneg_profile("eta", eta)?;
    let value = harmonic(&eta[support_size - 1..]);
    Ok(BoundReport::new(
        "corollary3_lower",
        BoundKind::Lower,
        value,
        &["open-loop-policy", "support fixed", "x0=0"],
        &[("n", n.into()), ("support_size", support_size.into())],
    ))
}

/// `1 / (1^T u) + corollary3_lower`.
pub fn corollary4_lower(eta: &[f64], support_size: usize, total_u: f64) -> Result<BoundReport, BoundError> {
    check_positive("total_u", total_u)?;
    let base = corollary3_lower(eta, support_size)?;
    let mut r = BoundReport::new(
        "corollary4_lower",
        BoundKind::Lower,
        1.0 / total_u + base.value,
        &["constant-policy", "x0=0"],
        &[("n", (eta.len() + 1).into()), ("support_size", support_size.into()), ("total_u", total_u.into())],
    );
    r.degenerate = base.degenerate;
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Corollary5Mode {
    /// Minimum boundary over every proper superset of the support.
    Exhaustive { limit: usize },
    /// A caller-supplied superset `R` of the support.
    GivenSet(Vec<usize>),
}

/// `1 / min_R zeta(R)` over node sets `R` with `support ⊆ R ⊊ V`.
pub fn corollary5_lower(g: &Graph, support: &[usize], mode: Corollary5Mode) -> Result<BoundReport, BoundError> {
    let n = g.n();
    let mut inside = vec![false; n];
    for &i in support {
        if i >= n {
            return Err(BoundError::InvalidInput(format!("node {i} out of range")));
        }
        inside[i] = true;
    }
    let (value, hyp, extra): (f64, &str, Value) = match mode {
        Corollary5Mode::GivenSet(r) => {
            let mut member = vec![false; n];
            for &i in &r {
                if i >= n {
                    return Err(BoundError::InvalidInput(format!("node {i} out of range")));
                }
                member[i] = true;
            }
            if inside.iter().zip(&member).any(|(&s, &m)| s && !m) {
                return Err(BoundError::SupportNotSubset);
            }
            (recip(g.boundary(&member)), "given superset", Value::from(r))
        }
        Corollary5Mode::Exhaustive { limit } => {
            if n > limit || n >= 64 {
                return Err(BoundError::TooLarge { n, limit });
            }
            (recip(min_superset_boundary(g, &inside)), "exhaustive over proper supersets", Value::Null)
        }
    };
    let mut r = BoundReport::new(
        "corollary5_lower",
        BoundKind::Lower,
        value,
        &["open-loop-policy", "support fixed", "x0=0", hyp],
        &[("n", n.into()), ("support", Value::from(support.to_vec()))],
    );
    if !extra.is_null() {
        r.inputs.insert("superset".into(), extra);
    }
    Ok(r)
}

/// Gray-code walk over subsets of the free nodes; the full node set is skipped.
fn min_superset_boundary(g: &Graph, fixed: &[bool]) -> f64 {
    let n = g.n();
    let free: Vec<usize> = (0..n).filter(|&i| !fixed[i]).collect();
    if free.is_empty() {
        return 0.0;
    }
    let mut member = fixed.to_vec();
    let mut contact: Vec<f64> = (0..n).map(|i| g.neighbors(i).filter(|&(j, _)| member[j]).map(|(_, w)| w).sum()).collect();
    let mut zeta = g.boundary(&member);
    let mut count = n - free.len();
    let mut best = if count > 0 { zeta } else { f64::INFINITY };
    for step in 1u64..(1u64 << free.len()) {
        let k = free[step.trailing_zeros() as usize];
        let delta = g.degree_weight(k) - 2.0 * contact[k];
        let sign = if member[k] { -1.0 } else { 1.0 };
        zeta += sign * delta;
        member[k] = !member[k];
        count = if member[k] { count + 1 } else { count - 1 };
        for (j, w) in g.neighbors(k) {
            contact[j] += sign * w;
        }
        if count > 0 && count < n && zeta < best {
            best = zeta;
        }
    }
    best.max(0.0)
}

/// `(1 / alpha) ln(n / |U|)`.
pub fn log_lower(alpha: f64, n: usize, support_size: usize) -> Result<BoundReport, BoundError> {
    check_positive("alpha", alpha)?;
    if support_size == 0 || support_size > n {
        return Err(BoundError::InvalidInput(format!("support size must lie in 1..={n}")));
    }
    Ok(BoundReport::new(
        "log_lower",
        BoundKind::Lower,
        (n as f64 / support_size as f64).ln() / alpha,
        &["open-loop-policy", "weights scaled by alpha/max_degree", "x0=0"],
        &[("alpha", alpha.into()), ("n", n.into()), ("support_size", support_size.into())],
    ))
}

/// Upper bound for expander families with `phi(a) >= gamma min(a, n - a)`.
pub fn expander_upper(beta: f64, total_u: f64, gamma: f64, n: usize) -> Result<BoundReport, BoundError> {
    check_beta(beta)?;
    check_positive("total_u", total_u)?;
    check_positive("gamma", gamma)?;
    if n < 2 {
        return Err(BoundError::InvalidInput("n must be at least 2".into()));
    }
    let d = 2.0 * beta - 1.0;
    let value = beta / (d * total_u) + (2.0 * (n as f64 / 2.0).ln() + 2.0) / (gamma * d);
    Ok(BoundReport::new(
        "expander_upper",
        BoundKind::Upper,
        value,
        &["constant-policy", "beta>1/2", "phi(a)>=gamma*min(a,n-a)", "x0=0"],
        &[("beta", beta.into()), ("total_u", total_u.into()), ("gamma", gamma.into()), ("n", n.into())],
    ))
}

fn check_sbm(n: usize, c: f64, p: f64, links: usize, alpha: f64) -> Result<(), BoundError> {
    if !(c > 0.0 && c <= 0.5) || !(p > 0.0 && p <= 1.0) || links == 0 || n < 2 {
        return Err(BoundError::InvalidInput(format!("invalid SBM parameters n={n} c={c} p={p} L={links}")));
    }
    check_positive("alpha", alpha)
}

fn sbm_inputs(n: usize, c: f64, p: f64, links: usize, alpha: f64) -> Vec<(&'static str, Value)> {
    vec![("n", n.into()), ("c", c.into()), ("p", p.into()), ("L", links.into()), ("alpha", alpha.into())]
}

/// Lower and upper time bounds for the two-community block model; both hold
/// with high probability over the graph.
pub fn sbm_bounds(
    beta: f64,
    total_u: f64,
    n: usize,
    c: f64,
    p: f64,
    links: usize,
    alpha: f64,
) -> Result<(BoundReport, BoundReport), BoundError> {
    check_beta(beta)?;
    check_positive("total_u", total_u)?;
    check_sbm(n, c, p, links, alpha)?;
    let nf = n as f64;
    let lf = links as f64;
    let lower = (1.0 - c) * nf * p / (alpha * lf);
    let d = 2.0 * beta - 1.0;
    let upper = (2.0 * nf / (lf * alpha) + 12.0 / (c * alpha * p) * ((nf / 2.0).ln() + 1.0)) / d + beta / (d * total_u);
    let mut inputs = sbm_inputs(n, c, p, links, alpha);
    let lo = BoundReport::new(
        "sbm_lower",
        BoundKind::Lower,
        lower,
        &["open-loop-policy", "support in community 1", "whp-over-graph", "x0=0"],
        &inputs,
    );
    inputs.push(("beta", beta.into()));
    inputs.push(("total_u", total_u.into()));
    let hi = BoundReport::new(
        "sbm_upper",
        BoundKind::Upper,
        upper,
        &["constant-policy", "beta>1/2", "whp-over-graph", "x0=0"],
        &inputs,
    );
    Ok((lo, hi))
}

/// `n / (4 E[J]) - 1/4`, clamped at 0.
pub fn ring_lower(n: usize, expected_cost: f64) -> Result<BoundReport, BoundError> {
    check_positive("expected_cost", expected_cost)?;
    let raw = n as f64 / (4.0 * expected_cost) - 0.25;
    let mut r = BoundReport::new(
        "ring_lower",
        BoundKind::Lower,
        raw.max(0.0),
        &["ring graph", "weights alpha/2", "open-loop-policy", "x0=0"],
        &[("n", n.into()), ("expected_cost", expected_cost.into())],
    );
    r.degenerate = raw < 0.0;
    Ok(r)
}

/// Time and cost upper bounds for the feedback policy with gain `K`.
pub fn feedback_bounds(phi: &[f64], k: f64, beta: f64) -> Result<(BoundReport, BoundReport), BoundError> {
    check_beta(beta)?;
    check_positive("K", k)?;
    check_nonneg_profile("phi", phi)?;
    let d = 2.0 * beta - 1.0;
    let floored = crate::graph::floor_profile(phi, k);
    let time = beta / (d * k) + harmonic(&floored) / d;
    let violations = phi.iter().filter(|&&v| v < k).count();
    let cost = (beta + violations as f64) / d;
    let inputs = [("K", k.into()), ("beta", beta.into()), ("n", (phi.len() + 1).into())];
    let mut t = BoundReport::new("feedback_time_upper", BoundKind::Upper, time, &["feedback-policy", "beta>1/2", "x0=0"], &inputs);
    t.inputs.insert("violations".into(), violations.into());
    let c = BoundReport::new("feedback_cost_upper", BoundKind::Upper, cost, &["feedback-policy", "beta>1/2", "x0=0"], &inputs);
    Ok((t, c))
}

/// `K < c alpha p / 2`, treating equality up to rounding as a violation.
pub fn sbm_gain_admissible(k: f64, c: f64, p: f64, alpha: f64) -> bool {
    k < c * alpha * p / 2.0 * (1.0 - 1e-12)
}

/// Feedback bounds on the block model for `K < c alpha p / 2`; returns
/// `(time_upper, cost_upper)`, both with high probability over the graph.
pub fn sbm_feedback_upper(
    beta: f64,
    k: f64,
    c: f64,
    p: f64,
    alpha: f64,
    n: usize,
) -> Result<(BoundReport, BoundReport), BoundError> {
    check_beta(beta)?;
    check_positive("K", k)?;
    check_sbm(n, c, p, 1, alpha)?;
    if !sbm_gain_admissible(k, c, p, alpha) {
        return Err(BoundError::KTooLarge { k, limit: c * alpha * p / 2.0 });
    }
    let d = 2.0 * beta - 1.0;
    let time = beta / (d * k) + (2.0 / k + 12.0 / (c * alpha * p) * ((n as f64 / 2.0).ln() + 1.0)) / d;
    let cost = (2.0 + beta) / d;
    let inputs = [
        ("beta", beta.into()),
        ("K", k.into()),
        ("c", c.into()),
        ("p", p.into()),
        ("alpha", alpha.into()),
        ("n", n.into()),
    ];
    let hyp = ["feedback-policy", "K<c*alpha*p/2", "whp-over-graph", "x0=0"];
    Ok((
        BoundReport::new("sbm_feedback_time_upper", BoundKind::Upper, time, &hyp, &inputs),
        BoundReport::new("sbm_feedback_cost_upper", BoundKind::Upper, cost, &hyp, &inputs),
    ))
}

/// `(2 beta - 1) / beta`, a floor on the probability of never dropping below
/// the current level.
pub fn moran_lower(beta: f64) -> Result<f64, BoundError> {
    check_beta(beta)?;
    Ok((2.0 * beta - 1.0) / beta)
}

/// Probability that the walk moving up with probability `beta` from level `a`
/// reaches `n` before `a - 1`: `(1 - rho) / (1 - rho^(n - a + 1))` with
/// `rho = (1 - beta) / beta`.
pub fn birth_death_survival(beta: f64, n: usize, a: usize) -> Result<f64, BoundError> {
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(BoundError::InvalidBeta(beta));
    }
    if a == 0 || a > n {
        return Err(BoundError::InvalidInput(format!("level a must lie in 1..={n}, got {a}")));
    }
    let m = (n - a + 1) as i32;
    let rho = (1.0 - beta) / beta;
    if (rho - 1.0).abs() < 1e-12 {
        return Ok(1.0 / m as f64);
    }
    Ok((1.0 - rho) / (1.0 - rho.powi(m)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn theorem1_examples() {
        let r = theorem1_upper(&[1.0, 1.0, 1.0], 0.8).unwrap();
        assert!(close(r.value, 0.8 / 0.6 + 2.0 / 0.6, 1e-12));
        assert!(close(r.value, 4.6667, 1e-4));
        let r = theorem1_upper(&[2.0, f64::INFINITY, f64::INFINITY], 0.8).unwrap();
        assert!(close(r.value, 0.8 / (0.6 * 2.0), 1e-12));
        assert!(close(theorem1_upper(&[1.0; 3], 1.0).unwrap().value, 3.0, 1e-12));
        assert!(matches!(theorem1_upper(&[1.0], 0.5), Err(BoundError::InvalidBeta(_))));
        let zero = theorem1_upper(&[1.0, 0.0], 0.8).unwrap();
        assert!(zero.value.is_infinite() && zero.degenerate);
    }

    #[test]
    fn corollary1_examples() {
        let g = Graph::complete(4, 1.0).unwrap();
        let phi = g.profiles().unwrap().phi;
        let r = corollary1_upper(&phi, 0.8, 1.0).unwrap();
        assert!(close(r.value, 0.8 / 0.6 + (1.0 + 0.75 + 1.0) / 0.6, 1e-12));
        assert!(close(r.value, 5.9167, 1e-4));
        let path = Graph::path(2, 1.0).unwrap();
        let r = corollary1_upper(&path.profiles().unwrap().phi, 0.8, 1.0).unwrap();
        assert!(close(r.value, 3.0, 1e-12));
        // the 1^T u term vanishes in the limit
        let big = corollary1_upper(&phi, 0.8, 1e12).unwrap();
        assert!(close(big.value, 2.75 / 0.6, 1e-9));
    }

    #[test]
    fn eta_sums() {
        let g = Graph::complete(4, 1.0).unwrap();
        let eta = g.profiles().unwrap().eta;
        assert!(close(corollary3_lower(&eta, 1).unwrap().value, 2.75, 1e-12));
        assert!(close(corollary3_lower(&eta, 3).unwrap().value, 1.0, 1e-12));
        assert!(close(corollary4_lower(&eta, 1, 1.0).unwrap().value, 3.75, 1e-12));
        let big = corollary4_lower(&eta, 1, 1e15).unwrap().value;
        assert!(close(big, 2.75, 1e-12));
        let ring = Graph::ring(6, 1.0).unwrap();
        let r = corollary3_lower(&ring.profiles().unwrap().eta, 1).unwrap();
        assert!(close(r.value, 1.0 + 0.5 + 1.0 / 3.0 + 0.5 + 1.0, 1e-12));
        let path = Graph::path(2, 1.0).unwrap();
        assert!(close(corollary4_lower(&path.profiles().unwrap().eta, 1, 1.0).unwrap().value, 2.0, 1e-12));
        assert!(corollary3_lower(&eta, 0).is_err());
        assert!(corollary3_lower(&eta, 4).is_err());
    }

    #[test]
    fn corollary5_modes() {
        let ring = Graph::ring(6, 1.0).unwrap();
        let r = corollary5_lower(&ring, &[0], Corollary5Mode::Exhaustive { limit: 22 }).unwrap();
        assert!(close(r.value, 1.0, 1e-12));
        let all: Vec<usize> = (0..6).collect();
        let r = corollary5_lower(&ring, &all, Corollary5Mode::Exhaustive { limit: 22 }).unwrap();
        assert!(r.value.is_infinite() && r.degenerate);
        assert_eq!(r.kind, BoundKind::Lower);
        let r = corollary5_lower(&ring, &[0], Corollary5Mode::GivenSet(vec![0, 1, 2])).unwrap();
        assert!(close(r.value, 1.0, 1e-12));
        assert!(matches!(
            corollary5_lower(&ring, &[0], Corollary5Mode::GivenSet(vec![1, 2])),
            Err(BoundError::SupportNotSubset)
        ));
        assert!(matches!(
            corollary5_lower(&ring, &[0], Corollary5Mode::Exhaustive { limit: 4 }),
            Err(BoundError::TooLarge { .. })
        ));
        // a heavy edge next to the support makes the singleton the best set
        let g = Graph::build(3, &[(0, 1, 5.0), (1, 2, 0.5)]).unwrap();
        let r = corollary5_lower(&g, &[0], Corollary5Mode::Exhaustive { limit: 22 }).unwrap();
        assert!(close(r.value, 2.0, 1e-12));
    }

    #[test]
    fn scalar_bounds() {
        assert!(close(log_lower(1.0, 1000, 1).unwrap().value, 6.9078, 1e-4));
        assert_eq!(log_lower(1.0, 7, 7).unwrap().value, 0.0);
        assert!(close(log_lower(2.0, 1, 1).unwrap().value, 0.0, 0.0));
        let e2 = std::f64::consts::E.powi(2);
        let n = (e2 * 1000.0).round() as usize;
        assert!(close(log_lower(2.0, n, 1000).unwrap().value, 1.0, 1e-4));
        assert!(close(expander_upper(0.7, 1.0, 0.5, 1000).unwrap().value, 73.90, 0.01));
        assert!(close(expander_upper(0.95, 1.0, 1.0, 2).unwrap().value, 3.2778, 1e-4));
        assert!(expander_upper(0.7, 1.0, 2.0, 100).unwrap().value < expander_upper(0.7, 1.0, 1.0, 100).unwrap().value);
        assert!(close(expander_upper(0.7, 1.0, 1.0, 1000).unwrap().value, 37.823, 1e-3));
        assert!(close(moran_lower(0.75).unwrap(), 2.0 / 3.0, 1e-15));
        assert_eq!(moran_lower(1.0).unwrap(), 1.0);
        assert!(moran_lower(0.5 + 1e-9).unwrap() < 1e-8);
    }

    #[test]
    fn sbm_formulas() {
        let (lo, hi) = sbm_bounds(0.8, 1.0, 2000, 0.4, 0.1, 5, 1.0).unwrap();
        assert!(close(lo.value, 24.0, 1e-9));
        let expected = (800.0 + 300.0 * (1000f64.ln() + 1.0)) / 0.6 + 0.8 / 0.6;
        assert!(close(hi.value, expected, 1e-9));
        assert!(close(hi.value, 5288.544, 1e-3));
        assert!(lo.hypotheses.iter().any(|h| h == "whp-over-graph"));
        let (lo2, _) = sbm_bounds(0.8, 1.0, 4000, 0.4, 0.1, 5, 1.0).unwrap();
        assert!(close(lo2.value, 2.0 * lo.value, 1e-9));

        let (t, c) = sbm_feedback_upper(0.8, 0.01, 0.4, 0.1, 1.0, 2000).unwrap();
        assert!(close(c.value, 2.8 / 0.6, 1e-12));
        let expected = 0.8 / 0.006 + (200.0 + 300.0 * (1000f64.ln() + 1.0)) / 0.6;
        assert!(close(t.value, expected, 1e-9));
        assert!(close(t.value, 4420.544, 1e-3));
        assert!(matches!(sbm_feedback_upper(0.8, 0.02, 0.4, 0.1, 1.0, 2000), Err(BoundError::KTooLarge { .. })));
    }

    #[test]
    fn ring_and_feedback() {
        assert!(close(ring_lower(100, 5.0).unwrap().value, 4.75, 1e-12));
        assert!(close(ring_lower(800, 10.0).unwrap().value, 19.75, 1e-12));
        let r = ring_lower(10, 1e9).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(r.degenerate);

        let (t, c) = feedback_bounds(&[1.0, 1.0], 0.5, 0.8).unwrap();
        assert!(close(t.value, 6.0, 1e-12));
        assert!(close(c.value, 0.8 / 0.6, 1e-12));
        let (_, c) = feedback_bounds(&[0.1, 0.1, 1.0], 0.5, 0.8).unwrap();
        assert!(close(c.value, 2.8 / 0.6, 1e-12));
        let phi = [0.3, 0.2, 0.7, 1.5];
        let mut last_t = f64::INFINITY;
        let mut last_c = 0.0;
        for k in [0.05, 0.1, 0.25, 0.5, 1.0, 2.0] {
            let (t, c) = feedback_bounds(&phi, k, 0.8).unwrap();
            assert!(t.value <= last_t && c.value >= last_c);
            last_t = t.value;
            last_c = c.value;
        }
    }

    #[test]
    fn survival_closed_form() {
        assert!(close(birth_death_survival(0.75, 3, 2).unwrap(), 0.75, 1e-15));
        assert_eq!(birth_death_survival(0.8, 7, 7).unwrap(), 1.0);
        assert!(close(birth_death_survival(0.5, 10, 4).unwrap(), 1.0 / 7.0, 1e-15));
        assert!(birth_death_survival(0.8, 5, 0).is_err());
        assert!(birth_death_survival(0.8, 5, 6).is_err());
    }

    #[test]
    fn json_shape() {
        let r = corollary5_lower(&Graph::ring(4, 1.0).unwrap(), &[0, 1, 2, 3], Corollary5Mode::Exhaustive { limit: 22 })
            .unwrap();
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert_eq!(v["value"], "inf");
        assert_eq!(v["kind"], "lower");
        assert_eq!(v["name"], "corollary5_lower");
        assert!(v["hypotheses"].is_array() && v["inputs"].is_object());
        let r = log_lower(1.0, 1000, 1).unwrap();
        let v: Value = serde_json::from_str(&r.to_json()).unwrap();
        assert!(v["value"].is_f64());
        assert!(v.get("degenerate").is_none());
    }
}
