//! Control signals: constant, piecewise-constant open-loop and feedback policies.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PolicyError {
    #[error("negative control rate {rate} at node {node}")]
    NegativeRate { node: usize, rate: f64 },
    #[error("control entry for node {node} outside graph of {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("node {0} listed twice in control vector")]
    DuplicateNode(usize),
    #[error("invalid open-loop schedule: {0}")]
    InvalidSchedule(String),
    #[error("feedback gain must be positive, got {0}")]
    NonPositiveGain(f64),
    #[error("cannot parse control vector `{0}`: expected rate@node[,rate@node...]")]
    Parse(String),
}

/// Sparse nonnegative per-node control rates, sorted by node.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<(usize, f64)>", into = "Vec<(usize, f64)>")]
pub struct ControlVector(Vec<(usize, f64)>);

impl ControlVector {
    pub fn new(mut entries: Vec<(usize, f64)>) -> Result<Self, PolicyError> {
        for &(node, rate) in &entries {
            if !(rate >= 0.0 && rate.is_finite()) {
                return Err(PolicyError::NegativeRate { node, rate });
            }
        }
        entries.sort_by_key(|e| e.0);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(PolicyError::DuplicateNode(w[0].0));
        }
        Ok(ControlVector(entries))
    }

    /// `rate * delta^(node)`.
    pub fn delta(node: usize, rate: f64) -> Result<Self, PolicyError> {
        Self::new(vec![(node, rate)])
    }

    pub fn zero() -> Self {
        ControlVector(Vec::new())
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.0
    }

    /// `1^T u`.
    pub fn total(&self) -> f64 {
        self.0.iter().map(|e| e.1).sum()
    }

    /// Nodes receiving a strictly positive rate.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().filter(|e| e.1 > 0.0).map(|e| e.0).collect()
    }

    pub fn check_nodes(&self, n: usize) -> Result<(), PolicyError> {
        match self.0.iter().find(|e| e.0 >= n) {
            Some(&(node, _)) => Err(PolicyError::NodeOutOfRange { node, n }),
            None => Ok(()),
        }
    }

    pub fn to_dense(&self, n: usize) -> Result<Vec<f64>, PolicyError> {
        self.check_nodes(n)?;
        let mut dense = vec![0.0; n];
        for &(i, r) in &self.0 {
            dense[i] = r;
        }
        Ok(dense)
    }
}

impl TryFrom<Vec<(usize, f64)>> for ControlVector {
    type Error = PolicyError;

    fn try_from(v: Vec<(usize, f64)>) -> Result<Self, Self::Error> {
        ControlVector::new(v)
    }
}

impl From<ControlVector> for Vec<(usize, f64)> {
    fn from(v: ControlVector) -> Self {
        v.0
    }
}

impl FromStr for ControlVector {
    type Err = PolicyError;

    /// Parses the compact `rate@node[,rate@node...]` syntax.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || PolicyError::Parse(s.to_string());
        let trimmed = s.trim();
        if trimmed.is_empty() {
            return Ok(ControlVector::zero());
        }
        let entries = trimmed
            .split(',')
            .map(|item| {
                let (rate, node) = item.trim().split_once('@').ok_or_else(bad)?;
                let rate: f64 = rate.trim().parse().map_err(|_| bad())?;
                let node: usize = node.trim().parse().map_err(|_| bad())?;
                Ok((node, rate))
            })
            .collect::<Result<Vec<_>, PolicyError>>()?;
        ControlVector::new(entries)
    }
}

impl fmt::Display for ControlVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|(i, r)| format!("{r}@{i}")).collect();
        f.write_str(&parts.join(","))
    }
}

/// Which 0-node receives a targeted control rate.
///
/// `MaxContact` is the default: the 0-node with the largest weighted contact
/// with the current 1-set, ties broken by lowest index (lowest index overall
/// when no node is in state 1). This is a local greedy choice; other rules are
/// equally admissible.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetRule {
    #[default]
    MaxContact,
    LowestIndex,
    /// Uniformly random 0-node, redrawn after every jump.
    RandomZero,
}

impl FromStr for TargetRule {
    type Err = PolicyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "max-contact" => Ok(TargetRule::MaxContact),
            "lowest-index" => Ok(TargetRule::LowestIndex),
            "random-zero" => Ok(TargetRule::RandomZero),
            other => Err(PolicyError::Parse(other.to_string())),
        }
    }
}

impl fmt::Display for TargetRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TargetRule::MaxContact => "max-contact",
            TargetRule::LowestIndex => "lowest-index",
            TargetRule::RandomZero => "random-zero",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ControlPolicy {
    /// `U(t) = u` for all `t`.
    Constant { u: ControlVector },
    /// `rates[k]` is active on `[breakpoints[k-1], breakpoints[k])`, with the
    /// first segment starting at 0 and the last one extending to infinity.
    OpenLoop { breakpoints: Vec<f64>, rates: Vec<ControlVector> },
    /// Rate `max(K - B, 0)` on the target node while `A < n`.
    Feedback { gain: f64, #[serde(default)] target: TargetRule },
    /// Constant `rate` on the target node, independent of the boundary.
    Targeted { rate: f64, #[serde(default)] target: TargetRule },
}

impl ControlPolicy {
    pub fn constant(u: ControlVector) -> Self {
        ControlPolicy::Constant { u }
    }

    pub fn open_loop(breakpoints: Vec<f64>, rates: Vec<ControlVector>) -> Result<Self, PolicyError> {
        let policy = ControlPolicy::OpenLoop { breakpoints, rates };
        policy.validate_shape()?;
        Ok(policy)
    }

    pub fn feedback(gain: f64, target: TargetRule) -> Result<Self, PolicyError> {
        let policy = ControlPolicy::Feedback { gain, target };
        policy.validate_shape()?;
        Ok(policy)
    }

    pub fn targeted(rate: f64, target: TargetRule) -> Result<Self, PolicyError> {
        let policy = ControlPolicy::Targeted { rate, target };
        policy.validate_shape()?;
        Ok(policy)
    }

    /// Checks the structural constraints that do not depend on the graph.
    pub fn validate_shape(&self) -> Result<(), PolicyError> {
        match self {
            ControlPolicy::Constant { .. } => Ok(()),
            ControlPolicy::OpenLoop { breakpoints, rates } => {
                if rates.len() != breakpoints.len() + 1 {
                    return Err(PolicyError::InvalidSchedule(format!(
                        "{} breakpoints need {} rate vectors, got {}",
                        breakpoints.len(),
                        breakpoints.len() + 1,
                        rates.len()
                    )));
                }
                let mut prev = 0.0;
                for &t in breakpoints {
                    if !(t > prev && t.is_finite()) {
                        return Err(PolicyError::InvalidSchedule(
                            "breakpoints must be positive, finite and strictly increasing".into(),
                        ));
                    }
                    prev = t;
                }
                Ok(())
            }
            ControlPolicy::Feedback { gain, .. } => {
                if *gain > 0.0 && gain.is_finite() {
                    Ok(())
                } else {
                    Err(PolicyError::NonPositiveGain(*gain))
                }
            }
            ControlPolicy::Targeted { rate, .. } => {
                if *rate > 0.0 && rate.is_finite() {
                    Ok(())
                } else {
                    Err(PolicyError::NonPositiveGain(*rate))
                }
            }
        }
    }

    pub fn check_nodes(&self, n: usize) -> Result<(), PolicyError> {
        match self {
            ControlPolicy::Constant { u } => u.check_nodes(n),
            ControlPolicy::OpenLoop { rates, .. } => rates.iter().try_for_each(|r| r.check_nodes(n)),
            _ => Ok(()),
        }
    }

    /// True when the control signal does not depend on the state.
    pub fn is_open_loop(&self) -> bool {
        matches!(self, ControlPolicy::Constant { .. } | ControlPolicy::OpenLoop { .. })
    }

    /// True when the control is a fixed function of the configuration.
    pub fn is_time_homogeneous(&self) -> bool {
        match self {
            ControlPolicy::OpenLoop { rates, .. } => rates.windows(2).all(|w| w[0] == w[1]),
            _ => true,
        }
    }

    /// Union of the supports of all open-loop segments; `None` for policies
    /// whose support depends on the state.
    pub fn support(&self) -> Option<Vec<usize>> {
        match self {
            ControlPolicy::Constant { u } => Some(u.support()),
            ControlPolicy::OpenLoop { rates, .. } => {
                let mut all: Vec<usize> = rates.iter().flat_map(|r| r.support()).collect();
                all.sort_unstable();
                all.dedup();
                Some(all)
            }
            _ => None,
        }
    }

    /// Open-loop rate vector active at time `t`.
    pub fn segment_at(&self, t: f64) -> Option<&ControlVector> {
        match self {
            ControlPolicy::Constant { u } => Some(u),
            ControlPolicy::OpenLoop { breakpoints, rates } => {
                let k = breakpoints.partition_point(|&b| b <= t);
                rates.get(k)
            }
            _ => None,
        }
    }

    /// Smallest total rate the policy can apply while the configuration is all-0.
    pub fn min_rate_at_zero(&self) -> f64 {
        match self {
            ControlPolicy::Constant { u } => u.total(),
            ControlPolicy::OpenLoop { rates, .. } => rates.iter().map(|r| r.total()).fold(f64::INFINITY, f64::min),
            ControlPolicy::Feedback { gain, .. } => *gain,
            ControlPolicy::Targeted { rate, .. } => *rate,
        }
    }
}

/// Parses an open-loop schedule: one `start_time rate@node[,...]` line per
/// segment, the first starting at 0. Blank lines and `#` comments are skipped.
pub fn parse_schedule(text: &str) -> Result<ControlPolicy, PolicyError> {
    let mut starts = Vec::new();
    let mut rates = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (start, spec) = match line.split_once(char::is_whitespace) {
            Some((s, rest)) => (s, rest.trim()),
            None => (line, ""),
        };
        let start: f64 = start
            .parse()
            .map_err(|_| PolicyError::InvalidSchedule(format!("bad start time in `{line}`")))?;
        starts.push(start);
        rates.push(spec.parse()?);
    }
    if starts.first() != Some(&0.0) {
        return Err(PolicyError::InvalidSchedule("first segment must start at 0".into()));
    }
    ControlPolicy::open_loop(starts[1..].to_vec(), rates)
}
