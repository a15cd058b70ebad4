//! Weighted undirected graphs, benchmark generators and cut profiles.
//!
//! A [`Graph`] is immutable once built: adjacency is stored in CSR form with
//! every undirected link present in both endpoint rows. Generators follow the
//! `w = alpha / max_degree` scaling so that the total weight incident to any
//! node never exceeds `alpha`.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default number of regeneration attempts for random graph generators.
pub const DEFAULT_RETRY_BUDGET: usize = 100;

/// Largest node count accepted by the exhaustive profile enumeration.
pub const DEFAULT_EXHAUSTIVE_LIMIT: usize = 22;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("node {node} out of range for graph with {n} nodes")]
    NodeOutOfRange { node: usize, n: usize },
    #[error("self-loop on node {0}")]
    SelfLoop(usize),
    #[error("duplicate edge {{{0}, {1}}}")]
    DuplicateEdge(usize, usize),
    #[error("non-positive weight {w} on edge {{{i}, {j}}}")]
    NonPositiveWeight { i: usize, j: usize, w: f64 },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("ring needs at least 3 nodes, got {0}")]
    RingTooSmall(usize),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("no connected realization after {attempts} attempts")]
    GenerationFailed { attempts: usize },
    #[error("exhaustive enumeration limited to {limit} nodes, graph has {n}")]
    TooLargeForExhaustive { n: usize, limit: usize },
    #[error("no closed-form profile for {0} graphs")]
    NoClosedForm(GraphTag),
    #[error("edge list parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Records which generator produced a graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GraphTag {
    Complete,
    Ring,
    Path,
    Star,
    Sbm,
    Er,
    Custom,
}

impl GraphTag {
    pub fn as_str(self) -> &'static str {
        match self {
            GraphTag::Complete => "complete",
            GraphTag::Ring => "ring",
            GraphTag::Path => "path",
            GraphTag::Star => "star",
            GraphTag::Sbm => "sbm",
            GraphTag::Er => "er",
            GraphTag::Custom => "custom",
        }
    }
}

impl fmt::Display for GraphTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for GraphTag {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "complete" => GraphTag::Complete,
            "ring" => GraphTag::Ring,
            "path" => GraphTag::Path,
            "star" => GraphTag::Star,
            "sbm" => GraphTag::Sbm,
            "er" => GraphTag::Er,
            "custom" => GraphTag::Custom,
            other => return Err(GraphError::InvalidParams(format!("unknown graph tag `{other}`"))),
        })
    }
}

/// Connected weighted undirected graph without self-loops.
#[derive(Debug, Clone, PartialEq)]
pub struct Graph {
    n: usize,
    offsets: Vec<usize>,
    neighbors: Vec<usize>,
    weights: Vec<f64>,
    /// Unordered pairs with `i < j`, sorted lexicographically.
    edges: Vec<(usize, usize, f64)>,
    degree_weight: Vec<f64>,
    max_degree: usize,
    alpha: Option<f64>,
    tag: GraphTag,
}

impl Graph {
    /// Builds a graph from an edge list, validating every structural invariant.
    pub fn build(n: usize, edges: &[(usize, usize, f64)]) -> Result<Graph, GraphError> {
        Self::build_tagged(n, edges, None, GraphTag::Custom)
    }

    pub(crate) fn build_tagged(
        n: usize,
        edges: &[(usize, usize, f64)],
        alpha: Option<f64>,
        tag: GraphTag,
    ) -> Result<Graph, GraphError> {
        if n == 0 {
            return Err(GraphError::InvalidParams("graph needs at least one node".into()));
        }
        let mut normalized = Vec::with_capacity(edges.len());
        for &(i, j, w) in edges {
            for node in [i, j] {
                if node >= n {
                    return Err(GraphError::NodeOutOfRange { node, n });
                }
            }
            if i == j {
                return Err(GraphError::SelfLoop(i));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(GraphError::NonPositiveWeight { i, j, w });
            }
            normalized.push((i.min(j), i.max(j), w));
        }
        normalized.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        if let Some(pair) = normalized.windows(2).find(|p| p[0].0 == p[1].0 && p[0].1 == p[1].1) {
            return Err(GraphError::DuplicateEdge(pair[0].0, pair[0].1));
        }

        let mut degree = vec![0usize; n];
        for &(i, j, _) in &normalized {
            degree[i] += 1;
            degree[j] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut fill = offsets.clone();
        let mut neighbors = vec![0usize; offsets[n]];
        let mut weights = vec![0.0; offsets[n]];
        // Edges are sorted by (i, j), so every row ends up sorted by neighbor index.
        for &(i, j, w) in &normalized {
            neighbors[fill[i]] = j;
            weights[fill[i]] = w;
            fill[i] += 1;
        }
        for &(i, j, w) in &normalized {
            neighbors[fill[j]] = i;
            weights[fill[j]] = w;
            fill[j] += 1;
        }
        for i in 0..n {
            let (lo, hi) = (offsets[i], offsets[i + 1]);
            let mut row: Vec<(usize, f64)> =
                neighbors[lo..hi].iter().copied().zip(weights[lo..hi].iter().copied()).collect();
            row.sort_by_key(|&(j, _)| j);
            for (k, (j, w)) in row.into_iter().enumerate() {
                neighbors[lo + k] = j;
                weights[lo + k] = w;
            }
        }
        let degree_weight = (0..n).map(|i| weights[offsets[i]..offsets[i + 1]].iter().sum()).collect();
        let graph = Graph {
            n,
            offsets,
            neighbors,
            weights,
            edges: normalized,
            degree_weight,
            max_degree: degree.iter().copied().max().unwrap_or(0),
            alpha,
            tag,
        };
        if !graph.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(graph)
    }

    /// Complete graph with every link weighted `alpha / (n - 1)`.
    pub fn complete(n: usize, alpha: f64) -> Result<Graph, GraphError> {
        check_alpha(alpha)?;
        if n < 2 {
            return Err(GraphError::InvalidParams(format!("complete graph needs n >= 2, got {n}")));
        }
        let w = alpha / (n - 1) as f64;
        let mut edges = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                edges.push((i, j, w));
            }
        }
        Self::build_tagged(n, &edges, Some(alpha), GraphTag::Complete)
    }

    /// Cycle `0 - 1 - ... - (n-1) - 0` with every link weighted `alpha / 2`.
    pub fn ring(n: usize, alpha: f64) -> Result<Graph, GraphError> {
        check_alpha(alpha)?;
        if n < 3 {
            return Err(GraphError::RingTooSmall(n));
        }
        let w = alpha / 2.0;
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n, w)).collect();
        Self::build_tagged(n, &edges, Some(alpha), GraphTag::Ring)
    }

    /// Path `0 - 1 - ... - (n-1)` weighted `alpha / max_degree`.
    pub fn path(n: usize, alpha: f64) -> Result<Graph, GraphError> {
        check_alpha(alpha)?;
        if n < 2 {
            return Err(GraphError::InvalidParams(format!("path needs n >= 2, got {n}")));
        }
        let w = alpha / if n == 2 { 1.0 } else { 2.0 };
        let edges: Vec<_> = (0..n - 1).map(|i| (i, i + 1, w)).collect();
        Self::build_tagged(n, &edges, Some(alpha), GraphTag::Path)
    }

    /// Star centred on node 0, weighted `alpha / (n - 1)`.
    pub fn star(n: usize, alpha: f64) -> Result<Graph, GraphError> {
        check_alpha(alpha)?;
        if n < 2 {
            return Err(GraphError::InvalidParams(format!("star needs n >= 2, got {n}")));
        }
        let w = alpha / (n - 1) as f64;
        let edges: Vec<_> = (1..n).map(|j| (0, j, w)).collect();
        Self::build_tagged(n, &edges, Some(alpha), GraphTag::Star)
    }

    /// Two-community stochastic block model, regenerated until connected.
    ///
    /// Nodes `0..floor(c n)` form the first community. Each block is an
    /// independent G(n_b, p); then `links` distinct inter-community pairs are
    /// drawn uniformly. All weights equal `alpha / Delta` with `Delta` the
    /// realized maximum degree.
    pub fn sbm<R: Rng + ?Sized>(
        n: usize,
        c: f64,
        p: f64,
        links: usize,
        alpha: f64,
        rng: &mut R,
    ) -> Result<Graph, GraphError> {
        Self::sbm_with_budget(n, c, p, links, alpha, DEFAULT_RETRY_BUDGET, rng)
    }

    pub fn sbm_with_budget<R: Rng + ?Sized>(
        n: usize,
        c: f64,
        p: f64,
        links: usize,
        alpha: f64,
        budget: usize,
        rng: &mut R,
    ) -> Result<Graph, GraphError> {
        check_alpha(alpha)?;
        if !(c > 0.0 && c <= 0.5) {
            return Err(GraphError::InvalidParams(format!("c must lie in (0, 1/2], got {c}")));
        }
        check_probability(p, false)?;
        let n1 = (c * n as f64).floor() as usize;
        let n2 = n - n1;
        if n1 == 0 || n2 == 0 {
            return Err(GraphError::InvalidParams(format!("community sizes ({n1}, {n2}) must be positive")));
        }
        if links == 0 || links > n1 * n2 {
            return Err(GraphError::InvalidParams(format!(
                "inter-community link count {links} must lie in [1, {}]",
                n1 * n2
            )));
        }
        for _ in 0..budget {
            let mut pairs = Vec::new();
            bernoulli_pairs(0, n1, p, rng, &mut pairs);
            bernoulli_pairs(n1, n2, p, rng, &mut pairs);
            let mut bridges = std::collections::HashSet::with_capacity(links);
            while bridges.len() < links {
                let i = rng.random_range(0..n1);
                let j = n1 + rng.random_range(0..n2);
                bridges.insert((i, j));
            }
            let mut bridges: Vec<_> = bridges.into_iter().collect();
            bridges.sort_unstable();
            pairs.extend(bridges);
            if let Some(g) = scaled_if_connected(n, &pairs, alpha, GraphTag::Sbm)? {
                return Ok(g);
            }
        }
        Err(GraphError::GenerationFailed { attempts: budget })
    }

    /// Erdős–Rényi G(n, p) with `alpha / Delta` weights, regenerated until connected.
    pub fn erdos_renyi<R: Rng + ?Sized>(n: usize, p: f64, alpha: f64, rng: &mut R) -> Result<Graph, GraphError> {
        Self::erdos_renyi_with_budget(n, p, alpha, DEFAULT_RETRY_BUDGET, rng)
    }

    pub fn erdos_renyi_with_budget<R: Rng + ?Sized>(
        n: usize,
        p: f64,
        alpha: f64,
        budget: usize,
        rng: &mut R,
    ) -> Result<Graph, GraphError> {
        check_alpha(alpha)?;
        check_probability(p, true)?;
        if n < 2 {
            return Err(GraphError::InvalidParams(format!("G(n, p) needs n >= 2, got {n}")));
        }
        for _ in 0..budget {
            let mut pairs = Vec::new();
            bernoulli_pairs(0, n, p, rng, &mut pairs);
            if let Some(g) = scaled_if_connected(n, &pairs, alpha, GraphTag::Er)? {
                return Ok(g);
            }
        }
        Err(GraphError::GenerationFailed { attempts: budget })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Unordered links `(i, j, w)` with `i < j`, sorted.
    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.offsets[i]..self.offsets[i + 1];
        self.neighbors[range.clone()].iter().copied().zip(self.weights[range].iter().copied())
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    /// Total weight incident to node `i`, i.e. `(W 1)_i`.
    pub fn degree_weight(&self, i: usize) -> f64 {
        self.degree_weight[i]
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn alpha(&self) -> Option<f64> {
        self.alpha
    }

    pub fn tag(&self) -> GraphTag {
        self.tag
    }

    /// `W_ij`, zero when the pair is not linked.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        let range = self.offsets[i]..self.offsets[i + 1];
        match self.neighbors[range.clone()].binary_search(&j) {
            Ok(k) => self.weights[range.start + k],
            Err(_) => 0.0,
        }
    }

    fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.n];
        let mut stack = vec![0];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in &self.neighbors[self.offsets[i]..self.offsets[i + 1]] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == self.n
    }

    /// Weighted boundary of the node set given as a membership mask.
    pub fn boundary(&self, members: &[bool]) -> f64 {
        assert_eq!(members.len(), self.n, "membership mask length must equal node count");
        self.edges
            .iter()
            .filter(|&&(i, j, _)| members[i] != members[j])
            .map(|&(_, _, w)| w)
            .sum()
    }

    /// Weighted boundary of the node set given as a list of node ids.
    pub fn boundary_of(&self, nodes: &[usize]) -> f64 {
        let mut mask = vec![false; self.n];
        for &i in nodes {
            mask[i] = true;
        }
        self.boundary(&mask)
    }

    /// Writes the `n alpha tag` header followed by one `i j w` line per link.
    pub fn write_edge_list<W: Write>(&self, mut out: W) -> Result<(), GraphError> {
        match self.alpha {
            Some(a) => writeln!(out, "{} {:.16e} {}", self.n, a, self.tag)?,
            None => writeln!(out, "{} - {}", self.n, self.tag)?,
        }
        for &(i, j, w) in &self.edges {
            writeln!(out, "{i} {j} {w:.16e}")?;
        }
        Ok(())
    }

    pub fn to_edge_list(&self) -> String {
        let mut buf = Vec::new();
        self.write_edge_list(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("edge list is ASCII")
    }

    pub fn read_edge_list<R: BufRead>(input: R) -> Result<Graph, GraphError> {
        let mut header: Option<(usize, Option<f64>, GraphTag)> = None;
        let mut edges = Vec::new();
        for (idx, line) in input.lines().enumerate() {
            let line = line?;
            let lineno = idx + 1;
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.is_empty() || fields[0].starts_with('#') {
                continue;
            }
            let parse_err = |msg: &str| GraphError::Parse { line: lineno, msg: msg.to_string() };
            if fields.len() != 3 {
                return Err(parse_err("expected three whitespace-separated fields"));
            }
            if header.is_none() {
                let n = fields[0].parse().map_err(|_| parse_err("bad node count"))?;
                let alpha = match fields[1] {
                    "-" => None,
                    s => Some(s.parse().map_err(|_| parse_err("bad alpha"))?),
                };
                let tag = fields[2].parse().map_err(|_| parse_err("bad tag"))?;
                header = Some((n, alpha, tag));
            } else {
                let i = fields[0].parse().map_err(|_| parse_err("bad node id"))?;
                let j = fields[1].parse().map_err(|_| parse_err("bad node id"))?;
                let w = fields[2].parse().map_err(|_| parse_err("bad weight"))?;
                edges.push((i, j, w));
            }
        }
        let (n, alpha, tag) = header.ok_or(GraphError::Parse { line: 0, msg: "missing header".into() })?;
        Self::build_tagged(n, &edges, alpha, tag)
    }

    pub fn from_edge_list(text: &str) -> Result<Graph, GraphError> {
        Self::read_edge_list(text.as_bytes())
    }
}

fn check_alpha(alpha: f64) -> Result<(), GraphError> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(GraphError::InvalidParams(format!("alpha must be positive, got {alpha}")))
    }
}

fn check_probability(p: f64, allow_zero: bool) -> Result<(), GraphError> {
    let ok = if allow_zero { (0.0..=1.0).contains(&p) } else { p > 0.0 && p <= 1.0 };
    if ok {
        Ok(())
    } else {
        Err(GraphError::InvalidParams(format!("probability out of range: {p}")))
    }
}

/// Appends every pair of `offset..offset+size` independently with probability `p`,
/// jumping over absent pairs with geometric skips.
fn bernoulli_pairs<R: Rng + ?Sized>(offset: usize, size: usize, p: f64, rng: &mut R, out: &mut Vec<(usize, usize)>) {
    if size < 2 || p <= 0.0 {
        return;
    }
    if p >= 1.0 {
        for i in 0..size {
            for j in i + 1..size {
                out.push((offset + i, offset + j));
            }
        }
        return;
    }
    let log_q = (1.0 - p).ln();
    let (mut i, mut j) = (0usize, 0usize);
    loop {
        let u: f64 = rng.random();
        // 1 - u lies in (0, 1], so the skip is finite.
        let mut skip = ((1.0 - u).ln() / log_q).floor() as usize;
        // advance to the (skip + 1)-th next pair
        j += skip + 1;
        while i < size && j >= size {
            skip = j - size;
            i += 1;
            j = i + 1 + skip;
        }
        if i + 1 >= size {
            break;
        }
        out.push((offset + i, offset + j));
    }
}

fn scaled_if_connected(
    n: usize,
    pairs: &[(usize, usize)],
    alpha: f64,
    tag: GraphTag,
) -> Result<Option<Graph>, GraphError> {
    let mut degree = vec![0usize; n];
    for &(i, j) in pairs {
        degree[i] += 1;
        degree[j] += 1;
    }
    let delta = degree.iter().copied().max().unwrap_or(0);
    if delta == 0 {
        return Ok(None);
    }
    let w = alpha / delta as f64;
    let edges: Vec<_> = pairs.iter().map(|&(i, j)| (i, j, w)).collect();
    match Graph::build_tagged(n, &edges, Some(alpha), tag) {
        Ok(g) => Ok(Some(g)),
        Err(GraphError::Disconnected) => Ok(None),
        Err(e) => Err(e),
    }
}

/// How a [`Profiles`] value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProfileMode {
    Exact,
    ClosedForm,
    AnalyticBound,
}

/// Minimum conductance and maximum expansiveness profiles over set sizes `1..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profiles {
    /// `phi[a - 1]` is the smallest boundary over sets of size `a`.
    pub phi: Vec<f64>,
    /// `eta[a - 1]` is the largest boundary over sets of size `a`.
    pub eta: Vec<f64>,
    pub mode: ProfileMode,
}

impl Profiles {
    /// Node count the profiles refer to.
    pub fn n(&self) -> usize {
        self.phi.len() + 1
    }

    pub fn phi(&self, a: usize) -> f64 {
        self.phi[a - 1]
    }

    pub fn eta(&self, a: usize) -> f64 {
        self.eta[a - 1]
    }
}

impl Graph {
    /// Profiles by the cheapest applicable method: closed form for complete
    /// and ring graphs, exhaustive enumeration otherwise.
    pub fn profiles(&self) -> Result<Profiles, GraphError> {
        match self.tag {
            GraphTag::Complete | GraphTag::Ring => self.profiles_closed_form(),
            _ => self.profiles_exact(DEFAULT_EXHAUSTIVE_LIMIT),
        }
    }

    /// Enumerates all nonempty proper subsets in Gray-code order.
    pub fn profiles_exact(&self, limit: usize) -> Result<Profiles, GraphError> {
        let n = self.n;
        if n > limit || n >= usize::BITS as usize {
            return Err(GraphError::TooLargeForExhaustive { n, limit });
        }
        if n < 2 {
            return Ok(Profiles { phi: vec![], eta: vec![], mode: ProfileMode::Exact });
        }
        let mut phi = vec![f64::INFINITY; n - 1];
        let mut eta = vec![f64::NEG_INFINITY; n - 1];
        let mut inside = vec![false; n];
        // (W x)_i for the current subset x
        let mut contact = vec![0.0; n];
        let mut zeta = 0.0;
        let mut size = 0usize;
        for step in 1u64..(1u64 << n) {
            let k = step.trailing_zeros() as usize;
            if inside[k] {
                zeta -= self.degree_weight[k] - 2.0 * contact[k];
                size -= 1;
            } else {
                zeta += self.degree_weight[k] - 2.0 * contact[k];
                size += 1;
            }
            inside[k] = !inside[k];
            let sign = if inside[k] { 1.0 } else { -1.0 };
            for (j, w) in self.neighbors(k) {
                contact[j] += sign * w;
            }
            if size == 0 || size == n {
                continue;
            }
            let slot = size - 1;
            if zeta < phi[slot] {
                phi[slot] = zeta;
            }
            if zeta > eta[slot] {
                eta[slot] = zeta;
            }
        }
        Ok(Profiles { phi, eta, mode: ProfileMode::Exact })
    }

    /// Closed forms for the uniform-weight complete and ring graphs.
    pub fn profiles_closed_form(&self) -> Result<Profiles, GraphError> {
        let n = self.n;
        let w = self.edges.first().map(|e| e.2).unwrap_or(0.0);
        let sizes = 1..n;
        let (phi, eta) = match self.tag {
            GraphTag::Complete => {
                let v: Vec<f64> = sizes.map(|a| w * (a * (n - a)) as f64).collect();
                (v.clone(), v)
            }
            GraphTag::Ring => (
                sizes.clone().map(|_| 2.0 * w).collect(),
                sizes.map(|a| 2.0 * w * a.min(n - a) as f64).collect(),
            ),
            tag => return Err(GraphError::NoClosedForm(tag)),
        };
        Ok(Profiles { phi, eta, mode: ProfileMode::ClosedForm })
    }
}

/// High-probability lower bound on the SBM conductance profile, indexed by `a - 1`.
///
/// Sizes other than the community sizes use the within-community expander
/// estimate with constant `c alpha p / 2`; the two community sizes fall back
/// to the inter-community floor `L alpha / n`.
pub fn sbm_phi_bound(n: usize, c: f64, p: f64, alpha: f64, links: usize) -> Vec<f64> {
    let n1 = (c * n as f64).floor() as usize;
    let n2 = n - n1;
    let gamma = c * alpha * p / 2.0;
    let floor = links as f64 * alpha / n as f64;
    (1..n)
        .map(|h| {
            if h == n1 || h == n2 {
                return floor;
            }
            let m = if h <= n1 {
                h.min(n1 - h)
            } else if h <= n2 {
                (h - n1).min(n2 - h)
            } else {
                (h - n2).min(n - h)
            };
            gamma * m as f64
        })
        .collect()
}

/// Elementwise `max(phi(a), k)`.
pub fn floor_profile(phi: &[f64], k: f64) -> Vec<f64> {
    phi.iter().map(|&v| v.max(k)).collect()
}
