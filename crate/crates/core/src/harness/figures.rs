//! Experiment grids behind the benchmark figures.
//!
//! - figure 3: complete graphs, `beta = 0.7`, constant control on node 0,
//!   with the logarithmic lower bound and the constant-policy upper bound;
//! - figure 4: two-community block model, `beta = 0.8`, constant control;
//! - figure 5: the same block model under feedback with `K = 1/4` next to
//!   constant control;
//! - figure 6: cost/time trade-off of the feedback gain on the block model
//!   with `n = 800`, against a constant-rate policy on the same target node.

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;

use super::emit::{self, Curve, Plot, Series};
use super::{sweep, ExperimentConfig, GraphSpec, HarnessError, SweepAxis, SweepTable};
use crate::bounds::{self, json_number, BoundKind, BoundReport};
use crate::control::{ControlPolicy, ControlVector, TargetRule};
use crate::graph::Graph;

pub const FIG_REPLICATIONS: usize = 200;
pub const SBM_C: f64 = 0.4;
pub const SBM_P: f64 = 0.1;
pub const SBM_LINKS: usize = 5;
pub const FIG3_BETA: f64 = 0.7;
pub const SBM_BETA: f64 = 0.8;
pub const FIG5_GAIN: f64 = 0.25;
pub const FIG6_N: usize = 800;

pub fn fig3_grid() -> Vec<usize> {
    (1..=20).map(|k| 50 * k).collect()
}

pub fn sbm_grid() -> Vec<usize> {
    (1..=10).map(|k| 200 * k).collect()
}

pub fn fig6_gains() -> Vec<f64> {
    vec![0.005, 0.01, 0.015, 0.02, 0.05, 0.1, 0.15, 0.25, 0.35, 0.5]
}

fn delta0() -> ControlPolicy {
    ControlPolicy::constant(ControlVector::delta(0, 1.0).expect("valid rate"))
}

fn sbm(n: usize) -> GraphSpec {
    GraphSpec::Sbm { n, c: SBM_C, p: SBM_P, links: SBM_LINKS, alpha: 1.0 }
}

pub fn fig3_config(n: usize, replications: usize, master_seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(GraphSpec::Complete { n, alpha: 1.0 }, FIG3_BETA, delta0(), replications, master_seed)
}

/// Constant control on node 0, which lies in the smaller community.
pub fn fig4_config(n: usize, replications: usize, master_seed: u64) -> ExperimentConfig {
    ExperimentConfig::new(sbm(n), SBM_BETA, delta0(), replications, master_seed)
}

pub fn fig5_config(n: usize, gain: f64, replications: usize, master_seed: u64) -> ExperimentConfig {
    let policy = ControlPolicy::feedback(gain, TargetRule::MaxContact).expect("positive gain");
    ExperimentConfig::new(sbm(n), SBM_BETA, policy, replications, master_seed)
}

/// Constant rate on the node the feedback policy would target.
pub fn fig6_targeted_config(rate: f64, replications: usize, master_seed: u64) -> ExperimentConfig {
    let policy = ControlPolicy::targeted(rate, TargetRule::MaxContact).expect("positive rate");
    ExperimentConfig::new(sbm(FIG6_N), SBM_BETA, policy, replications, master_seed)
}

#[derive(Debug, Clone)]
pub struct FigureOptions {
    pub replications: usize,
    /// Overrides the node-count grid of figures 3 to 5.
    pub n_grid: Option<Vec<usize>>,
    /// Overrides the gain grid of figure 6.
    pub gains: Option<Vec<f64>>,
}

impl Default for FigureOptions {
    fn default() -> Self {
        FigureOptions { replications: FIG_REPLICATIONS, n_grid: None, gains: None }
    }
}

/// Pass/fail of `lower - CI <= mean <= upper + CI` at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyFlag {
    pub series: String,
    pub axis: f64,
    pub bound: String,
    #[serde(serialize_with = "ser_num")]
    pub value: f64,
    pub pass: bool,
}

fn ser_num<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    json_number(*v).serialize(s)
}

#[derive(Debug, Clone)]
pub struct Figure {
    pub which: u8,
    pub tables: Vec<(String, SweepTable)>,
    pub plot: Plot,
    pub consistency: Vec<ConsistencyFlag>,
}

impl Figure {
    pub fn all_consistent(&self) -> bool {
        self.consistency.iter().all(|c| c.pass)
    }
}

fn flags_for(series: &str, table: &SweepTable, bound: impl Fn(f64) -> Result<BoundReport, HarnessError>) -> Result<(Curve, Vec<ConsistencyFlag>), HarnessError> {
    let mut points = Vec::new();
    let mut flags = Vec::new();
    let mut name = String::new();
    for row in &table.rows {
        let r = bound(row.axis)?;
        let s = &row.result.time;
        let hw = s.half_width();
        let pass = match r.kind {
            BoundKind::Lower => r.value - hw <= s.mean,
            _ => s.mean <= r.value + hw,
        };
        points.push((row.axis, r.value));
        flags.push(ConsistencyFlag { series: series.into(), axis: row.axis, bound: r.name.clone(), value: r.value, pass });
        name = r.name;
    }
    Ok((Curve { name, points }, flags))
}

/// Runs the grid for figure `which` (3 to 6).
pub fn compute_figure(which: u8, master_seed: u64, opts: &FigureOptions) -> Result<Figure, HarnessError> {
    let reps = opts.replications;
    match which {
        3 => {
            let grid = opts.n_grid.clone().unwrap_or_else(fig3_grid);
            let table = sweep(&fig3_config(grid[0], reps, master_seed), &SweepAxis::N(grid))?;
            let (lo, lo_flags) = flags_for("constant", &table, |n| Ok(bounds::log_lower(1.0, n as usize, 1)?))?;
            let (hi, hi_flags) = flags_for("constant", &table, |n| {
                let phi = Graph::complete(n as usize, 1.0)?.profiles_closed_form()?.phi;
                Ok(bounds::corollary1_upper(&phi, FIG3_BETA, 1.0)?)
            })?;
            let plot = Plot {
                title: "complete graph, beta = 0.7".into(),
                x_label: "n".into(),
                y_label: "E[T]".into(),
                series: vec![Series::time_vs_axis("constant", &table)],
                curves: vec![lo, hi],
            };
            Ok(Figure {
                which,
                tables: vec![("constant".into(), table)],
                plot,
                consistency: lo_flags.into_iter().chain(hi_flags).collect(),
            })
        }
        4 | 5 => {
            let grid = opts.n_grid.clone().unwrap_or_else(sbm_grid);
            let constant = sweep(&fig4_config(grid[0], reps, master_seed), &SweepAxis::N(grid.clone()))?;
            let sbm_pair = |n: f64| bounds::sbm_bounds(SBM_BETA, 1.0, n as usize, SBM_C, SBM_P, SBM_LINKS, 1.0);
            let (lo, lo_flags) = flags_for("constant", &constant, |n| Ok(sbm_pair(n)?.0))?;
            let (hi, hi_flags) = flags_for("constant", &constant, |n| Ok(sbm_pair(n)?.1))?;
            let mut consistency: Vec<_> = lo_flags.into_iter().chain(hi_flags).collect();
            let mut series = vec![Series::time_vs_axis("constant", &constant)];
            let mut tables = vec![("constant".to_string(), constant)];
            let mut curves = vec![lo, hi];
            if which == 5 {
                let feedback = sweep(&fig5_config(grid[0], FIG5_GAIN, reps, master_seed), &SweepAxis::N(grid))?;
                if bounds::sbm_gain_admissible(FIG5_GAIN, SBM_C, SBM_P, 1.0) {
                    let (fhi, fhi_flags) = flags_for("feedback", &feedback, |n| {
                        Ok(bounds::sbm_feedback_upper(SBM_BETA, FIG5_GAIN, SBM_C, SBM_P, 1.0, n as usize)?.0)
                    })?;
                    consistency.extend(fhi_flags);
                    curves.push(fhi);
                }
                series.push(Series::time_vs_axis("feedback", &feedback));
                tables.push(("feedback".into(), feedback));
            }
            let title = if which == 4 { "block model, constant control" } else { "block model, feedback vs constant" };
            let plot = Plot { title: title.into(), x_label: "n".into(), y_label: "E[T]".into(), series, curves };
            Ok(Figure { which, tables, plot, consistency })
        }
        6 => {
            let gains = opts.gains.clone().unwrap_or_else(fig6_gains);
            let feedback = sweep(&fig5_config(FIG6_N, gains[0], reps, master_seed), &SweepAxis::K(gains.clone()))?;
            let targeted = sweep(&fig6_targeted_config(gains[0], reps, master_seed), &SweepAxis::Rate(gains))?;
            let plot = Plot {
                title: "cost and time, n = 800".into(),
                x_label: "E[J]".into(),
                y_label: "E[T]".into(),
                series: vec![Series::time_vs_cost("feedback", &feedback), Series::time_vs_cost("constant rate", &targeted)],
                curves: Vec::new(),
            };
            let mut consistency = Vec::new();
            for row in &feedback.rows {
                if bounds::sbm_gain_admissible(row.axis, SBM_C, SBM_P, 1.0) {
                    let (_, cost) = bounds::sbm_feedback_upper(SBM_BETA, row.axis, SBM_C, SBM_P, 1.0, FIG6_N)?;
                    let s = &row.result.cost;
                    consistency.push(ConsistencyFlag {
                        series: "feedback".into(),
                        axis: row.axis,
                        bound: cost.name.clone(),
                        value: cost.value,
                        pass: s.mean <= cost.value + s.half_width(),
                    });
                }
            }
            Ok(Figure {
                which,
                tables: vec![("feedback".into(), feedback), ("constant-rate".into(), targeted)],
                plot,
                consistency,
            })
        }
        other => Err(HarnessError::InvalidConfig(format!("no figure {other}; expected 3, 4, 5 or 6"))),
    }
}

/// Writes the figure's CSV tables, a JSON document and an SVG plot into `out_dir`.
pub fn write_figure(fig: &Figure, out_dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(out_dir)?;
    let mut written = Vec::new();
    for (name, table) in &fig.tables {
        let path = out_dir.join(format!("fig{}_{}.csv", fig.which, name));
        emit::write_file(&path, &emit::to_csv(table))?;
        written.push(path);
        if table.axis == "K" || table.axis == "rate" {
            let path = out_dir.join(format!("fig{}_{}_tradeoff.csv", fig.which, name));
            emit::write_file(&path, &emit::tradeoff_csv(table))?;
            written.push(path);
        }
    }
    let doc = json!({
        "figure": fig.which,
        "series": fig.tables.iter().map(|(n, t)| json!({"name": n, "table": emit::table_json(t)})).collect::<Vec<_>>(),
        "curves": fig.plot.curves,
        "consistency": fig.consistency,
    });
    let path = out_dir.join(format!("fig{}.json", fig.which));
    emit::write_file(&path, &serde_json::to_string_pretty(&doc)?)?;
    written.push(path);
    let path = out_dir.join(format!("fig{}.svg", fig.which));
    emit::write_file(&path, &emit::to_svg(&fig.plot))?;
    written.push(path);
    Ok(written)
}

/// Runs and writes figure `which`.
pub fn reproduce_fig(which: u8, master_seed: u64, out_dir: &Path, opts: &FigureOptions) -> Result<(Figure, Vec<PathBuf>), HarnessError> {
    let fig = compute_figure(which, master_seed, opts)?;
    let files = write_figure(&fig, out_dir)?;
    Ok((fig, files))
}
