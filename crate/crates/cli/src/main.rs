use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use evospread::bounds::{self, BoundReport};
use evospread::control::parse_schedule;
use evospread::graph::sbm_phi_bound;
use evospread::harness::figures::{reproduce_fig, FigureOptions};
use evospread::harness::{emit, run, sweep, ExperimentConfig, GraphSpec, OutputFormat, SweepAxis, SweepTable};
use evospread::oracle::solve_exact;
use evospread::rng::stream;
use evospread::{simulate, ControlPolicy, ControlVector, Graph, GraphTag, SimOptions, TargetRule};
use serde_json::{json, Value};

#[derive(Parser)]
#[command(name = "evospread", version, about = "Controlled evolutionary spreading on weighted networks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a graph and write it as an edge list
    Gen(ModelArgs),
    /// Simulate until absorption and print T, J and Nc as JSON
    Simulate(ModelArgs),
    /// Print the bounds that apply to a graph and policy, one JSON report per line
    Bounds(ModelArgs),
    /// Solve exactly for E[T] and E[J] on a small graph
    Oracle(ModelArgs),
    /// Run an experiment over a grid of one parameter
    Sweep(SweepArgs),
    /// Reproduce a figure's data, bounds and plot
    ReproduceFig(FigArgs),
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Graph family (complete, ring, path, path2, star, sbm, er) or an edge-list file
    #[arg(long)]
    graph: Option<String>,
    /// Number of nodes
    #[arg(long)]
    n: Option<usize>,
    /// Weight scale alpha; link weights are alpha / max degree (rate per unit time)
    #[arg(long)]
    alpha: Option<f64>,
    /// Link probability inside a block or of a G(n, p) graph (probability)
    #[arg(long)]
    p: Option<f64>,
    /// Fraction of nodes in the smaller block, in (0, 1/2]
    #[arg(long)]
    c: Option<f64>,
    /// Number of inter-block links (count)
    #[arg(long = "L")]
    links: Option<usize>,
    /// Probability that the novel state wins a conflict, in (1/2, 1]
    #[arg(long)]
    beta: Option<f64>,
    /// Control policy: constant, openloop, feedback or targeted
    #[arg(long)]
    policy: Option<String>,
    /// Constant control vector as rate@node[,rate@node...] (rate per unit time)
    #[arg(long)]
    u: Option<String>,
    /// Open-loop schedule file, one `start_time rate@node[,...]` line per segment (time units)
    #[arg(long)]
    schedule: Option<PathBuf>,
    /// Feedback gain K (rate per unit time)
    #[arg(long = "K")]
    gain: Option<f64>,
    /// Rate of the targeted policy (rate per unit time)
    #[arg(long)]
    rate: Option<f64>,
    /// Target rule for feedback and targeted policies: max-contact, lowest-index or random-zero
    #[arg(long)]
    target: Option<String>,
    /// Nodes initially in state 1, comma separated (default: none)
    #[arg(long)]
    x0: Option<String>,
    /// Number of Monte Carlo replications (count)
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed; drawn from entropy and printed when absent
    #[arg(long, env = "EVOSPREAD_SEED")]
    seed: Option<u64>,
    /// Worker threads for replications (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,
    /// Output file
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format: csv, json or svg
    #[arg(long)]
    format: Option<String>,
    /// JSON experiment file; flags override its values
    #[arg(long)]
    config: Option<PathBuf>,
    /// Write the jump trajectory of a single run to this file (`h t_h a b_h cause` lines)
    #[arg(long)]
    trajectory: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Swept parameter: n, K, beta or rate
    #[arg(long)]
    axis: String,
    /// Comma-separated grid values
    #[arg(long)]
    values: String,
}

#[derive(Args)]
struct FigArgs {
    /// Figure number (3 to 6)
    fig: u8,
    /// Replications per grid point (count)
    #[arg(long, default_value_t = 200)]
    reps: usize,
    /// Master seed; drawn from entropy and printed when absent
    #[arg(long, env = "EVOSPREAD_SEED")]
    seed: Option<u64>,
    /// Worker threads for replications (default: available parallelism)
    #[arg(long)]
    threads: Option<usize>,
    /// Output directory
    #[arg(long, default_value = "figures")]
    out: PathBuf,
    /// Node counts replacing the default grid, comma separated
    #[arg(long)]
    n_grid: Option<String>,
    /// Feedback gains replacing the default grid of figure 6, comma separated
    #[arg(long)]
    gains: Option<String>,
}

enum CliError {
    /// Bad flags or flag combinations.
    Usage(String),
    /// Failure inside the library or the file system.
    Runtime(String),
}

impl CliError {
    fn runtime(e: impl std::fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn usage<T>(msg: impl Into<String>) -> CliResult<T> {
    Err(CliError::Usage(msg.into()))
}

fn parse_list<T: std::str::FromStr>(flag: &str, text: &str) -> CliResult<Vec<T>> {
    text.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(|s| s.trim().parse::<T>().map_err(|_| CliError::Usage(format!("bad value `{s}` in --{flag}"))))
        .collect()
}

fn resolve_seed(flag: Option<u64>, from_config: Option<u64>) -> u64 {
    let seed = flag.or(from_config).unwrap_or_else(rand::random);
    eprintln!("master_seed: {seed}");
    seed
}

fn set_threads(threads: Option<usize>) -> CliResult<()> {
    if let Some(t) = threads {
        if t == 0 {
            return usage("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new().num_threads(t).build_global().map_err(CliError::runtime)?;
    }
    Ok(())
}

fn graph_spec(a: &ModelArgs, name: &str) -> CliResult<GraphSpec> {
    let alpha = a.alpha.unwrap_or(1.0);
    let need_n = || a.n.ok_or_else(|| CliError::Usage(format!("--graph {name} needs --n")));
    let need = |flag: &str, v: Option<f64>| v.ok_or_else(|| CliError::Usage(format!("--graph {name} needs --{flag}")));
    Ok(match name {
        "complete" => GraphSpec::Complete { n: need_n()?, alpha },
        "ring" => GraphSpec::Ring { n: need_n()?, alpha },
        "path" => GraphSpec::Path { n: need_n()?, alpha },
        "path2" => GraphSpec::Path { n: 2, alpha },
        "star" => GraphSpec::Star { n: need_n()?, alpha },
        "sbm" => GraphSpec::Sbm {
            n: need_n()?,
            c: need("c", a.c)?,
            p: need("p", a.p)?,
            links: a.links.ok_or_else(|| CliError::Usage("--graph sbm needs --L".into()))?,
            alpha,
        },
        "er" => GraphSpec::Er { n: need_n()?, p: need("p", a.p)?, alpha },
        path if Path::new(path).is_file() => GraphSpec::File { path: PathBuf::from(path) },
        other => return usage(format!("unknown graph `{other}` (not a family name or an existing file)")),
    })
}

fn policy(a: &ModelArgs) -> CliResult<ControlPolicy> {
    let target: TargetRule = match &a.target {
        Some(t) => t.parse().map_err(|_| CliError::Usage(format!("unknown target rule `{t}`")))?,
        None => TargetRule::default(),
    };
    let bad = |e: evospread::PolicyError| CliError::Usage(e.to_string());
    match a.policy.as_deref().unwrap_or("constant") {
        "constant" => {
            let u: ControlVector = a.u.as_deref().unwrap_or("1@0").parse().map_err(bad)?;
            Ok(ControlPolicy::constant(u))
        }
        "openloop" => {
            let path = a.schedule.as_ref().ok_or_else(|| CliError::Usage("--policy openloop needs --schedule".into()))?;
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            parse_schedule(&text).map_err(bad)
        }
        "feedback" => {
            let k = a.gain.ok_or_else(|| CliError::Usage("--policy feedback needs --K".into()))?;
            ControlPolicy::feedback(k, target).map_err(bad)
        }
        "targeted" => {
            let r = a.rate.ok_or_else(|| CliError::Usage("--policy targeted needs --rate".into()))?;
            ControlPolicy::targeted(r, target).map_err(bad)
        }
        other => usage(format!("unknown policy `{other}` (expected constant, openloop, feedback or targeted)")),
    }
}

/// Experiment described by the config file, if any, with flags applied on top.
fn experiment(a: &ModelArgs, default_reps: usize) -> CliResult<ExperimentConfig> {
    let (base, base_seed) = match &a.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let raw: Value = serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            let seed = raw.get("master_seed").and_then(Value::as_u64);
            let c = ExperimentConfig::from_json(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            (Some(c), seed)
        }
        None => (None, None),
    };
    let graph = match (&a.graph, &base) {
        (Some(name), _) => graph_spec(a, name)?,
        (None, Some(b)) => match a.n {
            Some(n) => b.graph.with_n(n).map_err(|e| CliError::Usage(e.to_string()))?,
            None => b.graph.clone(),
        },
        (None, None) => return usage("--graph is required"),
    };
    let beta = match (a.beta, &base) {
        (Some(b), _) => b,
        (None, Some(c)) => c.beta,
        (None, None) => return usage("--beta is required"),
    };
    let flags_set_policy = a.policy.is_some() || a.u.is_some() || a.gain.is_some() || a.rate.is_some() || a.schedule.is_some();
    let policy = match &base {
        Some(c) if !flags_set_policy => c.policy.clone(),
        _ => policy(a)?,
    };
    let seed = resolve_seed(a.seed, base_seed);
    let mut config = match base {
        Some(mut c) => {
            c.graph = graph;
            c.beta = beta;
            c.policy = policy;
            c.master_seed = seed;
            c
        }
        None => ExperimentConfig::new(graph, beta, policy, default_reps, seed),
    };
    if let Some(r) = a.reps {
        config.replications = r;
    }
    if let Some(x0) = &a.x0 {
        config.x0 = parse_list("x0", x0)?;
    }
    if !(config.beta > 0.5 && config.beta <= 1.0) {
        return usage(format!("--beta must lie in (1/2, 1], got {}", config.beta));
    }
    Ok(config)
}

fn format_of(a: &ModelArgs, default: OutputFormat) -> CliResult<OutputFormat> {
    match &a.format {
        Some(f) => f.parse().map_err(CliError::Usage),
        None => match a.out.as_ref().and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(ext) => Ok(ext.parse().unwrap_or(default)),
            None => Ok(default),
        },
    }
}

fn initial_state(config: &ExperimentConfig, n: usize) -> CliResult<Vec<bool>> {
    let mut x = vec![false; n];
    for &i in &config.x0 {
        if i >= n {
            return usage(format!("--x0 node {i} out of range for {n} nodes"));
        }
        x[i] = true;
    }
    Ok(x)
}

fn cmd_gen(a: &ModelArgs) -> CliResult<()> {
    let name = a.graph.as_deref().ok_or_else(|| CliError::Usage("--graph is required".into()))?;
    let spec = graph_spec(a, name)?;
    let seed = resolve_seed(a.seed, None);
    let g = spec.build(seed, 0).map_err(CliError::runtime)?;
    match &a.out {
        Some(path) => emit::write_file(path, &g.to_edge_list()).map_err(CliError::runtime)?,
        None => print!("{}", g.to_edge_list()),
    }
    Ok(())
}

fn cmd_simulate(a: &ModelArgs) -> CliResult<()> {
    let config = experiment(a, 1)?;
    set_threads(a.threads)?;
    if config.replications == 1 {
        let g = config.graph.build(config.master_seed, 0).map_err(CliError::runtime)?;
        let x0 = initial_state(&config, g.n())?;
        let mut options = if a.trajectory.is_some() { SimOptions::recording() } else { SimOptions::default() };
        if let Some(m) = config.max_events {
            options.max_events = m;
        }
        let mut rng = stream(config.master_seed, 0);
        let r = simulate(&g, config.beta, &config.policy, &x0, &mut rng, options).map_err(CliError::runtime)?;
        if let Some(path) = &a.trajectory {
            let mut buf = Vec::new();
            r.write_trajectory(&mut buf).map_err(CliError::runtime)?;
            emit::write_file(path, &String::from_utf8_lossy(&buf)).map_err(CliError::runtime)?;
        }
        let mut doc = serde_json::to_value(r.summary()).map_err(CliError::runtime)?;
        doc["master_seed"] = json!(config.master_seed);
        println!("{doc}");
        return Ok(());
    }
    if a.trajectory.is_some() {
        return usage("--trajectory needs a single replication");
    }
    let result = run(&config).map_err(CliError::runtime)?;
    if let Some(path) = &a.out {
        let n = config.graph.n().unwrap_or(0) as f64;
        let table = SweepTable::single("n", n, result.clone());
        emit::emit(&table, format_of(a, OutputFormat::Json)?, path, None).map_err(CliError::runtime)?;
    }
    let mut doc = result.to_json_value();
    if let Some(m) = doc.as_object_mut() {
        m.remove("runs");
    }
    println!("{doc}");
    Ok(())
}

fn cmd_bounds(a: &ModelArgs) -> CliResult<()> {
    let config = experiment(a, 1)?;
    let g = config.graph.build(config.master_seed, 0).map_err(CliError::runtime)?;
    for r in bound_reports(&config, &g).map_err(CliError::runtime)? {
        println!("{}", r.to_json());
    }
    Ok(())
}

/// `phi` and, when known, `eta`.
type ProfilePair = (Vec<f64>, Option<Vec<f64>>);

/// Conductance and expansiveness profiles; `None` when too large to enumerate.
fn profiles(config: &ExperimentConfig, g: &Graph) -> Result<Option<ProfilePair>, evospread::GraphError> {
    if let GraphSpec::Sbm { n, c, p, links, alpha } = config.graph {
        return Ok(Some((sbm_phi_bound(n, c, p, alpha, links), None)));
    }
    match g.profiles() {
        Ok(pr) => Ok(Some((pr.phi, Some(pr.eta)))),
        Err(evospread::GraphError::TooLargeForExhaustive { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

fn bound_reports(config: &ExperimentConfig, g: &Graph) -> Result<Vec<BoundReport>, Box<dyn std::error::Error>> {
    let beta = config.beta;
    let n = g.n();
    let prof = profiles(config, g)?;
    let mut out = Vec::new();
    match &config.policy {
        ControlPolicy::Feedback { gain, .. } => {
            if let GraphSpec::Sbm { c, p, alpha, .. } = config.graph {
                if bounds::sbm_gain_admissible(*gain, c, p, alpha) {
                    let (t, j) = bounds::sbm_feedback_upper(beta, *gain, c, p, alpha, n)?;
                    out.extend([t, j]);
                }
            }
            if let Some((phi, _)) = &prof {
                let (t, j) = bounds::feedback_bounds(phi, *gain, beta)?;
                out.extend([t, j]);
            }
        }
        policy => {
            let support = policy.support().unwrap_or_default();
            let total = match policy {
                ControlPolicy::Constant { u } => Some(u.total()),
                ControlPolicy::Targeted { rate, .. } => Some(*rate),
                _ => None,
            };
            if support.is_empty() {
                return Ok(out);
            }
            if let Some(total) = total.filter(|t| *t > 0.0) {
                if let Some((phi, _)) = &prof {
                    out.push(bounds::corollary1_upper(phi, beta, total)?);
                }
                match config.graph {
                    GraphSpec::Complete { alpha, .. } => {
                        out.push(bounds::expander_upper(beta, total, alpha, n)?);
                    }
                    GraphSpec::Sbm { c, p, links, alpha, .. } => {
                        let (lo, hi) = bounds::sbm_bounds(beta, total, n, c, p, links, alpha)?;
                        let n1 = (c * n as f64).floor() as usize;
                        if support.iter().all(|&i| i < n1) {
                            out.push(lo);
                        }
                        out.push(hi);
                    }
                    _ => {}
                }
            }
            if let GraphSpec::Complete { alpha, .. } = config.graph {
                out.push(bounds::log_lower(alpha, n, support.len())?);
            }
            if let Some((_, Some(eta))) = &prof {
                if support.len() < n {
                    out.push(bounds::corollary3_lower(eta, support.len())?);
                    if let Some(total) = total.filter(|t| *t > 0.0) {
                        out.push(bounds::corollary4_lower(eta, support.len(), total)?);
                    }
                }
            }
            if matches!(g.tag(), GraphTag::Path | GraphTag::Star | GraphTag::Custom | GraphTag::Er) && n <= 20 {
                let mode = bounds::Corollary5Mode::Exhaustive { limit: 20 };
                out.push(bounds::corollary5_lower(g, &support, mode)?);
            }
        }
    }
    Ok(out)
}

fn cmd_oracle(a: &ModelArgs) -> CliResult<()> {
    let config = experiment(a, 0)?;
    set_threads(a.threads)?;
    let g = config.graph.build(config.master_seed, 0).map_err(CliError::runtime)?;
    let x0 = initial_state(&config, g.n())?;
    let exact = solve_exact(&g, config.beta, &config.policy).map_err(CliError::runtime)?;
    let (et, ej) = (exact.time(&x0), exact.cost(&x0));
    println!("E_T = {et}");
    println!("E_J = {ej}");
    if config.replications > 0 {
        if config.graph.is_random() {
            return usage("Monte Carlo comparison needs a deterministic graph family or a file");
        }
        let result = run(&config).map_err(CliError::runtime)?;
        let z = |mean: f64, se: f64, exact: f64| if se > 0.0 { (mean - exact) / se } else { f64::NAN };
        println!("MC_T = {} (stderr {})", result.time.mean, result.time.stderr);
        println!("MC_J = {} (stderr {})", result.cost.mean, result.cost.stderr);
        println!("z_T = {}", z(result.time.mean, result.time.stderr, et));
        println!("z_J = {}", z(result.cost.mean, result.cost.stderr, ej));
    }
    Ok(())
}

fn cmd_sweep(s: &SweepArgs) -> CliResult<()> {
    let config = experiment(&s.model, 200)?;
    set_threads(s.model.threads)?;
    let axis = match s.axis.as_str() {
        "n" => SweepAxis::N(parse_list("values", &s.values)?),
        "K" => SweepAxis::K(parse_list("values", &s.values)?),
        "beta" => SweepAxis::Beta(parse_list("values", &s.values)?),
        "rate" => SweepAxis::Rate(parse_list("values", &s.values)?),
        other => return usage(format!("unknown axis `{other}` (expected n, K, beta or rate)")),
    };
    if axis.values().is_empty() {
        return usage("--values is empty");
    }
    let table = sweep(&config, &axis).map_err(CliError::runtime)?;
    match &s.model.out {
        Some(path) => {
            let format = format_of(&s.model, OutputFormat::Csv)?;
            emit::emit(&table, format, path, None).map_err(CliError::runtime)?;
        }
        None => print!("{}", emit::to_csv(&table)),
    }
    Ok(())
}

fn cmd_fig(f: &FigArgs) -> CliResult<()> {
    if !(3..=6).contains(&f.fig) {
        return usage(format!("no figure {}; expected 3, 4, 5 or 6", f.fig));
    }
    if f.reps == 0 {
        return usage("--reps must be at least 1");
    }
    let seed = resolve_seed(f.seed, None);
    set_threads(f.threads)?;
    let opts = FigureOptions {
        replications: f.reps,
        n_grid: f.n_grid.as_deref().map(|s| parse_list("n-grid", s)).transpose()?,
        gains: f.gains.as_deref().map(|s| parse_list("gains", s)).transpose()?,
    };
    let (fig, files) = reproduce_fig(f.fig, seed, &f.out, &opts).map_err(CliError::runtime)?;
    for path in files {
        println!("wrote {}", path.display());
    }
    for flag in fig.consistency.iter().filter(|c| !c.pass) {
        println!("inconsistent: series {} at {} against {} = {}", flag.series, flag.axis, flag.bound, flag.value);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Oracle(a) => cmd_oracle(a),
        Command::Sweep(s) => cmd_sweep(s),
        Command::ReproduceFig(f) => cmd_fig(f),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {}", msg.replace('\n', " "));
            ExitCode::from(3)
        }
    }
}
