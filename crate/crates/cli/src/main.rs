use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use orbitdeg::estimator::{estimate, estimate_orbit, time_per_draw, BudgetConfig};
use orbitdeg::eval::{run_experiment, EvalReport};
use orbitdeg::graph::{load_edge_list_file, LoadedGraph};
use orbitdeg::oracle::{exact_orbit_degrees_guarded, OracleError, DEFAULT_GUARD};
use orbitdeg::orbit::directed_orbit_table;
use orbitdeg::report::OrbitDegreeReport;
use orbitdeg::{AnchorSampler, Method, Mode, NodeId, Orbit, WeightRule};
use serde::Serialize;

/// Per-node graphlet orbit degrees: sampling estimates, exact counts and
/// accuracy experiments.
#[derive(Debug, Parser)]
#[command(name = "orbitdeg", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Estimate the orbit degrees of one node.
    Estimate(EstimateArgs),
    /// Count the orbit degrees of one node exactly.
    Exact(ExactArgs),
    /// Repeat the estimate and compare against exact counts.
    Evaluate(EvaluateArgs),
    /// Print the directed 3-node orbit numbering.
    OrbitTable(OutputArgs),
    /// Time each sampling method at one node.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Edge list: one `u v` pair per line, `#` or `%` comments.
    #[arg(long)]
    graph: PathBuf,
    /// Read each line as an arc `u -> v`.
    #[arg(long)]
    directed: bool,
    /// Node to analyse, by its id in the file.
    #[arg(
        long,
        conflicts_with = "max_degree_node",
        required_unless_present = "max_degree_node"
    )]
    node: Option<u64>,
    /// Analyse the node of largest degree (lowest id on ties).
    #[arg(long)]
    max_degree_node: bool,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct OutputArgs {
    /// Write here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Debug, Args)]
struct SamplingArgs {
    #[arg(long, default_value = "undirected", value_parser = parse_mode)]
    mode: Mode,
    /// Total draws, split evenly across the pipeline's methods.
    #[arg(long, default_value_t = 100_000, conflicts_with = "budget_split")]
    budget: u64,
    /// Draws per method: `K32,K41,K42` (undirected) or `K31,K32` (directed3).
    #[arg(long, value_delimiter = ',')]
    budget_split: Option<Vec<u64>>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// How two estimates of one orbit are weighted.
    #[arg(long, default_value = "per-source", value_parser = parse_weights)]
    weights: WeightRule,
}

#[derive(Debug, Args)]
struct EstimateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    /// Estimate only this undirected orbit, with the most efficient method.
    #[arg(long)]
    orbit: Option<u8>,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long, default_value = "undirected", value_parser = parse_mode)]
    mode: Mode,
    /// Refuse nodes with more candidate subgraphs than this.
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    oracle_guard: u64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    sampling: SamplingArgs,
    #[arg(long, default_value_t = 100)]
    runs: usize,
    /// Skip exact metrics for nodes with more candidate subgraphs than this.
    #[arg(long, default_value_t = DEFAULT_GUARD)]
    oracle_guard: u64,
    /// Include per-run wall-clock times (makes the output vary between runs).
    #[arg(long)]
    timing: bool,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Draws per method.
    #[arg(long, default_value_t = 100_000)]
    draws: u64,
    #[command(flatten)]
    out: OutputArgs,
}

fn parse_mode(s: &str) -> Result<Mode, String> {
    s.parse()
}

fn parse_weights(s: &str) -> Result<WeightRule, String> {
    s.parse()
}

enum Failure {
    Usage(String),
    Data(anyhow::Error),
    Guard(String),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Data(e)
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Data(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(Failure::Guard(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

fn run(cli: Cli) -> Outcome {
    match cli.command {
        Command::Estimate(a) => with_pool(a.graph.threads, || cmd_estimate(&a)),
        Command::Exact(a) => with_pool(a.graph.threads, || cmd_exact(&a)),
        Command::Evaluate(a) => with_pool(a.graph.threads, || cmd_evaluate(&a)),
        Command::OrbitTable(out) => cmd_orbit_table(&out),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn with_pool(threads: Option<usize>, f: impl FnOnce() -> Outcome + Send) -> Outcome {
    match threads {
        Some(0) => Err(Failure::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .context("starting worker pool")?
            .install(f),
        None => f(),
    }
}

struct Target {
    loaded: LoadedGraph,
    node: NodeId,
}

impl Target {
    fn original(&self, v: NodeId) -> u64 {
        self.loaded.ids.original(v).unwrap_or(v as u64)
    }
}

fn load(a: &GraphArgs) -> Result<Target, Failure> {
    let loaded = load_edge_list_file(&a.graph, a.directed)
        .with_context(|| format!("reading {}", a.graph.display()))?;
    let s = &loaded.summary;
    if s.self_loops + s.duplicates > 0 {
        eprintln!(
            "note: dropped {} self-loops and {} duplicate edges",
            s.self_loops, s.duplicates
        );
    }
    let g = &loaded.graph;
    let node = match a.node {
        Some(id) => loaded
            .ids
            .dense(id)
            .ok_or_else(|| anyhow::anyhow!("node {id} does not appear in the graph"))?,
        None => {
            let max = g.nodes().map(|v| g.degree(v)).max().unwrap_or(0);
            g.nodes()
                .filter(|&v| g.degree(v) == max)
                .min_by_key(|&v| loaded.ids.original(v))
                .ok_or_else(|| anyhow::anyhow!("graph has no nodes"))?
        }
    };
    Ok(Target { loaded, node })
}

fn budget(s: &SamplingArgs) -> Result<BudgetConfig, Failure> {
    let Some(split) = &s.budget_split else {
        return Ok(BudgetConfig::from_total(s.budget));
    };
    match (s.mode, split.as_slice()) {
        (Mode::Undirected, &[k32, k41, k42]) => Ok(BudgetConfig {
            k32,
            k41,
            k42,
            ..Default::default()
        }),
        (Mode::Directed3, &[k31, k32]) => Ok(BudgetConfig {
            k31_directed: k31,
            k32_directed: k32,
            ..Default::default()
        }),
        (Mode::Undirected, _) => Err(Failure::Usage(
            "--budget-split needs three counts for undirected mode".into(),
        )),
        (Mode::Directed3, _) => Err(Failure::Usage(
            "--budget-split needs two counts for directed3 mode".into(),
        )),
    }
}

fn check_mode(mode: Mode, directed: bool) -> Outcome {
    if mode == Mode::Directed3 && !directed {
        return Err(Failure::Usage("--mode directed3 needs --directed".into()));
    }
    Ok(())
}

fn emit(out: &OutputArgs, text: String) -> Outcome {
    match &out.output {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("writing {}", path.display()))?
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .context("writing output")?;
        }
    }
    Ok(())
}

fn json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).context("serializing output")?;
    s.push('\n');
    Ok(s)
}

fn csv_rows<T: Serialize>(rows: &[T]) -> Result<String, Failure> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).context("writing csv")?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| anyhow::anyhow!("writing csv: {}", e.error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn render_report(mut r: OrbitDegreeReport<f64>, t: &Target, out: &OutputArgs) -> Outcome {
    r.node = t.original(r.node as NodeId);
    let text = match out.format {
        Format::Json => json(&r)?,
        Format::Csv => r.to_csv().context("writing csv")?,
    };
    emit(out, text)
}

fn cmd_estimate(a: &EstimateArgs) -> Outcome {
    let s = &a.sampling;
    check_mode(s.mode, a.graph.directed)?;
    let b = budget(s)?;
    let t = load(&a.graph)?;
    let g = &t.loaded.graph;
    if let Some(id) = a.orbit {
        if s.mode != Mode::Undirected {
            return Err(Failure::Usage(
                "--orbit applies to undirected orbits".into(),
            ));
        }
        let orbit = Orbit::new(id).map_err(|e| Failure::Usage(e.to_string()))?;
        let pilot = (s.budget / 10).clamp(1, 10_000);
        let draws = s.budget_split.as_ref().map_or(s.budget, |v| v.iter().sum());
        let r =
            estimate_orbit::<f64>(g, t.node, orbit, draws, pilot, s.seed).context("estimating")?;
        #[derive(Serialize)]
        struct Single<'a> {
            node: u64,
            seed: u64,
            #[serde(flatten)]
            result: &'a orbitdeg::estimator::SingleOrbitEstimate<f64>,
        }
        let single = Single {
            node: t.original(t.node),
            seed: s.seed,
            result: &r,
        };
        let text = match a.out.format {
            Format::Json => json(&single)?,
            Format::Csv => csv_rows(&[(
                single.node,
                r.orbit,
                r.method.map(|m| m.as_str()),
                r.estimate.value,
                r.estimate.variance,
            )])?,
        };
        return emit(&a.out, text);
    }
    let r = estimate::<f64>(g, t.node, s.mode, &b, s.seed, s.weights).context("estimating")?;
    render_report(r, &t, &a.out)
}

fn cmd_exact(a: &ExactArgs) -> Outcome {
    check_mode(a.mode, a.graph.directed)?;
    let t = load(&a.graph)?;
    let counts = match exact_orbit_degrees_guarded(&t.loaded.graph, t.node, a.oracle_guard) {
        Ok(c) => c,
        Err(OracleError::GuardExceeded { bound, limit, .. }) => {
            return Err(Failure::Guard(format!(
                "node {} has up to {bound} candidate subgraphs, above --oracle-guard {limit}",
                t.original(t.node)
            )))
        }
        Err(e) => return Err(anyhow::Error::new(e).context("counting").into()),
    };
    let r = OrbitDegreeReport::<f64>::from_counts(&counts, a.mode)
        .ok_or_else(|| Failure::Usage("directed counts need --directed".into()))?;
    render_report(r, &t, &a.out)
}

#[derive(Serialize)]
struct EvalRow {
    id: u8,
    exact: Option<u64>,
    mean: f64,
    variance: f64,
    reported_variance: f64,
    nrmse: Option<f64>,
}

fn cmd_evaluate(a: &EvaluateArgs) -> Outcome {
    let s = &a.sampling;
    check_mode(s.mode, a.graph.directed)?;
    if a.runs < 2 {
        return Err(Failure::Usage("--runs must be at least 2".into()));
    }
    let b = budget(s)?;
    let t = load(&a.graph)?;
    let mut r: EvalReport = run_experiment(
        &t.loaded.graph,
        t.node,
        s.mode,
        &b,
        a.runs,
        s.seed,
        s.weights,
        a.oracle_guard,
        a.timing,
    )
    .context("evaluating")?;
    if !r.exact_available {
        eprintln!("note: node exceeds the oracle guard; reporting estimates only");
    }
    r.node = t.original(t.node);
    let text = match a.out.format {
        Format::Json => json(&r)?,
        Format::Csv => csv_rows(
            &r.orbits
                .iter()
                .map(|o| EvalRow {
                    id: o.id,
                    exact: o.exact,
                    mean: o.mean,
                    variance: o.variance,
                    reported_variance: o.reported_variance,
                    nrmse: o.nrmse,
                })
                .collect::<Vec<_>>(),
        )?,
    };
    emit(&a.out, text)
}

#[derive(Serialize)]
struct TableRow {
    id: u8,
    class: String,
    unorbit: u8,
    codes: String,
    pattern: String,
}

fn cmd_orbit_table(out: &OutputArgs) -> Outcome {
    let rows = directed_orbit_table();
    let text = match out.format {
        Format::Json => json(&rows)?,
        Format::Csv => csv_rows(
            &rows
                .iter()
                .map(|r| TableRow {
                    id: r.id,
                    class: serde_json::to_value(r.class)
                        .ok()
                        .and_then(|v| v.as_str().map(str::to_owned))
                        .unwrap_or_default(),
                    unorbit: r.unorbit,
                    codes: r
                        .codes
                        .iter()
                        .map(u8::to_string)
                        .collect::<Vec<_>>()
                        .join(" "),
                    pattern: r.pattern.clone(),
                })
                .collect::<Vec<_>>(),
        )?,
    };
    emit(out, text)
}

#[derive(Serialize)]
struct BenchRow {
    node: u64,
    method: Method,
    draws: u64,
    seconds_per_draw: f64,
    draws_per_second: f64,
}

fn cmd_bench(a: &BenchArgs) -> Outcome {
    if a.draws == 0 {
        return Err(Failure::Usage("--draws must be positive".into()));
    }
    let t = load(&a.graph)?;
    let sampler = AnchorSampler::new(&t.loaded.graph, t.node).context("preparing sampler")?;
    let mut rows = Vec::new();
    for m in Method::ALL {
        if !m.is_feasible(sampler.stats()) {
            continue;
        }
        let secs = time_per_draw(&sampler, m, a.draws).context("timing")?;
        rows.push(BenchRow {
            node: t.original(t.node),
            method: m,
            draws: a.draws,
            seconds_per_draw: secs,
            draws_per_second: if secs > 0.0 {
                1.0 / secs
            } else {
                f64::INFINITY
            },
        });
    }
    let text = match a.out.format {
        Format::Json => json(&rows)?,
        Format::Csv => csv_rows(&rows)?,
    };
    emit(&a.out, text)
}
