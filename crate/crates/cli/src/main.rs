use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fairpr::analysis::{personalized_audit, red_mass, AuditSample};
use fairpr::export::{fmt_f64, manifest_csv, scores_csv, solution_csv};
use fairpr::pagerank::original_pagerank;
use fairpr::run::{rank, Algorithm, RunOptions, Target};
use fairpr::synth::{generate, ManifestRow, SynthConfig, DEFAULT_SEED_NODES};
use fairpr::{group_stats, ColoredGraph, Error, PowerConfig, ScoreVector, TransitionModel};
use rayon::prelude::*;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "fairpr", version, about = "Group-fair PageRank on node-colored graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank one graph with one algorithm; writes scores.csv and report.json.
    Rank(RankArgs),
    /// Loss and red mass over a grid of φ values, algorithms and instances.
    Sweep(SweepArgs),
    /// Personalized-fairness audit of a walk; writes audit.csv and histogram.csv.
    Audit(AuditArgs),
    /// Biased preferential-attachment graph; writes edges.tsv, colors.tsv and manifest.csv.
    Generate(GenerateArgs),
    /// Group sizes and cross-edge ratios as one CSV row on stdout.
    Stats(GraphArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// Edge list, one `src<TAB>dst` pair per line.
    #[arg(long)]
    edges: PathBuf,
    /// Color file, one `node<TAB>color` pair per line, 1 = red (protected).
    #[arg(long)]
    colors: PathBuf,
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// Restart probability γ.
    #[arg(long, default_value_t = 0.15)]
    gamma: f64,
    /// L1 tolerance of the power iteration.
    #[arg(long, default_value_t = 1e-12)]
    tol: f64,
    /// Iteration budget of the iterative solvers (LFPR_O outer iterations,
    /// FSPR gradient steps).
    #[arg(long)]
    iters: Option<usize>,
    /// Random directions per LFPR_O iteration.
    #[arg(long = "K")]
    k: Option<usize>,
    /// LFPR_O penalty weight.
    #[arg(long)]
    lambda: Option<f64>,
    /// Seed for randomized steps.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SolverArgs {
    fn options(&self, phi: f64) -> RunOptions {
        let mut opts = RunOptions::new(phi);
        opts.power = PowerConfig {
            gamma: self.gamma,
            tol: self.tol,
            ..PowerConfig::default()
        };
        if let Some(i) = self.iters {
            opts.search.iterations = i;
            opts.fspr.max_iters = i;
        }
        if let Some(k) = self.k {
            opts.search.directions = k;
        }
        if let Some(l) = self.lambda {
            opts.search.lambda = l;
        }
        opts.search.seed = self.seed;
        opts
    }
}

#[derive(Args)]
struct RankArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// opr, fspr, lfpr-n, lfpr-u, lfpr-p or lfpr-o.
    #[arg(long)]
    algo: Algorithm,
    /// Target red share φ.
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    /// File with the node ids of the target set S.
    #[arg(long, requires = "target_protected")]
    target_set: Option<PathBuf>,
    /// File with the node ids of the protected part of S.
    #[arg(long, requires = "target_set")]
    target_protected: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct SweepArgs {
    #[arg(long, requires = "colors", conflicts_with = "n")]
    edges: Option<PathBuf>,
    #[arg(long, requires = "edges")]
    colors: Option<PathBuf>,
    /// Comma-separated φ values.
    #[arg(long, value_delimiter = ',', required = true)]
    phi: Vec<f64>,
    /// Comma-separated algorithms; all six when omitted.
    #[arg(long, value_delimiter = ',')]
    algo: Vec<Algorithm>,
    /// Node count of synthetic instances (instead of --edges/--colors).
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated red arrival probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0.3")]
    r: Vec<f64>,
    /// Comma-separated symmetric same-color acceptance probabilities.
    #[arg(long, value_delimiter = ',', default_value = "0.5")]
    alpha: Vec<f64>,
    /// Red acceptance probability; overrides --alpha for red arrivals.
    #[arg(long)]
    alpha_r: Option<f64>,
    /// Blue acceptance probability; overrides --alpha for blue arrivals.
    #[arg(long)]
    alpha_b: Option<f64>,
    /// Synthetic instances per grid point.
    #[arg(long, default_value_t = 1)]
    seeds: usize,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Walk to audit: opr and fspr use the standard walk, lfpr-* their fair walk.
    #[arg(long, default_value = "opr")]
    algo: Algorithm,
    #[arg(long, default_value_t = 0.5)]
    phi: f64,
    /// Number of nodes to audit (stratified by color); all nodes when omitted
    /// on graphs up to 5000 nodes.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[command(flatten)]
    solver: SolverArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    /// Seed ring size.
    #[arg(long, default_value_t = DEFAULT_SEED_NODES)]
    n0: usize,
    /// Red arrival probability.
    #[arg(long)]
    r: f64,
    /// Same-color acceptance probability for both groups.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long)]
    alpha_r: Option<f64>,
    #[arg(long)]
    alpha_b: Option<f64>,
    #[arg(long, default_value_t = 1)]
    edges_per_node: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

enum Failure {
    Usage(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Core(Error::Io(e))
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Core(Error::Infeasible { .. } | Error::EmptyGroup(_)) => 2,
            _ => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Usage(m) => m.clone(),
            Failure::Core(e @ Error::EmptyGroup(_)) => {
                format!("infeasible: {e}, so no red share φ in (0, 1) can be met")
            }
            Failure::Core(e @ Error::Infeasible { .. }) => format!("infeasible: {e}"),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Rank(a) => cmd_rank(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Audit(a) => cmd_audit(a),
        Command::Generate(a) => cmd_generate(a),
        Command::Stats(a) => cmd_stats(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}

fn write(dir: &Path, name: &str, contents: &str) -> CmdResult {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join(name), contents)?;
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(value).map_err(Error::Json)?;
    s.push('\n');
    Ok(s)
}

fn read_ids(path: &Path) -> Result<Vec<usize>, Failure> {
    let text = std::fs::read_to_string(path)?;
    let mut ids = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            ids.push(tok.parse().map_err(|_| {
                Failure::Core(Error::Parse {
                    path: path.to_path_buf(),
                    line: line_no + 1,
                    msg: format!("not a node id: '{tok}'"),
                })
            })?);
        }
    }
    Ok(ids)
}

#[derive(Serialize)]
struct RunJson<'a> {
    algorithm: Algorithm,
    #[serde(flatten)]
    meta: &'a fairpr::export::RunMetadata,
}

fn cmd_rank(a: RankArgs) -> CmdResult {
    let g = ColoredGraph::load(&a.graph.edges, &a.graph.colors)?;
    let mut opts = a.solver.options(a.phi);
    if let (Some(s), Some(p)) = (&a.target_set, &a.target_protected) {
        opts.target = Some(Target {
            nodes: read_ids(s)?,
            protected: read_ids(p)?,
        });
    }
    let out = rank(&g, a.algo, &opts, None)?;
    write(&a.out, "scores.csv", &scores_csv(&out.scores))?;
    write(&a.out, "report.json", &to_json(&out.report)?)?;
    write(&a.out, "run.json", &to_json(&RunJson { algorithm: a.algo, meta: &out.metadata })?)?;
    if let Some(jump) = &out.jump {
        write(&a.out, "solution.csv", &solution_csv(jump, &out.scores))?;
    }
    if let Some(policy) = &out.policy {
        write(&a.out, "policy.json", &to_json(policy)?)?;
    }
    println!(
        "{}: red mass {:.6} (φ = {}), loss {:.6e}, lower bound {:.6e}",
        a.algo, out.report.red_mass, a.phi, out.report.loss, out.report.lower_bound_loss
    );
    Ok(())
}

struct Instance {
    id: u64,
    graph: ColoredGraph,
    p_o: ScoreVector,
}

fn sweep_row(inst: &Instance, algo: Algorithm, phi: f64, solver: &SolverArgs) -> (String, bool) {
    let prefix = format!("{},{},{}", inst.id, algo, phi);
    match rank(&inst.graph, algo, &solver.options(phi), Some(&inst.p_o)) {
        Ok(out) => (
            format!(
                "{prefix},ok,{},{},{}\n",
                fmt_f64(out.report.red_mass),
                fmt_f64(out.report.loss),
                fmt_f64(out.report.lower_bound_loss)
            ),
            true,
        ),
        Err(Error::Infeasible { .. }) => (format!("{prefix},infeasible,,,\n"), false),
        Err(e) => (format!("{prefix},\"error: {}\",,,\n", e.to_string().replace('"', "'")), false),
    }
}

fn cmd_sweep(a: SweepArgs) -> CmdResult {
    if a.phi.is_empty() {
        return Err(Failure::Usage("--phi needs at least one value".into()));
    }
    let algos = if a.algo.is_empty() { Algorithm::ALL.to_vec() } else { a.algo.clone() };
    let pr = a.solver.options(0.5).power;
    pr.validate()?;

    let instances: Vec<Instance> = match (&a.edges, &a.colors, a.n) {
        (Some(e), Some(c), _) => {
            let graph = ColoredGraph::load(e, c)?;
            let p_o = original_pagerank(&graph, &pr)?;
            vec![Instance { id: 0, graph, p_o }]
        }
        (None, None, Some(n)) => {
            let mut cells = Vec::new();
            for &r in &a.r {
                for &alpha in &a.alpha {
                    for _ in 0..a.seeds {
                        let seed = a.solver.seed.wrapping_add(cells.len() as u64);
                        cells.push(SynthConfig::asymmetric(
                            n,
                            r,
                            a.alpha_r.unwrap_or(alpha),
                            a.alpha_b.unwrap_or(alpha),
                            seed,
                        ));
                    }
                }
            }
            let built: Result<Vec<(ManifestRow, Instance)>, Error> = cells
                .par_iter()
                .map(|cfg| {
                    let graph = generate(cfg)?;
                    let p_o = original_pagerank(&graph, &pr)?;
                    let row = ManifestRow {
                        seed: cfg.seed,
                        r: cfg.r,
                        alpha_r: cfg.alpha_r,
                        alpha_b: cfg.alpha_b,
                        n: graph.node_count(),
                        red_pagerank: red_mass(&p_o, &graph),
                    };
                    Ok((row, Instance { id: cfg.seed, graph, p_o }))
                })
                .collect();
            let (rows, instances): (Vec<_>, Vec<_>) = built?.into_iter().unzip();
            write(&a.out, "manifest.csv", &manifest_csv(&rows))?;
            instances
        }
        _ => {
            return Err(Failure::Usage(
                "give either --edges and --colors or --n for synthetic instances".into(),
            ))
        }
    };

    let mut jobs = Vec::new();
    for i in 0..instances.len() {
        for &algo in &algos {
            for &phi in &a.phi {
                jobs.push((i, algo, phi));
            }
        }
    }
    let rows: Vec<(String, bool)> = jobs
        .par_iter()
        .map(|&(i, algo, phi)| sweep_row(&instances[i], algo, phi, &a.solver))
        .collect();
    let mut csv = String::from("instance,algorithm,phi,status,red_mass,loss,lower_bound_loss\n");
    for (row, _) in &rows {
        csv.push_str(row);
    }
    write(&a.out, "sweep.csv", &csv)?;
    let ok = rows.iter().filter(|(_, ok)| *ok).count();
    println!("{ok}/{} sweep rows succeeded", rows.len());
    if ok == 0 {
        return Err(Failure::Usage("no sweep row succeeded".into()));
    }
    Ok(())
}

#[derive(Serialize)]
struct AuditJson<'a> {
    algorithm: Algorithm,
    phi: f64,
    gamma: f64,
    target: f64,
    audited: usize,
    all_fair: bool,
    red: &'a Option<fairpr::analysis::GroupSummary>,
    blue: &'a Option<fairpr::analysis::GroupSummary>,
}

fn cmd_audit(a: AuditArgs) -> CmdResult {
    let g = ColoredGraph::load(&a.graph.edges, &a.graph.colors)?;
    let opts = a.solver.options(a.phi);
    let model = match a.algo {
        Algorithm::Original | Algorithm::Fspr => TransitionModel::standard(&g),
        algo => rank(&g, algo, &opts, None)?.model.expect("locally fair runs carry their walk"),
    };
    let sample = match a.sample {
        Some(count) => AuditSample::Count { count, seed: a.solver.seed },
        None => AuditSample::Auto { seed: a.solver.seed },
    };
    let audit = personalized_audit(&model, &g, &opts.power, a.phi, &sample)?;
    write(&a.out, "audit.csv", &audit.rows_csv())?;
    write(&a.out, "histogram.csv", &audit.histogram_csv())?;
    let summary = AuditJson {
        algorithm: a.algo,
        phi: a.phi,
        gamma: audit.gamma,
        target: audit.target,
        audited: audit.rows.len(),
        all_fair: audit.all_fair(),
        red: &audit.red,
        blue: &audit.blue,
    };
    write(&a.out, "audit.json", &to_json(&summary)?)?;
    println!(
        "audited {} nodes: {} fair (target {:.6})",
        audit.rows.len(),
        audit.rows.iter().filter(|r| r.fair).count(),
        audit.target
    );
    Ok(())
}

fn cmd_generate(a: GenerateArgs) -> CmdResult {
    let cfg = SynthConfig {
        n: a.n,
        n0: a.n0,
        r: a.r,
        alpha_r: a.alpha_r.unwrap_or(a.alpha),
        alpha_b: a.alpha_b.unwrap_or(a.alpha),
        edges_per_node: a.edges_per_node,
        seed: a.seed,
    };
    let g = generate(&cfg)?;
    std::fs::create_dir_all(&a.out)?;
    g.save(a.out.join("edges.tsv"), a.out.join("colors.tsv"))?;
    let row = ManifestRow::for_graph(&cfg, &g, &PowerConfig::default())?;
    write(&a.out, "manifest.csv", &manifest_csv(std::slice::from_ref(&row)))?;
    write(&a.out, "stats.csv", &group_stats(&g).to_csv())?;
    println!(
        "{} nodes, {} edges, red share {:.4}, original red PageRank {:.4}",
        g.node_count(),
        g.edge_count(),
        g.red_count() as f64 / g.node_count() as f64,
        row.red_pagerank
    );
    Ok(())
}

fn cmd_stats(a: GraphArgs) -> CmdResult {
    let g = ColoredGraph::load(&a.edges, &a.colors)?;
    print!("{}", group_stats(&g).to_csv());
    Ok(())
}
