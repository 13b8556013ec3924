//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 infeasible degree sequence,
//! 4 weight fit did not converge.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::clustering::{self, Partition};
use crate::divergence::{kendall_tau, rank_embeddings, AlphaGrid, HalfVectors, Ranking, ScoreParams, Scorer};
use crate::embedding::{DistanceMatrix, Embedding};
use crate::error::{Error, Result};
use crate::gcl::{self, FitParams, GclModel, Kernel};
use crate::graph::Graph;
use crate::seed;
use crate::synth::{self, PlantedSpec};

/// `println!` that ignores a closed stdout, e.g. when piped into `head`.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write;
        let _ = writeln!(std::io::stdout(), $($arg)*);
    }};
}

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NON_CONVERGENCE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "embdiv", version, about = "Score and rank graph embeddings with the Geometric Chung-Lu model")]
pub struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Divergence score and α curve for each embedding.
    Score(ScoreArgs),
    /// Rank several embeddings by divergence score.
    Rank(RankArgs),
    /// Partition the graph and write `partition.txt`.
    Cluster(ClusterArgs),
    /// Fit model weights at one α and write `model.json`.
    Fit(ModelArgs),
    /// Sample a random graph from the fitted model.
    Generate(ModelArgs),
    /// Write a planted-partition graph, its partition and an embedding.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Clustering {
    Ecg,
    Louvain,
    File,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ecg,
    Louvain,
}

#[derive(Debug, Args)]
struct GraphArgs {
    /// Edge list, one `u v` pair per line.
    #[arg(long)]
    graph: PathBuf,

    /// Keep only the largest connected component.
    #[arg(long)]
    lcc: bool,

    /// Partition file (`label cluster` per line), used with `--clustering file`.
    #[arg(long)]
    partition: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "ecg")]
    clustering: Clustering,

    /// Louvain passes in the ECG ensemble.
    #[arg(long, default_value_t = clustering::DEFAULT_ENSEMBLE_SIZE)]
    ensemble_size: usize,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[arg(long, default_value_t = 0.0)]
    alpha_min: f64,

    #[arg(long, default_value_t = 10.0)]
    alpha_max: f64,

    #[arg(long, default_value_t = 0.25)]
    alpha_step: f64,

    /// Step size of the weight iteration.
    #[arg(long, default_value_t = gcl::DEFAULT_EPS)]
    eps: f64,

    /// Stop once every expected degree is within this of its target.
    #[arg(long, default_value_t = gcl::DEFAULT_DELTA)]
    delta: f64,

    #[arg(long, default_value_t = gcl::DEFAULT_MAX_ITER)]
    max_iter: usize,

    /// Weight of the internal term in Δ_α; the external term gets the rest.
    #[arg(long, default_value_t = 0.5)]
    internal_weight: f64,

    /// Rescale the internal and external block vectors to distributions
    /// separately before JSD.
    #[arg(long)]
    renormalize_halves: bool,
}

impl FitArgs {
    fn grid(&self) -> Result<AlphaGrid> {
        AlphaGrid::range(self.alpha_min, self.alpha_max, self.alpha_step)
    }

    fn params(&self) -> Result<ScoreParams> {
        let params = ScoreParams {
            fit: FitParams {
                eps: self.eps,
                delta: self.delta,
                max_iter: self.max_iter,
            },
            internal_weight: self.internal_weight,
            halves: if self.renormalize_halves {
                HalfVectors::Renormalized
            } else {
                HalfVectors::Raw
            },
            ..ScoreParams::default()
        };
        params.fit.validate()?;
        if !(0.0..=1.0).contains(&params.internal_weight) {
            return Err(Error::InvalidParameter(format!(
                "internal weight must lie in [0, 1], got {}",
                params.internal_weight
            )));
        }
        Ok(params)
    }
}

#[derive(Debug, Args)]
struct ScoreArgs {
    #[command(flatten)]
    input: GraphArgs,

    /// Embedding file (node2vec text format); repeat for several.
    #[arg(long, required = true)]
    embedding: Vec<PathBuf>,

    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Debug, Args)]
struct RankArgs {
    #[command(flatten)]
    score: ScoreArgs,

    /// Also rank under a second clustering method and print Kendall tau.
    #[arg(long, value_enum)]
    compare: Option<Method>,
}

#[derive(Debug, Args)]
struct ClusterArgs {
    #[command(flatten)]
    input: GraphArgs,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AlphaChoice {
    Value(f64),
    Best,
}

impl FromStr for AlphaChoice {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "best" {
            return Ok(AlphaChoice::Best);
        }
        match s.parse::<f64>() {
            Ok(a) if a >= 0.0 && a.is_finite() => Ok(AlphaChoice::Value(a)),
            _ => Err(format!("expected a non-negative number or `best`, got `{s}`")),
        }
    }
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[command(flatten)]
    input: GraphArgs,

    #[arg(long)]
    embedding: PathBuf,

    /// Decay strength, or `best` to search the grid first.
    #[arg(long, default_value = "best")]
    alpha: AlphaChoice,

    #[command(flatten)]
    fit: FitArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmbeddingKind {
    Structured,
    Random,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    n: usize,

    /// Number of planted clusters.
    #[arg(long)]
    l: usize,

    #[arg(long, default_value_t = 0.3)]
    p_in: f64,

    #[arg(long, default_value_t = 0.03)]
    p_out: f64,

    #[arg(long, default_value_t = 2)]
    dim: usize,

    #[arg(long, default_value_t = 1.0)]
    separation: f64,

    #[arg(long, default_value_t = 0.25)]
    spread: f64,

    #[arg(long, value_enum, default_value = "structured")]
    embedding_kind: EmbeddingKind,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

pub fn exit_code(err: &Error) -> i32 {
    if err.is_infeasible() {
        EXIT_INFEASIBLE
    } else if err.is_non_convergence() {
        EXIT_NON_CONVERGENCE
    } else {
        EXIT_INPUT
    }
}

/// Parses `args` (program name first) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    if let Some(threads) = cli.threads {
        // fails only if a pool already exists, which is harmless
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    let outcome = match cli.command {
        Command::Score(args) => cmd_score(&args),
        Command::Rank(args) => cmd_rank(&args),
        Command::Cluster(args) => cmd_cluster(&args),
        Command::Fit(args) => cmd_fit(&args),
        Command::Generate(args) => cmd_generate(&args),
        Command::Synth(args) => cmd_synth(&args),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(err) => {
            eprintln!("error: {err}");
            exit_code(&err)
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_owned(),
        source,
    })
}

/// Writes through a temporary file in the same directory, then renames.
fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io {
        path: path.to_owned(),
        source,
    };
    let tmp = path.with_extension(format!("tmp-{}", std::process::id()));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|source| Error::Io {
        path: dir.to_owned(),
        source,
    })
}

fn embedding_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn load_graph(args: &GraphArgs) -> Result<Graph> {
    let g = Graph::parse_edge_list(&read(&args.graph)?, false)?;
    if args.lcc {
        let lcc = g.largest_connected_component()?;
        if lcc.vertex_count() < g.vertex_count() {
            log::info!("kept {} of {} vertices", lcc.vertex_count(), g.vertex_count());
        }
        return Ok(lcc);
    }
    Ok(g)
}

fn make_partition(g: &Graph, method: Clustering, args: &GraphArgs) -> Result<Partition> {
    let master = seed::derive(args.seed, seed::CLUSTERING, 0);
    match method {
        Clustering::Ecg => clustering::ecg(g, args.ensemble_size, master),
        Clustering::Louvain => clustering::louvain(g, master),
        Clustering::File => {
            let path = args.partition.as_ref().ok_or_else(|| {
                Error::InvalidParameter("--clustering file needs --partition".into())
            })?;
            Partition::parse(&read(path)?, g)
        }
    }
}

fn load_embeddings(paths: &[PathBuf], g: &Graph) -> Result<Vec<(String, Embedding)>> {
    paths
        .iter()
        .map(|p| Ok((embedding_id(p), Embedding::parse(&read(p)?, g)?)))
        .collect()
}

fn cmd_score(args: &ScoreArgs) -> Result<()> {
    let g = load_graph(&args.input)?;
    let embeddings = load_embeddings(&args.embedding, &g)?;
    let (grid, params) = (args.fit.grid()?, args.fit.params()?);
    let partition = make_partition(&g, args.input.clustering, &args.input)?;
    let scorer = Scorer::new(&g, &partition)?;
    ensure_dir(&args.input.out_dir)?;
    for (id, e) in &embeddings {
        let report = scorer.score(e, &grid, &params)?;
        let out = &args.input.out_dir;
        write_atomic(&out.join(format!("{id}.score.json")), &report.to_json(id))?;
        write_atomic(&out.join(format!("{id}.curve.csv")), &report.curve_csv())?;
        out!(
            "{id}\tbest_alpha={}\tdivergence={:.6}",
            report.best_alpha, report.best_divergence
        );
    }
    Ok(())
}

fn rank_with(
    g: &Graph,
    partition: &Partition,
    embeddings: &[(String, Embedding)],
    grid: &AlphaGrid,
    params: &ScoreParams,
) -> Result<Ranking> {
    let ranking = rank_embeddings(g, partition, embeddings, grid, params)?;
    for (id, err) in &ranking.failures {
        eprintln!("warning: {id} not ranked: {err}");
    }
    if ranking.entries.is_empty() {
        let (_, err) = ranking
            .failures
            .into_iter()
            .next()
            .expect("at least one embedding");
        return Err(err);
    }
    Ok(ranking)
}

fn cmd_rank(args: &RankArgs) -> Result<()> {
    let score = &args.score;
    let g = load_graph(&score.input)?;
    let embeddings = load_embeddings(&score.embedding, &g)?;
    let (grid, params) = (score.fit.grid()?, score.fit.params()?);
    let partition = make_partition(&g, score.input.clustering, &score.input)?;
    let ranking = rank_with(&g, &partition, &embeddings, &grid, &params)?;
    let out = &score.input.out_dir;
    ensure_dir(out)?;
    for (id, report) in &ranking.entries {
        write_atomic(&out.join(format!("{id}.score.json")), &report.to_json(id))?;
        write_atomic(&out.join(format!("{id}.curve.csv")), &report.curve_csv())?;
    }
    write_atomic(&out.join("ranking.csv"), &ranking.to_csv())?;
    out!("{}", ranking.to_csv().trim_end());

    if let Some(method) = args.compare {
        let other_method = match method {
            Method::Ecg => Clustering::Ecg,
            Method::Louvain => Clustering::Louvain,
        };
        let other_partition = make_partition(&g, other_method, &score.input)?;
        let other = rank_with(&g, &other_partition, &embeddings, &grid, &params)?;
        let name = format!("{method:?}").to_lowercase();
        write_atomic(&out.join(format!("ranking.{name}.csv")), &other.to_csv())?;
        // compare over embeddings ranked under both partitions
        let a: Vec<&str> = ranking.ids();
        let b: Vec<&str> = other.ids();
        let a_common: Vec<&str> = a.iter().copied().filter(|id| b.contains(id)).collect();
        let b_common: Vec<&str> = b.iter().copied().filter(|id| a.contains(id)).collect();
        match kendall_tau(&a_common, &b_common) {
            Ok(tau) => out!("kendall_tau\t{tau:.6}"),
            Err(err) => out!("kendall_tau\tundefined ({err})"),
        }
    }
    Ok(())
}

fn cmd_cluster(args: &ClusterArgs) -> Result<()> {
    let g = load_graph(&args.input)?;
    let partition = make_partition(&g, args.input.clustering, &args.input)?;
    ensure_dir(&args.input.out_dir)?;
    write_atomic(&args.input.out_dir.join("partition.txt"), &partition.to_text(&g))?;
    let strength = clustering::community_strength(&g, &partition);
    out!("clusters\t{}", partition.cluster_count());
    out!("modularity\t{:.6}", clustering::modularity(&g, &partition));
    out!(
        "weak_communities\t{}",
        strength.iter().filter(|&&s| s > 0.5).count()
    );
    Ok(())
}

/// Resolves `--alpha`, scoring the grid when asked for `best`.
fn resolve_alpha(args: &ModelArgs, g: &Graph, e: &Embedding, params: &ScoreParams) -> Result<f64> {
    match args.alpha {
        AlphaChoice::Value(a) => Ok(a),
        AlphaChoice::Best => {
            let partition = make_partition(g, args.input.clustering, &args.input)?;
            let report = Scorer::new(g, &partition)?.score(e, &args.fit.grid()?, params)?;
            Ok(report.best_alpha)
        }
    }
}

fn fit_model(args: &ModelArgs) -> Result<(Graph, Embedding, GclModel)> {
    let g = load_graph(&args.input)?;
    let e = Embedding::parse(&read(&args.embedding)?, &g)?;
    let params = args.fit.params()?;
    let alpha = resolve_alpha(args, &g, &e, &params)?;
    let kernel = Kernel::new(&DistanceMatrix::new(&e)?, alpha, params.g_floor)?;
    let (model, report) = gcl::fit_kernel(&g.degree_sequence(), kernel, &params.fit, None)?;
    log::info!(
        "alpha = {alpha}: converged after {} iterations (residual {:.3e})",
        report.iterations,
        report.final_residual
    );
    Ok((g, e, model))
}

fn cmd_fit(args: &ModelArgs) -> Result<()> {
    let (_, _, model) = fit_model(args)?;
    ensure_dir(&args.input.out_dir)?;
    write_atomic(&args.input.out_dir.join("model.json"), &model.to_json())?;
    out!("alpha\t{}\nresidual\t{:.3e}", model.alpha(), model.residual());
    Ok(())
}

#[derive(Serialize)]
struct GenerateSidecar<'a> {
    seed: u64,
    sample_seed: u64,
    alpha: f64,
    embedding: &'a str,
    vertex_count: usize,
    edge_count: usize,
    residual: f64,
}

fn cmd_generate(args: &ModelArgs) -> Result<()> {
    let (g, e, model) = fit_model(args)?;
    let sample_seed = seed::derive(args.input.seed, seed::SAMPLING, 0);
    let sample = model.sample_graph(sample_seed).with_labels(g.labels().to_vec())?;
    let out = &args.input.out_dir;
    ensure_dir(out)?;
    write_atomic(&out.join("generated.edgelist"), &sample.to_edge_list())?;
    let sidecar = GenerateSidecar {
        seed: args.input.seed,
        sample_seed,
        alpha: model.alpha(),
        embedding: &args.embedding.to_string_lossy(),
        vertex_count: sample.vertex_count(),
        edge_count: sample.edge_count(),
        residual: model.residual(),
    };
    write_atomic(&out.join("generated.json"), &serde_json::to_string_pretty(&sidecar)?)?;
    // first two coordinates for plotting the sample
    let mut coords = String::from("label,x,y\n");
    for v in 0..e.vertex_count() {
        let row = e.row(v);
        coords.push_str(&format!(
            "{},{},{}\n",
            g.label(v),
            row[0],
            row.get(1).copied().unwrap_or(0.0)
        ));
    }
    write_atomic(&out.join("generated.coords.csv"), &coords)?;
    out!("alpha\t{}\nedges\t{}", model.alpha(), sample.edge_count());
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let spec = PlantedSpec {
        n: args.n,
        clusters: args.l,
        p_in: args.p_in,
        p_out: args.p_out,
        seed: args.seed,
    };
    let (g, partition) = synth::planted_partition(&spec)?;
    let e = match args.embedding_kind {
        EmbeddingKind::Structured => {
            synth::structured_embedding(&partition, args.dim, args.separation, args.spread, args.seed)?
        }
        EmbeddingKind::Random => synth::random_embedding(args.n, args.dim, args.seed)?,
    };
    ensure_dir(&args.out_dir)?;
    write_atomic(&args.out_dir.join("graph.edgelist"), &g.to_edge_list())?;
    write_atomic(&args.out_dir.join("partition.txt"), &partition.to_text(&g))?;
    write_atomic(&args.out_dir.join("embedding.emb"), &e.to_text(&g))?;
    out!("vertices\t{}\nedges\t{}", g.vertex_count(), g.edge_count());
    Ok(())
}
