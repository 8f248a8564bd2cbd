use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use finger::batch::parallel_ground_truth;
use finger::bench::{self, BenchConfig, Workspace};
use finger::synth::{Mixture, MixtureSpec};
use finger::{graph_file, index_file, vecs};
use finger_core::finger::{train_finger_with_report, AngleEstimator, BasisKind, FingerConfig};
use finger_core::{edge_count, GraphParams, Metric};

#[derive(Parser)]
#[command(
    name = "finger",
    version,
    about = "Graph ANN search with low-rank distance approximation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic Gaussian-mixture base and query set as fvecs.
    Gen(GenArgs),
    /// Brute-force ground truth as ivecs.
    Gt(GtArgs),
    /// Build the search graph.
    Build(BuildArgs),
    /// Train a FINGER index on a saved graph.
    Train(TrainArgs),
    /// Recall / throughput / call-count sweep (CSV).
    Bench(RunArgs),
    /// Estimator ablation over ranks (CSV).
    Ablate(RunArgs),
    /// Per-step upper-bound exceedance of exact search (JSON).
    Stats(RunArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, default_value_t = 10_000)]
    n: usize,
    #[arg(long, default_value_t = 1_000)]
    queries: usize,
    #[arg(long, default_value_t = 64)]
    dim: usize,
    #[arg(long, default_value_t = 16)]
    clusters: usize,
    #[arg(long, default_value_t = 4.0)]
    center_scale: f32,
    #[arg(long, default_value_t = 1.0)]
    noise_scale: f32,
    /// Per-dimension scale exponent: dimension i is scaled by (i+1)^-decay.
    #[arg(long, default_value_t = 0.5)]
    decay: f32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    base_out: PathBuf,
    #[arg(long)]
    query_out: PathBuf,
}

#[derive(Args)]
struct GtArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, env = "FINGER_WORKERS", default_value_t = 0)]
    workers: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BuildArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    #[arg(long = "m", default_value_t = 16)]
    max_degree: usize,
    #[arg(long, default_value_t = 200)]
    ef_construction: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    base: PathBuf,
    #[arg(long)]
    graph: PathBuf,
    #[arg(long, default_value = "l2")]
    metric: Metric,
    /// "auto" or a fixed rank.
    #[arg(long, default_value = "auto")]
    rank: String,
    /// svd, or random for the hashing baseline.
    #[arg(long, default_value = "svd")]
    basis: String,
    #[arg(long, default_value_t = 1000)]
    basis_seed: u64,
    #[arg(long, default_value_t = 1)]
    pairs_per_node: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    /// TOML file with BenchConfig fields; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    base: Option<PathBuf>,
    #[arg(long)]
    queries: Option<PathBuf>,
    #[arg(long)]
    gt: Option<PathBuf>,
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long)]
    index: Option<PathBuf>,
    #[arg(long)]
    metric: Option<String>,
    #[arg(long = "m")]
    max_degree: Option<usize>,
    #[arg(long)]
    ef_construction: Option<usize>,
    #[arg(long)]
    graph_seed: Option<u64>,
    #[arg(long)]
    rank: Option<String>,
    #[arg(long)]
    switch_after: Option<usize>,
    #[arg(long)]
    matching: Option<bool>,
    #[arg(long)]
    epsilon: Option<bool>,
    #[arg(long)]
    pairs_per_node: Option<usize>,
    #[arg(long)]
    train_seed: Option<u64>,
    #[arg(long)]
    rplsh_seed: Option<u64>,
    /// Comma-separated efs sweep.
    #[arg(long, value_delimiter = ',')]
    efs: Option<Vec<usize>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, env = "FINGER_WORKERS")]
    workers: Option<usize>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    ablation_ranks: Option<Vec<usize>>,
    #[arg(long)]
    ablation_pairs: Option<usize>,
    #[arg(long)]
    ablation_efs: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn config(self) -> anyhow::Result<BenchConfig> {
        let mut c = match &self.config {
            Some(p) => BenchConfig::load(p)?,
            None => BenchConfig::default(),
        };
        macro_rules! set {
            ($($field:ident <- $arg:ident),* $(,)?) => {
                $(if let Some(v) = self.$arg { c.$field = v.into(); })*
            };
        }
        set!(base <- base, queries <- queries, ground_truth <- gt, graph <- graph, index <- index,
             output <- out);
        set!(metric <- metric, max_degree <- max_degree, ef_construction <- ef_construction,
             graph_seed <- graph_seed, rank <- rank, switch_after <- switch_after, matching <- matching,
             epsilon <- epsilon, pairs_per_node <- pairs_per_node, train_seed <- train_seed,
             rplsh_seed <- rplsh_seed, efs <- efs, k <- k, workers <- workers, repeats <- repeats,
             ablation_ranks <- ablation_ranks, ablation_pairs <- ablation_pairs, ablation_efs <- ablation_efs);
        Ok(c)
    }
}

fn workers(n: usize) -> usize {
    if n == 0 {
        finger::batch::default_workers()
    } else {
        n
    }
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Gen(a) => {
            let mix = Mixture::new(MixtureSpec {
                dim: a.dim,
                clusters: a.clusters,
                center_scale: a.center_scale,
                noise_scale: a.noise_scale,
                decay: a.decay,
                seed: a.seed,
            });
            let base = mix.vectors(a.n, 0, Metric::L2)?;
            let queries = mix.vectors(a.queries, 1, Metric::L2)?;
            vecs::save_fvecs(&a.base_out, &base)?;
            vecs::save_fvecs(&a.query_out, &queries)?;
            println!(
                "wrote {} base and {} query vectors of dim {}",
                base.len(),
                queries.len(),
                a.dim
            );
        }
        Command::Gt(a) => {
            let base = vecs::load_fvecs(&a.base, a.metric)?;
            let queries = vecs::load_fvecs(&a.queries, a.metric)?;
            let truth = parallel_ground_truth(&base, &queries, a.k, workers(a.workers))?;
            vecs::save_ground_truth(&a.out, &truth)?;
            println!("wrote top-{} neighbors for {} queries", a.k, queries.len());
        }
        Command::Build(a) => {
            let data = vecs::load_fvecs(&a.base, a.metric)?;
            let params = GraphParams {
                max_degree: a.max_degree,
                ef_construction: a.ef_construction,
                seed: a.seed,
            };
            let (graph, secs) = bench::timed_build(&data, &params)?;
            graph_file::save_graph(&a.out, &graph)?;
            println!(
                "nodes {} edges {} levels {} build_seconds {:.3}",
                graph.len(),
                edge_count(&graph),
                graph.num_levels(),
                secs
            );
        }
        Command::Train(a) => {
            let data = vecs::load_fvecs(&a.base, a.metric)?;
            let graph = graph_file::load_graph(&a.graph)?;
            let (basis, estimator) = match a.basis.as_str() {
                "svd" => (BasisKind::Svd, AngleEstimator::Projected),
                "random" => (
                    BasisKind::Random { seed: a.basis_seed },
                    AngleEstimator::SignedHash,
                ),
                other => anyhow::bail!("unknown basis {other:?}, expected svd or random"),
            };
            let config = FingerConfig {
                rank: bench::parse_rank(&a.rank)?,
                basis,
                estimator,
                pairs_per_node: a.pairs_per_node,
                seed: a.seed,
            };
            let start = Instant::now();
            let (index, report) = train_finger_with_report(&graph, &data, &config)?;
            let secs = start.elapsed().as_secs_f64();
            index_file::save_index(&a.out, &index)?;
            let d = index.distribution();
            let bytes = std::fs::metadata(&a.out)?.len();
            println!(
                "rank {} corr {:.4} mu {:.6} sigma {:.6} mu_hat {:.6} sigma_hat {:.6} epsilon {:.6}",
                report.rank, report.correlation, d.mu, d.sigma, d.mu_hat, d.sigma_hat, d.epsilon
            );
            println!(
                "pairs {} zero_centers {} index_bytes {} edge_payload_bytes {} train_seconds {:.3}",
                report.pairs_used,
                report.zero_centers,
                bytes,
                (report.rank + 2) * index.edge_count() * 4,
                secs
            );
            if report.correlation < finger_core::finger::AUTO_RANK_CORRELATION {
                eprintln!(
                    "warning: correlation {:.3} is below 0.7; consider a larger rank",
                    report.correlation
                );
            }
        }
        Command::Bench(a) => {
            let config = a.config()?;
            let ws = Workspace::prepare(&config)?;
            let records = bench::run_bench(&config, &ws)?;
            bench::emit_records(config.output.as_deref(), &records)?;
        }
        Command::Ablate(a) => {
            let config = a.config()?;
            let ws = Workspace::prepare(&config)?;
            let records = bench::run_ablation(&config, &ws)?;
            bench::emit_records(config.output.as_deref(), &records)?;
        }
        Command::Stats(a) => {
            let config = a.config()?;
            let ws = Workspace::prepare(&config)?;
            let profile = bench::run_stats(&config, &ws)?;
            let json = serde_json::to_string_pretty(&profile)?;
            match &config.output {
                Some(p) => {
                    std::fs::write(p, json).with_context(|| format!("writing {}", p.display()))?
                }
                None => println!("{json}"),
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
