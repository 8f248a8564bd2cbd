//! Benchmark configuration, records and runs.

use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, ensure, Context};
use finger_core::finger::AngleEstimator;
use finger_core::finger::{
    approximation_error, collect_training_pairs, sample_residual_pairs, train_finger_with_report,
    ApproxOptions, BasisKind, FingerConfig, FingerIndex, RankChoice, ResidualPair, TrainReport,
};
use finger_core::{
    build_graph, GraphParams, GroundTruth, Metric, SearchGraph, SearchParams, VectorSet,
};
use serde::{Deserialize, Serialize};

use crate::batch::{batch_search, default_workers, parallel_ground_truth, BatchOutput, Method};
use crate::{graph_file, index_file, vecs};

pub const SCHEMA_VERSION: u32 = 1;

/// Columns that depend on wall-clock time.
pub const WALL_CLOCK_COLUMNS: [&str; 2] = ["throughput_qps", "elapsed_s"];

/// Ground truth is not computed implicitly above this many distance evaluations.
pub const MAX_IMPLICIT_GT_WORK: u128 = 100_000_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub base: Option<PathBuf>,
    pub queries: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    /// Prebuilt graph; built from `base` when absent.
    pub graph: Option<PathBuf>,
    /// Prebuilt FINGER index; trained when absent.
    pub index: Option<PathBuf>,
    pub metric: String,
    pub max_degree: usize,
    pub ef_construction: usize,
    pub graph_seed: u64,
    /// `"auto"` or a fixed rank.
    pub rank: String,
    pub switch_after: usize,
    pub matching: bool,
    pub epsilon: bool,
    pub pairs_per_node: usize,
    pub train_seed: u64,
    pub rplsh_seed: u64,
    pub efs: Vec<usize>,
    pub k: usize,
    /// 0 picks the available parallelism.
    pub workers: usize,
    pub repeats: usize,
    pub ablation_ranks: Vec<usize>,
    pub ablation_pairs: usize,
    pub ablation_efs: usize,
    pub output: Option<PathBuf>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            base: None,
            queries: None,
            ground_truth: None,
            graph: None,
            index: None,
            metric: "l2".into(),
            max_degree: 16,
            ef_construction: 200,
            graph_seed: 42,
            rank: "auto".into(),
            switch_after: 5,
            matching: true,
            epsilon: true,
            pairs_per_node: 1,
            train_seed: 7,
            rplsh_seed: 1000,
            efs: vec![50, 100, 200],
            k: 10,
            workers: 0,
            repeats: 3,
            ablation_ranks: vec![8, 16, 32],
            ablation_pairs: 5000,
            ablation_efs: 100,
            output: None,
        }
    }
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn metric(&self) -> anyhow::Result<Metric> {
        self.metric
            .parse()
            .map_err(|_| anyhow::anyhow!("unknown metric {:?}", self.metric))
    }

    pub fn rank_choice(&self) -> anyhow::Result<RankChoice> {
        parse_rank(&self.rank)
    }

    pub fn graph_params(&self) -> GraphParams {
        GraphParams {
            max_degree: self.max_degree,
            ef_construction: self.ef_construction,
            seed: self.graph_seed,
        }
    }

    pub fn finger_config(&self) -> anyhow::Result<FingerConfig> {
        Ok(FingerConfig {
            rank: self.rank_choice()?,
            pairs_per_node: self.pairs_per_node,
            seed: self.train_seed,
            ..FingerConfig::default()
        })
    }

    pub fn approx_options(&self) -> ApproxOptions {
        ApproxOptions {
            switch_after: self.switch_after,
            matching: self.matching,
            epsilon: self.epsilon,
        }
    }

    pub fn worker_count(&self) -> usize {
        if self.workers == 0 {
            default_workers()
        } else {
            self.workers
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.metric()?;
        self.rank_choice()?;
        ensure!(!self.efs.is_empty(), "efs sweep is empty");
        ensure!(self.k > 0, "k must be positive");
        if let Some(&bad) = self.efs.iter().find(|&&e| e < self.k) {
            bail!("efs {bad} is below k={}", self.k);
        }
        ensure!(self.repeats > 0, "repeats must be positive");
        for path in [
            &self.base,
            &self.queries,
            &self.ground_truth,
            &self.graph,
            &self.index,
        ]
        .into_iter()
        .flatten()
        {
            ensure!(path.exists(), "{} does not exist", path.display());
        }
        Ok(())
    }
}

pub fn parse_rank(text: &str) -> anyhow::Result<RankChoice> {
    if text.eq_ignore_ascii_case("auto") {
        return Ok(RankChoice::Auto);
    }
    let r: usize = text.parse().map_err(|_| {
        anyhow::anyhow!("rank must be \"auto\" or a positive integer, got {text:?}")
    })?;
    ensure!(r > 0, "rank must be positive");
    Ok(RankChoice::Fixed(r))
}

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRecord {
    pub schema_version: u32,
    pub algorithm: String,
    pub efs: usize,
    pub k: usize,
    pub rank: Option<usize>,
    pub queries: usize,
    pub recall: f64,
    /// Per-query means.
    pub exact_calls: f64,
    pub approx_calls: f64,
    pub effective_calls: f64,
    /// Mean `|t - t̂| / |t|` on held-out residual pairs (ablation rows).
    pub approx_error: Option<f64>,
    pub workers: usize,
    pub throughput_qps: f64,
    pub elapsed_s: f64,
}

pub const CSV_HEADER: [&str; 14] = [
    "schema_version",
    "algorithm",
    "efs",
    "k",
    "rank",
    "queries",
    "recall",
    "exact_calls",
    "approx_calls",
    "effective_calls",
    "approx_error",
    "workers",
    "throughput_qps",
    "elapsed_s",
];

impl BenchRecord {
    /// The row without wall-clock columns, for run-to-run comparison.
    pub fn deterministic_part(&self) -> BenchRecord {
        BenchRecord {
            throughput_qps: 0.0,
            elapsed_s: 0.0,
            ..self.clone()
        }
    }
}

pub fn write_records<W: Write>(out: W, records: &[BenchRecord]) -> anyhow::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses records, rejecting any header other than the current schema.
pub fn read_records<R: Read>(input: R) -> anyhow::Result<Vec<BenchRecord>> {
    let mut rdr = csv::Reader::from_reader(input);
    let header = rdr.headers()?.clone();
    ensure!(
        header.iter().eq(CSV_HEADER.iter().copied()),
        "unexpected CSV header {:?}, expected {:?}",
        header.iter().collect::<Vec<_>>(),
        CSV_HEADER
    );
    let mut out = Vec::new();
    for row in rdr.deserialize() {
        let rec: BenchRecord = row?;
        ensure!(
            rec.schema_version == SCHEMA_VERSION,
            "schema version {} unsupported",
            rec.schema_version
        );
        out.push(rec);
    }
    Ok(out)
}

/// Per-step exceedance profile of exact greedy search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepProfile {
    pub queries: usize,
    pub efs: usize,
    pub steps: Vec<StepRow>,
    /// Mean exceed fraction over steps 5..=20 (steps with no computations count as 0).
    pub mean_exceed_5_20: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub step: usize,
    /// Searches that reached this step.
    pub computations: u64,
    pub exceeding: u64,
    pub exceed_fraction: Option<f64>,
}

/// Data, graph and index for one benchmark run.
pub struct Workspace {
    pub data: VectorSet,
    pub queries: VectorSet,
    pub truth: GroundTruth,
    pub graph: SearchGraph,
    pub index: FingerIndex,
    /// Present when the index was trained in this run.
    pub report: Option<TrainReport>,
}

impl Workspace {
    /// Loads inputs named by `config`, building the graph, training the index
    /// and computing ground truth where files are not given.
    pub fn prepare(config: &BenchConfig) -> anyhow::Result<Self> {
        config.validate()?;
        let metric = config.metric()?;
        let base = config.base.as_ref().context("no base vectors given")?;
        let data = vecs::load_fvecs(base, metric)
            .with_context(|| format!("loading {}", base.display()))?;
        let qpath = config.queries.as_ref().context("no query vectors given")?;
        let queries = vecs::load_fvecs(qpath, metric)
            .with_context(|| format!("loading {}", qpath.display()))?;
        ensure!(
            queries.dim() == data.dim(),
            "query dim {} vs base dim {}",
            queries.dim(),
            data.dim()
        );
        let graph = match &config.graph {
            Some(p) => {
                graph_file::load_graph(p).with_context(|| format!("loading {}", p.display()))?
            }
            None => build_graph(&data, &config.graph_params())?,
        };
        let (index, report) = match &config.index {
            Some(p) => (
                index_file::load_index(p, &graph)
                    .with_context(|| format!("loading {}", p.display()))?,
                None,
            ),
            None => {
                let (index, report) =
                    train_finger_with_report(&graph, &data, &config.finger_config()?)?;
                (index, Some(report))
            }
        };
        let truth = match &config.ground_truth {
            Some(p) => {
                vecs::load_ground_truth(p).with_context(|| format!("loading {}", p.display()))?
            }
            None => {
                let work = data.len() as u128 * queries.len() as u128;
                ensure!(
                    work <= MAX_IMPLICIT_GT_WORK,
                    "no ground truth given and {work} distance evaluations exceed the implicit limit; run `finger gt`"
                );
                eprintln!("warning: no ground truth given, computing it by brute force");
                parallel_ground_truth(&data, &queries, config.k, config.worker_count())?
            }
        };
        Self::from_parts(data, queries, truth, graph, index, report, config.k)
    }

    pub fn from_parts(
        data: VectorSet,
        queries: VectorSet,
        truth: GroundTruth,
        graph: SearchGraph,
        index: FingerIndex,
        report: Option<TrainReport>,
        k: usize,
    ) -> anyhow::Result<Self> {
        ensure!(
            truth.len() == queries.len(),
            "ground truth has {} rows for {} queries",
            truth.len(),
            queries.len()
        );
        ensure!(
            truth.k() >= k,
            "ground truth holds {} neighbors, need k={k}",
            truth.k()
        );
        ensure!(
            index.metric() == data.metric(),
            "index metric {} vs data metric {}",
            index.metric(),
            data.metric()
        );
        Ok(Self {
            data,
            queries,
            truth,
            graph,
            index,
            report,
        })
    }
}

#[allow(clippy::too_many_arguments)]
fn record(
    algorithm: &str,
    efs: usize,
    k: usize,
    rank: Option<usize>,
    dim: usize,
    run: &BatchOutput,
    best_elapsed: f64,
    truth: &GroundTruth,
    workers: usize,
) -> BenchRecord {
    let q = run.results.len() as f64;
    BenchRecord {
        schema_version: SCHEMA_VERSION,
        algorithm: algorithm.into(),
        efs,
        k,
        rank,
        queries: run.results.len(),
        recall: run.recall(truth, k),
        exact_calls: run.stats.exact_calls as f64 / q,
        approx_calls: run.stats.approx_calls as f64 / q,
        effective_calls: run.stats.effective_calls(rank, dim) / q,
        approx_error: None,
        workers,
        throughput_qps: q / best_elapsed.max(f64::MIN_POSITIVE),
        elapsed_s: best_elapsed,
    }
}

/// Runs `repeats` times; returns the first run and the best elapsed seconds.
fn best_of(
    ws: &Workspace,
    params: &SearchParams,
    method: Method<'_>,
    repeats: usize,
    workers: usize,
) -> anyhow::Result<(BatchOutput, f64)> {
    let first = batch_search(&ws.graph, &ws.data, &ws.queries, params, method, workers)?;
    let mut best = first.elapsed.as_secs_f64();
    for _ in 1..repeats {
        let again = batch_search(&ws.graph, &ws.data, &ws.queries, params, method, workers)?;
        best = best.min(again.elapsed.as_secs_f64());
    }
    Ok((first, best))
}

/// Random-hyperplane baseline at `rank`, trained on the workspace graph.
pub fn train_rplsh(
    ws: &Workspace,
    rank: usize,
    seed: u64,
    pairs_per_node: usize,
    train_seed: u64,
) -> anyhow::Result<FingerIndex> {
    let config = FingerConfig {
        pairs_per_node,
        seed: train_seed,
        ..FingerConfig::rplsh(rank, seed)
    };
    Ok(train_finger_with_report(&ws.graph, &ws.data, &config)?.0)
}

/// Exact greedy, FINGER and the RPLSH baseline at every `efs` in the sweep.
pub fn run_bench(config: &BenchConfig, ws: &Workspace) -> anyhow::Result<Vec<BenchRecord>> {
    let workers = config.worker_count();
    let dim = ws.data.dim();
    let rank = ws.index.rank();
    let rplsh = train_rplsh(
        ws,
        rank,
        config.rplsh_seed,
        config.pairs_per_node,
        config.train_seed,
    )?;
    let options = config.approx_options();
    let mut out = Vec::new();
    for &efs in &config.efs {
        let params = SearchParams::new(efs, config.k)?;
        let runs: [(&str, Method<'_>, Option<usize>); 3] = [
            ("exact-greedy", Method::Exact, None),
            (
                "finger",
                Method::Approx {
                    index: &ws.index,
                    options,
                },
                Some(rank),
            ),
            (
                "rplsh",
                Method::Approx {
                    index: &rplsh,
                    options,
                },
                Some(rank),
            ),
        ];
        for (label, method, r) in runs {
            let (run, best) = best_of(ws, &params, method, config.repeats, workers)?;
            out.push(record(
                label, efs, config.k, r, dim, &run, best, &ws.truth, workers,
            ));
        }
    }
    Ok(out)
}

/// Estimator variants compared by [`run_ablation`].
pub const ABLATION_VARIANTS: [(&str, bool, bool); 4] = [
    // (label, svd basis, matching)
    ("finger", true, true),
    ("finger-no-matching", true, false),
    ("rplsh", false, false),
    ("rplsh+matching", false, true),
];

/// Held-out residual pairs for error measurements.
pub fn evaluation_pairs(ws: &Workspace, config: &BenchConfig) -> anyhow::Result<Vec<ResidualPair>> {
    let train = collect_training_pairs(
        &ws.graph,
        &ws.data,
        config.pairs_per_node,
        config.train_seed,
    )?;
    Ok(sample_residual_pairs(
        &ws.graph,
        &ws.data,
        config.ablation_pairs,
        config.train_seed ^ 0x5eed,
        &train.pairs,
    )?)
}

/// Error, recall and call counts for each estimator variant and rank. The
/// additive correction is used only together with matching.
pub fn run_ablation(config: &BenchConfig, ws: &Workspace) -> anyhow::Result<Vec<BenchRecord>> {
    let workers = config.worker_count();
    let dim = ws.data.dim();
    let pairs = evaluation_pairs(ws, config)?;
    let params = SearchParams::new(config.ablation_efs, config.k)?;
    let mut out = Vec::new();
    for &rank in &config.ablation_ranks {
        ensure!(
            rank > 0 && rank <= dim,
            "ablation rank {rank} must be in 1..={dim}"
        );
        let svd = train_finger_with_report(
            &ws.graph,
            &ws.data,
            &FingerConfig {
                rank: RankChoice::Fixed(rank),
                basis: BasisKind::Svd,
                estimator: AngleEstimator::Projected,
                pairs_per_node: config.pairs_per_node,
                seed: config.train_seed,
            },
        )?
        .0;
        let rplsh = train_rplsh(
            ws,
            rank,
            config.rplsh_seed,
            config.pairs_per_node,
            config.train_seed,
        )?;
        for (label, use_svd, matching) in ABLATION_VARIANTS {
            let index = if use_svd { &svd } else { &rplsh };
            let error = approximation_error(&pairs, |p| {
                index.estimate_residual_cosine(&p.x, &p.y, matching)
            });
            let options = ApproxOptions {
                switch_after: config.switch_after,
                matching,
                epsilon: matching && config.epsilon,
            };
            let (run, best) = best_of(ws, &params, Method::Approx { index, options }, 1, workers)?;
            let mut rec = record(
                label,
                config.ablation_efs,
                config.k,
                Some(rank),
                dim,
                &run,
                best,
                &ws.truth,
                workers,
            );
            rec.approx_error = Some(error);
            out.push(rec);
        }
    }
    Ok(out)
}

/// Exceedance profile of exact greedy search at the first `efs` of the sweep.
pub fn run_stats(config: &BenchConfig, ws: &Workspace) -> anyhow::Result<StepProfile> {
    let efs = config.efs[0];
    let params = SearchParams::new(efs, config.k)?;
    let run = batch_search(
        &ws.graph,
        &ws.data,
        &ws.queries,
        &params,
        Method::Exact,
        config.worker_count(),
    )?;
    Ok(step_profile(&run.stats.steps, ws.queries.len(), efs))
}

pub fn step_profile(steps: &[finger_core::StepStats], queries: usize, efs: usize) -> StepProfile {
    let rows: Vec<StepRow> = steps
        .iter()
        .enumerate()
        .map(|(step, s)| StepRow {
            step,
            computations: s.computations,
            exceeding: s.exceeding,
            exceed_fraction: (s.computations > 0)
                .then(|| s.exceeding as f64 / s.computations as f64),
        })
        .collect();
    let window: f64 = (5..=20)
        .map(|i| rows.get(i).and_then(|r| r.exceed_fraction).unwrap_or(0.0))
        .sum();
    StepProfile {
        queries,
        efs,
        steps: rows,
        mean_exceed_5_20: window / 16.0,
    }
}

/// Writes CSV records to `path`, or stdout when absent.
pub fn emit_records(path: Option<&Path>, records: &[BenchRecord]) -> anyhow::Result<()> {
    match path {
        Some(p) => {
            let f =
                std::fs::File::create(p).with_context(|| format!("creating {}", p.display()))?;
            write_records(f, records)
        }
        None => write_records(std::io::stdout().lock(), records),
    }
}

/// Times graph construction.
pub fn timed_build(data: &VectorSet, params: &GraphParams) -> anyhow::Result<(SearchGraph, f64)> {
    let start = Instant::now();
    let graph = build_graph(data, params)?;
    Ok((graph, start.elapsed().as_secs_f64()))
}
