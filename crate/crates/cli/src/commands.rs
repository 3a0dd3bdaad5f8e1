use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use log::{info, warn};
use smf_core::eval::{
    align_to_nodes, classify_file, full_proximity, nystrom_baseline, r_scores, svd_oracle,
    ClassifierConfig, ReconstructionReport,
};
use smf_core::io::{read_embeddings, write_binary, write_word2vec_text, NodeVectors};
use smf_core::landmark::{load_landmarks, save_landmarks, select};
use smf_core::partition::{
    load_partition, partition_interested, partition_louvain, partition_random,
};
use smf_core::{
    load_edge_list, run_pipeline, GraphStore, LandmarkSet, LandmarkStrategy, PartitionPlan,
    PipelineOptions, ProximityOrder, SmfConfig, SmfError,
};

use crate::config::RunConfig;
use crate::{CliError, FormatArg, MetricArg, PartitionArg, RunArgs};

type CliResult<T> = Result<T, CliError>;

struct Prepared {
    graph: GraphStore,
    landmarks: LandmarkSet,
    plan: PartitionPlan,
    landmark_time: Duration,
    partition_time: Duration,
}

fn read_label_lines(path: &Path) -> CliResult<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| SmfError::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect())
}

fn choose_landmarks(g: &GraphStore, cfg: &RunConfig, k: usize) -> CliResult<LandmarkSet> {
    if cfg.landmarks == LandmarkStrategy::External {
        let path = cfg.landmarks_in.as_ref().expect("resolved with a path");
        return Ok(load_landmarks(path, g)?);
    }
    let mut strategy = cfg.landmarks;
    if strategy == LandmarkStrategy::Gds
        && cfg.smf.proximity.order == ProximityOrder::First
        && k != cfg.smf.d
    {
        warn!("GDS is meant for second-order proximity or k = d; using DD instead");
        strategy = LandmarkStrategy::Dd;
    }
    let lms = select(g, strategy, k, cfg.seed)?;
    if lms.k() < k {
        info!("{strategy} stopped at {} landmark(s), fewer than k = {k}", lms.k());
    }
    Ok(lms)
}

fn make_plan(g: &GraphStore, cfg: &RunConfig, lms: &LandmarkSet) -> CliResult<PartitionPlan> {
    let excluded = &lms.nodes;
    let plan = match cfg.partition {
        PartitionArg::Louvain => partition_louvain(g, excluded, cfg.seed, cfg.max_set_size)?,
        PartitionArg::Random => {
            let candidates = g.node_count() - excluded.len();
            let s = cfg.sets.unwrap_or_else(|| candidates.div_ceil(cfg.max_set_size).max(1));
            partition_random(g, excluded, s, cfg.seed)?
        }
        PartitionArg::Io => {
            let path = cfg.requested.as_ref().expect("resolved with a path");
            let labels = read_label_lines(path)?;
            let ids = g.resolve_labels(labels.iter().map(String::as_str))?;
            partition_interested(g, excluded, &ids, cfg.max_set_size)?
        }
        PartitionArg::External => {
            let path = cfg.partition_file.as_ref().expect("resolved with a path");
            load_partition(path, g, excluded)?
        }
    };
    if plan.dropped > 0 {
        warn!("{} landmark node(s) dropped from the partition", plan.dropped);
    }
    Ok(plan)
}

fn prepare(cfg: &RunConfig) -> CliResult<Prepared> {
    let graph = load_edge_list(&cfg.input, cfg.directed)?;
    info!(
        "loaded {} node(s), {} edge(s) from {}",
        graph.node_count(),
        graph.edge_count(),
        cfg.input.display()
    );
    let start = Instant::now();
    let landmarks = choose_landmarks(&graph, cfg, cfg.smf.k)?;
    let landmark_time = start.elapsed();
    if let Some(path) = &cfg.landmarks_out {
        save_landmarks(path, &graph, &landmarks)?;
    }
    let start = Instant::now();
    let plan = make_plan(&graph, cfg, &landmarks)?;
    let partition_time = start.elapsed();
    Ok(Prepared {
        graph,
        landmarks,
        plan,
        landmark_time,
        partition_time,
    })
}

fn options(cfg: &RunConfig) -> PipelineOptions {
    PipelineOptions {
        workers: cfg.workers,
        best_effort: cfg.best_effort,
    }
}

fn ms(d: Duration) -> String {
    format!("{:.3}", d.as_secs_f64() * 1e3)
}

pub fn embed(
    run: RunArgs,
    output: Option<PathBuf>,
    format: Option<FormatArg>,
    with_context: Option<bool>,
    manifest: Option<PathBuf>,
) -> CliResult<()> {
    let cfg = RunConfig::resolve(&run)?;
    let output = output.unwrap_or_else(|| PathBuf::from("embeddings.txt"));
    let format = format.unwrap_or(FormatArg::Text);
    let with_context = with_context.unwrap_or(false);
    let manifest = manifest.unwrap_or_else(|| {
        let mut p = output.clone().into_os_string();
        p.push(".manifest");
        PathBuf::from(p)
    });

    let prep = prepare(&cfg)?;
    let out = run_pipeline(&prep.graph, &prep.plan, &prep.landmarks, &cfg.smf, &options(&cfg))?;
    let vectors = NodeVectors::from_table(&prep.graph, &out.table, with_context);
    match format {
        FormatArg::Text => write_word2vec_text(&output, &vectors)?,
        FormatArg::Binary => write_binary(&output, &vectors)?,
    }
    info!("wrote {} row(s) to {}", vectors.len(), output.display());

    // record the landmark count actually used (imported or cut short by GDS)
    let mut resolved = cfg.clone();
    resolved.smf.k = prep.landmarks.k();
    let mut text = String::from("# smf run manifest; reusable as --config\n");
    text.push_str(&resolved.to_config_text());
    let _ = writeln!(text, "output = {}", output.display());
    let format_name = match format {
        FormatArg::Text => "text",
        FormatArg::Binary => "binary",
    };
    let _ = writeln!(text, "format = {format_name}");
    let _ = writeln!(text, "with_context = {with_context}");
    let _ = writeln!(text, "manifest = {}", manifest.display());
    let _ = writeln!(text, "run.version = {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(text, "result.rows = {}", vectors.len());
    let _ = writeln!(text, "result.dim = {}", vectors.dim());
    let _ = writeln!(text, "result.landmarks = {}", prep.landmarks.k());
    let _ = writeln!(text, "result.sets = {}", prep.plan.set_count());
    let _ = writeln!(text, "result.null_landmark_dims = {}", out.landmarks.null_count);
    let preparation = prep.landmark_time + prep.partition_time + out.timings.preparation;
    let _ = writeln!(text, "timing.landmark_selection_ms = {}", ms(prep.landmark_time));
    let _ = writeln!(text, "timing.partition_ms = {}", ms(prep.partition_time));
    let _ = writeln!(text, "timing.preparation_ms = {}", ms(preparation));
    let _ = writeln!(text, "timing.optimization_ms = {}", ms(out.timings.optimization));
    for s in &out.sections {
        let _ = writeln!(text, "section.{}.size = {}", s.index, s.size);
        let _ = writeln!(text, "section.{}.iterations = {}", s.index, s.iterations);
        let _ = writeln!(text, "section.{}.loss = {:e}", s.index, s.loss.total);
        let _ = writeln!(text, "section.{}.elapsed_ms = {}", s.index, ms(s.elapsed));
        if let Some(e) = &s.error {
            let _ = writeln!(text, "section.{}.error = {e}", s.index);
        }
    }
    fs::write(&manifest, text).map_err(|e| SmfError::Io {
        path: manifest.clone(),
        source: e,
    })?;
    Ok(())
}

fn dataset_name(explicit: Option<String>, path: &Path) -> String {
    explicit.unwrap_or_else(|| {
        path.file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default()
    })
}

fn emit_csv(rows: &[String], output: Option<&Path>) -> CliResult<()> {
    let mut text = String::from("dataset,method,k,d,metric,value\n");
    for r in rows {
        text.push_str(r);
        text.push('\n');
    }
    match output {
        Some(p) => fs::write(p, text).map_err(|e| SmfError::Io {
            path: p.to_path_buf(),
            source: e,
        })?,
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| SmfError::Io {
                path: "<stdout>".into(),
                source: e,
            })?,
    }
    Ok(())
}

pub fn eval_reconstruct(
    run: RunArgs,
    k_sweep: Vec<usize>,
    metric: Option<MetricArg>,
    dataset: Option<String>,
    output: Option<PathBuf>,
) -> CliResult<()> {
    if k_sweep.is_empty() {
        return Err(CliError::Usage("--k-sweep needs at least one value".into()));
    }
    let cfg = RunConfig::resolve(&run)?;
    if !matches!(cfg.partition, PartitionArg::Louvain | PartitionArg::Random) {
        return Err(CliError::Usage(
            "reconstruction needs a covering partition (louvain or random)".into(),
        ));
    }
    if cfg.landmarks == LandmarkStrategy::External {
        return Err(CliError::Usage("a k sweep cannot use --landmarks-in".into()));
    }
    type Metric = (&'static str, fn(&ReconstructionReport) -> f64);
    let metrics: &[Metric] = match metric.unwrap_or(MetricArg::RAll) {
        MetricArg::RAll => &[("r_all", |r| r.r_all)],
        MetricArg::RNz => &[("r_nz", |r| r.r_nz)],
        MetricArg::Both => &[("r_all", |r| r.r_all), ("r_nz", |r| r.r_nz)],
    };
    let dataset = dataset_name(dataset, &cfg.input);
    let d = cfg.smf.d;

    let graph = load_edge_list(&cfg.input, cfg.directed)?;
    let m = full_proximity(&graph, cfg.smf.proximity)?;
    let oracle = svd_oracle(&m, d)?;
    let mut rows = Vec::new();
    for &k in &k_sweep {
        let lms = choose_landmarks(&graph, &cfg, k)?;
        let per_k = RunConfig {
            max_set_size: run.max_set_size.unwrap_or(10 * k),
            ..cfg.clone()
        };
        let plan = make_plan(&graph, &per_k, &lms)?;
        let smf = SmfConfig { k: lms.k(), ..cfg.smf };
        let out = run_pipeline(&graph, &plan, &lms, &smf, &options(&cfg))?;
        let (w, c) = align_to_nodes(&out.table, graph.node_count());
        let smf = r_scores(&m, &w, &c)?;
        let nystrom = nystrom_baseline(&m, &lms.nodes, d)?;
        info!("k = {k}: SMF r_all {:.4}, Nyström r_all {:.4}", smf.r_all, nystrom.r_all);
        for (name, get) in metrics {
            for (method, rep) in [("smf", &smf), ("nystrom", &nystrom), ("svd", &oracle)] {
                rows.push(format!("{dataset},{method},{k},{d},{name},{:.6}", get(rep)));
            }
        }
    }
    emit_csv(&rows, output.as_deref())
}

pub struct ClassifyRequest {
    pub embeddings: PathBuf,
    pub labels: PathBuf,
    pub fractions: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    pub dataset: Option<String>,
    pub method: String,
    pub k: Option<usize>,
    pub output: Option<PathBuf>,
}

pub fn classify(req: ClassifyRequest) -> CliResult<()> {
    if req.fractions.is_empty() {
        return Err(CliError::Usage("--fractions needs at least one value".into()));
    }
    if let Some(f) = req.fractions.iter().find(|f| !(**f > 0.0 && **f < 1.0)) {
        return Err(CliError::Usage(format!("train fraction {f} is outside (0, 1)")));
    }
    if req.runs == 0 {
        return Err(CliError::Usage("--runs must be ≥ 1".into()));
    }
    let vectors = read_embeddings(&req.embeddings)?;
    let dataset = dataset_name(req.dataset, &req.embeddings);
    let cfg = ClassifierConfig {
        runs: req.runs,
        ..ClassifierConfig::default()
    };
    let k = req.k.map(|k| k.to_string()).unwrap_or_default();
    let mut rows = Vec::new();
    for &frac in &req.fractions {
        let rep = classify_file(&vectors, &req.labels, frac, req.seed, &cfg)?;
        info!("train fraction {frac}: micro-F1 {:.4}", rep.micro_f1);
        rows.push(format!(
            "{dataset},{},{k},{},micro_f1@{frac},{:.6}",
            req.method,
            vectors.dim(),
            rep.micro_f1
        ));
    }
    emit_csv(&rows, req.output.as_deref())
}
