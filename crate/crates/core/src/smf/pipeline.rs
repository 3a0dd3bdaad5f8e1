use std::time::{Duration, Instant};

use log::{info, warn};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Result, SmfError};
use crate::graph::{GraphStore, NodeId};
use crate::landmark::LandmarkSet;
use crate::partition::PartitionPlan;
use crate::proximity::{LandmarkProximity, ProximityBlockSet};
use crate::smf::{embed_landmarks, solve_set, LandmarkEmbedding, LossBreakdown, SmfConfig};

#[derive(Clone, Copy, Debug, Default)]
pub struct PipelineOptions {
    /// Upper bound on concurrently running sections; 0 means one per core.
    pub workers: usize,
    /// Log and skip failing sections instead of aborting the run.
    pub best_effort: bool,
}

/// Embeddings of every embedded node: landmarks first, then sets in plan order.
#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    pub nodes: Vec<NodeId>,
    /// W (d × rows)
    pub w: DMatrix<f64>,
    /// C (d × rows)
    pub c: DMatrix<f64>,
}

impl EmbeddingTable {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.w.nrows()
    }
}

#[derive(Clone, Debug)]
pub struct SectionReport {
    pub index: usize,
    pub size: usize,
    pub iterations: usize,
    pub loss: LossBreakdown,
    pub elapsed: Duration,
    pub error: Option<String>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct StageTimings {
    /// Landmark proximity rows/columns plus the SVD of M₀₀.
    pub preparation: Duration,
    /// All sections (block construction and solving).
    pub optimization: Duration,
}

#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub table: EmbeddingTable,
    pub landmarks: LandmarkEmbedding,
    pub sections: Vec<SectionReport>,
    pub timings: StageTimings,
}

struct SectionOutcome {
    report: SectionReport,
    w: Option<DMatrix<f64>>,
    c: Option<DMatrix<f64>>,
}

fn run_section(
    g: &GraphStore,
    lp: &LandmarkProximity,
    lm: &LandmarkEmbedding,
    cfg: &SmfConfig,
    index: usize,
    set: &[NodeId],
) -> Result<SectionOutcome> {
    let start = Instant::now();
    let blocks = ProximityBlockSet::build(g, lp, set)?;
    let sol = solve_set(&blocks, lm, cfg)?;
    Ok(SectionOutcome {
        report: SectionReport {
            index,
            size: set.len(),
            iterations: sol.iterations(),
            loss: sol.components,
            elapsed: start.elapsed(),
            error: None,
        },
        w: Some(sol.w_mat),
        c: Some(sol.c_mat),
    })
}

/// Embeds the landmarks, then every set of `plan` independently.
pub fn run_pipeline(
    g: &GraphStore,
    plan: &PartitionPlan,
    lms: &LandmarkSet,
    cfg: &SmfConfig,
    opts: &PipelineOptions,
) -> Result<PipelineOutput> {
    let k = lms.k();
    let cfg = SmfConfig { k, ..*cfg };
    cfg.validate()?;
    plan.validate(g.node_count(), &lms.nodes)?;

    let prep_start = Instant::now();
    let lp = LandmarkProximity::new(g, cfg.proximity, &lms.nodes)?;
    let lm = embed_landmarks(&lp.core_block(), cfg.d)?;
    let preparation = prep_start.elapsed();

    let opt_start = Instant::now();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| SmfError::InvalidArgument(format!("thread pool: {e}")))?;
    let outcomes: Vec<Result<SectionOutcome>> = pool.install(|| {
        plan.sets
            .par_iter()
            .enumerate()
            .map(|(i, set)| run_section(g, &lp, &lm, &cfg, i, set))
            .collect()
    });
    let optimization = opt_start.elapsed();

    let mut sections = Vec::with_capacity(outcomes.len());
    let mut nodes: Vec<NodeId> = lms.nodes.clone();
    let mut w_blocks = vec![lm.phi.clone()];
    let mut c_blocks = vec![lm.psi.clone()];
    for (i, outcome) in outcomes.into_iter().enumerate() {
        let outcome = match outcome {
            Ok(o) => o,
            Err(e) if opts.best_effort => {
                warn!("section {i} failed, skipping its {} node(s): {e}", plan.sets[i].len());
                SectionOutcome {
                    report: SectionReport {
                        index: i,
                        size: plan.sets[i].len(),
                        iterations: 0,
                        loss: LossBreakdown::default(),
                        elapsed: Duration::ZERO,
                        error: Some(e.to_string()),
                    },
                    w: None,
                    c: None,
                }
            }
            Err(e) => {
                return Err(SmfError::Section {
                    section: i,
                    source: Box::new(e),
                })
            }
        };
        if let (Some(w), Some(c)) = (outcome.w, outcome.c) {
            nodes.extend_from_slice(&plan.sets[i]);
            w_blocks.push(w);
            c_blocks.push(c);
        }
        sections.push(outcome.report);
    }
    info!(
        "embedded {} node(s) in {} section(s); preparation {:.3?}, optimization {:.3?}",
        nodes.len(),
        sections.len(),
        preparation,
        optimization
    );
    let table = EmbeddingTable {
        nodes,
        w: hconcat(cfg.d, &w_blocks),
        c: hconcat(cfg.d, &c_blocks),
    };
    Ok(PipelineOutput {
        table,
        landmarks: lm,
        sections,
        timings: StageTimings {
            preparation,
            optimization,
        },
    })
}

fn hconcat(rows: usize, blocks: &[DMatrix<f64>]) -> DMatrix<f64> {
    let cols = blocks.iter().map(DMatrix::ncols).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut at = 0;
    for b in blocks {
        out.columns_mut(at, b.ncols()).copy_from(b);
        at += b.ncols();
    }
    out
}
