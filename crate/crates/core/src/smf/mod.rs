//! Separated matrix factorization: landmark SVD, per-set solver and the
//! end-to-end pipeline.

mod factor;
mod pipeline;
mod solver;

pub use factor::{embed_dense, embed_landmarks, LandmarkEmbedding};
pub(crate) use factor::sorted_svd;
pub use pipeline::{
    run_pipeline, EmbeddingTable, PipelineOptions, PipelineOutput, SectionReport, StageTimings,
};
pub use solver::{evaluate_loss, solve_set, LossBreakdown, SetProblem, SetSolution, SmfConfig};
