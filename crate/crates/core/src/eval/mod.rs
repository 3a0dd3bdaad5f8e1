//! Quality metrics: reconstruction scores with their baselines, and node
//! classification.

mod classify;
mod reconstruct;

pub use classify::{
    classify, classify_file, micro_f1, stratified_split, ClassificationReport, ClassifierConfig,
    ClassifierKind, LabeledSplit,
};
pub use reconstruct::{
    align_to_nodes, full_proximity, nystrom_baseline, nystrom_factors, r_scores, svd_oracle,
    svd_oracle_factors, ReconstructionReport, DENSE_GUARD,
};
