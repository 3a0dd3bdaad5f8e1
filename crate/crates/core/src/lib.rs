//! Landmark-anchored separable matrix factorization for network embedding.
//!
//! A graph is split into a small landmark set and many disjoint node sets.
//! Landmarks are embedded once by a truncated SVD of their proximity block;
//! every other set is then solved independently against the landmark
//! factors, so sets can run concurrently and only touch their own
//! neighbourhood of the proximity matrix.

pub mod error;
pub mod eval;
pub mod graph;
pub mod io;
pub mod landmark;
pub mod partition;
pub mod proximity;
pub mod smf;

pub use error::{Result, SmfError};
pub use graph::{load_edge_list, DegreeMode, GraphStore, NodeId};
pub use landmark::{LandmarkSet, LandmarkStrategy};
pub use partition::{PartitionMode, PartitionPlan};
pub use proximity::{ProximityConfig, ProximityOrder, SparseBlock};
pub use smf::{run_pipeline, EmbeddingTable, PipelineOptions, PipelineOutput, SmfConfig};
