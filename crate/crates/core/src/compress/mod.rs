//! Exact compression from certified stable sets.
//!
//! Hidden layers are visited in order. A fully inactive layer collapses the
//! network to a constant and ends the pass; a fully stable layer is folded
//! into its successor; otherwise dependent active neurons are merged and
//! inactive ones removed.

mod leo;
mod magnitude;
mod ops;
mod verify;

pub use leo::{compress_with_labels, run_leo, CompressionReport, LayerAction, COMPRESSION_SCHEMA};
pub use magnitude::{
    connections_from_csv, connections_to_csv, magnitude_analysis, Connection, MagnitudeStats,
};
pub use ops::{
    collapse_network, fold_layer, merge_active, plan_merge, remove_inactive, MergePlan, MERGE_TOL,
    RANK_TOL,
};
pub use verify::{verify_equivalence, EquivalenceCheck, MAX_VERTEX_DIM};
