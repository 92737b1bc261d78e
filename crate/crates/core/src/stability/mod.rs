//! Stable-neuron identification.
//!
//! [`run_isa`] is the main entry point. [`run_baseline`] computes exact
//! per-neuron ranges with two MILPs each and [`brute_force_oracle`]
//! enumerates activation patterns; both exist to cross-check ISA.

mod baseline;
mod encoding;
mod isa;
mod oracle;
mod report;
mod sets;

pub use baseline::{run_baseline, BaselineResult, NeuronRange};
pub use encoding::{build_stability_milp, NeuronVars, StabilityMilp};
pub use isa::{run_isa, IncumbentEvent, IsaConfig, IsaMode, IsaResult};
pub use oracle::{brute_force_oracle, OracleResult, ORACLE_MAX_NEURONS};
pub use report::{StabilityReport, REPORT_SCHEMA};
pub use sets::{preprocess, preprocess_with_witnesses, StabilitySets, Witnesses};
