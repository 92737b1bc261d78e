//! Linear programming and branch-and-bound with lazy incumbent callbacks.
//!
//! LP relaxations are solved by the `microlp` simplex implementation behind
//! [`solve_lp`]; every reported optimum is re-checked for feasibility here.
//! The tree search in [`solve_milp`] is self-contained so that callbacks see
//! every relaxation and every integral point, and so that variables fixed by
//! `on_incumbent` stay fixed across the whole tree.

mod lp;
mod milp;

pub use lp::{solve_lp, Constraint, LinearProgram, LpSolution, LpStatus, Relation, FEAS_TOL};
pub use milp::{
    solve_milp, MilpModel, NoCallbacks, NodeRecord, SearchCallbacks, SearchLimits, SearchResult,
    SearchStatus, CANDIDATE_TOL, GAP_TOL, INT_TOL,
};
