use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};

use super::lp::{solve_with_bounds, LinearProgram, LpStatus};

/// A value within this distance of an integer counts as integral.
pub const INT_TOL: f64 = 1e-6;
/// Absolute optimality gap for pruning and the optimality proof.
pub const GAP_TOL: f64 = 1e-6;
/// Scaled feasibility tolerance for externally supplied incumbent candidates.
pub const CANDIDATE_TOL: f64 = 1e-6;

/// A maximization LP whose listed variables are binary.
#[derive(Debug, Clone, PartialEq)]
pub struct MilpModel {
    lp: LinearProgram,
    binaries: Vec<usize>,
}

impl MilpModel {
    pub fn new(lp: LinearProgram, mut binaries: Vec<usize>) -> Result<Self> {
        lp.validate()?;
        binaries.sort_unstable();
        binaries.dedup();
        for &j in &binaries {
            match lp.var_bounds().get(j) {
                None => {
                    return Err(Error::InvalidModel(format!(
                        "binary variable {j} out of range"
                    )))
                }
                Some(&(lb, ub)) if lb < 0.0 || ub > 1.0 => {
                    return Err(Error::InvalidModel(format!(
                        "binary variable {j} has bounds [{lb}, {ub}]"
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(MilpModel { lp, binaries })
    }

    pub fn lp(&self) -> &LinearProgram {
        &self.lp
    }

    pub fn binaries(&self) -> &[usize] {
        &self.binaries
    }

    pub fn is_integral(&self, values: &[f64]) -> bool {
        self.binaries
            .iter()
            .all(|&j| (values[j] - values[j].round()).abs() <= INT_TOL)
    }

    pub fn to_lp_format(&self, name: &dyn Fn(usize) -> String) -> String {
        self.lp.to_lp_format(&self.binaries, name)
    }
}

/// Hooks invoked on the search thread.
pub trait SearchCallbacks {
    /// Inspects an integral solution before it is accepted. Returned variables
    /// are fixed to zero for the rest of the search; zeroing them must keep
    /// the solution feasible.
    fn on_incumbent(&mut self, _values: &[f64]) -> Vec<usize> {
        Vec::new()
    }

    /// Receives each fractional node relaxation; may return a full candidate
    /// assignment to try as an incumbent.
    fn on_relaxation(&mut self, _values: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

pub struct NoCallbacks;

impl SearchCallbacks for NoCallbacks {}

#[derive(Debug, Clone, Default)]
pub struct SearchLimits {
    pub time: Option<Duration>,
    pub nodes: Option<u64>,
    /// Nodes whose relaxation bound is at most this value are pruned.
    pub objective_cutoff: Option<f64>,
    /// Keep a per-node log of branching fixes and relaxation values.
    pub record_nodes: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    ProvedOptimal,
    Infeasible,
    /// No solution with objective above the cutoff exists.
    BelowCutoff,
    /// A time or node limit ended the search.
    Stopped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeRecord {
    pub branch_fixes: Vec<(usize, f64)>,
    /// Relaxation value of each solve at this node (re-solves follow new lazy fixes).
    pub lp_objectives: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub status: SearchStatus,
    /// Best incumbent objective under all accumulated fixes; `-inf` if none.
    pub best_objective: f64,
    /// Upper bound on the optimum at termination.
    pub best_bound: f64,
    pub best_solution: Option<Vec<f64>>,
    pub incumbents_found: u64,
    pub nodes_explored: u64,
    pub lp_solves: u64,
    pub rejected_candidates: u64,
    /// Variables fixed to zero by `on_incumbent`, in fixing order.
    pub fixed_vars: Vec<usize>,
    pub node_log: Vec<NodeRecord>,
    pub wall_time: Duration,
}

#[derive(Debug)]
struct Node {
    bound: f64,
    depth: u32,
    seq: u64,
    fixes: Vec<(usize, f64)>,
}

// Best bound first; equal bounds favour the deeper, then the newer node.
impl Ord for Node {
    fn cmp(&self, other: &Self) -> Ordering {
        self.bound
            .total_cmp(&other.bound)
            .then(self.depth.cmp(&other.depth))
            .then(self.seq.cmp(&other.seq))
    }
}

impl PartialOrd for Node {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Node {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Node {}

struct Search<'a> {
    model: &'a MilpModel,
    limits: &'a SearchLimits,
    fixed: Vec<bool>,
    fixed_order: Vec<usize>,
    best: Option<Vec<f64>>,
    best_obj: f64,
    incumbents: u64,
    nodes: u64,
    lp_solves: u64,
    rejected: u64,
    cutoff_pruned: bool,
    seq: u64,
    open: BinaryHeap<Node>,
    log: Vec<NodeRecord>,
}

/// Branch-and-bound over LP relaxations with lazy zero-fixing callbacks.
///
/// Branches on the most fractional binary (smallest index on ties) and
/// explores nodes best-bound first. Every integral point, whether found as a
/// node relaxation or returned by `on_relaxation`, passes through
/// `on_incumbent`; the variables it returns are fixed to zero in every open
/// and future node, the current incumbent is re-scored with them zeroed, and
/// the node that produced the point is re-solved.
pub fn solve_milp(
    model: &MilpModel,
    callbacks: &mut dyn SearchCallbacks,
    limits: &SearchLimits,
) -> Result<SearchResult> {
    let start = Instant::now();
    let mut search = Search {
        model,
        limits,
        fixed: vec![false; model.lp.num_vars()],
        fixed_order: Vec::new(),
        best: None,
        best_obj: f64::NEG_INFINITY,
        incumbents: 0,
        nodes: 0,
        lp_solves: 0,
        rejected: 0,
        cutoff_pruned: false,
        seq: 0,
        open: BinaryHeap::new(),
        log: Vec::new(),
    };
    search.push(f64::INFINITY, 0, Vec::new());

    let mut stopped = false;
    while let Some(top) = search.open.peek() {
        if top.bound <= search.best_obj + GAP_TOL {
            search.open.clear();
            break;
        }
        let out_of_nodes = limits.nodes.is_some_and(|n| search.nodes >= n);
        let out_of_time = limits.time.is_some_and(|t| start.elapsed() >= t);
        if out_of_nodes || out_of_time {
            stopped = true;
            break;
        }
        let node = search.open.pop().expect("peeked");
        search.nodes += 1;
        search.process(node, callbacks)?;
    }

    let open_bound = search
        .open
        .iter()
        .map(|n| n.bound)
        .fold(f64::NEG_INFINITY, f64::max);
    let status = if stopped {
        SearchStatus::Stopped
    } else if search.best.is_some() {
        SearchStatus::ProvedOptimal
    } else if search.cutoff_pruned {
        SearchStatus::BelowCutoff
    } else {
        SearchStatus::Infeasible
    };
    let best_bound = if stopped {
        open_bound.max(search.best_obj)
    } else {
        search.best_obj
    };
    Ok(SearchResult {
        status,
        best_objective: search.best_obj,
        best_bound,
        best_solution: search.best,
        incumbents_found: search.incumbents,
        nodes_explored: search.nodes,
        lp_solves: search.lp_solves,
        rejected_candidates: search.rejected,
        fixed_vars: search.fixed_order,
        node_log: search.log,
        wall_time: start.elapsed(),
    })
}

impl Search<'_> {
    fn push(&mut self, bound: f64, depth: u32, fixes: Vec<(usize, f64)>) {
        self.seq += 1;
        self.open.push(Node {
            bound,
            depth,
            seq: self.seq,
            fixes,
        });
    }

    fn global_bounds(&self) -> Vec<(f64, f64)> {
        self.model
            .lp
            .var_bounds()
            .iter()
            .zip(&self.fixed)
            .map(|(b, f)| if *f { (0.0, 0.0) } else { *b })
            .collect()
    }

    fn process(&mut self, node: Node, callbacks: &mut dyn SearchCallbacks) -> Result<()> {
        let mut record = self.limits.record_nodes.then(|| NodeRecord {
            branch_fixes: node.fixes.clone(),
            lp_objectives: Vec::new(),
        });
        let outcome = self.solve_node(&node, callbacks, &mut record);
        if let Some(r) = record {
            self.log.push(r);
        }
        outcome
    }

    fn solve_node(
        &mut self,
        node: &Node,
        callbacks: &mut dyn SearchCallbacks,
        record: &mut Option<NodeRecord>,
    ) -> Result<()> {
        loop {
            // A branch on a variable since fixed to 0 leaves nothing in this subtree.
            if node.fixes.iter().any(|&(j, v)| self.fixed[j] && v != 0.0) {
                return Ok(());
            }
            let mut bounds = self.global_bounds();
            for &(j, v) in &node.fixes {
                bounds[j] = (v, v);
            }
            let relax = solve_with_bounds(&self.model.lp, &bounds)?;
            self.lp_solves += 1;
            match relax.status {
                LpStatus::Infeasible => return Ok(()),
                LpStatus::Unbounded => {
                    return Err(Error::InvalidModel("LP relaxation is unbounded".into()))
                }
                LpStatus::Optimal => {}
            }
            if let Some(r) = record.as_mut() {
                r.lp_objectives.push(relax.objective);
            }
            if relax.objective <= self.best_obj + GAP_TOL {
                return Ok(());
            }
            if let Some(cutoff) = self.limits.objective_cutoff {
                if relax.objective <= cutoff {
                    self.cutoff_pruned = true;
                    return Ok(());
                }
            }
            match self.branching_var(&relax.values) {
                None => {
                    if self.offer(relax.values, true, callbacks)? > 0 {
                        continue;
                    }
                    return Ok(());
                }
                Some(j) => {
                    if let Some(candidate) = callbacks.on_relaxation(&relax.values) {
                        if self.offer(candidate, false, callbacks)? > 0 {
                            continue;
                        }
                        if relax.objective <= self.best_obj + GAP_TOL {
                            return Ok(());
                        }
                    }
                    let depth = node.depth + 1;
                    let mut down = node.fixes.clone();
                    down.push((j, 0.0));
                    let mut up = node.fixes.clone();
                    up.push((j, 1.0));
                    self.push(relax.objective, depth, down);
                    self.push(relax.objective, depth, up);
                    return Ok(());
                }
            }
        }
    }

    fn branching_var(&self, values: &[f64]) -> Option<usize> {
        let mut pick = None;
        let mut best_dist = INT_TOL;
        for &j in &self.model.binaries {
            let frac = values[j] - values[j].floor();
            let dist = frac.min(1.0 - frac);
            if dist > best_dist {
                best_dist = dist;
                pick = Some(j);
            }
        }
        pick
    }

    /// Runs a candidate through `on_incumbent`; returns the number of new fixes.
    fn offer(
        &mut self,
        mut candidate: Vec<f64>,
        from_relaxation: bool,
        callbacks: &mut dyn SearchCallbacks,
    ) -> Result<usize> {
        if !from_relaxation {
            let valid = candidate.len() == self.model.lp.num_vars()
                && candidate.iter().all(|v| v.is_finite())
                && self.model.is_integral(&candidate)
                && self
                    .model
                    .lp
                    .max_violation_with(&self.global_bounds(), &candidate)
                    <= CANDIDATE_TOL;
            if !valid {
                self.rejected += 1;
                return Ok(0);
            }
        }
        let fixes = callbacks.on_incumbent(&candidate);
        let mut new = 0;
        for j in fixes {
            let Some(&(lb, ub)) = self.model.lp.var_bounds().get(j) else {
                return Err(Error::InvalidModel(format!(
                    "lazy fix of unknown variable {j}"
                )));
            };
            if lb > 0.0 || ub < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "lazy fix of variable {j} to 0 outside [{lb}, {ub}]"
                )));
            }
            if !self.fixed[j] {
                self.fixed[j] = true;
                self.fixed_order.push(j);
                new += 1;
            }
        }
        self.incumbents += 1;
        for (v, f) in candidate.iter_mut().zip(&self.fixed) {
            if *f {
                *v = 0.0;
            }
        }
        if new > 0 {
            if let Some(best) = self.best.as_mut() {
                for (v, f) in best.iter_mut().zip(&self.fixed) {
                    if *f {
                        *v = 0.0;
                    }
                }
                self.best_obj = self.model.lp.objective_value(best);
            }
        }
        let obj = self.model.lp.objective_value(&candidate);
        if obj > self.best_obj {
            self.best_obj = obj;
            self.best = Some(candidate);
        }
        Ok(new)
    }
}
