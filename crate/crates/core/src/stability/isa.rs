//! Stable-neuron identification with a single lazily-fixed MILP.

use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bounds::{compute_bounds, BoundsTable, StabilityLabels};
use crate::error::{Error, Result};
use crate::netio::{Dataset, InputDomain, Network};
use crate::optcore::{
    solve_milp, SearchCallbacks, SearchLimits, SearchResult, SearchStatus, CANDIDATE_TOL, GAP_TOL,
};

use super::encoding::{build_stability_milp, StabilityMilp};
use super::sets::{preprocess, StabilitySets};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsaMode {
    /// One search; every incumbent shrinks the sets and fixes its counters.
    SingleCall,
    /// Re-solve to optimality after each positive optimum.
    Sequential,
    /// Dataset observation only, no proof.
    PreprocessOnly,
}

impl IsaMode {
    pub fn name(self) -> &'static str {
        match self {
            IsaMode::SingleCall => "single_call",
            IsaMode::Sequential => "sequential",
            IsaMode::PreprocessOnly => "preprocess_only",
        }
    }
}

#[derive(Debug, Clone)]
pub struct IsaConfig {
    pub mode: IsaMode,
    /// Wall-clock budget for the whole run; `None` runs to completion.
    pub time_limit: Option<Duration>,
    /// When false the domain's sum interval is dropped before solving.
    pub use_sum_constraint: bool,
    pub seed: u64,
    /// Random domain points evaluated as extra witnesses before solving.
    pub random_probes: usize,
}

impl Default for IsaConfig {
    fn default() -> Self {
        IsaConfig {
            mode: IsaMode::SingleCall,
            time_limit: None,
            use_sum_constraint: true,
            seed: 0,
            random_probes: 0,
        }
    }
}

/// One accepted incumbent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IncumbentEvent {
    /// Objective of the incumbent before its counters were fixed.
    pub objective: f64,
    /// Unobserved states it revealed.
    pub revealed: usize,
    /// `|P| + |Q|` after accepting it.
    pub remaining: usize,
}

#[derive(Debug, Clone)]
pub struct IsaResult {
    pub mode: IsaMode,
    /// Final `P`: never observed active. Stably inactive when `certified`.
    pub stable_inactive: Vec<BTreeSet<usize>>,
    /// Final `Q`: never observed inactive. Stably active when `certified`.
    pub stable_active: Vec<BTreeSet<usize>>,
    pub certified: bool,
    pub solve_calls: usize,
    pub nodes: u64,
    pub incumbents: u64,
    pub lp_solves: u64,
    pub wall_time: Duration,
    /// Sets right after dataset and probe observation.
    pub preprocessed: StabilitySets,
    pub trace: Vec<IncumbentEvent>,
    /// Incumbents whose counters could not be completed to an integral,
    /// feasible, no-worse assignment from their indicators.
    pub completion_failures: usize,
    pub bounds: BoundsTable,
}

impl IsaResult {
    pub fn sets(&self) -> StabilitySets {
        StabilitySets {
            unseen_active: self.stable_inactive.clone(),
            unseen_inactive: self.stable_active.clone(),
        }
    }

    /// Labels of the final sets, whether or not they are certified.
    pub fn labels(&self) -> StabilityLabels {
        let widths: Vec<usize> = self.bounds.layers().iter().map(Vec::len).collect();
        self.sets().labels(&widths)
    }

    pub fn num_stable(&self) -> usize {
        self.labels()
            .iter()
            .flatten()
            .filter(|s| s.is_some())
            .count()
    }
}

pub fn run_isa(
    net: &Network,
    domain: &InputDomain,
    dataset: &Dataset,
    config: &IsaConfig,
) -> Result<IsaResult> {
    if config.time_limit.is_some_and(|t| t.is_zero()) {
        return Err(Error::Precondition("time limit must be positive".into()));
    }
    let start = Instant::now();
    let domain = if config.use_sum_constraint {
        domain.clone()
    } else {
        domain.box_only()
    };
    let bounds = compute_bounds(net, &domain)?;
    let mut sets = preprocess(net, dataset)?;
    if dataset.is_empty() && config.mode != IsaMode::PreprocessOnly {
        // One observed input leaves each neuron in at most one of the sets.
        sets.observe(&net.activation_pattern(&domain.anchor_point())?);
    }
    if config.random_probes > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        for x in domain.sample(&mut rng, config.random_probes) {
            sets.observe(&net.activation_pattern(&x)?);
        }
    }
    let preprocessed = sets.clone();

    let mut result = IsaResult {
        mode: config.mode,
        stable_inactive: Vec::new(),
        stable_active: Vec::new(),
        certified: false,
        solve_calls: 0,
        nodes: 0,
        incumbents: 0,
        lp_solves: 0,
        wall_time: Duration::ZERO,
        preprocessed,
        trace: Vec::new(),
        completion_failures: 0,
        bounds,
    };

    match config.mode {
        IsaMode::PreprocessOnly => {}
        IsaMode::SingleCall => {
            let milp = build_stability_milp(net, &domain, &sets, &result.bounds)?;
            let mut cb = IsaCallbacks::new(net, &domain, &milp, sets, true);
            let limits = SearchLimits {
                time: remaining(config.time_limit, start),
                ..Default::default()
            };
            let search = solve_milp(milp.model(), &mut cb, &limits)?;
            result.certified = proves_zero(&search);
            absorb(&mut result, &search, &cb);
            sets = cb.sets;
        }
        IsaMode::Sequential => {
            while let Some(limit) = remaining_or_none(config.time_limit, start) {
                let milp = build_stability_milp(net, &domain, &sets, &result.bounds)?;
                let mut cb = IsaCallbacks::new(net, &domain, &milp, sets.clone(), false);
                let limits = SearchLimits {
                    time: limit,
                    ..Default::default()
                };
                let search = solve_milp(milp.model(), &mut cb, &limits)?;
                absorb(&mut result, &search, &cb);
                if proves_zero(&search) {
                    result.certified = true;
                    break;
                }
                if search.status != SearchStatus::ProvedOptimal {
                    break;
                }
                let best = search
                    .best_solution
                    .as_ref()
                    .expect("optimal search has a solution");
                let before = sets.unobserved_count();
                let revealed = sets.observe(&milp.pattern_of(best));
                result.trace.push(IncumbentEvent {
                    objective: search.best_objective,
                    revealed,
                    remaining: sets.unobserved_count(),
                });
                if sets.unobserved_count() == before {
                    return Err(Error::Numerical(
                        "positive optimum revealed no unobserved state".into(),
                    ));
                }
            }
        }
    }

    result.stable_inactive = sets.unseen_active;
    result.stable_active = sets.unseen_inactive;
    result.wall_time = start.elapsed();
    Ok(result)
}

fn remaining(limit: Option<Duration>, start: Instant) -> Option<Duration> {
    limit.map(|t| t.saturating_sub(start.elapsed()))
}

/// `Some(budget)` while time is left, `None` once it has run out.
fn remaining_or_none(limit: Option<Duration>, start: Instant) -> Option<Option<Duration>> {
    match remaining(limit, start) {
        Some(t) if t.is_zero() => None,
        other => Some(other),
    }
}

fn proves_zero(search: &SearchResult) -> bool {
    search.status == SearchStatus::ProvedOptimal && search.best_objective <= GAP_TOL
}

fn absorb(result: &mut IsaResult, search: &SearchResult, cb: &IsaCallbacks) {
    result.solve_calls += 1;
    result.nodes += search.nodes_explored;
    result.incumbents += search.incumbents_found;
    result.lp_solves += search.lp_solves;
    result.completion_failures += cb.completion_failures;
    if cb.lazy {
        result.trace.extend_from_slice(&cb.trace);
    }
}

struct IsaCallbacks<'a> {
    net: &'a Network,
    domain: &'a InputDomain,
    milp: &'a StabilityMilp,
    sets: StabilitySets,
    /// Shrink the sets and fix counters on every incumbent.
    lazy: bool,
    seen: HashSet<Vec<Vec<bool>>>,
    trace: Vec<IncumbentEvent>,
    completion_failures: usize,
}

impl<'a> IsaCallbacks<'a> {
    fn new(
        net: &'a Network,
        domain: &'a InputDomain,
        milp: &'a StabilityMilp,
        sets: StabilitySets,
        lazy: bool,
    ) -> Self {
        IsaCallbacks {
            net,
            domain,
            milp,
            sets,
            lazy,
            seen: HashSet::new(),
            trace: Vec::new(),
            completion_failures: 0,
        }
    }

    /// Sets every live counter to its indicator's value and checks that the
    /// result is feasible and no worse than the incumbent.
    fn check_completion(&self, values: &[f64], pattern: &[Vec<bool>]) -> bool {
        let mut completed = values.to_vec();
        for (l, layer) in pattern.iter().enumerate() {
            for (i, &on) in layer.iter().enumerate() {
                if let Some(p) = self.milp.p_var(l, i) {
                    let live = self.sets.unseen_active[l].contains(&i);
                    completed[p] = if live && on { 1.0 } else { 0.0 };
                }
                if let Some(q) = self.milp.q_var(l, i) {
                    let live = self.sets.unseen_inactive[l].contains(&i);
                    completed[q] = if live && !on { 1.0 } else { 0.0 };
                }
            }
        }
        let lp = self.milp.model().lp();
        lp.max_violation(&completed) <= CANDIDATE_TOL
            && lp.objective_value(&completed) >= lp.objective_value(values) - CANDIDATE_TOL
    }
}

impl SearchCallbacks for IsaCallbacks<'_> {
    fn on_incumbent(&mut self, values: &[f64]) -> Vec<usize> {
        let pattern = self.milp.pattern_of(values);
        if !self.check_completion(values, &pattern) {
            self.completion_failures += 1;
        }
        let objective = self.milp.model().lp().objective_value(values);
        self.seen.insert(pattern.clone());
        if !self.lazy {
            return Vec::new();
        }
        let mut fixes = Vec::new();
        for (l, layer) in pattern.iter().enumerate() {
            for (i, &on) in layer.iter().enumerate() {
                if on && self.sets.unseen_active[l].remove(&i) {
                    fixes.extend(self.milp.p_var(l, i));
                }
                if !on && self.sets.unseen_inactive[l].remove(&i) {
                    fixes.extend(self.milp.q_var(l, i));
                }
            }
        }
        if !fixes.is_empty() {
            self.trace.push(IncumbentEvent {
                objective,
                revealed: fixes.len(),
                remaining: self.sets.unobserved_count(),
            });
        }
        fixes
    }

    fn on_relaxation(&mut self, values: &[f64]) -> Option<Vec<f64>> {
        let x0 = self.milp.input_of(values);
        let candidate = self
            .milp
            .input_to_solution(self.net, self.domain, &x0, &self.sets)?;
        if self.seen.contains(&self.milp.pattern_of(&candidate)) {
            return None;
        }
        Some(candidate)
    }
}
