//! Stability report JSON.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::bounds::BoundsTable;

use super::isa::IsaResult;

pub const REPORT_SCHEMA: u32 = 1;

/// Per-layer neuron lists. Uncertified runs list nothing as stable: every
/// surviving candidate goes to `unproven`, split by candidate state.
#[derive(Debug, Clone, Serialize)]
pub struct StabilityReport {
    pub schema: u32,
    pub mode: &'static str,
    pub certified: bool,
    pub stable_inactive: Vec<Vec<usize>>,
    pub stable_active: Vec<Vec<usize>>,
    pub unproven: Vec<Vec<usize>>,
    pub candidate_inactive: Vec<Vec<usize>>,
    pub candidate_active: Vec<Vec<usize>>,
    pub solve_calls: usize,
    pub nodes: u64,
    pub incumbents: u64,
    pub lp_solves: u64,
    pub wall_time_ms: f64,
    pub bounds: BoundsTable,
}

fn lists(sets: &[BTreeSet<usize>]) -> Vec<Vec<usize>> {
    sets.iter().map(|s| s.iter().copied().collect()).collect()
}

impl StabilityReport {
    pub fn from_result(result: &IsaResult) -> Self {
        let empty = vec![Vec::new(); result.stable_inactive.len()];
        let (stable_inactive, stable_active, unproven, cand_in, cand_act) = if result.certified {
            (
                lists(&result.stable_inactive),
                lists(&result.stable_active),
                empty.clone(),
                empty.clone(),
                empty,
            )
        } else {
            let union: Vec<BTreeSet<usize>> = result
                .stable_inactive
                .iter()
                .zip(&result.stable_active)
                .map(|(p, q)| p | q)
                .collect();
            (
                empty.clone(),
                empty,
                lists(&union),
                lists(&result.stable_inactive),
                lists(&result.stable_active),
            )
        };
        StabilityReport {
            schema: REPORT_SCHEMA,
            mode: result.mode.name(),
            certified: result.certified,
            stable_inactive,
            stable_active,
            unproven,
            candidate_inactive: cand_in,
            candidate_active: cand_act,
            solve_calls: result.solve_calls,
            nodes: result.nodes,
            incumbents: result.incumbents,
            lp_solves: result.lp_solves,
            wall_time_ms: result.wall_time.as_secs_f64() * 1e3,
            bounds: result.bounds.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netio::{Dataset, InputDomain, Layer, Network};
    use crate::stability::{run_isa, IsaConfig, IsaMode};

    fn net() -> Network {
        Network::new(
            1,
            vec![
                Layer::new(vec![vec![1.0], vec![1.0]], vec![-2.0, -0.5]),
                Layer::new(vec![vec![1.0, 1.0]], vec![0.0]),
            ],
        )
        .unwrap()
    }

    #[test]
    fn certified_report_lists_stable_neurons() {
        let domain = InputDomain::unit_box(1);
        let r = run_isa(&net(), &domain, &Dataset::empty(), &IsaConfig::default()).unwrap();
        let v: serde_json::Value =
            serde_json::from_str(&StabilityReport::from_result(&r).to_json()).unwrap();
        assert_eq!(v["schema"], 1);
        assert_eq!(v["certified"], true);
        assert_eq!(v["stable_inactive"], serde_json::json!([[0]]));
        assert_eq!(v["stable_active"], serde_json::json!([[]]));
        assert_eq!(v["unproven"], serde_json::json!([[]]));
        assert_eq!(v["bounds"][0][0]["hi"], -1.0);
        assert!(v["wall_time_ms"].is_number());
    }

    #[test]
    fn uncertified_report_lists_nothing_as_stable() {
        let domain = InputDomain::unit_box(1);
        let data = Dataset::new(vec![vec![0.2]], &domain).unwrap();
        let cfg = IsaConfig {
            mode: IsaMode::PreprocessOnly,
            ..Default::default()
        };
        let r = run_isa(&net(), &domain, &data, &cfg).unwrap();
        let rep = StabilityReport::from_result(&r);
        assert!(!rep.certified);
        assert_eq!(rep.stable_inactive, vec![Vec::<usize>::new()]);
        assert_eq!(rep.unproven, vec![vec![0, 1]]);
        assert_eq!(rep.candidate_inactive, vec![vec![0, 1]]);
        assert_eq!(rep.mode, "preprocess_only");
    }
}
