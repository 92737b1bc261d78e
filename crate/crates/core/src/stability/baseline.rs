//! Per-neuron exact preactivation ranges, two MILPs per neuron.

use std::time::{Duration, Instant};

use crate::bounds::{compute_bounds, NeuronState, StabilityLabels};
use crate::error::Result;
use crate::netio::{InputDomain, Network};
use crate::optcore::{solve_milp, MilpModel, NoCallbacks, Relation, SearchLimits, SearchStatus};

use super::encoding::encode_network;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NeuronRange {
    /// Exact minimum of the preactivation, `None` if its solve stopped early.
    pub lo: Option<f64>,
    pub hi: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct BaselineResult {
    pub ranges: Vec<Vec<NeuronRange>>,
    pub labels: StabilityLabels,
    pub milp_solves: usize,
    pub nodes: u64,
    pub wall_time: Duration,
}

/// Solves `max y` and `min y` for every hidden neuron in layer order.
///
/// Layers before the neuron are encoded exactly; neurons already classified
/// stable have their indicator fixed. `per_solve_limit` bounds each MILP.
pub fn run_baseline(
    net: &Network,
    domain: &InputDomain,
    per_solve_limit: Option<Duration>,
) -> Result<BaselineResult> {
    let start = Instant::now();
    let bounds = compute_bounds(net, domain)?;
    let widths = net.hidden_widths();
    let mut labels: StabilityLabels = widths.iter().map(|&n| vec![None; n]).collect();
    let mut ranges = Vec::with_capacity(widths.len());
    let mut milp_solves = 0;
    let mut nodes = 0;
    let limits = SearchLimits {
        time: per_solve_limit,
        ..Default::default()
    };

    for (l, layer) in net.hidden_layers().iter().enumerate() {
        let base = encode_network(net, domain, &bounds, l, Some(&labels))?;
        let prev = base.layer_outputs(l.checked_sub(1));
        let mut layer_ranges = Vec::with_capacity(layer.width());
        for (i, (row, b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let mut extremes = [None, None];
            for (slot, sign) in [(0, -1.0), (1, 1.0)] {
                let mut enc = base.clone();
                let y = enc.add_named_var(f64::NEG_INFINITY, f64::INFINITY, sign, "y".into());
                let mut terms: Vec<(usize, f64)> =
                    prev.iter().zip(row).map(|(&v, &w)| (v, w)).collect();
                terms.push((y, -1.0));
                enc.lp.add_constraint(terms, Relation::Eq, -b);
                let model = MilpModel::new(enc.lp, enc.binaries)?;
                let search = solve_milp(&model, &mut NoCallbacks, &limits)?;
                milp_solves += 1;
                nodes += search.nodes_explored;
                if search.status == SearchStatus::ProvedOptimal {
                    extremes[slot] = Some(sign * search.best_objective);
                }
            }
            let range = NeuronRange {
                lo: extremes[0],
                hi: extremes[1],
            };
            labels[l][i] = match (range.lo, range.hi) {
                (_, Some(hi)) if hi <= 0.0 => Some(NeuronState::Inactive),
                (Some(lo), _) if lo >= 0.0 => Some(NeuronState::Active),
                _ => None,
            };
            layer_ranges.push(range);
        }
        ranges.push(layer_ranges);
    }
    Ok(BaselineResult {
        ranges,
        labels,
        milp_solves,
        nodes,
        wall_time: start.elapsed(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netio::Layer;

    fn close(a: Option<f64>, b: f64) -> bool {
        a.is_some_and(|a| (a - b).abs() < 1e-7)
    }

    #[test]
    fn shifted_neuron_range() {
        let net = Network::new(
            1,
            vec![
                Layer::new(vec![vec![1.0]], vec![-2.0]),
                Layer::new(vec![vec![1.0]], vec![0.0]),
            ],
        )
        .unwrap();
        let r = run_baseline(&net, &InputDomain::unit_box(1), None).unwrap();
        let range = r.ranges[0][0];
        assert!(close(range.lo, -2.0) && close(range.hi, -1.0));
        assert_eq!(r.labels, vec![vec![Some(NeuronState::Inactive)]]);
        assert_eq!(r.milp_solves, 2);
    }

    #[test]
    fn coupled_network_exact_maximum() {
        let net = Network::new(
            1,
            vec![
                Layer::new(vec![vec![1.0], vec![-1.0]], vec![-0.5, 0.5]),
                Layer::new(vec![vec![1.0, 1.0]], vec![-0.6]),
                Layer::new(vec![vec![1.0]], vec![0.0]),
            ],
        )
        .unwrap();
        let r = run_baseline(&net, &InputDomain::unit_box(1), None).unwrap();
        assert!(close(r.ranges[1][0].hi, -0.1));
        assert!(close(r.ranges[1][0].lo, -0.6));
        assert_eq!(r.labels[0], vec![None, None]);
        assert_eq!(r.labels[1], vec![Some(NeuronState::Inactive)]);
    }

    #[test]
    fn mixed_sign_neuron_unstable() {
        let net = Network::new(
            2,
            vec![
                Layer::new(vec![vec![1.0, -1.0]], vec![0.0]),
                Layer::new(vec![vec![1.0]], vec![0.0]),
            ],
        )
        .unwrap();
        let r = run_baseline(&net, &InputDomain::unit_box(2), None).unwrap();
        assert!(close(r.ranges[0][0].lo, -1.0) && close(r.ranges[0][0].hi, 1.0));
        assert_eq!(r.labels, vec![vec![None]]);
    }
}
