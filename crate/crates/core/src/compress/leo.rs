use std::collections::BTreeSet;

use serde::Serialize;

use crate::bounds::{NeuronState, StabilityLabels};
use crate::error::{Error, Result};
use crate::netio::{InputDomain, Network};
use crate::stability::IsaResult;

use super::magnitude::{connections_to_csv, Connection};
use super::ops::{collapse_network, fold_layer, merge_active, remove_inactive, MergePlan};
use super::verify::EquivalenceCheck;

pub const COMPRESSION_SCHEMA: u32 = 1;

/// What happened to one hidden layer of the original network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "action", rename_all = "snake_case")]
pub enum LayerAction {
    None,
    Removed {
        removed: usize,
    },
    Merged {
        merged: usize,
    },
    MergedAndRemoved {
        merged: usize,
        removed: usize,
    },
    Folded,
    /// The whole network became a constant here; later layers are gone too.
    Collapsed,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompressionReport {
    pub schema: u32,
    pub certified: bool,
    pub actions: Vec<LayerAction>,
    pub merge_plans: Vec<(usize, MergePlan)>,
    pub original_neurons: usize,
    pub compressed_neurons: usize,
    pub original_connections: usize,
    pub compressed_connections: usize,
    pub neurons_removed_pct: f64,
    /// Nonzero weights removed; negative when folding densifies a layer.
    pub connections_removed_pct: f64,
    pub equivalence_residual: Option<f64>,
    pub seed_inputs_checked: usize,
    /// Connections deleted with stably inactive neurons, in original coordinates.
    #[serde(skip)]
    pub removed_connections: Vec<Connection>,
    pub removed_connection_count: usize,
}

impl CompressionReport {
    pub fn is_identity(&self) -> bool {
        self.actions.iter().all(|a| *a == LayerAction::None)
    }

    pub fn record_check(&mut self, check: &EquivalenceCheck) {
        self.equivalence_residual = Some(check.max_residual);
        self.seed_inputs_checked = check.points;
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialization cannot fail")
    }

    pub fn removed_connections_csv(&self) -> String {
        connections_to_csv(&self.removed_connections)
    }
}

fn pct(removed: isize, total: usize) -> f64 {
    if total == 0 {
        0.0
    } else {
        100.0 * removed as f64 / total as f64
    }
}

/// Compresses with the stable sets of an ISA run. Uncertified sets are
/// refused unless `allow_uncertified` is set.
pub fn run_leo(
    net: &Network,
    domain: &InputDomain,
    isa: &IsaResult,
    allow_uncertified: bool,
) -> Result<(Network, CompressionReport)> {
    if !isa.certified && !allow_uncertified {
        return Err(Error::Precondition(
            "stable sets are not certified; pass the uncertified opt-in to use them".into(),
        ));
    }
    let (out, mut report) = compress_with_labels(net, domain, &isa.labels())?;
    report.certified = isa.certified;
    Ok((out, report))
}

/// Applies the layer pass for the given labels, which are trusted.
pub fn compress_with_labels(
    net: &Network,
    domain: &InputDomain,
    labels: &StabilityLabels,
) -> Result<(Network, CompressionReport)> {
    let widths = net.hidden_widths();
    if labels.len() != widths.len() || labels.iter().zip(&widths).any(|(l, w)| l.len() != *w) {
        return Err(Error::Precondition(
            "labels do not match the network's hidden layers".into(),
        ));
    }
    let mut cur = net.clone();
    let mut cur_l = 0;
    let mut actions = vec![LayerAction::None; widths.len()];
    let mut merge_plans = Vec::new();
    let mut removed_conns = BTreeSet::new();

    for (l, layer_labels) in labels.iter().enumerate() {
        let pick = |s: NeuronState| -> BTreeSet<usize> {
            (0..layer_labels.len())
                .filter(|&i| layer_labels[i] == Some(s))
                .collect()
        };
        let inactive = pick(NeuronState::Inactive);
        let active = pick(NeuronState::Active);
        let n = widths[l];

        if inactive.len() == n {
            cur = collapse_network(&cur, domain)?;
            actions[l] = LayerAction::Collapsed;
            break;
        }
        if inactive.len() + active.len() == n {
            cur = fold_layer(&cur, cur_l, &active)?;
            actions[l] = LayerAction::Folded;
            continue;
        }

        // Positions in the current layer of the original neurons still present.
        let mut present: Vec<usize> = (0..n).collect();
        let mut merged = 0;
        if active.len() > 1 {
            let (next, plan) = merge_active(&cur, cur_l, &active)?;
            merged = plan.removed.len();
            present.retain(|i| !plan.removed.contains(i));
            if merged > 0 {
                merge_plans.push((l, plan));
            }
            cur = next;
        }
        let positions: BTreeSet<usize> = present
            .iter()
            .enumerate()
            .filter(|(_, orig)| inactive.contains(orig))
            .map(|(pos, _)| pos)
            .collect();
        if !positions.is_empty() {
            cur = remove_inactive(&cur, cur_l, &positions)?;
            for &i in &inactive {
                removed_conns.extend(neuron_connections(net, l, i));
            }
        }
        actions[l] = match (merged, inactive.len()) {
            (0, 0) => LayerAction::None,
            (0, k) => LayerAction::Removed { removed: k },
            (m, 0) => LayerAction::Merged { merged: m },
            (m, k) => LayerAction::MergedAndRemoved {
                merged: m,
                removed: k,
            },
        };
        cur_l += 1;
    }

    let removed_connections: Vec<Connection> = removed_conns
        .into_iter()
        .map(|(layer, row, col)| Connection {
            layer,
            row,
            col,
            weight: net.layers()[layer].weights[row][col],
        })
        .collect();
    let (on, cn) = (net.num_hidden_neurons(), cur.num_hidden_neurons());
    let (oc, cc) = (net.connections(), cur.connections());
    let report = CompressionReport {
        schema: COMPRESSION_SCHEMA,
        certified: true,
        actions,
        merge_plans,
        original_neurons: on,
        compressed_neurons: cn,
        original_connections: oc,
        compressed_connections: cc,
        neurons_removed_pct: pct(on as isize - cn as isize, on),
        connections_removed_pct: pct(oc as isize - cc as isize, oc),
        equivalence_residual: None,
        seed_inputs_checked: 0,
        removed_connection_count: removed_connections.len(),
        removed_connections,
    };
    Ok((cur, report))
}

/// Nonzero incoming and outgoing weights of hidden neuron `i` in layer `l`.
fn neuron_connections(net: &Network, l: usize, i: usize) -> Vec<(usize, usize, usize)> {
    let layers = net.layers();
    let incoming = layers[l].weights[i]
        .iter()
        .enumerate()
        .filter(|(_, w)| **w != 0.0)
        .map(|(c, _)| (l, i, c));
    let outgoing = layers[l + 1]
        .weights
        .iter()
        .enumerate()
        .filter(|(_, row)| row[i] != 0.0)
        .map(|(r, _)| (l + 1, r, i));
    incoming.chain(outgoing).collect()
}
