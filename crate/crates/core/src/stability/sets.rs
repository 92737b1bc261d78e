use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bounds::{NeuronState, StabilityLabels};
use crate::error::Result;
use crate::netio::{Dataset, Network};

/// Activation states not yet observed, per hidden layer.
///
/// A neuron in `unseen_active` has never been observed active and is a
/// candidate for stable inactivity; a neuron in `unseen_inactive` has never
/// been observed inactive. Observations only ever shrink the sets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StabilitySets {
    pub unseen_active: Vec<BTreeSet<usize>>,
    pub unseen_inactive: Vec<BTreeSet<usize>>,
}

impl StabilitySets {
    /// Nothing observed: every neuron is in both sets.
    pub fn unobserved(widths: &[usize]) -> Self {
        let all: Vec<BTreeSet<usize>> = widths.iter().map(|&n| (0..n).collect()).collect();
        StabilitySets {
            unseen_active: all.clone(),
            unseen_inactive: all,
        }
    }

    pub fn num_layers(&self) -> usize {
        self.unseen_active.len()
    }

    /// `|P| + |Q|`, the number of unobserved states.
    pub fn unobserved_count(&self) -> usize {
        self.unseen_active
            .iter()
            .chain(&self.unseen_inactive)
            .map(BTreeSet::len)
            .sum()
    }

    /// Records one activation pattern; returns how many states it revealed.
    pub fn observe(&mut self, pattern: &[Vec<bool>]) -> usize {
        let mut revealed = 0;
        for (l, layer) in pattern.iter().enumerate() {
            for (i, &on) in layer.iter().enumerate() {
                let set = if on {
                    &mut self.unseen_active[l]
                } else {
                    &mut self.unseen_inactive[l]
                };
                if set.remove(&i) {
                    revealed += 1;
                }
            }
        }
        revealed
    }

    pub fn is_disjoint(&self) -> bool {
        self.unseen_active
            .iter()
            .zip(&self.unseen_inactive)
            .all(|(p, q)| p.is_disjoint(q))
    }

    /// Reads the sets as stability labels; neurons in both sets are unlabeled.
    pub fn labels(&self, widths: &[usize]) -> StabilityLabels {
        widths
            .iter()
            .enumerate()
            .map(|(l, &n)| {
                (0..n)
                    .map(|i| {
                        match (
                            self.unseen_active[l].contains(&i),
                            self.unseen_inactive[l].contains(&i),
                        ) {
                            (true, false) => Some(NeuronState::Inactive),
                            (false, true) => Some(NeuronState::Active),
                            _ => None,
                        }
                    })
                    .collect()
            })
            .collect()
    }
}

/// Index of the first dataset row in which each neuron was active / inactive.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Witnesses {
    pub first_active: Vec<Vec<Option<usize>>>,
    pub first_inactive: Vec<Vec<Option<usize>>>,
}

/// Evaluates the dataset and keeps only states no row produced.
pub fn preprocess(net: &Network, dataset: &Dataset) -> Result<StabilitySets> {
    preprocess_with_witnesses(net, dataset).map(|(sets, _)| sets)
}

pub fn preprocess_with_witnesses(
    net: &Network,
    dataset: &Dataset,
) -> Result<(StabilitySets, Witnesses)> {
    let widths = net.hidden_widths();
    let mut sets = StabilitySets::unobserved(&widths);
    let none: Vec<Vec<Option<usize>>> = widths.iter().map(|&n| vec![None; n]).collect();
    let mut witnesses = Witnesses {
        first_active: none.clone(),
        first_inactive: none,
    };
    for (r, row) in dataset.rows().iter().enumerate() {
        let pattern = net.activation_pattern(row)?;
        for (l, layer) in pattern.iter().enumerate() {
            for (i, &on) in layer.iter().enumerate() {
                let slot = if on {
                    &mut witnesses.first_active[l][i]
                } else {
                    &mut witnesses.first_inactive[l][i]
                };
                slot.get_or_insert(r);
            }
        }
        sets.observe(&pattern);
    }
    Ok((sets, witnesses))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netio::{InputDomain, Layer};

    fn shifted() -> Network {
        Network::new(
            1,
            vec![
                Layer::new(vec![vec![1.0]], vec![-0.5]),
                Layer::new(vec![vec![1.0]], vec![0.0]),
            ],
        )
        .unwrap()
    }

    fn data(rows: &[f64]) -> Dataset {
        Dataset::new(
            rows.iter().map(|v| vec![*v]).collect(),
            &InputDomain::unit_box(1),
        )
        .unwrap()
    }

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn both_states_seen() {
        let sets = preprocess(&shifted(), &data(&[0.0, 1.0])).unwrap();
        assert_eq!(sets.unseen_active, vec![set(&[])]);
        assert_eq!(sets.unseen_inactive, vec![set(&[])]);
    }

    #[test]
    fn never_active() {
        let sets = preprocess(&shifted(), &data(&[0.0, 0.2])).unwrap();
        assert_eq!(sets.unseen_active, vec![set(&[0])]);
        assert_eq!(sets.unseen_inactive, vec![set(&[])]);
    }

    #[test]
    fn opposite_pair() {
        let net = Network::new(
            1,
            vec![
                Layer::new(vec![vec![1.0], vec![-1.0]], vec![-0.5, 0.5]),
                Layer::new(vec![vec![1.0, 1.0]], vec![0.0]),
            ],
        )
        .unwrap();
        let (sets, wit) = preprocess_with_witnesses(&net, &data(&[0.7])).unwrap();
        assert_eq!(sets.unseen_active, vec![set(&[1])]);
        assert_eq!(sets.unseen_inactive, vec![set(&[0])]);
        assert_eq!(wit.first_active, vec![vec![Some(0), None]]);
        assert_eq!(wit.first_inactive, vec![vec![None, Some(0)]]);
    }

    #[test]
    fn empty_dataset_leaves_everything_unobserved() {
        let sets = preprocess(&shifted(), &Dataset::empty()).unwrap();
        assert_eq!(sets, StabilitySets::unobserved(&[1]));
        assert_eq!(sets.unobserved_count(), 2);
        assert!(!sets.is_disjoint());
        assert_eq!(sets.labels(&[1]), vec![vec![None]]);
    }
}
