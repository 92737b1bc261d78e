//! Interval-arithmetic preactivation bounds and the big-M constants derived
//! from them.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netio::{InputDomain, Network};

/// Activation state shared by every classifier in the crate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum NeuronState {
    Inactive,
    Active,
}

/// Per hidden layer, per neuron: `Some(state)` when the neuron is known to be
/// stable in that state, `None` otherwise.
pub type StabilityLabels = Vec<Vec<Option<NeuronState>>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NeuronBounds {
    pub lo: f64,
    pub hi: f64,
    /// Upper bound on the ReLU output, `max(0, hi)`.
    pub big_m: f64,
    /// Upper bound on the negative part `max(0, -y)`, `max(0, -lo)`.
    pub big_mu: f64,
}

impl NeuronBounds {
    fn new(lo: f64, hi: f64) -> Self {
        NeuronBounds {
            lo,
            hi,
            big_m: hi.max(0.0),
            big_mu: (-lo).max(0.0),
        }
    }

    pub fn contains(&self, y: f64, slack: f64) -> bool {
        y >= self.lo - slack && y <= self.hi + slack
    }
}

/// Bounds for every hidden neuron, indexed `[layer][neuron]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct BoundsTable {
    layers: Vec<Vec<NeuronBounds>>,
}

impl BoundsTable {
    pub fn layers(&self) -> &[Vec<NeuronBounds>] {
        &self.layers
    }

    pub fn get(&self, layer: usize, neuron: usize) -> NeuronBounds {
        self.layers[layer][neuron]
    }
}

/// Propagates the input box through the hidden layers.
///
/// The optional sum constraint is not used; the bounds stay valid for the
/// constrained domain.
pub fn compute_bounds(net: &Network, domain: &InputDomain) -> Result<BoundsTable> {
    if domain.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            actual: domain.dim(),
        });
    }
    let mut in_lo = domain.lower().to_vec();
    let mut in_hi = domain.upper().to_vec();
    let mut layers = Vec::with_capacity(net.num_hidden());
    for layer in net.hidden_layers() {
        let bounds: Vec<NeuronBounds> = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(row, b)| {
                let (mut lo, mut hi) = (0.0, 0.0);
                for (w, (xl, xh)) in row.iter().zip(in_lo.iter().zip(&in_hi)) {
                    let (a, c) = (w * xl, w * xh);
                    lo += a.min(c);
                    hi += a.max(c);
                }
                NeuronBounds::new(lo + b, hi + b)
            })
            .collect();
        in_lo = bounds.iter().map(|nb| nb.lo.max(0.0)).collect();
        in_hi = bounds.iter().map(|nb| nb.hi.max(0.0)).collect();
        layers.push(bounds);
    }
    Ok(BoundsTable { layers })
}

/// Sound but incomplete classification from the bounds alone.
pub fn classify_by_bounds(bounds: &BoundsTable) -> StabilityLabels {
    bounds
        .layers
        .iter()
        .map(|layer| {
            layer
                .iter()
                .map(|nb| {
                    if nb.hi <= 0.0 {
                        Some(NeuronState::Inactive)
                    } else if nb.lo >= 0.0 {
                        Some(NeuronState::Active)
                    } else {
                        None
                    }
                })
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netio::Layer;

    fn net(layers: Vec<Layer>, input_dim: usize) -> Network {
        Network::new(input_dim, layers).unwrap()
    }

    fn out(width: usize) -> Layer {
        Layer::new(vec![vec![1.0; width]], vec![0.0])
    }

    #[test]
    fn monotone_affine_neuron() {
        let n = net(vec![Layer::new(vec![vec![1.0]], vec![-2.0]), out(1)], 1);
        let b = compute_bounds(&n, &InputDomain::unit_box(1))
            .unwrap()
            .get(0, 0);
        assert_eq!(
            b,
            NeuronBounds {
                lo: -2.0,
                hi: -1.0,
                big_m: 0.0,
                big_mu: 2.0
            }
        );
    }

    #[test]
    fn mixed_sign_weights() {
        let n = net(
            vec![Layer::new(vec![vec![1.0, -1.0]], vec![0.0]), out(1)],
            2,
        );
        let b = compute_bounds(&n, &InputDomain::unit_box(2))
            .unwrap()
            .get(0, 0);
        assert_eq!(
            b,
            NeuronBounds {
                lo: -1.0,
                hi: 1.0,
                big_m: 1.0,
                big_mu: 1.0
            }
        );
    }

    #[test]
    fn second_layer_uses_relu_interval() {
        let n = net(
            vec![
                Layer::new(vec![vec![1.0]], vec![0.0]),
                Layer::new(vec![vec![-1.0]], vec![0.5]),
                out(1),
            ],
            1,
        );
        let b = compute_bounds(&n, &InputDomain::unit_box(1))
            .unwrap()
            .get(1, 0);
        assert_eq!((b.lo, b.hi), (-0.5, 0.5));
    }

    #[test]
    fn classification_from_bounds() {
        let table = BoundsTable {
            layers: vec![vec![
                NeuronBounds::new(-2.0, -1.0),
                NeuronBounds::new(0.1, 1.1),
                NeuronBounds::new(-0.6, 0.4),
            ]],
        };
        assert_eq!(
            classify_by_bounds(&table),
            vec![vec![
                Some(NeuronState::Inactive),
                Some(NeuronState::Active),
                None
            ]]
        );
    }

    #[test]
    fn coupled_network_is_unknown_by_bounds() {
        // h1 = relu(x - 0.5), h2 = relu(-x + 0.5), y3 = h1 + h2 - 0.6; the
        // exact maximum of y3 is -0.1 but intervals see [-0.6, 0.4].
        let n = net(
            vec![
                Layer::new(vec![vec![1.0], vec![-1.0]], vec![-0.5, 0.5]),
                Layer::new(vec![vec![1.0, 1.0]], vec![-0.6]),
                out(1),
            ],
            1,
        );
        let table = compute_bounds(&n, &InputDomain::unit_box(1)).unwrap();
        let b = table.get(1, 0);
        assert!((b.lo + 0.6).abs() < 1e-12 && (b.hi - 0.4).abs() < 1e-12);
        assert_eq!(classify_by_bounds(&table)[1][0], None);
    }

    #[test]
    fn dimension_mismatch() {
        let n = net(vec![Layer::new(vec![vec![1.0]], vec![0.0]), out(1)], 1);
        assert!(compute_bounds(&n, &InputDomain::unit_box(2)).is_err());
    }
}
