//! The four exact rewrites. Each takes a network by reference and returns a
//! new one; `layer` always indexes a hidden layer of the network passed in.

use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::netio::{dot, InputDomain, Layer, Network};

/// Rank tolerance, relative to the largest active row norm.
pub const RANK_TOL: f64 = 1e-8;
/// Largest reconstruction error accepted for a merged neuron.
pub const MERGE_TOL: f64 = 1e-7;

fn check_hidden(net: &Network, layer: usize) -> Result<()> {
    if layer >= net.num_hidden() {
        return Err(Error::Precondition(format!(
            "layer {layer} is not a hidden layer ({} hidden layers)",
            net.num_hidden()
        )));
    }
    Ok(())
}

fn check_indices(net: &Network, layer: usize, set: &BTreeSet<usize>) -> Result<()> {
    let width = net.layers()[layer].width();
    if let Some(&i) = set.iter().find(|&&i| i >= width) {
        return Err(Error::Precondition(format!(
            "neuron {i} out of range for layer {layer} of width {width}"
        )));
    }
    Ok(())
}

/// Deletes the given neurons and the matching columns of the next layer.
pub fn remove_inactive(net: &Network, layer: usize, inactive: &BTreeSet<usize>) -> Result<Network> {
    check_hidden(net, layer)?;
    check_indices(net, layer, inactive)?;
    if inactive.len() == net.layers()[layer].width() {
        return Err(Error::Precondition(format!(
            "removing every neuron of layer {layer}; collapse the network instead"
        )));
    }
    let mut layers = net.layers().to_vec();
    let keep = |i: &usize| !inactive.contains(i);
    let cur = &mut layers[layer];
    *cur = Layer::new(select(&cur.weights, keep), select(&cur.bias, keep));
    let next = &mut layers[layer + 1];
    next.weights = next.weights.iter().map(|row| select(row, keep)).collect();
    Network::new(net.input_dim(), layers)
}

fn select<T: Clone>(items: &[T], keep: impl Fn(&usize) -> bool) -> Vec<T> {
    items
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(i))
        .map(|(_, v)| v.clone())
        .collect()
}

/// How a set of stably active neurons was reduced to a linearly independent
/// subset.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MergePlan {
    /// Pivot rows in index order; they span every merged row.
    pub kept: Vec<usize>,
    pub rank: usize,
    /// Merged neurons, each with coefficients over `kept`.
    pub removed: Vec<usize>,
    pub alphas: Vec<Vec<f64>>,
    /// `b_i - sum_j alpha_j b_j` for each merged neuron.
    pub bias_residuals: Vec<f64>,
    /// Rank-deficient rows whose reconstruction missed `MERGE_TOL`; left in place.
    pub unmerged: Vec<usize>,
}

impl MergePlan {
    /// Output of merged neuron `k` (index into `removed`) rebuilt from the
    /// kept neurons' outputs.
    pub fn reconstruct(&self, k: usize, kept_outputs: &[f64]) -> f64 {
        dot(&self.alphas[k], kept_outputs) + self.bias_residuals[k]
    }
}

/// Greedy modified Gram-Schmidt over the active rows in index order.
pub fn plan_merge(layer: &Layer, active: &BTreeSet<usize>) -> MergePlan {
    let rows: Vec<usize> = active.iter().copied().collect();
    let max_norm = rows
        .iter()
        .map(|&i| norm2(&layer.weights[i]))
        .fold(0.0, f64::max);
    let tol = RANK_TOL * max_norm;

    let mut basis: Vec<Vec<f64>> = Vec::new();
    // r[c] holds the basis coordinates of kept row c (upper triangular).
    let mut r: Vec<Vec<f64>> = Vec::new();
    let mut plan = MergePlan {
        kept: Vec::new(),
        rank: 0,
        removed: Vec::new(),
        alphas: Vec::new(),
        bias_residuals: Vec::new(),
        unmerged: Vec::new(),
    };
    for &i in &rows {
        let w = &layer.weights[i];
        let mut v = w.clone();
        let mut coords = Vec::with_capacity(basis.len());
        for q in &basis {
            let c = dot(q, &v);
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
            coords.push(c);
        }
        let rest = norm2(&v);
        if rest > tol {
            v.iter_mut().for_each(|a| *a /= rest);
            basis.push(v);
            coords.push(rest);
            r.push(coords);
            plan.kept.push(i);
            continue;
        }
        let alpha = back_substitute(&r, &coords);
        let mut residual = 0.0f64;
        for (col, wv) in w.iter().enumerate() {
            let rebuilt: f64 = plan
                .kept
                .iter()
                .zip(&alpha)
                .map(|(&j, a)| a * layer.weights[j][col])
                .sum();
            residual = residual.max((wv - rebuilt).abs());
        }
        if residual > MERGE_TOL {
            plan.unmerged.push(i);
            continue;
        }
        let bias_fit: f64 = plan
            .kept
            .iter()
            .zip(&alpha)
            .map(|(&j, a)| a * layer.bias[j])
            .sum();
        plan.removed.push(i);
        plan.alphas.push(alpha);
        plan.bias_residuals.push(layer.bias[i] - bias_fit);
    }
    plan.rank = plan.kept.len();
    // Coefficients were computed against the kept rows known at the time;
    // pad them to the final kept list.
    for a in &mut plan.alphas {
        a.resize(plan.rank, 0.0);
    }
    plan
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Solves `R alpha = coords` where column `c` of the triangular `R` is `r[c]`.
fn back_substitute(r: &[Vec<f64>], coords: &[f64]) -> Vec<f64> {
    let n = coords.len();
    let mut alpha = vec![0.0; n];
    for row in (0..n).rev() {
        let mut s = coords[row];
        for (col, a) in alpha.iter().enumerate().skip(row + 1) {
            s -= r[col][row] * a;
        }
        alpha[row] = s / r[row][row];
    }
    alpha
}

/// Replaces linearly dependent stably active neurons by their expansion in
/// the kept ones, folding the dependence into the next layer.
pub fn merge_active(
    net: &Network,
    layer: usize,
    active: &BTreeSet<usize>,
) -> Result<(Network, MergePlan)> {
    check_hidden(net, layer)?;
    check_indices(net, layer, active)?;
    let plan = plan_merge(&net.layers()[layer], active);
    if plan.removed.is_empty() {
        return Ok((net.clone(), plan));
    }
    let mut layers = net.layers().to_vec();
    let cur = layers[layer].clone();
    let next = &mut layers[layer + 1];
    for (row, b) in next.weights.iter_mut().zip(next.bias.iter_mut()) {
        for (k, &i) in plan.removed.iter().enumerate() {
            let v = row[i];
            for (&j, a) in plan.kept.iter().zip(&plan.alphas[k]) {
                row[j] += a * v;
            }
            *b += v * plan.bias_residuals[k];
        }
    }
    let removed: BTreeSet<usize> = plan.removed.iter().copied().collect();
    let keep = |i: &usize| !removed.contains(i);
    layers[layer] = Layer::new(select(&cur.weights, keep), select(&cur.bias, keep));
    let next = &mut layers[layer + 1];
    next.weights = next.weights.iter().map(|row| select(row, keep)).collect();
    Ok((Network::new(net.input_dim(), layers)?, plan))
}

/// Composes a fully stable hidden layer into its successor. Neurons outside
/// `active` are taken to be stably inactive.
pub fn fold_layer(net: &Network, layer: usize, active: &BTreeSet<usize>) -> Result<Network> {
    check_hidden(net, layer)?;
    check_indices(net, layer, active)?;
    if active.is_empty() {
        return Err(Error::Precondition(format!(
            "layer {layer} has no active neuron; collapse the network instead"
        )));
    }
    let cur = &net.layers()[layer];
    let next = &net.layers()[layer + 1];
    let in_dim = cur.weights.first().map_or(0, Vec::len);
    let weights = next
        .weights
        .iter()
        .map(|row| {
            (0..in_dim)
                .map(|c| active.iter().map(|&i| row[i] * cur.weights[i][c]).sum())
                .collect()
        })
        .collect();
    let bias = next
        .weights
        .iter()
        .zip(&next.bias)
        .map(|(row, b)| active.iter().map(|&i| row[i] * cur.bias[i]).sum::<f64>() + b)
        .collect();
    let mut layers = net.layers().to_vec();
    layers[layer + 1] = Layer::new(weights, bias);
    layers.remove(layer);
    Network::new(net.input_dim(), layers)
}

/// The constant network equal to `net` at the domain midpoint.
pub fn collapse_network(net: &Network, domain: &InputDomain) -> Result<Network> {
    let out = net.eval(&domain.midpoint())?;
    let weights = vec![vec![0.0; net.input_dim()]; out.len()];
    Network::new(net.input_dim(), vec![Layer::new(weights, out)])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn remove_drops_row_and_column() {
        let net = Network::new(
            1,
            vec![
                Layer::new(vec![vec![1.0], vec![2.0]], vec![0.0, -5.0]),
                Layer::new(vec![vec![3.0, 4.0]], vec![1.0]),
            ],
        )
        .unwrap();
        let out = remove_inactive(&net, 0, &set(&[1])).unwrap();
        assert_eq!(out.layers()[0], Layer::new(vec![vec![1.0]], vec![0.0]));
        assert_eq!(out.layers()[1], Layer::new(vec![vec![3.0]], vec![1.0]));
        assert_eq!(remove_inactive(&net, 0, &set(&[])).unwrap(), net);
        assert!(remove_inactive(&net, 0, &set(&[2])).is_err());
        assert!(remove_inactive(&net, 0, &set(&[0, 1])).is_err());
        assert!(remove_inactive(&net, 1, &set(&[0])).is_err());
    }

    #[test]
    fn duplicate_neurons_merge() {
        let net = Network::new(
            1,
            vec![
                Layer::new(vec![vec![1.5], vec![1.5]], vec![0.25, 0.25]),
                Layer::new(vec![vec![2.0, 3.0]], vec![0.5]),
            ],
        )
        .unwrap();
        let (out, plan) = merge_active(&net, 0, &set(&[0, 1])).unwrap();
        assert_eq!(plan.kept, vec![0]);
        assert_eq!(plan.removed, vec![1]);
        assert_eq!(plan.alphas, vec![vec![1.0]]);
        assert_eq!(plan.bias_residuals, vec![0.0]);
        assert_eq!(out.layers()[1], Layer::new(vec![vec![5.0]], vec![0.5]));
    }

    #[test]
    fn three_neuron_merge() {
        let net = Network::new(
            2,
            vec![
                Layer::new(
                    vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
                    vec![0.5, 0.5, 1.2],
                ),
                Layer::new(vec![vec![2.0, 3.0, 4.0]], vec![0.0]),
            ],
        )
        .unwrap();
        let (out, plan) = merge_active(&net, 0, &set(&[0, 1, 2])).unwrap();
        assert_eq!(plan.kept, vec![0, 1]);
        assert_eq!(plan.rank, 2);
        assert!(close(&plan.alphas[0], &[1.0, 1.0], 1e-12));
        assert!((plan.bias_residuals[0] - 0.2).abs() < 1e-12);
        let next = &out.layers()[1];
        assert!(close(&next.weights[0], &[6.0, 7.0], 1e-12));
        assert!((next.bias[0] - 0.8).abs() < 1e-12);
    }

    #[test]
    fn full_rank_is_identity() {
        let net = Network::new(
            2,
            vec![
                Layer::new(vec![vec![1.0, 0.0], vec![1.0, 1.0]], vec![0.0, 0.0]),
                Layer::new(vec![vec![1.0, 1.0]], vec![0.0]),
            ],
        )
        .unwrap();
        let (out, plan) = merge_active(&net, 0, &set(&[0, 1])).unwrap();
        assert_eq!(out, net);
        assert_eq!(plan.rank, 2);
        assert!(plan.removed.is_empty());
    }

    #[test]
    fn zero_rows_merge_into_bias() {
        let net = Network::new(
            1,
            vec![
                Layer::new(vec![vec![0.0], vec![1.0]], vec![0.7, 1.0]),
                Layer::new(vec![vec![2.0, 1.0]], vec![0.0]),
            ],
        )
        .unwrap();
        let (out, plan) = merge_active(&net, 0, &set(&[0, 1])).unwrap();
        assert_eq!(plan.kept, vec![1]);
        assert_eq!(plan.removed, vec![0]);
        assert_eq!(plan.alphas, vec![vec![0.0]]);
        assert!((out.layers()[1].bias[0] - 1.4).abs() < 1e-15);
    }

    #[test]
    fn fold_single_active() {
        let net = Network::new(
            1,
            vec![
                Layer::new(vec![vec![2.0]], vec![1.0]),
                Layer::new(vec![vec![3.0]], vec![-1.0]),
            ],
        )
        .unwrap();
        let out = fold_layer(&net, 0, &set(&[0])).unwrap();
        assert_eq!(out.layers(), &[Layer::new(vec![vec![6.0]], vec![2.0])]);
    }

    #[test]
    fn fold_masks_inactive_rows() {
        let net = Network::new(
            1,
            vec![
                Layer::new(vec![vec![2.0], vec![1.0]], vec![1.0, -2.0]),
                Layer::new(vec![vec![3.0, 5.0]], vec![-1.0]),
            ],
        )
        .unwrap();
        let out = fold_layer(&net, 0, &set(&[0])).unwrap();
        assert_eq!(out.layers(), &[Layer::new(vec![vec![6.0]], vec![2.0])]);
        assert!(fold_layer(&net, 0, &set(&[])).is_err());
    }

    #[test]
    fn collapse_to_constant() {
        let net = Network::new(
            1,
            vec![
                Layer::new(vec![vec![1.0]], vec![-2.0]),
                Layer::new(vec![vec![5.0]], vec![3.0]),
            ],
        )
        .unwrap();
        let out = collapse_network(&net, &InputDomain::unit_box(1)).unwrap();
        assert_eq!(out.layers(), &[Layer::new(vec![vec![0.0]], vec![3.0])]);
        assert_eq!(out.num_hidden(), 0);
    }
}
