//! Big-M mixed-integer encoding of the hidden layers.
//!
//! For every hidden neuron the encoding has a preactivation `y`, output `x`,
//! negative part `chi` and indicator `z` tied together by
//!
//! ```text
//! w . x_prev + b = y = x - chi,   0 <= x <= M z,   0 <= chi <= mu (1 - z),   z in {0, 1}
//! ```
//!
//! and the stability model adds one counter per unobserved state:
//! `0 <= p <= z` for neurons never seen active and `0 <= q <= 1 - z` for
//! neurons never seen inactive. The counters stay continuous; with `z`
//! integral they can always be set to `z` (or `1 - z`) at optimality.

use crate::bounds::{BoundsTable, NeuronState, StabilityLabels};
use crate::error::{Error, Result};
use crate::netio::{InputDomain, Network};
use crate::optcore::{LinearProgram, MilpModel, Relation};

use super::sets::StabilitySets;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NeuronVars {
    pub pre: usize,
    pub post: usize,
    pub neg: usize,
    pub active: usize,
}

#[derive(Debug, Clone)]
pub(crate) struct Encoding {
    pub lp: LinearProgram,
    pub input: Vec<usize>,
    pub neurons: Vec<Vec<NeuronVars>>,
    pub binaries: Vec<usize>,
    pub names: Vec<String>,
}

impl Encoding {
    fn var(&mut self, lb: f64, ub: f64, name: String) -> usize {
        self.names.push(name);
        self.lp.add_var(lb, ub, 0.0)
    }

    pub fn add_named_var(&mut self, lb: f64, ub: f64, obj: f64, name: String) -> usize {
        let j = self.var(lb, ub, name);
        self.lp.set_objective(j, obj);
        j
    }

    /// Output variables of hidden layer `layer`, or the inputs for `None`.
    pub fn layer_outputs(&self, layer: Option<usize>) -> Vec<usize> {
        match layer {
            None => self.input.clone(),
            Some(l) => self.neurons[l].iter().map(|v| v.post).collect(),
        }
    }
}

/// Encodes the input domain and the first `depth` hidden layers. Neurons
/// with a label in `fixed`, or whose bounds exclude zero, have their
/// indicator pinned.
pub(crate) fn encode_network(
    net: &Network,
    domain: &InputDomain,
    bounds: &BoundsTable,
    depth: usize,
    fixed: Option<&StabilityLabels>,
) -> Result<Encoding> {
    if domain.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            actual: domain.dim(),
        });
    }
    let mut enc = Encoding {
        lp: LinearProgram::new(),
        input: Vec::new(),
        neurons: Vec::new(),
        binaries: Vec::new(),
        names: Vec::new(),
    };
    for (j, (lo, hi)) in domain.lower().iter().zip(domain.upper()).enumerate() {
        let v = enc.var(*lo, *hi, format!("x0_{j}"));
        enc.input.push(v);
    }
    if let Some((s_lo, s_hi)) = domain.sum_bounds() {
        let terms: Vec<_> = enc.input.iter().map(|&v| (v, 1.0)).collect();
        enc.lp.add_constraint(terms.clone(), Relation::Ge, s_lo);
        enc.lp.add_constraint(terms, Relation::Le, s_hi);
    }

    for (l, layer) in net.hidden_layers().iter().take(depth).enumerate() {
        let prev = enc.layer_outputs(l.checked_sub(1));
        let mut vars = Vec::with_capacity(layer.width());
        for (i, (row, b)) in layer.weights.iter().zip(&layer.bias).enumerate() {
            let nb = bounds.get(l, i);
            let tag = format!("{}_{}", l + 1, i);
            let pre = enc.var(f64::NEG_INFINITY, f64::INFINITY, format!("y{tag}"));
            let post = enc.var(0.0, f64::INFINITY, format!("x{tag}"));
            let neg = enc.var(0.0, f64::INFINITY, format!("chi{tag}"));
            // Strict bound signs already force the indicator through the
            // big-M rows; fixing it only tightens the relaxation.
            let forced = if nb.hi < 0.0 {
                Some(NeuronState::Inactive)
            } else if nb.lo > 0.0 {
                Some(NeuronState::Active)
            } else {
                None
            };
            let (z_lo, z_hi) = match fixed.and_then(|f| f.get(l)).and_then(|f| f[i]).or(forced) {
                Some(NeuronState::Inactive) => (0.0, 0.0),
                Some(NeuronState::Active) => (1.0, 1.0),
                None => (0.0, 1.0),
            };
            let active = enc.var(z_lo, z_hi, format!("z{tag}"));
            enc.binaries.push(active);

            let mut affine: Vec<(usize, f64)> =
                prev.iter().zip(row).map(|(&v, &w)| (v, w)).collect();
            affine.push((pre, -1.0));
            enc.lp.add_constraint(affine, Relation::Eq, -b);
            enc.lp
                .add_constraint([(pre, 1.0), (post, -1.0), (neg, 1.0)], Relation::Eq, 0.0);
            enc.lp
                .add_constraint([(post, 1.0), (active, -nb.big_m)], Relation::Le, 0.0);
            enc.lp
                .add_constraint([(neg, 1.0), (active, nb.big_mu)], Relation::Le, nb.big_mu);
            vars.push(NeuronVars {
                pre,
                post,
                neg,
                active,
            });
        }
        enc.neurons.push(vars);
    }
    Ok(enc)
}

/// The joint stability model: maximize the number of unobserved states a
/// single input can exhibit.
#[derive(Debug, Clone)]
pub struct StabilityMilp {
    model: MilpModel,
    input: Vec<usize>,
    neurons: Vec<Vec<NeuronVars>>,
    /// Counter for "neuron seen active", present for each initial member of `unseen_active`.
    p_vars: Vec<Vec<Option<usize>>>,
    /// Counter for "neuron seen inactive", present for each initial member of `unseen_inactive`.
    q_vars: Vec<Vec<Option<usize>>>,
    names: Vec<String>,
    bounds: BoundsTable,
}

pub fn build_stability_milp(
    net: &Network,
    domain: &InputDomain,
    sets: &StabilitySets,
    bounds: &BoundsTable,
) -> Result<StabilityMilp> {
    let widths = net.hidden_widths();
    if sets.num_layers() != widths.len() || bounds.layers().len() != widths.len() {
        return Err(Error::DimensionMismatch {
            expected: widths.len(),
            actual: sets.num_layers().min(bounds.layers().len()),
        });
    }
    let mut enc = encode_network(net, domain, bounds, widths.len(), None)?;
    let mut p_vars: Vec<Vec<Option<usize>>> = widths.iter().map(|&n| vec![None; n]).collect();
    let mut q_vars = p_vars.clone();
    for (l, &n) in widths.iter().enumerate() {
        for i in 0..n {
            let z = enc.neurons[l][i].active;
            if sets.unseen_active[l].contains(&i) {
                let p = enc.add_named_var(0.0, 1.0, 1.0, format!("p{}_{}", l + 1, i));
                enc.lp
                    .add_constraint([(p, 1.0), (z, -1.0)], Relation::Le, 0.0);
                p_vars[l][i] = Some(p);
            }
            if sets.unseen_inactive[l].contains(&i) {
                let q = enc.add_named_var(0.0, 1.0, 1.0, format!("q{}_{}", l + 1, i));
                enc.lp
                    .add_constraint([(q, 1.0), (z, 1.0)], Relation::Le, 1.0);
                q_vars[l][i] = Some(q);
            }
        }
    }
    let model = MilpModel::new(enc.lp, enc.binaries)?;
    Ok(StabilityMilp {
        model,
        input: enc.input,
        neurons: enc.neurons,
        p_vars,
        q_vars,
        names: enc.names,
        bounds: bounds.clone(),
    })
}

impl StabilityMilp {
    pub fn model(&self) -> &MilpModel {
        &self.model
    }

    pub fn input_vars(&self) -> &[usize] {
        &self.input
    }

    pub fn neuron_vars(&self, layer: usize, neuron: usize) -> NeuronVars {
        self.neurons[layer][neuron]
    }

    pub fn p_var(&self, layer: usize, neuron: usize) -> Option<usize> {
        self.p_vars[layer][neuron]
    }

    pub fn q_var(&self, layer: usize, neuron: usize) -> Option<usize> {
        self.q_vars[layer][neuron]
    }

    pub fn bounds_used(&self) -> &BoundsTable {
        &self.bounds
    }

    pub fn var_name(&self, var: usize) -> &str {
        &self.names[var]
    }

    pub fn num_counters(&self) -> usize {
        self.p_vars
            .iter()
            .chain(&self.q_vars)
            .flatten()
            .filter(|v| v.is_some())
            .count()
    }

    pub fn to_lp_format(&self) -> String {
        self.model.to_lp_format(&|j| self.names[j].clone())
    }

    pub fn input_of(&self, values: &[f64]) -> Vec<f64> {
        self.input.iter().map(|&j| values[j]).collect()
    }

    /// Indicator values of a solution, rounded.
    pub fn pattern_of(&self, values: &[f64]) -> Vec<Vec<bool>> {
        self.neurons
            .iter()
            .map(|layer| layer.iter().map(|v| values[v.active] > 0.5).collect())
            .collect()
    }

    /// The integral model solution induced by evaluating the network at `x0`.
    ///
    /// `x0` is first clamped into the box; if the clamped point violates the
    /// sum constraint the candidate is discarded. Counters are set to the
    /// observed state for neurons still in `live` and to zero otherwise.
    pub fn input_to_solution(
        &self,
        net: &Network,
        domain: &InputDomain,
        x0: &[f64],
        live: &StabilitySets,
    ) -> Option<Vec<f64>> {
        if x0.len() != self.input.len() {
            return None;
        }
        let x0 = domain.clamp(x0);
        if !domain.satisfies_sum(&x0, 1e-9) {
            return None;
        }
        let traces = net.forward(&x0).ok()?;
        let mut values = vec![0.0; self.model.lp().num_vars()];
        for (&j, v) in self.input.iter().zip(&x0) {
            values[j] = *v;
        }
        for (l, layer) in self.neurons.iter().enumerate() {
            let trace = &traces[l];
            for (i, vars) in layer.iter().enumerate() {
                let y = trace.pre[i];
                let on = trace.active[i];
                values[vars.pre] = y;
                values[vars.post] = trace.post[i];
                values[vars.neg] = if on { 0.0 } else { -y };
                values[vars.active] = if on { 1.0 } else { 0.0 };
                if let Some(p) = self.p_vars[l][i] {
                    values[p] = if on && live.unseen_active[l].contains(&i) {
                        1.0
                    } else {
                        0.0
                    };
                }
                if let Some(q) = self.q_vars[l][i] {
                    values[q] = if !on && live.unseen_inactive[l].contains(&i) {
                        1.0
                    } else {
                        0.0
                    };
                }
            }
        }
        Some(values)
    }
}
