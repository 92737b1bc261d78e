//! Exhaustive activation-pattern enumeration, used to validate ISA.
//!
//! With every indicator fixed, each hidden output is an affine function of
//! the input, so a pattern is attainable iff a single LP over the input
//! alone is feasible. Patterns are enumerated depth first, neuron by neuron,
//! and a prefix whose sign constraints are already infeasible is pruned.

use crate::bounds::{NeuronState, StabilityLabels};
use crate::error::{Error, Result};
use crate::netio::{InputDomain, Network};
use crate::optcore::{solve_lp, LinearProgram, LpStatus, Relation};

pub const ORACLE_MAX_NEURONS: usize = 20;

#[derive(Debug, Clone)]
pub struct OracleResult {
    pub labels: StabilityLabels,
    /// Full activation patterns found attainable.
    pub feasible_patterns: usize,
    pub lp_checks: usize,
}

/// Affine function of the input: `coeffs . x0 + constant`.
#[derive(Debug, Clone)]
struct Affine {
    coeffs: Vec<f64>,
    constant: f64,
}

struct Enumerator<'a> {
    net: &'a Network,
    base: LinearProgram,
    widths: Vec<usize>,
    /// Sign constraints of the current prefix, as (affine, z).
    prefix: Vec<(Affine, bool)>,
    seen_active: Vec<Vec<bool>>,
    seen_inactive: Vec<Vec<bool>>,
    feasible_patterns: usize,
    lp_checks: usize,
}

pub fn brute_force_oracle(net: &Network, domain: &InputDomain) -> Result<OracleResult> {
    let n = net.num_hidden_neurons();
    if n > ORACLE_MAX_NEURONS {
        return Err(Error::TooLarge {
            neurons: n,
            limit: ORACLE_MAX_NEURONS,
        });
    }
    if domain.dim() != net.input_dim() {
        return Err(Error::DimensionMismatch {
            expected: net.input_dim(),
            actual: domain.dim(),
        });
    }
    let mut base = LinearProgram::new();
    for (lo, hi) in domain.lower().iter().zip(domain.upper()) {
        base.add_var(*lo, *hi, 0.0);
    }
    if let Some((s_lo, s_hi)) = domain.sum_bounds() {
        let terms: Vec<_> = (0..domain.dim()).map(|j| (j, 1.0)).collect();
        base.add_constraint(terms.clone(), Relation::Ge, s_lo);
        base.add_constraint(terms, Relation::Le, s_hi);
    }
    let widths = net.hidden_widths();
    let unseen: Vec<Vec<bool>> = widths.iter().map(|&w| vec![false; w]).collect();
    let mut e = Enumerator {
        net,
        base,
        widths,
        prefix: Vec::with_capacity(n),
        seen_active: unseen.clone(),
        seen_inactive: unseen,
        feasible_patterns: 0,
        lp_checks: 0,
    };
    let identity: Vec<Affine> = (0..net.input_dim())
        .map(|j| {
            let mut coeffs = vec![0.0; net.input_dim()];
            coeffs[j] = 1.0;
            Affine {
                coeffs,
                constant: 0.0,
            }
        })
        .collect();
    if e.prefix_feasible()? {
        e.descend(0, 0, &identity, &mut Vec::new())?;
    }

    let labels = (0..e.widths.len())
        .map(|l| {
            (0..e.widths[l])
                .map(|i| match (e.seen_active[l][i], e.seen_inactive[l][i]) {
                    (false, true) => Some(NeuronState::Inactive),
                    (true, false) => Some(NeuronState::Active),
                    _ => None,
                })
                .collect()
        })
        .collect();
    Ok(OracleResult {
        labels,
        feasible_patterns: e.feasible_patterns,
        lp_checks: e.lp_checks,
    })
}

impl Enumerator<'_> {
    /// Decides neuron `i` of hidden layer `l`. `inputs` are the previous
    /// layer's outputs; `outputs` collects this layer's outputs so far.
    fn descend(
        &mut self,
        l: usize,
        i: usize,
        inputs: &[Affine],
        outputs: &mut Vec<Affine>,
    ) -> Result<()> {
        if l == self.widths.len() {
            self.feasible_patterns += 1;
            let mut k = 0;
            for (layer, &w) in self.widths.iter().enumerate() {
                for n in 0..w {
                    let on = self.prefix[k].1;
                    if on {
                        self.seen_active[layer][n] = true;
                    } else {
                        self.seen_inactive[layer][n] = true;
                    }
                    k += 1;
                }
            }
            return Ok(());
        }
        if i == self.widths[l] {
            let next = std::mem::take(outputs);
            let result = self.descend(l + 1, 0, &next, &mut Vec::new());
            *outputs = next;
            return result;
        }

        let layer = &self.net.hidden_layers()[l];
        let dim = self.net.input_dim();
        let mut pre = Affine {
            coeffs: vec![0.0; dim],
            constant: layer.bias[i],
        };
        for (w, a) in layer.weights[i].iter().zip(inputs) {
            for (c, ac) in pre.coeffs.iter_mut().zip(&a.coeffs) {
                *c += w * ac;
            }
            pre.constant += w * a.constant;
        }

        for on in [false, true] {
            self.prefix.push((pre.clone(), on));
            if self.prefix_feasible()? {
                outputs.push(if on {
                    pre.clone()
                } else {
                    Affine {
                        coeffs: vec![0.0; dim],
                        constant: 0.0,
                    }
                });
                self.descend(l, i + 1, inputs, outputs)?;
                outputs.pop();
            }
            self.prefix.pop();
        }
        Ok(())
    }

    fn prefix_feasible(&mut self) -> Result<bool> {
        let mut lp = self.base.clone();
        for (a, on) in &self.prefix {
            let terms: Vec<_> = a.coeffs.iter().copied().enumerate().collect();
            let rel = if *on { Relation::Ge } else { Relation::Le };
            lp.add_constraint(terms, rel, -a.constant);
        }
        self.lp_checks += 1;
        Ok(solve_lp(&lp)?.status == LpStatus::Optimal)
    }
}
