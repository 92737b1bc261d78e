use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::netio::{InputDomain, Network};

/// Box corners are checked in addition to random samples up to this dimension.
pub const MAX_VERTEX_DIM: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceCheck {
    /// Largest `max_k |f_a(x)_k - f_b(x)_k|` over all points checked.
    pub max_residual: f64,
    pub points: usize,
}

/// Compares two networks on `n_samples` seeded domain samples plus every
/// feasible box vertex when the input dimension is small.
pub fn verify_equivalence(
    a: &Network,
    b: &Network,
    domain: &InputDomain,
    n_samples: usize,
    seed: u64,
) -> Result<EquivalenceCheck> {
    if a.input_dim() != b.input_dim() || a.input_dim() != domain.dim() {
        return Err(Error::DimensionMismatch {
            expected: a.input_dim(),
            actual: if a.input_dim() != b.input_dim() {
                b.input_dim()
            } else {
                domain.dim()
            },
        });
    }
    if a.output_dim() != b.output_dim() {
        return Err(Error::DimensionMismatch {
            expected: a.output_dim(),
            actual: b.output_dim(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = domain.sample(&mut rng, n_samples);
    points.extend(domain.vertices(MAX_VERTEX_DIM).unwrap_or_default());
    let mut max_residual = 0.0f64;
    for x in &points {
        let (ya, yb) = (a.eval(x)?, b.eval(x)?);
        for (u, v) in ya.iter().zip(&yb) {
            max_residual = max_residual.max((u - v).abs());
        }
    }
    Ok(EquivalenceCheck {
        max_residual,
        points: points.len(),
    })
}
