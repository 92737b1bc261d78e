#![allow(dead_code)]

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use stablerelu::netio::{InputDomain, Layer, Network};

/// Network with the given layer dimensions, weights and biases uniform in
/// `[-1, 1]` and hidden biases shifted by `shift`.
pub fn random_network(rng: &mut impl Rng, dims: &[usize], shift: f64) -> Network {
    let last = dims.len() - 2;
    let layers = dims
        .windows(2)
        .enumerate()
        .map(|(l, d)| {
            let weights = (0..d[1])
                .map(|_| (0..d[0]).map(|_| rng.random_range(-1.0..1.0)).collect())
                .collect();
            let s = if l < last { shift } else { 0.0 };
            let bias = (0..d[1]).map(|_| rng.random_range(-1.0..1.0) + s).collect();
            Layer::new(weights, bias)
        })
        .collect();
    Network::new(dims[0], layers).unwrap()
}

pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small fully connected networks: 1 to 3 inputs, 1 or 2 hidden layers of
/// width 1 to 4, one output, hidden biases shifted by -1, 0 or 1.
pub fn small_network() -> impl Strategy<Value = Network> {
    (
        1usize..=3,
        prop::collection::vec(1usize..=4, 1..=2),
        prop::sample::select(vec![-1.0, 0.0, 1.0]),
        any::<u64>(),
    )
        .prop_map(|(input, widths, shift, seed)| {
            let mut dims = vec![input];
            dims.extend(widths);
            dims.push(1);
            random_network(&mut seeded(seed), &dims, shift)
        })
}

pub fn unit_domain(net: &Network) -> InputDomain {
    InputDomain::unit_box(net.input_dim())
}
