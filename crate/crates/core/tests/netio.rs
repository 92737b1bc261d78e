mod common;

use proptest::prelude::*;

use stablerelu::netio::{load_network, InputDomain, Layer, Network};

use common::{seeded, small_network, unit_domain};

fn any_weight() -> impl Strategy<Value = f64> {
    prop_oneof![
        prop::num::f64::NORMAL | prop::num::f64::SUBNORMAL | prop::num::f64::ZERO,
        -1.0f64..1.0,
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn json_round_trip_is_bit_exact(
        rows in prop::collection::vec(prop::collection::vec(any_weight(), 3), 1..5),
        out in prop::collection::vec(any_weight(), 1..5),
        bias in any_weight(),
    ) {
        let w = rows.len();
        let out: Vec<f64> = out.into_iter().cycle().take(w).collect();
        let net = Network::new(3, vec![
            Layer::new(rows, vec![bias; w]),
            Layer::new(vec![out], vec![-bias]),
        ]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("net.json");
        net.save(&path).unwrap();
        let back = load_network(&path).unwrap();
        for (a, b) in net.layers().iter().zip(back.layers()) {
            for (ra, rb) in a.weights.iter().zip(&b.weights) {
                prop_assert_eq!(
                    ra.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                    rb.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
                );
            }
            prop_assert_eq!(
                a.bias.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                b.bias.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
            );
        }
    }

    #[test]
    fn hidden_post_is_relu_of_pre(net in small_network(), seed in any::<u64>()) {
        let domain = unit_domain(&net);
        for x in domain.sample(&mut seeded(seed), 100) {
            let traces = net.forward(&x).unwrap();
            let (last, hidden) = traces.split_last().unwrap();
            for t in hidden {
                for (pre, post) in t.pre.iter().zip(&t.post) {
                    prop_assert_eq!(post.to_bits(), pre.max(0.0).to_bits());
                }
            }
            prop_assert_eq!(&last.post, &last.pre);
            prop_assert_eq!(net.eval(&x).unwrap(), last.post.clone());
        }
    }

    #[test]
    fn samples_stay_in_domain(seed in any::<u64>(), hi in 0.5f64..3.0) {
        let d = InputDomain::new(vec![0.0; 3], vec![1.0; 3], Some((0.2, hi))).unwrap();
        for x in d.sample(&mut seeded(seed), 200) {
            prop_assert!(d.contains(&x, 0.0));
        }
        prop_assert!(d.contains(&d.anchor_point(), 1e-12));
    }
}
