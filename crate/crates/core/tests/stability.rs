mod common;

use proptest::prelude::*;

use stablerelu::bounds::{classify_by_bounds, compute_bounds, NeuronState};
use stablerelu::netio::{Dataset, InputDomain, Network};
use stablerelu::stability::{
    brute_force_oracle, build_stability_milp, preprocess_with_witnesses, run_baseline, run_isa,
    IsaConfig, IsaMode, StabilitySets,
};

use common::{random_network, seeded, small_network, unit_domain};

fn isa(
    net: &Network,
    domain: &InputDomain,
    data: &Dataset,
    mode: IsaMode,
) -> stablerelu::stability::IsaResult {
    let config = IsaConfig {
        mode,
        ..Default::default()
    };
    run_isa(net, domain, data, &config).unwrap()
}

fn check_trace(r: &stablerelu::stability::IsaResult) -> Result<(), TestCaseError> {
    let start = r.preprocessed.unobserved_count();
    let mut prev = start;
    for ev in &r.trace {
        prop_assert!(
            ev.remaining <= prev,
            "|P|+|Q| grew from {} to {}",
            prev,
            ev.remaining
        );
        if ev.objective > 0.5 {
            prop_assert!(ev.revealed > 0 && ev.remaining < prev);
        }
        prev = ev.remaining;
    }
    prop_assert_eq!(r.completion_failures, 0);
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn isa_matches_oracle(net in small_network()) {
        let domain = unit_domain(&net);
        let oracle = brute_force_oracle(&net, &domain).unwrap();
        for mode in [IsaMode::SingleCall, IsaMode::Sequential] {
            let r = isa(&net, &domain, &Dataset::empty(), mode);
            prop_assert!(r.certified);
            prop_assert_eq!(&r.labels(), &oracle.labels, "mode {:?}", mode);
            check_trace(&r)?;
            if mode == IsaMode::Sequential {
                prop_assert!(r.solve_calls <= net.num_hidden_neurons() + 1);
            }
        }
    }

    #[test]
    fn dataset_does_not_change_answer(net in small_network(), seed in any::<u64>()) {
        let domain = unit_domain(&net);
        let rows = domain.sample(&mut seeded(seed), 32);
        let data = Dataset::new(rows, &domain).unwrap();
        let oracle = brute_force_oracle(&net, &domain).unwrap();
        let r = isa(&net, &domain, &data, IsaMode::SingleCall);
        prop_assert!(r.certified);
        prop_assert_eq!(r.labels(), oracle.labels);
        check_trace(&r)?;
    }

    #[test]
    fn bounds_never_contradict_oracle(net in small_network()) {
        let domain = unit_domain(&net);
        let oracle = brute_force_oracle(&net, &domain).unwrap();
        let by_bounds = classify_by_bounds(&compute_bounds(&net, &domain).unwrap());
        for (bl, ol) in by_bounds.iter().zip(&oracle.labels) {
            for (b, o) in bl.iter().zip(ol) {
                if b.is_some() {
                    prop_assert_eq!(b, o);
                }
            }
        }
    }

    #[test]
    fn bounds_shrink_with_box(net in small_network(), seed in any::<u64>()) {
        let domain = unit_domain(&net);
        let mut rng = seeded(seed);
        let (a, b) = (domain.sample(&mut rng, 1).remove(0), domain.sample(&mut rng, 1).remove(0));
        let lo: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.min(*y)).collect();
        let hi: Vec<f64> = a.iter().zip(&b).map(|(x, y)| x.max(*y)).collect();
        let inner = InputDomain::new(lo, hi, None).unwrap();
        let outer = compute_bounds(&net, &domain).unwrap();
        let inner = compute_bounds(&net, &inner).unwrap();
        for (ol, il) in outer.layers().iter().zip(inner.layers()) {
            for (o, i) in ol.iter().zip(il) {
                prop_assert!(i.lo >= o.lo - 1e-12 && i.hi <= o.hi + 1e-12);
            }
        }
    }

    #[test]
    fn pattern_matches_model_solution(net in small_network(), seed in any::<u64>()) {
        let domain = unit_domain(&net);
        let bounds = compute_bounds(&net, &domain).unwrap();
        let sets = StabilitySets::unobserved(&net.hidden_widths());
        let milp = build_stability_milp(&net, &domain, &sets, &bounds).unwrap();
        for x in domain.sample(&mut seeded(seed), 50) {
            let sol = milp.input_to_solution(&net, &domain, &x, &sets).unwrap();
            prop_assert_eq!(milp.pattern_of(&sol), net.activation_pattern(&x).unwrap());
            prop_assert!(milp.model().lp().max_violation(&sol) <= 1e-6);
        }
    }

    #[test]
    fn preprocessing_keeps_witnesses(net in small_network(), seed in any::<u64>()) {
        let domain = unit_domain(&net);
        let data = Dataset::new(domain.sample(&mut seeded(seed), 64), &domain).unwrap();
        let (sets, w) = preprocess_with_witnesses(&net, &data).unwrap();
        for (l, &n) in net.hidden_widths().iter().enumerate() {
            for i in 0..n {
                match w.first_active[l][i] {
                    Some(r) => {
                        prop_assert!(!sets.unseen_active[l].contains(&i));
                        prop_assert!(net.activation_pattern(&data.rows()[r]).unwrap()[l][i]);
                    }
                    None => prop_assert!(sets.unseen_active[l].contains(&i)),
                }
                match w.first_inactive[l][i] {
                    Some(r) => {
                        prop_assert!(!sets.unseen_inactive[l].contains(&i));
                        prop_assert!(!net.activation_pattern(&data.rows()[r]).unwrap()[l][i]);
                    }
                    None => prop_assert!(sets.unseen_inactive[l].contains(&i)),
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn baseline_agrees_with_isa(net in small_network()) {
        let domain = unit_domain(&net);
        let base = run_baseline(&net, &domain, None).unwrap();
        let r = isa(&net, &domain, &Dataset::empty(), IsaMode::SingleCall);
        prop_assert_eq!(base.milp_solves, 2 * net.num_hidden_neurons());
        let labels = r.labels();
        for (l, layer) in base.ranges.iter().enumerate() {
            for (i, range) in layer.iter().enumerate() {
                let (lo, hi) = (range.lo.unwrap(), range.hi.unwrap());
                // Both classifiers read a range endpoint at exactly 0 differently.
                if lo.abs() < 1e-7 || hi.abs() < 1e-7 {
                    continue;
                }
                prop_assert_eq!(base.labels[l][i], labels[l][i], "neuron ({}, {}) range [{}, {}]", l, i, lo, hi);
            }
        }
    }
}

#[test]
fn certified_sets_hold_on_samples() {
    for seed in 0..12 {
        let shift = [-1.0, 0.0, 1.0][seed as usize % 3];
        let net = random_network(&mut seeded(seed), &[3, 5, 4, 1], shift);
        let domain = InputDomain::unit_box(3);
        let r = isa(&net, &domain, &Dataset::empty(), IsaMode::SingleCall);
        assert!(r.certified);
        for x in domain.sample(&mut seeded(1000 + seed), 10_000) {
            let pattern = net.activation_pattern(&x).unwrap();
            for (l, layer) in pattern.iter().enumerate() {
                for &i in &r.stable_inactive[l] {
                    assert!(!layer[i], "seed {seed}: ({l}, {i}) active at {x:?}");
                }
                for &i in &r.stable_active[l] {
                    assert!(layer[i], "seed {seed}: ({l}, {i}) inactive at {x:?}");
                }
            }
        }
    }
}

#[test]
fn bounds_contain_sampled_traces() {
    for seed in 0..12 {
        let net = random_network(&mut seeded(seed), &[2, 6, 6, 2], 0.5);
        let domain = InputDomain::unit_box(2);
        let bounds = compute_bounds(&net, &domain).unwrap();
        for x in domain.sample(&mut seeded(seed + 77), 10_000) {
            let traces = net.forward(&x).unwrap();
            for (l, layer) in bounds.layers().iter().enumerate() {
                for (i, b) in layer.iter().enumerate() {
                    let y = traces[l].pre[i];
                    assert!(b.contains(y, 1e-9));
                    assert!(traces[l].post[i] <= b.big_m + 1e-9);
                    assert!((-y).max(0.0) <= b.big_mu + 1e-9);
                }
            }
        }
    }
}

#[test]
fn sum_constraint_adds_stability() {
    // y = x1 + x2 - 1.5 can only be active when x1 + x2 > 1.5.
    let net = Network::new(
        2,
        vec![
            stablerelu::netio::Layer::new(vec![vec![1.0, 1.0]], vec![-1.5]),
            stablerelu::netio::Layer::new(vec![vec![1.0]], vec![0.0]),
        ],
    )
    .unwrap();
    let boxed = InputDomain::unit_box(2);
    let summed = boxed.with_sum_bounds(Some((0.0, 1.0))).unwrap();
    let free = isa(&net, &boxed, &Dataset::empty(), IsaMode::SingleCall);
    assert_eq!(free.labels(), vec![vec![None]]);
    let tight = isa(&net, &summed, &Dataset::empty(), IsaMode::SingleCall);
    assert_eq!(tight.labels(), vec![vec![Some(NeuronState::Inactive)]]);
    let ignored = run_isa(
        &net,
        &summed,
        &Dataset::empty(),
        &IsaConfig {
            use_sum_constraint: false,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(ignored.labels(), vec![vec![None]]);
}
