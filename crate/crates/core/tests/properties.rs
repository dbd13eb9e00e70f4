use glauber_core::learner::{edge_statistic, window_count, WindowIndex};
use glauber_core::model::min_update_prob;
use glauber_core::oracle::{context_assignments, edge_identity_residual};
use glauber_core::{simulate_ct, Couplings, Graph, IsingModel, ParamBounds, RngSeed, SpinConfig};
use proptest::prelude::*;

/// Random model on up to six nodes. `sign` fixes every coupling's sign when
/// given; otherwise signs are drawn per edge.
fn model(sign: Option<f64>) -> impl Strategy<Value = IsingModel> {
    (2usize..7)
        .prop_flat_map(|p| {
            let pairs = p * (p - 1) / 2;
            (
                Just(p),
                prop::collection::vec(any::<bool>(), pairs),
                prop::collection::vec((0.1f64..1.5, any::<bool>()), pairs),
            )
        })
        .prop_map(move |(p, keep, thetas)| {
            let pairs = (0..p).flat_map(|i| (i + 1..p).map(move |j| (i, j)));
            let mut edges = Vec::new();
            let mut couplings = Couplings::new();
            for (((i, j), keep), (mag, neg)) in pairs.zip(keep).zip(thetas) {
                if keep {
                    let s = sign.unwrap_or(if neg { -1.0 } else { 1.0 });
                    edges.push((i, j));
                    couplings.insert(i, j, s * mag);
                }
            }
            let graph = Graph::new(p, edges).unwrap();
            let mags: Vec<f64> = couplings.iter().map(|(_, t)| t.abs()).collect();
            let alpha = mags.iter().copied().reduce(f64::min).unwrap_or(1.0);
            let beta = mags.iter().copied().reduce(f64::max).unwrap_or(1.0);
            let d = graph.max_degree().max(1);
            IsingModel::new(graph, couplings, ParamBounds::new(alpha, beta, d)).unwrap()
        })
}

fn with_config(sign: Option<f64>) -> impl Strategy<Value = (IsingModel, SpinConfig)> {
    model(sign).prop_flat_map(|m| {
        let p = m.p();
        (Just(m), prop::collection::vec(prop::bool::ANY, p)).prop_map(|(m, bits)| {
            (
                m,
                SpinConfig::new(bits.into_iter().map(|b| if b { 1 } else { -1 }).collect())
                    .unwrap(),
            )
        })
    })
}

fn negated(x: &SpinConfig) -> SpinConfig {
    SpinConfig::new(x.spins().iter().map(|&s| -s).collect()).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn update_probabilities_are_complementary_and_floored((m, x) in with_config(None)) {
        let b = m.bounds();
        let floor = min_update_prob(b.beta, b.d);
        for i in 0..m.p() {
            let plus = m.update_prob_plus(&x, i).unwrap();
            let minus = m.update_prob_minus(&x, i).unwrap();
            prop_assert!((plus + minus - 1.0).abs() <= 1e-15);
            prop_assert!(plus >= floor * (1.0 - 1e-12) && minus >= floor * (1.0 - 1e-12));
        }
    }

    #[test]
    fn update_depends_only_on_neighbors((m, x) in with_config(None), k in 0usize..6) {
        let k = k % m.p();
        let mut y = x.clone();
        y.flip(k);
        for i in (0..m.p()).filter(|&i| i != k && !m.graph().has_edge(i, k)) {
            prop_assert_eq!(m.update_prob_plus(&x, i).unwrap(), m.update_prob_plus(&y, i).unwrap());
        }
    }

    #[test]
    fn global_flip_swaps_outcomes((m, x) in with_config(None)) {
        let y = negated(&x);
        for i in 0..m.p() {
            let a = m.update_prob_plus(&x, i).unwrap();
            let b = m.update_prob_minus(&y, i).unwrap();
            prop_assert!((a - b).abs() <= 1e-15 * a.max(b).max(1e-300) + f64::MIN_POSITIVE);
        }
    }

    #[test]
    fn ferromagnetic_updates_are_monotone((m, x) in with_config(Some(1.0))) {
        for i in 0..m.p() {
            for &j in m.graph().neighbors(i) {
                let mut lo = x.clone();
                lo.set(j, -1);
                let mut hi = x.clone();
                hi.set(j, 1);
                prop_assert!(m.update_prob_plus(&hi, i).unwrap() > m.update_prob_plus(&lo, i).unwrap());
            }
        }
    }

    #[test]
    fn edge_identity_holds_for_every_pair(m in model(None), i in 0usize..6, j in 0usize..6) {
        let (i, j) = (i % m.p(), j % m.p());
        prop_assume!(i != j);
        for x in context_assignments(&m, i, j) {
            prop_assert!(edge_identity_residual(&m, i, j, &x).unwrap() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn window_index_matches_direct_statistic(
        m in model(None),
        seed in any::<u64>(),
        window in prop::sample::select(vec![0.3, 1.0, 2.0]),
        horizon in 5.0f64..60.0,
    ) {
        let trace = simulate_ct(&m, &SpinConfig::all_plus(m.p()), horizon, RngSeed::new(seed)).unwrap();
        let index = WindowIndex::build(&trace, window).unwrap();
        let k_max = window_count(horizon, window).unwrap();
        prop_assert_eq!(index.k_max(), k_max);
        for i in 0..m.p() {
            for j in (0..m.p()).filter(|&j| j != i) {
                let direct: i64 = (1..=k_max)
                    .map(|k| i64::from(edge_statistic(&trace, i, j, k, window).unwrap()))
                    .sum();
                prop_assert_eq!(index.pair_mean(i, j), direct as f64 / k_max as f64);
            }
        }
    }
}
