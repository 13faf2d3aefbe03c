mod common;

use common::{close, to_core};
use proptest::prelude::*;
use umn_core::percolation::{percolate, rank_edges};
use umn_core::{
    Dataset, MetricConfig, MetricEngine, Recompute, RemovalStrategy, UrbanMultiplexNetwork, ZoneId,
};
use umn_oracle::gen::{self, Rng};

fn pairs(net: &UrbanMultiplexNetwork) -> Vec<(&ZoneId, &ZoneId)> {
    let z = net.zones();
    z.iter()
        .flat_map(|u| z.iter().filter(move |v| *v != u).map(move |v| (u, v)))
        .collect()
}

fn net(seed: u64, integral: bool) -> UrbanMultiplexNetwork {
    to_core(&gen::random(&mut Rng::new(seed), 6, 3, 0.5, integral))
}

proptest! {
    #[test]
    fn intensity_and_connectivity_are_symmetric(seed in any::<u64>()) {
        let net = net(seed, false);
        let engine = MetricEngine::new(&net, MetricConfig::default());
        for (u, v) in pairs(&net) {
            let c = engine.global_connectivity(u, v).unwrap();
            prop_assert_eq!(c, engine.global_connectivity(v, u).unwrap());
            for l in net.layers() {
                prop_assert_eq!(
                    engine.connection_intensity(u, v, l).unwrap(),
                    engine.connection_intensity(v, u, l).unwrap()
                );
            }
        }
    }

    #[test]
    fn bounded_scores(seed in any::<u64>()) {
        let net = net(seed, false);
        let engine = MetricEngine::new(&net, MetricConfig::default());
        for u in net.zones() {
            for l in net.layers() {
                let lr = engine.layer_relevance(u, l).unwrap();
                prop_assert!((0.0..=1.0).contains(&lr));
            }
            prop_assert!(engine.heelness(u).unwrap().value >= 0.0);
        }
        for (u, v) in pairs(&net) {
            prop_assert!(engine.global_connectivity(u, v).unwrap() >= 0.0);
            for l in net.layers() {
                let r = engine.connection_redundancy(u, v, l).unwrap();
                prop_assert!((0.0..=1.0).contains(&r), "r = {r}");
                prop_assert!(engine.connection_intensity(u, v, l).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn single_layer_connectivity_equals_intensity(seed in any::<u64>()) {
        let net = to_core(&gen::random(&mut Rng::new(seed), 6, 1, 0.6, true));
        let engine = MetricEngine::new(&net, MetricConfig::default());
        let layer = &net.layers()[0];
        for (u, v) in pairs(&net) {
            prop_assert_eq!(
                engine.global_connectivity(u, v).unwrap(),
                engine.connection_intensity(u, v, layer).unwrap()
            );
        }
    }

    #[test]
    fn scaling_weights_scales_intensity_only(seed in any::<u64>(), k in 1u32..10) {
        let raw = gen::random(&mut Rng::new(seed), 5, 3, 0.5, true);
        let (a, b) = (to_core(&raw), to_core(&gen::scaled(&raw, k as f64)));
        let (ea, eb) = (MetricEngine::new(&a, MetricConfig::default()), MetricEngine::new(&b, MetricConfig::default()));
        for u in a.zones() {
            for l in a.layers() {
                prop_assert_eq!(ea.layer_relevance(u, l).unwrap(), eb.layer_relevance(u, l).unwrap());
            }
        }
        for (u, v) in pairs(&a) {
            let (ca, cb) = (ea.global_connectivity(u, v).unwrap(), eb.global_connectivity(u, v).unwrap());
            prop_assert!(close(ca * k as f64, cb, 1e-12));
        }
        prop_assert_eq!(rank_edges(&a, MetricConfig::default()).ok(), rank_edges(&b, MetricConfig::default()).ok()
            .map(|v| v.into_iter().map(|mut e| { e.weight /= k as f64; e }).collect()));
    }

    #[test]
    fn removing_an_edge_never_raises_reachability(seed in any::<u64>(), pick in any::<prop::sample::Index>()) {
        let net = net(seed, true);
        let edges: Vec<_> = net.edges().collect();
        prop_assume!(!edges.is_empty());
        let e = pick.get(&edges);
        let after = net.remove_edge(&e.u, &e.v, &e.layer).unwrap();
        let all = net.layers().iter().cloned().collect();
        for z in net.zones() {
            prop_assert!(after.reachable_count(z, &all).unwrap() <= net.reachable_count(z, &all).unwrap());
        }
    }

    #[test]
    fn percolation_curves_fall_to_singletons(seed in any::<u64>(), weak in any::<bool>(), recompute in any::<bool>()) {
        let net = net(seed, true);
        prop_assume!(net.edge_count() > 0);
        let mut strategy = if weak { RemovalStrategy::weak_first() } else { RemovalStrategy::strong_first() };
        if !recompute {
            strategy = strategy.with_recompute(Recompute::StaticRanking);
        }
        let curve = percolate(&net, strategy, MetricConfig::default()).unwrap();
        prop_assert_eq!(curve.points.len(), net.edge_count() + 1);
        prop_assert!(curve.points.windows(2).all(|w| w[1].relative_giant <= w[0].relative_giant));
        let last = curve.points.last().unwrap();
        prop_assert_eq!(last.fraction_removed, 1.0);
        prop_assert!(close(last.relative_giant, 1.0 / net.zone_count() as f64, 1e-15));
    }

    #[test]
    fn documents_round_trip(seed in any::<u64>()) {
        let net = net(seed, false);
        let ds = Dataset::from_network(net.clone());
        let back: Dataset = serde_json::from_str(&ds.to_json()).unwrap();
        prop_assert_eq!(back.network.fingerprint(), net.fingerprint());
        let snap = MetricEngine::new(&net, MetricConfig::default()).snapshot();
        let again = MetricEngine::new(&back.network, MetricConfig::default()).snapshot();
        prop_assert_eq!(serde_json::to_string(&snap).unwrap(), serde_json::to_string(&again).unwrap());
    }
}
