mod common;

use common::{close, configs, to_core};
use proptest::prelude::*;
use umn_core::percolation::percolate;
use umn_core::{MetricConfig, MetricEngine, RemovalStrategy, ZoneId};
use umn_oracle::gen::{self, Rng};
use umn_oracle::Multiplex;

const REL: f64 = 1e-9;

fn check_metrics(net: &Multiplex) -> Result<(), TestCaseError> {
    let core = to_core(net);
    for (cfg, ocfg) in configs() {
        let engine = MetricEngine::new(&core, cfg);
        for (i, a) in net.zones.iter().enumerate() {
            let za = ZoneId::from(a.as_str());
            for l in &net.layers {
                let got = engine.layer_relevance(&za, &l.as_str().into()).unwrap();
                prop_assert!(close(got, net.relevance(a, l), REL), "LR({a},{l})");
            }
            for b in &net.zones[i + 1..] {
                let zb = ZoneId::from(b.as_str());
                for l in &net.layers {
                    let ll = l.as_str().into();
                    let h = engine.connection_intensity(&za, &zb, &ll).unwrap();
                    prop_assert!(
                        close(h, net.intensity(a, b, l, ocfg), REL),
                        "h({a},{b},{l})"
                    );
                    if net.edge(a, b, l).is_some() {
                        let r = engine.connection_redundancy(&za, &zb, &ll).unwrap();
                        prop_assert!(close(r, net.redundancy(a, b, l), REL), "r({a},{b},{l})");
                    }
                }
                let c = engine.global_connectivity(&za, &zb).unwrap();
                prop_assert!(close(c, net.connectivity(a, b, ocfg), REL), "c({a},{b})");
            }
            let heel = engine.heelness(&za).unwrap();
            let (expected, _) = net.heelness(a, ocfg);
            prop_assert!(
                close(heel.value, expected, REL),
                "H({a}) {} vs {expected}",
                heel.value
            );
        }
        let got = engine.achilles_heel().map(|h| h.zone.as_str().to_owned());
        let want = net.achilles_heel(ocfg).map(|(z, _)| z);
        prop_assert_eq!(got, want);
    }
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn metrics_match_oracle(seed in any::<u64>(), integral in any::<bool>(), density in 0.2f64..0.9) {
        let net = gen::random(&mut Rng::new(seed), 5, 3, density, integral);
        check_metrics(&net)?;
    }

    #[test]
    fn percolation_matches_oracle(seed in any::<u64>(), weakest in any::<bool>()) {
        let net = gen::random(&mut Rng::new(seed), 5, 3, 0.5, true);
        prop_assume!(!net.edges.is_empty());
        let core = to_core(&net);
        let strategy = if weakest { RemovalStrategy::weak_first() } else { RemovalStrategy::strong_first() };
        let curve = percolate(&core, strategy, MetricConfig::default()).unwrap();
        let (points, log) = net.percolate(weakest, Default::default());
        let got: Vec<(f64, f64)> = curve.points.iter().map(|p| (p.fraction_removed, p.relative_giant)).collect();
        prop_assert_eq!(got, points);
        let got_log: Vec<(String, String, String)> = curve
            .removal_log
            .iter()
            .map(|e| (e.u.to_string(), e.v.to_string(), e.layer.to_string()))
            .collect();
        prop_assert_eq!(got_log, log);
    }
}

#[test]
fn every_small_topology_matches_oracle() {
    let mut rng = Rng::new(7);
    for zones in 2..=3 {
        for layers in 1..=3 {
            for net in gen::all_topologies(zones, layers, || gen::weight(&mut rng, true)) {
                check_metrics(&net).unwrap();
            }
        }
    }
}
