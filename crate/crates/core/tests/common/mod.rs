#![allow(dead_code)]

use umn_core::{LabeledEdge, MetricConfig, UrbanMultiplexNetwork, WeightMode};
use umn_oracle::{Config, Multiplex};

pub fn to_core(net: &Multiplex) -> UrbanMultiplexNetwork {
    UrbanMultiplexNetwork::new(
        net.zones.iter().map(|z| z.as_str().into()),
        net.layers.iter().map(|l| l.as_str().into()),
        net.edges
            .iter()
            .map(|e| LabeledEdge::new(e.u.as_str(), e.v.as_str(), e.layer.as_str(), e.weight)),
    )
    .expect("generated networks are well formed")
}

pub fn configs() -> [(MetricConfig, Config); 2] {
    let count = MetricConfig::default();
    let share = MetricConfig {
        weight_mode: WeightMode::Share,
        ..count
    };
    [
        (count, Config::default()),
        (
            share,
            Config {
                share: true,
                ..Config::default()
            },
        ),
    ]
}

/// Relative closeness; values both within 1e-300 of zero count as equal.
pub fn close(a: f64, b: f64, rel: f64) -> bool {
    a == b || (a - b).abs() <= rel * a.abs().max(b.abs())
}
