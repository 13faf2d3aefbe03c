//! Targeted edge-removal percolation.
//!
//! Edges are ranked by the connectivity of their endpoint pair (every layer
//! instance of a pair shares the pair's score) and removed one at a time,
//! weakest or strongest first, while the largest component of the flattened
//! graph is tracked.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{cmp_scores, MetricConfig, MetricEngine};
use crate::network::{EdgeKey, LabeledEdge, UrbanMultiplexNetwork};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RemovalOrder {
    #[serde(alias = "weak")]
    WeakFirst,
    #[serde(alias = "strong")]
    StrongFirst,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Recompute {
    /// Re-rank the remaining edges after every removal.
    #[default]
    #[serde(alias = "recompute")]
    AfterEachRemoval,
    /// Rank once on the initial network.
    #[serde(alias = "static")]
    StaticRanking,
}

/// Removal order plus re-ranking mode; ties always fall back to canonical
/// `(u, v, layer)` edge order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RemovalStrategy {
    pub order: RemovalOrder,
    #[serde(default)]
    pub recompute: Recompute,
}

impl RemovalStrategy {
    pub fn weak_first() -> Self {
        Self {
            order: RemovalOrder::WeakFirst,
            recompute: Recompute::AfterEachRemoval,
        }
    }

    pub fn strong_first() -> Self {
        Self {
            order: RemovalOrder::StrongFirst,
            recompute: Recompute::AfterEachRemoval,
        }
    }

    pub fn with_recompute(self, recompute: Recompute) -> Self {
        Self { recompute, ..self }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub fraction_removed: f64,
    pub relative_giant: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PercolationCurve {
    pub strategy: RemovalStrategy,
    pub zones: usize,
    pub edges: usize,
    /// One point before any removal, then one per removal.
    pub points: Vec<CurvePoint>,
    pub removal_log: Vec<LabeledEdge>,
}

impl PercolationCurve {
    /// Step-function samples on `n` evenly spaced fractions in `[0, 1]`.
    pub fn resampled(&self, n: usize) -> Vec<CurvePoint> {
        if n < 2 {
            return self.points.first().copied().into_iter().collect();
        }
        let mut out = Vec::with_capacity(n);
        let mut idx = 0;
        for i in 0..n {
            let x = i as f64 / (n - 1) as f64;
            while idx + 1 < self.points.len() && self.points[idx + 1].fraction_removed <= x + 1e-12
            {
                idx += 1;
            }
            out.push(CurvePoint {
                fraction_removed: x,
                relative_giant: self.points[idx].relative_giant,
            });
        }
        out
    }

    pub fn to_csv(&self) -> String {
        points_csv(&self.points)
    }

    pub fn first_disruption(&self, threshold: f64) -> Option<f64> {
        first_disruption(self, threshold)
    }
}

pub fn points_csv(points: &[CurvePoint]) -> String {
    let mut out = String::from("fraction_removed,relative_giant\n");
    for p in points {
        out.push_str(&format!("{},{}\n", p.fraction_removed, p.relative_giant));
    }
    out
}

fn ordered(order: RemovalOrder, a: (f64, EdgeKey), b: (f64, EdgeKey)) -> std::cmp::Ordering {
    let by_score = match order {
        RemovalOrder::WeakFirst => cmp_scores(a.0, b.0),
        RemovalOrder::StrongFirst => cmp_scores(b.0, a.0),
    };
    by_score.then(a.1.cmp(&b.1))
}

fn scored_edges(engine: &MetricEngine<'_>) -> Vec<(f64, EdgeKey)> {
    engine
        .network()
        .edge_map()
        .keys()
        .map(|&k| (engine.connectivity_idx(k.u, k.v), k))
        .collect()
}

/// Edges sorted ascending by pair connectivity, ties in canonical order.
pub fn rank_edges(net: &UrbanMultiplexNetwork, config: MetricConfig) -> Result<Vec<LabeledEdge>> {
    rank_edges_by(net, RemovalOrder::WeakFirst, config)
}

/// Edges in removal order for `order`.
pub fn rank_edges_by(
    net: &UrbanMultiplexNetwork,
    order: RemovalOrder,
    config: MetricConfig,
) -> Result<Vec<LabeledEdge>> {
    if net.edge_count() == 0 {
        return Err(Error::InvalidInput(
            "cannot rank the edges of an edgeless network".into(),
        ));
    }
    let engine = MetricEngine::new(net, config);
    let mut scored = scored_edges(&engine);
    scored.sort_by(|&a, &b| ordered(order, a, b));
    Ok(scored
        .into_iter()
        .map(|(_, k)| net.labeled(k, net.edge_map()[&k]))
        .collect())
}

fn relative_giant(net: &UrbanMultiplexNetwork) -> f64 {
    let giant = net
        .flatten()
        .largest_component_size()
        .expect("networks always have a zone");
    giant as f64 / net.zone_count() as f64
}

/// Removes every edge in strategy order, recording the relative size of the
/// flattened giant component after each removal.
pub fn percolate(
    net: &UrbanMultiplexNetwork,
    strategy: RemovalStrategy,
    config: MetricConfig,
) -> Result<PercolationCurve> {
    let total = net.edge_count();
    if total == 0 {
        return Err(Error::InvalidInput(
            "cannot percolate an edgeless network".into(),
        ));
    }
    let mut work = net.clone();
    let mut points = vec![CurvePoint {
        fraction_removed: 0.0,
        relative_giant: relative_giant(&work),
    }];
    let mut removal_log = Vec::with_capacity(total);

    let mut static_order = match strategy.recompute {
        Recompute::StaticRanking => {
            let engine = MetricEngine::new(net, config);
            let mut scored = scored_edges(&engine);
            scored.sort_by(|&a, &b| ordered(strategy.order, a, b));
            Some(scored.into_iter().map(|(_, k)| k))
        }
        Recompute::AfterEachRemoval => None,
    };

    for step in 1..=total {
        let key = match static_order.as_mut() {
            Some(iter) => iter.next().expect("one ranked edge per step"),
            None => {
                let engine = MetricEngine::new(&work, config);
                scored_edges(&engine)
                    .into_iter()
                    .min_by(|&a, &b| ordered(strategy.order, a, b))
                    .expect("edges remain while steps remain")
                    .1
            }
        };
        let weight = work.remove_key(key).expect("ranked edge is present");
        removal_log.push(work.labeled(key, weight));
        points.push(CurvePoint {
            fraction_removed: step as f64 / total as f64,
            relative_giant: relative_giant(&work),
        });
    }

    Ok(PercolationCurve {
        strategy,
        zones: net.zone_count(),
        edges: total,
        points,
        removal_log,
    })
}

/// Smallest removed fraction at which the relative giant component falls
/// below `1 − threshold`. Thresholds outside `(0, 1)` never trigger.
pub fn first_disruption(curve: &PercolationCurve, threshold: f64) -> Option<f64> {
    if !(threshold > 0.0 && threshold < 1.0) {
        return None;
    }
    let limit = 1.0 - threshold;
    curve
        .points
        .iter()
        .find(|p| p.relative_giant < limit)
        .map(|p| p.fraction_removed)
}
