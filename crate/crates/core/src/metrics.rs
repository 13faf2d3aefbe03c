//! Connectivity and Heel-ness metrics over an urban multiplex network.
//!
//! * connection intensity `h_l(u,v) = ŵ_l(u,v) · |Γ_l(u) ∩ Γ_l(v)| / min(|Γ_l(u)|, |Γ_l(v)|)`
//! * layer relevance `LR(u,l) = 1 − N_r(u, L∖{l}) / N_r(u, L)`
//! * connection redundancy `r_l(u,v) = (1 − LR(u,l)) (1 − LR(v,l)) Σ_m A[u][v][m] / |L|`
//! * global connectivity `c(u,v) = Σ_l h_l(u,v) (1 + r_l(u,v))`
//! * Heel-ness `H(u)`: zones cut off from `u` by removing its weakest tie on a
//!   layer, over its minimum neighbour connectivity, maximised over layers.
//!
//! Undefined ratios resolve to zero: an empty neighbourhood gives `h = 0`, an
//! isolated zone gives `LR = 0`, and a zero minimum connectivity is clamped to
//! `epsilon`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::OnceLock;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::network::{EdgeKey, LabeledEdge, LayerId, UrbanMultiplexNetwork, ZoneId};

pub const DEFAULT_EPSILON: f64 = 1e-6;

/// How edge weights enter the intensity term (and how ingestion attributes flows).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WeightMode {
    /// Raw per-layer counts.
    #[default]
    Count,
    /// Per-layer share of the pair's total flow.
    Share,
}

impl std::str::FromStr for WeightMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "count" => Ok(Self::Count),
            "share" => Ok(Self::Share),
            other => Err(Error::InvalidInput(format!(
                "unknown weight mode `{other}` (expected count or share)"
            ))),
        }
    }
}

impl std::fmt::Display for WeightMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Count => "count",
            Self::Share => "share",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct MetricConfig {
    pub weight_mode: WeightMode,
    /// Lower clamp for the Heel-ness denominator.
    pub epsilon: f64,
}

impl Default for MetricConfig {
    fn default() -> Self {
        Self {
            weight_mode: WeightMode::Count,
            epsilon: DEFAULT_EPSILON,
        }
    }
}

impl MetricConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon > 0.0) {
            return Err(Error::InvalidInput(format!(
                "epsilon must be positive and finite, got {}",
                self.epsilon
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerRelevanceScore {
    pub zone: ZoneId,
    pub layer: LayerId,
    pub value: f64,
}

/// The single-edge removal that realises a zone's Heel-ness.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeelWitness {
    pub layer: LayerId,
    pub removed_edge: LabeledEdge,
    /// Zones reachable from the scored zone before but not after the removal.
    pub disconnected: usize,
    /// Minimum connectivity over all multiplex neighbours, before clamping.
    pub min_connectivity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeelScore {
    pub zone: ZoneId,
    pub value: f64,
    pub witness: Option<HeelWitness>,
}

/// Per-layer terms of one zone pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LayerPairMetric {
    pub layer: LayerId,
    pub weight: f64,
    pub intensity: f64,
    pub redundancy: f64,
}

/// All metrics of a zone pair sharing at least one layer edge.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairMetrics {
    pub u: ZoneId,
    pub v: ZoneId,
    pub layers: Vec<LayerPairMetric>,
    pub connectivity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramBin {
    pub lower: f64,
    pub upper: f64,
    pub count: usize,
}

/// Equal-width histogram of pair connectivity.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bins: Vec<HistogramBin>,
}

impl Histogram {
    pub fn is_empty(&self) -> bool {
        self.bins.is_empty()
    }

    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lower,upper,count\n");
        for b in &self.bins {
            out.push_str(&format!("{},{},{}\n", b.lower, b.upper, b.count));
        }
        out
    }
}

/// Every metric of one network state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSnapshot {
    pub fingerprint: String,
    pub config: MetricConfig,
    pub zones: Vec<ZoneId>,
    pub layers: Vec<LayerId>,
    pub pairs: Vec<PairMetrics>,
    pub relevance: Vec<LayerRelevanceScore>,
    pub heels: Vec<HeelScore>,
    pub achilles_heel: Option<ZoneId>,
}

impl MetricSnapshot {
    pub fn pair(&self, a: &ZoneId, b: &ZoneId) -> Option<&PairMetrics> {
        let (u, v) = if a <= b { (a, b) } else { (b, a) };
        self.pairs.iter().find(|p| &p.u == u && &p.v == v)
    }

    /// Pairs with `zone` as one endpoint.
    pub fn zone_pairs<'a>(
        &'a self,
        zone: &'a ZoneId,
    ) -> impl Iterator<Item = &'a PairMetrics> + 'a {
        self.pairs
            .iter()
            .filter(move |p| &p.u == zone || &p.v == zone)
    }

    pub fn heel(&self, zone: &ZoneId) -> Option<&HeelScore> {
        self.heels
            .binary_search_by(|h| h.zone.cmp(zone))
            .ok()
            .map(|i| &self.heels[i])
    }

    pub fn zone_relevance<'a>(
        &'a self,
        zone: &'a ZoneId,
    ) -> impl Iterator<Item = &'a LayerRelevanceScore> + 'a {
        self.relevance.iter().filter(move |r| &r.zone == zone)
    }

    /// Mean connectivity of `zone` over the zones it shares an edge with.
    pub fn mean_connectivity(&self, zone: &ZoneId) -> Option<f64> {
        let (sum, n) = self
            .zone_pairs(zone)
            .fold((0.0, 0usize), |(s, n), p| (s + p.connectivity, n + 1));
        (n > 0).then(|| sum / n as f64)
    }

    /// Heel scores ranked as by [`MetricEngine::heel_ranking`].
    pub fn heel_ranking(&self, n: usize) -> Vec<HeelScore> {
        rank_heels(self.heels.clone(), n)
    }
}

/// Rounds to 12 significant digits so scores equal up to float noise tie.
pub(crate) fn score_key(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    let magnitude = x.abs().log10().floor() as i32;
    if !(-280..=280).contains(&magnitude) {
        return x;
    }
    let scale = 10f64.powi(11 - magnitude);
    (x * scale).round() / scale
}

pub(crate) fn cmp_scores(a: f64, b: f64) -> Ordering {
    score_key(a).total_cmp(&score_key(b))
}

fn rank_heels(mut heels: Vec<HeelScore>, n: usize) -> Vec<HeelScore> {
    heels.retain(|h| h.value > 0.0);
    heels.sort_by(|a, b| cmp_scores(b.value, a.value).then_with(|| a.zone.cmp(&b.zone)));
    heels.truncate(n);
    heels
}

struct DisjointSet {
    parent: Vec<u32>,
    size: Vec<u32>,
}

impl DisjointSet {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n as u32).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: u32) -> u32 {
        while self.parent[x as usize] != x {
            let up = self.parent[self.parent[x as usize] as usize];
            self.parent[x as usize] = up;
            x = up;
        }
        x
    }

    fn union(&mut self, a: u32, b: u32) {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return;
        }
        if self.size[ra as usize] < self.size[rb as usize] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb as usize] = ra;
        self.size[ra as usize] += self.size[rb as usize];
    }

    /// For every element, the number of *other* elements in its set.
    fn others(mut self) -> Vec<u32> {
        (0..self.parent.len() as u32)
            .map(|x| {
                let r = self.find(x);
                self.size[r as usize] - 1
            })
            .collect()
    }
}

struct RelevanceTable {
    // N_r(u, L)
    full: Vec<u32>,
    // [layer][zone] -> N_r(u, L∖{layer})
    without: Vec<Vec<u32>>,
}

/// Evaluates metrics against one immutable network state, caching the
/// reachability and pair-connectivity tables on first use.
pub struct MetricEngine<'a> {
    net: &'a UrbanMultiplexNetwork,
    config: MetricConfig,
    relevance: OnceLock<RelevanceTable>,
    connectivity: OnceLock<BTreeMap<(u32, u32), f64>>,
    flat: OnceLock<Vec<Vec<u32>>>,
}

impl<'a> MetricEngine<'a> {
    pub fn new(net: &'a UrbanMultiplexNetwork, config: MetricConfig) -> Self {
        Self {
            net,
            config,
            relevance: OnceLock::new(),
            connectivity: OnceLock::new(),
            flat: OnceLock::new(),
        }
    }

    pub fn network(&self) -> &'a UrbanMultiplexNetwork {
        self.net
    }

    pub fn config(&self) -> MetricConfig {
        self.config
    }

    pub fn connection_intensity(&self, u: &ZoneId, v: &ZoneId, layer: &LayerId) -> Result<f64> {
        let (a, b) = self.distinct_pair(u, v)?;
        Ok(self.intensity_idx(a, b, self.net.layer_idx(layer)?))
    }

    pub fn layer_relevance(&self, u: &ZoneId, layer: &LayerId) -> Result<f64> {
        let (u, l) = (self.net.zone_idx(u)?, self.net.layer_idx(layer)?);
        Ok(self.relevance_idx(u, l))
    }

    pub fn connection_redundancy(&self, u: &ZoneId, v: &ZoneId, layer: &LayerId) -> Result<f64> {
        let (a, b) = self.distinct_pair(u, v)?;
        Ok(self.redundancy_idx(a, b, self.net.layer_idx(layer)?))
    }

    pub fn global_connectivity(&self, u: &ZoneId, v: &ZoneId) -> Result<f64> {
        let (a, b) = self.distinct_pair(u, v)?;
        Ok(self.connectivity_idx(a, b))
    }

    pub fn heelness(&self, u: &ZoneId) -> Result<HeelScore> {
        Ok(self.heel_idx(self.net.zone_idx(u)?))
    }

    /// Heel-ness of every zone, in zone order.
    pub fn heel_scores(&self) -> Vec<HeelScore> {
        (0..self.net.zone_count() as u32)
            .into_par_iter()
            .map(|u| self.heel_idx(u))
            .collect()
    }

    /// The zone with the largest positive Heel-ness, ties to the smallest id.
    pub fn achilles_heel(&self) -> Option<HeelScore> {
        self.heel_ranking(1).into_iter().next()
    }

    /// Zones with positive Heel-ness, descending, then by id; at most `n`.
    pub fn heel_ranking(&self, n: usize) -> Vec<HeelScore> {
        rank_heels(self.heel_scores(), n)
    }

    /// Histogram of `c` over every pair sharing at least one layer edge.
    pub fn connectivity_distribution(&self, bins: usize) -> Result<Histogram> {
        if bins == 0 {
            return Err(Error::InvalidInput(
                "histogram needs at least one bin".into(),
            ));
        }
        let values: Vec<f64> = self.pair_connectivity().values().copied().collect();
        Ok(histogram(&values, bins))
    }

    pub fn snapshot(&self) -> MetricSnapshot {
        let net = self.net;
        let connectivity = self.pair_connectivity();
        let pairs: Vec<PairMetrics> = connectivity
            .par_iter()
            .map(|(&(a, b), &c)| PairMetrics {
                u: net.zone_at(a).clone(),
                v: net.zone_at(b).clone(),
                layers: net
                    .pair_layer_set(a, b)
                    .into_iter()
                    .flatten()
                    .map(|&l| LayerPairMetric {
                        layer: net.layer_at(l).clone(),
                        weight: net.edge_map()[&EdgeKey::new(a, b, l)],
                        intensity: self.intensity_idx(a, b, l),
                        redundancy: self.redundancy_idx(a, b, l),
                    })
                    .collect(),
                connectivity: c,
            })
            .collect();
        let mut relevance = Vec::with_capacity(net.zone_count() * net.layer_count());
        for u in 0..net.zone_count() as u32 {
            for l in 0..net.layer_count() as u32 {
                relevance.push(LayerRelevanceScore {
                    zone: net.zone_at(u).clone(),
                    layer: net.layer_at(l).clone(),
                    value: self.relevance_idx(u, l),
                });
            }
        }
        let heels = self.heel_scores();
        let achilles_heel = rank_heels(heels.clone(), 1)
            .into_iter()
            .next()
            .map(|h| h.zone);
        MetricSnapshot {
            fingerprint: net.fingerprint(),
            config: self.config,
            zones: net.zones().to_vec(),
            layers: net.layers().to_vec(),
            pairs,
            relevance,
            heels,
            achilles_heel,
        }
    }

    /// `c(u,v)` for every pair sharing at least one layer edge.
    pub(crate) fn pair_connectivity(&self) -> &BTreeMap<(u32, u32), f64> {
        self.connectivity.get_or_init(|| {
            let pairs: Vec<(u32, u32)> = self.net.pairs().collect();
            pairs
                .into_par_iter()
                .map(|(a, b)| ((a, b), self.connectivity_uncached(a, b)))
                .collect()
        })
    }

    fn distinct_pair(&self, u: &ZoneId, v: &ZoneId) -> Result<(u32, u32)> {
        let (a, b) = (self.net.zone_idx(u)?, self.net.zone_idx(v)?);
        if a == b {
            return Err(Error::InvalidInput(format!(
                "pair metrics need two distinct zones, got `{u}` twice"
            )));
        }
        Ok((a, b))
    }

    fn flow_share(&self, a: u32, b: u32, layer: u32) -> f64 {
        let edges = self.net.edge_map();
        let Some(&w) = edges.get(&EdgeKey::new(a, b, layer)) else {
            return 0.0;
        };
        match self.config.weight_mode {
            WeightMode::Count => w,
            WeightMode::Share => {
                let total: f64 = self
                    .net
                    .pair_layer_set(a, b)
                    .into_iter()
                    .flatten()
                    .map(|&m| edges[&EdgeKey::new(a, b, m)])
                    .sum();
                if total > 0.0 {
                    w / total
                } else {
                    0.0
                }
            }
        }
    }

    pub(crate) fn intensity_idx(&self, a: u32, b: u32, layer: u32) -> f64 {
        let (Some(ga), Some(gb)) = (
            self.net.layer_neighbors(a, layer),
            self.net.layer_neighbors(b, layer),
        ) else {
            return 0.0;
        };
        let smallest = ga.len().min(gb.len());
        if smallest == 0 {
            return 0.0;
        }
        let common = intersection_size(ga, gb);
        self.flow_share(a, b, layer) * common as f64 / smallest as f64
    }

    fn relevance_table(&self) -> &RelevanceTable {
        self.relevance.get_or_init(|| {
            let net = self.net;
            let pairs: Vec<((u32, u32), Vec<u32>)> = net
                .pairs()
                .map(|(a, b)| {
                    let layers = net
                        .pair_layer_set(a, b)
                        .into_iter()
                        .flatten()
                        .copied()
                        .collect();
                    ((a, b), layers)
                })
                .collect();
            let components = |skip: Option<u32>| {
                let mut dsu = DisjointSet::new(net.zone_count());
                for ((a, b), layers) in &pairs {
                    if layers.iter().any(|&l| Some(l) != skip) {
                        dsu.union(*a, *b);
                    }
                }
                dsu.others()
            };
            let full = components(None);
            let without = (0..net.layer_count() as u32)
                .into_par_iter()
                .map(|l| components(Some(l)))
                .collect();
            RelevanceTable { full, without }
        })
    }

    pub(crate) fn relevance_idx(&self, u: u32, layer: u32) -> f64 {
        let table = self.relevance_table();
        let all = table.full[u as usize];
        if all == 0 {
            return 0.0;
        }
        let rest = table.without[layer as usize][u as usize];
        1.0 - rest as f64 / all as f64
    }

    pub(crate) fn redundancy_idx(&self, a: u32, b: u32, layer: u32) -> f64 {
        let total = self.net.layer_count();
        if total == 0 {
            return 0.0;
        }
        let shared = self.net.pair_layer_set(a, b).map_or(0, BTreeSet::len);
        (1.0 - self.relevance_idx(a, layer))
            * (1.0 - self.relevance_idx(b, layer))
            * (shared as f64 / total as f64)
    }

    fn connectivity_uncached(&self, a: u32, b: u32) -> f64 {
        self.net
            .pair_layer_set(a, b)
            .into_iter()
            .flatten()
            .map(|&l| self.intensity_idx(a, b, l) * (1.0 + self.redundancy_idx(a, b, l)))
            .sum()
    }

    pub(crate) fn connectivity_idx(&self, a: u32, b: u32) -> f64 {
        let key = if a < b { (a, b) } else { (b, a) };
        self.pair_connectivity().get(&key).copied().unwrap_or(0.0)
    }

    fn flat_adjacency(&self) -> &Vec<Vec<u32>> {
        self.flat.get_or_init(|| {
            let mut adj = vec![Vec::new(); self.net.zone_count()];
            for (a, b) in self.net.pairs() {
                adj[a as usize].push(b);
                adj[b as usize].push(a);
            }
            adj
        })
    }

    /// Zones reachable from `source` (excluding it) when the flattened edge
    /// `skip` is absent.
    fn reach_without_pair(&self, source: u32, skip: (u32, u32)) -> u32 {
        let adj = self.flat_adjacency();
        let mut seen = vec![false; adj.len()];
        seen[source as usize] = true;
        let mut queue = VecDeque::from([source]);
        let mut count = 0;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x as usize] {
                if (x, y) == skip || (y, x) == skip || seen[y as usize] {
                    continue;
                }
                seen[y as usize] = true;
                count += 1;
                queue.push_back(y);
            }
        }
        count
    }

    fn heel_idx(&self, u: u32) -> HeelScore {
        let net = self.net;
        let zone = net.zone_at(u).clone();
        let by_layer = net.zone_layers(u);
        if by_layer.is_empty() {
            return HeelScore {
                zone,
                value: 0.0,
                witness: None,
            };
        }
        let min_connectivity = net
            .all_neighbors(u)
            .into_iter()
            .map(|v| self.connectivity_idx(u, v))
            .min_by(|x, y| x.total_cmp(y))
            .unwrap_or(0.0);
        let denominator = min_connectivity.max(self.config.epsilon);
        let reachable_before = self.relevance_table().full[u as usize];

        let mut best: Option<(f64, HeelWitness)> = None;
        for (&layer, nbrs) in by_layer {
            let weakest = nbrs
                .iter()
                .copied()
                .min_by(|&x, &y| {
                    cmp_scores(self.connectivity_idx(u, x), self.connectivity_idx(u, y))
                        .then(x.cmp(&y))
                })
                .expect("layer neighbour sets are never empty");
            let parallel = net.pair_layer_set(u, weakest).map_or(0, BTreeSet::len);
            let disconnected = if parallel > 1 {
                0
            } else {
                let pair = if u < weakest {
                    (u, weakest)
                } else {
                    (weakest, u)
                };
                reachable_before - self.reach_without_pair(u, pair)
            };
            let value = disconnected as f64 / denominator;
            if best
                .as_ref()
                .is_none_or(|(v, _)| cmp_scores(value, *v) == Ordering::Greater)
            {
                let key = EdgeKey::new(u, weakest, layer);
                best = Some((
                    value,
                    HeelWitness {
                        layer: net.layer_at(layer).clone(),
                        removed_edge: net.labeled(key, net.edge_map()[&key]),
                        disconnected: disconnected as usize,
                        min_connectivity,
                    },
                ));
            }
        }
        let (value, witness) = best.expect("zone has at least one layer");
        HeelScore {
            zone,
            value,
            witness: Some(witness),
        }
    }
}

fn intersection_size(a: &BTreeSet<u32>, b: &BTreeSet<u32>) -> usize {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small.iter().filter(|x| large.contains(x)).count()
}

fn histogram(values: &[f64], bins: usize) -> Histogram {
    if values.is_empty() {
        return Histogram::default();
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = (max - min) / bins as f64;
    let mut out: Vec<HistogramBin> = (0..bins)
        .map(|i| HistogramBin {
            lower: min + width * i as f64,
            upper: if i + 1 == bins {
                max
            } else {
                min + width * (i + 1) as f64
            },
            count: 0,
        })
        .collect();
    for &x in values {
        let i = if width > 0.0 {
            (((x - min) / width) as usize).min(bins - 1)
        } else {
            0
        };
        out[i].count += 1;
    }
    Histogram { bins: out }
}

pub fn connection_intensity(
    net: &UrbanMultiplexNetwork,
    u: &ZoneId,
    v: &ZoneId,
    layer: &LayerId,
    config: MetricConfig,
) -> Result<f64> {
    MetricEngine::new(net, config).connection_intensity(u, v, layer)
}

pub fn layer_relevance(net: &UrbanMultiplexNetwork, u: &ZoneId, layer: &LayerId) -> Result<f64> {
    MetricEngine::new(net, MetricConfig::default()).layer_relevance(u, layer)
}

pub fn connection_redundancy(
    net: &UrbanMultiplexNetwork,
    u: &ZoneId,
    v: &ZoneId,
    layer: &LayerId,
) -> Result<f64> {
    MetricEngine::new(net, MetricConfig::default()).connection_redundancy(u, v, layer)
}

pub fn global_connectivity(
    net: &UrbanMultiplexNetwork,
    u: &ZoneId,
    v: &ZoneId,
    config: MetricConfig,
) -> Result<f64> {
    MetricEngine::new(net, config).global_connectivity(u, v)
}

pub fn heelness(
    net: &UrbanMultiplexNetwork,
    u: &ZoneId,
    config: MetricConfig,
) -> Result<HeelScore> {
    MetricEngine::new(net, config).heelness(u)
}

pub fn achilles_heel(net: &UrbanMultiplexNetwork, config: MetricConfig) -> Option<HeelScore> {
    MetricEngine::new(net, config).achilles_heel()
}

pub fn heel_ranking(net: &UrbanMultiplexNetwork, n: usize, config: MetricConfig) -> Vec<HeelScore> {
    MetricEngine::new(net, config).heel_ranking(n)
}

pub fn connectivity_distribution(
    net: &UrbanMultiplexNetwork,
    bins: usize,
    config: MetricConfig,
) -> Result<Histogram> {
    MetricEngine::new(net, config).connectivity_distribution(bins)
}

pub fn compute_snapshot(net: &UrbanMultiplexNetwork, config: MetricConfig) -> MetricSnapshot {
    MetricEngine::new(net, config).snapshot()
}
