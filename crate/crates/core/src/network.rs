//! Urban multiplex network data model.
//!
//! Zones are nodes, layers are transit lines, and every edge is an undirected
//! `(u, v, layer)` triple stored once under the canonical ordering `u < v`.
//! Ids are interned into sorted index tables so that index order equals id
//! order; everything that iterates does so in that canonical order.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

macro_rules! string_id {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

string_id!(
    /// Urban zone identifier (e.g. a planning-subzone code). Ordered lexicographically.
    ZoneId
);
string_id!(
    /// Transit line identifier; one layer per line.
    LayerId
);

/// An undirected, layer-labeled edge carrying a flow weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledEdge {
    pub u: ZoneId,
    pub v: ZoneId,
    pub layer: LayerId,
    pub weight: f64,
}

impl LabeledEdge {
    /// Builds an edge with its endpoints in canonical order.
    pub fn new(
        u: impl Into<ZoneId>,
        v: impl Into<ZoneId>,
        layer: impl Into<LayerId>,
        weight: f64,
    ) -> Self {
        let (u, v) = (u.into(), v.into());
        let (u, v) = if u <= v { (u, v) } else { (v, u) };
        Self {
            u,
            v,
            layer: layer.into(),
            weight,
        }
    }
}

/// Index-space edge key. Derived ordering is the canonical `(u, v, layer)` order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub(crate) struct EdgeKey {
    pub u: u32,
    pub v: u32,
    pub layer: u32,
}

impl EdgeKey {
    pub(crate) fn new(a: u32, b: u32, layer: u32) -> Self {
        let (u, v) = if a < b { (a, b) } else { (b, a) };
        Self { u, v, layer }
    }
}

/// Zones reachable from a source, always including the source itself.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ReachabilitySet {
    pub source: ZoneId,
    pub members: BTreeSet<ZoneId>,
}

impl ReachabilitySet {
    /// Number of zones other than the source.
    pub fn others(&self) -> usize {
        self.members.len() - 1
    }
}

/// The edge-labeled multigraph `G = (V, E, L)`.
///
/// Values are immutable; every mutating operation returns a new network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NetworkDocument", into = "NetworkDocument")]
pub struct UrbanMultiplexNetwork {
    zones: Vec<ZoneId>,
    layers: Vec<LayerId>,
    edges: BTreeMap<EdgeKey, f64>,
    // zone -> layer -> neighbours on that layer
    adjacency: Vec<BTreeMap<u32, BTreeSet<u32>>>,
    // (u, v) with u < v -> layers carrying the pair; the nonzero entries of A[u][v][m]
    tensor: BTreeMap<(u32, u32), BTreeSet<u32>>,
}

/// On-disk shape of a network: zones, layers, and weighted edges.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkDocument {
    pub zones: Vec<ZoneId>,
    pub layers: Vec<LayerId>,
    pub edges: Vec<LabeledEdge>,
}

impl TryFrom<NetworkDocument> for UrbanMultiplexNetwork {
    type Error = Error;

    fn try_from(doc: NetworkDocument) -> Result<Self> {
        UrbanMultiplexNetwork::new(doc.zones, doc.layers, doc.edges)
    }
}

impl From<UrbanMultiplexNetwork> for NetworkDocument {
    fn from(net: UrbanMultiplexNetwork) -> Self {
        NetworkDocument {
            edges: net.edges().collect(),
            zones: net.zones,
            layers: net.layers,
        }
    }
}

impl UrbanMultiplexNetwork {
    /// Builds a network, validating that every edge references known zones and
    /// layers, has distinct endpoints, a finite non-negative weight, and is not
    /// duplicated.
    pub fn new(
        zones: impl IntoIterator<Item = ZoneId>,
        layers: impl IntoIterator<Item = LayerId>,
        edges: impl IntoIterator<Item = LabeledEdge>,
    ) -> Result<Self> {
        let zones: Vec<ZoneId> = zones
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        if zones.is_empty() {
            return Err(Error::InvalidInput(
                "a network needs at least one zone".into(),
            ));
        }
        let layers: Vec<LayerId> = layers
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();

        let mut map = BTreeMap::new();
        for edge in edges {
            let u = index_of(&zones, &edge.u).ok_or_else(|| Error::UnknownZone(edge.u.clone()))?;
            let v = index_of(&zones, &edge.v).ok_or_else(|| Error::UnknownZone(edge.v.clone()))?;
            let layer = index_of(&layers, &edge.layer)
                .ok_or_else(|| Error::UnknownLayer(edge.layer.clone()))?;
            if u == v {
                return Err(Error::InvalidInput(format!(
                    "self-loop on zone `{}` in layer `{}`",
                    edge.u, edge.layer
                )));
            }
            if !edge.weight.is_finite() || edge.weight < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "edge ({}, {}, {}) has invalid weight {}",
                    edge.u, edge.v, edge.layer, edge.weight
                )));
            }
            if map.insert(EdgeKey::new(u, v, layer), edge.weight).is_some() {
                return Err(Error::InvalidInput(format!(
                    "duplicate edge ({}, {}, {})",
                    edge.u, edge.v, edge.layer
                )));
            }
        }
        Ok(Self::from_parts(zones, layers, map))
    }

    fn from_parts(zones: Vec<ZoneId>, layers: Vec<LayerId>, edges: BTreeMap<EdgeKey, f64>) -> Self {
        let mut adjacency = vec![BTreeMap::<u32, BTreeSet<u32>>::new(); zones.len()];
        let mut tensor = BTreeMap::<(u32, u32), BTreeSet<u32>>::new();
        for key in edges.keys() {
            adjacency[key.u as usize]
                .entry(key.layer)
                .or_default()
                .insert(key.v);
            adjacency[key.v as usize]
                .entry(key.layer)
                .or_default()
                .insert(key.u);
            tensor.entry((key.u, key.v)).or_default().insert(key.layer);
        }
        Self {
            zones,
            layers,
            edges,
            adjacency,
            tensor,
        }
    }

    pub fn zones(&self) -> &[ZoneId] {
        &self.zones
    }

    pub fn layers(&self) -> &[LayerId] {
        &self.layers
    }

    pub fn zone_count(&self) -> usize {
        self.zones.len()
    }

    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_zone(&self, zone: &ZoneId) -> bool {
        index_of(&self.zones, zone).is_some()
    }

    pub fn has_layer(&self, layer: &LayerId) -> bool {
        index_of(&self.layers, layer).is_some()
    }

    /// All edges in canonical `(u, v, layer)` order.
    pub fn edges(&self) -> impl Iterator<Item = LabeledEdge> + '_ {
        self.edges.iter().map(|(k, &w)| self.labeled(*k, w))
    }

    /// Weight of `(u, v, layer)`, or `None` when the edge is absent.
    pub fn weight(&self, u: &ZoneId, v: &ZoneId, layer: &LayerId) -> Result<Option<f64>> {
        let (a, b, l) = (self.zone_idx(u)?, self.zone_idx(v)?, self.layer_idx(layer)?);
        if a == b {
            return Ok(None);
        }
        Ok(self.edges.get(&EdgeKey::new(a, b, l)).copied())
    }

    /// `Γ_l(u)`: zones sharing an edge with `u` on `layer`.
    pub fn neighbors(&self, u: &ZoneId, layer: &LayerId) -> Result<BTreeSet<ZoneId>> {
        let (u, l) = (self.zone_idx(u)?, self.layer_idx(layer)?);
        Ok(self
            .layer_neighbors(u, l)
            .map(|set| {
                set.iter()
                    .map(|&v| self.zones[v as usize].clone())
                    .collect()
            })
            .unwrap_or_default())
    }

    /// `N_u`: zones sharing an edge with `u` on any layer.
    pub fn multiplex_neighbors(&self, u: &ZoneId) -> Result<BTreeSet<ZoneId>> {
        let u = self.zone_idx(u)?;
        Ok(self
            .all_neighbors(u)
            .into_iter()
            .map(|v| self.zones[v as usize].clone())
            .collect())
    }

    /// Layers on which `u` has at least one edge.
    pub fn incident_layers(&self, u: &ZoneId) -> Result<BTreeSet<LayerId>> {
        let u = self.zone_idx(u)?;
        Ok(self.adjacency[u as usize]
            .keys()
            .map(|&l| self.layers[l as usize].clone())
            .collect())
    }

    /// Layers with an edge between `u` and `v` (the nonzero entries of the tensor row).
    pub fn pair_layers(&self, u: &ZoneId, v: &ZoneId) -> Result<BTreeSet<LayerId>> {
        let (a, b) = (self.zone_idx(u)?, self.zone_idx(v)?);
        Ok(self
            .pair_layer_set(a, b)
            .map(|set| {
                set.iter()
                    .map(|&l| self.layers[l as usize].clone())
                    .collect()
            })
            .unwrap_or_default())
    }

    /// Adjacency tensor entry `A[u][v][m]`.
    pub fn adjacency(&self, u: &ZoneId, v: &ZoneId, layer: &LayerId) -> Result<u8> {
        Ok(self.weight(u, v, layer)?.is_some() as u8)
    }

    /// Closure of `u` over the edges whose layer is in `layers`; contains `u`.
    pub fn reachable_set(&self, u: &ZoneId, layers: &BTreeSet<LayerId>) -> Result<ReachabilitySet> {
        let source = self.zone_idx(u)?;
        let mut allowed = vec![false; self.layers.len()];
        for layer in layers {
            allowed[self.layer_idx(layer)? as usize] = true;
        }
        let seen = self.reach_mask(source, |l| allowed[l as usize]);
        Ok(ReachabilitySet {
            source: u.clone(),
            members: seen
                .iter()
                .enumerate()
                .filter(|(_, &s)| s)
                .map(|(i, _)| self.zones[i].clone())
                .collect(),
        })
    }

    /// Number of zones other than `u` reachable over `layers`.
    pub fn reachable_count(&self, u: &ZoneId, layers: &BTreeSet<LayerId>) -> Result<usize> {
        Ok(self.reachable_set(u, layers)?.others())
    }

    /// Single-layer projection: an edge wherever at least one layer has one.
    pub fn flatten(&self) -> SimpleGraph {
        let mut adjacency = vec![BTreeSet::new(); self.zones.len()];
        for &(u, v) in self.tensor.keys() {
            adjacency[u as usize].insert(v);
            adjacency[v as usize].insert(u);
        }
        SimpleGraph {
            labels: self.zones.clone(),
            adjacency,
        }
    }

    /// Returns a new network without `(u, v, layer)`.
    pub fn remove_edge(&self, u: &ZoneId, v: &ZoneId, layer: &LayerId) -> Result<Self> {
        let mut next = self.clone();
        let key = self.edge_key(u, v, layer)?;
        next.remove_key(key);
        Ok(next)
    }

    /// Returns a new network without all of `edges`; an unknown edge is an error.
    pub fn remove_edges(&self, edges: &[(ZoneId, ZoneId, LayerId)]) -> Result<Self> {
        let keys = edges
            .iter()
            .map(|(u, v, l)| self.edge_key(u, v, l))
            .collect::<Result<Vec<_>>>()?;
        let mut next = self.clone();
        for key in keys {
            next.remove_key(key);
        }
        Ok(next)
    }

    /// Returns a new network with `layer` and all its edges deleted.
    pub fn without_layer(&self, layer: &LayerId) -> Result<Self> {
        self.layer_idx(layer)?;
        let layers = self.layers.iter().filter(|l| *l != layer).cloned();
        let edges = self.edges().filter(|e| &e.layer != layer);
        Self::new(self.zones.iter().cloned(), layers, edges)
    }

    /// Returns a new network with an additional layer carrying `edges`.
    pub fn with_layer(&self, layer: LayerId, edges: Vec<LabeledEdge>) -> Result<Self> {
        if self.has_layer(&layer) {
            return Err(Error::Conflict(format!("layer `{layer}` already exists")));
        }
        if let Some(stray) = edges.iter().find(|e| e.layer != layer) {
            return Err(Error::InvalidInput(format!(
                "edge ({}, {}) belongs to layer `{}`, not `{layer}`",
                stray.u, stray.v, stray.layer
            )));
        }
        let layers = self.layers.iter().cloned().chain(std::iter::once(layer));
        Self::new(
            self.zones.iter().cloned(),
            layers,
            self.edges().chain(edges),
        )
    }

    /// Returns a new network with `zone` and every incident edge deleted.
    pub fn without_zone(&self, zone: &ZoneId) -> Result<Self> {
        self.zone_idx(zone)?;
        if self.zones.len() == 1 {
            return Err(Error::InvalidInput(format!(
                "cannot remove `{zone}`, the network's only zone"
            )));
        }
        let zones = self.zones.iter().filter(|z| *z != zone).cloned();
        let edges = self.edges().filter(|e| &e.u != zone && &e.v != zone);
        Self::new(zones, self.layers.iter().cloned(), edges)
    }

    /// Returns a new network where every edge incident to one of `zones` is
    /// removed on all layers; the zones stay as isolated nodes.
    pub fn isolate_zones(&self, zones: &BTreeSet<ZoneId>) -> Result<Self> {
        let mut masked = vec![false; self.zones.len()];
        for z in zones {
            masked[self.zone_idx(z)? as usize] = true;
        }
        let mut next = self.clone();
        let doomed: Vec<EdgeKey> = self
            .edges
            .keys()
            .filter(|k| masked[k.u as usize] || masked[k.v as usize])
            .copied()
            .collect();
        for key in doomed {
            next.remove_key(key);
        }
        Ok(next)
    }

    /// SHA-256 over the canonical zone, layer and weighted edge listing.
    pub fn fingerprint(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(b"zones\n");
        for z in &self.zones {
            hasher.update(z.as_str().as_bytes());
            hasher.update(b"\n");
        }
        hasher.update(b"layers\n");
        for l in &self.layers {
            hasher.update(l.as_str().as_bytes());
            hasher.update(b"\n");
        }
        hasher.update(b"edges\n");
        for (k, w) in &self.edges {
            hasher.update(
                format!(
                    "{}\t{}\t{}\t{:016x}\n",
                    self.zones[k.u as usize],
                    self.zones[k.v as usize],
                    self.layers[k.layer as usize],
                    w.to_bits()
                )
                .as_bytes(),
            );
        }
        hex::encode(hasher.finalize())
    }

    // ---- index-space helpers used by the metric and percolation engines ----

    pub(crate) fn zone_idx(&self, zone: &ZoneId) -> Result<u32> {
        index_of(&self.zones, zone).ok_or_else(|| Error::UnknownZone(zone.clone()))
    }

    pub(crate) fn layer_idx(&self, layer: &LayerId) -> Result<u32> {
        index_of(&self.layers, layer).ok_or_else(|| Error::UnknownLayer(layer.clone()))
    }

    pub(crate) fn edge_key(&self, u: &ZoneId, v: &ZoneId, layer: &LayerId) -> Result<EdgeKey> {
        let missing = || Error::MissingEdge {
            u: u.clone(),
            v: v.clone(),
            layer: layer.clone(),
        };
        let (a, b, l) = (
            self.zone_idx(u).map_err(|_| missing())?,
            self.zone_idx(v).map_err(|_| missing())?,
            self.layer_idx(layer).map_err(|_| missing())?,
        );
        let key = EdgeKey::new(a, b, l);
        if a == b || !self.edges.contains_key(&key) {
            return Err(missing());
        }
        Ok(key)
    }

    pub(crate) fn zone_at(&self, idx: u32) -> &ZoneId {
        &self.zones[idx as usize]
    }

    pub(crate) fn layer_at(&self, idx: u32) -> &LayerId {
        &self.layers[idx as usize]
    }

    pub(crate) fn labeled(&self, key: EdgeKey, weight: f64) -> LabeledEdge {
        LabeledEdge {
            u: self.zones[key.u as usize].clone(),
            v: self.zones[key.v as usize].clone(),
            layer: self.layers[key.layer as usize].clone(),
            weight,
        }
    }

    pub(crate) fn edge_map(&self) -> &BTreeMap<EdgeKey, f64> {
        &self.edges
    }

    pub(crate) fn layer_neighbors(&self, u: u32, layer: u32) -> Option<&BTreeSet<u32>> {
        self.adjacency[u as usize].get(&layer)
    }

    /// Layer -> neighbour sets for zone `u`.
    pub(crate) fn zone_layers(&self, u: u32) -> &BTreeMap<u32, BTreeSet<u32>> {
        &self.adjacency[u as usize]
    }

    pub(crate) fn pair_layer_set(&self, a: u32, b: u32) -> Option<&BTreeSet<u32>> {
        let key = if a < b { (a, b) } else { (b, a) };
        self.tensor.get(&key)
    }

    /// Zone pairs `(u, v)`, `u < v`, sharing at least one layer edge.
    pub(crate) fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.tensor.keys().copied()
    }

    pub(crate) fn all_neighbors(&self, u: u32) -> BTreeSet<u32> {
        self.adjacency[u as usize]
            .values()
            .flat_map(|set| set.iter().copied())
            .collect()
    }

    /// BFS from `source` over edges whose layer passes `allowed`.
    pub(crate) fn reach_mask(&self, source: u32, allowed: impl Fn(u32) -> bool) -> Vec<bool> {
        let mut seen = vec![false; self.zones.len()];
        seen[source as usize] = true;
        let mut queue = VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            for (&layer, nbrs) in &self.adjacency[x as usize] {
                if !allowed(layer) {
                    continue;
                }
                for &y in nbrs {
                    if !seen[y as usize] {
                        seen[y as usize] = true;
                        queue.push_back(y);
                    }
                }
            }
        }
        seen
    }

    pub(crate) fn remove_key(&mut self, key: EdgeKey) -> Option<f64> {
        let weight = self.edges.remove(&key)?;
        for (a, b) in [(key.u, key.v), (key.v, key.u)] {
            let layers = &mut self.adjacency[a as usize];
            if let Some(set) = layers.get_mut(&key.layer) {
                set.remove(&b);
                if set.is_empty() {
                    layers.remove(&key.layer);
                }
            }
        }
        if let Some(set) = self.tensor.get_mut(&(key.u, key.v)) {
            set.remove(&key.layer);
            if set.is_empty() {
                self.tensor.remove(&(key.u, key.v));
            }
        }
        Some(weight)
    }
}

fn index_of<T: Ord>(sorted: &[T], item: &T) -> Option<u32> {
    sorted.binary_search(item).ok().map(|i| i as u32)
}

/// A simple undirected graph, used for the flattened projection.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleGraph {
    labels: Vec<ZoneId>,
    adjacency: Vec<BTreeSet<u32>>,
}

impl SimpleGraph {
    /// Builds a graph from node labels and label pairs; unknown labels and
    /// self-pairs are rejected.
    pub fn new(
        labels: impl IntoIterator<Item = ZoneId>,
        edges: impl IntoIterator<Item = (ZoneId, ZoneId)>,
    ) -> Result<Self> {
        let labels: Vec<ZoneId> = labels
            .into_iter()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let mut adjacency = vec![BTreeSet::new(); labels.len()];
        for (a, b) in edges {
            let i = index_of(&labels, &a).ok_or_else(|| Error::UnknownZone(a.clone()))?;
            let j = index_of(&labels, &b).ok_or_else(|| Error::UnknownZone(b.clone()))?;
            if i == j {
                return Err(Error::InvalidInput(format!("self-loop on `{a}`")));
            }
            adjacency[i as usize].insert(j);
            adjacency[j as usize].insert(i);
        }
        Ok(Self { labels, adjacency })
    }

    pub fn node_count(&self) -> usize {
        self.labels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(BTreeSet::len).sum::<usize>() / 2
    }

    /// Edges as label pairs `(a, b)` with `a < b`, in order.
    pub fn edges(&self) -> Vec<(ZoneId, ZoneId)> {
        let mut out = Vec::with_capacity(self.edge_count());
        for (i, nbrs) in self.adjacency.iter().enumerate() {
            for &j in nbrs.range(i as u32 + 1..) {
                out.push((self.labels[i].clone(), self.labels[j as usize].clone()));
            }
        }
        out
    }

    /// Node count of the largest connected component.
    pub fn largest_component_size(&self) -> Result<usize> {
        if self.labels.is_empty() {
            return Err(Error::InvalidInput("graph has no nodes".into()));
        }
        Ok(component_sizes(&self.adjacency)
            .into_iter()
            .max()
            .unwrap_or(0))
    }
}

/// Free-function form of [`SimpleGraph::largest_component_size`].
pub fn largest_component_size(graph: &SimpleGraph) -> Result<usize> {
    graph.largest_component_size()
}

fn component_sizes(adjacency: &[BTreeSet<u32>]) -> Vec<usize> {
    let mut seen = vec![false; adjacency.len()];
    let mut sizes = Vec::new();
    for start in 0..adjacency.len() {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut size = 0;
        let mut stack = vec![start as u32];
        while let Some(x) = stack.pop() {
            size += 1;
            for &y in &adjacency[x as usize] {
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    stack.push(y);
                }
            }
        }
        sizes.push(size);
    }
    sizes
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn set(ids: &[&str]) -> BTreeSet<ZoneId> {
        ids.iter().map(|s| ZoneId::from(*s)).collect()
    }

    fn layers(ids: &[&str]) -> BTreeSet<LayerId> {
        ids.iter().map(|s| LayerId::from(*s)).collect()
    }

    #[test]
    fn clique_neighbors() {
        let net = fixtures::clique_layers(&["A", "B", "C"], 1, 1.0);
        let got = net.neighbors(&"A".into(), &"L0".into()).unwrap();
        assert_eq!(got, set(&["B", "C"]));
    }

    #[test]
    fn neighbors_on_layer_without_stop() {
        let net = fixtures::n1();
        assert!(net
            .neighbors(&"A".into(), &"layer2".into())
            .unwrap()
            .is_empty());
        assert_eq!(
            net.neighbors(&"C".into(), &"layer2".into()).unwrap(),
            set(&["D"])
        );
    }

    #[test]
    fn neighbors_unknown_ids() {
        let net = fixtures::n1();
        assert_eq!(
            net.neighbors(&"Q".into(), &"layer1".into()),
            Err(Error::UnknownZone("Q".into()))
        );
        assert_eq!(
            net.neighbors(&"A".into(), &"nope".into()),
            Err(Error::UnknownLayer("nope".into()))
        );
    }

    #[test]
    fn reachability_examples() {
        let net = fixtures::n1();
        let a = ZoneId::from("A");
        let r = net.reachable_set(&a, &BTreeSet::new()).unwrap();
        assert_eq!(r.members, set(&["A"]));
        assert_eq!(net.reachable_count(&a, &BTreeSet::new()).unwrap(), 0);
        let r = net.reachable_set(&a, &layers(&["layer2"])).unwrap();
        assert_eq!(r.members, set(&["A"]));
        assert_eq!(
            net.reachable_count(&a, &layers(&["layer1", "layer2"]))
                .unwrap(),
            3
        );

        let lone = UrbanMultiplexNetwork::new(vec!["Z".into()], vec!["l".into()], vec![]).unwrap();
        assert_eq!(
            lone.reachable_count(&"Z".into(), &layers(&["l"])).unwrap(),
            0
        );
    }

    #[test]
    fn flatten_n1() {
        let flat = fixtures::n1().flatten();
        let expected: Vec<(ZoneId, ZoneId)> = [("A", "B"), ("A", "C"), ("B", "C"), ("C", "D")]
            .iter()
            .map(|(a, b)| (ZoneId::from(*a), ZoneId::from(*b)))
            .collect();
        assert_eq!(flat.edges(), expected);
        assert_eq!(flat.largest_component_size().unwrap(), 4);
    }

    #[test]
    fn flatten_merges_parallel_layers() {
        let net = fixtures::clique_layers(&["A", "B"], 3, 2.0);
        assert_eq!(net.edge_count(), 3);
        assert_eq!(net.flatten().edge_count(), 1);
    }

    #[test]
    fn component_sizes_of_simple_graphs() {
        let labels: Vec<ZoneId> = (0..5).map(|i| ZoneId::new(format!("n{i}"))).collect();
        let edgeless = SimpleGraph::new(labels, vec![]).unwrap();
        assert_eq!(edgeless.largest_component_size().unwrap(), 1);

        let labels: Vec<ZoneId> = (0..6).map(|i| ZoneId::new(format!("n{i}"))).collect();
        let tri = |a: usize, b: usize| (labels[a].clone(), labels[b].clone());
        let edges = vec![
            tri(0, 1),
            tri(1, 2),
            tri(0, 2),
            tri(3, 4),
            tri(4, 5),
            tri(3, 5),
        ];
        let g = SimpleGraph::new(labels.clone(), edges).unwrap();
        assert_eq!(largest_component_size(&g).unwrap(), 3);

        let empty = SimpleGraph::new(vec![], vec![]).unwrap();
        assert!(matches!(
            empty.largest_component_size(),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn remove_edge_value_semantics() {
        let net = fixtures::n1();
        let (c, d, l2) = (
            ZoneId::from("C"),
            ZoneId::from("D"),
            LayerId::from("layer2"),
        );
        let next = net.remove_edge(&c, &d, &l2).unwrap();
        assert!(!next.neighbors(&c, &l2).unwrap().contains(&d));
        assert_eq!(next.adjacency(&c, &d, &l2).unwrap(), 0);
        assert_eq!(net.adjacency(&c, &d, &l2).unwrap(), 1);
        assert_eq!(next.flatten().largest_component_size().unwrap(), 3);
        assert!(next.multiplex_neighbors(&d).unwrap().is_empty());
        assert!(matches!(
            next.remove_edge(&c, &d, &l2),
            Err(Error::MissingEdge { .. })
        ));
        assert_ne!(net.fingerprint(), next.fingerprint());
    }

    #[test]
    fn edges_are_canonical_and_validated() {
        let e = LabeledEdge::new("B", "A", "l", 1.0);
        assert_eq!((e.u.as_str(), e.v.as_str()), ("A", "B"));
        let zones = || vec![ZoneId::from("A"), ZoneId::from("B")];
        let l = || vec![LayerId::from("l")];
        assert!(UrbanMultiplexNetwork::new(
            zones(),
            l(),
            vec![LabeledEdge::new("A", "A", "l", 1.0)]
        )
        .is_err());
        assert!(UrbanMultiplexNetwork::new(
            zones(),
            l(),
            vec![LabeledEdge::new("A", "B", "l", -1.0)]
        )
        .is_err());
        assert!(UrbanMultiplexNetwork::new(
            zones(),
            l(),
            vec![
                LabeledEdge::new("A", "B", "l", 1.0),
                LabeledEdge::new("B", "A", "l", 2.0)
            ]
        )
        .is_err());
        assert!(UrbanMultiplexNetwork::new(vec![], l(), vec![]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let net = fixtures::n1();
        let text = serde_json::to_string(&net).unwrap();
        let back: UrbanMultiplexNetwork = serde_json::from_str(&text).unwrap();
        assert_eq!(back, net);
        assert_eq!(back.fingerprint(), net.fingerprint());
    }
}
