//! What-if scenarios: ordered mutations over a base dataset, with snapshot
//! recomputation and snapshot diffs.
//!
//! A scenario is persisted as the base fingerprint plus its mutation list and
//! can be replayed from those alone.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, StopRef};
use crate::error::{Error, Result};
use crate::ingest::{FloodMask, ZoneGeometry, ZoneLocator};
use crate::metrics::{MetricConfig, MetricEngine, MetricSnapshot};
use crate::network::{LayerId, UrbanMultiplexNetwork, ZoneId};

/// A stop of a line being added. Either `zone` or both coordinates must be
/// given; coordinates are resolved against the base zone geometry.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NewStop {
    pub stop_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zone: Option<ZoneId>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lat: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Mutation {
    RemoveLayer {
        layer: LayerId,
    },
    AddLayer {
        layer: LayerId,
        stops: Vec<NewStop>,
    },
    RemoveZone {
        zone: ZoneId,
    },
    RemoveStop {
        layer: LayerId,
        stop: String,
    },
    RemoveEdge {
        u: ZoneId,
        v: ZoneId,
        layer: LayerId,
    },
    Flood {
        mask: FloodMask,
    },
}

/// Immutable starting point shared by every scenario derived from it.
#[derive(Debug)]
pub struct ScenarioBase {
    dataset: Dataset,
    locator: Option<ZoneLocator>,
    fingerprint: String,
}

impl ScenarioBase {
    pub fn new(dataset: Dataset, zones: Option<&[ZoneGeometry]>) -> Arc<Self> {
        Arc::new(Self {
            fingerprint: dataset.network.fingerprint(),
            locator: zones.map(ZoneLocator::new),
            dataset,
        })
    }

    pub fn dataset(&self) -> &Dataset {
        &self.dataset
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn zone_geometry(&self, zone: &ZoneId) -> Option<&ZoneGeometry> {
        self.locator.as_ref()?.zones().find(|z| &z.id == zone)
    }
}

/// Replayable form of a scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioLog {
    pub base_fingerprint: String,
    pub mutations: Vec<Mutation>,
}

#[derive(Clone, Debug)]
pub struct ScenarioState {
    base: Arc<ScenarioBase>,
    mutations: Vec<Mutation>,
    network: Arc<UrbanMultiplexNetwork>,
    lines: Arc<BTreeMap<LayerId, Vec<StopRef>>>,
    snapshot: Option<Arc<MetricSnapshot>>,
}

impl ScenarioState {
    pub fn new(base: Arc<ScenarioBase>) -> Self {
        Self {
            network: Arc::new(base.dataset.network.clone()),
            lines: Arc::new(base.dataset.lines.clone()),
            mutations: Vec::new(),
            snapshot: None,
            base,
        }
    }

    pub fn base(&self) -> &Arc<ScenarioBase> {
        &self.base
    }

    pub fn network(&self) -> &UrbanMultiplexNetwork {
        &self.network
    }

    pub fn lines(&self) -> &BTreeMap<LayerId, Vec<StopRef>> {
        &self.lines
    }

    pub fn mutations(&self) -> &[Mutation] {
        &self.mutations
    }

    pub fn snapshot(&self) -> Option<&Arc<MetricSnapshot>> {
        self.snapshot.as_ref()
    }

    /// True when no snapshot matches the current network.
    pub fn is_stale(&self) -> bool {
        self.snapshot
            .as_ref()
            .is_none_or(|s| s.fingerprint != self.network.fingerprint())
    }

    /// Lines whose assigned stops all lie in `zone`.
    pub fn single_zone_lines(&self, zone: &ZoneId) -> Vec<LayerId> {
        self.lines
            .iter()
            .filter(|(_, stops)| !stops.is_empty() && stops.iter().all(|s| &s.zone == zone))
            .map(|(id, _)| id.clone())
            .collect()
    }

    pub fn log(&self) -> ScenarioLog {
        ScenarioLog {
            base_fingerprint: self.base.fingerprint.clone(),
            mutations: self.mutations.clone(),
        }
    }

    /// Rebuilds a scenario from its log; the log must have been taken on `base`.
    pub fn replay(base: Arc<ScenarioBase>, log: &ScenarioLog) -> Result<Self> {
        if log.base_fingerprint != base.fingerprint {
            return Err(Error::Conflict(format!(
                "log was recorded on base {}, not {}",
                log.base_fingerprint, base.fingerprint
            )));
        }
        Self::new(base).apply_all(log.mutations.iter().cloned())
    }

    /// Replays every mutation except the one at `index`.
    pub fn without_mutation(&self, index: usize) -> Result<Self> {
        if index >= self.mutations.len() {
            return Err(Error::InvalidInput(format!(
                "mutation index {index} out of range (have {})",
                self.mutations.len()
            )));
        }
        let rest = self
            .mutations
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != index)
            .map(|(_, m)| m.clone());
        Self::new(self.base.clone()).apply_all(rest)
    }

    pub fn apply_all(&self, mutations: impl IntoIterator<Item = Mutation>) -> Result<Self> {
        let mut state = self.clone();
        for m in mutations {
            state = state.apply(m)?;
        }
        Ok(state)
    }

    /// Applies one mutation, returning the new state with its snapshot cleared.
    pub fn apply(&self, mutation: Mutation) -> Result<Self> {
        let net = &*self.network;
        let mut lines = (*self.lines).clone();
        let network = match &mutation {
            Mutation::RemoveLayer { layer } => {
                let next = net.without_layer(layer)?;
                lines.remove(layer);
                next
            }
            Mutation::AddLayer { layer, stops } => {
                if net.has_layer(layer) {
                    return Err(Error::Conflict(format!("layer `{layer}` already exists")));
                }
                let roster = self.resolve_stops(layer, stops)?;
                let served: BTreeSet<ZoneId> = roster.iter().map(|s| s.zone.clone()).collect();
                let edges = self.base.dataset.clique_edges(layer, &served, |a, b| {
                    net.pair_layers(a, b).map_or(0, |s| s.len()) + 1
                });
                lines.insert(layer.clone(), roster);
                net.with_layer(layer.clone(), edges)?
            }
            Mutation::RemoveZone { zone } => {
                let next = net.without_zone(zone)?;
                for stops in lines.values_mut() {
                    stops.retain(|s| &s.zone != zone);
                }
                next
            }
            Mutation::RemoveStop { layer, stop } => {
                if !net.has_layer(layer) {
                    return Err(Error::UnknownLayer(layer.clone()));
                }
                let roster = lines.get_mut(layer).ok_or_else(|| Error::UnknownStop {
                    line: layer.clone(),
                    stop: stop.clone(),
                })?;
                let pos = roster
                    .iter()
                    .position(|s| &s.stop_id == stop)
                    .ok_or_else(|| Error::UnknownStop {
                        line: layer.clone(),
                        stop: stop.clone(),
                    })?;
                roster.remove(pos);
                let served: BTreeSet<&ZoneId> = roster.iter().map(|s| &s.zone).collect();
                let orphaned: Vec<_> = net
                    .edges()
                    .filter(|e| {
                        &e.layer == layer && !(served.contains(&e.u) && served.contains(&e.v))
                    })
                    .map(|e| (e.u, e.v, e.layer))
                    .collect();
                net.remove_edges(&orphaned)?
            }
            Mutation::RemoveEdge { u, v, layer } => net.remove_edge(u, v, layer)?,
            Mutation::Flood { mask } => net.isolate_zones(&self.flooded_zones(mask)?)?,
        };
        let mut mutations = self.mutations.clone();
        mutations.push(mutation);
        Ok(Self {
            base: self.base.clone(),
            mutations,
            network: Arc::new(network),
            lines: Arc::new(lines),
            snapshot: None,
        })
    }

    /// Zones a flood mask hits in the current network.
    pub fn flooded_zones(&self, mask: &FloodMask) -> Result<BTreeSet<ZoneId>> {
        match mask {
            FloodMask::Zones(ids) => {
                if let Some(unknown) = ids.iter().find(|z| !self.network.has_zone(z)) {
                    return Err(Error::UnknownZone(unknown.clone()));
                }
                Ok(ids.iter().cloned().collect())
            }
            FloodMask::Polygons(polys) => {
                let locator = self.base.locator.as_ref().ok_or_else(|| {
                    Error::InvalidInput("polygon flood masks need zone geometry".into())
                })?;
                Ok(locator
                    .zones_hit(polys)
                    .into_iter()
                    .filter(|z| self.network.has_zone(z))
                    .collect())
            }
        }
    }

    fn resolve_stops(&self, layer: &LayerId, stops: &[NewStop]) -> Result<Vec<StopRef>> {
        if stops.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "line `{layer}` needs at least 2 stops, has {}",
                stops.len()
            )));
        }
        let mut seen = BTreeSet::new();
        let mut out = Vec::with_capacity(stops.len());
        for stop in stops {
            if !seen.insert(&stop.stop_id) {
                return Err(Error::InvalidInput(format!(
                    "stop `{}` appears twice on line `{layer}`",
                    stop.stop_id
                )));
            }
            let zone = match (&stop.zone, stop.lon, stop.lat) {
                (Some(z), _, _) => {
                    if !self.network.has_zone(z) {
                        return Err(Error::UnknownZone(z.clone()));
                    }
                    Some(z.clone())
                }
                (None, Some(lon), Some(lat)) => {
                    let locator = self.base.locator.as_ref().ok_or_else(|| {
                        Error::InvalidInput(format!(
                            "stop `{}` has coordinates but no zone geometry is loaded",
                            stop.stop_id
                        ))
                    })?;
                    locator
                        .zone_of([lon, lat])
                        .filter(|z| self.network.has_zone(z))
                        .cloned()
                }
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "stop `{}` needs a zone or lon/lat",
                        stop.stop_id
                    )))
                }
            };
            if let Some(zone) = zone {
                out.push(StopRef {
                    stop_id: stop.stop_id.clone(),
                    zone,
                });
            }
        }
        Ok(out)
    }

    /// Returns the state with a snapshot of its current network.
    pub fn recompute(&self, config: MetricConfig) -> Self {
        if let Some(s) = &self.snapshot {
            if !self.is_stale() && s.config == config {
                return self.clone();
            }
        }
        let snapshot = MetricEngine::new(&self.network, config).snapshot();
        Self {
            snapshot: Some(Arc::new(snapshot)),
            ..self.clone()
        }
    }
}

/// Before/after values of one keyed quantity; `delta` treats a missing side as 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValueDelta {
    pub before: Option<f64>,
    pub after: Option<f64>,
    pub delta: f64,
}

impl ValueDelta {
    fn new(before: Option<f64>, after: Option<f64>) -> Self {
        Self {
            before,
            after,
            delta: after.unwrap_or(0.0) - before.unwrap_or(0.0),
        }
    }

    /// Value changed, or the key exists on one side only.
    pub fn is_change(&self) -> bool {
        self.delta != 0.0 || self.before.is_some() != self.after.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairDelta {
    pub u: ZoneId,
    pub v: ZoneId,
    pub connectivity: ValueDelta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelevanceDelta {
    pub zone: ZoneId,
    pub layer: LayerId,
    pub relevance: ValueDelta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeelDelta {
    pub zone: ZoneId,
    pub heelness: ValueDelta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotDiff {
    pub from: String,
    pub to: String,
    pub pairs: Vec<PairDelta>,
    pub relevance: Vec<RelevanceDelta>,
    pub heels: Vec<HeelDelta>,
    pub zones_only_in_from: Vec<ZoneId>,
    pub zones_only_in_to: Vec<ZoneId>,
}

impl SnapshotDiff {
    pub fn changed_pairs(&self) -> impl Iterator<Item = &PairDelta> {
        self.pairs.iter().filter(|p| p.connectivity.is_change())
    }

    pub fn is_unchanged(&self) -> bool {
        self.zones_only_in_from.is_empty()
            && self.zones_only_in_to.is_empty()
            && self.pairs.iter().all(|p| !p.connectivity.is_change())
            && self.relevance.iter().all(|r| !r.relevance.is_change())
            && self.heels.iter().all(|h| !h.heelness.is_change())
    }
}

fn merge<K: Ord + Clone>(
    a: impl IntoIterator<Item = (K, f64)>,
    b: impl IntoIterator<Item = (K, f64)>,
) -> Vec<(K, ValueDelta)> {
    let mut both: BTreeMap<K, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for (k, v) in a {
        both.entry(k).or_default().0 = Some(v);
    }
    for (k, v) in b {
        both.entry(k).or_default().1 = Some(v);
    }
    both.into_iter()
        .map(|(k, (x, y))| (k, ValueDelta::new(x, y)))
        .collect()
}

/// Deltas `b − a` for connectivity, layer relevance and Heel-ness.
pub fn diff(a: &MetricSnapshot, b: &MetricSnapshot) -> SnapshotDiff {
    let pairs = merge(
        a.pairs
            .iter()
            .map(|p| ((p.u.clone(), p.v.clone()), p.connectivity)),
        b.pairs
            .iter()
            .map(|p| ((p.u.clone(), p.v.clone()), p.connectivity)),
    )
    .into_iter()
    .map(|((u, v), connectivity)| PairDelta { u, v, connectivity })
    .collect();
    let relevance = merge(
        a.relevance
            .iter()
            .map(|r| ((r.zone.clone(), r.layer.clone()), r.value)),
        b.relevance
            .iter()
            .map(|r| ((r.zone.clone(), r.layer.clone()), r.value)),
    )
    .into_iter()
    .map(|((zone, layer), relevance)| RelevanceDelta {
        zone,
        layer,
        relevance,
    })
    .collect();
    let heels = merge(
        a.heels.iter().map(|h| (h.zone.clone(), h.value)),
        b.heels.iter().map(|h| (h.zone.clone(), h.value)),
    )
    .into_iter()
    .map(|(zone, heelness)| HeelDelta { zone, heelness })
    .collect();
    let za: BTreeSet<&ZoneId> = a.zones.iter().collect();
    let zb: BTreeSet<&ZoneId> = b.zones.iter().collect();
    SnapshotDiff {
        from: a.fingerprint.clone(),
        to: b.fingerprint.clone(),
        pairs,
        relevance,
        heels,
        zones_only_in_from: za.difference(&zb).map(|z| (*z).clone()).collect(),
        zones_only_in_to: zb.difference(&za).map(|z| (*z).clone()).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn base() -> ScenarioState {
        ScenarioState::new(ScenarioBase::new(fixtures::n1_dataset(), None))
    }

    fn z(s: &str) -> ZoneId {
        s.into()
    }

    #[test]
    fn remove_layer_isolates_d() {
        let s = base()
            .apply(Mutation::RemoveLayer {
                layer: "layer2".into(),
            })
            .unwrap();
        assert!(s.network().multiplex_neighbors(&z("D")).unwrap().is_empty());
        assert_eq!(s.network().layer_count(), 1);
        assert!(!s.lines().contains_key(&LayerId::from("layer2")));
    }

    #[test]
    fn remove_then_add_round_trips() {
        let original = base();
        let removed = original
            .apply(Mutation::RemoveLayer {
                layer: "layer2".into(),
            })
            .unwrap();
        let restored = removed
            .apply(Mutation::AddLayer {
                layer: "layer2".into(),
                stops: vec![
                    NewStop {
                        stop_id: "c2".into(),
                        zone: Some(z("C")),
                        lon: None,
                        lat: None,
                    },
                    NewStop {
                        stop_id: "d2".into(),
                        zone: Some(z("D")),
                        lon: None,
                        lat: None,
                    },
                ],
            })
            .unwrap();
        assert_eq!(restored.network(), original.network());
        assert_eq!(restored.lines(), original.lines());
    }

    #[test]
    fn add_duplicate_layer_conflicts() {
        let err = base()
            .apply(Mutation::AddLayer {
                layer: "layer1".into(),
                stops: vec![],
            })
            .unwrap_err();
        assert!(matches!(err, Error::Conflict(_)));
    }

    #[test]
    fn flood_c() {
        let s = base()
            .apply(Mutation::Flood {
                mask: FloodMask::Zones(vec![z("C")]),
            })
            .unwrap();
        let pairs: Vec<_> = s.network().flatten().edges();
        assert_eq!(pairs, vec![(z("A"), z("B"))]);
        assert_eq!(s.network().zone_count(), 4);
        assert_eq!(s.network().flatten().largest_component_size().unwrap(), 2);

        let s = s.recompute(MetricConfig::default());
        let heel = s.snapshot().unwrap().achilles_heel.clone().unwrap();
        assert!(heel == z("A") || heel == z("B"));
        assert_eq!(heel, z("A"));
        assert!(matches!(
            base().apply(Mutation::Flood {
                mask: FloodMask::Zones(vec![z("Q")])
            }),
            Err(Error::UnknownZone(_))
        ));
    }

    #[test]
    fn flood_equals_incident_edge_removal() {
        let flooded = base()
            .apply(Mutation::Flood {
                mask: FloodMask::Zones(vec![z("C")]),
            })
            .unwrap();
        let mut manual = base();
        for (u, v, l) in [
            ("C", "D", "layer2"),
            ("B", "C", "layer1"),
            ("A", "C", "layer1"),
        ] {
            manual = manual
                .apply(Mutation::RemoveEdge {
                    u: z(u),
                    v: z(v),
                    layer: l.into(),
                })
                .unwrap();
        }
        assert_eq!(flooded.network(), manual.network());
    }

    #[test]
    fn remove_zone_and_stop() {
        let s = base().apply(Mutation::RemoveZone { zone: z("D") }).unwrap();
        assert_eq!(s.network().zone_count(), 3);
        assert!(s.lines()[&LayerId::from("layer2")]
            .iter()
            .all(|st| st.zone != z("D")));

        let s = base()
            .apply(Mutation::RemoveStop {
                layer: "layer1".into(),
                stop: "a1".into(),
            })
            .unwrap();
        let l1: Vec<_> = s
            .network()
            .edges()
            .filter(|e| e.layer.as_str() == "layer1")
            .map(|e| (e.u, e.v))
            .collect();
        assert_eq!(l1, vec![(z("B"), z("C"))]);
        assert!(matches!(
            base().apply(Mutation::RemoveStop {
                layer: "layer1".into(),
                stop: "zz".into()
            }),
            Err(Error::UnknownStop { .. })
        ));
    }

    #[test]
    fn remove_stop_keeps_clique_when_zone_has_other_stops() {
        let mut ds = fixtures::n1_dataset();
        ds.lines
            .get_mut(&LayerId::from("layer1"))
            .unwrap()
            .push(StopRef {
                stop_id: "a1b".into(),
                zone: z("A"),
            });
        let s = ScenarioState::new(ScenarioBase::new(ds.clone(), None))
            .apply(Mutation::RemoveStop {
                layer: "layer1".into(),
                stop: "a1".into(),
            })
            .unwrap();
        assert_eq!(s.network(), &ds.network);
    }

    #[test]
    fn recompute_and_staleness() {
        let s = base();
        assert!(s.is_stale());
        let fresh = s.recompute(MetricConfig::default());
        assert!(!fresh.is_stale());
        assert_eq!(
            fresh.snapshot().unwrap().as_ref(),
            fresh
                .recompute(MetricConfig::default())
                .snapshot()
                .unwrap()
                .as_ref()
        );
        let mutated = fresh
            .apply(Mutation::RemoveLayer {
                layer: "layer2".into(),
            })
            .unwrap();
        assert!(mutated.is_stale());
    }

    #[test]
    fn diff_examples() {
        let cfg = MetricConfig::default();
        let a = base().recompute(cfg);
        let a_snap = a.snapshot().unwrap();
        assert!(diff(a_snap, a_snap).is_unchanged());

        let b = a
            .apply(Mutation::RemoveLayer {
                layer: "layer2".into(),
            })
            .unwrap()
            .recompute(cfg);
        let d = diff(a_snap, b.snapshot().unwrap());
        let changed: Vec<_> = d
            .changed_pairs()
            .map(|p| (p.u.as_str(), p.v.as_str()))
            .collect();
        assert_eq!(changed, vec![("C", "D")]);

        let c = a
            .apply(Mutation::RemoveZone { zone: z("D") })
            .unwrap()
            .recompute(cfg);
        let d = diff(a_snap, c.snapshot().unwrap());
        assert_eq!(d.zones_only_in_from, vec![z("D")]);
    }

    #[test]
    fn log_replay_and_retraction() {
        let s = base()
            .apply(Mutation::RemoveLayer {
                layer: "layer2".into(),
            })
            .unwrap()
            .apply(Mutation::RemoveEdge {
                u: z("A"),
                v: z("B"),
                layer: "layer1".into(),
            })
            .unwrap();
        let log = s.log();
        let json = serde_json::to_string(&log).unwrap();
        assert!(json.contains(r#""kind":"remove-layer""#), "{json}");
        let back: ScenarioLog = serde_json::from_str(&json).unwrap();
        let replayed = ScenarioState::replay(s.base().clone(), &back).unwrap();
        assert_eq!(replayed.network(), s.network());

        let retracted = s.without_mutation(0).unwrap();
        assert_eq!(retracted.mutations().len(), 1);
        assert_eq!(retracted.network().layer_count(), 2);
    }
}
