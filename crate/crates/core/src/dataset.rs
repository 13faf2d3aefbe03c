//! A network together with the line rosters and pair flows it was built from.
//!
//! This is the documented JSON artifact written by ingestion and read by the
//! metric, percolation and service entry points. A bare network document
//! (zones, layers, edges) is also accepted; the extra fields default to empty.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::metrics::WeightMode;
use crate::network::{LabeledEdge, LayerId, UrbanMultiplexNetwork, ZoneId};

/// A stop of a line, resolved to the zone containing it.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopRef {
    pub stop_id: String,
    pub zone: ZoneId,
}

/// Windowed flow between two zones, both directions summed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairFlow {
    pub u: ZoneId,
    pub v: ZoneId,
    pub flow: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    #[serde(flatten)]
    pub network: UrbanMultiplexNetwork,
    /// Assigned stops per line, in line order.
    #[serde(default)]
    pub lines: BTreeMap<LayerId, Vec<StopRef>>,
    #[serde(default)]
    pub pair_flows: Vec<PairFlow>,
    #[serde(default)]
    pub weight_mode: WeightMode,
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetIoError {
    #[error("cannot read `{path}`: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("`{path}` is not a valid network document: {source}")]
    Json {
        path: String,
        source: serde_json::Error,
    },
}

impl Dataset {
    /// Wraps a bare network with no line rosters or flows.
    pub fn from_network(network: UrbanMultiplexNetwork) -> Self {
        Self {
            network,
            lines: BTreeMap::new(),
            pair_flows: Vec::new(),
            weight_mode: WeightMode::Count,
        }
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, DatasetIoError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| DatasetIoError::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| DatasetIoError::Json {
            path: path.display().to_string(),
            source,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("datasets always serialize")
    }

    /// Windowed flow between `a` and `b` (order-insensitive); 0 when unrecorded.
    pub fn pair_flow(&self, a: &ZoneId, b: &ZoneId) -> f64 {
        let (u, v) = if a <= b { (a, b) } else { (b, a) };
        self.pair_flows
            .binary_search_by(|p| (&p.u, &p.v).cmp(&(u, v)))
            .map(|i| self.pair_flows[i].flow)
            .unwrap_or(0.0)
    }

    /// Distinct zones served by `line`.
    pub fn line_zones(&self, line: &LayerId) -> BTreeSet<ZoneId> {
        self.lines
            .get(line)
            .into_iter()
            .flatten()
            .map(|s| s.zone.clone())
            .collect()
    }

    /// Lines whose stops all lie in `zone`.
    pub fn single_zone_lines(&self, zone: &ZoneId) -> Vec<LayerId> {
        self.lines
            .iter()
            .filter(|(_, stops)| !stops.is_empty() && stops.iter().all(|s| &s.zone == zone))
            .map(|(id, _)| id.clone())
            .collect()
    }

    /// Clique edges of a line over `zones`, weighted from the pair-flow table.
    /// `multiplicity` gives the number of layers sharing each pair (used by
    /// the `share` attribution).
    pub fn clique_edges(
        &self,
        line: &LayerId,
        zones: &BTreeSet<ZoneId>,
        multiplicity: impl Fn(&ZoneId, &ZoneId) -> usize,
    ) -> Vec<LabeledEdge> {
        let zones: Vec<&ZoneId> = zones.iter().collect();
        let mut out = Vec::new();
        for (i, a) in zones.iter().enumerate() {
            for b in &zones[i + 1..] {
                let flow = self.pair_flow(a, b);
                let weight = match self.weight_mode {
                    WeightMode::Count => flow,
                    WeightMode::Share => flow / multiplicity(a, b).max(1) as f64,
                };
                out.push(LabeledEdge::new(
                    (*a).clone(),
                    (*b).clone(),
                    line.clone(),
                    weight,
                ));
            }
        }
        out
    }
}

pub(crate) fn sorted_pair_flows(flows: BTreeMap<(ZoneId, ZoneId), f64>) -> Vec<PairFlow> {
    flows
        .into_iter()
        .map(|((u, v), flow)| PairFlow { u, v, flow })
        .collect()
}
