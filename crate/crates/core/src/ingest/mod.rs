//! Dataset ingestion: zone polygons, line stops and OD flows into a
//! clique-per-line multiplex network.

pub mod geometry;
pub mod sources;

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{sorted_pair_flows, Dataset, StopRef};
use crate::metrics::WeightMode;
use crate::network::{LabeledEdge, LayerId, UrbanMultiplexNetwork, ZoneId};

pub use geometry::{BoundingBox, Coord, Location, Polygon, ZoneGeometry, ZoneLocator};
pub use sources::{
    lines_to_csv, load_flood_mask, load_flows, load_gtfs, load_lines, load_zones, parse_zones,
    FloodMask, FlowRecord, FlowTable, Stop, TransitLine,
};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("cannot read `{}`: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("`{}` is not valid JSON: {source}", path.display())]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("`{}`: {message}", path.display())]
    Format { path: PathBuf, message: String },
    #[error("`{}` line {line}: {message}", path.display())]
    Csv {
        path: PathBuf,
        line: u64,
        message: String,
    },
    #[error("{feature}: {message}")]
    Feature { feature: String, message: String },
    #[error("line `{line}`: {message}")]
    InvalidLine { line: LayerId, message: String },
    #[error("`{}` is empty", .0.display())]
    Empty(PathBuf),
    #[error("flood mask references unknown zones: {}", join(.0))]
    UnresolvedZones(Vec<ZoneId>),
    #[error("hour window {0}")]
    Window(String),
    #[error(transparent)]
    Network(#[from] crate::error::Error),
}

fn join(ids: &[ZoneId]) -> String {
    ids.iter()
        .map(ZoneId::as_str)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Result of the stop-to-zone spatial join.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct StopAssignment {
    pub zone_of: BTreeMap<String, ZoneId>,
    /// Stops contained in no zone, sorted.
    pub unassigned: Vec<String>,
}

/// Maps every stop to the zone containing it (boundary points go to the
/// smallest zone id touching them). Stops outside all zones are reported.
/// A stop id seen on several lines is located once, at its first coordinates.
pub fn assign_stops_to_zones(zones: &[ZoneGeometry], lines: &[TransitLine]) -> StopAssignment {
    let locator = ZoneLocator::new(zones);
    let mut first: BTreeMap<&str, Coord> = BTreeMap::new();
    for stop in lines.iter().flat_map(|l| &l.stops) {
        first
            .entry(stop.stop_id.as_str())
            .or_insert([stop.lon, stop.lat]);
    }
    let located: Vec<(String, Option<ZoneId>)> = first
        .into_par_iter()
        .map(|(id, p)| (id.to_owned(), locator.zone_of(p).cloned()))
        .collect();
    let mut out = StopAssignment::default();
    for (id, zone) in located {
        match zone {
            Some(z) => {
                out.zone_of.insert(id, z);
            }
            None => out.unassigned.push(id),
        }
    }
    out
}

/// Counts describing how flows were attributed to layer edges.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AttributionSummary {
    pub mode: WeightMode,
    /// Zone pairs with positive windowed flow.
    pub pairs_with_flow: usize,
    /// Zone pairs connected by at least one layer.
    pub connected_pairs: usize,
    /// Largest number of layers sharing one pair.
    pub max_multiplicity: usize,
    /// Mean number of layers per connected pair.
    pub mean_multiplicity: f64,
    pub total_window_flow: f64,
    /// Sum of edge weights over all layers; exceeds the flow it came from
    /// under `count` whenever pairs are served by several lines.
    pub total_edge_weight: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IngestReport {
    pub zones: usize,
    pub lines: usize,
    pub stops: usize,
    pub assigned_stops: usize,
    pub unassigned_stops: Vec<String>,
    pub layers: usize,
    pub edges: usize,
    /// Lines whose stops fall in fewer than two zones.
    pub empty_layers: Vec<LayerId>,
    pub flow_rows: usize,
    /// Intra-zone rows dropped while loading.
    pub dropped_flow_rows: usize,
    /// Rows naming a zone that is not in the zone file.
    pub skipped_flow_rows: usize,
    pub rows_outside_window: usize,
    pub window: Vec<u8>,
    pub attribution: AttributionSummary,
    /// Zones hit by the flood mask, when one was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub flooded_zones: Option<Vec<ZoneId>>,
}

/// Validates an hour window: non-empty, every hour in 0–23.
pub fn validate_window(window: &BTreeSet<u8>) -> Result<(), IngestError> {
    if window.is_empty() {
        return Err(IngestError::Window("must contain at least one hour".into()));
    }
    if let Some(h) = window.iter().find(|h| **h > 23) {
        return Err(IngestError::Window(format!(
            "contains hour {h}, outside 0-23"
        )));
    }
    Ok(())
}

/// Builds the clique-per-line network.
///
/// Every line becomes a layer whose edges form a clique over the distinct
/// zones hosting its stops. A pair's weight is its flow summed over the
/// window hours in both directions, placed on every connecting layer under
/// `count` or split evenly across them under `share`.
pub fn build_umn(
    zones: &[ZoneGeometry],
    lines: &[TransitLine],
    flows: &FlowTable,
    window: &BTreeSet<u8>,
    mode: WeightMode,
) -> Result<(Dataset, IngestReport), IngestError> {
    validate_window(window)?;
    if zones.is_empty() {
        return Err(IngestError::Network(crate::error::Error::InvalidInput(
            "no zones to build a network over".into(),
        )));
    }
    let assignment = assign_stops_to_zones(zones, lines);
    let zone_ids: BTreeSet<ZoneId> = zones.iter().map(|z| z.id.clone()).collect();

    let mut rosters = BTreeMap::new();
    let mut line_zones: BTreeMap<LayerId, BTreeSet<ZoneId>> = BTreeMap::new();
    let mut empty_layers = Vec::new();
    for line in lines {
        let stops: Vec<StopRef> = line
            .stops
            .iter()
            .filter_map(|s| {
                assignment.zone_of.get(&s.stop_id).map(|z| StopRef {
                    stop_id: s.stop_id.clone(),
                    zone: z.clone(),
                })
            })
            .collect();
        let served: BTreeSet<ZoneId> = stops.iter().map(|s| s.zone.clone()).collect();
        if served.len() < 2 {
            empty_layers.push(line.id.clone());
        }
        line_zones.insert(line.id.clone(), served);
        rosters.insert(line.id.clone(), stops);
    }

    let mut pair_flow: BTreeMap<(ZoneId, ZoneId), f64> = BTreeMap::new();
    let (mut skipped, mut outside) = (0, 0);
    for rec in &flows.records {
        if !window.contains(&rec.hour) {
            outside += 1;
            continue;
        }
        if !zone_ids.contains(&rec.origin) || !zone_ids.contains(&rec.destination) {
            skipped += 1;
            continue;
        }
        if rec.origin == rec.destination {
            continue;
        }
        let key = if rec.origin < rec.destination {
            (rec.origin.clone(), rec.destination.clone())
        } else {
            (rec.destination.clone(), rec.origin.clone())
        };
        *pair_flow.entry(key).or_default() += rec.count as f64;
    }

    let mut multiplicity: BTreeMap<(ZoneId, ZoneId), usize> = BTreeMap::new();
    for served in line_zones.values() {
        let served: Vec<&ZoneId> = served.iter().collect();
        for (i, a) in served.iter().enumerate() {
            for b in &served[i + 1..] {
                *multiplicity
                    .entry(((*a).clone(), (*b).clone()))
                    .or_default() += 1;
            }
        }
    }

    let mut dataset = Dataset {
        network: UrbanMultiplexNetwork::new(zone_ids.iter().cloned(), Vec::new(), Vec::new())?,
        lines: rosters,
        pair_flows: sorted_pair_flows(pair_flow.clone()),
        weight_mode: mode,
    };
    let edges: Vec<LabeledEdge> = line_zones
        .iter()
        .flat_map(|(line, served)| {
            dataset.clique_edges(line, served, |a, b| {
                multiplicity
                    .get(&(a.clone(), b.clone()))
                    .copied()
                    .unwrap_or(1)
            })
        })
        .collect();
    let total_edge_weight = edges.iter().map(|e| e.weight).sum();
    dataset.network =
        UrbanMultiplexNetwork::new(zone_ids.iter().cloned(), line_zones.keys().cloned(), edges)?;

    let connected_pairs = multiplicity.len();
    let report = IngestReport {
        zones: zones.len(),
        lines: lines.len(),
        stops: assignment.zone_of.len() + assignment.unassigned.len(),
        assigned_stops: assignment.zone_of.len(),
        unassigned_stops: assignment.unassigned,
        layers: dataset.network.layer_count(),
        edges: dataset.network.edge_count(),
        empty_layers,
        flow_rows: flows.records.len() + flows.dropped_intra_zone,
        dropped_flow_rows: flows.dropped_intra_zone,
        skipped_flow_rows: skipped,
        rows_outside_window: outside,
        window: window.iter().copied().collect(),
        attribution: AttributionSummary {
            mode,
            pairs_with_flow: pair_flow.values().filter(|f| **f > 0.0).count(),
            connected_pairs,
            max_multiplicity: multiplicity.values().copied().max().unwrap_or(0),
            mean_multiplicity: if connected_pairs == 0 {
                0.0
            } else {
                multiplicity.values().sum::<usize>() as f64 / connected_pairs as f64
            },
            total_window_flow: pair_flow.values().sum(),
            total_edge_weight,
        },
        flooded_zones: None,
    };
    Ok((dataset, report))
}

/// Resolves a flood mask to zone ids: polygons by overlap with the zone
/// geometries, explicit ids verbatim after checking they exist.
pub fn resolve_flood_mask(
    mask: &FloodMask,
    zones: &[ZoneGeometry],
) -> Result<BTreeSet<ZoneId>, IngestError> {
    match mask {
        FloodMask::Zones(ids) => {
            let known: BTreeSet<&ZoneId> = zones.iter().map(|z| &z.id).collect();
            let unknown: Vec<ZoneId> = ids
                .iter()
                .filter(|id| !known.contains(id))
                .cloned()
                .collect();
            if !unknown.is_empty() {
                return Err(IngestError::UnresolvedZones(unknown));
            }
            Ok(ids.iter().cloned().collect())
        }
        FloodMask::Polygons(polys) => Ok(ZoneLocator::new(zones)
            .zones_hit(polys)
            .into_iter()
            .collect()),
    }
}
