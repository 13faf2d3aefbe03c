//! Small hand-built networks used by tests, examples, and the CLI smoke runs,
//! plus a deterministic city-sized ingestion input.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::dataset::{Dataset, PairFlow, StopRef};
use crate::ingest::{
    lines_to_csv, FlowRecord, FlowTable, Polygon, Stop, TransitLine, ZoneGeometry,
};
use crate::metrics::WeightMode;
use crate::network::{LabeledEdge, LayerId, UrbanMultiplexNetwork, ZoneId};

fn ids<T: From<String>>(names: &[&str]) -> Vec<T> {
    names.iter().map(|s| T::from(s.to_string())).collect()
}

fn clique_edges(zones: &[&str], layer: &str, weights: &mut dyn FnMut() -> f64) -> Vec<LabeledEdge> {
    let mut out = Vec::new();
    for (i, a) in zones.iter().enumerate() {
        for b in &zones[i + 1..] {
            out.push(LabeledEdge::new(*a, *b, layer, weights()));
        }
    }
    out
}

/// Four zones, two layers: `layer1` is the clique over A, B, C and `layer2`
/// is the single edge C–D. Weights AB=10, AC=20, BC=30, CD=5.
pub fn n1() -> UrbanMultiplexNetwork {
    UrbanMultiplexNetwork::new(
        ids::<ZoneId>(&["A", "B", "C", "D"]),
        ids::<LayerId>(&["layer1", "layer2"]),
        vec![
            LabeledEdge::new("A", "B", "layer1", 10.0),
            LabeledEdge::new("A", "C", "layer1", 20.0),
            LabeledEdge::new("B", "C", "layer1", 30.0),
            LabeledEdge::new("C", "D", "layer2", 5.0),
        ],
    )
    .expect("n1 is well formed")
}

/// `layers` layers named `L0..`, each a full clique over `zones` with a constant weight.
pub fn clique_layers(zones: &[&str], layers: usize, weight: f64) -> UrbanMultiplexNetwork {
    let names: Vec<String> = (0..layers).map(|i| format!("L{i}")).collect();
    let edges = names
        .iter()
        .flat_map(|l| clique_edges(zones, l, &mut || weight))
        .collect::<Vec<_>>();
    UrbanMultiplexNetwork::new(
        ids::<ZoneId>(zones),
        names.into_iter().map(LayerId::from),
        edges,
    )
    .expect("clique fixture is well formed")
}

/// Two layers, both the full clique over A–D: every redundancy is 1.
pub fn double_clique() -> UrbanMultiplexNetwork {
    clique_layers(&["A", "B", "C", "D"], 2, 1.0)
}

/// Two 4-cliques (`left` over a1–a4, `right` over b1–b4) joined by the
/// single edge a4–b1 on layer `bridge`: 13 edges.
pub fn two_clique_bridge() -> UrbanMultiplexNetwork {
    let left = ["a1", "a2", "a3", "a4"];
    let right = ["b1", "b2", "b3", "b4"];
    let mut lw = [5.0, 7.0, 3.0, 9.0, 4.0, 6.0].into_iter();
    let mut rw = [8.0, 2.0, 6.0, 5.0, 7.0, 3.0].into_iter();
    let mut edges = clique_edges(&left, "left", &mut || lw.next().unwrap());
    edges.extend(clique_edges(&right, "right", &mut || rw.next().unwrap()));
    edges.push(LabeledEdge::new("a4", "b1", "bridge", 10.0));
    UrbanMultiplexNetwork::new(
        left.iter().chain(&right).map(|s| ZoneId::from(*s)),
        ids::<LayerId>(&["bridge", "left", "right"]),
        edges,
    )
    .expect("bridge fixture is well formed")
}

/// Two zones joined by one edge.
pub fn single_edge() -> UrbanMultiplexNetwork {
    UrbanMultiplexNetwork::new(
        ids::<ZoneId>(&["A", "B"]),
        ids::<LayerId>(&["line"]),
        vec![LabeledEdge::new("A", "B", "line", 1.0)],
    )
    .expect("single edge fixture is well formed")
}

/// [`n1`] with the line rosters and pair flows that reproduce it under
/// `count` weighting.
pub fn n1_dataset() -> Dataset {
    let stop = |id: &str, zone: &str| StopRef {
        stop_id: id.to_owned(),
        zone: zone.into(),
    };
    let flow = |u: &str, v: &str, flow: f64| PairFlow {
        u: u.into(),
        v: v.into(),
        flow,
    };
    let mut lines = BTreeMap::new();
    lines.insert(
        LayerId::from("layer1"),
        vec![stop("a1", "A"), stop("b1", "B"), stop("c1", "C")],
    );
    lines.insert(
        LayerId::from("layer2"),
        vec![stop("c2", "C"), stop("d2", "D")],
    );
    Dataset {
        network: n1(),
        lines,
        pair_flows: vec![
            flow("A", "B", 10.0),
            flow("A", "C", 20.0),
            flow("B", "C", 30.0),
            flow("C", "D", 5.0),
        ],
        weight_mode: WeightMode::Count,
    }
}

/// Raw ingestion inputs for a synthetic city.
#[derive(Clone, Debug)]
pub struct SyntheticCity {
    pub zones: Vec<ZoneGeometry>,
    pub lines: Vec<TransitLine>,
    pub flows: FlowTable,
}

impl SyntheticCity {
    /// Writes `zones.geojson`, `lines.csv` and `flows.csv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<()> {
        fs::write(dir.join("zones.geojson"), zones_geojson(&self.zones))?;
        fs::write(dir.join("lines.csv"), lines_to_csv(&self.lines))?;
        fs::write(dir.join("flows.csv"), flows_csv(&self.flows.records))
    }
}

pub fn zones_geojson(zones: &[ZoneGeometry]) -> String {
    let features: Vec<_> = zones
        .iter()
        .map(|z| {
            serde_json::json!({
                "type": "Feature",
                "properties": { "id": z.id, "name": z.name },
                "geometry": z.geojson_geometry(),
            })
        })
        .collect();
    serde_json::json!({ "type": "FeatureCollection", "features": features }).to_string()
}

pub fn flows_csv(records: &[FlowRecord]) -> String {
    let mut out = String::from("origin,destination,hour,count\n");
    for r in records {
        out.push_str(&format!(
            "{},{},{},{}\n",
            r.origin, r.destination, r.hour, r.count
        ));
    }
    out
}

/// 64-bit LCG; enough for reproducible fixtures.; enough for reproducible fixtures.
struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> u64 {
        self.0 = self
            .0
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        self.0 >> 33
    }

    fn below(&mut self, n: u64) -> u64 {
        self.next() % n
    }

    fn unit(&mut self) -> f64 {
        self.next() as f64 / (1u64 << 31) as f64
    }
}

/// A `cols × rows` grid of square zones near Singapore with `lines` bus lines
/// of random-walk routes and `stops` distinct stops, all strictly inside a
/// zone. OD rows follow consecutive stops of every line over hours 6–9.
pub fn synthetic_city(
    cols: usize,
    rows: usize,
    lines: usize,
    stops: usize,
    seed: u64,
) -> SyntheticCity {
    assert!(
        lines > 0 && stops >= 2 * lines,
        "every line needs two stops"
    );
    const SIDE: f64 = 0.01;
    let origin = [103.6, 1.2];
    let zone_id = |c: usize, r: usize| format!("Z{:03}", r * cols + c);
    let zones = (0..rows)
        .flat_map(|r| (0..cols).map(move |c| (c, r)))
        .map(|(c, r)| {
            let (x, y) = (origin[0] + c as f64 * SIDE, origin[1] + r as f64 * SIDE);
            ZoneGeometry {
                id: zone_id(c, r).into(),
                name: format!("Subzone {c}-{r}"),
                polygons: vec![Polygon::new(vec![vec![
                    [x, y],
                    [x + SIDE, y],
                    [x + SIDE, y + SIDE],
                    [x, y + SIDE],
                ]])],
            }
        })
        .collect();

    let mut rng = Lcg(seed ^ 0x5eed);
    let mut records = Vec::new();
    let mut next_stop = 0;
    let mut out = Vec::with_capacity(lines);
    for i in 0..lines {
        let len = stops / lines + usize::from(i < stops % lines);
        let (mut c, mut r) = (
            rng.below(cols as u64) as usize,
            rng.below(rows as u64) as usize,
        );
        let mut route = Vec::with_capacity(len);
        let mut prev: Option<String> = None;
        for _ in 0..len {
            let lon = origin[0] + (c as f64 + 0.1 + 0.8 * rng.unit()) * SIDE;
            let lat = origin[1] + (r as f64 + 0.1 + 0.8 * rng.unit()) * SIDE;
            route.push(Stop {
                stop_id: format!("S{next_stop:05}"),
                lon,
                lat,
            });
            next_stop += 1;
            let here = zone_id(c, r);
            if let Some(p) = prev.filter(|p| *p != here) {
                for hour in 6..10 {
                    records.push(FlowRecord {
                        origin: p.as_str().into(),
                        destination: here.as_str().into(),
                        hour,
                        count: 1 + rng.below(200),
                    });
                }
            }
            prev = Some(here);
            match rng.below(5) {
                0 if c + 1 < cols => c += 1,
                1 if c > 0 => c -= 1,
                2 if r + 1 < rows => r += 1,
                3 if r > 0 => r -= 1,
                _ => {}
            }
        }
        out.push(TransitLine {
            id: format!("bus-{i:03}").into(),
            stops: route,
        });
    }
    SyntheticCity {
        zones,
        lines: out,
        flows: FlowTable {
            records,
            dropped_intra_zone: 0,
        },
    }
}

/// 323 zones, 4,856 stops and 300 lines.
pub fn singapore_shaped() -> SyntheticCity {
    synthetic_city(19, 17, 300, 4856, 2020)
}
