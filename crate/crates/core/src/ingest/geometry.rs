//! Planar polygon primitives over WGS84 `(lon, lat)` degrees.
//!
//! Containment is even-odd ray casting over every ring of every polygon, so
//! holes fall out naturally. Points on an edge are reported separately.

use serde::{Deserialize, Serialize};

use crate::network::ZoneId;

pub type Coord = [f64; 2];

const BOUNDARY_TOLERANCE: f64 = 1e-12;

/// First ring is the outer boundary, the rest are holes. Rings are closed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    pub rings: Vec<Vec<Coord>>,
}

impl Polygon {
    /// Builds a polygon, closing any ring whose last point differs from its first.
    pub fn new(rings: Vec<Vec<Coord>>) -> Self {
        let rings = rings
            .into_iter()
            .filter(|r| !r.is_empty())
            .map(|mut r| {
                if r.first() != r.last() {
                    r.push(r[0]);
                }
                r
            })
            .collect();
        Self { rings }
    }

    pub fn vertices(&self) -> impl Iterator<Item = Coord> + '_ {
        self.rings.iter().flat_map(|r| r.iter().copied())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundingBox {
    pub min: Coord,
    pub max: Coord,
}

impl BoundingBox {
    pub fn of(points: impl IntoIterator<Item = Coord>) -> Option<Self> {
        let mut it = points.into_iter();
        let first = it.next()?;
        Some(it.fold(
            BoundingBox {
                min: first,
                max: first,
            },
            |b, p| BoundingBox {
                min: [b.min[0].min(p[0]), b.min[1].min(p[1])],
                max: [b.max[0].max(p[0]), b.max[1].max(p[1])],
            },
        ))
    }

    pub fn contains(&self, p: Coord) -> bool {
        p[0] >= self.min[0] - BOUNDARY_TOLERANCE
            && p[0] <= self.max[0] + BOUNDARY_TOLERANCE
            && p[1] >= self.min[1] - BOUNDARY_TOLERANCE
            && p[1] <= self.max[1] + BOUNDARY_TOLERANCE
    }

    pub fn intersects(&self, other: &BoundingBox) -> bool {
        self.min[0] <= other.max[0]
            && other.min[0] <= self.max[0]
            && self.min[1] <= other.max[1]
            && other.min[1] <= self.max[1]
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Location {
    Inside,
    Boundary,
    Outside,
}

fn on_segment(a: Coord, b: Coord, p: Coord) -> bool {
    let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
    if cross.abs() > BOUNDARY_TOLERANCE {
        return false;
    }
    p[0] >= a[0].min(b[0]) - BOUNDARY_TOLERANCE
        && p[0] <= a[0].max(b[0]) + BOUNDARY_TOLERANCE
        && p[1] >= a[1].min(b[1]) - BOUNDARY_TOLERANCE
        && p[1] <= a[1].max(b[1]) + BOUNDARY_TOLERANCE
}

/// Locates `p` against a set of polygons treated as one even-odd region.
pub fn locate(polygons: &[Polygon], p: Coord) -> Location {
    let mut inside = false;
    for ring in polygons.iter().flat_map(|poly| &poly.rings) {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            if on_segment(a, b, p) {
                return Location::Boundary;
            }
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
        }
    }
    if inside {
        Location::Inside
    } else {
        Location::Outside
    }
}

/// Area-weighted centroid of the outer rings; falls back to the vertex mean
/// when the signed area vanishes.
pub fn centroid(polygons: &[Polygon]) -> Option<Coord> {
    let (mut area, mut cx, mut cy) = (0.0, 0.0, 0.0);
    for ring in polygons.iter().filter_map(|p| p.rings.first()) {
        for w in ring.windows(2) {
            let (a, b) = (w[0], w[1]);
            let cross = a[0] * b[1] - b[0] * a[1];
            area += cross;
            cx += (a[0] + b[0]) * cross;
            cy += (a[1] + b[1]) * cross;
        }
    }
    if area.abs() > f64::EPSILON {
        return Some([cx / (3.0 * area), cy / (3.0 * area)]);
    }
    let pts: Vec<Coord> = polygons.iter().flat_map(Polygon::vertices).collect();
    if pts.is_empty() {
        return None;
    }
    let n = pts.len() as f64;
    Some([
        pts.iter().map(|p| p[0]).sum::<f64>() / n,
        pts.iter().map(|p| p[1]).sum::<f64>() / n,
    ])
}

/// An urban zone with its boundary.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneGeometry {
    pub id: ZoneId,
    pub name: String,
    pub polygons: Vec<Polygon>,
}

impl ZoneGeometry {
    pub fn bbox(&self) -> Option<BoundingBox> {
        BoundingBox::of(self.polygons.iter().flat_map(Polygon::vertices))
    }

    pub fn locate(&self, p: Coord) -> Location {
        match self.bbox() {
            Some(b) if b.contains(p) => locate(&self.polygons, p),
            _ => Location::Outside,
        }
    }

    pub fn centroid(&self) -> Option<Coord> {
        centroid(&self.polygons)
    }

    /// GeoJSON geometry object (`Polygon` or `MultiPolygon`).
    pub fn geojson_geometry(&self) -> serde_json::Value {
        if self.polygons.len() == 1 {
            serde_json::json!({ "type": "Polygon", "coordinates": self.polygons[0].rings })
        } else {
            let coords: Vec<&Vec<Vec<Coord>>> = self.polygons.iter().map(|p| &p.rings).collect();
            serde_json::json!({ "type": "MultiPolygon", "coordinates": coords })
        }
    }
}

/// Zones sorted by id with cached bounding boxes, for repeated point lookups.
#[derive(Clone, Debug)]
pub struct ZoneLocator {
    zones: Vec<(ZoneGeometry, Option<BoundingBox>)>,
}

impl ZoneLocator {
    pub fn new(zones: &[ZoneGeometry]) -> Self {
        let mut zones: Vec<_> = zones.iter().map(|z| (z.clone(), z.bbox())).collect();
        zones.sort_by(|a, b| a.0.id.cmp(&b.0.id));
        Self { zones }
    }

    pub fn zones(&self) -> impl Iterator<Item = &ZoneGeometry> {
        self.zones.iter().map(|(z, _)| z)
    }

    /// The zone containing `p`; a point on a shared boundary goes to the
    /// smallest id among the zones touching it.
    pub fn zone_of(&self, p: Coord) -> Option<&ZoneId> {
        self.zones
            .iter()
            .filter(|(_, bbox)| bbox.is_some_and(|b| b.contains(p)))
            .find(|(z, _)| locate(&z.polygons, p) != Location::Outside)
            .map(|(z, _)| &z.id)
    }

    /// Zones overlapping any of `polygons`: a zone is hit when its centroid or
    /// one of its vertices lies in a polygon, or a polygon vertex lies in it.
    pub fn zones_hit(&self, polygons: &[Polygon]) -> Vec<ZoneId> {
        let mut hit = Vec::new();
        for (zone, bbox) in &self.zones {
            let Some(zbox) = bbox else { continue };
            let overlaps = polygons.iter().any(|poly| {
                let Some(pbox) = BoundingBox::of(poly.vertices()) else {
                    return false;
                };
                if !zbox.intersects(&pbox) {
                    return false;
                }
                let single = std::slice::from_ref(poly);
                zone.centroid()
                    .is_some_and(|c| locate(single, c) != Location::Outside)
                    || zone
                        .polygons
                        .iter()
                        .flat_map(Polygon::vertices)
                        .any(|v| locate(single, v) == Location::Inside)
                    || poly
                        .vertices()
                        .any(|v| locate(&zone.polygons, v) == Location::Inside)
            });
            if overlaps {
                hit.push(zone.id.clone());
            }
        }
        hit
    }
}
