//! File readers: GeoJSON zones and flood masks, line/stop CSV, GTFS subset,
//! and hourly OD flow CSV.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::geometry::{Coord, Polygon, ZoneGeometry};
use super::IngestError;
use crate::network::{LayerId, ZoneId};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stop {
    pub stop_id: String,
    pub lon: f64,
    pub lat: f64,
}

/// A transit line: its layer id and ordered stops.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TransitLine {
    pub id: LayerId,
    pub stops: Vec<Stop>,
}

impl TransitLine {
    pub fn validate(&self) -> Result<(), IngestError> {
        if self.stops.len() < 2 {
            return Err(IngestError::InvalidLine {
                line: self.id.clone(),
                message: format!("needs at least 2 stops, has {}", self.stops.len()),
            });
        }
        let mut seen = BTreeSet::new();
        for s in &self.stops {
            if !seen.insert(&s.stop_id) {
                return Err(IngestError::InvalidLine {
                    line: self.id.clone(),
                    message: format!("stop `{}` appears twice", s.stop_id),
                });
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FlowRecord {
    pub origin: ZoneId,
    pub destination: ZoneId,
    pub hour: u8,
    pub count: u64,
}

/// Parsed OD rows plus the number of intra-zone rows dropped on load.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct FlowTable {
    pub records: Vec<FlowRecord>,
    pub dropped_intra_zone: usize,
}

/// Flood-prone areas, either as polygons or as an explicit zone list.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FloodMask {
    Zones(Vec<ZoneId>),
    Polygons(Vec<Polygon>),
}

fn read(path: &Path) -> Result<String, IngestError> {
    fs::read_to_string(path).map_err(|source| IngestError::Io {
        path: path.to_owned(),
        source,
    })
}

fn json_error(path: &Path, source: serde_json::Error) -> IngestError {
    IngestError::Json {
        path: path.to_owned(),
        source,
    }
}

fn csv_error(path: &Path, line: u64, message: impl Into<String>) -> IngestError {
    IngestError::Csv {
        path: path.to_owned(),
        line,
        message: message.into(),
    }
}

fn parse_ring(value: &Value) -> Option<Vec<Coord>> {
    value
        .as_array()?
        .iter()
        .map(|pt| {
            let pt = pt.as_array()?;
            Some([pt.first()?.as_f64()?, pt.get(1)?.as_f64()?])
        })
        .collect()
}

fn parse_polygon(value: &Value) -> Option<Polygon> {
    let rings = value
        .as_array()?
        .iter()
        .map(parse_ring)
        .collect::<Option<Vec<_>>>()?;
    Some(Polygon::new(rings))
}

/// Polygons of a GeoJSON geometry object; `None` for other geometry types.
fn geometry_polygons(geometry: &Value) -> Result<Option<Vec<Polygon>>, String> {
    let coords = &geometry["coordinates"];
    match geometry["type"].as_str() {
        Some("Polygon") => parse_polygon(coords)
            .map(|p| Some(vec![p]))
            .ok_or_else(|| "malformed Polygon coordinates".to_owned()),
        Some("MultiPolygon") => coords
            .as_array()
            .and_then(|polys| polys.iter().map(parse_polygon).collect::<Option<Vec<_>>>())
            .map(Some)
            .ok_or_else(|| "malformed MultiPolygon coordinates".to_owned()),
        Some("GeometryCollection") => {
            let mut out = Vec::new();
            for g in geometry["geometries"].as_array().into_iter().flatten() {
                out.extend(geometry_polygons(g)?.unwrap_or_default());
            }
            Ok(Some(out))
        }
        _ => Ok(None),
    }
}

fn feature_label(index: usize, feature: &Value) -> String {
    match feature["properties"]["id"].as_str() {
        Some(id) => format!("feature #{index} (`{id}`)"),
        None => format!("feature #{index}"),
    }
}

fn property_string(value: &Value) -> Option<String> {
    match value {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

fn features(text: &str, path: &Path) -> Result<Vec<Value>, IngestError> {
    let doc: Value = serde_json::from_str(text).map_err(|e| json_error(path, e))?;
    match doc["type"].as_str() {
        Some("FeatureCollection") => Ok(doc["features"].as_array().cloned().unwrap_or_default()),
        Some("Feature") => Ok(vec![doc]),
        _ => Err(IngestError::Format {
            path: path.to_owned(),
            message: "expected a GeoJSON FeatureCollection".into(),
        }),
    }
}

/// Loads zone polygons from a GeoJSON FeatureCollection with `properties.id`
/// (and optional `properties.name`) on every feature.
pub fn load_zones(path: impl AsRef<Path>) -> Result<Vec<ZoneGeometry>, IngestError> {
    let path = path.as_ref();
    parse_zones(&read(path)?, path)
}

pub fn parse_zones(text: &str, path: &Path) -> Result<Vec<ZoneGeometry>, IngestError> {
    let mut seen = BTreeSet::new();
    let mut zones = Vec::new();
    for (index, feature) in features(text, path)?.iter().enumerate() {
        let label = feature_label(index, feature);
        let id =
            property_string(&feature["properties"]["id"]).ok_or_else(|| IngestError::Feature {
                feature: label.clone(),
                message: "missing `id` property".into(),
            })?;
        let polygons = geometry_polygons(&feature["geometry"])
            .map_err(|message| IngestError::Feature {
                feature: label.clone(),
                message,
            })?
            .ok_or_else(|| IngestError::Feature {
                feature: label.clone(),
                message: "geometry is not a Polygon or MultiPolygon".into(),
            })?;
        if !seen.insert(id.clone()) {
            return Err(IngestError::Feature {
                feature: label,
                message: format!("duplicate zone id `{id}`"),
            });
        }
        let name = property_string(&feature["properties"]["name"]).unwrap_or_else(|| id.clone());
        zones.push(ZoneGeometry {
            id: ZoneId::new(id),
            name,
            polygons,
        });
    }
    Ok(zones)
}

#[derive(Deserialize)]
struct LineRow {
    line_id: String,
    stop_id: String,
    seq: i64,
    lon: f64,
    lat: f64,
}

/// Loads `line_id,stop_id,seq,lon,lat` rows, grouped by line and ordered by `seq`.
pub fn load_lines(path: impl AsRef<Path>) -> Result<Vec<TransitLine>, IngestError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e.to_string()))?;
    let expected = ["line_id", "stop_id", "seq", "lon", "lat"];
    let headers = reader
        .headers()
        .map_err(|e| csv_error(path, 1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(csv_error(
            path,
            1,
            format!("expected header `{}`", expected.join(",")),
        ));
    }
    let mut grouped: BTreeMap<String, Vec<(i64, Stop)>> = BTreeMap::new();
    for (i, row) in reader.deserialize::<LineRow>().enumerate() {
        let row = row.map_err(|e| csv_error(path, i as u64 + 2, e.to_string()))?;
        grouped.entry(row.line_id).or_default().push((
            row.seq,
            Stop {
                stop_id: row.stop_id,
                lon: row.lon,
                lat: row.lat,
            },
        ));
    }
    grouped
        .into_iter()
        .map(|(id, mut stops)| {
            stops.sort_by_key(|(seq, _)| *seq);
            let line = TransitLine {
                id: LayerId::new(id),
                stops: stops.into_iter().map(|(_, s)| s).collect(),
            };
            line.validate()?;
            Ok(line)
        })
        .collect()
}

/// Writes lines back in the `line_id,stop_id,seq,lon,lat` shape.
pub fn lines_to_csv(lines: &[TransitLine]) -> String {
    let mut out = String::from("line_id,stop_id,seq,lon,lat\n");
    for line in lines {
        for (seq, s) in line.stops.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                line.id, s.stop_id, seq, s.lon, s.lat
            ));
        }
    }
    out
}

fn gtfs_reader(dir: &Path, file: &str) -> Result<(PathBuf, csv::Reader<fs::File>), IngestError> {
    let path = dir.join(file);
    let reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(&path)
        .map_err(|e| csv_error(&path, 0, e.to_string()))?;
    Ok((path, reader))
}

fn column(headers: &csv::StringRecord, path: &Path, name: &str) -> Result<usize, IngestError> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| csv_error(path, 1, format!("missing column `{name}`")))
}

/// Reads a GTFS subset (`stops.txt`, `trips.txt`, `stop_times.txt`) as lines.
///
/// Each route becomes one line whose stops are those of its longest trip
/// (ties to the smallest trip id); repeated stops of loop trips are kept once.
pub fn load_gtfs(dir: impl AsRef<Path>) -> Result<Vec<TransitLine>, IngestError> {
    let dir = dir.as_ref();

    let (path, mut rdr) = gtfs_reader(dir, "stops.txt")?;
    let h = rdr
        .headers()
        .map_err(|e| csv_error(&path, 1, e.to_string()))?
        .clone();
    let (id_col, lat_col, lon_col) = (
        column(&h, &path, "stop_id")?,
        column(&h, &path, "stop_lat")?,
        column(&h, &path, "stop_lon")?,
    );
    let mut stops = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_error(&path, line, e.to_string()))?;
        let coord = |c: usize| {
            rec.get(c)
                .and_then(|s| s.parse::<f64>().ok())
                .ok_or_else(|| csv_error(&path, line, "bad stop coordinate"))
        };
        let (lat, lon) = (coord(lat_col)?, coord(lon_col)?);
        stops.insert(rec.get(id_col).unwrap_or_default().to_owned(), (lon, lat));
    }

    let (path, mut rdr) = gtfs_reader(dir, "trips.txt")?;
    let h = rdr
        .headers()
        .map_err(|e| csv_error(&path, 1, e.to_string()))?
        .clone();
    let (route_col, trip_col) = (
        column(&h, &path, "route_id")?,
        column(&h, &path, "trip_id")?,
    );
    let mut trip_route = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_error(&path, i as u64 + 2, e.to_string()))?;
        trip_route.insert(
            rec.get(trip_col).unwrap_or_default().to_owned(),
            rec.get(route_col).unwrap_or_default().to_owned(),
        );
    }

    let (path, mut rdr) = gtfs_reader(dir, "stop_times.txt")?;
    let h = rdr
        .headers()
        .map_err(|e| csv_error(&path, 1, e.to_string()))?
        .clone();
    let (trip_col, stop_col, seq_col) = (
        column(&h, &path, "trip_id")?,
        column(&h, &path, "stop_id")?,
        column(&h, &path, "stop_sequence")?,
    );
    let mut trips: BTreeMap<String, Vec<(i64, String)>> = BTreeMap::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_error(&path, line, e.to_string()))?;
        let seq = rec
            .get(seq_col)
            .and_then(|s| s.parse::<i64>().ok())
            .ok_or_else(|| csv_error(&path, line, "bad stop_sequence"))?;
        trips
            .entry(rec.get(trip_col).unwrap_or_default().to_owned())
            .or_default()
            .push((seq, rec.get(stop_col).unwrap_or_default().to_owned()));
    }

    // route -> (trip id, stop sequence) of its longest trip
    let mut chosen: BTreeMap<String, (String, Vec<String>)> = BTreeMap::new();
    for (trip, mut seq) in trips {
        let Some(route) = trip_route.get(&trip) else {
            continue;
        };
        seq.sort_by_key(|(s, _)| *s);
        let ids: Vec<String> = seq.into_iter().map(|(_, s)| s).collect();
        let better = chosen
            .get(route)
            .is_none_or(|(_, best)| ids.len() > best.len());
        if better {
            chosen.insert(route.clone(), (trip, ids));
        }
    }

    chosen
        .into_iter()
        .map(|(route, (_, ids))| {
            let mut seen = BTreeSet::new();
            let mut line_stops = Vec::new();
            for id in ids {
                if !seen.insert(id.clone()) {
                    continue;
                }
                let &(lon, lat) = stops.get(&id).ok_or_else(|| IngestError::InvalidLine {
                    line: LayerId::new(route.as_str()),
                    message: format!("stop `{id}` missing from stops.txt"),
                })?;
                line_stops.push(Stop {
                    stop_id: id,
                    lon,
                    lat,
                });
            }
            let line = TransitLine {
                id: LayerId::new(route),
                stops: line_stops,
            };
            line.validate()?;
            Ok(line)
        })
        .collect()
}

/// Loads `origin,destination,hour,count` rows; intra-zone rows are dropped and counted.
pub fn load_flows(path: impl AsRef<Path>) -> Result<FlowTable, IngestError> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_error(path, 0, e.to_string()))?;
    let expected = ["origin", "destination", "hour", "count"];
    let headers = reader
        .headers()
        .map_err(|e| csv_error(path, 1, e.to_string()))?;
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(csv_error(
            path,
            1,
            format!("expected header `{}`", expected.join(",")),
        ));
    }
    let mut table = FlowTable::default();
    for (i, rec) in reader.records().enumerate() {
        let line = i as u64 + 2;
        let rec = rec.map_err(|e| csv_error(path, line, e.to_string()))?;
        if rec.len() != 4 {
            return Err(csv_error(
                path,
                line,
                format!("expected 4 fields, found {}", rec.len()),
            ));
        }
        let hour: u8 =
            rec[2].parse().ok().filter(|h| *h < 24).ok_or_else(|| {
                csv_error(path, line, format!("hour `{}` is not in 0-23", &rec[2]))
            })?;
        let count: u64 = rec[3].parse().map_err(|_| {
            csv_error(
                path,
                line,
                format!("count `{}` is not a non-negative integer", &rec[3]),
            )
        })?;
        if rec[0].is_empty() || rec[1].is_empty() {
            return Err(csv_error(path, line, "empty zone id"));
        }
        if rec[0] == rec[1] {
            table.dropped_intra_zone += 1;
            continue;
        }
        table.records.push(FlowRecord {
            origin: ZoneId::new(&rec[0]),
            destination: ZoneId::new(&rec[1]),
            hour,
            count,
        });
    }
    Ok(table)
}

/// Loads a flood mask: GeoJSON polygons, or newline-delimited zone ids
/// (blank lines and `#` comments ignored).
pub fn load_flood_mask(path: impl AsRef<Path>) -> Result<FloodMask, IngestError> {
    let path = path.as_ref();
    let text = read(path)?;
    let trimmed = text.trim();
    if trimmed.is_empty() {
        return Err(IngestError::Empty(path.to_owned()));
    }
    if trimmed.starts_with('{') {
        let mut polygons = Vec::new();
        for (index, feature) in features(trimmed, path)?.iter().enumerate() {
            let polys = geometry_polygons(&feature["geometry"]).map_err(|message| {
                IngestError::Feature {
                    feature: feature_label(index, feature),
                    message,
                }
            })?;
            polygons.extend(polys.unwrap_or_default());
        }
        if polygons.is_empty() {
            return Err(IngestError::Empty(path.to_owned()));
        }
        return Ok(FloodMask::Polygons(polygons));
    }
    let zones: Vec<ZoneId> = trimmed
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(ZoneId::from)
        .collect();
    if zones.is_empty() {
        return Err(IngestError::Empty(path.to_owned()));
    }
    Ok(FloodMask::Zones(zones))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn file(contents: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(contents.as_bytes()).unwrap();
        f
    }

    const TWO_ZONES: &str = r#"{"type":"FeatureCollection","features":[
        {"type":"Feature","properties":{"id":"Z1","name":"One"},
         "geometry":{"type":"Polygon","coordinates":[[[0,0],[1,0],[1,1],[0,1],[0,0]]]}},
        {"type":"Feature","properties":{"id":"Z2"},
         "geometry":{"type":"MultiPolygon","coordinates":[[[[2,0],[3,0],[3,1],[2,0]]]]}}]}"#;

    #[test]
    fn zones_parse() {
        let f = file(TWO_ZONES);
        let zones = load_zones(f.path()).unwrap();
        assert_eq!(zones.len(), 2);
        assert_eq!(zones[0].name, "One");
        assert_eq!(zones[1].name, "Z2");
        assert_eq!(zones[1].polygons.len(), 1);
    }

    #[test]
    fn zone_errors() {
        let empty = file(r#"{"type":"FeatureCollection","features":[]}"#);
        assert!(load_zones(empty.path()).unwrap().is_empty());

        let dup = TWO_ZONES.replace("\"Z2\"", "\"Z1\"");
        let err = load_zones(file(&dup).path()).unwrap_err();
        assert!(err.to_string().contains("duplicate zone id `Z1`"), "{err}");
        assert!(err.to_string().contains("feature #1"), "{err}");

        let no_id = TWO_ZONES.replace("\"id\":\"Z2\"", "\"code\":\"Z2\"");
        let err = load_zones(file(&no_id).path()).unwrap_err();
        assert!(err.to_string().contains("missing `id`"), "{err}");

        assert!(matches!(
            load_zones(file("{nope").path()),
            Err(IngestError::Json { .. })
        ));
        assert!(matches!(
            load_zones("/no/such/file.geojson"),
            Err(IngestError::Io { .. })
        ));
    }

    #[test]
    fn lines_parse_and_sort() {
        let f = file("line_id,stop_id,seq,lon,lat\nL1,s2,2,0.5,0.5\nL1,s1,1,0.1,0.1\nL2,s3,1,2.5,0.2\nL2,s1,2,0.1,0.1\n");
        let lines = load_lines(f.path()).unwrap();
        assert_eq!(lines.len(), 2);
        assert_eq!(lines[0].stops[0].stop_id, "s1");
        let back = lines_to_csv(&lines);
        assert!(back.starts_with("line_id,stop_id,seq,lon,lat\nL1,s1,0,"));
    }

    #[test]
    fn line_errors() {
        let short = file("line_id,stop_id,seq,lon,lat\nL1,s1,1,0,0\n");
        assert!(matches!(
            load_lines(short.path()),
            Err(IngestError::InvalidLine { .. })
        ));
        let dup = file("line_id,stop_id,seq,lon,lat\nL1,s1,1,0,0\nL1,s1,2,0,0\n");
        assert!(matches!(
            load_lines(dup.path()),
            Err(IngestError::InvalidLine { .. })
        ));
        let bad = file("line_id,stop_id,seq,lon,lat\nL1,s1,x,0,0\n");
        let err = load_lines(bad.path()).unwrap_err();
        assert!(matches!(err, IngestError::Csv { line: 2, .. }), "{err}");
    }

    #[test]
    fn flows_parse() {
        let f = file("origin,destination,hour,count\nA,B,8,120\nA,A,8,50\nB,A,9,3\n");
        let table = load_flows(f.path()).unwrap();
        assert_eq!(
            table.records[0],
            FlowRecord {
                origin: "A".into(),
                destination: "B".into(),
                hour: 8,
                count: 120
            }
        );
        assert_eq!(table.records.len(), 2);
        assert_eq!(table.dropped_intra_zone, 1);
    }

    #[test]
    fn flow_errors_carry_line_numbers() {
        let neg = file("origin,destination,hour,count\nA,B,8,1\nA,B,8,-4\n");
        let err = load_flows(neg.path()).unwrap_err();
        assert!(matches!(err, IngestError::Csv { line: 3, .. }), "{err}");
        let hour = file("origin,destination,hour,count\nA,B,24,1\n");
        assert!(matches!(
            load_flows(hour.path()),
            Err(IngestError::Csv { line: 2, .. })
        ));
        let header = file("from,to,hour,count\n");
        assert!(matches!(
            load_flows(header.path()),
            Err(IngestError::Csv { line: 1, .. })
        ));
    }

    #[test]
    fn flood_masks() {
        let ids = file("Z1\n\n# comment\nZ2\n");
        assert_eq!(
            load_flood_mask(ids.path()).unwrap(),
            FloodMask::Zones(vec!["Z1".into(), "Z2".into()])
        );
        let poly = file(TWO_ZONES);
        assert!(
            matches!(load_flood_mask(poly.path()).unwrap(), FloodMask::Polygons(p) if p.len() == 2)
        );
        let empty = file("  \n");
        assert!(matches!(
            load_flood_mask(empty.path()),
            Err(IngestError::Empty(_))
        ));
    }

    #[test]
    fn gtfs_subset() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(
            dir.path().join("stops.txt"),
            "stop_id,stop_name,stop_lat,stop_lon\ns1,a,0.5,0.5\ns2,b,0.5,2.5\ns3,c,0.2,2.2\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("trips.txt"),
            "route_id,service_id,trip_id\nR1,wk,t1\nR1,wk,t2\n",
        )
        .unwrap();
        fs::write(
            dir.path().join("stop_times.txt"),
            "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n\
             t1,08:00:00,08:00:00,s1,1\nt1,08:05:00,08:05:00,s2,2\n\
             t2,09:00:00,09:00:00,s2,1\nt2,09:05:00,09:05:00,s3,2\nt2,09:09:00,09:09:00,s1,3\nt2,09:20:00,09:20:00,s2,4\n",
        )
        .unwrap();
        let lines = load_gtfs(dir.path()).unwrap();
        assert_eq!(lines.len(), 1);
        let ids: Vec<&str> = lines[0].stops.iter().map(|s| s.stop_id.as_str()).collect();
        assert_eq!(ids, ["s2", "s3", "s1"]);
        assert_eq!(lines[0].stops[0].lon, 2.5);
    }
}
