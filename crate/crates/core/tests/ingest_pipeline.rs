use std::collections::BTreeSet;
use std::fs;
use std::time::Instant;

use umn_core::fixtures;
use umn_core::ingest::{
    build_umn, load_flood_mask, load_flows, load_lines, load_zones, resolve_flood_mask, Polygon,
    Stop, TransitLine, ZoneGeometry,
};
use umn_core::{WeightMode, ZoneId};

fn square(id: &str, x0: f64, y0: f64) -> ZoneGeometry {
    ZoneGeometry {
        id: id.into(),
        name: id.into(),
        polygons: vec![Polygon::new(vec![vec![
            [x0, y0],
            [x0 + 1.0, y0],
            [x0 + 1.0, y0 + 1.0],
            [x0, y0 + 1.0],
        ]])],
    }
}

fn stop(id: &str, lon: f64, lat: f64) -> Stop {
    Stop {
        stop_id: id.into(),
        lon,
        lat,
    }
}

#[test]
fn files_reproduce_n1() {
    let dir = tempfile::tempdir().unwrap();
    let zones = vec![
        square("A", 0.0, 0.0),
        square("B", 1.0, 0.0),
        square("C", 2.0, 0.0),
        square("D", 3.0, 0.0),
    ];
    let lines = vec![
        TransitLine {
            id: "layer1".into(),
            stops: vec![
                stop("a1", 0.5, 0.5),
                stop("b1", 1.5, 0.5),
                stop("c1", 2.5, 0.5),
            ],
        },
        TransitLine {
            id: "layer2".into(),
            stops: vec![stop("c2", 2.5, 0.6), stop("d2", 3.5, 0.5)],
        },
    ];
    fs::write(
        dir.path().join("zones.geojson"),
        fixtures::zones_geojson(&zones),
    )
    .unwrap();
    fs::write(
        dir.path().join("lines.csv"),
        umn_core::ingest::lines_to_csv(&lines),
    )
    .unwrap();
    fs::write(
        dir.path().join("flows.csv"),
        "origin,destination,hour,count\nA,B,8,6\nB,A,8,4\nA,C,8,20\nC,B,8,30\nC,D,8,5\nC,D,3,99\nA,A,8,7\n",
    )
    .unwrap();
    fs::write(dir.path().join("flood.txt"), "C\n").unwrap();

    let zones = load_zones(dir.path().join("zones.geojson")).unwrap();
    let lines = load_lines(dir.path().join("lines.csv")).unwrap();
    let flows = load_flows(dir.path().join("flows.csv")).unwrap();
    let window: BTreeSet<u8> = (7..=9).collect();
    let (ds, report) = build_umn(&zones, &lines, &flows, &window, WeightMode::Count).unwrap();
    assert_eq!(ds.network, fixtures::n1());
    assert_eq!(report.zones, 4);
    assert_eq!(report.stops, 5);
    assert_eq!(report.rows_outside_window, 1);
    assert_eq!(report.dropped_flow_rows, 1);
    assert_eq!(ds.pair_flows, fixtures::n1_dataset().pair_flows);

    let mask = load_flood_mask(dir.path().join("flood.txt")).unwrap();
    let flooded = resolve_flood_mask(&mask, &zones).unwrap();
    assert_eq!(flooded, BTreeSet::from([ZoneId::from("C")]));
}

#[test]
fn singapore_shaped_counts() {
    let dir = tempfile::tempdir().unwrap();
    let city = fixtures::singapore_shaped();
    city.write_to(dir.path()).unwrap();

    let start = Instant::now();
    let zones = load_zones(dir.path().join("zones.geojson")).unwrap();
    let lines = load_lines(dir.path().join("lines.csv")).unwrap();
    let flows = load_flows(dir.path().join("flows.csv")).unwrap();
    let window: BTreeSet<u8> = (0..24).collect();
    let (ds, report) = build_umn(&zones, &lines, &flows, &window, WeightMode::Count).unwrap();
    let elapsed = start.elapsed();

    assert_eq!(report.zones, 323);
    assert_eq!(report.stops, 4856);
    assert_eq!(report.lines, 300);
    assert_eq!(report.assigned_stops, 4856);
    assert!(report.unassigned_stops.is_empty());
    assert!(ds.network.layer_count() >= 300);
    assert!(elapsed.as_secs() < 30, "{elapsed:?}");
}
