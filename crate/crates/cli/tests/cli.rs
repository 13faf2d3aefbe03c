use std::fs;
use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use serde_json::Value;
use umn_core::ingest::{lines_to_csv, Polygon, Stop, TransitLine, ZoneGeometry};
use umn_core::{fixtures, Dataset, UrbanMultiplexNetwork};

fn umn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_umn"))
        .args(args)
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_net(dir: &Path, name: &str, net: UrbanMultiplexNetwork) -> String {
    let path = dir.join(name);
    fs::write(&path, Dataset::from_network(net).to_json()).unwrap();
    path.display().to_string()
}

fn write_trio(dir: &Path) {
    let zones: Vec<ZoneGeometry> = ["A", "B", "C", "D"]
        .iter()
        .enumerate()
        .map(|(i, id)| {
            let x = i as f64;
            ZoneGeometry {
                id: (*id).into(),
                name: format!("Zone {id}"),
                polygons: vec![Polygon::new(vec![vec![
                    [x, 0.0],
                    [x + 1.0, 0.0],
                    [x + 1.0, 1.0],
                    [x, 1.0],
                ]])],
            }
        })
        .collect();
    let stop = |id: &str, lon: f64| Stop {
        stop_id: id.into(),
        lon,
        lat: 0.5,
    };
    let lines = vec![
        TransitLine {
            id: "layer1".into(),
            stops: vec![stop("a1", 0.5), stop("b1", 1.5), stop("c1", 2.5)],
        },
        TransitLine {
            id: "layer2".into(),
            stops: vec![stop("c2", 2.6), stop("d2", 3.5)],
        },
    ];
    fs::write(dir.join("zones.geojson"), fixtures::zones_geojson(&zones)).unwrap();
    fs::write(dir.join("lines.csv"), lines_to_csv(&lines)).unwrap();
    fs::write(
        dir.join("flows.csv"),
        "origin,destination,hour,count\nA,B,8,10\nA,C,8,20\nB,C,8,30\nD,C,8,5\n",
    )
    .unwrap();
    fs::write(dir.join("flood.txt"), "C\n").unwrap();
}

#[test]
fn ingest_fixture_trio() {
    let dir = tempfile::tempdir().unwrap();
    write_trio(dir.path());
    let d = |f: &str| dir.path().join(f).display().to_string();
    let out = umn(&[
        "ingest",
        "--zones",
        &d("zones.geojson"),
        "--lines",
        &d("lines.csv"),
        "--flows",
        &d("flows.csv"),
        "--flood",
        &d("flood.txt"),
        "--hours",
        "7-9",
        "--out",
        &d("out"),
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(stdout(&out).contains("zones: 4"));
    assert!(stdout(&out).contains("lines: 2"));

    let ds = Dataset::load(dir.path().join("out/network.json")).unwrap();
    assert_eq!(ds.network, fixtures::n1());
    let report: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/report.json")).unwrap())
            .unwrap();
    assert_eq!(report["report"]["zones"], 4);
    assert_eq!(report["run"]["hours"], serde_json::json!([7, 8, 9]));
    assert_eq!(report["fingerprint"], ds.network.fingerprint());
    let flood: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/flood.json")).unwrap())
            .unwrap();
    assert_eq!(flood["flooded_zones"], serde_json::json!(["C"]));
}

#[test]
fn ingest_singapore_shaped_counts() {
    let dir = tempfile::tempdir().unwrap();
    fixtures::singapore_shaped().write_to(dir.path()).unwrap();
    let d = |f: &str| dir.path().join(f).display().to_string();
    let out = umn(&[
        "ingest",
        "--zones",
        &d("zones.geojson"),
        "--lines",
        &d("lines.csv"),
        "--flows",
        &d("flows.csv"),
        "--out",
        &d("out"),
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("zones: 323"), "{text}");
    assert!(text.contains("stops: 4856 (4856 assigned"), "{text}");
    assert!(text.contains("lines: 300"), "{text}");
}

#[test]
fn ingest_missing_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let d = |f: &str| dir.path().join(f).display().to_string();
    let out = umn(&[
        "ingest",
        "--zones",
        &d("nope.geojson"),
        "--lines",
        &d("l.csv"),
        "--flows",
        &d("f.csv"),
        "--out",
        &d("o"),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nope.geojson"));
}

#[test]
fn metrics_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_net(dir.path(), "n1.json", fixtures::n1());
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = umn(&[
            "metrics",
            "--net",
            &net,
            "--out",
            out.to_str().unwrap(),
            "--bins",
            "4",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        assert!(stdout(&o).contains("pairs: 4"));
    }
    let snap: Value =
        serde_json::from_str(&fs::read_to_string(a.join("snapshot.json")).unwrap()).unwrap();
    assert_eq!(snap["snapshot"]["pairs"].as_array().unwrap().len(), 4);
    assert_eq!(snap["run"]["metrics"]["weight-mode"], "count");
    let csv = fs::read_to_string(a.join("connectivity_histogram.csv")).unwrap();
    assert!(csv.starts_with("lower,upper,count\n"));
    assert_eq!(csv.lines().count(), 5);
    for f in ["snapshot.json", "connectivity_histogram.csv"] {
        let ra = fs::read_to_string(a.join(f))
            .unwrap()
            .replace(a.to_str().unwrap(), "OUT");
        let rb = fs::read_to_string(b.join(f))
            .unwrap()
            .replace(b.to_str().unwrap(), "OUT");
        assert_eq!(ra, rb, "{f}");
    }
}

#[test]
fn metrics_on_edgeless_network() {
    let dir = tempfile::tempdir().unwrap();
    let empty = UrbanMultiplexNetwork::new(["A".into(), "B".into()], ["x".into()], []).unwrap();
    let net = write_net(dir.path(), "empty.json", empty);
    let out = dir.path().join("out");
    let o = umn(&["metrics", "--net", &net, "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let snap: Value =
        serde_json::from_str(&fs::read_to_string(out.join("snapshot.json")).unwrap()).unwrap();
    assert_eq!(snap["snapshot"]["pairs"], serde_json::json!([]));

    let o = umn(&["percolate", "--net", &net, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn percolate_single_edge_and_bridge() {
    let dir = tempfile::tempdir().unwrap();
    let single = write_net(dir.path(), "single.json", fixtures::single_edge());
    let out = dir.path().join("single");
    let o = umn(&[
        "percolate",
        "--net",
        &single,
        "--order",
        "weak",
        "--recompute",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(out.join("percolation.csv")).unwrap();
    assert_eq!(csv, "fraction_removed,relative_giant\n0,1\n1,0.5\n");
    assert!(stdout(&o).contains("first_disruption(0.03) = 1"));

    let bridge = write_net(dir.path(), "bridge.json", fixtures::two_clique_bridge());
    let onset = |order: &str| -> f64 {
        let out = dir.path().join(order);
        let o = umn(&[
            "percolate",
            "--net",
            &bridge,
            "--order",
            order,
            "--out",
            out.to_str().unwrap(),
            "--grid",
            "11",
        ]);
        assert!(o.status.success());
        assert!(out.join("percolation_grid.csv").exists());
        let text = stdout(&o);
        let line = text
            .lines()
            .find(|l| l.starts_with("first_disruption(0.5)"))
            .unwrap();
        line.rsplit(' ').next().unwrap().parse().unwrap()
    };
    assert!(onset("weak") < onset("strong"));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(umn(&["metrics", "--bogus"]).status.code(), Some(1));
    assert_eq!(umn(&[]).status.code(), Some(1));
    assert_eq!(
        umn(&[
            "percolate",
            "--net",
            "x",
            "--out",
            "y",
            "--recompute",
            "--static"
        ])
        .status
        .code(),
        Some(1)
    );
    assert_eq!(
        umn(&["serve", "--net", "x", "--listen", "not-an-address"])
            .status
            .code(),
        Some(1)
    );
    assert!(umn(&["--help"]).status.success());
}

#[test]
fn serve_answers_health_and_services() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("n1.json");
    fs::write(&path, fixtures::n1_dataset().to_json()).unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_umn"))
        .args([
            "serve",
            "--net",
            path.to_str().unwrap(),
            "--listen",
            "127.0.0.1:0",
        ])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let addr = line
        .trim()
        .trim_start_matches("listening on http://")
        .to_owned();

    let get = |uri: &str| -> String {
        let mut s = TcpStream::connect(&addr).unwrap();
        write!(
            s,
            "GET {uri} HTTP/1.1\r\nHost: localhost\r\nConnection: close\r\n\r\n"
        )
        .unwrap();
        let mut resp = String::new();
        s.read_to_string(&mut resp).unwrap();
        resp
    };
    let health = get("/health");
    let services = get("/area/C/services");
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(health.starts_with("HTTP/1.1 200"), "{health}");
    assert!(
        services.contains(r#""services":["layer1","layer2"]"#),
        "{services}"
    );
}

#[test]
fn serve_bind_failure_is_a_runtime_error() {
    let dir = tempfile::tempdir().unwrap();
    let net = write_net(dir.path(), "n1.json", fixtures::n1());
    let taken = std::net::TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = taken.local_addr().unwrap().to_string();
    let o = umn(&["serve", "--net", &net, "--listen", &addr]);
    assert_eq!(o.status.code(), Some(3));
}
