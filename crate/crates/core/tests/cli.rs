use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::Command;

use review_diffusion::cli::{run, selfcheck_with, ANALYSIS_FILES};
use review_diffusion::fixtures;
use review_diffusion::oracle::enumerate_journeys;
use review_diffusion::selfcheck::default_evaluator;
use review_diffusion::{DistanceSummary, TemporalHypergraph};

fn cli(args: &[&str]) -> (u8, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["review-diffusion"];
    argv.extend_from_slice(args);
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const EVENTS: &str = "channel_id,participant_id,timestamp,kind
1,alice,2020-02-03T09:00:00Z,create
1,bob,2020-02-03T10:00:00Z,comment
1,ci-bot,2020-02-03T10:05:00Z,comment
1,alice,2020-02-04T08:00:00Z,close
2,bob,2020-02-04T09:00:00Z,create
2,carol,2020-02-05T11:00:00Z,approve
2,bob,2020-02-06T12:00:00Z,close
3,dave,2020-01-30T12:00:00Z,create
3,carol,2020-02-07T12:00:00Z,comment
3,dave,2020-02-08T12:00:00Z,close
4,erin,2020-01-02T12:00:00Z,create
4,erin,2020-01-03T12:00:00Z,close
";

fn ingest_fixture(dir: &Path) -> std::path::PathBuf {
    let events = dir.join("e.csv");
    fs::write(&events, EVENTS).unwrap();
    fs::write(dir.join("bots.txt"), "# automation\n*-bot\n").unwrap();
    let graph = dir.join("graph.json");
    let (code, out, err) = cli(&[
        "ingest", "--events", p(&events), "--monday", "2020-02-03", "--weeks", "4", "--bots", p(&dir.join("bots.txt")), "--salt", "s1", "-o", p(&graph),
    ]);
    assert_eq!(code, 0, "{err}");
    assert!(out.contains("right-bounded"));
    graph
}

#[test]
fn ingest_happy_path() {
    let dir = tempfile::tempdir().unwrap();
    let graph = ingest_fixture(dir.path());
    let file: review_diffusion::GraphFile = serde_json::from_slice(&fs::read(&graph).unwrap()).unwrap();
    assert_eq!(file.channels.len(), 3);
    let text = fs::read_to_string(&graph).unwrap();
    assert!(!text.contains("alice") && !text.contains("ci-bot"));
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["events_read"], 12);
    assert_eq!(report["events_dropped_by_bot"], 1);
    assert_eq!(report["events_dropped_by_window"], 2);
    assert_eq!(report["events_kept"], 9);
    assert_eq!(report["bound_histogram"]["right-bounded"], 1);
    assert_eq!(report["bound_histogram"]["bounded"], 2);
}

#[test]
fn ingest_errors() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("e.csv");
    fs::write(&events, EVENTS).unwrap();
    let out = dir.path().join("g.json");

    let (code, _, err) = cli(&["ingest", "--events", p(&events), "--monday", "2020-02-03", "-o", p(&out)]);
    assert_eq!(code, 2);
    assert!(err.contains("--salt"), "{err}");

    let (code, _, err) = cli(&["ingest", "--events", p(&events), "--monday", "2020-02-04", "--salt", "x", "-o", p(&out)]);
    assert_eq!(code, 2, "{err}");

    let (code, _, err) = cli(&["ingest", "--events", p(&events), "--monday", "2021-02-01", "--salt", "x", "-o", p(&out)]);
    assert_eq!(code, 1);
    assert!(err.contains("no channel intersects"), "{err}");

    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "channel_id,participant_id,timestamp,kind\n1,a,5,comment\n1,b,6,emoji\n").unwrap();
    let (code, _, err) = cli(&["ingest", "--events", p(&bad), "--monday", "1970-01-05", "--salt", "x", "-o", p(&out)]);
    assert_eq!(code, 1);
    assert!(err.contains("line 3"), "{err}");
}

fn write_graph(dir: &Path, g: &TemporalHypergraph) -> std::path::PathBuf {
    let path = dir.join("graph.json");
    fs::write(&path, g.to_file().to_json_pretty()).unwrap();
    path
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path).unwrap().lines().skip(1).map(|l| l.split(',').map(str::to_owned).collect()).collect()
}

#[test]
fn analyze_figure_matches_oracle() {
    let dir = tempfile::tempdir().unwrap();
    let g = fixtures::figure_all_reachable();
    let graph = write_graph(dir.path(), &g);
    let out = dir.path().join("out");
    let (code, _, err) = cli(&["analyze", "--graph", p(&graph), "-o", p(&out), "--grid", "1", "--workers", "2"]);
    assert_eq!(code, 0, "{err}");
    for f in ANALYSIS_FILES.iter().chain(&["manifest.json"]) {
        assert!(out.join(f).exists(), "{f}");
    }

    // expected values straight from journey enumeration
    let mut horizons = Vec::new();
    let mut hops: BTreeMap<u32, usize> = BTreeMap::new();
    let mut durations: BTreeMap<i64, usize> = BTreeMap::new();
    for src in g.participants() {
        let r = enumerate_journeys(&g, src.as_str(), g.channel_count()).unwrap();
        horizons.push(vec![src.to_string(), r.minima.len().to_string(), format!("{:.6}", r.minima.len() as f64 / 6.0)]);
        for m in r.minima.values() {
            *hops.entry(m.min_hops).or_default() += 1;
            *durations.entry(m.min_duration).or_default() += 1;
        }
    }
    assert_eq!(read_csv(&out.join("horizons.csv")), horizons);
    let pairs: usize = hops.values().sum();
    let mut cum = 0;
    let expected_hops: Vec<Vec<String>> = hops
        .iter()
        .map(|(h, c)| {
            cum += c;
            vec![h.to_string(), format!("{:.6}", cum as f64 / pairs as f64)]
        })
        .collect();
    assert_eq!(read_csv(&out.join("topological_ecdf.csv")), expected_hops);
    cum = 0;
    let expected_durations: Vec<Vec<String>> = durations
        .iter()
        .map(|(d, c)| {
            cum += c;
            vec![format!("{:.3}", *d as f64 / 86_400.0), format!("{:.6}", cum as f64 / pairs as f64)]
        })
        .collect();
    assert_eq!(read_csv(&out.join("temporal_ecdf.csv")), expected_durations);

    // growth bands on grid 1..=10: horizons by t=10 are [5,5,5,4,3,3]
    let bands = read_csv(&out.join("growth_bands.csv"));
    assert_eq!(bands.len(), 10);
    assert_eq!(bands.last().unwrap(), &["10", "3", "3", "4", "5", "5"].map(String::from));
    let percentiles = fs::read_to_string(out.join("percentiles.csv")).unwrap();
    assert!(percentiles.contains("absolute_range,0.50,4,5\n"), "{percentiles}");
    assert!(percentiles.contains("topological_distance,max,2,2\n"), "{percentiles}");
    assert_eq!(read_csv(&out.join("bounds.csv"))[0], ["bounded", "4", "1.000000"].map(String::from));
}

#[test]
fn analyze_is_byte_identical_across_workers() {
    let dir = tempfile::tempdir().unwrap();
    let g = review_diffusion::synthetic::generate(&review_diffusion::synthetic::SyntheticParams {
        participants: 120,
        channels: 500,
        ..Default::default()
    });
    let graph = write_graph(dir.path(), &g);
    let (a, b) = (dir.path().join("w1"), dir.path().join("w8"));
    assert_eq!(cli(&["analyze", "--graph", p(&graph), "-o", p(&a), "--workers", "1", "--witness"]).0, 0);
    assert_eq!(cli(&["analyze", "--graph", p(&graph), "-o", p(&b), "--workers", "8", "--witness"]).0, 0);
    for f in ANALYSIS_FILES.iter().chain(&["manifest.json", "witnesses.csv"]) {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn analyze_errors() {
    let dir = tempfile::tempdir().unwrap();
    let corrupt = dir.path().join("bad.json");
    fs::write(&corrupt, "{\"window\": {\"start\": 0, \"end\": 10}, \"channels\": [\n  {\"id\": 1}").unwrap();
    let (code, _, err) = cli(&["analyze", "--graph", p(&corrupt), "-o", p(&dir.path().join("o"))]);
    assert_eq!(code, 1);
    assert!(err.contains("line 2"), "{err}");

    let graph = write_graph(dir.path(), &fixtures::figure_all_reachable());
    let (code, _, _) = cli(&["analyze", "--graph", p(&graph), "-o", p(&graph)]);
    assert_eq!(code, 3);
    let out = dir.path().join("o");
    assert_eq!(cli(&["analyze", "--graph", p(&graph), "-o", p(&out), "--grid", "1"]).0, 0);
    assert_eq!(cli(&["analyze", "--graph", p(&graph), "-o", p(&out), "--grid", "1"]).0, 3);
    assert_eq!(cli(&["analyze", "--graph", p(&graph), "-o", p(&out), "--grid", "1", "--force"]).0, 0);
    // 3 seconds does not divide the 10 second window
    assert_eq!(cli(&["analyze", "--graph", p(&graph), "-o", p(&out), "--grid", "3", "--force"]).0, 2);
    assert_eq!(cli(&["analyze", "--graph", p(&graph), "-o", p(&out), "--percentiles", "1.5", "--force"]).0, 2);
}

#[test]
fn report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let graph = write_graph(dir.path(), &fixtures::figure_all_reachable());
    let out = dir.path().join("o");
    assert_eq!(cli(&["analyze", "--graph", p(&graph), "-o", p(&out), "--grid", "1"]).0, 0);
    let (code, text, _) = cli(&["report", "--input", p(&out)]);
    assert_eq!(code, 0);
    assert!(text.contains("normalized_range") && text.contains("bounded"));
    let (_, json, _) = cli(&["report", "--input", p(&out), "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["bounds"][0]["count"], 4);
    let (_, csv, _) = cli(&["report", "--input", p(&out), "--format", "csv"]);
    assert!(csv.starts_with("metric,p,lower,upper\n"));
    assert_eq!(cli(&["report", "--input", p(&dir.path().join("missing"))]).0, 1);
}

#[test]
fn selfcheck_verdicts() {
    let (code, out, _) = cli(&["selfcheck"]);
    assert_eq!(code, 0, "{out}");
    assert!(out.contains("PASS  figure-all-reachable"));

    let perturbed = |g: &TemporalHypergraph, s: &str| -> DistanceSummary {
        let mut summary = default_evaluator(g, s);
        if let Some(d) = summary.targets.values_mut().next() {
            d.min_duration += 1;
        }
        summary
    };
    let mut out = Vec::new();
    assert_eq!(selfcheck_with(&fixtures::bundled(), &perturbed, &mut out), 1);
    assert!(String::from_utf8(out).unwrap().contains("FAIL"));
    assert_eq!(selfcheck_with(&[], &default_evaluator, &mut Vec::new()), 2);
}

#[test]
fn binary_exit_codes_and_env_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("e.csv");
    fs::write(&events, EVENTS).unwrap();
    let bin = env!("CARGO_BIN_EXE_review-diffusion");
    let status = Command::new(bin)
        .args(["ingest", "--events", p(&events), "--monday", "2020-02-03", "-o", p(&dir.path().join("g.json"))])
        .env_remove("REVIEW_DIFFUSION_SALT")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = Command::new(bin)
        .args(["ingest", "--events", p(&events), "--monday", "2020-02-03", "-o", p(&dir.path().join("g.json"))])
        .env("REVIEW_DIFFUSION_SALT", "from-env")
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(Command::new(bin).arg("selfcheck").output().unwrap().status.code(), Some(0));
}
