use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sha2::{Digest, Sha256};
use tempfile::TempDir;

fn trendflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trendflow"))
        .args(args)
        .env_remove("TRENDFLOW_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CATALOG: &str = "id,name,lat,lon,country_level\n\
    austin,Austin,30.27,-97.74,false\n\
    boston,Boston,42.36,-71.06,false\n\
    united_states,United States,39.83,-98.58,true\n";

fn snapshot(ts: &str, loc: &str, trends: &[(&str, u32)]) -> String {
    let entries: Vec<String> = trends
        .iter()
        .map(|(t, r)| format!(r#"{{"t":"{t}","r":{r},"p":false}}"#))
        .collect();
    format!(
        r#"{{"ts":"{ts}","loc":"{loc}","trends":[{}]}}"#,
        entries.join(",")
    )
}

fn write_fixture(dir: &Path, lines: &[String]) -> PathBuf {
    fs::write(dir.join("catalog.csv"), CATALOG).unwrap();
    let log = dir.join("log.jsonl");
    fs::write(
        &log,
        lines.iter().map(|l| format!("{l}\n")).collect::<String>(),
    )
    .unwrap();
    log
}

fn manifest(out: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn one_snapshot_stats_has_a_row_per_entry() {
    let dir = TempDir::new().unwrap();
    let names: Vec<String> = (1..=10).map(|i| format!("#topic{i}")).collect();
    let trends: Vec<(&str, u32)> = names
        .iter()
        .zip(1..)
        .map(|(n, r)| (n.as_str(), r))
        .collect();
    let log = write_fixture(
        dir.path(),
        &[snapshot("2013-04-12T00:00:00Z", "austin", &trends)],
    );
    let out = dir.path().join("out");
    let o = trendflow(&["run", "--stages", "stats", s(&log), "-o", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("stats.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("trend,kind,n_locations,lifetime_min,entropy_nats")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 10);
    assert!(
        rows.iter()
            .all(|r| r.ends_with(",1,10.0,0.0") || r.ends_with(",1,10,0")),
        "{rows:?}"
    );
}

#[test]
fn missing_input_names_the_path() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("nowhere.jsonl");
    let out = dir.path().join("out");
    let o = trendflow(&["run", "--all", s(&missing), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("nowhere.jsonl"), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["failure"]["stage"], "ingest");
    assert_eq!(m["artifacts"].as_array().unwrap().len(), 0);
}

#[test]
fn failing_stage_leaves_partial_manifest() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("catalog.csv"),
        "id,name,lat,lon,country_level\naustin,Austin,30.27,-97.74,false\n",
    )
    .unwrap();
    let log = dir.path().join("log.jsonl");
    fs::write(
        &log,
        snapshot("2013-04-12T00:00:00Z", "austin", &[("#a", 1)]) + "\n",
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = trendflow(&["run", "--stages", "setters,stats", s(&log), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["failure"]["stage"], "setters");
    let stages: Vec<&str> = m["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["stage"].as_str().unwrap())
        .collect();
    assert!(!stages.is_empty() && stages.iter().all(|&st| st == "stats"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(
        trendflow(&["stats", "--no-such-flag"]).status.code(),
        Some(1)
    );
    assert_eq!(
        trendflow(&["setters", "x.jsonl", "--mode", "sideways"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(trendflow(&["run", "--all"]).status.code(), Some(1));
}

#[test]
fn validate_reports_corrupted_rank_and_empty_file() {
    let dir = TempDir::new().unwrap();
    let lines = vec![
        snapshot("2013-04-12T00:00:00Z", "austin", &[("#a", 1), ("#b", 2)]),
        snapshot("2013-04-12T00:00:00Z", "boston", &[("#a", 1), ("#b", 0)]),
        snapshot("2013-04-12T00:10:00Z", "austin", &[("#a", 1)]),
    ];
    let log = write_fixture(dir.path(), &lines);
    let o = trendflow(&["validate", s(&log)]);
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("line 2: "), "{text}");
    assert!(text.contains("2 snapshots, 1 violations"), "{text}");

    let o = trendflow(&["validate", "--json", s(&log)]);
    let report: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["violations"].as_array().unwrap().len(), 1);
    assert_eq!(report["violations"][0]["line"], 2);

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = trendflow(&["validate", s(&empty)]);
    assert!(stdout(&o).contains("no snapshots"), "{}", stdout(&o));
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn flags_override_config_file() {
    let dir = TempDir::new().unwrap();
    let log = write_fixture(
        dir.path(),
        &[snapshot("2013-04-12T00:00:00Z", "austin", &[("#a", 1)])],
    );
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"stages": ["stats"], "setters": {"seed": 5, "k_max": 3}, "stats": {"entropy_bins": 7}}"#).unwrap();
    let out = dir.path().join("out");
    let o = trendflow(&[
        "run",
        "--config",
        s(&cfg),
        "--seed",
        "9",
        s(&log),
        "-o",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&out);
    assert_eq!(m["config"]["stages"], serde_json::json!(["stats"]));
    assert_eq!(m["config"]["setters"]["seed"], 9);
    assert_eq!(m["config"]["setters"]["k_max"], 3);
    assert_eq!(m["config"]["stats"]["entropy_bins"], 7);

    fs::write(&cfg, r#"{"stages": ["stats"], "typo": 1}"#).unwrap();
    let o = trendflow(&["run", "--config", s(&cfg), s(&log), "-o", s(&out)]);
    assert_eq!(o.status.code(), Some(1));
}

fn sha256_file(path: &Path) -> String {
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

#[test]
fn synth_validate_and_run_all() {
    let dir = TempDir::new().unwrap();
    let log = dir.path().join("log.jsonl");
    let truth = dir.path().join("truth.json");
    let o = trendflow(&["synth", "--seed", "4", "-o", s(&log), "--truth", s(&truth)]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(dir.path().join("catalog.csv").exists());
    let t: Value = serde_json::from_str(&fs::read_to_string(&truth).unwrap()).unwrap();
    assert_eq!(t["locations"].as_array().unwrap().len(), 63);

    let o = trendflow(&["validate", s(&log)]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert!(stdout(&o).contains(" 0 violations"));

    let out = dir.path().join("out");
    let o = trendflow(&["run", "--all", s(&log), "-o", s(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = manifest(&out);
    assert!(m["failure"].is_null());
    let artifacts = m["artifacts"].as_array().unwrap();
    for stage in ["stats", "depnet", "backbone", "cluster", "setters"] {
        assert!(
            artifacts.iter().any(|a| a["stage"] == stage),
            "no {stage} artifacts"
        );
    }
    // every file written is listed with its hash, and nothing else is
    let mut listed: Vec<String> = artifacts
        .iter()
        .map(|a| a["path"].as_str().unwrap().to_string())
        .collect();
    for a in artifacts {
        let path = out.join(a["path"].as_str().unwrap());
        assert_eq!(a["sha256"].as_str().unwrap(), sha256_file(&path));
        assert_eq!(
            a["bytes"].as_u64().unwrap(),
            fs::metadata(&path).unwrap().len()
        );
    }
    let mut on_disk: Vec<String> = fs::read_dir(&out)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n != "manifest.json")
        .collect();
    listed.sort();
    on_disk.sort();
    assert_eq!(listed, on_disk);

    let hubs: Vec<String> = t["locations"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|l| l["is_hub"] == true)
        .map(|l| l["id"].as_str().unwrap().to_string())
        .collect();
    let counts = fs::read_to_string(out.join("counts.csv")).unwrap();
    let mut setters: Vec<String> = counts
        .lines()
        .filter(|l| l.ends_with(",trendsetter"))
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    setters.sort();
    let mut hubs = hubs;
    hubs.sort();
    assert_eq!(setters, hubs);
}
