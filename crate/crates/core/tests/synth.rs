use std::collections::HashSet;

use trendflow::backbone::{tune_alpha, RetentionRule, TuneGrid};
use trendflow::depnet::{build_dependence_network, WeightingMode};
use trendflow::model::{
    parse_log, validate_log, write_jsonl, LogFormat, ObservationLog, TrendEpisodeTable, TOP_N,
};
use trendflow::stats::spread_histogram;
use trendflow::synth::{generate, GeneratorConfig, GroundTruth};
use trendflow::trendsetters::count_before_after;
use trendflow::Error;

fn jsonl(log: &ObservationLog) -> Vec<u8> {
    let mut out = Vec::new();
    write_jsonl(log, &mut out).unwrap();
    out
}

fn default_run() -> (ObservationLog, GroundTruth) {
    generate(&GeneratorConfig::default()).unwrap()
}

#[test]
fn same_seed_same_bytes() {
    let cfg = GeneratorConfig::preset("small").unwrap();
    let (a, ta) = generate(&cfg).unwrap();
    let (b, tb) = generate(&cfg).unwrap();
    assert_eq!(jsonl(&a), jsonl(&b));
    assert_eq!(ta, tb);
    let (c, _) = generate(&GeneratorConfig {
        seed: cfg.seed + 1,
        ..cfg
    })
    .unwrap();
    assert_ne!(jsonl(&a), jsonl(&c));
}

#[test]
fn output_is_a_valid_log() {
    let (log, _) = default_run();
    assert!(log.snapshots().iter().all(|s| s.entries.len() <= TOP_N));
    let bytes = jsonl(&log);
    let report = validate_log(
        &bytes[..],
        LogFormat::Jsonl,
        Some(log.catalog()),
        log.tick_secs(),
    )
    .unwrap();
    assert!(
        report.violations.is_empty(),
        "{:?}",
        &report.violations[..3.min(report.violations.len())]
    );
    let parsed = parse_log(&bytes[..], LogFormat::Jsonl, log.catalog_arc().clone(), 600).unwrap();
    assert_eq!(parsed, log);
}

#[test]
fn truth_matches_log() {
    let (log, truth) = default_run();
    let catalog = log.catalog();
    let mut from_log = HashSet::new();
    for s in log.snapshots() {
        let tick = ((s.timestamp.0 - truth.epoch) / truth.tick_secs) as u32;
        for e in &s.entries {
            from_log.insert((
                e.name.text().to_string(),
                catalog.get(s.location).id.clone(),
                tick,
            ));
        }
    }
    let mut from_truth = HashSet::new();
    for t in &truth.trends {
        for a in &t.appearances {
            for &(start, end) in &a.runs {
                for tick in start..end {
                    assert!(from_truth.insert((t.name.clone(), a.location.clone(), tick)));
                }
            }
        }
    }
    assert_eq!(from_log, from_truth);
    // every trend that went national shows up in the country list
    let country = catalog.get(catalog.country().unwrap()).id.clone();
    for t in truth.trends.iter().filter(|t| t.country_tick.is_some()) {
        assert!(t.global);
        assert!(t.appearances.iter().any(|a| a.location == country));
    }
}

#[test]
fn spread_is_bimodal() {
    let (log, _) = default_run();
    let h = spread_histogram(&TrendEpisodeTable::build(&log));
    assert!(h.fraction_in(0..=3) >= 0.30, "{}", h.fraction_in(0..=3));
    assert!(h.fraction_in(60..=63) >= 0.20, "{}", h.fraction_in(60..=63));
}

#[test]
fn hubs_lead_in_before_counts() {
    let (log, truth) = default_run();
    let counts = count_before_after(
        &TrendEpisodeTable::build(&log),
        WeightingMode::Uniform,
        60.0,
    )
    .unwrap();
    let hubs: HashSet<&str> = truth.hubs().into_iter().collect();
    assert_eq!(hubs.len(), 11);
    let min_hub = counts
        .cities
        .iter()
        .filter(|c| hubs.contains(c.id.as_str()))
        .map(|c| c.n_before)
        .fold(f64::INFINITY, f64::min);
    let max_other = counts
        .cities
        .iter()
        .filter(|c| !hubs.contains(c.id.as_str()))
        .map(|c| c.n_before)
        .fold(0.0, f64::max);
    assert!(min_hub > max_other, "{min_hub} vs {max_other}");
}

#[test]
fn single_local_trend_stays_home() {
    let cfg = GeneratorConfig {
        n_trends: 1,
        p_local: 1.0,
        ..Default::default()
    };
    let (log, truth) = generate(&cfg).unwrap();
    let t = &truth.trends[0];
    assert!(!t.global && t.country_tick.is_none());
    let home = t.cluster.unwrap();
    assert!(t
        .appearances
        .iter()
        .all(|a| truth.cluster_of(&a.location) == Some(home)));
    let table = TrendEpisodeTable::build(&log);
    assert_eq!(table.trends().len(), 1);
    assert!(table.country_row(0).is_none());
}

#[test]
fn default_backbone_threshold() {
    let (log, _) = default_run();
    let net = build_dependence_network(
        &TrendEpisodeTable::build(&log),
        WeightingMode::Uniform,
        60.0,
    )
    .unwrap();
    let (alpha, backbone) =
        tune_alpha(&net, RetentionRule::BothEndpoints, TuneGrid::default()).unwrap();
    assert!((0.1..=0.5).contains(&alpha), "{alpha}");
    assert!(backbone.connected);
}

#[test]
fn overloaded_config_is_rejected() {
    let cfg = GeneratorConfig {
        n_locations: 1,
        n_clusters: 1,
        n_hubs: 0,
        ticks: 10,
        n_trends: 200,
        global_trend_fraction: 0.0,
        ..Default::default()
    };
    match generate(&cfg) {
        Err(Error::InfeasibleConfig(msg)) => assert!(msg.contains("trend-ticks"), "{msg}"),
        other => panic!("expected infeasible config, got {other:?}"),
    }
    let bad = GeneratorConfig {
        p_local: 1.5,
        ..Default::default()
    };
    assert!(matches!(generate(&bad), Err(Error::InfeasibleConfig(_))));
    assert!(GeneratorConfig::preset("huge").is_err());
}

#[test]
fn truth_json_round_trip() {
    let (_, truth) = generate(&GeneratorConfig::preset("small").unwrap()).unwrap();
    assert_eq!(truth.hubs().len(), 4);
    let back = GroundTruth::from_json(&truth.to_json().unwrap()).unwrap();
    assert_eq!(back, truth);
}
