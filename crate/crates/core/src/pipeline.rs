//! End-to-end runs: ingest a log, run the requested stages and record every
//! artifact with its content hash.

use std::fmt;
use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::backbone::{extract_backbone, source_sink_ranking, tune_alpha, RetentionRule, TuneGrid};
use crate::depnet::{
    build_dependence_network, DependenceNetwork, WeightingMode, DEFAULT_LAG_HALFLIFE_MIN,
};
use crate::error::{Error, Result};
use crate::export;
use crate::geocluster::{self, Bandwidth, CutSpec, Kde};
use crate::model::{
    parse_log, validate_log, Catalog, LogFormat, TrendEpisodeTable, TrendKind, ValidationReport,
    DEFAULT_TICK_SECS,
};
use crate::stats::{self, Binning, LifetimeAxis};
use crate::trendsetters::{self, EmConfig, GmmConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Stats,
    Depnet,
    Backbone,
    Cluster,
    Setters,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Stats,
        Stage::Depnet,
        Stage::Backbone,
        Stage::Cluster,
        Stage::Setters,
    ];
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Stats => "stats",
            Stage::Depnet => "depnet",
            Stage::Backbone => "backbone",
            Stage::Cluster => "cluster",
            Stage::Setters => "setters",
        })
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown stage `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KindFilter {
    Hashtag,
    Phrase,
    #[default]
    Both,
}

impl KindFilter {
    pub fn kind(self) -> Option<TrendKind> {
        match self {
            KindFilter::Hashtag => Some(TrendKind::Hashtag),
            KindFilter::Phrase => Some(TrendKind::Phrase),
            KindFilter::Both => None,
        }
    }
}

impl FromStr for KindFilter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hashtag" => Ok(KindFilter::Hashtag),
            "phrase" => Ok(KindFilter::Phrase),
            "both" => Ok(KindFilter::Both),
            other => Err(Error::InvalidArgument(format!(
                "unknown trend kind `{other}`"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StatsParams {
    pub entropy_bins: usize,
}

impl Default for StatsParams {
    fn default() -> Self {
        StatsParams {
            entropy_bins: Binning::default().entropy_bins,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DepnetParams {
    pub mode: WeightingMode,
    pub lag_halflife_min: f64,
}

impl Default for DepnetParams {
    fn default() -> Self {
        DepnetParams {
            mode: WeightingMode::Uniform,
            lag_halflife_min: DEFAULT_LAG_HALFLIFE_MIN,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackboneParams {
    /// Fixed significance level; tuned for connectivity when absent.
    pub alpha: Option<f64>,
    /// Judge arcs by the source side only.
    pub out_only: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterParams {
    /// Dendrogram cut distances.
    pub cuts: Vec<f64>,
    /// Extra cut at exactly this many clusters.
    pub clusters: Option<usize>,
    pub kde_points: usize,
}

impl Default for ClusterParams {
    fn default() -> Self {
        ClusterParams {
            cuts: vec![0.25, 0.5, 0.75],
            clusters: None,
            kde_points: 512,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SettersParams {
    pub mode: WeightingMode,
    pub lag_halflife_min: f64,
    pub seed: u64,
    pub kind: KindFilter,
    pub k_max: usize,
    pub folds: usize,
}

impl Default for SettersParams {
    fn default() -> Self {
        SettersParams {
            mode: WeightingMode::Uniform,
            lag_halflife_min: DEFAULT_LAG_HALFLIFE_MIN,
            seed: 0,
            kind: KindFilter::Both,
            k_max: 10,
            folds: 5,
        }
    }
}

/// Everything a run needs. Loaded from a JSON document; missing fields take
/// their defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub input: PathBuf,
    /// Location catalog; `catalog.csv` next to the input when absent.
    pub catalog: Option<PathBuf>,
    /// Input format; guessed from the extension when absent.
    pub format: Option<LogFormat>,
    pub out_dir: PathBuf,
    pub stages: Vec<Stage>,
    pub tick_secs: i64,
    /// Keep promoted entries instead of dropping them on ingest.
    pub keep_promoted: bool,
    /// Log level name (`error` .. `trace`).
    pub verbosity: String,
    pub stats: StatsParams,
    pub depnet: DepnetParams,
    pub backbone: BackboneParams,
    pub cluster: ClusterParams,
    pub setters: SettersParams,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            input: PathBuf::new(),
            catalog: None,
            format: None,
            out_dir: PathBuf::from("out"),
            stages: Stage::ALL.to_vec(),
            tick_secs: DEFAULT_TICK_SECS,
            keep_promoted: false,
            verbosity: "warn".into(),
            stats: StatsParams::default(),
            depnet: DepnetParams::default(),
            backbone: BackboneParams::default(),
            cluster: ClusterParams::default(),
            setters: SettersParams::default(),
        }
    }
}

impl PipelineConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    pub fn catalog_path(&self) -> PathBuf {
        self.catalog
            .clone()
            .unwrap_or_else(|| default_catalog_path(&self.input))
    }

    pub fn log_format(&self) -> LogFormat {
        self.format
            .unwrap_or_else(|| LogFormat::from_path(&self.input))
    }
}

/// `catalog.csv` in the directory holding `input`.
pub fn default_catalog_path(input: &Path) -> PathBuf {
    input.parent().unwrap_or(Path::new("")).join("catalog.csv")
}

/// Reads a catalog CSV.
pub fn load_catalog(path: &Path) -> Result<Catalog> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    Catalog::read_csv(BufReader::new(file))
}

/// Reads the catalog and log named by `config` and builds the episode table.
pub fn ingest(config: &PipelineConfig) -> Result<TrendEpisodeTable> {
    let catalog = Arc::new(load_catalog(&config.catalog_path())?);
    let file = File::open(&config.input).map_err(|e| Error::io(&config.input, e))?;
    let log = parse_log(
        BufReader::new(file),
        config.log_format(),
        catalog,
        config.tick_secs,
    )?;
    let log = if config.keep_promoted {
        log
    } else {
        log.filter_promoted()
    };
    info!(
        "ingested {} snapshots, {} entries",
        log.snapshots().len(),
        log.entry_count()
    );
    Ok(TrendEpisodeTable::build(&log))
}

/// Checks a log file without stopping at the first problem. Location ids are
/// checked only when a catalog is given.
pub fn validate_file(
    input: &Path,
    format: Option<LogFormat>,
    catalog: Option<&Path>,
    tick_secs: i64,
) -> Result<ValidationReport> {
    let catalog = catalog.map(load_catalog).transpose()?;
    let file = File::open(input).map_err(|e| Error::io(input, e))?;
    let format = format.unwrap_or_else(|| LogFormat::from_path(input));
    validate_log(BufReader::new(file), format, catalog.as_ref(), tick_secs)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    pub stage: String,
    /// Relative to the output directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: PipelineConfig,
    pub input_sha256: Option<String>,
    pub artifacts: Vec<Artifact>,
    pub failure: Option<FailureRecord>,
}

pub const MANIFEST_FILE: &str = "manifest.json";

/// Outcome of [`run_pipeline`]: the manifest is written either way.
#[derive(Debug)]
pub struct PipelineRun {
    pub manifest: Manifest,
    pub error: Option<Error>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

struct Emitter<'a> {
    out_dir: &'a Path,
    artifacts: Vec<Artifact>,
}

impl Emitter<'_> {
    fn emit(&mut self, stage: &str, name: &str, bytes: Vec<u8>) -> Result<()> {
        let path = self.out_dir.join(name);
        fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        self.artifacts.push(Artifact {
            stage: stage.to_string(),
            path: name.to_string(),
            sha256: sha256_hex(&bytes),
            bytes: bytes.len() as u64,
        });
        Ok(())
    }

    fn emit_with(
        &mut self,
        stage: &str,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> Result<()>,
    ) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.emit(stage, name, buf)
    }

    fn emit_json(&mut self, stage: &str, name: &str, value: &impl Serialize) -> Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.emit(stage, name, buf)
    }
}

/// Runs the configured stages in their canonical order. A failing stage stops
/// the run; the manifest then lists what was written and the failure.
pub fn run_pipeline(config: &PipelineConfig) -> PipelineRun {
    // artifact paths are relative, so where they landed is not recorded
    let mut recorded = config.clone();
    recorded.out_dir = PathBuf::from(".");
    let mut manifest = Manifest {
        tool: "trendflow".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: recorded,
        input_sha256: None,
        artifacts: Vec::new(),
        failure: None,
    };
    if let Err(e) = fs::create_dir_all(&config.out_dir) {
        let error = Error::io(&config.out_dir, e);
        manifest.failure = Some(FailureRecord {
            stage: "setup".into(),
            error: error.to_string(),
        });
        return PipelineRun {
            manifest,
            error: Some(error),
        };
    }
    let mut emitter = Emitter {
        out_dir: &config.out_dir,
        artifacts: Vec::new(),
    };
    let mut stages = config.stages.clone();
    stages.sort_unstable();
    stages.dedup();

    let mut outcome = fs::read(&config.input)
        .map_err(|e| Error::io(&config.input, e))
        .map(|bytes| manifest.input_sha256 = Some(sha256_hex(&bytes)))
        .and_then(|()| ingest(config))
        .map_err(|e| ("ingest".to_string(), e));
    if let Ok(table) = &outcome {
        let mut network: Option<DependenceNetwork> = None;
        for stage in stages {
            info!("stage {stage}");
            if let Err(e) = run_stage(stage, config, table, &mut network, &mut emitter) {
                outcome = Err((stage.to_string(), e));
                break;
            }
        }
    }
    manifest.artifacts = emitter.artifacts;
    let error = match outcome {
        Ok(_) => None,
        Err((stage, error)) => {
            warn!("stage {stage} failed: {error}");
            manifest.failure = Some(FailureRecord {
                stage,
                error: error.to_string(),
            });
            Some(error)
        }
    };
    let written = serde_json::to_vec_pretty(&manifest)
        .map_err(Error::from)
        .and_then(|mut bytes| {
            bytes.push(b'\n');
            let path = config.out_dir.join(MANIFEST_FILE);
            fs::write(&path, bytes).map_err(|e| Error::io(path, e))
        });
    let error = match (error, written) {
        (Some(e), _) => Some(e),
        (None, Err(e)) => Some(e),
        (None, Ok(())) => None,
    };
    PipelineRun { manifest, error }
}

fn network<'a>(
    cache: &'a mut Option<DependenceNetwork>,
    table: &TrendEpisodeTable,
    params: &DepnetParams,
) -> Result<&'a DependenceNetwork> {
    if cache.is_none() {
        *cache = Some(build_dependence_network(
            table,
            params.mode,
            params.lag_halflife_min,
        )?);
    }
    Ok(cache.as_ref().expect("just built"))
}

fn cut_tag(cut: CutSpec) -> String {
    match cut {
        CutSpec::Distance(d) => format!("d{d}"),
        CutSpec::Count(k) => format!("k{k}"),
    }
}

fn run_stage(
    stage: Stage,
    config: &PipelineConfig,
    table: &TrendEpisodeTable,
    net_cache: &mut Option<DependenceNetwork>,
    out: &mut Emitter,
) -> Result<()> {
    let name = stage.to_string();
    let st = name.as_str();
    match stage {
        Stage::Stats => {
            let spread = stats::spread_stats(table);
            let binning = Binning {
                entropy_bins: config.stats.entropy_bins,
            };
            out.emit_with(st, "stats.csv", |b| export::write_stats(&spread, b))?;
            out.emit_with(st, "spread_histogram.csv", |b| {
                export::write_histogram(&stats::spread_histogram(table), b)
            })?;
            let by_n = stats::lifetime_curve(&spread, LifetimeAxis::NLocations, binning);
            out.emit_with(st, "lifetime_by_locations.csv", |b| {
                export::write_curve(&by_n, "n_locations", b)
            })?;
            let by_s = stats::lifetime_curve(&spread, LifetimeAxis::Entropy, binning);
            out.emit_with(st, "lifetime_by_entropy.csv", |b| {
                export::write_curve(&by_s, "entropy_nats", b)
            })?;
            out.emit_with(st, "lifetime_cdf.csv", |b| {
                export::write_cdf(&stats::lifetime_cdf(table), b)
            })?;
            out.emit_with(st, "episode_cdf.csv", |b| {
                export::write_cdf(&stats::episode_cdf(table), b)
            })?;
        }
        Stage::Depnet => {
            let net = network(net_cache, table, &config.depnet)?;
            out.emit_with(st, "depnet_edges.csv", |b| {
                export::write_edge_list(&net.nodes, net.arcs(), b)
            })?;
            out.emit_with(st, "depnet.dot", |b| {
                export::write_dot("depnet", &net.nodes, net.arcs(), b)
            })?;
        }
        Stage::Backbone => {
            let net = network(net_cache, table, &config.depnet)?;
            let rule = if config.backbone.out_only {
                RetentionRule::OutOnly
            } else {
                RetentionRule::BothEndpoints
            };
            let backbone = match config.backbone.alpha {
                Some(alpha) => extract_backbone(net, alpha, rule)?,
                None => tune_alpha(net, rule, TuneGrid::default())?.1,
            };
            if !backbone.connected {
                warn!(
                    "backbone at alpha = {} is not weakly connected",
                    backbone.alpha
                );
            }
            let arcs = || backbone.arcs.iter().copied();
            out.emit_with(st, "backbone_edges.csv", |b| {
                export::write_edge_list(&backbone.nodes, arcs(), b)
            })?;
            out.emit_with(st, "backbone.dot", |b| {
                export::write_dot("backbone", &backbone.nodes, arcs(), b)
            })?;
            out.emit_with(st, "backbone.geojson", |b| {
                export::write_geojson(table.catalog(), &backbone.nodes, arcs(), b)
            })?;
            let ranking = source_sink_ranking(&backbone);
            out.emit_with(st, "ranking.csv", |b| export::write_ranking(&ranking, b))?;
            out.emit_json(
                st,
                "backbone.json",
                &json!({
                    "alpha": backbone.alpha,
                    "tuned": config.backbone.alpha.is_none(),
                    "rule": rule,
                    "connected": backbone.connected,
                    "arcs": backbone.arcs.len(),
                    "network_arcs": net.arc_count(),
                }),
            )?;
        }
        Stage::Cluster => {
            let matrix = geocluster::jaccard_matrix(table)?;
            let mut cuts: Vec<CutSpec> = config
                .cluster
                .cuts
                .iter()
                .map(|&c| CutSpec::Distance(c))
                .collect();
            cuts.extend(config.cluster.clusters.map(CutSpec::Count));
            let (tree, models) = geocluster::cluster(&matrix, &cuts);
            out.emit_with(st, "similarity.csv", |b| export::write_matrix(&matrix, b))?;
            out.emit(
                st,
                "dendrogram.nwk",
                format!("{}\n", tree.to_newick()).into_bytes(),
            )?;
            for model in &models {
                let tag = cut_tag(model.cut);
                out.emit_with(st, &format!("clusters_{tag}.csv"), |b| {
                    export::write_assignment(&matrix, model, b)
                })?;
                let report = geocluster::cluster_significance(&matrix, model);
                let mut curves = Vec::new();
                let mut series: Vec<(String, Vec<f64>)> = report
                    .clusters
                    .iter()
                    .map(|c| {
                        (
                            format!("cluster_{}", c.cluster),
                            model.intra_similarities(&matrix, c.cluster),
                        )
                    })
                    .collect();
                series.push(("inter".into(), model.inter_similarities(&matrix)));
                for (label, samples) in series {
                    match Kde::new(&samples, Bandwidth::Silverman) {
                        Ok(kde) => curves.push((label, kde.grid(config.cluster.kde_points))),
                        Err(e) => warn!("no density for {label} at cut {tag}: {e}"),
                    }
                }
                out.emit_with(st, &format!("kde_{tag}.csv"), |b| {
                    export::write_kde(&curves, b)
                })?;
                out.emit_json(
                    st,
                    &format!("significance_{tag}.json"),
                    &json!({"cut": model.cut, "n_clusters": model.n_clusters, "report": report}),
                )?;
            }
        }
        Stage::Setters => {
            let p = &config.setters;
            let filtered;
            let table = match p.kind.kind() {
                Some(kind) => {
                    filtered = table.filter_kind(Some(kind));
                    &filtered
                }
                None => table,
            };
            let counts = trendsetters::count_before_after(table, p.mode, p.lag_halflife_min)?;
            let gmm_config = GmmConfig {
                k_max: p.k_max,
                folds: p.folds,
                em: EmConfig::default(),
                seed: p.seed,
            };
            let gmm = trendsetters::fit_gmm(&counts.points(), &gmm_config)?;
            let classes = trendsetters::classify_cities(&counts, &gmm);
            let (fits, mut warnings) = trendsetters::fit_class_regressions(&counts, &classes);
            warnings.extend(classes.warning.clone());
            out.emit_with(st, "counts.csv", |b| {
                export::write_counts(&counts, &classes, b)
            })?;
            out.emit_json(
                st,
                "gmm.json",
                &json!({
                    "selected_k": gmm.selected_k,
                    "aic_k": gmm.aic_k(),
                    "weights": gmm.mixture.weights,
                    "components": gmm.mixture.components,
                    "log_likelihood": gmm.log_likelihood,
                    "cv": gmm.cv,
                    "setter_component": classes.setter_component,
                    "country_trends": counts.country_trends,
                }),
            )?;
            out.emit_json(
                st,
                "regression.json",
                &json!({"fits": fits, "warnings": warnings}),
            )?;
        }
    }
    Ok(())
}
