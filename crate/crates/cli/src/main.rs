use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;

use trendflow::depnet::WeightingMode;
use trendflow::model::{write_csv, write_jsonl, LogFormat, DEFAULT_TICK_SECS};
use trendflow::pipeline::{self, KindFilter, PipelineConfig, Stage, MANIFEST_FILE};
use trendflow::synth::{self, GeneratorConfig};
use trendflow::Error;

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_INTERNAL: u8 = 3;

/// Spatio-temporal analysis of trending-topic snapshot logs.
#[derive(Parser)]
#[command(name = "trendflow", version, propagate_version = true)]
struct Cli {
    /// More log output (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    /// Errors only.
    #[arg(short, long, global = true, conflicts_with = "verbose")]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic log with planted clusters and hubs.
    Synth(SynthArgs),
    /// Report every problem in a log file.
    Validate(ValidateArgs),
    /// Per-trend spread statistics and lifetime curves.
    Stats {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        entropy_bins: Option<usize>,
    },
    /// Temporal dependence network between locations.
    Depnet {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        net: NetArgs,
    },
    /// Disparity-filter backbone and source/sink ranking.
    Backbone {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        net: NetArgs,
        /// Fixed significance level.
        #[arg(long, conflicts_with = "tune")]
        alpha: Option<f64>,
        /// Pick the smallest alpha that keeps the backbone connected.
        #[arg(long)]
        tune: bool,
        /// Judge arcs by the source side only.
        #[arg(long)]
        out_only: bool,
    },
    /// Geographic clustering on trend-sharing similarity.
    Cluster {
        #[command(flatten)]
        common: Common,
        /// Dendrogram cut distance (repeatable).
        #[arg(long = "cut")]
        cuts: Vec<f64>,
        /// Also cut at exactly this many clusters.
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        kde_points: Option<usize>,
    },
    /// Trendsetter/follower classification.
    Setters {
        #[command(flatten)]
        common: Common,
        /// uniform, lag or initiator.
        #[arg(long)]
        mode: Option<WeightingMode>,
        #[arg(long)]
        lag_halflife: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        /// hashtag, phrase or both.
        #[arg(long)]
        kind: Option<KindFilter>,
        #[arg(long)]
        k_max: Option<usize>,
        #[arg(long)]
        folds: Option<usize>,
    },
    /// Several stages in one go; per-stage parameters come from --config.
    Run {
        #[command(flatten)]
        common: Common,
        /// Comma-separated stage list.
        #[arg(long, value_delimiter = ',', conflicts_with = "all")]
        stages: Vec<Stage>,
        /// Every stage.
        #[arg(long)]
        all: bool,
        /// Seed for the mixture fit.
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args)]
struct Common {
    /// Snapshot log (.jsonl or .csv).
    input: Option<PathBuf>,
    /// Location catalog CSV [default: catalog.csv beside the input].
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// jsonl or csv [default: from the extension].
    #[arg(long)]
    format: Option<LogFormat>,
    /// Output directory [default: out].
    #[arg(short, long)]
    out_dir: Option<PathBuf>,
    /// JSON pipeline config; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    tick_secs: Option<i64>,
    /// Keep promoted entries.
    #[arg(long)]
    keep_promoted: bool,
}

#[derive(Args)]
struct NetArgs {
    /// uniform, lag or initiator.
    #[arg(long)]
    mode: Option<WeightingMode>,
    #[arg(long)]
    lag_halflife: Option<f64>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// paper-like or small.
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// JSON generator config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Log file to write (.jsonl or .csv).
    #[arg(short, long)]
    output: PathBuf,
    /// Catalog CSV to write [default: catalog.csv beside the log].
    #[arg(long)]
    catalog: Option<PathBuf>,
    /// Ground-truth JSON to write.
    #[arg(long)]
    truth: Option<PathBuf>,
}

#[derive(Args)]
struct ValidateArgs {
    input: PathBuf,
    /// Check location ids against this catalog [default: catalog.csv beside
    /// the input, when present].
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long)]
    format: Option<LogFormat>,
    #[arg(long, default_value_t = DEFAULT_TICK_SECS)]
    tick_secs: i64,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) => EXIT_USAGE,
        e if e.is_data_error() => EXIT_DATA,
        _ => EXIT_INTERNAL,
    }
}

fn init_logging(cli: &Cli, configured: &str) {
    let level = if cli.quiet {
        LevelFilter::Error
    } else {
        match cli.verbose {
            0 => configured.parse().unwrap_or(LevelFilter::Warn),
            1 => LevelFilter::Info,
            2 => LevelFilter::Debug,
            _ => LevelFilter::Trace,
        }
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .parse_env("TRENDFLOW_LOG")
        .format_timestamp(None)
        .try_init();
}

fn init_threads() -> Result<(), Error> {
    let Ok(raw) = std::env::var("TRENDFLOW_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().ok().filter(|&n| n > 0).ok_or_else(|| {
        Error::InvalidArgument(format!(
            "TRENDFLOW_THREADS must be a positive integer, got `{raw}`"
        ))
    })?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// Defaults, then the config file, then flags.
fn base_config(common: &Common) -> Result<PipelineConfig, Error> {
    let mut cfg = match &common.config {
        Some(path) => PipelineConfig::from_json_file(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(input) = &common.input {
        cfg.input = input.clone();
    }
    if cfg.input.as_os_str().is_empty() {
        return Err(Error::InvalidArgument("no input log given".into()));
    }
    if let Some(c) = &common.catalog {
        cfg.catalog = Some(c.clone());
    }
    if let Some(f) = common.format {
        cfg.format = Some(f);
    }
    if let Some(o) = &common.out_dir {
        cfg.out_dir = o.clone();
    }
    if let Some(t) = common.tick_secs {
        cfg.tick_secs = t;
    }
    cfg.keep_promoted |= common.keep_promoted;
    Ok(cfg)
}

fn apply_net(cfg: &mut PipelineConfig, net: &NetArgs) {
    if let Some(m) = net.mode {
        cfg.depnet.mode = m;
    }
    if let Some(h) = net.lag_halflife {
        cfg.depnet.lag_halflife_min = h;
    }
}

fn pipeline_config(command: &Command) -> Result<PipelineConfig, Error> {
    let cfg = match command {
        Command::Synth(_) | Command::Validate(_) => unreachable!("not a pipeline command"),
        Command::Stats {
            common,
            entropy_bins,
        } => {
            let mut cfg = base_config(common)?;
            cfg.stages = vec![Stage::Stats];
            if let Some(b) = entropy_bins {
                cfg.stats.entropy_bins = *b;
            }
            cfg
        }
        Command::Depnet { common, net } => {
            let mut cfg = base_config(common)?;
            cfg.stages = vec![Stage::Depnet];
            apply_net(&mut cfg, net);
            cfg
        }
        Command::Backbone {
            common,
            net,
            alpha,
            tune,
            out_only,
        } => {
            let mut cfg = base_config(common)?;
            cfg.stages = vec![Stage::Backbone];
            apply_net(&mut cfg, net);
            if *tune {
                cfg.backbone.alpha = None;
            } else if alpha.is_some() {
                cfg.backbone.alpha = *alpha;
            }
            cfg.backbone.out_only |= out_only;
            cfg
        }
        Command::Cluster {
            common,
            cuts,
            clusters,
            kde_points,
        } => {
            let mut cfg = base_config(common)?;
            cfg.stages = vec![Stage::Cluster];
            if !cuts.is_empty() {
                cfg.cluster.cuts = cuts.clone();
            }
            if clusters.is_some() {
                cfg.cluster.clusters = *clusters;
            }
            if let Some(p) = kde_points {
                cfg.cluster.kde_points = *p;
            }
            cfg
        }
        Command::Setters {
            common,
            mode,
            lag_halflife,
            seed,
            kind,
            k_max,
            folds,
        } => {
            let mut cfg = base_config(common)?;
            cfg.stages = vec![Stage::Setters];
            let s = &mut cfg.setters;
            s.mode = mode.unwrap_or(s.mode);
            s.lag_halflife_min = lag_halflife.unwrap_or(s.lag_halflife_min);
            s.seed = seed.unwrap_or(s.seed);
            s.kind = kind.unwrap_or(s.kind);
            s.k_max = k_max.unwrap_or(s.k_max);
            s.folds = folds.unwrap_or(s.folds);
            cfg
        }
        Command::Run {
            common,
            stages,
            all,
            seed,
        } => {
            let mut cfg = base_config(common)?;
            if *all {
                cfg.stages = Stage::ALL.to_vec();
            } else if !stages.is_empty() {
                cfg.stages = stages.clone();
            }
            if let Some(s) = seed {
                cfg.setters.seed = *s;
            }
            cfg
        }
    };
    if cfg.stages.is_empty() {
        return Err(Error::InvalidArgument("no stages selected".into()));
    }
    Ok(cfg)
}

fn create(path: &Path) -> Result<BufWriter<File>, Error> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", dir.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn finish(mut w: BufWriter<File>, path: &Path) -> Result<(), Error> {
    w.flush()
        .map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
}

fn run_synth(args: &SynthArgs) -> Result<(), Error> {
    let mut config = match (&args.config, &args.preset) {
        (Some(path), _) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?;
            serde_json::from_str::<GeneratorConfig>(&text)
                .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))?
        }
        (None, Some(name)) => GeneratorConfig::preset(name)?,
        (None, None) => GeneratorConfig::default(),
    };
    if let Some(seed) = args.seed {
        config.seed = seed;
    }
    let (log, truth) = synth::generate(&config)?;

    let out = create(&args.output)?;
    let mut out = out;
    match LogFormat::from_path(&args.output) {
        LogFormat::Jsonl => write_jsonl(&log, &mut out)?,
        LogFormat::Csv => write_csv(&log, &mut out)?,
    }
    finish(out, &args.output)?;

    let catalog_path = args
        .catalog
        .clone()
        .unwrap_or_else(|| pipeline::default_catalog_path(&args.output));
    let mut w = create(&catalog_path)?;
    log.catalog().write_csv(&mut w)?;
    finish(w, &catalog_path)?;

    if let Some(path) = &args.truth {
        let mut w = create(path)?;
        w.write_all(truth.to_json()?.as_bytes())
            .map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))?;
        finish(w, path)?;
    }
    println!(
        "wrote {} snapshots over {} locations to {}",
        log.snapshots().len(),
        truth.locations.len(),
        args.output.display()
    );
    Ok(())
}

fn run_validate(args: &ValidateArgs) -> Result<u8, Error> {
    let beside = pipeline::default_catalog_path(&args.input);
    let catalog = args
        .catalog
        .clone()
        .or_else(|| beside.exists().then_some(beside));
    let report =
        pipeline::validate_file(&args.input, args.format, catalog.as_deref(), args.tick_secs)?;
    if args.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for v in &report.violations {
            println!("line {}: {}", v.line, v.message);
        }
        if let Some(note) = &report.note {
            println!("{note}");
        }
        println!(
            "{} snapshots, {} violations",
            report.snapshots,
            report.violations.len()
        );
    }
    Ok(if report.is_clean() { 0 } else { EXIT_DATA })
}

fn run_stages(cfg: &PipelineConfig) -> Result<(), Error> {
    let run = pipeline::run_pipeline(cfg);
    let manifest_path = cfg.out_dir.join(MANIFEST_FILE);
    match run.error {
        None => {
            println!(
                "wrote {} artifacts; manifest at {}",
                run.manifest.artifacts.len(),
                manifest_path.display()
            );
            Ok(())
        }
        Some(e) => {
            if let Some(f) = &run.manifest.failure {
                eprintln!(
                    "stage {} failed; partial manifest at {}",
                    f.stage,
                    manifest_path.display()
                );
            }
            Err(e)
        }
    }
}

fn dispatch(cli: &Cli) -> Result<u8, Error> {
    match &cli.command {
        Command::Synth(args) => {
            init_logging(cli, "warn");
            init_threads()?;
            run_synth(args).map(|()| 0)
        }
        Command::Validate(args) => {
            init_logging(cli, "warn");
            run_validate(args)
        }
        command => {
            let cfg = pipeline_config(command);
            init_logging(cli, cfg.as_ref().map_or("warn", |c| c.verbosity.as_str()));
            init_threads()?;
            run_stages(&cfg?).map(|()| 0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
