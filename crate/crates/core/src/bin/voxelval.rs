use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::LevelFilter;

use voxelval::cli::{self, MaskSource, PipelineConfig, RunOutcome, EXIT_FATAL};
use voxelval::phantom::PhantomSpec;
use voxelval::stats::Tail;
use voxelval::{Region, Result};

/// Post-segmentation analysis of co-registered 3D tumor volumes.
#[derive(Parser)]
#[command(name = "voxelval", version)]
struct Cli {
    /// Pipeline configuration (JSON); flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Seed for permutation draws, null shifts and phantom noise.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// More log output (-v info, -vv debug). VOXELVAL_LOG overrides.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Fuse model probability maps into NEH masks.
    Fuse(FuseArgs),
    /// Dice, Jaccard, HD95 and Surface Dice between two segmentations.
    Metrics(MetricsArgs),
    /// Rim shells around ET and masked scalar statistics.
    Rim(RimArgs),
    /// Spatial relation between pNEH and recurrence.
    Spatial(SpatialArgs),
    /// Sign-flip permutation tests.
    Permtest(PermtestArgs),
    /// Synthetic volumes or a demo cohort.
    Phantom(PhantomArgs),
    /// Cohort tables from per-case CSVs.
    Report(ReportArgs),
}

#[derive(Args)]
struct FuseArgs {
    /// Cohort root; each case's prob_* maps are fused in place.
    #[arg(long, conflicts_with = "maps")]
    cohort: Option<PathBuf>,
    /// Probability maps of a single case.
    #[arg(long, num_args = 1..)]
    maps: Vec<PathBuf>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    sigma_mm: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    high: Option<f64>,
}

#[derive(Args)]
struct MetricsArgs {
    #[arg(long, conflicts_with_all = ["pred", "reference"])]
    cohort: Option<PathBuf>,
    /// Segmentation A: a file or a directory of files.
    #[arg(long, requires = "reference")]
    pred: Option<PathBuf>,
    /// Segmentation B, paired with A by file name.
    #[arg(long = "ref", id = "reference")]
    reference: Option<PathBuf>,
    /// Comma-separated regions, e.g. ET,TC,WT,NEH.
    #[arg(long, value_delimiter = ',')]
    regions: Option<Vec<Region>>,
    #[arg(long)]
    tau_mm: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct RimArgs {
    #[arg(long, conflicts_with_all = ["seg", "et"])]
    cohort: Option<PathBuf>,
    /// Segmentation; ET is label 4 and the default NEH is label 3.
    #[arg(long, conflicts_with = "et")]
    seg: Option<PathBuf>,
    /// Plain ET mask (requires --neh).
    #[arg(long, requires = "neh")]
    et: Option<PathBuf>,
    #[arg(long)]
    scalar: Option<PathBuf>,
    #[arg(long)]
    neh: Option<PathBuf>,
    /// Masks removed from every shell.
    #[arg(long)]
    exclude: Vec<PathBuf>,
    /// Shells are clipped to this mask.
    #[arg(long)]
    brain_mask: Option<PathBuf>,
    /// Comma-separated ascending radii in mm.
    #[arg(long, value_delimiter = ',')]
    radii: Option<Vec<f64>>,
    /// Disjoint bands instead of cumulative shells.
    #[arg(long)]
    annular: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SpatialArgs {
    #[arg(long, conflicts_with_all = ["pneh", "etrl"])]
    cohort: Option<PathBuf>,
    #[arg(long, requires = "etrl")]
    pneh: Option<PathBuf>,
    #[arg(long)]
    etrl: Option<PathBuf>,
    #[arg(long)]
    near_mm: Option<f64>,
    /// Distance to the ETRL region instead of its boundary.
    #[arg(long)]
    to_region: bool,
    /// Add metrics divided by their random-shift chance baseline.
    #[arg(long)]
    ratio_vs_null: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PermtestArgs {
    /// Per-case CSV.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, required_unless_present = "batch")]
    column: Option<String>,
    #[arg(long, default_value_t = 0.0)]
    baseline: f64,
    /// Test the configured spatial metrics and write Table 9.
    #[arg(long, conflicts_with = "column")]
    batch: bool,
    #[arg(long)]
    draws: Option<u64>,
    #[arg(long)]
    tail: Option<Tail>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct PhantomArgs {
    /// PhantomSpec JSON.
    #[arg(long, required_unless_present = "cohort", conflicts_with = "cohort")]
    spec: Option<PathBuf>,
    /// Generate a demo cohort with this many cases instead.
    #[arg(long)]
    cohort: Option<usize>,
    #[arg(long, default_value = "label")]
    kind: cli::PhantomKind,
    /// Gaussian blur for probability phantoms.
    #[arg(long, default_value_t = 0.0)]
    blur_mm: f64,
    /// Output volume (or directory with --cohort).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Directory holding the standard per-case CSVs.
    #[arg(long)]
    cohort: Option<PathBuf>,
    #[arg(long)]
    metrics: Option<PathBuf>,
    #[arg(long)]
    rim: Option<PathBuf>,
    #[arg(long)]
    spatial: Option<PathBuf>,
    /// Append permutation tests of the spatial metrics.
    #[arg(long)]
    permtest: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => LevelFilter::Warn,
        1 => LevelFilter::Info,
        2 => LevelFilter::Debug,
        _ => LevelFilter::Trace,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_env("VOXELVAL_LOG")
        .format_timestamp(None)
        .init();
}

fn out_dir(out: Option<PathBuf>, cohort: Option<&Path>) -> Result<PathBuf> {
    let dir = out.or_else(|| cohort.map(Path::to_path_buf)).unwrap_or_else(|| PathBuf::from("."));
    std::fs::create_dir_all(&dir).map_err(|e| voxelval::Error::Io { path: dir.clone(), source: e })?;
    Ok(dir)
}

fn missing(what: &str) -> voxelval::Error {
    voxelval::Error::InvalidArgument(format!("missing {what}"))
}

fn run(cli: Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => PipelineConfig::from_json_file(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    let outcome: RunOutcome = match cli.command {
        Command::Fuse(a) => {
            if let Some(v) = a.sigma_mm {
                cfg.fusion.sigma_mm = v;
            }
            if let Some(v) = a.threshold {
                cfg.fusion.threshold = v;
            }
            if let Some(v) = a.high {
                cfg.fusion.high_confidence_threshold = v;
            }
            let out = out_dir(a.out, a.cohort.as_deref())?;
            let cases = match &a.cohort {
                Some(root) => cli::fuse_cases_from_cohort(root)?,
                None if !a.maps.is_empty() => vec![cli::FuseCase {
                    case_id: "case".into(),
                    maps: a.maps,
                    out_dir: out.clone(),
                }],
                None => return Err(missing("--cohort or --maps")),
            };
            cli::run_fuse(&cfg, &cases, &out)?
        }
        Command::Metrics(a) => {
            if let Some(r) = a.regions {
                cfg.metrics.regions = r;
            }
            if let Some(t) = a.tau_mm {
                cfg.metrics.tau_mm = t;
            }
            let out = out_dir(a.out, a.cohort.as_deref())?;
            let pairs = match (&a.cohort, &a.pred, &a.reference) {
                (Some(root), _, _) => cli::metric_pairs_from_cohort(root)?,
                (None, Some(p), Some(r)) => cli::metric_pairs_from_paths(p, r)?,
                _ => return Err(missing("--cohort or --pred/--ref")),
            };
            cli::run_metrics(&cfg, &pairs, &out)?
        }
        Command::Rim(a) => {
            if let Some(r) = a.radii {
                cfg.rim.radii_mm = r;
            }
            cfg.rim.annular |= a.annular;
            let out = out_dir(a.out, a.cohort.as_deref())?;
            let mut cases = match &a.cohort {
                Some(root) => cli::rim_cases_from_cohort(root)?,
                None => {
                    let et = match (&a.seg, &a.et) {
                        (Some(seg), _) => MaskSource::region(seg, Region::ET),
                        (None, Some(et)) => MaskSource::nonzero(et),
                        _ => return Err(missing("--cohort, --seg or --et")),
                    };
                    vec![cli::RimCase {
                        case_id: "case".into(),
                        et,
                        scalar: a.scalar.clone().ok_or_else(|| missing("--scalar"))?,
                        neh: a.neh.clone().map(MaskSource::nonzero),
                        exclusions: Vec::new(),
                        brain: None,
                    }]
                }
            };
            for c in &mut cases {
                c.exclusions.extend(a.exclude.iter().map(MaskSource::nonzero));
                if let Some(b) = &a.brain_mask {
                    c.brain = Some(MaskSource::nonzero(b));
                }
            }
            cli::run_rim(&cfg, &cases, &out)?
        }
        Command::Spatial(a) => {
            if let Some(d) = a.near_mm {
                cfg.spatial.near_mm = d;
            }
            cfg.spatial.to_region |= a.to_region;
            cfg.spatial.ratio_vs_null |= a.ratio_vs_null;
            let out = out_dir(a.out, a.cohort.as_deref())?;
            let cases = match (&a.cohort, &a.pneh, &a.etrl) {
                (Some(root), _, _) => cli::spatial_cases_from_cohort(root)?,
                (None, Some(p), Some(e)) => vec![cli::SpatialCase {
                    case_id: "case".into(),
                    pneh: MaskSource::nonzero(p),
                    etrl: MaskSource::nonzero(e),
                }],
                _ => return Err(missing("--cohort or --pneh/--etrl")),
            };
            cli::run_spatial(&cfg, &cases, &out)?
        }
        Command::Permtest(a) => {
            if let Some(d) = a.draws {
                cfg.permutation.draws = d;
            }
            if let Some(t) = a.tail {
                cfg.permutation.tail = t;
            }
            let out = out_dir(a.out, a.input.parent().filter(|p| !p.as_os_str().is_empty()))?;
            if a.batch {
                cli::run_permtest_batch(&cfg, &a.input, &out)?
            } else {
                let job = cli::PermtestSingle {
                    input: a.input,
                    column: a.column.ok_or_else(|| missing("--column"))?,
                    baseline: a.baseline,
                };
                let (result, outcome) = cli::run_permtest(&cfg, &job, &out)?;
                println!("{}", serde_json::to_string_pretty(&result)?);
                outcome
            }
        }
        Command::Phantom(a) => match (a.cohort, a.spec) {
            (Some(n), _) => {
                let out = out_dir(Some(a.out), None)?;
                cli::run_phantom_cohort(&cfg, n, &out)?
            }
            (None, Some(spec_path)) => {
                let spec = PhantomSpec::from_json_file(&spec_path)?;
                cli::run_phantom(&spec, a.kind, a.blur_mm, &a.out)?;
                RunOutcome::default()
            }
            (None, None) => return Err(missing("--spec or --cohort")),
        },
        Command::Report(a) => {
            let out = out_dir(a.out, a.cohort.as_deref())?;
            let pick = |explicit: Option<PathBuf>, name: &str| {
                explicit.or_else(|| a.cohort.as_ref().map(|d| d.join(name)).filter(|p| p.is_file()))
            };
            let inputs = cli::ReportInputs {
                metrics: pick(a.metrics, cli::METRICS_CSV),
                rim: pick(a.rim, cli::RIM_CSV),
                spatial: pick(a.spatial, cli::SPATIAL_CSV),
                permtest: a.permtest,
            };
            cli::run_report(&cfg, &inputs, &out)?.1
        }
    };
    if let Some(h) = &outcome.provenance_hash {
        log::info!("provenance {h}");
    }
    for f in &outcome.failures {
        eprintln!("failed: {}: {}", f.case_id, f.error);
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    // Usage errors are fatal (1); exit code 2 is reserved for partial batch failure.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_FATAL as u8 } else { 0 });
        }
    };
    init_logging(cli.verbose);
    if let Some(jobs) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global() {
            eprintln!("voxelval: cannot configure {jobs} worker threads: {e}");
            return ExitCode::from(EXIT_FATAL as u8);
        }
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("voxelval: {e}");
            ExitCode::from(EXIT_FATAL as u8)
        }
    }
}
