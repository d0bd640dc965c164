//! Command-line front end for the `spatter` library.
//!
//! The subcommands chain into a pipeline: `extract` turns stain images into
//! ellipse tables, `features` turns tables into directional feature vectors,
//! `fit` learns per-mechanism Gaussian models, `lr` scores new patterns
//! against fitted models, `loocv` runs the leave-one-out evaluation, and
//! `report` rebuilds an evaluation report from scores produced elsewhere.
//!
//! Every command writes a `manifest.json` recording the tool version, the
//! seed, and SHA-256 digests of all inputs, so a results directory is
//! self-describing. Exit codes: 0 success, 1 usage, 2 input, 3 numeric.

mod commands;
mod config;
mod error;
mod labels;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};

use spatter::eval::{EvalConfig, TieRule};
use spatter::features::FeatureConfig;
use spatter::model::CovarianceDivisor;
use spatter::pipeline::{PipelineConfig, StructuringElement};
use spatter::types::FeatureKind;

use commands::Ctx;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "spatter",
    version,
    about = "Likelihood ratios for bloodstain pattern mechanisms"
)]
struct Cli {
    /// JSON run configuration with optional pipeline/features/eval sections.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out", value_name = "DIR")]
    out: PathBuf,

    /// Seed recorded in the manifest for reproducibility.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Feature family to work with.
    #[arg(long, global = true, value_enum, default_value_t = KindArg::Both)]
    kind: KindArg,

    /// Inconclusive LR zone as `LOWER,UPPER` raw ratios (e.g. `0.5,2`).
    #[arg(long, global = true, value_name = "LOWER,UPPER", value_parser = parse_thresholds)]
    thresholds: Option<(f64, f64)>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract ellipse tables from stain images.
    Extract(ExtractArgs),
    /// Compute feature vectors from ellipse tables.
    Features(FeaturesArgs),
    /// Fit per-mechanism Gaussian models from a feature table.
    Fit(FitArgs),
    /// Score feature vectors against fitted models.
    Lr(LrArgs),
    /// Leave-one-out evaluation of a labeled feature table.
    Loocv(LoocvArgs),
    /// Rebuild an evaluation report from scored ratios and labels.
    Report(ReportArgs),
}

#[derive(Args)]
struct ExtractArgs {
    /// Image files or directories of images (png, jpg, tif).
    #[arg(long, num_args = 1.., required = true, value_name = "PATH")]
    images: Vec<PathBuf>,

    #[command(flatten)]
    pipeline: PipelineFlags,
}

/// Per-field overrides for the pipeline section of the config file.
#[derive(Args, Default)]
struct PipelineFlags {
    /// Block size for background downsampling.
    #[arg(long, value_name = "N")]
    background_downsample: Option<usize>,

    /// Median window (odd) applied to the downsampled background.
    #[arg(long, value_name = "N")]
    background_median_window: Option<usize>,

    /// Erosion/dilation iterations of the morphological opening.
    #[arg(long, value_name = "N")]
    morph_iterations: Option<usize>,

    /// Structuring element for the opening.
    #[arg(long, value_enum, value_name = "SHAPE")]
    structuring_element: Option<SeArg>,

    /// Minimum connected-component area in pixels.
    #[arg(long, value_name = "PX")]
    min_region_area: Option<usize>,

    /// Maximum Jaccard dissimilarity between region and fitted ellipse.
    #[arg(long, value_name = "X")]
    jaccard_max: Option<f64>,

    /// Treat the Jaccard bound as a raw similarity index instead.
    #[arg(long, value_name = "BOOL")]
    jaccard_raw_index: Option<bool>,

    /// Maximum Hausdorff distance (px) between region and ellipse contours.
    #[arg(long, value_name = "PX")]
    hausdorff_max: Option<f64>,
}

impl PipelineFlags {
    fn apply(&self, cfg: &mut PipelineConfig) {
        if let Some(v) = self.background_downsample {
            cfg.background_downsample = v;
        }
        if let Some(v) = self.background_median_window {
            cfg.background_median_window = v;
        }
        if let Some(v) = self.morph_iterations {
            cfg.morph_iterations = v;
        }
        if let Some(v) = self.structuring_element {
            cfg.structuring_element = v.into();
        }
        if let Some(v) = self.min_region_area {
            cfg.min_region_area = v;
        }
        if let Some(v) = self.jaccard_max {
            cfg.jaccard_max = v;
        }
        if let Some(v) = self.jaccard_raw_index {
            cfg.jaccard_raw_index = v;
        }
        if let Some(v) = self.hausdorff_max {
            cfg.hausdorff_max = v;
        }
    }
}

#[derive(Args)]
struct FeaturesArgs {
    /// Ellipse CSV files or directories containing them.
    #[arg(long, num_args = 1.., required = true, value_name = "PATH")]
    ellipses: Vec<PathBuf>,

    /// Sidecar labels CSV (pattern_id,mechanism,distance_cm,velocity_level);
    /// wins over anything guessed from file names.
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,

    #[command(flatten)]
    features: FeatureFlags,
}

/// Per-field overrides for the features section of the config file.
#[derive(Args, Default)]
struct FeatureFlags {
    /// Clamp for logit inputs.
    #[arg(long, value_name = "EPS")]
    logit_eps: Option<f64>,

    /// Floor applied to scatter eigenvalues.
    #[arg(long, value_name = "EPS")]
    eigenvalue_floor: Option<f64>,

    /// Use the normalized scatter matrix T/n for spherical features.
    #[arg(long, value_name = "BOOL")]
    normalized_scatter: Option<bool>,
}

impl FeatureFlags {
    fn apply(&self, cfg: &mut FeatureConfig) {
        if let Some(v) = self.logit_eps {
            cfg.logit_eps = v;
        }
        if let Some(v) = self.eigenvalue_floor {
            cfg.eigenvalue_floor = v;
        }
        if let Some(v) = self.normalized_scatter {
            cfg.normalized_scatter = v;
        }
    }
}

#[derive(Args)]
struct FitArgs {
    /// Feature table produced by `spatter features`.
    #[arg(long, value_name = "FILE")]
    features: PathBuf,

    /// Fit only this mechanism label (default: every label present).
    #[arg(long, value_name = "LABEL")]
    label: Option<String>,

    /// Covariance divisor: N (maximum likelihood) or N-1.
    #[arg(long, value_enum, default_value_t = DivisorArg::Ml)]
    divisor: DivisorArg,
}

#[derive(Args)]
struct LrArgs {
    /// Feature table with the patterns to score.
    #[arg(long, value_name = "FILE")]
    features: PathBuf,

    /// Model JSON for the numerator hypothesis.
    #[arg(long, value_name = "FILE")]
    numerator: PathBuf,

    /// Model JSON for the denominator; repeat for a mixture of alternatives.
    #[arg(long, num_args = 1.., required = true, value_name = "FILE")]
    denominator: Vec<PathBuf>,

    /// Prior weights for the alternatives, one per denominator model.
    #[arg(long, num_args = 1.., value_name = "W")]
    weights: Option<Vec<f64>>,
}

#[derive(Args)]
struct LoocvArgs {
    /// Labeled feature table to evaluate.
    #[arg(long, value_name = "FILE")]
    features: PathBuf,

    /// Sidecar labels CSV; wins over the table's mechanism column.
    #[arg(long, value_name = "FILE")]
    labels: Option<PathBuf>,

    /// Mechanism placed in the numerator (default: lexicographically first).
    #[arg(long, value_name = "LABEL")]
    numerator: Option<String>,

    #[command(flatten)]
    eval: EvalFlags,
}

#[derive(Args)]
struct ReportArgs {
    /// Scored ratios CSV from `spatter lr`.
    #[arg(long, value_name = "FILE")]
    lr: PathBuf,

    /// Labels CSV giving each pattern's true mechanism.
    #[arg(long, value_name = "FILE")]
    labels: PathBuf,

    /// Mechanism treated as the numerator (default: lexicographically first).
    #[arg(long, value_name = "LABEL")]
    numerator: Option<String>,

    #[command(flatten)]
    eval: EvalFlags,
}

/// Per-field overrides for the eval section of the config file.
#[derive(Args, Default)]
struct EvalFlags {
    /// Decision when the ratio is exactly 1.
    #[arg(long, value_enum, value_name = "SIDE")]
    tie_rule: Option<TieArg>,

    /// Confidence-ellipse coverage, strictly between 0 and 1.
    #[arg(long, value_name = "P")]
    coverage: Option<f64>,

    /// Distance bucket width (cm) for the condition breakdown.
    #[arg(long, value_name = "CM")]
    distance_bucket_cm: Option<f64>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum KindArg {
    Circular,
    Spherical,
    Both,
}

impl KindArg {
    fn kinds(self) -> Vec<FeatureKind> {
        match self {
            KindArg::Circular => vec![FeatureKind::Circular],
            KindArg::Spherical => vec![FeatureKind::Spherical],
            KindArg::Both => vec![FeatureKind::Circular, FeatureKind::Spherical],
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SeArg {
    Cross3,
    Square3,
}

impl From<SeArg> for StructuringElement {
    fn from(v: SeArg) -> Self {
        match v {
            SeArg::Cross3 => StructuringElement::Cross3,
            SeArg::Square3 => StructuringElement::Square3,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum DivisorArg {
    /// Divide by N.
    Ml,
    /// Divide by N-1.
    Unbiased,
}

impl From<DivisorArg> for CovarianceDivisor {
    fn from(v: DivisorArg) -> Self {
        match v {
            DivisorArg::Ml => CovarianceDivisor::MaximumLikelihood,
            DivisorArg::Unbiased => CovarianceDivisor::Unbiased,
        }
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TieArg {
    /// A ratio of exactly 1 decides for the denominator.
    Denominator,
    /// A ratio of exactly 1 decides for the numerator.
    Numerator,
}

impl From<TieArg> for TieRule {
    fn from(v: TieArg) -> Self {
        match v {
            TieArg::Denominator => TieRule::FavorsDenominator,
            TieArg::Numerator => TieRule::FavorsNumerator,
        }
    }
}

fn parse_thresholds(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s
        .split_once(',')
        .ok_or_else(|| format!("expected LOWER,UPPER, got {s:?}"))?;
    let lo: f64 = lo.trim().parse().map_err(|e| format!("bad lower bound: {e}"))?;
    let hi: f64 = hi.trim().parse().map_err(|e| format!("bad upper bound: {e}"))?;
    Ok((lo, hi))
}

/// Layers command-line evaluation flags over the config-file settings.
fn merge_eval(
    base: &EvalConfig,
    thresholds: Option<(f64, f64)>,
    numerator: Option<String>,
    flags: &EvalFlags,
) -> EvalConfig {
    let mut cfg = base.clone();
    if let Some((lo, hi)) = thresholds {
        cfg.zone_lower = lo;
        cfg.zone_upper = hi;
    }
    if numerator.is_some() {
        cfg.numerator = numerator;
    }
    if let Some(t) = flags.tie_rule {
        cfg.tie_rule = t.into();
    }
    if let Some(c) = flags.coverage {
        cfg.coverage = c;
    }
    if let Some(w) = flags.distance_bucket_cm {
        cfg.distance_bucket_cm = w;
    }
    cfg
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let (config, config_sha256) = config::load(cli.config.as_deref())?;
    let ctx = Ctx {
        config,
        out: cli.out,
        seed: cli.seed,
        config_sha256,
    };
    let kinds = cli.kind.kinds();
    match cli.command {
        Command::Extract(args) => {
            let mut pcfg = ctx.config.pipeline.clone();
            args.pipeline.apply(&mut pcfg);
            commands::extract::run(&ctx, &args.images, &pcfg)
        }
        Command::Features(args) => {
            let mut fcfg = ctx.config.features;
            args.features.apply(&mut fcfg);
            commands::features::run(&ctx, &args.ellipses, args.labels.as_deref(), &kinds, &fcfg)
        }
        Command::Fit(args) => commands::fit::run(
            &ctx,
            &args.features,
            args.label.as_deref(),
            &kinds,
            args.divisor.into(),
        ),
        Command::Lr(args) => commands::lr::run(
            &ctx,
            &args.features,
            &args.numerator,
            &args.denominator,
            args.weights.as_deref(),
        ),
        Command::Loocv(args) => {
            let cfg = merge_eval(&ctx.config.eval, cli.thresholds, args.numerator, &args.eval);
            commands::loocv::run(&ctx, &args.features, args.labels.as_deref(), &kinds, &cfg)
        }
        Command::Report(args) => {
            let cfg = merge_eval(&ctx.config.eval, cli.thresholds, args.numerator, &args.eval);
            commands::report::run(&ctx, &args.lr, &args.labels, &cfg)
        }
    }
}
