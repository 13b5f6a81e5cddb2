//! `dgssa` command-line tool.
//!
//! Subcommands: `gen`, `augment`, `eval`, `distance`, `ttest`, `losses`.
//! Exit codes: 0 success, 1 usage error (bad flags or config), 2 data error
//! (missing or malformed inputs). `DGSSA_THREADS` caps the worker pool.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use dgssa_core::config::PipelineConfig;
use dgssa_core::losses::{
    self, adv_generator, bce_segmentation, discriminator_components, discriminator_total,
    generator_total, l1_consistency, multiscale_aggregate, LossWeights,
};
use dgssa_core::pipeline::{
    self, load_mask_input, load_rgb_input, load_score_map, DatasetManifest, EvalOptions,
    MixerSource, PipelineError,
};

#[derive(Parser)]
#[command(
    name = "dgssa",
    version,
    about = "Vessel structure-mask generation, PixMix style augmentation, and segmentation evaluation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate structure masks (plus tree JSON) from dataset ROIs
    Gen(GenArgs),
    /// Apply PixMix style augmentation to dataset images
    Augment(AugmentArgs),
    /// Evaluate prediction PNGs against ground-truth PNGs
    Eval(EvalArgs),
    /// Mean inter-domain center distance from a feature CSV
    Distance(DistanceArgs),
    /// Paired t-test between two score lists
    Ttest(TtestArgs),
    /// Evaluate closed-form losses over supplied arrays
    Losses(LossesArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Dataset manifest JSON; repeat for multiple datasets
    #[arg(long = "manifest", required = true, num_args = 1)]
    manifests: Vec<PathBuf>,
    /// Pipeline config (TOML or JSON); defaults apply when omitted
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
    /// Global ROI mask PNG overriding the per-entry ROIs
    #[arg(long)]
    roi: Option<PathBuf>,
    /// Masks per dataset (overrides the config)
    #[arg(long)]
    count: Option<usize>,
    /// Master seed (overrides the config)
    #[arg(long)]
    master_seed: Option<u64>,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Directory of mixer PNGs; use `self` for the other dataset images
    #[arg(long)]
    mixers: String,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    master_seed: Option<u64>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// ROI directory (same filenames as predictions)
    #[arg(long)]
    roi: Option<PathBuf>,
    /// Report CSV path
    #[arg(long)]
    report: PathBuf,
    /// Also write TP/FP/FN overlay PNGs into this directory
    #[arg(long)]
    overlay: Option<PathBuf>,
    /// Add thin/thick DSC columns
    #[arg(long)]
    thin: bool,
    /// Ignore ROIs and evaluate over the full frame
    #[arg(long)]
    full_frame: bool,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Binarization threshold on prediction probabilities (overrides config)
    #[arg(long)]
    threshold: Option<f64>,
    /// Thin-vessel radius threshold in pixels (overrides config)
    #[arg(long)]
    tau: Option<f64>,
}

#[derive(Args)]
struct DistanceArgs {
    /// Feature CSV: header `domain,f0,f1,...`
    #[arg(long)]
    features: PathBuf,
    /// Optional JSON output path (stdout always gets the JSON)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TtestArgs {
    /// First score list (CSV, one value per line)
    #[arg(long)]
    a: PathBuf,
    /// Second score list
    #[arg(long)]
    b: PathBuf,
}

#[derive(Args)]
struct LossesArgs {
    /// Generated image (PNG or DGSA tensor) for the L1 term
    #[arg(long)]
    gen: Option<PathBuf>,
    /// Real image for the L1 term
    #[arg(long)]
    real: Option<PathBuf>,
    /// Discriminator scores on paired fakes
    #[arg(long)]
    fake_paired: Option<PathBuf>,
    /// Discriminator scores on unpaired fakes
    #[arg(long)]
    fake_unpaired: Option<PathBuf>,
    /// Discriminator scores on real images
    #[arg(long)]
    real_scores: Option<PathBuf>,
    /// Gradient penalty scalars, supplied by the caller
    #[arg(long, default_value_t = 0.0)]
    gp_paired: f64,
    #[arg(long, default_value_t = 0.0)]
    gp_unpaired: f64,
    /// Segmentation probabilities for the BCE term
    #[arg(long)]
    pred: Option<PathBuf>,
    /// Segmentation ground truth for the BCE term
    #[arg(long)]
    gt: Option<PathBuf>,
    /// Per-scale discriminator score maps to aggregate
    #[arg(long = "multiscale", num_args = 1)]
    multiscale: Vec<PathBuf>,
    #[arg(long, default_value_t = 100.0)]
    lambda_l1: f64,
    #[arg(long, default_value_t = 0.2)]
    lambda_adv: f64,
    #[arg(long, default_value_t = 0.3)]
    lambda_1: f64,
    #[arg(long, default_value_t = 10.0)]
    lambda_gp: f64,
    /// Also emit the alternative sign-convention values
    #[arg(long)]
    as_printed: bool,
}

enum AppError {
    Usage(String),
    Data(String),
}

impl From<PipelineError> for AppError {
    fn from(e: PipelineError) -> Self {
        match e {
            PipelineError::InvalidThreads(_) => AppError::Usage(e.to_string()),
            other => AppError::Data(other.to_string()),
        }
    }
}

impl From<dgssa_core::config::ConfigError> for AppError {
    fn from(e: dgssa_core::config::ConfigError) -> Self {
        AppError::Usage(e.to_string())
    }
}

fn main() {
    std::process::exit(run());
}

fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            1
        }
        Err(AppError::Data(msg)) => {
            eprintln!("error: {msg}");
            2
        }
    }
}

fn load_config(path: &Option<PathBuf>) -> Result<PipelineConfig, AppError> {
    match path {
        Some(p) => Ok(PipelineConfig::load(p)?),
        None => Ok(PipelineConfig::default()),
    }
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Gen(args) => cmd_gen(args),
        Command::Augment(args) => cmd_augment(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Distance(args) => cmd_distance(args),
        Command::Ttest(args) => cmd_ttest(args),
        Command::Losses(args) => cmd_losses(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<(), AppError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(count) = args.count {
        cfg.masks_per_dataset = count;
    }
    if let Some(seed) = args.master_seed {
        cfg.master_seed = seed;
    }
    let manifests: Vec<DatasetManifest> = args
        .manifests
        .iter()
        .map(|p| DatasetManifest::load(p))
        .collect::<Result<_, _>>()?;
    let start = std::time::Instant::now();
    let log = pipeline::run_gen(&manifests, &cfg, &args.out, args.roi.as_deref())?;
    eprintln!(
        "gen: wrote {} files to {} in {:.2}s",
        log.files.len(),
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn cmd_augment(args: AugmentArgs) -> Result<(), AppError> {
    let mut cfg = load_config(&args.config)?;
    if let Some(seed) = args.master_seed {
        cfg.master_seed = seed;
    }
    let manifest = DatasetManifest::load(&args.manifest)?;
    let mixers = if args.mixers == "self" {
        MixerSource::SelfMode
    } else {
        MixerSource::Directory(PathBuf::from(&args.mixers))
    };
    let start = std::time::Instant::now();
    let log = pipeline::run_augment(&manifest, &mixers, &cfg, &args.out)?;
    eprintln!(
        "augment: wrote {} files to {} in {:.2}s",
        log.files.len(),
        args.out.display(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

fn cmd_eval(args: EvalArgs) -> Result<(), AppError> {
    let cfg = load_config(&args.config)?;
    let opts = EvalOptions {
        pred_dir: args.pred,
        gt_dir: args.gt,
        roi_dir: args.roi,
        report_path: args.report.clone(),
        overlay_dir: args.overlay,
        thin: args.thin,
        full_frame: args.full_frame,
        binarize_threshold: args.threshold.unwrap_or(cfg.binarize_threshold),
        thin_tau: args.tau.unwrap_or(cfg.thin_threshold_tau),
    };
    let report = pipeline::run_eval(&opts)?;
    eprintln!(
        "eval: {} images -> {}",
        report.rows.len(),
        args.report.display()
    );
    Ok(())
}

fn cmd_distance(args: DistanceArgs) -> Result<(), AppError> {
    let report = pipeline::run_distance(&args.features)?;
    let json = serde_json::to_string_pretty(&report).expect("report serialization");
    if let Some(out) = &args.out {
        std::fs::write(out, &json)
            .map_err(|e| AppError::Data(format!("{}: {e}", out.display())))?;
    }
    println!("{json}");
    Ok(())
}

fn cmd_ttest(args: TtestArgs) -> Result<(), AppError> {
    let report = pipeline::run_ttest(&args.a, &args.b)?;
    println!(
        "{}",
        serde_json::to_string_pretty(&report).expect("report serialization")
    );
    Ok(())
}

fn cmd_losses(args: LossesArgs) -> Result<(), AppError> {
    let weights = LossWeights {
        lambda_l1: args.lambda_l1,
        lambda_adv: args.lambda_adv,
        lambda_1: args.lambda_1,
        lambda_gp: args.lambda_gp,
    };
    let mut out = serde_json::Map::new();
    fn insert(out: &mut serde_json::Map<String, serde_json::Value>, k: &str, v: f64) {
        out.insert(k.to_string(), serde_json::json!(v));
    }

    let l1 = if let (Some(gen), Some(real)) = (&args.gen, &args.real) {
        let l1 = l1_consistency(&load_rgb_input(gen)?, &load_rgb_input(real)?)
            .map_err(|e| AppError::Data(e.to_string()))?;
        insert(&mut out, "l1_consistency", l1);
        Some(l1)
    } else if args.gen.is_some() || args.real.is_some() {
        return Err(AppError::Usage(
            "--gen and --real must be supplied together".into(),
        ));
    } else {
        None
    };

    let fake_paired = args
        .fake_paired
        .as_ref()
        .map(|p| load_score_map(p))
        .transpose()?;
    let fake_unpaired = args
        .fake_unpaired
        .as_ref()
        .map(|p| load_score_map(p))
        .transpose()?;
    let real_scores = args
        .real_scores
        .as_ref()
        .map(|p| load_score_map(p))
        .transpose()?;

    let adv_paired = fake_paired.as_ref().map(|s| adv_generator(s));
    let adv_unpaired = fake_unpaired.as_ref().map(|s| adv_generator(s));
    if let Some(v) = adv_paired {
        insert(&mut out, "adv_generator_paired", v);
    }
    if let Some(v) = adv_unpaired {
        insert(&mut out, "adv_generator_unpaired", v);
    }
    if let (Some(l1), Some(ap), Some(au)) = (l1, adv_paired, adv_unpaired) {
        insert(
            &mut out,
            "generator_total",
            generator_total(l1, ap, au, &weights),
        );
    }

    if let (Some(real), Some(fp), Some(fu)) = (&real_scores, &fake_paired, &fake_unpaired) {
        let comps = discriminator_components(real, fp, fu);
        insert(&mut out, "d_real", comps.d_real);
        insert(&mut out, "d_fake_paired", comps.d_fake_paired);
        insert(&mut out, "d_fake_unpaired", comps.d_fake_unpaired);
        insert(
            &mut out,
            "discriminator_total",
            discriminator_total(&comps, args.gp_paired, args.gp_unpaired, &weights),
        );
    }

    if !args.multiscale.is_empty() {
        let maps = args
            .multiscale
            .iter()
            .map(|p| load_score_map(p))
            .collect::<Result<Vec<_>, _>>()?;
        let agg = multiscale_aggregate(&maps).map_err(|e| AppError::Data(e.to_string()))?;
        insert(&mut out, "multiscale_d", agg);
    }

    if let (Some(pred), Some(gt)) = (&args.pred, &args.gt) {
        let bce = bce_segmentation(&load_score_map(pred)?, &load_mask_input(gt)?)
            .map_err(|e| AppError::Data(e.to_string()))?;
        insert(&mut out, "bce_segmentation", bce);
    } else if args.pred.is_some() || args.gt.is_some() {
        return Err(AppError::Usage(
            "--pred and --gt must be supplied together".into(),
        ));
    }

    if args.as_printed {
        if let Some(s) = &fake_paired {
            insert(
                &mut out,
                "as_printed_generator_adv_paired",
                losses::as_printed::generator_adv(s),
            );
            insert(
                &mut out,
                "as_printed_d_fake_paired",
                losses::as_printed::discriminator_fake_paired(s),
            );
        }
        if let Some(s) = &fake_unpaired {
            insert(
                &mut out,
                "as_printed_generator_adv_unpaired",
                losses::as_printed::generator_adv(s),
            );
            insert(
                &mut out,
                "as_printed_d_fake_unpaired",
                losses::as_printed::discriminator_fake_unpaired(s),
            );
        }
        if let Some(s) = &real_scores {
            insert(
                &mut out,
                "as_printed_d_real",
                losses::as_printed::discriminator_real(s),
            );
        }
    }

    if out.is_empty() {
        return Err(AppError::Usage(
            "no loss inputs supplied; see `dgssa losses --help`".into(),
        ));
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::Value::Object(out))
            .expect("loss serialization")
    );
    Ok(())
}
