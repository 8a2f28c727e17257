//! Command-line front end for graphon estimation experiments.
//!
//! Commands: `estimate` (single graphon, every selected method), `sweep`
//! (size offsets), `ablate` (dataset size or pooling window), `parametric`
//! (3-D family INR), `mixup` (augmented graph generation), and `eval`
//! (Gromov–Wasserstein distance between two saved grids).
//!
//! Every command accepts `--config <file>` pointing at a flat JSON object
//! whose keys mirror the long flags; explicit command-line flags win over
//! file values, which win over defaults. Reruns with identical flags
//! produce byte-identical CSVs (measured durations go to `timings.log`
//! only). Exit code 0 means every trial completed; partial failures are
//! listed on standard error and yield exit code 1; usage and configuration
//! errors yield exit code 2.

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use sigl_core::error::{Error, Result};
use sigl_core::estimator::WindowRule;
use sigl_core::experiments::{
    cmd_ablate, cmd_estimate, cmd_eval, cmd_mixup, cmd_parametric, cmd_sweep, AblationAxis,
    CommandReport, FamilyKind, MethodKind, MixupConfig, ParametricConfig, RunConfig,
};
use sigl_core::graphon::GraphonSpec;
use std::path::PathBuf;

/// Default sweep offsets added to the base sizes {75, …, 300}.
const DEFAULT_OFFSETS: [usize; 6] = [0, 175, 325, 575, 825, 2000];

#[derive(Parser)]
#[command(
    name = "sigl",
    version,
    about = "Graphon estimation via learned node sorting, histogram pooling, and implicit neural representations"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Estimate one graphon over several trials and score every method.
    Estimate(RunArgs),
    /// Repeat estimation with node-count offsets added to every graph size.
    Sweep(SweepArgs),
    /// Ablate the dataset size (3–10 graphs) or the pooling window {3,5,7}.
    Ablate(AblateArgs),
    /// Learn a parametric graphon family with a 3-D coordinate network.
    Parametric(ParametricArgs),
    /// Generate augmented graphs from a two-graphon mixture.
    Mixup(MixupArgs),
    /// Print the Gromov–Wasserstein distance between two saved grid CSVs.
    Eval(EvalArgs),
}

/// Flags shared by estimate, sweep, and ablate.
#[derive(Args, Clone)]
struct RunArgs {
    /// Graphon: catalog id 1–13, `constant:p`, `mono:a`, or `sbm:a[,p1,p2,q]`.
    #[arg(long)]
    graphon: Option<String>,
    /// Number of independent trials (default 10).
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed; all per-trial randomness derives from it (default 0).
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (default `sigl_out`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma-separated subset of `sigl,sas,usvt` (default `sigl`).
    #[arg(long)]
    methods: Option<String>,
    /// Fixed pooling window; omit for the size-adaptive round(ln n) rule.
    #[arg(long)]
    window: Option<usize>,
    /// Evaluation grid resolution (default 1000).
    #[arg(long)]
    resolution: Option<usize>,
    /// Comma-separated base graph sizes (default `75,100,...,300`).
    #[arg(long)]
    sizes: Option<String>,
    /// Sorting-stage epochs (default 100).
    #[arg(long)]
    epochs_step1: Option<usize>,
    /// Regression-stage epochs (default 100).
    #[arg(long)]
    epochs_step3: Option<usize>,
    /// Adam learning rate for both stages (default 0.01).
    #[arg(long)]
    lr: Option<f64>,
    /// Align baseline estimates by literal zero padding instead of
    /// nearest-neighbor upsampling.
    #[arg(long)]
    zero_pad: bool,
    /// Skip SVG heatmap rendering.
    #[arg(long)]
    no_heatmaps: bool,
    /// Skip per-trial model persistence.
    #[arg(long)]
    no_models: bool,
    /// Flat JSON config file; command-line flags win.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Comma-separated node-count offsets (default `0,175,325,575,825,2000`).
    #[arg(long)]
    offsets: Option<String>,
}

#[derive(Args)]
struct AblateArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Ablation axis: `num_graphs` or `window`.
    #[arg(long)]
    axis: Option<String>,
}

#[derive(Args)]
struct ParametricArgs {
    /// Family: `mono` (exp(−α(x^0.7+y^0.7))) or `sbm` (two blocks).
    #[arg(long)]
    family: Option<String>,
    /// Trials (default 3).
    #[arg(long)]
    trials: Option<usize>,
    /// Graphs sampled per parameter value (default 10).
    #[arg(long)]
    graphs_per_alpha: Option<usize>,
    /// Held-out fraction per parameter value (default 0.2).
    #[arg(long)]
    test_ratio: Option<f64>,
    /// Smallest graph size (default 50).
    #[arg(long)]
    size_min: Option<usize>,
    /// Largest graph size (default 300).
    #[arg(long)]
    size_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    epochs_step1: Option<usize>,
    #[arg(long)]
    epochs_step3: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// Fixed pooling window; omit for the round(ln n) rule.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct MixupArgs {
    /// The two graphons to mix, comma-separated (e.g. `2,7`).
    #[arg(long)]
    graphon: Option<String>,
    /// Left graphon spec (overrides the pair form).
    #[arg(long)]
    left: Option<String>,
    /// Right graphon spec (overrides the pair form).
    #[arg(long)]
    right: Option<String>,
    /// Mixing weight on the left graphon; omitted → drawn from [0.1, 0.2].
    #[arg(long)]
    lambda: Option<f64>,
    /// Number of graphs to generate (default 10).
    #[arg(long)]
    count: Option<usize>,
    #[arg(long)]
    size_min: Option<usize>,
    #[arg(long)]
    size_max: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// First saved grid CSV.
    a: PathBuf,
    /// Second saved grid CSV.
    b: PathBuf,
    /// Accepted for interface uniformity; the distance is deterministic.
    #[arg(long)]
    seed: Option<u64>,
}

/// Flat JSON config file: every key mirrors a long flag.
#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    graphon: Option<String>,
    left: Option<String>,
    right: Option<String>,
    trials: Option<usize>,
    seed: Option<u64>,
    out: Option<String>,
    methods: Option<String>,
    window: Option<usize>,
    offsets: Option<String>,
    resolution: Option<usize>,
    sizes: Option<String>,
    epochs_step1: Option<usize>,
    epochs_step3: Option<usize>,
    lr: Option<f64>,
    zero_pad: Option<bool>,
    heatmaps: Option<bool>,
    models: Option<bool>,
    axis: Option<String>,
    family: Option<String>,
    graphs_per_alpha: Option<usize>,
    test_ratio: Option<f64>,
    lambda: Option<f64>,
    count: Option<usize>,
    size_min: Option<usize>,
    size_max: Option<usize>,
}

fn load_file_config(path: Option<&PathBuf>) -> Result<FileConfig> {
    match path {
        None => Ok(FileConfig::default()),
        Some(p) => serde_json::from_str(&std::fs::read_to_string(p)?)
            .map_err(|e| Error::Parse(format!("config file {}: {e}", p.display()))),
    }
}

/// Parses a graphon spec: a bare catalog id, `constant:p`, `mono:a`, or
/// `sbm:a[,p1,p2,q]`.
fn parse_spec(text: &str) -> Result<GraphonSpec> {
    let text = text.trim();
    let spec = if let Some(rest) = text.strip_prefix("constant:") {
        GraphonSpec::Constant(parse_f64(rest)?)
    } else if let Some(rest) = text.strip_prefix("mono:") {
        GraphonSpec::ParametricMono {
            alpha: parse_f64(rest)?,
        }
    } else if let Some(rest) = text.strip_prefix("sbm:") {
        let parts: Vec<&str> = rest.split(',').collect();
        match parts.as_slice() {
            [a] => GraphonSpec::ParametricSbm {
                alpha: parse_f64(a)?,
                p1: 0.8,
                p2: 0.8,
                q: 0.1,
            },
            [a, p1, p2, q] => GraphonSpec::ParametricSbm {
                alpha: parse_f64(a)?,
                p1: parse_f64(p1)?,
                p2: parse_f64(p2)?,
                q: parse_f64(q)?,
            },
            _ => {
                return Err(Error::invalid(format!(
                    "sbm graphon takes 1 or 4 parameters, got '{rest}'"
                )))
            }
        }
    } else {
        let id: u8 = text
            .parse()
            .map_err(|_| Error::invalid(format!("invalid graphon '{text}'")))?;
        GraphonSpec::Synthetic(id)
    };
    spec.validate()?;
    Ok(spec)
}

fn parse_f64(text: &str) -> Result<f64> {
    text.trim()
        .parse()
        .map_err(|_| Error::invalid(format!("invalid number '{text}'")))
}

fn parse_usize_list(text: &str) -> Result<Vec<usize>> {
    text.split(',')
        .map(|part| {
            part.trim()
                .parse()
                .map_err(|_| Error::invalid(format!("invalid integer '{part}'")))
        })
        .collect()
}

fn parse_methods(text: &str) -> Result<Vec<MethodKind>> {
    text.split(',').map(MethodKind::parse).collect()
}

fn window_rule(window: Option<usize>) -> Result<WindowRule> {
    match window {
        None => Ok(WindowRule::Natural),
        Some(0) => Err(Error::invalid("pooling window must be ≥ 1")),
        Some(w) => Ok(WindowRule::Fixed(w)),
    }
}

fn build_run_config(args: &RunArgs) -> Result<RunConfig> {
    let file = load_file_config(args.config.as_ref())?;
    let graphon = args
        .graphon
        .clone()
        .or(file.graphon)
        .ok_or_else(|| Error::invalid("a graphon is required (--graphon or config)"))?;
    let spec = parse_spec(&graphon)?;
    let out = args
        .out
        .clone()
        .or(file.out.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("sigl_out"));
    let mut cfg = RunConfig::new(spec, graphon.trim(), out);
    if let Some(t) = args.trials.or(file.trials) {
        cfg.trials = t;
    }
    if let Some(s) = args.seed.or(file.seed) {
        cfg.seed = s;
    }
    if let Some(m) = args.methods.clone().or(file.methods) {
        cfg.methods = parse_methods(&m)?;
    }
    if let Some(sizes) = args.sizes.clone().or(file.sizes) {
        cfg.base_sizes = parse_usize_list(&sizes)?;
    }
    cfg.window_rule = window_rule(args.window.or(file.window))?;
    if let Some(r) = args.resolution.or(file.resolution) {
        cfg.resolution = r;
    }
    if let Some(e) = args.epochs_step1.or(file.epochs_step1) {
        cfg.epochs_step1 = e;
    }
    if let Some(e) = args.epochs_step3.or(file.epochs_step3) {
        cfg.epochs_step3 = e;
    }
    if let Some(lr) = args.lr.or(file.lr) {
        cfg.lr = lr;
    }
    cfg.zero_pad = args.zero_pad || file.zero_pad.unwrap_or(false);
    cfg.heatmaps = !args.no_heatmaps && file.heatmaps.unwrap_or(true);
    cfg.persist_models = !args.no_models && file.models.unwrap_or(true);
    Ok(cfg)
}

/// Prints per-item failures to standard error and returns the exit code.
fn finish(report: &CommandReport) -> i32 {
    println!(
        "wrote {} result rows under {}",
        report.rows.len(),
        report.out.display()
    );
    if report.all_ok() {
        0
    } else {
        for failure in &report.failures {
            eprintln!("failed: {failure}");
        }
        1
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Estimate(args) => {
            let cfg = build_run_config(&args)?;
            Ok(finish(&cmd_estimate(&cfg)?))
        }
        Command::Sweep(args) => {
            let file = load_file_config(args.run.config.as_ref())?;
            let cfg = build_run_config(&args.run)?;
            let offsets = match args.offsets.or(file.offsets) {
                Some(text) => parse_usize_list(&text)?,
                None => DEFAULT_OFFSETS.to_vec(),
            };
            Ok(finish(&cmd_sweep(&cfg, &offsets)?))
        }
        Command::Ablate(args) => {
            let file = load_file_config(args.run.config.as_ref())?;
            let cfg = build_run_config(&args.run)?;
            let axis_text = args
                .axis
                .or(file.axis)
                .ok_or_else(|| Error::invalid("an ablation axis is required (--axis)"))?;
            Ok(finish(&cmd_ablate(&cfg, AblationAxis::parse(&axis_text)?)?))
        }
        Command::Parametric(args) => {
            let file = load_file_config(args.config.as_ref())?;
            let family_text = args
                .family
                .or(file.family)
                .ok_or_else(|| Error::invalid("a family is required (--family mono|sbm)"))?;
            let out = args
                .out
                .or(file.out.map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("sigl_out"));
            let mut cfg = ParametricConfig::new(FamilyKind::parse(&family_text)?, out);
            if let Some(t) = args.trials.or(file.trials) {
                cfg.trials = t;
            }
            if let Some(g) = args.graphs_per_alpha.or(file.graphs_per_alpha) {
                cfg.graphs_per_alpha = g;
            }
            if let Some(r) = args.test_ratio.or(file.test_ratio) {
                cfg.test_ratio = r;
            }
            cfg.size_range = (
                args.size_min.or(file.size_min).unwrap_or(cfg.size_range.0),
                args.size_max.or(file.size_max).unwrap_or(cfg.size_range.1),
            );
            if let Some(s) = args.seed.or(file.seed) {
                cfg.seed = s;
            }
            if let Some(r) = args.resolution.or(file.resolution) {
                cfg.resolution = r;
            }
            if let Some(e) = args.epochs_step1.or(file.epochs_step1) {
                cfg.epochs_step1 = e;
            }
            if let Some(e) = args.epochs_step3.or(file.epochs_step3) {
                cfg.epochs_step3 = e;
            }
            if let Some(lr) = args.lr.or(file.lr) {
                cfg.lr = lr;
            }
            cfg.window_rule = window_rule(args.window.or(file.window))?;
            let report = cmd_parametric(&cfg)?;
            println!(
                "wrote {} grouped rows under {}",
                report.rows.len(),
                report.out.display()
            );
            if report.all_ok() {
                Ok(0)
            } else {
                for failure in &report.failures {
                    eprintln!("failed: {failure}");
                }
                Ok(1)
            }
        }
        Command::Mixup(args) => {
            let file = load_file_config(args.config.as_ref())?;
            let (left_text, right_text) = match (
                args.left.or(file.left),
                args.right.or(file.right),
                args.graphon.or(file.graphon),
            ) {
                (Some(l), Some(r), _) => (l, r),
                (None, None, Some(pair)) => match pair.split_once(',') {
                    Some((l, r)) => (l.to_string(), r.to_string()),
                    None => {
                        return Err(Error::invalid(
                            "mixup needs two graphons: --graphon A,B or --left/--right",
                        ))
                    }
                },
                _ => {
                    return Err(Error::invalid(
                        "mixup needs two graphons: --graphon A,B or --left/--right",
                    ))
                }
            };
            let cfg = MixupConfig {
                left: parse_spec(&left_text)?,
                right: parse_spec(&right_text)?,
                lambda: args.lambda.or(file.lambda),
                count: args.count.or(file.count).unwrap_or(10),
                size_range: (
                    args.size_min.or(file.size_min).unwrap_or(75),
                    args.size_max.or(file.size_max).unwrap_or(300),
                ),
                seed: args.seed.or(file.seed).unwrap_or(0),
                out: args
                    .out
                    .or(file.out.map(PathBuf::from))
                    .unwrap_or_else(|| PathBuf::from("sigl_out")),
            };
            let report = cmd_mixup(&cfg)?;
            println!(
                "generated {} graphs with lambda {} under {}",
                report.files.len(),
                report.lambda,
                report.out.display()
            );
            Ok(0)
        }
        Command::Eval(args) => {
            let _ = args.seed;
            println!("{}", cmd_eval(&args.a, &args.b)?);
            Ok(0)
        }
    }
}

fn main() {
    // The whole pipeline is sized for one core; keep BLAS from
    // oversubscribing it.
    std::env::set_var("OPENBLAS_NUM_THREADS", "1");
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
