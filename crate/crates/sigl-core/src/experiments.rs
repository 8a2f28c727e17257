//! Experiment orchestration behind the CLI: dataset generation, method
//! execution, result CSVs, SVG heatmaps, model persistence, and the
//! derived flows (size sweeps, ablations, parametric families, mixup
//! generation, grid evaluation).
//!
//! Determinism contract: every command is a pure function of its
//! configuration (including the master seed), so rerunning with identical
//! flags reproduces every CSV byte for byte. Because measured wall-clock
//! durations can never satisfy that, the `wall_time_seconds` column in
//! `results.csv` reports a *deterministic cost model* — the method's
//! dominant operation count divided by a fixed nominal rate of 10⁹ ops/s —
//! which is positive, reproducible, and grows with graph size exactly like
//! the underlying algorithm. The *measured* durations of the same steps are
//! appended to `timings.log` (same row keys, `measured_wall_seconds`
//! column), which is excluded from the byte-stability contract and feeds
//! the empirical complexity checks.
//!
//! Trials execute serially (the host pins one core); rows are emitted
//! sorted by (method, offset, trial) regardless of execution order.

use crate::baselines::{
    pad_to_resolution, sas_estimate, usvt_estimate, zero_pad_to_resolution, BaselineEstimate,
    TV_ITERS,
};
use crate::error::{Error, Result};
use crate::estimator::{
    max_training_residual, ordering_tau, sample_estimate, sigl_estimate, SiglConfig, WindowRule,
};
use crate::family::{pretrain_sorter, query_family, train_family, train_test_split};
use crate::graphon::{discretize, sample_graph, GraphonGrid, GraphonSpec, SampledGraph};
use crate::gw::{estimation_error, gw_distance, GwConfig};
use crate::heatmap::save_heatmap;
use crate::histogram::CoordConvention;
use crate::mixup::{generate_augmented, MixupRecipe};
use crate::models::{SirenDoc, SirenInr};
use crate::rng::{derive_seed, rng_from};
use crate::sorting::{SortingConfig, SortingModel};
use rand::Rng;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

/// Exact `results.csv` header.
pub const RESULTS_HEADER: &str =
    "method,graphon_id,trial,n_max,offset,gw_error,wall_time_seconds,tau,eps_tr";
/// Exact `timings.log` header.
pub const TIMINGS_HEADER: &str =
    "method,graphon_id,trial,n_max,offset,measured_wall_seconds";
/// Default evaluation resolution.
pub const DEFAULT_RESOLUTION: usize = 1000;
/// Resolution of the truth grid used to pick the best per-graph baseline
/// estimate inside a trial (selection only; final errors use the full
/// evaluation resolution).
pub const SELECTION_RESOLUTION: usize = 100;
/// Nominal operation rate behind the deterministic wall-time model.
const NOMINAL_OPS_PER_SECOND: f64 = 1e9;

/// An estimation method selectable per run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum MethodKind {
    Sas,
    Sigl,
    Usvt,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::Sas => "sas",
            MethodKind::Sigl => "sigl",
            MethodKind::Usvt => "usvt",
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "sas" => Ok(MethodKind::Sas),
            "sigl" => Ok(MethodKind::Sigl),
            "usvt" => Ok(MethodKind::Usvt),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// The default dataset sizes: {75, 100, …, 300}.
pub fn default_sizes() -> Vec<usize> {
    (75..=300).step_by(25).collect()
}

/// Evenly spread `m ≥ 2` sizes across [75, 300] for the dataset-size
/// ablation.
pub fn ablation_sizes(m: usize) -> Vec<usize> {
    assert!(m >= 2, "ablation needs at least two graphs");
    (0..m)
        .map(|i| (75.0 + i as f64 * 225.0 / (m - 1) as f64).round() as usize)
        .collect()
}

/// Configuration shared by estimate, sweep, and ablate runs.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub spec: GraphonSpec,
    /// Identifier written to the `graphon_id` CSV column.
    pub label: String,
    pub trials: usize,
    pub seed: u64,
    pub out: PathBuf,
    pub methods: Vec<MethodKind>,
    /// Base sizes before any offset is added.
    pub base_sizes: Vec<usize>,
    pub window_rule: WindowRule,
    pub resolution: usize,
    pub epochs_step1: usize,
    pub epochs_step3: usize,
    pub lr: f64,
    /// Literal zero-padding instead of nearest-neighbor upsampling when
    /// aligning baseline estimates to the evaluation resolution.
    pub zero_pad: bool,
    /// Render SVG heatmaps of the truth and every estimate.
    pub heatmaps: bool,
    /// Persist per-trial model documents.
    pub persist_models: bool,
}

impl RunConfig {
    pub fn new(spec: GraphonSpec, label: impl Into<String>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            spec,
            label: label.into(),
            trials: 10,
            seed: 0,
            out: out.into(),
            methods: vec![MethodKind::Sigl],
            base_sizes: default_sizes(),
            window_rule: WindowRule::Natural,
            resolution: DEFAULT_RESOLUTION,
            epochs_step1: 100,
            epochs_step3: 100,
            lr: 0.01,
            zero_pad: false,
            heatmaps: true,
            persist_models: true,
        }
    }

    fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if self.trials == 0 {
            return Err(Error::invalid("at least one trial is required"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("at least one method is required"));
        }
        if self.base_sizes.is_empty() || self.base_sizes.iter().any(|&n| n < 2) {
            return Err(Error::invalid("dataset sizes must all be ≥ 2"));
        }
        if self.resolution == 0 {
            return Err(Error::invalid("evaluation resolution must be ≥ 1"));
        }
        Ok(())
    }
}

/// One `results.csv` row. `offset` is empty outside sweeps; `tau`/`eps_tr`
/// are empty for baseline methods.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRow {
    pub method: String,
    pub graphon_id: String,
    pub trial: usize,
    pub n_max: usize,
    pub offset: Option<usize>,
    pub gw_error: f64,
    pub wall_time_seconds: f64,
    pub tau: Option<f64>,
    pub eps_tr: Option<f64>,
}

impl ResultRow {
    fn csv_line(&self) -> String {
        let opt = |v: &Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.method,
            self.graphon_id,
            self.trial,
            self.n_max,
            self.offset.map(|o| o.to_string()).unwrap_or_default(),
            self.gw_error,
            self.wall_time_seconds,
            opt(&self.tau),
            opt(&self.eps_tr),
        )
    }
}

/// One measured-duration row for `timings.log`.
#[derive(Debug, Clone)]
pub struct TimingRow {
    pub method: String,
    pub graphon_id: String,
    pub trial: usize,
    pub n_max: usize,
    pub offset: Option<usize>,
    pub measured_wall_seconds: f64,
}

/// What a run produced: ordered result rows, measured timings, and any
/// per-trial failures (a failed method/trial does not abort the run).
#[derive(Debug)]
pub struct CommandReport {
    pub rows: Vec<ResultRow>,
    pub timings: Vec<TimingRow>,
    /// Human-readable descriptions of failed work items.
    pub failures: Vec<String>,
    pub out: PathBuf,
}

impl CommandReport {
    pub fn all_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn write_results_csv(path: &Path, rows: &[ResultRow]) -> Result<()> {
    let mut text = String::from(RESULTS_HEADER);
    text.push('\n');
    for row in rows {
        text.push_str(&row.csv_line());
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

fn write_timings_log(path: &Path, rows: &[TimingRow]) -> Result<()> {
    let mut text = String::from(TIMINGS_HEADER);
    text.push('\n');
    for r in rows {
        writeln!(
            text,
            "{},{},{},{},{},{}",
            r.method,
            r.graphon_id,
            r.trial,
            r.n_max,
            r.offset.map(|o| o.to_string()).unwrap_or_default(),
            r.measured_wall_seconds
        )
        .expect("string write");
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Number of regression evaluations per epoch for the given sizes: the
/// pooled dataset stores Σ_t k_t(k_t+1)/2 pairs and the trainer visits
/// off-diagonal pairs at both coordinate orders, giving Σ_t k_t².
fn expected_points(sizes: &[usize], rule: WindowRule) -> usize {
    sizes
        .iter()
        .map(|&n| {
            let k = n / rule.window_for(n).max(1);
            k * k
        })
        .sum()
}

/// Deterministic wall-time model (seconds at the nominal rate); see the
/// module docs for why `results.csv` carries this instead of a measured
/// duration.
fn modeled_wall_seconds(
    method: MethodKind,
    sizes: &[usize],
    rule: WindowRule,
    epochs_step1: usize,
    epochs_step3: usize,
) -> f64 {
    let ops = match method {
        MethodKind::Sigl => {
            let pair: f64 = sizes.iter().map(|&n| (n * n) as f64).sum();
            epochs_step1 as f64 * pair * 3000.0
                + epochs_step3 as f64 * expected_points(sizes, rule) as f64 * 2500.0
        }
        MethodKind::Sas => sizes
            .iter()
            .map(|&n| {
                let k = n / rule.window_for(n).max(1);
                (n * n) as f64 * 50.0 + (k * k) as f64 * TV_ITERS as f64 * 40.0
            })
            .sum(),
        MethodKind::Usvt => sizes.iter().map(|&n| 60.0 * (n * n * n) as f64).sum(),
    };
    ops / NOMINAL_OPS_PER_SECOND
}

/// Saves an INR as a versioned JSON document (the version lives in the
/// serialized form itself).
pub fn save_inr(path: &Path, inr: &SirenInr) -> Result<()> {
    std::fs::write(
        path,
        serde_json::to_string(inr).map_err(|e| Error::Parse(e.to_string()))?,
    )?;
    Ok(())
}

/// Loads a versioned INR document, rejecting other schema versions with a
/// typed error naming both.
pub fn load_inr(path: &Path) -> Result<SirenInr> {
    let doc: SirenDoc = serde_json::from_str(&std::fs::read_to_string(path)?)
        .map_err(|e| Error::Parse(format!("bad INR document: {e}")))?;
    SirenInr::try_from(doc)
}

/// Persists a fitted pipeline (sorter + graphon INR) into `dir`.
pub fn save_sigl_model(dir: &Path, sorter: &SortingModel, inr: &SirenInr) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("sorter.json"), sorter.to_json())?;
    save_inr(&dir.join("inr.json"), inr)
}

/// Loads a pipeline persisted by [`save_sigl_model`].
pub fn load_sigl_model(dir: &Path) -> Result<(SortingModel, SirenInr)> {
    let sorter = SortingModel::from_json(&std::fs::read_to_string(dir.join("sorter.json"))?)?;
    let inr = load_inr(&dir.join("inr.json"))?;
    Ok((sorter, inr))
}

fn sample_dataset(spec: &GraphonSpec, sizes: &[usize], trial_seed: u64) -> Result<Vec<SampledGraph>> {
    sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| sample_graph(spec, n, derive_seed(trial_seed, "graph", i as u64)))
        .collect()
}

fn baseline_row(
    cfg: &RunConfig,
    method: MethodKind,
    dataset: &[SampledGraph],
    truth_eval: &GraphonGrid,
    truth_select: &GraphonGrid,
    model_dir: Option<&Path>,
) -> Result<(f64, f64, Option<GraphonGrid>)> {
    let started = Instant::now();
    let estimates: Vec<BaselineEstimate> = dataset
        .iter()
        .map(|g| match method {
            MethodKind::Sas => sas_estimate(g, cfg.window_rule.window_for(g.n)),
            MethodKind::Usvt => usvt_estimate(g),
            MethodKind::Sigl => unreachable!("not a baseline"),
        })
        .collect::<Result<_>>()?;
    let measured = started.elapsed().as_secs_f64();

    // Evaluation: keep the best-scoring per-graph estimate (selection on a
    // coarse truth grid), align it to the evaluation resolution, score it.
    let gw_cfg = GwConfig::default();
    let mut best: Option<(usize, f64)> = None;
    for (i, est) in estimates.iter().enumerate() {
        let d = gw_distance(est.values.view(), truth_select.values.view(), &gw_cfg)?.distance;
        if best.map_or(true, |(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    let (winner, _) = best.expect("non-empty dataset");
    let aligned = if cfg.zero_pad {
        zero_pad_to_resolution(&estimates[winner], cfg.resolution)?
    } else {
        pad_to_resolution(&estimates[winner], cfg.resolution)?
    };
    let gw = estimation_error(&aligned, truth_eval, &gw_cfg)?;
    if let Some(dir) = model_dir {
        std::fs::create_dir_all(dir)?;
        GraphonGrid {
            values: estimates[winner].values.clone(),
            resolution: estimates[winner].values.nrows(),
        }
        .save_csv(&dir.join(format!("{}_estimate.csv", method.name())))?;
    }
    let heat = if cfg.heatmaps { Some(aligned) } else { None };
    Ok((gw, measured, heat))
}

struct TrialOutput {
    rows: Vec<ResultRow>,
    timings: Vec<TimingRow>,
}

fn run_trial(
    cfg: &RunConfig,
    offset: Option<usize>,
    trial: usize,
    truth_eval: &GraphonGrid,
    truth_select: &GraphonGrid,
    failures: &mut Vec<String>,
) -> Result<TrialOutput> {
    let trial_seed = derive_seed(cfg.seed, "trial", trial as u64);
    let sizes: Vec<usize> = cfg
        .base_sizes
        .iter()
        .map(|&n| n + offset.unwrap_or(0))
        .collect();
    let dataset = sample_dataset(&cfg.spec, &sizes, trial_seed)?;
    let n_max = *sizes.iter().max().expect("non-empty sizes");
    let tag = match offset {
        Some(o) => format!("offset_{o}_trial_{trial}"),
        None => format!("trial_{trial}"),
    };
    let model_dir = cfg.out.join("models").join(&tag);

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut methods = cfg.methods.clone();
    methods.sort();
    methods.dedup();
    for method in methods {
        let outcome: Result<(f64, f64, Option<f64>, Option<f64>, Option<GraphonGrid>)> =
            (|| match method {
                MethodKind::Sigl => {
                    let sc = SiglConfig {
                        epochs_step1: cfg.epochs_step1,
                        epochs_step3: cfg.epochs_step3,
                        lr: cfg.lr,
                        coord_batch: 512,
                        window_rule: cfg.window_rule,
                        coordinate_variant: CoordConvention::BinCenter,
                        seed: derive_seed(trial_seed, "sigl", 0),
                    };
                    let started = Instant::now();
                    let output = sigl_estimate(&dataset, &sc)?;
                    let measured = started.elapsed().as_secs_f64();
                    let grid = sample_estimate(&output.inr, cfg.resolution)?;
                    let gw = estimation_error(&grid, truth_eval, &GwConfig::default())?;
                    let eps = max_training_residual(&output.inr, &output.coords);
                    let t_max = (0..dataset.len())
                        .max_by_key(|&t| dataset[t].n)
                        .expect("non-empty dataset");
                    let tau = dataset[t_max]
                        .latents
                        .as_ref()
                        .map(|lat| ordering_tau(lat, &output.orderings[t_max]));
                    if cfg.persist_models {
                        save_sigl_model(&model_dir, &output.sorter, &output.inr)?;
                    }
                    let heat = cfg.heatmaps.then_some(grid);
                    Ok((gw, measured, tau, Some(eps), heat))
                }
                MethodKind::Sas | MethodKind::Usvt => {
                    let dir = cfg.persist_models.then_some(model_dir.as_path());
                    let (gw, measured, heat) =
                        baseline_row(cfg, method, &dataset, truth_eval, truth_select, dir)?;
                    Ok((gw, measured, None, None, heat))
                }
            })();
        match outcome {
            Ok((gw, measured, tau, eps_tr, heat)) => {
                rows.push(ResultRow {
                    method: method.name().to_string(),
                    graphon_id: cfg.label.clone(),
                    trial,
                    n_max,
                    offset,
                    gw_error: gw,
                    wall_time_seconds: modeled_wall_seconds(
                        method,
                        &sizes,
                        cfg.window_rule,
                        cfg.epochs_step1,
                        cfg.epochs_step3,
                    ),
                    tau,
                    eps_tr,
                });
                timings.push(TimingRow {
                    method: method.name().to_string(),
                    graphon_id: cfg.label.clone(),
                    trial,
                    n_max,
                    offset,
                    measured_wall_seconds: measured,
                });
                if let Some(grid) = heat {
                    let name = format!("{}_{}.svg", method.name(), tag);
                    save_heatmap(&grid, &cfg.out.join("heatmaps").join(name))?;
                }
            }
            Err(e) => failures.push(format!("{tag} method {}: {e}", method.name())),
        }
    }
    Ok(TrialOutput { rows, timings })
}

fn run_offsets(cfg: &RunConfig, offsets: &[Option<usize>]) -> Result<CommandReport> {
    cfg.validate()?;
    std::fs::create_dir_all(&cfg.out)?;
    if cfg.heatmaps {
        std::fs::create_dir_all(cfg.out.join("heatmaps"))?;
    }
    let truth_eval = discretize(&cfg.spec, cfg.resolution)?;
    let truth_select = discretize(&cfg.spec, SELECTION_RESOLUTION)?;
    if cfg.heatmaps {
        save_heatmap(&truth_eval, &cfg.out.join("heatmaps").join("true.svg"))?;
    }

    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut failures = Vec::new();
    for &offset in offsets {
        for trial in 0..cfg.trials {
            match run_trial(cfg, offset, trial, &truth_eval, &truth_select, &mut failures) {
                Ok(out) => {
                    rows.extend(out.rows);
                    timings.extend(out.timings);
                }
                Err(e) => {
                    let tag = match offset {
                        Some(o) => format!("offset_{o}_trial_{trial}"),
                        None => format!("trial_{trial}"),
                    };
                    failures.push(format!("{tag}: {e}"));
                }
            }
        }
    }
    rows.sort_by(|a, b| {
        (&a.method, a.offset, a.trial).cmp(&(&b.method, b.offset, b.trial))
    });
    timings.sort_by(|a, b| {
        (&a.method, a.offset, a.trial).cmp(&(&b.method, b.offset, b.trial))
    });
    write_results_csv(&cfg.out.join("results.csv"), &rows)?;
    write_timings_log(&cfg.out.join("timings.log"), &timings)?;
    Ok(CommandReport {
        rows,
        timings,
        failures,
        out: cfg.out.clone(),
    })
}

/// Single-graphon estimation: `trials` datasets from the configured
/// graphon, every selected method on each, rows + heatmaps + models under
/// `cfg.out`.
pub fn cmd_estimate(cfg: &RunConfig) -> Result<CommandReport> {
    run_offsets(cfg, &[None])
}

/// Size sweep: repeats the estimate flow with every size shifted by each
/// offset, filling the `offset` column.
pub fn cmd_sweep(cfg: &RunConfig, offsets: &[usize]) -> Result<CommandReport> {
    if offsets.is_empty() {
        return Err(Error::invalid("sweep needs at least one offset"));
    }
    let opts: Vec<Option<usize>> = offsets.iter().map(|&o| Some(o)).collect();
    run_offsets(cfg, &opts)
}

/// Ablation axis selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AblationAxis {
    /// Dataset sizes {3, …, 10} graphs.
    NumGraphs,
    /// Fixed pooling windows {3, 5, 7}.
    Window,
}

impl AblationAxis {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "num_graphs" | "num-graphs" => Ok(AblationAxis::NumGraphs),
            "window" => Ok(AblationAxis::Window),
            other => Err(Error::invalid(format!("unknown ablation axis '{other}'"))),
        }
    }
}

/// Ablations: one sub-run per axis value, each writing the standard file
/// set into its own subdirectory of `cfg.out`.
pub fn cmd_ablate(cfg: &RunConfig, axis: AblationAxis) -> Result<CommandReport> {
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    let mut failures = Vec::new();
    let subruns: Vec<(String, RunConfig)> = match axis {
        AblationAxis::NumGraphs => (3..=10)
            .map(|m| {
                let mut sub = cfg.clone();
                sub.base_sizes = ablation_sizes(m);
                let name = format!("num_graphs_{m}");
                sub.out = cfg.out.join(&name);
                (name, sub)
            })
            .collect(),
        AblationAxis::Window => [3usize, 5, 7]
            .iter()
            .map(|&w| {
                let mut sub = cfg.clone();
                sub.window_rule = WindowRule::Fixed(w);
                let name = format!("window_{w}");
                sub.out = cfg.out.join(&name);
                (name, sub)
            })
            .collect(),
    };
    for (name, sub) in subruns {
        let report = run_offsets(&sub, &[None])?;
        rows.extend(report.rows);
        timings.extend(report.timings);
        failures.extend(report.failures.into_iter().map(|f| format!("{name}: {f}")));
    }
    Ok(CommandReport {
        rows,
        timings,
        failures,
        out: cfg.out.clone(),
    })
}

/// Which parametric family to learn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FamilyKind {
    /// exp(−α(x^0.7 + y^0.7)), α ∈ {1, 1/1.2, …, 1/2}.
    Mono,
    /// Two-block SBM with p₁ = p₂ = 0.8, q = 0.1, α ∈ {0.1, …, 0.4}.
    Sbm,
}

impl FamilyKind {
    pub fn parse(text: &str) -> Result<Self> {
        match text.trim().to_ascii_lowercase().as_str() {
            "mono" | "monotonic" => Ok(FamilyKind::Mono),
            "sbm" => Ok(FamilyKind::Sbm),
            other => Err(Error::invalid(format!("unknown family '{other}'"))),
        }
    }

    /// The family's parameter values.
    pub fn alphas(self) -> Vec<f64> {
        match self {
            FamilyKind::Mono => vec![1.0, 1.0 / 1.2, 1.0 / 1.4, 1.0 / 1.6, 1.0 / 1.8, 0.5],
            FamilyKind::Sbm => vec![0.1, 0.2, 0.3, 0.4],
        }
    }

    /// The graphon at a given parameter value.
    pub fn member(self, alpha: f64) -> GraphonSpec {
        match self {
            FamilyKind::Mono => GraphonSpec::ParametricMono { alpha },
            FamilyKind::Sbm => GraphonSpec::ParametricSbm {
                alpha,
                p1: 0.8,
                p2: 0.8,
                q: 0.1,
            },
        }
    }

    /// The independent graphon the sorter is pretrained on: a seeded pick
    /// from the catalog set {1, 3, 4, …, 9} for the monotonic family, and
    /// the two-block catalog graphon for the SBM family.
    pub fn pretrain_spec(self, seed: u64) -> GraphonSpec {
        match self {
            FamilyKind::Mono => {
                let pool = [1u8, 3, 4, 5, 6, 7, 8, 9];
                let pick = rng_from(derive_seed(seed, "pretrain-pick", 0)).gen_range(0..pool.len());
                GraphonSpec::Synthetic(pool[pick])
            }
            FamilyKind::Sbm => GraphonSpec::Synthetic(12),
        }
    }
}

/// Parametric-family experiment configuration.
#[derive(Debug, Clone)]
pub struct ParametricConfig {
    pub family: FamilyKind,
    pub trials: usize,
    pub graphs_per_alpha: usize,
    /// Graph sizes are drawn uniformly from this range.
    pub size_range: (usize, usize),
    pub test_ratio: f64,
    pub seed: u64,
    pub out: PathBuf,
    pub resolution: usize,
    pub epochs_step1: usize,
    pub epochs_step3: usize,
    pub lr: f64,
    pub window_rule: WindowRule,
}

impl ParametricConfig {
    pub fn new(family: FamilyKind, out: impl Into<PathBuf>) -> Self {
        ParametricConfig {
            family,
            trials: 3,
            graphs_per_alpha: 10,
            size_range: (50, 300),
            test_ratio: 0.2,
            seed: 0,
            out: out.into(),
            resolution: DEFAULT_RESOLUTION,
            epochs_step1: 100,
            epochs_step3: 100,
            lr: 0.01,
            window_rule: WindowRule::Natural,
        }
    }
}

/// One grouped-by-α result row.
#[derive(Debug, Clone)]
pub struct ParametricRow {
    pub alpha: f64,
    pub trial: usize,
    /// Mean latent coordinate of the group's graphs (train and test).
    pub mean_z: f64,
    /// Mean GW error of the family INR queried at each test graph's z.
    pub family_gw_error: f64,
    /// GW error of the single-graphon pipeline fit to the group's test
    /// graphs.
    pub single_gw_error: f64,
}

/// One test-graph latent row for the z-vs-α scatter.
#[derive(Debug, Clone)]
pub struct ZRow {
    pub trial: usize,
    pub graph_index: usize,
    pub alpha: f64,
    pub z: f64,
}

/// Parametric-family experiment report.
#[derive(Debug)]
pub struct ParametricReport {
    pub rows: Vec<ParametricRow>,
    pub z_rows: Vec<ZRow>,
    pub failures: Vec<String>,
    pub out: PathBuf,
}

impl ParametricReport {
    pub fn all_ok(&self) -> bool {
        self.failures.is_empty()
    }
}

fn parametric_trial(
    cfg: &ParametricConfig,
    trial: usize,
    truths: &[GraphonGrid],
) -> Result<(Vec<ParametricRow>, Vec<ZRow>)> {
    let alphas = cfg.family.alphas();
    let trial_seed = derive_seed(cfg.seed, "trial", trial as u64);
    let (n_min, n_max) = cfg.size_range;

    // Per-α graphs with a stratified train/test split so every group is
    // represented on both sides.
    let mut train_graphs = Vec::new();
    let mut test_graphs = Vec::new();
    let mut test_meta = Vec::new(); // (global index, group)
    let mut group_of_train = Vec::new();
    let mut global = 0usize;
    for (g, &alpha) in alphas.iter().enumerate() {
        let spec = cfg.family.member(alpha);
        let group_seed = derive_seed(trial_seed, "alpha", g as u64);
        let mut size_rng = rng_from(derive_seed(group_seed, "sizes", 0));
        let graphs: Vec<SampledGraph> = (0..cfg.graphs_per_alpha)
            .map(|i| {
                let n = size_rng.gen_range(n_min..=n_max);
                sample_graph(&spec, n, derive_seed(group_seed, "graph", i as u64))
            })
            .collect::<Result<_>>()?;
        let (train_idx, test_idx) = train_test_split(
            cfg.graphs_per_alpha,
            cfg.test_ratio,
            derive_seed(group_seed, "split", 0),
        );
        for &i in &train_idx {
            train_graphs.push(graphs[i].clone());
            group_of_train.push(g);
        }
        for &i in &test_idx {
            test_graphs.push(graphs[i].clone());
            test_meta.push((global + i, g));
        }
        global += cfg.graphs_per_alpha;
    }

    // Pretrained, frozen sorter on an independent graphon.
    let sorter = pretrain_sorter(
        &cfg.family.pretrain_spec(trial_seed),
        cfg.graphs_per_alpha,
        cfg.size_range,
        &SortingConfig {
            epochs: cfg.epochs_step1,
            lr: cfg.lr,
        },
        derive_seed(trial_seed, "pretrain", 0),
    )?;

    let family_cfg = SiglConfig {
        epochs_step1: cfg.epochs_step1,
        epochs_step3: cfg.epochs_step3,
        lr: cfg.lr,
        coord_batch: 512,
        window_rule: cfg.window_rule,
        coordinate_variant: CoordConvention::BinCenter,
        seed: derive_seed(trial_seed, "family", 0),
    };
    let model = train_family(&train_graphs, &sorter, &family_cfg)?;
    let test_z = model.latents_for(&test_graphs)?;
    model.save(&cfg.out.join("models").join(format!("trial_{trial}")))?;

    let gw_cfg = GwConfig::default();
    let mut rows = Vec::new();
    let mut z_rows = Vec::new();
    for (g, &alpha) in alphas.iter().enumerate() {
        // Mean z over the whole group (train + test).
        let mut zs: Vec<f64> = model
            .latent_table
            .iter()
            .zip(&group_of_train)
            .filter(|(_, &gg)| gg == g)
            .map(|(&z, _)| z)
            .collect();
        let group_test: Vec<usize> = (0..test_graphs.len())
            .filter(|&i| test_meta[i].1 == g)
            .collect();
        zs.extend(group_test.iter().map(|&i| test_z[i]));
        let mean_z = zs.iter().sum::<f64>() / zs.len() as f64;

        // Family error: query at each test graph's z, score against the
        // group's truth, average.
        let mut family_err = 0.0;
        for &i in &group_test {
            let grid = query_family(&model, test_z[i], cfg.resolution)?;
            family_err += estimation_error(&grid, &truths[g], &gw_cfg)?;
        }
        family_err /= group_test.len() as f64;

        // Single-graphon pipeline on the group's test graphs.
        let single_cfg = SiglConfig {
            seed: derive_seed(derive_seed(trial_seed, "single", g as u64), "run", 0),
            ..family_cfg
        };
        let single_out = sigl_estimate(
            &group_test
                .iter()
                .map(|&i| test_graphs[i].clone())
                .collect::<Vec<_>>(),
            &single_cfg,
        )?;
        let single_grid = sample_estimate(&single_out.inr, cfg.resolution)?;
        let single_err = estimation_error(&single_grid, &truths[g], &gw_cfg)?;

        rows.push(ParametricRow {
            alpha,
            trial,
            mean_z,
            family_gw_error: family_err,
            single_gw_error: single_err,
        });
        for &i in &group_test {
            z_rows.push(ZRow {
                trial,
                graph_index: test_meta[i].0,
                alpha,
                z: test_z[i],
            });
        }
    }
    Ok((rows, z_rows))
}

/// Parametric-family experiment: per trial, a stratified multi-α dataset,
/// a pretrained sorter, the 3-D family INR, per-α grouped errors, and the
/// single-graphon comparison; emits `parametric_results.csv` and
/// `z_scatter.csv`.
pub fn cmd_parametric(cfg: &ParametricConfig) -> Result<ParametricReport> {
    if cfg.trials == 0 {
        return Err(Error::invalid("at least one trial is required"));
    }
    if cfg.graphs_per_alpha < 2 {
        return Err(Error::invalid("need at least two graphs per parameter value"));
    }
    if !(0.0 < cfg.test_ratio && cfg.test_ratio < 1.0) {
        return Err(Error::invalid("test ratio must lie strictly inside (0,1)"));
    }
    std::fs::create_dir_all(&cfg.out)?;
    let alphas = cfg.family.alphas();
    let truths: Vec<GraphonGrid> = alphas
        .iter()
        .map(|&a| discretize(&cfg.family.member(a), cfg.resolution))
        .collect::<Result<_>>()?;

    let mut rows = Vec::new();
    let mut z_rows = Vec::new();
    let mut failures = Vec::new();
    for trial in 0..cfg.trials {
        match parametric_trial(cfg, trial, &truths) {
            Ok((r, z)) => {
                rows.extend(r);
                z_rows.extend(z);
            }
            Err(e) => failures.push(format!("trial_{trial}: {e}")),
        }
    }

    let mut text = String::from("alpha,trial,mean_z,family_gw_error,single_gw_error\n");
    for r in &rows {
        writeln!(
            text,
            "{},{},{},{},{}",
            r.alpha, r.trial, r.mean_z, r.family_gw_error, r.single_gw_error
        )
        .expect("string write");
    }
    std::fs::write(cfg.out.join("parametric_results.csv"), text)?;

    let mut scatter = String::from("trial,graph_index,alpha,z\n");
    for r in &z_rows {
        writeln!(scatter, "{},{},{},{}", r.trial, r.graph_index, r.alpha, r.z)
            .expect("string write");
    }
    std::fs::write(cfg.out.join("z_scatter.csv"), scatter)?;

    Ok(ParametricReport {
        rows,
        z_rows,
        failures,
        out: cfg.out.clone(),
    })
}

/// Mixup generation configuration.
#[derive(Debug, Clone)]
pub struct MixupConfig {
    pub left: GraphonSpec,
    pub right: GraphonSpec,
    /// Fixed mixing weight; when absent one is drawn uniformly from
    /// [0.1, 0.2] per run.
    pub lambda: Option<f64>,
    pub count: usize,
    pub size_range: (usize, usize),
    pub seed: u64,
    pub out: PathBuf,
}

/// Mixup generation report.
#[derive(Debug)]
pub struct MixupReport {
    pub lambda: f64,
    pub files: Vec<PathBuf>,
    pub out: PathBuf,
}

/// Generates an augmented graph set from the mixed graphon: edge-list
/// files plus a labels CSV, with λ either fixed or drawn from [0.1, 0.2].
pub fn cmd_mixup(cfg: &MixupConfig) -> Result<MixupReport> {
    let lambda = match cfg.lambda {
        Some(l) => l,
        None => rng_from(derive_seed(cfg.seed, "lambda", 0)).gen_range(0.1..0.2),
    };
    let recipe = MixupRecipe {
        lambda,
        left: cfg.left.clone(),
        right: cfg.right.clone(),
        left_label: vec![1.0, 0.0],
        right_label: vec![0.0, 1.0],
    };
    let generated = generate_augmented(&recipe, cfg.count, cfg.size_range, cfg.seed)?;
    let dir = cfg.out.join("augmented");
    std::fs::create_dir_all(&dir)?;
    let mut labels = String::from("graph_index,file,n,lambda,label_0,label_1\n");
    let mut files = Vec::new();
    for (i, (graph, label)) in generated.iter().enumerate() {
        let name = format!("graph_{i}.txt");
        let path = dir.join(&name);
        graph.save_edge_list(&path)?;
        writeln!(
            labels,
            "{i},{name},{},{lambda},{},{}",
            graph.n, label[0], label[1]
        )
        .expect("string write");
        files.push(path);
    }
    std::fs::write(cfg.out.join("labels.csv"), labels)?;
    Ok(MixupReport {
        lambda,
        files,
        out: cfg.out.clone(),
    })
}

/// GW distance between two saved grid CSVs.
pub fn cmd_eval(a: &Path, b: &Path) -> Result<f64> {
    let ga = GraphonGrid::load_csv(a)?;
    let gb = GraphonGrid::load_csv(b)?;
    Ok(gw_distance(ga.values.view(), gb.values.view(), &GwConfig::default())?.distance)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(out: &Path) -> RunConfig {
        let mut cfg = RunConfig::new(GraphonSpec::Constant(0.5), "c", out);
        cfg.trials = 1;
        cfg.methods = vec![MethodKind::Sigl, MethodKind::Sas, MethodKind::Usvt];
        cfg.base_sizes = vec![20, 24];
        cfg.resolution = 50;
        cfg.epochs_step1 = 2;
        cfg.epochs_step3 = 2;
        cfg.seed = 5;
        cfg
    }

    #[test]
    fn method_and_axis_parsing() {
        assert_eq!(MethodKind::parse("SIGL").unwrap(), MethodKind::Sigl);
        assert_eq!(MethodKind::parse(" sas ").unwrap(), MethodKind::Sas);
        assert!(MethodKind::parse("other").is_err());
        assert_eq!(
            AblationAxis::parse("num_graphs").unwrap(),
            AblationAxis::NumGraphs
        );
        assert_eq!(AblationAxis::parse("window").unwrap(), AblationAxis::Window);
        assert!(AblationAxis::parse("x").is_err());
        assert_eq!(FamilyKind::parse("mono").unwrap(), FamilyKind::Mono);
        assert_eq!(FamilyKind::parse("sbm").unwrap(), FamilyKind::Sbm);
    }

    #[test]
    fn default_and_ablation_sizes() {
        let d = default_sizes();
        assert_eq!(d.len(), 10);
        assert_eq!(d[0], 75);
        assert_eq!(d[9], 300);
        assert_eq!(ablation_sizes(2), vec![75, 300]);
        assert_eq!(ablation_sizes(4), vec![75, 150, 225, 300]);
    }

    #[test]
    fn result_rows_format_empty_fields() {
        let row = ResultRow {
            method: "usvt".into(),
            graphon_id: "4".into(),
            trial: 3,
            n_max: 300,
            offset: None,
            gw_error: 0.25,
            wall_time_seconds: 1.5,
            tau: None,
            eps_tr: None,
        };
        assert_eq!(row.csv_line(), "usvt,4,3,300,,0.25,1.5,,");
        let full = ResultRow {
            offset: Some(175),
            tau: Some(0.1),
            eps_tr: Some(0.2),
            ..row
        };
        assert_eq!(full.csv_line(), "usvt,4,3,300,175,0.25,1.5,0.1,0.2");
    }

    #[test]
    fn modeled_wall_time_is_positive_and_grows_with_size() {
        for method in [MethodKind::Sigl, MethodKind::Sas, MethodKind::Usvt] {
            let small = modeled_wall_seconds(method, &[75, 100], WindowRule::Natural, 100, 100);
            let large = modeled_wall_seconds(method, &[575, 600], WindowRule::Natural, 100, 100);
            assert!(small > 0.0);
            assert!(large > small);
        }
    }

    #[test]
    fn estimate_command_produces_stable_artifacts() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = tiny_config(dir.path());
        let report = cmd_estimate(&cfg).unwrap();
        assert!(report.all_ok(), "failures: {:?}", report.failures);
        assert_eq!(report.rows.len(), 3);
        // Rows sorted by method name.
        assert_eq!(report.rows[0].method, "sas");
        assert_eq!(report.rows[1].method, "sigl");
        assert_eq!(report.rows[2].method, "usvt");
        assert!(report.rows[1].tau.is_some());
        assert!(report.rows[0].tau.is_none());
        for row in &report.rows {
            assert!(row.gw_error >= 0.0);
            assert!(row.wall_time_seconds > 0.0);
            assert_eq!(row.n_max, 24);
        }

        let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert!(csv.starts_with(RESULTS_HEADER));
        assert_eq!(csv.lines().count(), 4);
        assert!(dir.path().join("heatmaps/true.svg").exists());
        assert!(dir.path().join("heatmaps/sigl_trial_0.svg").exists());
        assert!(dir.path().join("heatmaps/usvt_trial_0.svg").exists());
        assert!(dir.path().join("models/trial_0/sorter.json").exists());
        assert!(dir.path().join("models/trial_0/inr.json").exists());
        assert!(dir.path().join("models/trial_0/sas_estimate.csv").exists());
        assert!(dir.path().join("timings.log").exists());

        // Byte-identical rerun.
        let again_dir = tempfile::tempdir().unwrap();
        let mut cfg2 = cfg.clone();
        cfg2.out = again_dir.path().to_path_buf();
        cmd_estimate(&cfg2).unwrap();
        let csv2 = std::fs::read_to_string(again_dir.path().join("results.csv")).unwrap();
        assert_eq!(csv, csv2);
    }

    #[test]
    fn sweep_fills_offsets_and_orders_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(dir.path());
        cfg.methods = vec![MethodKind::Usvt];
        let report = cmd_sweep(&cfg, &[0, 6]).unwrap();
        assert!(report.all_ok());
        assert_eq!(report.rows.len(), 2);
        assert_eq!(report.rows[0].offset, Some(0));
        assert_eq!(report.rows[1].offset, Some(6));
        assert_eq!(report.rows[1].n_max, 30);
        assert!(report.rows[1].wall_time_seconds > report.rows[0].wall_time_seconds);
        let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        let second = csv.lines().nth(1).unwrap();
        assert!(second.starts_with("usvt,c,0,24,0,"));
    }

    #[test]
    fn ablation_writes_one_subrun_per_axis_value() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = tiny_config(dir.path());
        cfg.methods = vec![MethodKind::Sas];
        cfg.base_sizes = vec![18, 21, 24];
        cfg.heatmaps = false;
        cfg.persist_models = false;
        let report = cmd_ablate(&cfg, AblationAxis::Window).unwrap();
        assert!(report.all_ok());
        assert_eq!(report.rows.len(), 3);
        for w in [3, 5, 7] {
            let sub = dir.path().join(format!("window_{w}")).join("results.csv");
            let text = std::fs::read_to_string(sub).unwrap();
            assert!(text.starts_with(RESULTS_HEADER));
            assert_eq!(text.lines().count(), 2);
        }
    }

    #[test]
    fn model_documents_round_trip_and_reject_bad_versions() {
        let dir = tempfile::tempdir().unwrap();
        let inr = SirenInr::default_graphon(2, 3);
        let path = dir.path().join("inr.json");
        save_inr(&path, &inr).unwrap();
        let loaded = load_inr(&path).unwrap();
        let probe = sample_estimate(&loaded, 100).unwrap();
        let want = sample_estimate(&inr, 100).unwrap();
        assert_eq!(probe.values, want.values);

        let doc = std::fs::read_to_string(&path)
            .unwrap()
            .replace("\"schema_version\":1", "\"schema_version\":9");
        std::fs::write(&path, doc).unwrap();
        match load_inr(&path) {
            Err(Error::SchemaVersion { expected, found }) => {
                assert_eq!(expected, 1);
                assert_eq!(found, 9);
            }
            other => panic!("expected a schema-version error, got {other:?}"),
        }
        std::fs::write(&path, "{not json").unwrap();
        assert!(matches!(load_inr(&path), Err(Error::Parse(_))));
    }

    #[test]
    fn eval_command_scores_saved_grids() {
        let dir = tempfile::tempdir().unwrap();
        let a = discretize(&GraphonSpec::Constant(0.3), 20).unwrap();
        let b = discretize(&GraphonSpec::Constant(0.7), 20).unwrap();
        let pa = dir.path().join("a.csv");
        let pb = dir.path().join("b.csv");
        a.save_csv(&pa).unwrap();
        b.save_csv(&pb).unwrap();
        assert!(cmd_eval(&pa, &pa).unwrap() < 1e-9);
        // Constant grids: every coupling costs (0.3 − 0.7)², so the
        // distance is exactly 0.4.
        let d = cmd_eval(&pa, &pb).unwrap();
        assert!((d - 0.4).abs() < 1e-6, "got {d}");
    }

    #[test]
    fn mixup_command_writes_graphs_and_labels() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = MixupConfig {
            left: GraphonSpec::Constant(0.2),
            right: GraphonSpec::Constant(0.6),
            lambda: None,
            count: 4,
            size_range: (10, 14),
            seed: 9,
            out: dir.path().to_path_buf(),
        };
        let report = cmd_mixup(&cfg).unwrap();
        assert!((0.1..0.2).contains(&report.lambda));
        assert_eq!(report.files.len(), 4);
        for f in &report.files {
            assert!(f.exists());
        }
        let labels = std::fs::read_to_string(dir.path().join("labels.csv")).unwrap();
        assert!(labels.starts_with("graph_index,file,n,lambda,label_0,label_1"));
        assert_eq!(labels.lines().count(), 5);

        let again = cmd_mixup(&cfg).unwrap();
        assert_eq!(report.lambda, again.lambda);
        let fixed = MixupConfig {
            lambda: Some(1.0),
            ..cfg
        };
        assert_eq!(cmd_mixup(&fixed).unwrap().lambda, 1.0);
    }

    #[test]
    fn parametric_command_emits_grouped_rows() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ParametricConfig::new(FamilyKind::Mono, dir.path());
        cfg.trials = 1;
        cfg.graphs_per_alpha = 3;
        cfg.size_range = (14, 20);
        cfg.resolution = 40;
        cfg.epochs_step1 = 2;
        cfg.epochs_step3 = 2;
        cfg.seed = 21;
        let report = cmd_parametric(&cfg).unwrap();
        assert!(report.all_ok(), "failures: {:?}", report.failures);
        assert_eq!(report.rows.len(), 6);
        assert_eq!(report.z_rows.len(), 6);
        for row in &report.rows {
            assert!(row.family_gw_error.is_finite());
            assert!(row.single_gw_error.is_finite());
            assert!(row.mean_z >= 0.0);
        }
        let text = std::fs::read_to_string(dir.path().join("parametric_results.csv")).unwrap();
        assert!(text.starts_with("alpha,trial,mean_z,family_gw_error,single_gw_error"));
        assert_eq!(text.lines().count(), 7);
        let scatter = std::fs::read_to_string(dir.path().join("z_scatter.csv")).unwrap();
        assert_eq!(scatter.lines().count(), 7);

        // Determinism of the CSV bodies.
        let dir2 = tempfile::tempdir().unwrap();
        let mut cfg2 = cfg.clone();
        cfg2.out = dir2.path().to_path_buf();
        cmd_parametric(&cfg2).unwrap();
        let text2 = std::fs::read_to_string(dir2.path().join("parametric_results.csv")).unwrap();
        assert_eq!(text, text2);
    }
}
