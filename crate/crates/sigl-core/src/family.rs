//! Parametric-family estimation: learn a single 3-D INR f_θ(x, y, z) over
//! graphs drawn from a graphon family, using a sorter pretrained on an
//! independent single graphon (transferability) and a per-graph latent
//! coordinate z_t derived from Gromov–Wasserstein distances.
//!
//! The reference grid B_r is the pretrained sorter's auxiliary graphon
//! sampled at resolution N = 100. Each graph gets d_t = GW(A_t, B_r) and
//! z_t = d_t / Σ_k d_k (uniform if every distance vanishes); held-out
//! graphs reuse the training-set denominator so train and test share one
//! scale. Training minimizes Σ_t w_t Σ_{(i,j)} (Ĥ_t(i,j) − f_θ(x, y, z_t))²
//! with the same pooled-histogram targets as the single-graphon pipeline.

use crate::error::{Error, Result};
use crate::estimator::{fit_inr, sample_grid_at, SiglConfig, TrainRow, WindowRule};
use crate::graphon::{sample_graph, GraphonGrid, GraphonSpec, SampledGraph};
use crate::gw::{gw_distance, GwConfig};
use crate::histogram::{build_coordinate_dataset, pool_histogram, CoordConvention};
use crate::models::SirenInr;
use crate::rng::{derive_seed, rng_from};
use crate::sorting::{infer_latents, sort_graph, train_sorting, SortingConfig, SortingModel};
use rand::seq::SliceRandom;
use rand::Rng;
use std::fmt::Write as _;
use std::path::Path;

/// Sampling resolution of the reference grid B_r.
pub const REFERENCE_RESOLUTION: usize = 100;

/// A family model: frozen pretrained sorter, its auxiliary-graphon
/// reference grid, the 3-D INR, and the training graphs' latent
/// coordinates.
#[derive(Debug, Clone)]
pub struct FamilyModel {
    pub sorter: SortingModel,
    pub reference_grid: GraphonGrid,
    pub inr3d: SirenInr,
    /// Normalized z_t of the training graphs (a probability vector).
    pub latent_table: Vec<f64>,
    /// Raw GW distances d_t behind the z values; their sum is the shared
    /// normalization denominator.
    pub distances: Vec<f64>,
}

/// One 3-D regression sample: histogram bin coordinates, the graph's
/// latent coordinate, the bin mean, and the graph weight.
#[derive(Debug, Clone, Copy)]
pub struct FamilyPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub target: f64,
    pub weight: f64,
}

/// Trains a sorter on graphs sampled from an independent graphon so it can
/// be reused, frozen, across a family.
pub fn pretrain_sorter(
    spec: &GraphonSpec,
    num_graphs: usize,
    size_range: (usize, usize),
    config: &SortingConfig,
    seed: u64,
) -> Result<SortingModel> {
    let (n_min, n_max) = size_range;
    if num_graphs == 0 {
        return Err(Error::invalid("pretraining needs at least one graph"));
    }
    if n_min < 2 || n_min > n_max {
        return Err(Error::invalid("size range must satisfy 2 ≤ n_min ≤ n_max"));
    }
    let mut size_rng = rng_from(derive_seed(seed, "pretrain-sizes", 0));
    let mut dataset = Vec::with_capacity(num_graphs);
    for i in 0..num_graphs {
        let n = size_rng.gen_range(n_min..=n_max);
        dataset.push(sample_graph(
            spec,
            n,
            derive_seed(seed, "pretrain-graph", i as u64),
        )?);
    }
    train_sorting(&dataset, config, derive_seed(seed, "pretrain-train", 0))
}

/// Samples the sorter's auxiliary graphon h_{φ₂} on the reference grid.
pub fn reference_grid(sorter: &SortingModel) -> Result<GraphonGrid> {
    sample_grid_at(&sorter.aux_graphon, REFERENCE_RESOLUTION, None)
}

/// GW distances d_t between each graph's adjacency and the reference grid.
pub fn reference_distances(
    dataset: &[SampledGraph],
    grid: &GraphonGrid,
    cfg: &GwConfig,
) -> Result<Vec<f64>> {
    dataset
        .iter()
        .map(|g| {
            let adj = g.dense_adjacency();
            Ok(gw_distance(adj.view(), grid.values.view(), cfg)?.distance)
        })
        .collect()
}

fn normalize_distances(distances: &[f64], denominator: f64) -> Vec<f64> {
    if denominator > 0.0 {
        distances.iter().map(|d| d / denominator).collect()
    } else {
        vec![1.0 / distances.len() as f64; distances.len()]
    }
}

/// Latent coordinates z_t = d_t / Σ_k d_k over a dataset; uniform when all
/// distances vanish (every graph equals the reference).
pub fn compute_latents_z(dataset: &[SampledGraph], grid: &GraphonGrid) -> Result<Vec<f64>> {
    if dataset.is_empty() {
        return Err(Error::invalid("latent coordinates need a non-empty dataset"));
    }
    let d = reference_distances(dataset, grid, &GwConfig::default())?;
    let sum: f64 = d.iter().sum();
    Ok(normalize_distances(&d, sum))
}

/// Sorts every graph with the frozen sorter, pools histograms, and tags
/// each regression point with its graph's latent coordinate.
pub fn assemble_family_points(
    dataset: &[SampledGraph],
    sorter: &SortingModel,
    z: &[f64],
    rule: WindowRule,
    convention: CoordConvention,
) -> Result<Vec<FamilyPoint>> {
    if dataset.len() != z.len() {
        return Err(Error::invalid("one latent coordinate per graph is required"));
    }
    let mut histograms = Vec::with_capacity(dataset.len());
    for graph in dataset {
        let latents = infer_latents(sorter, graph);
        let (sorted, _) = sort_graph(graph, &latents);
        histograms.push(pool_histogram(&sorted, rule.window_for(graph.n))?);
    }
    let coords = build_coordinate_dataset(&histograms, convention)?;
    Ok(coords
        .points
        .iter()
        .map(|p| FamilyPoint {
            x: p.x,
            y: p.y,
            z: z[p.graph_index],
            target: p.target,
            weight: p.weight,
        })
        .collect())
}

/// Weighted mean of w·(f_θ(x,y,z) − target)² over a 3-D point set,
/// including the mirrored coordinate orders the trainer sees.
pub fn family_loss(inr: &SirenInr, points: &[FamilyPoint]) -> f64 {
    if points.is_empty() {
        return 0.0;
    }
    let mut rows: Vec<FamilyPoint> = points.to_vec();
    rows.extend(points.iter().filter(|p| p.x != p.y).map(|p| FamilyPoint {
        x: p.y,
        y: p.x,
        ..*p
    }));
    let mut coords = ndarray::Array2::zeros((rows.len(), 3));
    for (r, p) in rows.iter().enumerate() {
        coords[[r, 0]] = p.x;
        coords[[r, 1]] = p.y;
        coords[[r, 2]] = p.z;
    }
    let pred = inr.forward_batch(coords.view());
    let mut acc = 0.0;
    for (p, f) in rows.iter().zip(pred) {
        let r = f - p.target;
        acc += p.weight * r * r;
    }
    acc / rows.len() as f64
}

/// Trains the 3-D family INR with a frozen pretrained sorter. Uses
/// `config.epochs_step3`, the window rule, and the coordinate convention;
/// `config.epochs_step1` is ignored because Step 1 already happened.
pub fn train_family(
    dataset: &[SampledGraph],
    sorter: &SortingModel,
    config: &SiglConfig,
) -> Result<FamilyModel> {
    if dataset.is_empty() {
        return Err(Error::invalid("family training needs at least one graph"));
    }
    let grid = reference_grid(sorter)?;
    let distances = reference_distances(dataset, &grid, &GwConfig::default())?;
    let sum: f64 = distances.iter().sum();
    let z = normalize_distances(&distances, sum);
    let points =
        assemble_family_points(dataset, sorter, &z, config.window_rule, config.coordinate_variant)?;
    let rows: Vec<TrainRow> = points
        .iter()
        .map(|p| TrainRow {
            coords: [p.x, p.y, p.z],
            target: p.target,
            weight: p.weight,
        })
        .collect();
    let inr3d = fit_inr(
        &rows,
        3,
        config.epochs_step3,
        config.lr,
        config.coord_batch,
        derive_seed(config.seed, "family-inr", 0),
    )?;
    Ok(FamilyModel {
        sorter: sorter.clone(),
        reference_grid: grid,
        inr3d,
        latent_table: z,
        distances,
    })
}

impl FamilyModel {
    /// Shared z normalization denominator (the training-set distance sum).
    pub fn z_denominator(&self) -> f64 {
        self.distances.iter().sum()
    }

    /// Latent coordinates for held-out graphs: distances to the same
    /// reference grid, normalized by the training-set denominator.
    pub fn latents_for(&self, graphs: &[SampledGraph]) -> Result<Vec<f64>> {
        if graphs.is_empty() {
            return Err(Error::invalid("latent coordinates need a non-empty dataset"));
        }
        let d = reference_distances(graphs, &self.reference_grid, &GwConfig::default())?;
        let denom = self.z_denominator();
        if denom > 0.0 {
            Ok(d.iter().map(|v| v / denom).collect())
        } else {
            Ok(vec![1.0 / self.latent_table.len() as f64; graphs.len()])
        }
    }

    /// Persists the model as four artifacts in `dir`: the sorter document,
    /// the reference grid CSV, the 3-D INR document, and the latent table
    /// CSV (`graph_index,distance,z`).
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("sorter.json"), self.sorter.to_json())?;
        self.reference_grid.save_csv(&dir.join("reference_grid.csv"))?;
        std::fs::write(
            dir.join("inr3d.json"),
            serde_json::to_string(&self.inr3d).map_err(|e| Error::invalid(e.to_string()))?,
        )?;
        let mut table = String::from("graph_index,distance,z\n");
        for (i, (d, z)) in self.distances.iter().zip(&self.latent_table).enumerate() {
            writeln!(table, "{i},{d},{z}").expect("string write");
        }
        std::fs::write(dir.join("latents.csv"), table)?;
        Ok(())
    }

    /// Loads a model saved by [`FamilyModel::save`].
    pub fn load(dir: &Path) -> Result<Self> {
        let sorter = SortingModel::from_json(&std::fs::read_to_string(dir.join("sorter.json"))?)?;
        let reference_grid = GraphonGrid::load_csv(&dir.join("reference_grid.csv"))?;
        let inr3d: SirenInr =
            serde_json::from_str(&std::fs::read_to_string(dir.join("inr3d.json"))?)
                .map_err(|e| Error::Parse(format!("bad INR document: {e}")))?;
        let mut distances = Vec::new();
        let mut latent_table = Vec::new();
        for (ln, line) in std::fs::read_to_string(dir.join("latents.csv"))?
            .lines()
            .enumerate()
        {
            if ln == 0 {
                if line != "graph_index,distance,z" {
                    return Err(Error::invalid("bad latent table header"));
                }
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::invalid(format!("bad latent table row {ln}")));
            }
            distances.push(
                fields[1]
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad distance on row {ln}: {e}")))?,
            );
            latent_table.push(
                fields[2]
                    .parse::<f64>()
                    .map_err(|e| Error::invalid(format!("bad z on row {ln}: {e}")))?,
            );
        }
        if latent_table.is_empty() {
            return Err(Error::invalid("empty latent table"));
        }
        Ok(FamilyModel {
            sorter,
            reference_grid,
            inr3d,
            latent_table,
            distances,
        })
    }
}

/// Clamp-symmetrized grid of f_θ(·, ·, z) at resolution R — the family
/// analogue of the single-graphon grid sampler.
pub fn query_family(model: &FamilyModel, z: f64, r: usize) -> Result<GraphonGrid> {
    sample_grid_at(&model.inr3d, r, Some(z))
}

/// Deterministic shuffled train/test split of `m` items: the test set gets
/// round(m·test_ratio) items (at least one when the ratio is positive).
pub fn train_test_split(m: usize, test_ratio: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    assert!((0.0..1.0).contains(&test_ratio), "test ratio must be in [0,1)");
    let mut idx: Vec<usize> = (0..m).collect();
    idx.shuffle(&mut rng_from(derive_seed(seed, "family-split", 0)));
    let mut test_count = (m as f64 * test_ratio).round() as usize;
    if test_ratio > 0.0 {
        test_count = test_count.clamp(1, m.saturating_sub(1));
    }
    let mut test: Vec<usize> = idx[..test_count].to_vec();
    let mut train: Vec<usize> = idx[test_count..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    (train, test)
}
