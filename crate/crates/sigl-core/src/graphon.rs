//! Graphon specifications, grid discretization, and graph sampling.
//!
//! A graphon ω: [0,1]² → [0,1] is symmetric and measurable; a graph of size
//! n is drawn by sampling latents η_i ~ Uniform[0,1] i.i.d. and connecting
//! i ~ j with probability ω(η_i, η_j). The catalog of thirteen synthetic
//! graphons used throughout the tests and experiments (monotone entries
//! 1–9, non-monotone 10–13) is implemented here, along with two parametric
//! families, learned (INR-backed) graphons, convex mixtures, and constants.

use crate::error::{Error, Result};
use crate::models::SirenInr;
use ndarray::Array2;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::path::Path;

/// A graphon: a symmetric edge-probability function on [0,1]².
///
/// Evaluation is exactly symmetric for every variant: the closed-form
/// entries are symmetric expressions, and `Learned` evaluations are
/// explicitly symmetrized (and clamped) since a raw INR is neither bounded
/// nor symmetric.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum GraphonSpec {
    /// Catalog entry 1–13.
    Synthetic(u8),
    /// exp(−α(x^0.7 + y^0.7)), the monotone parametric family (α > 0).
    ParametricMono { alpha: f64 },
    /// Two-block family: q background, p1 on [0,α]², p2 on [1−α,1]²,
    /// α ∈ (0, 0.5] so the blocks cannot overlap.
    ParametricSbm { alpha: f64, p1: f64, p2: f64, q: f64 },
    /// An INR-backed graphon: clamp(½(f(x,y) + f(y,x)), 0, 1). A 3-D model
    /// must carry the family coordinate `z`; a 2-D model must not.
    Learned { model: SirenInr, z: Option<f64> },
    /// λ·left + (1−λ)·right, pointwise.
    Mixture {
        lambda: f64,
        left: Box<GraphonSpec>,
        right: Box<GraphonSpec>,
    },
    Constant(f64),
}

fn prob(v: f64, what: &str) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::invalid(format!("{what} = {v} outside [0,1]")))
    }
}

impl GraphonSpec {
    /// Checks structural invariants (catalog id range, probability and α
    /// ranges, learned-model arity), recursively through mixtures.
    pub fn validate(&self) -> Result<()> {
        match self {
            GraphonSpec::Synthetic(id) => {
                if (1..=13).contains(id) {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("catalog graphon id {id} not in 1..=13")))
                }
            }
            GraphonSpec::ParametricMono { alpha } => {
                if *alpha > 0.0 {
                    Ok(())
                } else {
                    Err(Error::invalid(format!("mono family alpha = {alpha} must be > 0")))
                }
            }
            GraphonSpec::ParametricSbm { alpha, p1, p2, q } => {
                if !(*alpha > 0.0 && *alpha <= 0.5) {
                    return Err(Error::invalid(format!(
                        "sbm family alpha = {alpha} outside (0, 0.5]"
                    )));
                }
                prob(*p1, "p1")?;
                prob(*p2, "p2")?;
                prob(*q, "q")
            }
            GraphonSpec::Learned { model, z } => match (model.input_dim, z) {
                (2, None) | (3, Some(_)) => {
                    if let Some(zv) = z {
                        prob(*zv, "z")?;
                    }
                    Ok(())
                }
                (2, Some(_)) => Err(Error::invalid("2-D learned graphon cannot take a z coordinate")),
                (3, None) => Err(Error::invalid("3-D learned graphon requires a z coordinate")),
                (d, _) => Err(Error::invalid(format!("learned graphon input_dim {d} unsupported"))),
            },
            GraphonSpec::Mixture { lambda, left, right } => {
                if !(0.0..=1.0).contains(lambda) {
                    return Err(Error::invalid(format!("mixture lambda = {lambda} outside [0,1]")));
                }
                left.validate()?;
                right.validate()
            }
            GraphonSpec::Constant(p) => prob(*p, "constant graphon"),
        }
    }

    /// ω(x, y). Errors on domain violations or an invalid spec.
    pub fn eval(&self, x: f64, y: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
            return Err(Error::invalid(format!("({x}, {y}) outside the unit square")));
        }
        self.validate()?;
        Ok(self.eval_inner(x, y))
    }

    /// Evaluation after validation; used by the grid/sampling loops.
    fn eval_inner(&self, x: f64, y: f64) -> f64 {
        match self {
            GraphonSpec::Synthetic(id) => catalog_eval(*id, x, y),
            GraphonSpec::ParametricMono { alpha } => {
                (-alpha * (x.powf(0.7) + y.powf(0.7))).exp()
            }
            GraphonSpec::ParametricSbm { alpha, p1, p2, q } => {
                if x <= *alpha && y <= *alpha {
                    *p1
                } else if x >= 1.0 - *alpha && y >= 1.0 - *alpha {
                    *p2
                } else {
                    *q
                }
            }
            GraphonSpec::Learned { model, z } => {
                let (a, b) = match z {
                    None => (model.forward_one(&[x, y]), model.forward_one(&[y, x])),
                    Some(zv) => (
                        model.forward_one(&[x, y, *zv]),
                        model.forward_one(&[y, x, *zv]),
                    ),
                };
                (0.5 * (a + b)).clamp(0.0, 1.0)
            }
            GraphonSpec::Mixture { lambda, left, right } => {
                lambda * left.eval_inner(x, y) + (1.0 - lambda) * right.eval_inner(x, y)
            }
            GraphonSpec::Constant(p) => *p,
        }
    }

    /// Mean edge probability ∫∫ω by midpoint quadrature at the given grid
    /// resolution (an oracle for density tests, not a hot path).
    pub fn mean_density(&self, quad: usize) -> Result<f64> {
        self.validate()?;
        let mut acc = 0.0;
        for i in 0..quad {
            let x = (i as f64 + 0.5) / quad as f64;
            for j in 0..quad {
                let y = (j as f64 + 0.5) / quad as f64;
                acc += self.eval_inner(x, y);
            }
        }
        Ok(acc / (quad * quad) as f64)
    }
}

fn catalog_eval(id: u8, x: f64, y: f64) -> f64 {
    let (lo, hi) = if x <= y { (x, y) } else { (y, x) };
    match id {
        1 => x * y,
        2 => (-(x.powf(0.7) + y.powf(0.7))).exp(),
        // Sub-sums grouped so the float result is exactly symmetric in
        // (x, y): each parenthesized pair is commutative on its own.
        3 => 0.25 * ((x * x + y * y) + (x.sqrt() + y.sqrt())),
        4 => 0.5 * (x + y),
        5 => 1.0 / (1.0 + (-2.0 * (x * x + y * y)).exp()),
        6 => 1.0 / (1.0 + (-hi.powi(2) - lo.powi(4)).exp()),
        7 => (-hi.powf(0.75)).exp(),
        8 => (-0.5 * (lo + (x.sqrt() + y.sqrt()))).exp(),
        9 => (1.0 + hi).ln(),
        10 => (x - y).abs(),
        11 => 1.0 - (x - y).abs(),
        // Two-block graphons on halves of [0,1]: same-block pairs (12) or
        // cross-block pairs (13) get 0.8, everything else 0. The first
        // block is the closed square [0, ½]².
        12 => {
            let same = (x <= 0.5) == (y <= 0.5);
            if same {
                0.8
            } else {
                0.0
            }
        }
        13 => {
            let same = (x <= 0.5) == (y <= 0.5);
            if same {
                0.0
            } else {
                0.8
            }
        }
        _ => unreachable!("validated id"),
    }
}

/// ω(x, y) — free-function form of [`GraphonSpec::eval`].
pub fn eval_graphon(spec: &GraphonSpec, x: f64, y: f64) -> Result<f64> {
    spec.eval(x, y)
}

/// A graph drawn from a graphon.
///
/// Stored as a sorted edge list (i < j, no duplicates, no self-loops),
/// which *is* the symmetric zero-diagonal adjacency: dense form is
/// materialized on demand. True latents are retained for synthetic data so
/// diagnostics can compare against them; they are not persisted in the
/// edge-list format.
#[derive(Debug, Clone)]
pub struct SampledGraph {
    pub n: usize,
    pub edges: Vec<(u32, u32)>,
    pub latents: Option<Vec<f64>>,
    pub seed: u64,
}

impl SampledGraph {
    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edge density |E| / (n choose 2).
    pub fn density(&self) -> f64 {
        let pairs = self.n * (self.n - 1) / 2;
        self.edges.len() as f64 / pairs as f64
    }

    /// Dense symmetric 0/1 adjacency with zero diagonal.
    pub fn dense_adjacency(&self) -> Array2<f64> {
        let mut a = Array2::zeros((self.n, self.n));
        for &(i, j) in &self.edges {
            a[[i as usize, j as usize]] = 1.0;
            a[[j as usize, i as usize]] = 1.0;
        }
        a
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0usize; self.n];
        for &(i, j) in &self.edges {
            d[i as usize] += 1;
            d[j as usize] += 1;
        }
        d
    }

    /// Serializes as an edge list: header `n=<n> seed=<seed>`, then one
    /// `i j` pair per line (0-based, i < j).
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "n={} seed={}", self.n, self.seed);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{i} {j}");
        }
        out
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("empty edge-list document".into()))?;
        let mut n = None;
        let mut seed = None;
        for tok in header.split_whitespace() {
            if let Some(v) = tok.strip_prefix("n=") {
                n = Some(v.parse::<usize>().map_err(|e| Error::Parse(format!("bad n: {e}")))?);
            } else if let Some(v) = tok.strip_prefix("seed=") {
                seed = Some(v.parse::<u64>().map_err(|e| Error::Parse(format!("bad seed: {e}")))?);
            }
        }
        let n = n.ok_or_else(|| Error::Parse("header missing n=".into()))?;
        let seed = seed.ok_or_else(|| Error::Parse("header missing seed=".into()))?;
        let mut edges = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let i: u32 = it
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing endpoint", ln + 2)))?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))?;
            let j: u32 = it
                .next()
                .ok_or_else(|| Error::Parse(format!("line {}: missing endpoint", ln + 2)))?
                .parse()
                .map_err(|e| Error::Parse(format!("line {}: {e}", ln + 2)))?;
            if i >= j || j as usize >= n {
                return Err(Error::Parse(format!(
                    "line {}: edge ({i}, {j}) invalid for n = {n}",
                    ln + 2
                )));
            }
            edges.push((i, j));
        }
        Ok(SampledGraph {
            n,
            edges,
            latents: None,
            seed,
        })
    }

    pub fn save_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }

    pub fn load_edge_list(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_edge_list(&text)
    }
}

/// Draws a graph of size `n`: latents first (n uniform draws), then one
/// uniform draw per upper-triangle pair, edge present iff u < ω(η_i, η_j).
/// The draw order is part of the determinism contract.
pub fn sample_graph(spec: &GraphonSpec, n: usize, seed: u64) -> Result<SampledGraph> {
    spec.validate()?;
    if n < 2 {
        return Err(Error::invalid(format!("graph size n = {n} must be ≥ 2")));
    }
    let mut rng = crate::rng::rng_from(seed);
    let latents: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let p = spec.eval_inner(latents[i], latents[j]);
            if rng.gen::<f64>() < p {
                edges.push((i as u32, j as u32));
            }
        }
    }
    Ok(SampledGraph {
        n,
        edges,
        latents: Some(latents),
        seed,
    })
}

/// A graphon sampled on the regular grid (i/r, j/r), i, j ∈ 1..=r.
#[derive(Debug, Clone)]
pub struct GraphonGrid {
    pub values: Array2<f64>,
    pub resolution: usize,
}

impl GraphonGrid {
    pub fn from_values(values: Array2<f64>) -> Self {
        assert_eq!(values.nrows(), values.ncols(), "graphon grid must be square");
        let resolution = values.nrows();
        GraphonGrid { values, resolution }
    }

    /// Writes the grid as a plain CSV matrix (one row per line).
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for row in self.values.outer_iter() {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut rows: Vec<Vec<f64>> = Vec::new();
        for (ln, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> =
                line.split(',').map(|c| c.trim().parse::<f64>()).collect();
            let row = row.map_err(|e| Error::Parse(format!("grid row {}: {e}", ln + 1)))?;
            if let Some(first) = rows.first() {
                if row.len() != first.len() {
                    return Err(Error::Parse(format!("grid row {} has ragged width", ln + 1)));
                }
            }
            rows.push(row);
        }
        if rows.is_empty() || rows.len() != rows[0].len() {
            return Err(Error::Parse("grid must be square and non-empty".into()));
        }
        let r = rows.len();
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let values = Array2::from_shape_vec((r, r), flat).expect("shape");
        Ok(GraphonGrid::from_values(values))
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }
}

/// Evaluates the graphon on the (i/r, j/r) grid, i, j ∈ 1..=r.
pub fn discretize(spec: &GraphonSpec, r: usize) -> Result<GraphonGrid> {
    spec.validate()?;
    if r < 1 {
        return Err(Error::invalid("grid resolution must be ≥ 1"));
    }
    let mut values = Array2::zeros((r, r));
    for i in 0..r {
        let x = (i + 1) as f64 / r as f64;
        for j in 0..=i {
            let y = (j + 1) as f64 / r as f64;
            let v = spec.eval_inner(x, y);
            values[[i, j]] = v;
            values[[j, i]] = v;
        }
    }
    Ok(GraphonGrid {
        values,
        resolution: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_point_values() {
        assert_eq!(GraphonSpec::Synthetic(1).eval(0.5, 0.5).unwrap(), 0.25);
        assert_eq!(GraphonSpec::Synthetic(12).eval(0.1, 0.2).unwrap(), 0.8);
        assert_eq!(GraphonSpec::Synthetic(12).eval(0.1, 0.7).unwrap(), 0.0);
        assert_eq!(GraphonSpec::Synthetic(13).eval(0.1, 0.7).unwrap(), 0.8);
        assert_eq!(GraphonSpec::Synthetic(13).eval(0.6, 0.7).unwrap(), 0.0);
    }

    #[test]
    fn catalog_range_and_symmetry() {
        let mut rng = crate::rng::rng_from(77);
        for id in 1..=13u8 {
            let spec = GraphonSpec::Synthetic(id);
            for _ in 0..500 {
                let x: f64 = rng.gen();
                let y: f64 = rng.gen();
                let a = spec.eval(x, y).unwrap();
                let b = spec.eval(y, x).unwrap();
                assert!((0.0..=1.0).contains(&a), "graphon {id} at ({x},{y}) = {a}");
                assert_eq!(a, b, "graphon {id} asymmetric at ({x},{y})");
            }
        }
    }

    #[test]
    fn out_of_domain_and_bad_ids_error() {
        assert!(GraphonSpec::Synthetic(1).eval(1.5, 0.0).is_err());
        assert!(GraphonSpec::Synthetic(0).eval(0.5, 0.5).is_err());
        assert!(GraphonSpec::Synthetic(14).validate().is_err());
        assert!(GraphonSpec::Constant(1.2).validate().is_err());
        assert!(GraphonSpec::ParametricSbm {
            alpha: 0.7,
            p1: 0.8,
            p2: 0.8,
            q: 0.1
        }
        .validate()
        .is_err());
    }

    #[test]
    fn parametric_families_evaluate_per_formula() {
        let mono = GraphonSpec::ParametricMono { alpha: 0.5 };
        let x: f64 = 0.3;
        let y: f64 = 0.8;
        let want = (-0.5 * (x.powf(0.7) + y.powf(0.7))).exp();
        assert_eq!(mono.eval(x, y).unwrap(), want);

        let sbm = GraphonSpec::ParametricSbm {
            alpha: 0.3,
            p1: 0.8,
            p2: 0.8,
            q: 0.1,
        };
        assert_eq!(sbm.eval(0.1, 0.25).unwrap(), 0.8);
        assert_eq!(sbm.eval(0.75, 0.95).unwrap(), 0.8);
        assert_eq!(sbm.eval(0.1, 0.9).unwrap(), 0.1);
        assert_eq!(sbm.eval(0.5, 0.5).unwrap(), 0.1);
    }

    #[test]
    fn complete_and_empty_graphs() {
        let k5 = sample_graph(&GraphonSpec::Constant(1.0), 5, 1).unwrap();
        assert_eq!(k5.edge_count(), 10);
        let empty = sample_graph(&GraphonSpec::Constant(0.0), 5, 1).unwrap();
        assert_eq!(empty.edge_count(), 0);
    }

    #[test]
    fn sampling_is_deterministic_and_diagonal_free() {
        let spec = GraphonSpec::Synthetic(4);
        let a = sample_graph(&spec, 40, 9).unwrap();
        let b = sample_graph(&spec, 40, 9).unwrap();
        assert_eq!(a.edges, b.edges);
        assert_eq!(a.latents, b.latents);
        let dense = a.dense_adjacency();
        for i in 0..40 {
            assert_eq!(dense[[i, i]], 0.0);
            for j in 0..40 {
                assert_eq!(dense[[i, j]], dense[[j, i]]);
            }
        }
        let c = sample_graph(&spec, 40, 10).unwrap();
        assert_ne!(a.edges, c.edges);
    }

    #[test]
    fn midrange_density_concentrates() {
        let g = sample_graph(&GraphonSpec::Synthetic(4), 2000, 5).unwrap();
        assert!((g.density() - 0.5).abs() < 0.02, "density {}", g.density());
    }

    #[test]
    fn catalog_density_concentrates_at_n_2000() {
        // Mean and variance oracle by quadrature: for density D over M =
        // n(n−1)/2 pairs with latent-shared covariance ζ1 = Var(∫ω(η,·)),
        //   Var(D) = (μ − μ²)/M + 4(n−2)ζ1/(n(n−1)).
        let n = 2000usize;
        let quad = 400usize;
        for id in 1..=13u8 {
            let spec = GraphonSpec::Synthetic(id);
            let mut mu = 0.0;
            let mut zeta1 = 0.0;
            for i in 0..quad {
                let x = (i as f64 + 0.5) / quad as f64;
                let mut row = 0.0;
                for j in 0..quad {
                    let y = (j as f64 + 0.5) / quad as f64;
                    row += spec.eval_inner(x, y);
                }
                let g = row / quad as f64;
                mu += g;
                zeta1 += g * g;
            }
            mu /= quad as f64;
            zeta1 = zeta1 / quad as f64 - mu * mu;
            let m = (n * (n - 1) / 2) as f64;
            let var = (mu - mu * mu) / m + 4.0 * (n as f64 - 2.0) * zeta1 / (n as f64 * (n as f64 - 1.0));
            let graph = sample_graph(&spec, n, 424_242).unwrap();
            let dev = (graph.density() - mu).abs();
            assert!(
                dev <= 4.0 * var.sqrt().max(1e-12),
                "graphon {id}: density {} vs mean {mu}, |dev| {dev} > 4σ = {}",
                graph.density(),
                4.0 * var.sqrt()
            );
        }
    }

    #[test]
    fn grid_csv_round_trip() {
        let grid = discretize(&GraphonSpec::Synthetic(5), 8).unwrap();
        let back = GraphonGrid::from_csv(&grid.to_csv()).unwrap();
        assert_eq!(back.resolution, 8);
        assert_eq!(back.values, grid.values);
        assert!(GraphonGrid::from_csv("1,2\n3\n").is_err());
        assert!(GraphonGrid::from_csv("1,2,3\n4,5,6\n").is_err());
    }

    #[test]
    fn discretize_follows_grid_convention() {
        let g = discretize(&GraphonSpec::Synthetic(1), 2).unwrap();
        assert_eq!(g.values[[0, 0]], 0.25);
        assert_eq!(g.values[[0, 1]], 0.5);
        assert_eq!(g.values[[1, 0]], 0.5);
        assert_eq!(g.values[[1, 1]], 1.0);

        let c = discretize(&GraphonSpec::Constant(0.3), 4).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.3));

        for id in 1..=13u8 {
            let grid = discretize(&GraphonSpec::Synthetic(id), 17).unwrap();
            for i in 0..17 {
                for j in 0..17 {
                    assert!((grid.values[[i, j]] - grid.values[[j, i]]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn mixture_is_pointwise_linear() {
        let left = GraphonSpec::Synthetic(2);
        let right = GraphonSpec::Synthetic(11);
        let mut rng = crate::rng::rng_from(31);
        for _ in 0..1000 {
            let lambda: f64 = rng.gen();
            let x: f64 = rng.gen();
            let y: f64 = rng.gen();
            let mix = GraphonSpec::Mixture {
                lambda,
                left: Box::new(left.clone()),
                right: Box::new(right.clone()),
            };
            let want = lambda * left.eval(x, y).unwrap() + (1.0 - lambda) * right.eval(x, y).unwrap();
            assert!((mix.eval(x, y).unwrap() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn edge_list_round_trip() {
        let g = sample_graph(&GraphonSpec::Synthetic(3), 25, 123).unwrap();
        let text = g.to_edge_list();
        assert!(text.starts_with("n=25 seed=123\n"));
        let back = SampledGraph::from_edge_list(&text).unwrap();
        assert_eq!(back.n, 25);
        assert_eq!(back.seed, 123);
        assert_eq!(back.edges, g.edges);
        assert!(back.latents.is_none());
    }

    #[test]
    fn edge_list_rejects_malformed_input() {
        assert!(SampledGraph::from_edge_list("").is_err());
        assert!(SampledGraph::from_edge_list("n=5\n0 1\n").is_err());
        assert!(SampledGraph::from_edge_list("n=5 seed=0\n3 3\n").is_err());
        assert!(SampledGraph::from_edge_list("n=5 seed=0\n1 9\n").is_err());
    }

    #[test]
    fn spec_json_round_trip_with_variant_tag() {
        let spec = GraphonSpec::Mixture {
            lambda: 0.25,
            left: Box::new(GraphonSpec::Synthetic(7)),
            right: Box::new(GraphonSpec::Constant(0.4)),
        };
        let json = serde_json::to_string(&spec).unwrap();
        assert!(json.contains("Mixture") && json.contains("Synthetic"));
        let back: GraphonSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.eval(0.3, 0.9).unwrap(), spec.eval(0.3, 0.9).unwrap());
    }
}
