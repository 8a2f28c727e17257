//! Graphon mixup: convex combination of two class graphons,
//! W_I = λ·W_G + (1 − λ)·W_H, with matching label interpolation
//! y_I = λ·y_G + (1 − λ)·y_H, and deterministic generation of augmented
//! graphs from the mixed graphon.
//!
//! Generation draws sizes uniformly from a range and samples each graph
//! with a per-index derived seed, so the endpoint recipes λ ∈ {0, 1}
//! reproduce direct sampling from the corresponding class graphon
//! bit-for-bit.

use crate::error::{Error, Result};
use crate::graphon::{sample_graph, GraphonSpec, SampledGraph};
use crate::rng::{derive_seed, rng_from};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// A mixup recipe: the two class graphons, the mixing weight, and the two
/// class label distributions.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MixupRecipe {
    pub lambda: f64,
    pub left: GraphonSpec,
    pub right: GraphonSpec,
    pub left_label: Vec<f64>,
    pub right_label: Vec<f64>,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&lambda) {
        return Err(Error::invalid("mixing weight must lie in [0,1]"));
    }
    Ok(())
}

fn check_label(label: &[f64]) -> Result<()> {
    if label.is_empty() {
        return Err(Error::invalid("label vectors must be non-empty"));
    }
    if label.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
        return Err(Error::invalid("label entries must lie in [0,1]"));
    }
    if (label.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("label vectors must sum to 1"));
    }
    Ok(())
}

/// The mixed graphon λ·left + (1 − λ)·right as a first-class spec.
pub fn mix_graphons(left: &GraphonSpec, right: &GraphonSpec, lambda: f64) -> Result<GraphonSpec> {
    check_lambda(lambda)?;
    let mixed = GraphonSpec::Mixture {
        lambda,
        left: Box::new(left.clone()),
        right: Box::new(right.clone()),
    };
    mixed.validate()?;
    Ok(mixed)
}

/// Componentwise label interpolation λ·y_G + (1 − λ)·y_H.
pub fn mix_labels(left: &[f64], right: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_lambda(lambda)?;
    if left.len() != right.len() {
        return Err(Error::invalid("label vectors must have equal length"));
    }
    check_label(left)?;
    check_label(right)?;
    Ok(left
        .iter()
        .zip(right)
        .map(|(&a, &b)| lambda * a + (1.0 - lambda) * b)
        .collect())
}

impl MixupRecipe {
    pub fn validate(&self) -> Result<()> {
        check_lambda(self.lambda)?;
        self.left.validate()?;
        self.right.validate()?;
        if self.left_label.len() != self.right_label.len() {
            return Err(Error::invalid("label vectors must have equal length"));
        }
        check_label(&self.left_label)?;
        check_label(&self.right_label)
    }

    /// The recipe's mixed graphon.
    pub fn mixed_spec(&self) -> Result<GraphonSpec> {
        mix_graphons(&self.left, &self.right, self.lambda)
    }

    /// The recipe's interpolated label.
    pub fn mixed_label(&self) -> Result<Vec<f64>> {
        mix_labels(&self.left_label, &self.right_label, self.lambda)
    }
}

/// Seed of the i-th augmented graph under master `seed` — public so that
/// endpoint recipes can be checked against direct sampling.
pub fn augmented_graph_seed(seed: u64, index: usize) -> u64 {
    derive_seed(seed, "mixup-graph", index as u64)
}

/// The size sequence generate_augmented draws for `count` graphs: uniform
/// in [n_min, n_max], from a stream independent of the recipe.
pub fn planned_sizes(seed: u64, count: usize, size_range: (usize, usize)) -> Vec<usize> {
    let (n_min, n_max) = size_range;
    let mut rng = rng_from(derive_seed(seed, "mixup-sizes", 0));
    (0..count).map(|_| rng.gen_range(n_min..=n_max)).collect()
}

/// Samples `count` graphs from the mixed graphon with sizes uniform in
/// `size_range`, each tagged with the interpolated label. Deterministic
/// per seed.
pub fn generate_augmented(
    recipe: &MixupRecipe,
    count: usize,
    size_range: (usize, usize),
    seed: u64,
) -> Result<Vec<(SampledGraph, Vec<f64>)>> {
    recipe.validate()?;
    let (n_min, n_max) = size_range;
    if count == 0 {
        return Err(Error::invalid("generation needs at least one graph"));
    }
    if n_min < 2 || n_min > n_max {
        return Err(Error::invalid("size range must satisfy 2 ≤ n_min ≤ n_max"));
    }
    let mixed = recipe.mixed_spec()?;
    let label = recipe.mixed_label()?;
    let sizes = planned_sizes(seed, count, size_range);
    sizes
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let graph = sample_graph(&mixed, n, augmented_graph_seed(seed, i))?;
            Ok((graph, label.clone()))
        })
        .collect()
}
