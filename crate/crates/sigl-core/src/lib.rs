//! Scalable implicit graphon learning.
//!
//! A graphon is a symmetric measurable function ω: [0,1]² → [0,1] that acts
//! as the limit object and generative model for dense random graphs: node i
//! receives a latent η_i ~ Uniform[0,1] and edge (i,j) appears with
//! probability ω(η_i, η_j). This crate estimates a continuous graphon from a
//! set of observed graphs of varying sizes in three steps:
//!
//! 1. **Node sorting** ([`sorting`]): a GCN encoder regresses per-node
//!    latents, trained jointly with an auxiliary sinusoidal INR that couples
//!    the latents to the observed edges; each graph is then sorted by the
//!    estimated latents.
//! 2. **Histogram approximation** ([`histogram`]): sorted adjacencies are
//!    average-pooled into k×k histograms, one per graph, and flattened into
//!    a weighted coordinate regression set.
//! 3. **INR regression** ([`estimator`]): a sinusoidal network f_θ(x, y) is
//!    fit to the pooled values, yielding a resolution-free estimate that can
//!    be sampled on any grid.
//!
//! Estimates are scored with a squared-loss Gromov–Wasserstein distance
//! ([`gw`]) against the discretized ground truth, mirroring how classical
//! baselines ([`baselines`]: degree-sorting + TV smoothing, and universal
//! singular value thresholding) are evaluated. Extensions cover learning a
//! parametric graphon *family* with a 3-D INR ([`family`]) and graphon mixup
//! generation ([`mixup`]).
//!
//! Everything is 64-bit, seeded, and deterministic: the same seeds produce
//! bit-identical datasets, parameters, and CSV outputs.

// Force the BLAS backend to link (ndarray's `blas` feature dispatches to it).
extern crate blas_src;

pub mod baselines;
pub mod diff;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod family;
pub mod fastmath;
pub mod graphon;
pub mod gw;
pub mod heatmap;
pub mod histogram;
pub mod mixup;
pub mod models;
pub mod rng;
pub mod sorting;
pub mod stats;

pub use error::{Error, Result};
pub use graphon::{GraphonGrid, GraphonSpec, SampledGraph};
