//! Learned node sorting: a graph convolutional encoder produces per-node
//! latents η̂ ∈ [0,1] whose descending order sorts the adjacency matrix.
//!
//! Training couples the encoder g_φ₁ with an auxiliary 2-D sinusoidal INR
//! h_φ₂ through the per-graph objective
//!   L_t = (1/n_t²) Σ_{i,j} [A_t(i,j) − clamp₀₁(h_φ₂(η̂_i, η̂_j))]²
//! (full double sum including the diagonal), where
//! η̂ = minmax(g_φ₁(A_t, X_t)) and X_t ~ N(0,1)^{n×c} is drawn once per
//! graph from a seed derived from the graph's own seed. The clamp uses a
//! straight-through gradient: it passes unchanged on [0,1] and is zero
//! outside. Both models take one joint Adam step per graph per epoch,
//! iterating graphs in dataset order inside each epoch.
//!
//! Two implementations of the objective coexist: a tape-recorded reference
//! (the definition, used by gradient tests) and a fused chunked kernel
//! that exploits the separability sin(u_i + v_j) = sin u_i cos v_j +
//! cos u_i sin v_j of the first INR layer, evaluates the second layer with
//! BLAS over pair chunks, and backpropagates into η̂ without materializing
//! per-pair activations for the whole n² grid.

use crate::diff::{Adam, Tape};
use crate::error::{Error, Result};
use crate::fastmath::sincos_slice;
use crate::graphon::SampledGraph;
use crate::models::{graph_operators, minmax_normalize, random_features, GcnEncoder, SirenInr};
use crate::rng::derive_seed;
use ndarray::linalg::general_mat_mul;
use ndarray::{s, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

/// Serialization format version for [`SortingModel`] documents.
pub const SORTER_SCHEMA_VERSION: u32 = 1;

/// Step-1 training hyperparameters (the batch is always one graph).
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SortingConfig {
    pub epochs: usize,
    pub lr: f64,
}

impl Default for SortingConfig {
    fn default() -> Self {
        SortingConfig {
            epochs: 100,
            lr: 0.01,
        }
    }
}

/// The trained sorter: encoder φ₁, auxiliary graphon INR φ₂, and the
/// feature seeds used for each training graph (recorded for provenance;
/// features are always re-derivable from a graph's own seed).
#[derive(Debug, Clone)]
pub struct SortingModel {
    pub encoder: GcnEncoder,
    pub aux_graphon: SirenInr,
    pub feature_seeds: Vec<u64>,
    pub config: SortingConfig,
    /// Mean over graphs of the per-graph loss, one entry per epoch, each
    /// loss evaluated just before that graph's optimizer step. Stays in
    /// [0,1] since each per-graph loss is a per-pair mean. Not serialized.
    pub epoch_losses: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct SortingModelDoc {
    schema_version: u32,
    encoder: GcnEncoder,
    aux_graphon: SirenInr,
    feature_seeds: Vec<u64>,
    epochs: usize,
    lr: f64,
}

impl SortingModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string(&SortingModelDoc {
            schema_version: SORTER_SCHEMA_VERSION,
            encoder: self.encoder.clone(),
            aux_graphon: self.aux_graphon.clone(),
            feature_seeds: self.feature_seeds.clone(),
            epochs: self.config.epochs,
            lr: self.config.lr,
        })
        .expect("sorter document serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: SortingModelDoc =
            serde_json::from_str(text).map_err(|e| Error::Parse(format!("sorter document: {e}")))?;
        if doc.schema_version != SORTER_SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: SORTER_SCHEMA_VERSION,
                found: doc.schema_version,
            });
        }
        Ok(SortingModel {
            encoder: doc.encoder,
            aux_graphon: doc.aux_graphon,
            feature_seeds: doc.feature_seeds,
            config: SortingConfig {
                epochs: doc.epochs,
                lr: doc.lr,
            },
            epoch_losses: Vec::new(),
        })
    }
}

/// A descending ordering of nodes by latent value.
#[derive(Debug, Clone)]
pub struct NodeOrdering {
    pub latents: Vec<f64>,
    /// `permutation[r]` is the original index of the node at sorted rank r,
    /// so `latents[permutation[0]] ≥ latents[permutation[1]] ≥ …`, ties
    /// broken by ascending original index.
    pub permutation: Vec<usize>,
}

/// Frozen per-node input features: N(0,1) draws keyed to the graph's own
/// seed, so the same graph always sees the same features.
pub fn node_features(graph: &SampledGraph, channels: usize) -> Array2<f64> {
    random_features(graph.n, channels, derive_seed(graph.seed, "node-features", 0))
}

struct GraphContext {
    adj: std::rc::Rc<Array2<f64>>,
    inv_deg: std::rc::Rc<Vec<f64>>,
    features: Array2<f64>,
    feature_seed: u64,
}

fn contexts(dataset: &[SampledGraph], channels: usize) -> Result<Vec<GraphContext>> {
    dataset
        .iter()
        .map(|g| {
            if g.n < 2 {
                return Err(Error::invalid(format!("graph of size {} cannot be sorted", g.n)));
            }
            let dense = g.dense_adjacency();
            let (adj, inv_deg) = graph_operators(&dense);
            Ok(GraphContext {
                adj,
                inv_deg,
                features: node_features(g, channels),
                feature_seed: derive_seed(g.seed, "node-features", 0),
            })
        })
        .collect()
}

/// Trains the sorter on the dataset. Deterministic per seed: the encoder
/// and auxiliary INR initializations derive from `seed`, the features from
/// each graph's own seed.
pub fn train_sorting(
    dataset: &[SampledGraph],
    config: &SortingConfig,
    seed: u64,
) -> Result<SortingModel> {
    if dataset.is_empty() {
        return Err(Error::invalid("sorting needs at least one graph"));
    }
    if config.epochs == 0 || !(config.lr > 0.0) {
        return Err(Error::invalid("sorting config requires epochs ≥ 1 and lr > 0"));
    }
    let mut encoder = GcnEncoder::default_sorter(derive_seed(seed, "sorter-init", 0));
    let mut inr = SirenInr::default_graphon(2, derive_seed(seed, "aux-graphon-init", 0));
    let ctxs = contexts(dataset, encoder.channels)?;
    let mut adam = Adam::new(config.lr);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for _ in 0..config.epochs {
        let mut total = 0.0;
        for ctx in &ctxs {
            let (loss, grads) = step_gradients_fused_ctx(ctx, &encoder, &inr);
            total += loss;
            let mut params = encoder.params_mut();
            params.extend(inr.params_mut());
            let grad_refs: Vec<&Array2<f64>> = grads.iter().collect();
            adam.step(&mut params, &grad_refs);
        }
        // Mean per-graph loss: each graph's loss is already a mean over its
        // n² pairs, so the epoch value stays in [0, 1].
        epoch_losses.push(total / ctxs.len() as f64);
    }
    Ok(SortingModel {
        encoder,
        aux_graphon: inr,
        feature_seeds: ctxs.iter().map(|c| c.feature_seed).collect(),
        config: *config,
        epoch_losses,
    })
}

/// η̂ for a graph under a trained model: min-max-normalized encoder scores,
/// with features re-derived from the graph's seed.
pub fn infer_latents(model: &SortingModel, graph: &SampledGraph) -> Vec<f64> {
    let x = node_features(graph, model.encoder.channels);
    let scores = model.encoder.score(&graph.dense_adjacency(), &x);
    minmax_normalize(&scores).to_vec()
}

/// Sorts the graph by descending latent (ties by ascending original index):
/// Â(i,j) = A(π̂(i), π̂(j)).
pub fn sort_graph(graph: &SampledGraph, latents: &[f64]) -> (Array2<f64>, NodeOrdering) {
    assert_eq!(latents.len(), graph.n, "latent count must match graph size");
    let mut perm: Vec<usize> = (0..graph.n).collect();
    perm.sort_by(|&a, &b| {
        latents[b]
            .partial_cmp(&latents[a])
            .expect("latents are finite")
            .then(a.cmp(&b))
    });
    let a = graph.dense_adjacency();
    let n = graph.n;
    let mut sorted = Array2::zeros((n, n));
    for r in 0..n {
        for c in 0..n {
            sorted[[r, c]] = a[[perm[r], perm[c]]];
        }
    }
    (
        sorted,
        NodeOrdering {
            latents: latents.to_vec(),
            permutation: perm,
        },
    )
}

// ---------------------------------------------------------------------------
// Step-1 objective: reference (tape) and fused implementations.
// ---------------------------------------------------------------------------

fn reference_tape(
    adj: &Array2<f64>,
    features: &Array2<f64>,
    encoder: &GcnEncoder,
    inr: &SirenInr,
) -> (Tape, crate::diff::NodeId, Vec<crate::diff::NodeId>) {
    let (adj_rc, inv_deg) = graph_operators(adj);
    let n = adj.nrows();
    let mut t = Tape::new();
    let gb = encoder.bind(&mut t, true);
    let sb = inr.bind(&mut t);
    let x = t.leaf(features.clone());
    let scores = encoder.tape_forward(&mut t, &gb, adj_rc, inv_deg, x);
    let eta = t.minmax01(scores);
    let grid = t.pair_grid(eta);
    let pred = inr.tape_forward(&mut t, &sb, grid);
    let clamped = t.clamp01_st(pred);
    let flat: Vec<f64> = adj.iter().copied().collect();
    let target = t.leaf(Array2::from_shape_vec((n * n, 1), flat).expect("shape"));
    let resid = t.sub(clamped, target);
    let sq = t.square(resid);
    let loss = t.mean(sq);
    let mut param_nodes = gb.param_nodes();
    param_nodes.extend(sb.param_nodes());
    (t, loss, param_nodes)
}

/// The per-graph training loss, evaluated by the reference tape path.
pub fn step_loss_value(
    adj: &Array2<f64>,
    features: &Array2<f64>,
    encoder: &GcnEncoder,
    inr: &SirenInr,
) -> f64 {
    let (t, loss, _) = reference_tape(adj, features, encoder, inr);
    t.value(loss)[[0, 0]]
}

/// Loss and gradients via the reference tape, in parameter order
/// `encoder.params_mut()` followed by `inr.params_mut()`.
pub fn step_loss_gradients(
    adj: &Array2<f64>,
    features: &Array2<f64>,
    encoder: &GcnEncoder,
    inr: &SirenInr,
) -> (f64, Vec<Array2<f64>>) {
    let (t, loss, param_nodes) = reference_tape(adj, features, encoder, inr);
    let grads = t.backward(loss);
    let out = param_nodes
        .iter()
        .map(|&id| match grads.get(id) {
            Some(g) => g.clone(),
            None => Array2::zeros(t.value(id).raw_dim()),
        })
        .collect();
    (t.value(loss)[[0, 0]], out)
}

/// Loss and gradients via the production path (GCN on the tape, INR pair
/// loss through the fused kernel). Same parameter order and, up to
/// floating-point reassociation, the same values as
/// [`step_loss_gradients`].
pub fn step_loss_gradients_fused(
    adj: &Array2<f64>,
    features: &Array2<f64>,
    encoder: &GcnEncoder,
    inr: &SirenInr,
) -> (f64, Vec<Array2<f64>>) {
    let (adj_rc, inv_deg) = graph_operators(adj);
    let ctx = GraphContext {
        adj: adj_rc,
        inv_deg,
        features: features.clone(),
        feature_seed: 0,
    };
    step_gradients_fused_ctx(&ctx, encoder, inr)
}

fn step_gradients_fused_ctx(
    ctx: &GraphContext,
    encoder: &GcnEncoder,
    inr: &SirenInr,
) -> (f64, Vec<Array2<f64>>) {
    let mut t = Tape::new();
    let gb = encoder.bind(&mut t, true);
    let x = t.leaf(ctx.features.clone());
    let scores = encoder.tape_forward(&mut t, &gb, ctx.adj.clone(), ctx.inv_deg.clone(), x);
    let eta_node = t.minmax01(scores);
    let eta: Vec<f64> = t.value(eta_node).iter().copied().collect();

    let (loss, d_eta, d_inr) = pair_loss_fused(&ctx.adj, &eta, inr);

    let grads = t.backward_seeded(eta_node, d_eta);
    let mut out: Vec<Array2<f64>> = gb
        .param_nodes()
        .iter()
        .map(|&id| match grads.get(id) {
            Some(g) => g.clone(),
            None => Array2::zeros(t.value(id).raw_dim()),
        })
        .collect();
    out.extend(d_inr);
    (loss, out)
}

/// Pairs processed per fused-kernel chunk; sized so the chunk working set
/// stays cache-resident.
const PAIR_CHUNK: usize = 2048;

/// Computes L_t, ∂L/∂η̂, and the auxiliary-INR parameter gradients for one
/// graph without materializing n²-sized per-layer activations.
///
/// Specialized to the two-hidden-layer INR shape used throughout.
fn pair_loss_fused(
    adj: &Array2<f64>,
    eta: &[f64],
    inr: &SirenInr,
) -> (f64, Array2<f64>, Vec<Array2<f64>>) {
    let n = adj.nrows();
    assert_eq!(adj.ncols(), n, "adjacency must be square");
    assert_eq!(eta.len(), n, "latent count mismatch");
    assert_eq!(inr.input_dim, 2, "pair loss needs a 2-D INR");
    assert_eq!(inr.weights.len(), 3, "fused kernel expects two hidden layers");
    let om = inr.omega0;
    let w0 = &inr.weights[0];
    let w1 = &inr.weights[1];
    let w2 = &inr.weights[2];
    let b0 = &inr.biases[0];
    let b1 = &inr.biases[1];
    let b2 = inr.biases[2][[0, 0]];
    let h0 = w0.ncols();
    let h1 = w1.ncols();

    let w0x: Vec<f64> = w0.row(0).to_vec();
    let w0y: Vec<f64> = w0.row(1).to_vec();
    let b0s: Vec<f64> = b0.row(0).to_vec();
    let b1s: Vec<f64> = b1.row(0).to_vec();
    let w2s: Vec<f64> = w2.as_slice().expect("contiguous").to_vec();

    // Per-node first-layer tables: z0(i,j) = u_i + v_j, so one sincos pass
    // over 2n·h0 angles replaces n²·h0 of them.
    let mut u = vec![0.0; n * h0];
    let mut v = vec![0.0; n * h0];
    for i in 0..n {
        let e = eta[i];
        let (ur, vr) = (&mut u[i * h0..(i + 1) * h0], &mut v[i * h0..(i + 1) * h0]);
        for k in 0..h0 {
            ur[k] = om * (w0x[k] * e + b0s[k]);
            vr[k] = om * (w0y[k] * e);
        }
    }
    let mut su = vec![0.0; n * h0];
    let mut cu = vec![0.0; n * h0];
    let mut sv = vec![0.0; n * h0];
    let mut cv = vec![0.0; n * h0];
    sincos_slice(&u, &mut su, &mut cu);
    sincos_slice(&v, &mut sv, &mut cv);

    let cap = PAIR_CHUNK;
    let mut s0 = Array2::<f64>::zeros((cap, h0));
    let mut c0 = Array2::<f64>::zeros((cap, h0));
    let mut z1 = Array2::<f64>::zeros((cap, h1));
    let mut s1 = Array2::<f64>::zeros((cap, h1));
    let mut c1 = Array2::<f64>::zeros((cap, h1));
    let mut dt1 = Array2::<f64>::zeros((cap, h1));
    let mut ds0 = Array2::<f64>::zeros((cap, h0));
    let mut yraw = Array2::<f64>::zeros((cap, 1));
    let mut gcol = Array2::<f64>::zeros((cap, 1));
    let mut tx = Array2::<f64>::zeros((cap, 1));
    let mut ty = Array2::<f64>::zeros((cap, 1));
    let mut ei = vec![0.0f64; cap];
    let mut ej = vec![0.0f64; cap];
    let mut ii = vec![0u32; cap];
    let mut jj = vec![0u32; cap];

    let mut d_w0 = Array2::<f64>::zeros((2, h0));
    let mut d_b0 = Array2::<f64>::zeros((1, h0));
    let mut d_w1 = Array2::<f64>::zeros((h0, h1));
    let mut d_b1 = Array2::<f64>::zeros((1, h1));
    let mut d_w2 = Array2::<f64>::zeros((h1, 1));
    let mut d_b2 = Array2::<f64>::zeros((1, 1));
    let mut d_eta = Array2::<f64>::zeros((n, 1));

    let w0x_col = ArrayView2::from_shape((h0, 1), &w0x).expect("shape");
    let w0y_col = ArrayView2::from_shape((h0, 1), &w0y).expect("shape");
    let adj_s = adj.as_slice().expect("contiguous adjacency");
    let scale = 2.0 / (n * n) as f64;
    let mut loss_sq = 0.0;

    let total = n * n;
    let mut p0 = 0usize;
    let mut i = 0usize;
    let mut j = 0usize;
    while p0 < total {
        let len = cap.min(total - p0);
        {
            let s0s = s0.as_slice_mut().expect("contiguous");
            let c0s = c0.as_slice_mut().expect("contiguous");
            for p in 0..len {
                let (sui, cui) = (&su[i * h0..(i + 1) * h0], &cu[i * h0..(i + 1) * h0]);
                let (svj, cvj) = (&sv[j * h0..(j + 1) * h0], &cv[j * h0..(j + 1) * h0]);
                let s0r = &mut s0s[p * h0..(p + 1) * h0];
                let c0r = &mut c0s[p * h0..(p + 1) * h0];
                for k in 0..h0 {
                    s0r[k] = sui[k] * cvj[k] + cui[k] * svj[k];
                    c0r[k] = cui[k] * cvj[k] - sui[k] * svj[k];
                }
                ei[p] = eta[i];
                ej[p] = eta[j];
                ii[p] = i as u32;
                jj[p] = j as u32;
                j += 1;
                if j == n {
                    j = 0;
                    i += 1;
                }
            }
        }

        // Forward: z1 = ω₀(S0·W1 + b1); S1, C1 = sincos(z1); ŷ = S1·w2 + b2.
        {
            let s0v = s0.slice(s![..len, ..]);
            let mut z1v = z1.slice_mut(s![..len, ..]);
            general_mat_mul(1.0, &s0v, w1, 0.0, &mut z1v);
        }
        {
            let z1s = z1.as_slice_mut().expect("contiguous");
            for p in 0..len {
                let row = &mut z1s[p * h1..(p + 1) * h1];
                for k in 0..h1 {
                    row[k] = om * (row[k] + b1s[k]);
                }
            }
            sincos_slice(
                &z1s[..len * h1],
                &mut s1.as_slice_mut().expect("contiguous")[..len * h1],
                &mut c1.as_slice_mut().expect("contiguous")[..len * h1],
            );
        }
        {
            let s1v = s1.slice(s![..len, ..]);
            let mut yv = yraw.slice_mut(s![..len, ..]);
            general_mat_mul(1.0, &s1v, w2, 0.0, &mut yv);
        }

        // Residuals with the straight-through clamp.
        {
            let ys = yraw.as_slice().expect("contiguous");
            let gs = gcol.as_slice_mut().expect("contiguous");
            let mut db2 = 0.0;
            for p in 0..len {
                let y = ys[p] + b2;
                let c = y.clamp(0.0, 1.0);
                let a = adj_s[ii[p] as usize * n + jj[p] as usize];
                let r = c - a;
                loss_sq += r * r;
                let g = if (0.0..=1.0).contains(&y) { scale * r } else { 0.0 };
                gs[p] = g;
                db2 += g;
            }
            d_b2[[0, 0]] += db2;
        }

        // Backward through the output and hidden layers.
        {
            let s1v = s1.slice(s![..len, ..]);
            let gv = gcol.slice(s![..len, ..]);
            general_mat_mul(1.0, &s1v.t(), &gv, 1.0, &mut d_w2);
        }
        {
            let gs = gcol.as_slice().expect("contiguous");
            let c1s = c1.as_slice().expect("contiguous");
            let dt1s = dt1.as_slice_mut().expect("contiguous");
            let db1 = d_b1.as_slice_mut().expect("contiguous");
            for p in 0..len {
                let g = gs[p];
                let c1r = &c1s[p * h1..(p + 1) * h1];
                let dt1r = &mut dt1s[p * h1..(p + 1) * h1];
                for k in 0..h1 {
                    let d = g * w2s[k] * c1r[k] * om;
                    dt1r[k] = d;
                    db1[k] += d;
                }
            }
        }
        {
            let s0v = s0.slice(s![..len, ..]);
            let dt1v = dt1.slice(s![..len, ..]);
            general_mat_mul(1.0, &s0v.t(), &dt1v, 1.0, &mut d_w1);
            let mut ds0v = ds0.slice_mut(s![..len, ..]);
            general_mat_mul(1.0, &dt1v, &w1.t(), 0.0, &mut ds0v);
        }
        {
            let c0s = c0.as_slice().expect("contiguous");
            let ds0s = ds0.as_slice_mut().expect("contiguous");
            let db0 = d_b0.as_slice_mut().expect("contiguous");
            for p in 0..len {
                let c0r = &c0s[p * h0..(p + 1) * h0];
                let dr = &mut ds0s[p * h0..(p + 1) * h0];
                for k in 0..h0 {
                    dr[k] *= c0r[k] * om;
                    db0[k] += dr[k];
                }
            }
        }
        {
            let dt0v = ds0.slice(s![..len, ..]);
            let eiv = ArrayView2::from_shape((1, len), &ei[..len]).expect("shape");
            let ejv = ArrayView2::from_shape((1, len), &ej[..len]).expect("shape");
            let mut w0r0 = d_w0.slice_mut(s![0..1, ..]);
            general_mat_mul(1.0, &eiv, &dt0v, 1.0, &mut w0r0);
            let mut w0r1 = d_w0.slice_mut(s![1..2, ..]);
            general_mat_mul(1.0, &ejv, &dt0v, 1.0, &mut w0r1);
            let mut txv = tx.slice_mut(s![..len, ..]);
            general_mat_mul(1.0, &dt0v, &w0x_col, 0.0, &mut txv);
            let mut tyv = ty.slice_mut(s![..len, ..]);
            general_mat_mul(1.0, &dt0v, &w0y_col, 0.0, &mut tyv);
        }
        {
            let txs = tx.as_slice().expect("contiguous");
            let tys = ty.as_slice().expect("contiguous");
            for p in 0..len {
                d_eta[[ii[p] as usize, 0]] += txs[p];
                d_eta[[jj[p] as usize, 0]] += tys[p];
            }
        }
        p0 += len;
    }

    (
        loss_sq / (n * n) as f64,
        d_eta,
        vec![d_w0, d_b0, d_w1, d_b1, d_w2, d_b2],
    )
}
