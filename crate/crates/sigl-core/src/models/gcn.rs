//! Graph convolutional encoder for node latent estimation.
//!
//! Each layer combines a node's own embedding with the mean of its
//! neighbors' embeddings:
//!
//! ```text
//! z_v ← ReLU([ W·mean{z_u : u ~ v} ‖ B·z_v ]) · P
//! ```
//!
//! The concatenation doubles the width; the learned projection `P` (no bias,
//! no second activation) brings it back to the channel count, so the
//! declared hidden width holds at every layer. After the final layer a
//! bias-free linear readout produces one raw score per node; min-max
//! normalization of the scores (see [`minmax_normalize`]) yields latent
//! estimates in [0,1]. A bias in the readout would be unidentifiable under
//! that normalization, which is why it is omitted.
//!
//! Input features are random N(0,1) vectors: the encoder extracts structure
//! from the adjacency alone, the features only break symmetry.

use crate::diff::{NodeId, Tape};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::rc::Rc;

use super::siren::SCHEMA_VERSION;

#[derive(Debug, Clone)]
pub struct GcnLayer {
    /// Applied to the aggregated neighbor mean (c×c).
    pub w_neigh: Array2<f64>,
    /// Applied to the node's own embedding (c×c).
    pub w_self: Array2<f64>,
    /// Projection of the 2c-wide ReLU output back to c channels (2c×c).
    pub proj: Array2<f64>,
}

/// Message-passing encoder: `num_layers` graph convolutions over `channels`
/// hidden channels, then a linear readout to one score per node.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "GcnDoc", try_from = "GcnDoc")]
pub struct GcnEncoder {
    pub channels: usize,
    pub layers: Vec<GcnLayer>,
    /// c×1 readout.
    pub readout: Array2<f64>,
}

impl GcnEncoder {
    /// Glorot-uniform initialization, drawn in a fixed order (per layer:
    /// neighbor weight, self weight, projection; then readout).
    pub fn new(channels: usize, num_layers: usize, seed: u64) -> Self {
        let mut rng = crate::rng::rng_from(seed);
        let mut glorot = |rows: usize, cols: usize| {
            let bound = (6.0 / (rows + cols) as f64).sqrt();
            let mut m = Array2::zeros((rows, cols));
            for e in m.iter_mut() {
                *e = rng.gen_range(-bound..=bound);
            }
            m
        };
        let layers = (0..num_layers)
            .map(|_| GcnLayer {
                w_neigh: glorot(channels, channels),
                w_self: glorot(channels, channels),
                proj: glorot(2 * channels, channels),
            })
            .collect();
        let readout = glorot(channels, 1);
        GcnEncoder {
            channels,
            layers,
            readout,
        }
    }

    /// Default encoder: 3 layers, 16 channels.
    pub fn default_sorter(seed: u64) -> Self {
        GcnEncoder::new(16, 3, seed)
    }

    /// Inserts parameters into a tape; `trainable` controls whether they
    /// receive gradients.
    pub fn bind(&self, t: &mut Tape, trainable: bool) -> GcnBinding {
        let add = |t: &mut Tape, v: &Array2<f64>| {
            if trainable {
                t.param(v.clone())
            } else {
                t.leaf(v.clone())
            }
        };
        GcnBinding {
            layers: self
                .layers
                .iter()
                .map(|l| {
                    (
                        add(t, &l.w_neigh),
                        add(t, &l.w_self),
                        add(t, &l.proj),
                    )
                })
                .collect(),
            readout: add(t, &self.readout),
        }
    }

    /// Records the forward pass on a tape: features `x` (n×c node) through
    /// `num_layers` convolutions, readout to n×1 raw scores.
    ///
    /// `adj` must be the symmetric dense adjacency and `inv_deg[i] = 1/deg(i)`
    /// (0 for isolated nodes).
    pub fn tape_forward(
        &self,
        t: &mut Tape,
        binding: &GcnBinding,
        adj: Rc<Array2<f64>>,
        inv_deg: Rc<Vec<f64>>,
        x: NodeId,
    ) -> NodeId {
        let mut h = x;
        for (wn, ws, proj) in binding.layers.iter() {
            let m = t.neighbor_mean(h, adj.clone(), inv_deg.clone());
            let mw = t.matmul(m, *wn);
            let sw = t.matmul(h, *ws);
            let cat = t.concat_cols(mw, sw);
            let act = t.relu(cat);
            h = t.matmul(act, *proj);
        }
        t.matmul(h, binding.readout)
    }

    /// Raw per-node scores on a frozen model (no gradients recorded).
    pub fn score(&self, adj: &Array2<f64>, features: &Array2<f64>) -> Array1<f64> {
        assert_eq!(adj.nrows(), adj.ncols(), "gcn: adjacency not square");
        assert_eq!(
            adj.nrows(),
            features.nrows(),
            "gcn: feature row count mismatch"
        );
        assert_eq!(
            features.ncols(),
            self.channels,
            "gcn: feature dimension mismatch"
        );
        let (adj, inv_deg) = graph_operators(adj);
        let mut t = Tape::new();
        let binding = self.bind(&mut t, false);
        let xn = t.leaf(features.clone());
        let out = self.tape_forward(&mut t, &binding, adj, inv_deg, xn);
        t.value(out).column(0).to_owned()
    }

    /// Parameter list in binding order (see [`GcnBinding::param_nodes`]).
    pub fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = Vec::new();
        for l in self.layers.iter_mut() {
            out.push(&mut l.w_neigh);
            out.push(&mut l.w_self);
            out.push(&mut l.proj);
        }
        out.push(&mut self.readout);
        out
    }
}

/// Tape node ids of a bound [`GcnEncoder`].
pub struct GcnBinding {
    layers: Vec<(NodeId, NodeId, NodeId)>,
    readout: NodeId,
}

impl GcnBinding {
    /// Node ids in the same order as [`GcnEncoder::params_mut`].
    pub fn param_nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        for (wn, ws, p) in self.layers.iter() {
            out.push(*wn);
            out.push(*ws);
            out.push(*p);
        }
        out.push(self.readout);
        out
    }
}

/// Shared aggregation operands for a dense symmetric adjacency: the matrix
/// itself and the per-node inverse degrees (0 for isolated nodes).
pub fn graph_operators(adj: &Array2<f64>) -> (Rc<Array2<f64>>, Rc<Vec<f64>>) {
    let inv_deg: Vec<f64> = adj
        .outer_iter()
        .map(|row| {
            let d: f64 = row.sum();
            if d > 0.0 {
                1.0 / d
            } else {
                0.0
            }
        })
        .collect();
    (Rc::new(adj.clone()), Rc::new(inv_deg))
}

/// Standard-normal node features, n×dim, reproducible from the seed.
pub fn random_features(n: usize, dim: usize, seed: u64) -> Array2<f64> {
    let mut rng = crate::rng::rng_from(seed);
    let mut x = Array2::zeros((n, dim));
    for e in x.iter_mut() {
        *e = rng.sample(StandardNormal);
    }
    x
}

/// Affine rescale to [0,1]: (x − min)/(max − min); a constant input maps to
/// all 0.5. Order is preserved exactly (ties stay tied).
pub fn minmax_normalize(scores: &Array1<f64>) -> Array1<f64> {
    assert!(!scores.is_empty(), "minmax_normalize: empty input");
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for &v in scores.iter() {
        lo = lo.min(v);
        hi = hi.max(v);
    }
    if hi - lo > 0.0 {
        scores.mapv(|v| (v - lo) / (hi - lo))
    } else {
        Array1::from_elem(scores.len(), 0.5)
    }
}

/// Persisted form of the encoder.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GcnDoc {
    pub schema_version: u32,
    pub channels: usize,
    pub w_neigh: Vec<Vec<f64>>,
    pub w_self: Vec<Vec<f64>>,
    pub proj: Vec<Vec<f64>>,
    pub readout: Vec<f64>,
}

impl From<GcnEncoder> for GcnDoc {
    fn from(m: GcnEncoder) -> Self {
        GcnDoc {
            schema_version: SCHEMA_VERSION,
            channels: m.channels,
            w_neigh: m
                .layers
                .iter()
                .map(|l| l.w_neigh.iter().copied().collect())
                .collect(),
            w_self: m
                .layers
                .iter()
                .map(|l| l.w_self.iter().copied().collect())
                .collect(),
            proj: m
                .layers
                .iter()
                .map(|l| l.proj.iter().copied().collect())
                .collect(),
            readout: m.readout.iter().copied().collect(),
        }
    }
}

impl TryFrom<GcnDoc> for GcnEncoder {
    type Error = Error;

    fn try_from(d: GcnDoc) -> Result<Self> {
        if d.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: SCHEMA_VERSION,
                found: d.schema_version,
            });
        }
        let c = d.channels;
        if d.w_neigh.len() != d.w_self.len() || d.w_neigh.len() != d.proj.len() {
            return Err(Error::Parse("gcn layer count mismatch".into()));
        }
        let mut layers = Vec::new();
        for l in 0..d.w_neigh.len() {
            layers.push(GcnLayer {
                w_neigh: Array2::from_shape_vec((c, c), d.w_neigh[l].clone())
                    .map_err(|e| Error::Parse(format!("gcn w_neigh {l}: {e}")))?,
                w_self: Array2::from_shape_vec((c, c), d.w_self[l].clone())
                    .map_err(|e| Error::Parse(format!("gcn w_self {l}: {e}")))?,
                proj: Array2::from_shape_vec((2 * c, c), d.proj[l].clone())
                    .map_err(|e| Error::Parse(format!("gcn proj {l}: {e}")))?,
            });
        }
        let readout = Array2::from_shape_vec((c, 1), d.readout.clone())
            .map_err(|e| Error::Parse(format!("gcn readout: {e}")))?;
        Ok(GcnEncoder {
            channels: c,
            layers,
            readout,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn path_graph(n: usize) -> Array2<f64> {
        let mut a = Array2::zeros((n, n));
        for i in 0..n - 1 {
            a[[i, i + 1]] = 1.0;
            a[[i + 1, i]] = 1.0;
        }
        a
    }

    #[test]
    fn zero_weights_zero_scores() {
        let mut m = GcnEncoder::default_sorter(5);
        for p in m.params_mut() {
            p.fill(0.0);
        }
        let adj = path_graph(4);
        let x = random_features(4, 16, 9);
        let s = m.score(&adj, &x);
        assert!(s.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn single_channel_path_matches_hand_recursion() {
        // One channel: layer output x' = p₁·relu(w·mean) + p₂·relu(b·x).
        let (w, b, p1, p2, r) = (0.8, -0.5, 1.2, 0.7, 2.0);
        let layer = GcnLayer {
            w_neigh: array![[w]],
            w_self: array![[b]],
            proj: array![[p1], [p2]],
        };
        let m = GcnEncoder {
            channels: 1,
            layers: vec![layer.clone(), layer.clone(), layer],
            readout: array![[r]],
        };
        let adj = path_graph(3);
        let x0 = vec![1.0, 2.0, 3.0];
        let mut x = x0.clone();
        for _ in 0..3 {
            let mean = [x[1], (x[0] + x[2]) / 2.0, x[1]];
            x = (0..3)
                .map(|i| {
                    p1 * (w * mean[i]).max(0.0) + p2 * (b * x[i]).max(0.0)
                })
                .collect();
        }
        let expect: Vec<f64> = x.iter().map(|v| r * v).collect();
        let features = Array2::from_shape_vec((3, 1), x0).unwrap();
        let got = m.score(&adj, &features);
        for i in 0..3 {
            assert!((got[i] - expect[i]).abs() < 1e-12, "{got} vs {expect:?}");
        }
    }

    #[test]
    fn permutation_equivariance() {
        let m = GcnEncoder::default_sorter(11);
        let mut rng = crate::rng::rng_from(4);
        let n = 12;
        let mut adj = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                if rng.gen_range(0.0..1.0) < 0.4 {
                    adj[[i, j]] = 1.0;
                    adj[[j, i]] = 1.0;
                }
            }
        }
        let x = random_features(n, 16, 21);
        let base = m.score(&adj, &x);

        // Rotate nodes by 5 and permute adjacency rows/cols and feature rows.
        let perm: Vec<usize> = (0..n).map(|i| (i + 5) % n).collect();
        let mut padj = Array2::zeros((n, n));
        let mut px = Array2::zeros((n, 16));
        for i in 0..n {
            for j in 0..n {
                padj[[i, j]] = adj[[perm[i], perm[j]]];
            }
            px.row_mut(i).assign(&x.row(perm[i]));
        }
        let permuted = m.score(&padj, &px);
        for i in 0..n {
            assert!(
                (permuted[i] - base[perm[i]]).abs() < 1e-10,
                "equivariance violated at {i}"
            );
        }
    }

    #[test]
    fn identical_neighborhoods_identical_scores() {
        // Two leaves attached to the same hub with identical features.
        let mut adj = Array2::zeros((3, 3));
        adj[[0, 2]] = 1.0;
        adj[[2, 0]] = 1.0;
        adj[[1, 2]] = 1.0;
        adj[[2, 1]] = 1.0;
        let m = GcnEncoder::default_sorter(3);
        let mut x = random_features(3, 16, 8);
        let leaf_feat = x.row(0).to_owned();
        x.row_mut(1).assign(&leaf_feat);
        let s = m.score(&adj, &x);
        assert!((s[0] - s[1]).abs() < 1e-12);
    }

    #[test]
    fn minmax_examples() {
        let v = minmax_normalize(&array![1.0, 2.0, 3.0]);
        assert_eq!(v, array![0.0, 0.5, 1.0]);
        let c = minmax_normalize(&array![4.0, 4.0, 4.0]);
        assert_eq!(c, array![0.5, 0.5, 0.5]);
        // Order preserved, ties stay tied.
        let t = minmax_normalize(&array![2.0, -1.0, 2.0, 5.0]);
        assert_eq!(t[0], t[2]);
        assert!(t[1] < t[0] && t[0] < t[3]);
    }

    #[test]
    fn gradients_match_finite_differences() {
        use crate::diff::fd;
        let m = GcnEncoder::new(4, 2, 17);
        let adj = path_graph(5);
        let x = random_features(5, 4, 2);
        let target = Array2::from_elem((5, 1), 0.3);

        let loss_of = |m: &GcnEncoder| -> f64 {
            let (a, d) = graph_operators(&adj);
            let mut t = Tape::new();
            let binding = m.bind(&mut t, false);
            let xn = t.leaf(x.clone());
            let s = m.tape_forward(&mut t, &binding, a, d, xn);
            let eta = t.minmax01(s);
            let tn = t.leaf(target.clone());
            let r = t.sub(eta, tn);
            let sq = t.square(r);
            let l = t.mean(sq);
            t.value(l)[[0, 0]]
        };

        let (a, d) = graph_operators(&adj);
        let mut t = Tape::new();
        let binding = m.bind(&mut t, true);
        let xn = t.leaf(x.clone());
        let s = m.tape_forward(&mut t, &binding, a, d, xn);
        let eta = t.minmax01(s);
        let tn = t.leaf(target.clone());
        let r = t.sub(eta, tn);
        let sq = t.square(r);
        let l = t.mean(sq);
        let grads = t.backward(l);

        let nodes = binding.param_nodes();
        let mut probe = m.clone();
        let n_params = probe.params_mut().len();
        for pi in 0..n_params {
            let current = {
                let mut c = probe.clone();
                c.params_mut()[pi].clone()
            };
            let num = fd::numeric_gradient(
                |p| {
                    let mut c = probe.clone();
                    *c.params_mut()[pi] = p.clone();
                    loss_of(&c)
                },
                &current,
                1e-6,
            );
            let rel = fd::max_relative_error(grads.expect(nodes[pi]), &num, 1e-6);
            assert!(rel < 1e-4, "param {pi} rel err {rel}");
        }
    }

    #[test]
    fn doc_round_trip() {
        let m = GcnEncoder::default_sorter(42);
        let json = serde_json::to_string(&m).unwrap();
        let back: GcnEncoder = serde_json::from_str(&json).unwrap();
        for (a, b) in m.layers.iter().zip(back.layers.iter()) {
            assert_eq!(a.w_neigh, b.w_neigh);
            assert_eq!(a.w_self, b.w_self);
            assert_eq!(a.proj, b.proj);
        }
        assert_eq!(m.readout, back.readout);
    }
}
