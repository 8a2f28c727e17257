//! Sinusoidal implicit neural representation (INR).
//!
//! A coordinate MLP whose hidden layers apply `sin(ω₀·(W x + b))` and whose
//! output layer is a bare affine map — no activation, no clamping (range
//! handling happens at graphon sampling time, not inside the network).
//! The 2-D variant represents a single graphon, the 3-D variant a graphon
//! family with a latent third coordinate.

use crate::diff::{NodeId, Tape};
use crate::error::{Error, Result};
use crate::fastmath;
use ndarray::{Array2, ArrayView2};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Schema version stamped into every persisted model document.
pub const SCHEMA_VERSION: u32 = 1;

/// Sine-activated coordinate network.
///
/// `weights[l]` is `in×out` (inputs are row vectors), `biases[l]` is `1×out`.
/// Hidden layers: `x ← sin(ω₀·(x·W + b))`; final layer affine. A network
/// with a single hidden unit, `W = (1, 0)`, zero biases and unit final
/// weight therefore computes `sin(ω₀·x)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(into = "SirenDoc", try_from = "SirenDoc")]
pub struct SirenInr {
    pub input_dim: usize,
    pub omega0: f64,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array2<f64>>,
}

impl SirenInr {
    /// Fresh network with the standard sinusoidal initialization: first
    /// layer uniform in ±1/fan_in, later layers uniform in ±√(6/fan_in)/ω₀;
    /// biases drawn from the same range as their layer's weights. Draw
    /// order (layer by layer, weights row-major, then bias) is fixed, so a
    /// seed pins the parameters exactly.
    pub fn new(input_dim: usize, hidden: &[usize], omega0: f64, seed: u64) -> Self {
        let mut rng = crate::rng::rng_from(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let mut fan_in = input_dim;
        let widths: Vec<usize> = hidden.iter().copied().chain(std::iter::once(1)).collect();
        for (l, &out) in widths.iter().enumerate() {
            let bound = if l == 0 {
                1.0 / fan_in as f64
            } else {
                (6.0 / fan_in as f64).sqrt() / omega0
            };
            let mut w = Array2::zeros((fan_in, out));
            for e in w.iter_mut() {
                *e = rng.gen_range(-bound..=bound);
            }
            let mut b = Array2::zeros((1, out));
            for e in b.iter_mut() {
                *e = rng.gen_range(-bound..=bound);
            }
            weights.push(w);
            biases.push(b);
            fan_in = out;
        }
        SirenInr {
            input_dim,
            omega0,
            weights,
            biases,
        }
    }

    /// Default graphon INR: two hidden layers of 20 units, ω₀ = 10.
    pub fn default_graphon(input_dim: usize, seed: u64) -> Self {
        SirenInr::new(input_dim, &[20, 20], 10.0, seed)
    }

    /// Output widths per layer, e.g. `[20, 20, 1]`.
    pub fn layer_widths(&self) -> Vec<usize> {
        self.weights.iter().map(|w| w.ncols()).collect()
    }

    /// Raw forward pass over a batch of coordinate rows (`B×input_dim`).
    pub fn forward_batch(&self, coords: ArrayView2<f64>) -> Vec<f64> {
        assert_eq!(
            coords.ncols(),
            self.input_dim,
            "siren: coordinate dimension mismatch"
        );
        let mut z = coords.to_owned();
        let last = self.weights.len() - 1;
        for l in 0..last {
            let mut pre = z.dot(&self.weights[l]);
            pre += &self.biases[l].row(0);
            pre.mapv_inplace(|x| x * self.omega0);
            let buf = pre.as_slice_mut().expect("contiguous");
            let mut cos = vec![0.0; buf.len()];
            fastmath::sincos_in_place(buf, &mut cos);
            z = pre;
        }
        let mut out = z.dot(&self.weights[last]);
        out += &self.biases[last].row(0);
        out.into_raw_vec_and_offset().0
    }

    /// Single-point evaluation (convenience wrapper over [`forward_batch`](Self::forward_batch)).
    pub fn forward_one(&self, coords: &[f64]) -> f64 {
        let c = ArrayView2::from_shape((1, coords.len()), coords).expect("shape");
        self.forward_batch(c)[0]
    }

    /// Records the forward pass on a tape. `params` must come from
    /// [`bind`](Self::bind) on the same tape; `coords` is a `B×input_dim`
    /// node (constant or differentiable, e.g. a pair grid of latents).
    pub fn tape_forward(&self, t: &mut Tape, binding: &SirenBinding, coords: NodeId) -> NodeId {
        let last = binding.w.len() - 1;
        let mut z = coords;
        for l in 0..last {
            let xw = t.matmul(z, binding.w[l]);
            let pre = t.add_row(xw, binding.b[l]);
            let scaled = t.scale(pre, self.omega0);
            z = t.sin(scaled);
        }
        let xw = t.matmul(z, binding.w[last]);
        t.add_row(xw, binding.b[last])
    }

    /// Inserts the parameters into a tape as trainable nodes.
    pub fn bind(&self, t: &mut Tape) -> SirenBinding {
        SirenBinding {
            w: self.weights.iter().map(|w| t.param(w.clone())).collect(),
            b: self.biases.iter().map(|b| t.param(b.clone())).collect(),
        }
    }

    /// Parameter list in the fixed order W₀, b₀, W₁, b₁, …
    pub fn params_mut(&mut self) -> Vec<&mut Array2<f64>> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            out.push(w);
            out.push(b);
        }
        out
    }
}

/// Tape node ids of a bound [`SirenInr`].
pub struct SirenBinding {
    pub w: Vec<NodeId>,
    pub b: Vec<NodeId>,
}

impl SirenBinding {
    /// Node ids in the same order as [`SirenInr::params_mut`].
    pub fn param_nodes(&self) -> Vec<NodeId> {
        let mut out = Vec::new();
        for (w, b) in self.w.iter().zip(self.b.iter()) {
            out.push(*w);
            out.push(*b);
        }
        out
    }
}

/// Persisted form: structured, versioned, flat row-major arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SirenDoc {
    pub schema_version: u32,
    pub input_dim: usize,
    pub omega0: f64,
    pub layer_widths: Vec<usize>,
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl From<SirenInr> for SirenDoc {
    fn from(m: SirenInr) -> Self {
        SirenDoc {
            schema_version: SCHEMA_VERSION,
            input_dim: m.input_dim,
            omega0: m.omega0,
            layer_widths: m.layer_widths(),
            weights: m
                .weights
                .iter()
                .map(|w| w.iter().copied().collect())
                .collect(),
            biases: m
                .biases
                .iter()
                .map(|b| b.iter().copied().collect())
                .collect(),
        }
    }
}

impl TryFrom<SirenDoc> for SirenInr {
    type Error = Error;

    fn try_from(d: SirenDoc) -> Result<Self> {
        if d.schema_version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion {
                expected: SCHEMA_VERSION,
                found: d.schema_version,
            });
        }
        if d.layer_widths.is_empty() || d.weights.len() != d.layer_widths.len() {
            return Err(Error::Parse("layer/width count mismatch".into()));
        }
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        let mut fan_in = d.input_dim;
        for (l, &out) in d.layer_widths.iter().enumerate() {
            let w = Array2::from_shape_vec((fan_in, out), d.weights[l].clone())
                .map_err(|e| Error::Parse(format!("weight matrix {l}: {e}")))?;
            let b = Array2::from_shape_vec((1, out), d.biases[l].clone())
                .map_err(|e| Error::Parse(format!("bias {l}: {e}")))?;
            weights.push(w);
            biases.push(b);
            fan_in = out;
        }
        Ok(SirenInr {
            input_dim: d.input_dim,
            omega0: d.omega0,
            weights,
            biases,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn zero_weights_output_final_bias() {
        let mut m = SirenInr::default_graphon(2, 1);
        for w in m.weights.iter_mut() {
            w.fill(0.0);
        }
        for b in m.biases.iter_mut() {
            b.fill(0.0);
        }
        m.biases[2][[0, 0]] = 0.3;
        for &(x, y) in &[(0.0, 0.0), (0.5, 0.25), (1.0, 1.0)] {
            assert_eq!(m.forward_one(&[x, y]), 0.3);
        }
    }

    #[test]
    fn single_unit_net_is_sin_omega_x() {
        let m = SirenInr {
            input_dim: 2,
            omega0: 10.0,
            weights: vec![array![[1.0], [0.0]], array![[1.0]]],
            biases: vec![array![[0.0]], array![[0.0]]],
        };
        assert_eq!(m.forward_one(&[0.0, 0.7]), 0.0);
        for &x in &[0.1, 0.35, 0.9] {
            let got = m.forward_one(&[x, 0.4]);
            assert!((got - (10.0 * x).sin()).abs() < 1e-12, "{got}");
        }
    }

    #[test]
    fn tape_forward_agrees_with_plain_forward() {
        let m = SirenInr::default_graphon(2, 7);
        let coords = array![[0.1, 0.2], [0.9, 0.7], [0.5, 0.5], [0.0, 1.0]];
        let plain = m.forward_batch(coords.view());
        let mut t = Tape::new();
        let binding = m.bind(&mut t);
        let c = t.leaf(coords.clone());
        let out = m.tape_forward(&mut t, &binding, c);
        for (i, &p) in plain.iter().enumerate() {
            assert!((t.value(out)[[i, 0]] - p).abs() < 1e-12);
        }
    }

    #[test]
    fn parameter_gradients_match_finite_differences() {
        use crate::diff::fd;
        let m = SirenInr::new(2, &[5, 5], 10.0, 3);
        let coords = array![[0.3, 0.8], [0.6, 0.1], [0.25, 0.4]];
        // Scalar loss: mean of squared outputs.
        let loss_with = |m: &SirenInr| -> f64 {
            let out = m.forward_batch(coords.view());
            out.iter().map(|o| o * o).sum::<f64>() / out.len() as f64
        };
        let mut t = Tape::new();
        let binding = m.bind(&mut t);
        let c = t.leaf(coords.clone());
        let out = m.tape_forward(&mut t, &binding, c);
        let sq = t.square(out);
        let l = t.mean(sq);
        let grads = t.backward(l);
        for layer in 0..3 {
            for (node, which) in [(binding.w[layer], true), (binding.b[layer], false)] {
                let base = m.clone();
                let current = if which {
                    base.weights[layer].clone()
                } else {
                    base.biases[layer].clone()
                };
                let num = fd::numeric_gradient(
                    |p| {
                        let mut probe = base.clone();
                        if which {
                            probe.weights[layer] = p.clone();
                        } else {
                            probe.biases[layer] = p.clone();
                        }
                        loss_with(&probe)
                    },
                    &current,
                    1e-6,
                );
                let rel = fd::max_relative_error(grads.expect(node), &num, 1e-6);
                assert!(rel < 1e-5, "layer {layer} rel err {rel}");
            }
        }
    }

    #[test]
    fn doc_round_trip_is_bit_exact() {
        let m = SirenInr::default_graphon(3, 99);
        let json = serde_json::to_string(&m).unwrap();
        let back: SirenInr = serde_json::from_str(&json).unwrap();
        assert_eq!(m.input_dim, back.input_dim);
        for (a, b) in m.weights.iter().zip(back.weights.iter()) {
            assert_eq!(a, b);
        }
        for (a, b) in m.biases.iter().zip(back.biases.iter()) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn version_mismatch_names_both_versions() {
        let m = SirenInr::default_graphon(2, 1);
        let mut doc = SirenDoc::from(m);
        doc.schema_version = 9;
        let err = SirenInr::try_from(doc).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("expected 1") && msg.contains("found 9"), "{msg}");
    }
}
