//! Minimal reverse-mode automatic differentiation over dense `f64` arrays.
//!
//! An eager, define-by-run tape: every operation computes its value
//! immediately and records itself, so graphs can change shape per training
//! example (graph sizes vary). Values are `Array2<f64>` throughout —
//! vectors are n×1 columns, scalars are 1×1 — which keeps the op set tiny.
//!
//! The op set is exactly what the two model architectures need: matrix
//! multiply, add (same-shape and row-broadcast bias), subtract, scalar
//! multiply, elementwise sin / ReLU / square, sum, mean, mean over graph
//! neighborhoods, column concatenation, min-max normalization to [0,1],
//! clamp to [0,1] with a straight-through gradient, and expansion of a
//! latent vector into the n² coordinate-pair grid.
//!
//! Shape violations are programmer errors and panic with a message, like
//! `ndarray`'s own `dot`; fallible user input is validated before it
//! reaches a tape.
//!
//! [`Tape::backward`] runs reverse accumulation from a scalar root;
//! [`Tape::backward_seeded`] starts from an arbitrary node with a supplied
//! output adjoint, which lets a hand-fused kernel (see [`crate::sorting`])
//! compute ∂loss/∂η̂ externally and hand it back to the tape that produced
//! η̂. Gradients of shared subexpressions accumulate by summation. No
//! operation mutates a parent's value.

mod adam;
pub mod fd;

pub use adam::Adam;

use ndarray::{Array2, Axis};
use std::rc::Rc;

pub type NodeId = usize;

enum Op {
    Leaf,
    MatMul(NodeId, NodeId),
    Add(NodeId, NodeId),
    /// matrix + row vector (1×c), broadcast over rows.
    AddRow(NodeId, NodeId),
    Sub(NodeId, NodeId),
    Scale(NodeId, f64),
    Sin(NodeId),
    Relu(NodeId),
    Square(NodeId),
    Sum(NodeId),
    Mean(NodeId),
    /// Row i of the value is the mean of parent rows over i's neighbors
    /// (zero for isolated nodes). The adjacency is a constant, not a node.
    NeighborMean {
        x: NodeId,
        adj: Rc<Array2<f64>>,
        inv_deg: Rc<Vec<f64>>,
    },
    ConcatCols(NodeId, NodeId),
    /// Elementwise product with a constant array (e.g. per-point weights).
    MulConst(NodeId, Rc<Array2<f64>>),
    MinMax01(NodeId),
    Clamp01(NodeId),
    /// n×1 latents → n²×2 rows (η_i, η_j), i-major.
    PairGrid(NodeId),
}

struct Node {
    value: Array2<f64>,
    op: Op,
    /// Whether any ancestor is a parameter; gradients are only propagated
    /// into requiring nodes.
    requires: bool,
}

/// Gradient arrays indexed by the node ids of one backward pass.
pub struct Gradients(Vec<Option<Array2<f64>>>);

impl Gradients {
    /// Gradient of the root with respect to node `id`; zero-shaped `None`
    /// means the node did not require gradients or was unreachable.
    pub fn get(&self, id: NodeId) -> Option<&Array2<f64>> {
        self.0.get(id).and_then(|g| g.as_ref())
    }

    /// As [`get`](Self::get), panicking when absent (for parameter nodes).
    pub fn expect(&self, id: NodeId) -> &Array2<f64> {
        self.get(id).expect("gradient not computed for node")
    }
}

#[derive(Default)]
pub struct Tape {
    nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Tape { nodes: Vec::new() }
    }

    fn push(&mut self, value: Array2<f64>, op: Op, requires: bool) -> NodeId {
        self.nodes.push(Node {
            value,
            op,
            requires,
        });
        self.nodes.len() - 1
    }

    fn req(&self, id: NodeId) -> bool {
        self.nodes[id].requires
    }

    /// A constant input: participates in values, never receives gradients.
    pub fn leaf(&mut self, value: Array2<f64>) -> NodeId {
        self.push(value, Op::Leaf, false)
    }

    /// A trainable parameter: gradients accumulate here.
    pub fn param(&mut self, value: Array2<f64>) -> NodeId {
        self.push(value, Op::Leaf, true)
    }

    pub fn value(&self, id: NodeId) -> &Array2<f64> {
        &self.nodes[id].value
    }

    pub fn matmul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let v = self.nodes[a].value.dot(&self.nodes[b].value);
        self.push(v, Op::MatMul(a, b), self.req(a) || self.req(b))
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(
            self.nodes[a].value.dim(),
            self.nodes[b].value.dim(),
            "add: shape mismatch"
        );
        let v = &self.nodes[a].value + &self.nodes[b].value;
        self.push(v, Op::Add(a, b), self.req(a) || self.req(b))
    }

    /// `a` (r×c) plus row vector `bias` (1×c), broadcast over rows.
    pub fn add_row(&mut self, a: NodeId, bias: NodeId) -> NodeId {
        let bv = &self.nodes[bias].value;
        assert_eq!(bv.nrows(), 1, "add_row: bias must be 1×c");
        assert_eq!(
            self.nodes[a].value.ncols(),
            bv.ncols(),
            "add_row: width mismatch"
        );
        let v = &self.nodes[a].value + &bv.row(0);
        self.push(v, Op::AddRow(a, bias), self.req(a) || self.req(bias))
    }

    pub fn sub(&mut self, a: NodeId, b: NodeId) -> NodeId {
        assert_eq!(
            self.nodes[a].value.dim(),
            self.nodes[b].value.dim(),
            "sub: shape mismatch"
        );
        let v = &self.nodes[a].value - &self.nodes[b].value;
        self.push(v, Op::Sub(a, b), self.req(a) || self.req(b))
    }

    pub fn scale(&mut self, a: NodeId, k: f64) -> NodeId {
        let v = self.nodes[a].value.mapv(|x| k * x);
        self.push(v, Op::Scale(a, k), self.req(a))
    }

    pub fn sin(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.mapv(f64::sin);
        self.push(v, Op::Sin(a), self.req(a))
    }

    pub fn relu(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.mapv(|x| x.max(0.0));
        self.push(v, Op::Relu(a), self.req(a))
    }

    pub fn square(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.mapv(|x| x * x);
        self.push(v, Op::Square(a), self.req(a))
    }

    pub fn sum(&mut self, a: NodeId) -> NodeId {
        let v = Array2::from_elem((1, 1), self.nodes[a].value.sum());
        self.push(v, Op::Sum(a), self.req(a))
    }

    pub fn mean(&mut self, a: NodeId) -> NodeId {
        let n = self.nodes[a].value.len() as f64;
        let v = Array2::from_elem((1, 1), self.nodes[a].value.sum() / n);
        self.push(v, Op::Mean(a), self.req(a))
    }

    /// Neighborhood mean aggregation: value row i = (Σ_{j: A(i,j)=1} x_j) / deg(i),
    /// zero when deg(i) = 0. `adj` must be symmetric (undirected graphs);
    /// the backward pass relies on A = Aᵀ.
    pub fn neighbor_mean(&mut self, x: NodeId, adj: Rc<Array2<f64>>, inv_deg: Rc<Vec<f64>>) -> NodeId {
        assert_eq!(adj.nrows(), adj.ncols(), "neighbor_mean: adjacency not square");
        assert_eq!(
            adj.nrows(),
            self.nodes[x].value.nrows(),
            "neighbor_mean: node count mismatch"
        );
        let mut v = adj.dot(&self.nodes[x].value);
        for (mut row, &d) in v.outer_iter_mut().zip(inv_deg.iter()) {
            row.mapv_inplace(|e| e * d);
        }
        let requires = self.req(x);
        self.push(v, Op::NeighborMean { x, adj, inv_deg }, requires)
    }

    pub fn concat_cols(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let (av, bv) = (&self.nodes[a].value, &self.nodes[b].value);
        assert_eq!(av.nrows(), bv.nrows(), "concat_cols: row mismatch");
        let mut v = Array2::zeros((av.nrows(), av.ncols() + bv.ncols()));
        v.slice_mut(ndarray::s![.., ..av.ncols()]).assign(av);
        v.slice_mut(ndarray::s![.., av.ncols()..]).assign(bv);
        self.push(v, Op::ConcatCols(a, b), self.req(a) || self.req(b))
    }

    /// Elementwise product with a constant (non-differentiated) array of
    /// the same shape, e.g. per-point regression weights.
    pub fn mul_const(&mut self, a: NodeId, c: Rc<Array2<f64>>) -> NodeId {
        assert_eq!(
            self.nodes[a].value.dim(),
            c.dim(),
            "mul_const: shape mismatch"
        );
        let v = &self.nodes[a].value * &*c;
        let requires = self.req(a);
        self.push(v, Op::MulConst(a, c), requires)
    }

    /// Affine rescale of an n×1 column to [0,1]: (x − min)/(max − min).
    /// A constant column maps to all 0.5 with zero gradient.
    pub fn minmax01(&mut self, a: NodeId) -> NodeId {
        assert_eq!(self.nodes[a].value.ncols(), 1, "minmax01: expects n×1");
        let x = &self.nodes[a].value;
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for &v in x.iter() {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        let v = if hi - lo > 0.0 {
            x.mapv(|e| (e - lo) / (hi - lo))
        } else {
            Array2::from_elem(x.raw_dim(), 0.5)
        };
        self.push(v, Op::MinMax01(a), self.req(a))
    }

    /// clamp(x, 0, 1) with a straight-through gradient: the adjoint passes
    /// unchanged where 0 ≤ x ≤ 1 (boundaries included) and is zeroed outside.
    pub fn clamp01_st(&mut self, a: NodeId) -> NodeId {
        let v = self.nodes[a].value.mapv(|x| x.clamp(0.0, 1.0));
        self.push(v, Op::Clamp01(a), self.req(a))
    }

    /// Expands an n×1 latent column into the full n²×2 pair grid whose row
    /// i·n + j is (η_i, η_j).
    pub fn pair_grid(&mut self, a: NodeId) -> NodeId {
        assert_eq!(self.nodes[a].value.ncols(), 1, "pair_grid: expects n×1");
        let x = &self.nodes[a].value;
        let n = x.nrows();
        let mut v = Array2::zeros((n * n, 2));
        for i in 0..n {
            for j in 0..n {
                v[[i * n + j, 0]] = x[[i, 0]];
                v[[i * n + j, 1]] = x[[j, 0]];
            }
        }
        self.push(v, Op::PairGrid(a), self.req(a))
    }

    /// Reverse accumulation from a scalar (1×1) root node.
    pub fn backward(&self, root: NodeId) -> Gradients {
        assert_eq!(
            self.nodes[root].value.dim(),
            (1, 1),
            "backward: root must be scalar"
        );
        self.backward_seeded(root, Array2::from_elem((1, 1), 1.0))
    }

    /// Reverse accumulation from `node`, seeding its adjoint with `seed`
    /// (the vector–Jacobian product entry point for fused external kernels).
    pub fn backward_seeded(&self, node: NodeId, seed: Array2<f64>) -> Gradients {
        assert_eq!(
            self.nodes[node].value.dim(),
            seed.dim(),
            "backward_seeded: seed shape mismatch"
        );
        let mut grads: Vec<Option<Array2<f64>>> = vec![None; self.nodes.len()];
        grads[node] = Some(seed);
        for id in (0..=node).rev() {
            if grads[id].is_none() || !self.nodes[id].requires {
                continue;
            }
            let g = grads[id].take().unwrap();
            self.accumulate_parents(id, &g, &mut grads);
            grads[id] = Some(g);
        }
        Gradients(grads)
    }

    fn accumulate_parents(&self, id: NodeId, g: &Array2<f64>, grads: &mut [Option<Array2<f64>>]) {
        let add_to = |grads: &mut [Option<Array2<f64>>], pid: NodeId, delta: Array2<f64>| {
            match &mut grads[pid] {
                Some(acc) => *acc += &delta,
                slot @ None => *slot = Some(delta),
            }
        };
        match &self.nodes[id].op {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                if self.req(*a) {
                    let db = self.nodes[*b].value.t();
                    add_to(grads, *a, g.dot(&db));
                }
                if self.req(*b) {
                    let da = self.nodes[*a].value.t();
                    add_to(grads, *b, da.dot(g));
                }
            }
            Op::Add(a, b) => {
                if self.req(*a) {
                    add_to(grads, *a, g.clone());
                }
                if self.req(*b) {
                    add_to(grads, *b, g.clone());
                }
            }
            Op::AddRow(a, bias) => {
                if self.req(*a) {
                    add_to(grads, *a, g.clone());
                }
                if self.req(*bias) {
                    let summed = g.sum_axis(Axis(0)).insert_axis(Axis(0));
                    add_to(grads, *bias, summed);
                }
            }
            Op::Sub(a, b) => {
                if self.req(*a) {
                    add_to(grads, *a, g.clone());
                }
                if self.req(*b) {
                    add_to(grads, *b, g.mapv(|x| -x));
                }
            }
            Op::Scale(a, k) => {
                if self.req(*a) {
                    add_to(grads, *a, g.mapv(|x| k * x));
                }
            }
            Op::Sin(a) => {
                if self.req(*a) {
                    let cos = self.nodes[*a].value.mapv(f64::cos);
                    add_to(grads, *a, g * &cos);
                }
            }
            Op::Relu(a) => {
                if self.req(*a) {
                    let mask = self.nodes[*a].value.mapv(|x| if x > 0.0 { 1.0 } else { 0.0 });
                    add_to(grads, *a, g * &mask);
                }
            }
            Op::Square(a) => {
                if self.req(*a) {
                    let two_x = self.nodes[*a].value.mapv(|x| 2.0 * x);
                    add_to(grads, *a, g * &two_x);
                }
            }
            Op::Sum(a) => {
                if self.req(*a) {
                    let s = g[[0, 0]];
                    add_to(grads, *a, Array2::from_elem(self.nodes[*a].value.raw_dim(), s));
                }
            }
            Op::Mean(a) => {
                if self.req(*a) {
                    let n = self.nodes[*a].value.len() as f64;
                    let s = g[[0, 0]] / n;
                    add_to(grads, *a, Array2::from_elem(self.nodes[*a].value.raw_dim(), s));
                }
            }
            Op::NeighborMean { x, adj, inv_deg } => {
                if self.req(*x) {
                    // d/dx of diag(1/deg)·A·x is Aᵀ·diag(1/deg) = A·diag(1/deg)
                    // applied to the adjoint (A symmetric).
                    let mut scaled = g.clone();
                    for (mut row, &d) in scaled.outer_iter_mut().zip(inv_deg.iter()) {
                        row.mapv_inplace(|e| e * d);
                    }
                    add_to(grads, *x, adj.dot(&scaled));
                }
            }
            Op::ConcatCols(a, b) => {
                let ac = self.nodes[*a].value.ncols();
                if self.req(*a) {
                    add_to(grads, *a, g.slice(ndarray::s![.., ..ac]).to_owned());
                }
                if self.req(*b) {
                    add_to(grads, *b, g.slice(ndarray::s![.., ac..]).to_owned());
                }
            }
            Op::MulConst(a, c) => {
                if self.req(*a) {
                    add_to(grads, *a, g * &**c);
                }
            }
            Op::MinMax01(a) => {
                if self.req(*a) {
                    let x = &self.nodes[*a].value;
                    let y = &self.nodes[id].value;
                    let (mut lo, mut hi, mut ilo, mut ihi) = (f64::INFINITY, f64::NEG_INFINITY, 0, 0);
                    for (i, &v) in x.iter().enumerate() {
                        if v < lo {
                            lo = v;
                            ilo = i;
                        }
                        if v > hi {
                            hi = v;
                            ihi = i;
                        }
                    }
                    let range = hi - lo;
                    let mut dx = Array2::zeros(x.raw_dim());
                    if range > 0.0 {
                        // y_j = (x_j − m)/(M − m):
                        //   ∂y_j/∂x_j adds g_j/(M−m);
                        //   ∂y_j/∂m = (y_j − 1)/(M−m) charged to argmin;
                        //   ∂y_j/∂M = −y_j/(M−m) charged to argmax.
                        let mut dmin = 0.0;
                        let mut dmax = 0.0;
                        for (j, (&gj, &yj)) in g.iter().zip(y.iter()).enumerate() {
                            dx[[j, 0]] += gj / range;
                            dmin += gj * (yj - 1.0) / range;
                            dmax += gj * (-yj) / range;
                        }
                        dx[[ilo, 0]] += dmin;
                        dx[[ihi, 0]] += dmax;
                    }
                    add_to(grads, *a, dx);
                }
            }
            Op::Clamp01(a) => {
                if self.req(*a) {
                    let mask = self.nodes[*a]
                        .value
                        .mapv(|x| if (0.0..=1.0).contains(&x) { 1.0 } else { 0.0 });
                    add_to(grads, *a, g * &mask);
                }
            }
            Op::PairGrid(a) => {
                if self.req(*a) {
                    let n = self.nodes[*a].value.nrows();
                    let mut dx = Array2::zeros((n, 1));
                    for i in 0..n {
                        for j in 0..n {
                            dx[[i, 0]] += g[[i * n + j, 0]];
                            dx[[j, 0]] += g[[i * n + j, 1]];
                        }
                    }
                    add_to(grads, *a, dx);
                }
            }
        }
    }
}
