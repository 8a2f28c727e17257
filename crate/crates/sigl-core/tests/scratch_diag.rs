//! Temporary diagnostic: is there any ordering signal in the pair-loss
//! gradient at the latent coordinates?

use ndarray::Array2;
use sigl_core::diff::{Adam, Tape};
use sigl_core::graphon::{sample_graph, GraphonSpec};
use sigl_core::models::{minmax_normalize, GcnEncoder, SirenInr};
use sigl_core::rng::{derive_seed, rng_from};
use sigl_core::sorting::{node_features, step_loss_gradients_fused};
use sigl_core::stats::spearman;

use rand::Rng;

/// ∂(pair loss)/∂η̂ for a frozen INR at fixed latent coordinates.
fn eta_gradient(adj: &Array2<f64>, eta: &[f64], inr: &SirenInr) -> Vec<f64> {
    let n = adj.nrows();
    let mut t = Tape::new();
    let eta_node = t.param(Array2::from_shape_vec((n, 1), eta.to_vec()).unwrap());
    let sb = inr.bind(&mut t);
    let grid = t.pair_grid(eta_node);
    let pred = inr.tape_forward(&mut t, &sb, grid);
    let clamped = t.clamp01_st(pred);
    let flat: Vec<f64> = adj.iter().copied().collect();
    let target = t.leaf(Array2::from_shape_vec((n * n, 1), flat).unwrap());
    let resid = t.sub(clamped, target);
    let sq = t.square(resid);
    let loss = t.mean(sq);
    let grads = t.backward(loss);
    grads.expect(eta_node).column(0).to_vec()
}

#[test]
fn diag_eta_gradient_signal() {
    let spec = GraphonSpec::Synthetic(2);
    let mut size_rng = rng_from(derive_seed(41, "pretrain-sizes", 0));
    let mut dataset = Vec::new();
    for i in 0..10usize {
        let n = size_rng.gen_range(75..=300usize);
        dataset.push(sample_graph(&spec, n, derive_seed(41, "pretrain-graph", i as u64)).unwrap());
    }
    let seed = derive_seed(41, "pretrain-train", 0);
    let mut encoder = GcnEncoder::default_sorter(derive_seed(seed, "sorter-init", 0));
    let mut inr = SirenInr::default_graphon(2, derive_seed(seed, "aux-graphon-init", 0));
    let ctxs: Vec<(Array2<f64>, Array2<f64>, Vec<f64>)> = dataset
        .iter()
        .map(|g| {
            let adj = g.dense_adjacency();
            let feats = node_features(g, encoder.channels);
            let degs: Vec<f64> = (0..g.n).map(|v| adj.row(v).sum()).collect();
            (adj, feats, degs)
        })
        .collect();
    let mut adam = Adam::new(0.01);
    for epoch in 0..=100usize {
        if epoch % 20 == 0 {
            // Signal probe on the first three graphs.
            for (gi, (adj, feats, degs)) in ctxs.iter().take(3).enumerate() {
                let scores = encoder.score(adj, feats);
                let eta = minmax_normalize(&scores).to_vec();
                let g = eta_gradient(adj, &eta, &inr);
                // Drop the two extreme nodes: min-max backprop concentrates
                // mass there and hides the bulk signal.
                let lo = eta
                    .iter()
                    .enumerate()
                    .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                let hi = eta
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
                    .unwrap()
                    .0;
                let mut g_bulk = Vec::new();
                let mut deg_bulk = Vec::new();
                for v in 0..eta.len() {
                    if v != lo && v != hi {
                        g_bulk.push(g[v]);
                        deg_bulk.push(degs[v]);
                    }
                }
                let gnorm = (g.iter().map(|x| x * x).sum::<f64>() / g.len() as f64).sqrt();
                println!(
                    "epoch {epoch:3} graph {gi}: rho(dL/deta, deg) = {:+.3}  rms(dL/deta) = {gnorm:.2e}",
                    spearman(&g_bulk, &deg_bulk)
                );
            }
        }
        for (adj, feats, _) in &ctxs {
            let (_, grads) = step_loss_gradients_fused(adj, feats, &encoder, &inr);
            let mut params = encoder.params_mut();
            params.extend(inr.params_mut());
            let refs: Vec<&Array2<f64>> = grads.iter().collect();
            adam.step(&mut params, &refs);
        }
    }
}
