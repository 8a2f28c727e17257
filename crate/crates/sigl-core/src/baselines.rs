//! Classical single-graph estimators used for comparison: SAS (degree
//! sort + histogram pooling + total-variation smoothing) and USVT
//! (singular value thresholding), plus resolution alignment helpers.
//!
//! SAS sorts nodes by non-increasing empirical degree, pools the sorted
//! adjacency into a block histogram, and denoises it by minimizing
//!   ½‖U − Ĥ‖² + λ · TV(U),  TV(U) = Σ |U(i+1,j) − U(i,j)| + |U(i,j+1) − U(i,j)|
//! (anisotropic total variation, λ = 0.1, 200 primal–dual iterations).
//! USVT eigendecomposes the symmetric adjacency, zeroes every singular
//! value ≤ 0.2√n, reconstructs, and clips to [0,1]. Both produce small
//! matrices that are aligned to the evaluation resolution by
//! nearest-neighbor upsampling (default) or literal zero-padding.

use crate::error::{Error, Result};
use crate::graphon::{GraphonGrid, SampledGraph};
use crate::histogram::pool_histogram;
use ndarray::{linalg::general_mat_mul, Array2};
use serde::{Deserialize, Serialize};

/// Total-variation regularization weight for SAS smoothing.
pub const TV_LAMBDA: f64 = 0.1;
/// Number of primal–dual iterations for SAS smoothing.
pub const TV_ITERS: usize = 200;

/// Which baseline produced an estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BaselineMethod {
    Sas,
    Usvt,
}

/// A baseline edge-probability estimate: a k×k (SAS) or n×n (USVT) matrix
/// with entries clipped to [0,1].
#[derive(Debug, Clone)]
pub struct BaselineEstimate {
    pub values: Array2<f64>,
    pub method: BaselineMethod,
    /// Node count of the source graph.
    pub source_size: usize,
}

/// Anisotropic total variation: the sum of absolute forward differences
/// along both axes.
pub fn anisotropic_tv(m: &Array2<f64>) -> f64 {
    let (r, c) = m.dim();
    let mut tv = 0.0;
    for i in 0..r {
        for j in 0..c {
            if i + 1 < r {
                tv += (m[[i + 1, j]] - m[[i, j]]).abs();
            }
            if j + 1 < c {
                tv += (m[[i, j + 1]] - m[[i, j]]).abs();
            }
        }
    }
    tv
}

/// Anisotropic TV denoising of `m`: minimizes ½‖u − m‖² + λ·TV(u) with a
/// primal–dual (Chambolle–Pock) scheme. The dual variable is the pair of
/// forward-difference fields, projected componentwise onto [−λ, λ]; the
/// primal update is the closed-form proximal step of the quadratic term.
pub fn tv_denoise(m: &Array2<f64>, lambda: f64, iters: usize) -> Array2<f64> {
    let (r, c) = m.dim();
    if r == 0 || c == 0 || lambda <= 0.0 {
        return m.clone();
    }
    // ‖∇‖² ≤ 8 for the forward-difference operator, so σ·τ·8 ≤ 1 holds.
    let sigma = 1.0 / 8f64.sqrt();
    let tau = sigma;
    let mut u = m.clone();
    let mut ubar = m.clone();
    let mut px = Array2::<f64>::zeros((r, c));
    let mut py = Array2::<f64>::zeros((r, c));
    for _ in 0..iters {
        // Dual ascent on the gradient fields, then projection.
        for i in 0..r {
            for j in 0..c {
                let gx = if i + 1 < r { ubar[[i + 1, j]] - ubar[[i, j]] } else { 0.0 };
                let gy = if j + 1 < c { ubar[[i, j + 1]] - ubar[[i, j]] } else { 0.0 };
                px[[i, j]] = (px[[i, j]] + sigma * gx).clamp(-lambda, lambda);
                py[[i, j]] = (py[[i, j]] + sigma * gy).clamp(-lambda, lambda);
            }
        }
        // Primal descent: u ← prox of ½‖·−m‖² at u + τ·div p.
        for i in 0..r {
            for j in 0..c {
                let mut div = 0.0;
                if i + 1 < r {
                    div += px[[i, j]];
                }
                if i > 0 {
                    div -= px[[i - 1, j]];
                }
                if j + 1 < c {
                    div += py[[i, j]];
                }
                if j > 0 {
                    div -= py[[i, j - 1]];
                }
                let prev = u[[i, j]];
                let next = (prev + tau * div + tau * m[[i, j]]) / (1.0 + tau);
                u[[i, j]] = next;
                ubar[[i, j]] = 2.0 * next - prev;
            }
        }
    }
    u
}

/// SAS estimate: degree sort (non-increasing, ties by ascending index),
/// histogram pooling with window `h`, TV smoothing, clip to [0,1].
pub fn sas_estimate(graph: &SampledGraph, h: usize) -> Result<BaselineEstimate> {
    let n = graph.node_count();
    if h == 0 || h > n {
        return Err(Error::invalid("window width must satisfy 1 ≤ h ≤ n"));
    }
    let degrees = graph.degrees();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| degrees[b].cmp(&degrees[a]).then(a.cmp(&b)));
    let adj = graph.dense_adjacency();
    let mut sorted = Array2::zeros((n, n));
    for (r, &i) in order.iter().enumerate() {
        for (c, &j) in order.iter().enumerate() {
            sorted[[r, c]] = adj[[i, j]];
        }
    }
    let hist = pool_histogram(&sorted, h)?;
    let tv_in = anisotropic_tv(&hist.values);
    let smoothed = tv_denoise(&hist.values, TV_LAMBDA, TV_ITERS);
    debug_assert!(anisotropic_tv(&smoothed) <= tv_in + 1e-9);
    Ok(BaselineEstimate {
        values: smoothed.mapv(|v| v.clamp(0.0, 1.0)),
        method: BaselineMethod::Sas,
        source_size: n,
    })
}

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Returns (eigenvalues, V) with A·V(:,i) = λ_i·V(:,i); unsorted.
pub fn symmetric_eigh(a: &Array2<f64>) -> (Vec<f64>, Array2<f64>) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "eigendecomposition needs a square matrix");
    let mut m: Vec<f64> = a.iter().copied().collect();
    let mut v = vec![0.0f64; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let fro: f64 = m.iter().map(|x| x * x).sum::<f64>().sqrt();
    let tol = 1e-11 * fro.max(1e-300);
    for _sweep in 0..40 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q] * m[p * n + q];
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                if apq.abs() <= tol / (n as f64) {
                    continue;
                }
                let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (1.0 + theta * theta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // Two-sided rotation G(p,q)ᵀ·M·G(p,q): columns then rows.
                for k in 0..n {
                    let akp = m[k * n + p];
                    let akq = m[k * n + q];
                    m[k * n + p] = c * akp - s * akq;
                    m[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m[p * n + k];
                    let aqk = m[q * n + k];
                    m[p * n + k] = c * apk - s * aqk;
                    m[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigenvalues: Vec<f64> = (0..n).map(|i| m[i * n + i]).collect();
    let vectors = Array2::from_shape_vec((n, n), v).expect("square eigenvector matrix");
    (eigenvalues, vectors)
}

/// USVT estimate: keep the eigencomponents of the adjacency whose singular
/// value (|λ|) exceeds 0.2√n, reconstruct, and clip to [0,1].
pub fn usvt_estimate(graph: &SampledGraph) -> Result<BaselineEstimate> {
    let n = graph.node_count();
    if n < 2 {
        return Err(Error::invalid("USVT needs at least two nodes"));
    }
    let adj = graph.dense_adjacency();
    let (eigenvalues, vectors) = symmetric_eigh(&adj);
    let threshold = 0.2 * (n as f64).sqrt();
    let kept: Vec<usize> = (0..n)
        .filter(|&i| eigenvalues[i].abs() > threshold)
        .collect();
    let mut recon = Array2::zeros((n, n));
    if !kept.is_empty() {
        let mut vk = Array2::zeros((n, kept.len()));
        let mut vl = Array2::zeros((kept.len(), n));
        for (c, &i) in kept.iter().enumerate() {
            for r in 0..n {
                vk[[r, c]] = vectors[[r, i]];
                vl[[c, r]] = eigenvalues[i] * vectors[[r, i]];
            }
        }
        general_mat_mul(1.0, &vk, &vl, 0.0, &mut recon);
    }
    Ok(BaselineEstimate {
        values: recon.mapv(|x| x.clamp(0.0, 1.0)),
        method: BaselineMethod::Usvt,
        source_size: n,
    })
}

/// Aligns an estimate to resolution R by nearest-neighbor upsampling:
/// out(i,j) = values(⌊i·k/R⌋, ⌊j·k/R⌋).
pub fn pad_to_resolution(estimate: &BaselineEstimate, r: usize) -> Result<GraphonGrid> {
    let k = estimate.values.nrows();
    if r < k {
        return Err(Error::invalid(
            "target resolution is below the estimate's own resolution",
        ));
    }
    let mut values = Array2::zeros((r, r));
    for i in 0..r {
        let si = i * k / r;
        for j in 0..r {
            values[[i, j]] = estimate.values[[si, j * k / r]];
        }
    }
    Ok(GraphonGrid {
        values,
        resolution: r,
    })
}

/// Literal zero-padding to resolution R: the estimate occupies the top-left
/// k×k block and everything else is zero.
pub fn zero_pad_to_resolution(estimate: &BaselineEstimate, r: usize) -> Result<GraphonGrid> {
    let k = estimate.values.nrows();
    if r < k {
        return Err(Error::invalid(
            "target resolution is below the estimate's own resolution",
        ));
    }
    let mut values = Array2::zeros((r, r));
    values
        .slice_mut(ndarray::s![..k, ..k])
        .assign(&estimate.values);
    Ok(GraphonGrid {
        values,
        resolution: r,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphon::{sample_graph, GraphonSpec};
    use crate::rng::rng_from;
    use rand::Rng;

    fn random_matrix(r: usize, c: usize, seed: u64) -> Array2<f64> {
        let mut rng = rng_from(seed);
        Array2::from_shape_fn((r, c), |_| rng.gen::<f64>())
    }

    /// Independent TV-denoising oracle: Chambolle's semi-implicit dual
    /// fixed point for the anisotropic problem. u = m + div p with the
    /// dual field p clamped to [−λ, λ] after each gradient step.
    fn tv_denoise_dual_oracle(m: &Array2<f64>, lambda: f64, iters: usize) -> Array2<f64> {
        let (r, c) = m.dim();
        let step = 0.12;
        let mut px = Array2::<f64>::zeros((r, c));
        let mut py = Array2::<f64>::zeros((r, c));
        let mut u = m.clone();
        for _ in 0..iters {
            for i in 0..r {
                for j in 0..c {
                    let gx = if i + 1 < r { u[[i + 1, j]] - u[[i, j]] } else { 0.0 };
                    let gy = if j + 1 < c { u[[i, j + 1]] - u[[i, j]] } else { 0.0 };
                    px[[i, j]] = (px[[i, j]] + step * gx).clamp(-lambda, lambda);
                    py[[i, j]] = (py[[i, j]] + step * gy).clamp(-lambda, lambda);
                }
            }
            for i in 0..r {
                for j in 0..c {
                    let mut div = 0.0;
                    if i + 1 < r {
                        div += px[[i, j]];
                    }
                    if i > 0 {
                        div -= px[[i - 1, j]];
                    }
                    if j + 1 < c {
                        div += py[[i, j]];
                    }
                    if j > 0 {
                        div -= py[[i, j - 1]];
                    }
                    u[[i, j]] = m[[i, j]] + div;
                }
            }
        }
        u
    }

    #[test]
    fn tv_denoiser_matches_independent_dual_oracle() {
        let m = random_matrix(6, 6, 11);
        let ours = tv_denoise(&m, 0.1, 2000);
        let oracle = tv_denoise_dual_oracle(&m, 0.1, 4000);
        for (a, b) in ours.iter().zip(oracle.iter()) {
            assert!((a - b).abs() < 1e-4, "{a} vs {b}");
        }
    }

    #[test]
    fn tv_denoising_never_increases_total_variation() {
        for seed in 0..30 {
            let m = random_matrix(8, 8, 100 + seed);
            let out = tv_denoise(&m, TV_LAMBDA, TV_ITERS);
            assert!(anisotropic_tv(&out) <= anisotropic_tv(&m) + 1e-12);
        }
    }

    #[test]
    fn tv_denoising_fixes_constants_and_smooths_noise() {
        let flat = Array2::from_elem((5, 5), 0.3);
        let out = tv_denoise(&flat, TV_LAMBDA, 50);
        for &v in out.iter() {
            assert!((v - 0.3).abs() < 1e-12);
        }

        let mut clean = Array2::zeros((10, 10));
        clean.slice_mut(ndarray::s![..5, ..5]).fill(0.8);
        clean.slice_mut(ndarray::s![5.., 5..]).fill(0.8);
        let mut rng = rng_from(9);
        let noisy = &clean + &Array2::from_shape_fn((10, 10), |_| rng.gen_range(-0.2..0.2));
        let denoised = tv_denoise(&noisy, TV_LAMBDA, TV_ITERS);
        let err = |m: &Array2<f64>| {
            (m - &clean).iter().map(|d| d * d).sum::<f64>()
        };
        assert!(err(&denoised) < err(&noisy));
    }

    fn star_graph(n: usize) -> SampledGraph {
        SampledGraph {
            n,
            edges: (1..n as u32).map(|j| (0, j)).collect(),
            latents: None,
            seed: 0,
        }
    }

    #[test]
    fn sas_places_the_hub_first_and_ignores_relabeling() {
        let star = star_graph(6);
        let est = sas_estimate(&star, 2).unwrap();
        assert_eq!(est.values.nrows(), 3);
        assert_eq!(est.method, BaselineMethod::Sas);
        assert_eq!(est.source_size, 6);

        // Hand-check the pre-smoothing histogram: hub first, then leaves.
        let degrees = star.degrees();
        assert_eq!(degrees[0], 5);
        let adj = star.dense_adjacency();
        let hist = pool_histogram(&adj, 2).unwrap();
        assert_eq!(hist.values[[0, 0]], 0.5);
        assert_eq!(hist.values[[0, 1]], 0.5);
        assert_eq!(hist.values[[1, 1]], 0.0);

        // Any relabeling sorts back to the same matrix: leaves are
        // interchangeable, the hub has the unique maximum degree.
        let relabel = [3usize, 0, 5, 1, 4, 2];
        let moved = SampledGraph {
            n: 6,
            edges: star
                .edges
                .iter()
                .map(|&(i, j)| {
                    let (a, b) = (relabel[i as usize] as u32, relabel[j as usize] as u32);
                    if a < b {
                        (a, b)
                    } else {
                        (b, a)
                    }
                })
                .collect(),
            latents: None,
            seed: 0,
        };
        let est2 = sas_estimate(&moved, 2).unwrap();
        assert_eq!(est.values, est2.values);
    }

    #[test]
    fn sas_of_empty_graph_is_zero() {
        let empty = SampledGraph {
            n: 8,
            edges: vec![],
            latents: None,
            seed: 0,
        };
        let est = sas_estimate(&empty, 2).unwrap();
        assert!(est.values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn eigensolver_recovers_known_and_random_spectra() {
        let a = ndarray::array![[2.0, 1.0], [1.0, 2.0]];
        let (mut vals, _) = symmetric_eigh(&a);
        vals.sort_by(|x, y| x.partial_cmp(y).unwrap());
        assert!((vals[0] - 1.0).abs() < 1e-10);
        assert!((vals[1] - 3.0).abs() < 1e-10);

        let m = {
            let r = random_matrix(12, 12, 3);
            (&r + &r.t()) / 2.0
        };
        let (vals, vecs) = symmetric_eigh(&m);
        // Defining property: A·v = λ·v for every pair, and V orthonormal.
        for i in 0..12 {
            let v = vecs.column(i);
            let av = m.dot(&v);
            for k in 0..12 {
                assert!((av[k] - vals[i] * v[k]).abs() < 1e-9);
            }
            for j in 0..12 {
                let dot = vecs.column(i).dot(&vecs.column(j));
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((dot - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn usvt_reconstructs_the_complete_graph() {
        let n = 100;
        let complete = SampledGraph {
            n,
            edges: (0..n as u32)
                .flat_map(|i| ((i + 1)..n as u32).map(move |j| (i, j)))
                .collect(),
            latents: None,
            seed: 0,
        };
        let est = usvt_estimate(&complete).unwrap();
        // Spectrum of J − I: eigenvalue n−1 = 99 survives the threshold
        // 0.2√100 = 2; the n−1 eigenvalues at −1 are zeroed. The kept
        // rank-1 part is exactly 0.99·J.
        for &v in est.values.iter() {
            assert!((v - 0.99).abs() < 1e-6, "entry {v}");
        }
    }

    #[test]
    fn usvt_of_empty_graph_is_zero_and_small_graphs_error() {
        let empty = SampledGraph {
            n: 10,
            edges: vec![],
            latents: None,
            seed: 0,
        };
        let est = usvt_estimate(&empty).unwrap();
        assert!(est.values.iter().all(|&v| v == 0.0));
        let tiny = SampledGraph {
            n: 1,
            edges: vec![],
            latents: None,
            seed: 0,
        };
        assert!(usvt_estimate(&tiny).is_err());
    }

    #[test]
    fn usvt_recovers_a_sparse_constant_graphon_at_n_1000() {
        // With p = 0.01 the noise spectrum's bulk edge 2√(np(1−p)) ≈ 6.29
        // sits below the 0.2√n = 6.32 threshold while the mean-degree
        // eigenvalue ≈ np = 10 survives, so thresholding isolates the
        // rank-1 density component.
        let p = 0.01;
        let graph = sample_graph(&GraphonSpec::Constant(p), 1000, 77).unwrap();
        let est = usvt_estimate(&graph).unwrap();
        let mut acc = 0.0;
        let mut count = 0usize;
        for i in 0..1000 {
            for j in 0..1000 {
                if i != j {
                    acc += (est.values[[i, j]] - p).abs();
                    count += 1;
                }
            }
        }
        assert!(acc / count as f64 <= 0.05);
        assert!(est.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn baseline_outputs_stay_in_unit_interval() {
        let graph = sample_graph(&GraphonSpec::Synthetic(4), 40, 5).unwrap();
        let sas = sas_estimate(&graph, 4).unwrap();
        let usvt = usvt_estimate(&graph).unwrap();
        for est in [&sas, &usvt] {
            assert!(est.values.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn resolution_alignment_replicates_blocks_or_zero_pads() {
        let est = BaselineEstimate {
            values: ndarray::array![[0.1, 0.2], [0.3, 0.4]],
            method: BaselineMethod::Usvt,
            source_size: 2,
        };
        let up = pad_to_resolution(&est, 4).unwrap();
        let want = ndarray::array![
            [0.1, 0.1, 0.2, 0.2],
            [0.1, 0.1, 0.2, 0.2],
            [0.3, 0.3, 0.4, 0.4],
            [0.3, 0.3, 0.4, 0.4]
        ];
        assert_eq!(up.values, want);

        let same = pad_to_resolution(&est, 2).unwrap();
        assert_eq!(same.values, est.values);
        let re = BaselineEstimate {
            values: up.values.clone(),
            method: BaselineMethod::Usvt,
            source_size: 2,
        };
        assert_eq!(pad_to_resolution(&re, 4).unwrap().values, up.values);
        assert!(pad_to_resolution(&est, 1).is_err());

        let zp = zero_pad_to_resolution(&est, 3).unwrap();
        assert_eq!(zp.values[[0, 1]], 0.2);
        assert_eq!(zp.values[[2, 2]], 0.0);
        assert_eq!(zp.values[[0, 2]], 0.0);
    }
}
