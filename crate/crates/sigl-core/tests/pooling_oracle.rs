//! Bit-exactness of average pooling against an independent nested-loop
//! oracle: 100 random binary matrices with sizes up to 50, each checked at
//! every legal window width.

use ndarray::Array2;
use rand::Rng;
use sigl_core::histogram::pool_histogram;
use sigl_core::rng::{derive_seed, rng_from};

/// Straightforward reimplementation from the definition: block (bi, bj)
/// averages the h×h window anchored at (bi·h, bj·h), accumulating row by
/// row and dividing once.
fn oracle(adj: &Array2<f64>, h: usize) -> Array2<f64> {
    let n = adj.nrows();
    let k = n / h;
    let mut out = Array2::zeros((k, k));
    for bi in 0..k {
        for bj in 0..k {
            let mut acc = 0.0;
            for s1 in 0..h {
                for s2 in 0..h {
                    acc += adj[[bi * h + s1, bj * h + s2]];
                }
            }
            out[[bi, bj]] = acc / (h * h) as f64;
        }
    }
    out
}

#[test]
fn pooling_matches_oracle_bit_exactly() {
    for case in 0..100u64 {
        let seed = derive_seed(3, "pooling-oracle", case);
        let mut rng = rng_from(seed);
        let n = rng.gen_range(1..=50usize);
        let mut adj = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let bit = if rng.gen::<f64>() < 0.5 { 1.0 } else { 0.0 };
                adj[[i, j]] = bit;
                adj[[j, i]] = bit;
            }
        }
        for h in 1..=n {
            let pooled = pool_histogram(&adj, h).unwrap();
            let expected = oracle(&adj, h);
            assert_eq!(pooled.values.raw_dim(), expected.raw_dim());
            for (a, b) in pooled.values.iter().zip(expected.iter()) {
                assert_eq!(
                    a.to_bits(),
                    b.to_bits(),
                    "case {case} n {n} h {h}: {a} vs {b}"
                );
            }
        }
    }
}
