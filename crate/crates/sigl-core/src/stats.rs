//! Small statistical helpers used by the experiment harness and the
//! evaluation criteria: medians, Spearman rank correlation, optimal 1-D
//! two-means clustering, least-squares log-log slopes, and trend
//! inversion counts.

/// Median of a non-empty slice (mean of the two central order statistics
/// for even lengths).
pub fn median(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Arithmetic mean of a non-empty slice.
pub fn mean(values: &[f64]) -> f64 {
    assert!(!values.is_empty(), "mean of an empty slice");
    values.iter().sum::<f64>() / values.len() as f64
}

/// Sample standard deviation (n − 1 denominator); zero for fewer than two
/// points.
pub fn std_dev(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let m = mean(values);
    let ss: f64 = values.iter().map(|v| (v - m) * (v - m)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// 1-based ranks with ties assigned their average rank.
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let avg = (start + 1 + end) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    if vx == 0.0 || vy == 0.0 {
        return 0.0;
    }
    cov / (vx * vy).sqrt()
}

/// Spearman rank correlation (Pearson correlation of average ranks).
/// Returns 0 when either input is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "correlation needs paired samples");
    assert!(x.len() >= 2, "correlation needs at least two pairs");
    pearson(&average_ranks(x), &average_ranks(y))
}

/// Optimal two-means clustering of scalars: because an optimal 2-means
/// solution in one dimension is always a threshold split of the sorted
/// values, scanning all n − 1 splits and picking the one with the lowest
/// within-cluster sum of squares is exact. Label 0 is the lower-mean
/// cluster.
pub fn two_means_labels(values: &[f64]) -> Vec<u8> {
    let n = values.len();
    assert!(n >= 2, "clustering needs at least two points");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).expect("finite values"));
    // Prefix sums of the sorted values and their squares; the SSE of a
    // contiguous run is Σx² − (Σx)²/m.
    let mut ps = vec![0.0; n + 1];
    let mut ps2 = vec![0.0; n + 1];
    for (k, &i) in idx.iter().enumerate() {
        ps[k + 1] = ps[k] + values[i];
        ps2[k + 1] = ps2[k] + values[i] * values[i];
    }
    let sse = |a: usize, b: usize| -> f64 {
        let m = (b - a) as f64;
        let s = ps[b] - ps[a];
        (ps2[b] - ps2[a]) - s * s / m
    };
    let mut best_split = 1;
    let mut best = f64::INFINITY;
    for s in 1..n {
        let total = sse(0, s) + sse(s, n);
        if total < best {
            best = total;
            best_split = s;
        }
    }
    let mut labels = vec![0u8; n];
    for &i in &idx[best_split..] {
        labels[i] = 1;
    }
    labels
}

/// Fraction of matching labels maximized over the two-label swap.
pub fn cluster_accuracy(predicted: &[u8], truth: &[u8]) -> f64 {
    assert_eq!(predicted.len(), truth.len(), "label vectors must align");
    assert!(!predicted.is_empty(), "accuracy of empty labelings");
    let hits = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count() as f64;
    let frac = hits / predicted.len() as f64;
    frac.max(1.0 - frac)
}

/// Least-squares slope of ln y against ln x; all inputs must be positive.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> f64 {
    assert_eq!(x.len(), y.len(), "regression needs paired samples");
    assert!(x.len() >= 2, "regression needs at least two points");
    assert!(
        x.iter().chain(y).all(|&v| v > 0.0),
        "log-log regression needs positive values"
    );
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = mean(&lx);
    let my = mean(&ly);
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}

/// Number of adjacent strictly increasing pairs — the "inversions" of an
/// expected non-increasing trend.
pub fn adjacent_inversions(values: &[f64]) -> usize {
    values.windows(2).filter(|w| w[1] > w[0]).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from;
    use rand::Rng;

    #[test]
    fn median_handles_odd_even_and_singleton() {
        assert_eq!(median(&[3.0]), 3.0);
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 3.0, 2.0]), 2.5);
    }

    #[test]
    fn std_dev_matches_hand_computation() {
        let xs = [2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0];
        // Deviations from the mean 5 have squared sum 32; sample variance
        // is 32/7.
        assert!((std_dev(&xs) - (32.0f64 / 7.0).sqrt()).abs() < 1e-12);
        assert_eq!(std_dev(&[1.0]), 0.0);
    }

    #[test]
    fn spearman_matches_hand_values() {
        assert!((spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]) - 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[5.0, 1.0, 0.5]) + 1.0).abs() < 1e-12);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 1.0, 2.0]) + 0.5).abs() < 1e-12);
        // Tied input: ranks of x are (1.5, 1.5, 3); Pearson against
        // (1, 2, 3) is 1.5/√3.
        let got = spearman(&[1.0, 1.0, 2.0], &[1.0, 2.0, 3.0]);
        assert!((got - 1.5 / 3.0f64.sqrt()).abs() < 1e-12);
        assert_eq!(spearman(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), 0.0);
    }

    #[test]
    fn spearman_is_monotone_invariant() {
        let mut rng = rng_from(15);
        let x: Vec<f64> = (0..40).map(|_| rng.gen::<f64>()).collect();
        let y: Vec<f64> = x.iter().map(|v| (5.0 * v).exp()).collect();
        assert!((spearman(&x, &y) - 1.0).abs() < 1e-12);
    }

    /// Brute-force 2-means oracle: try every binary labeling and return
    /// the minimal within-cluster sum of squares.
    fn best_sse_bruteforce(values: &[f64]) -> f64 {
        let n = values.len();
        let mut best = f64::INFINITY;
        for mask in 1..(1u32 << n) - 1 {
            let (mut s0, mut s1, mut q0, mut q1, mut n0, mut n1) = (0.0, 0.0, 0.0, 0.0, 0, 0);
            for (i, &v) in values.iter().enumerate() {
                if mask >> i & 1 == 0 {
                    s0 += v;
                    q0 += v * v;
                    n0 += 1;
                } else {
                    s1 += v;
                    q1 += v * v;
                    n1 += 1;
                }
            }
            let sse = (q0 - s0 * s0 / n0 as f64) + (q1 - s1 * s1 / n1 as f64);
            best = best.min(sse);
        }
        best
    }

    fn labeling_sse(values: &[f64], labels: &[u8]) -> f64 {
        let mut acc = 0.0;
        for lab in [0u8, 1u8] {
            let members: Vec<f64> = values
                .iter()
                .zip(labels)
                .filter(|(_, &l)| l == lab)
                .map(|(&v, _)| v)
                .collect();
            if members.is_empty() {
                continue;
            }
            let m = mean(&members);
            acc += members.iter().map(|v| (v - m) * (v - m)).sum::<f64>();
        }
        acc
    }

    #[test]
    fn two_means_split_is_globally_optimal() {
        let mut rng = rng_from(7);
        for _ in 0..20 {
            let values: Vec<f64> = (0..10).map(|_| rng.gen::<f64>()).collect();
            let labels = two_means_labels(&values);
            let got = labeling_sse(&values, &labels);
            let want = best_sse_bruteforce(&values);
            assert!((got - want).abs() < 1e-10, "{got} vs {want}");
        }
    }

    #[test]
    fn two_means_separates_well_separated_clusters() {
        let values = [0.1, 0.12, 0.09, 0.11, 0.9, 0.88, 0.91];
        let labels = two_means_labels(&values);
        assert_eq!(labels, vec![0, 0, 0, 0, 1, 1, 1]);
    }

    #[test]
    fn cluster_accuracy_is_swap_invariant() {
        let truth = [0u8, 0, 1, 1];
        assert_eq!(cluster_accuracy(&[0, 0, 1, 1], &truth), 1.0);
        assert_eq!(cluster_accuracy(&[1, 1, 0, 0], &truth), 1.0);
        assert_eq!(cluster_accuracy(&[0, 1, 1, 1], &truth), 0.75);
    }

    #[test]
    fn log_log_slope_recovers_power_laws() {
        let x = [100.0f64, 300.0, 825.0, 2000.0];
        let y: Vec<f64> = x.iter().map(|v| 3.0 * v.powf(2.3)).collect();
        assert!((log_log_slope(&x, &y) - 2.3).abs() < 1e-12);
        let flat: Vec<f64> = x.iter().map(|_| 5.0).collect();
        assert!(log_log_slope(&x, &flat).abs() < 1e-12);
    }

    #[test]
    fn inversion_count_flags_increases_only() {
        assert_eq!(adjacent_inversions(&[3.0, 2.0, 1.0]), 0);
        assert_eq!(adjacent_inversions(&[3.0, 2.0, 2.0]), 0);
        assert_eq!(adjacent_inversions(&[2.0, 3.0, 1.0]), 1);
        assert_eq!(adjacent_inversions(&[1.0, 2.0, 3.0]), 2);
    }
}
