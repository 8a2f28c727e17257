//! Central finite-difference oracle for gradient checks.
//!
//! Used by unit and acceptance tests to validate every reverse-mode
//! gradient independently: perturb one coordinate at a time, re-evaluate
//! the scalar loss, and compare (f(x+δ) − f(x−δ)) / 2δ against the
//! analytic gradient. Lives in the library (not a test helper) so the
//! FFI and integration suites share one implementation.

use ndarray::Array2;

/// Central finite differences of `f` at `x`, one array coordinate at a time.
pub fn numeric_gradient<F>(mut f: F, x: &Array2<f64>, step: f64) -> Array2<f64>
where
    F: FnMut(&Array2<f64>) -> f64,
{
    let mut g = Array2::zeros(x.raw_dim());
    let mut probe = x.clone();
    for idx in ndarray::indices(x.raw_dim()) {
        let orig = probe[idx];
        probe[idx] = orig + step;
        let fp = f(&probe);
        probe[idx] = orig - step;
        let fm = f(&probe);
        probe[idx] = orig;
        g[idx] = (fp - fm) / (2.0 * step);
    }
    g
}

/// Largest relative mismatch between analytic and numeric gradients, with a
/// small absolute floor so near-zero entries do not explode the ratio.
pub fn max_relative_error(analytic: &Array2<f64>, numeric: &Array2<f64>, abs_floor: f64) -> f64 {
    assert_eq!(analytic.raw_dim(), numeric.raw_dim());
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(&a, &n)| (a - n).abs() / (a.abs().max(n.abs()).max(abs_floor)))
        .fold(0.0, f64::max)
}
