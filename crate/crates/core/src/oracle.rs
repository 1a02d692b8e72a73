//! Truncated Poisson-pmf summation oracles.
//!
//! These compute expectations of statistics of Poissonized counts by direct
//! pmf summation, independently of the estimator implementations they are
//! used to check. They live in the library only so that unit, integration
//! and acceptance suites can share them; nothing on the estimation path
//! calls into this module.

/// Poisson pmf values `P(X = 0..=cap)` where `cap` leaves tail mass below
/// 1e-15.
///
/// The table starts from `e^-lambda`, so rates large enough to underflow it
/// are rejected rather than silently returning zeros.
pub fn poisson_pmf_table(lambda: f64) -> Vec<f64> {
    assert!(
        (0.0..=700.0).contains(&lambda),
        "pmf oracle supports rates up to 700, got {lambda}"
    );
    if lambda == 0.0 {
        return vec![1.0];
    }
    let cap = (lambda + 60.0 * (lambda.sqrt() + 1.0)).ceil() as usize;
    let mut table = Vec::with_capacity(cap + 1);
    let mut pmf = (-lambda).exp();
    for k in 0..=cap {
        table.push(pmf);
        pmf *= lambda / (k + 1) as f64;
    }
    table
}

/// `E[f(X / n)]` with `X ~ Poi(n p)`, by truncated summation.
pub fn expect_poissonized(n: f64, p: f64, mut f: impl FnMut(f64) -> f64) -> f64 {
    poisson_pmf_table(n * p)
        .iter()
        .enumerate()
        .map(|(k, &w)| w * f(k as f64 / n))
        .sum()
}

/// `E[f(X / n, Y / n)]` with independent `X ~ Poi(n p)`, `Y ~ Poi(n q)`.
pub fn expect_poissonized_pair(
    n: f64,
    p: f64,
    q: f64,
    mut f: impl FnMut(f64, f64) -> f64,
) -> f64 {
    let px = poisson_pmf_table(n * p);
    let py = poisson_pmf_table(n * q);
    let mut total = 0.0;
    for (i, &wx) in px.iter().enumerate() {
        let x = i as f64 / n;
        let mut inner = 0.0;
        for (j, &wy) in py.iter().enumerate() {
            inner += wy * f(x, j as f64 / n);
        }
        total += wx * inner;
    }
    total
}
