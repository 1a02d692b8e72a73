//! Finite discrete distributions and exact evaluation of the approximate-DP
//! divergence `d_eps(P||Q) = sum_i [p_i - e^eps q_i]^+`.
//!
//! A mechanism is `(eps, delta)`-DP on a pair of neighboring databases if and
//! only if the divergence is at most `delta` in both ordered directions, so
//! everything downstream (estimators, audits, certificates) reduces to this
//! quantity.

use std::collections::BTreeSet;

use crate::{Error, Result};

/// Default normalization slack for exact distributions.
pub const EXACT_TOLERANCE: f64 = 1e-9;

/// A probability vector over the alphabet `{0, .., S-1}`.
///
/// `tolerance` is the allowed deviation of the total mass from 1; it is zero
/// (up to [`EXACT_TOLERANCE`]) for exact distributions and can be relaxed to
/// represent approximately normalized vectors in tests.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
    tolerance: f64,
}

impl Distribution {
    /// Exact distribution; the entries must be non-negative and sum to 1
    /// within [`EXACT_TOLERANCE`].
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(probs, EXACT_TOLERANCE)
    }

    /// Distribution with a caller-chosen normalization slack.
    pub fn with_tolerance(probs: Vec<f64>, tolerance: f64) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::Domain("alphabet must have S >= 1 symbols".into()));
        }
        if tolerance < 0.0 {
            return Err(Error::Domain("tolerance must be non-negative".into()));
        }
        if let Some(&bad) = probs.iter().find(|p| !(**p >= 0.0) || !p.is_finite()) {
            return Err(Error::Domain(format!(
                "probabilities must be finite and non-negative, got {bad}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > tolerance {
            return Err(Error::Domain(format!(
                "probabilities sum to {total}, outside 1 +/- {tolerance}"
            )));
        }
        Ok(Self { probs, tolerance })
    }

    /// Uniform distribution over `s` symbols.
    pub fn uniform(s: usize) -> Self {
        assert!(s >= 1, "alphabet must have S >= 1 symbols");
        Self {
            probs: vec![1.0 / s as f64; s],
            tolerance: EXACT_TOLERANCE,
        }
    }

    /// Zipf distribution with weights proportional to `1 / i^alpha` for
    /// `i = 1..=s`. Negative `alpha` gives increasing weights.
    pub fn zipf(s: usize, alpha: f64) -> Self {
        assert!(s >= 1, "alphabet must have S >= 1 symbols");
        let weights: Vec<f64> = (1..=s).map(|i| (i as f64).powf(-alpha)).collect();
        let total: f64 = weights.iter().sum();
        Self {
            probs: weights.into_iter().map(|w| w / total).collect(),
            tolerance: EXACT_TOLERANCE,
        }
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn get(&self, symbol: usize) -> f64 {
        self.probs.get(symbol).copied().unwrap_or(0.0)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.probs
    }

    pub fn tolerance(&self) -> f64 {
        self.tolerance
    }
}

/// A target privacy point `(epsilon, delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrivacyPoint {
    pub epsilon: f64,
    pub delta: f64,
}

impl PrivacyPoint {
    pub fn new(epsilon: f64, delta: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::Domain(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if !(0.0..=1.0).contains(&delta) {
            return Err(Error::Domain(format!("delta must be in [0, 1], got {delta}")));
        }
        Ok(Self { epsilon, delta })
    }
}

fn check_pair(p: &[f64], q: &[f64], epsilon: f64) -> Result<()> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!("epsilon must be >= 0, got {epsilon}")));
    }
    Ok(())
}

/// Exact approximate-DP divergence `sum_i [p_i - e^eps q_i]^+`.
///
/// With `eps = 0` this is the total variation distance. It is non-increasing
/// in `eps` and lands in `[0, 1]` for normalized `p`.
pub fn d_eps(p: &Distribution, q: &Distribution, epsilon: f64) -> Result<f64> {
    d_eps_slices(p.as_slice(), q.as_slice(), epsilon)
}

/// [`d_eps`] on raw vectors; also used on empirical (unnormalized) ones.
pub fn d_eps_slices(p: &[f64], q: &[f64], epsilon: f64) -> Result<f64> {
    check_pair(p, q, epsilon)?;
    let scale = epsilon.exp();
    Ok(p.iter()
        .zip(q)
        .map(|(&pi, &qi)| (pi - scale * qi).max(0.0))
        .sum())
}

/// Whether `(P, Q)` passes the `(eps, delta)` threshold in *both* ordered
/// directions, as required by the DP definition quantifying over both orders
/// of the neighboring pair.
pub fn is_eps_delta_dp(p: &Distribution, q: &Distribution, epsilon: f64, delta: f64) -> Result<bool> {
    let point = PrivacyPoint::new(epsilon, delta)?;
    let forward = d_eps(p, q, point.epsilon)?;
    let backward = d_eps(q, p, point.epsilon)?;
    Ok(forward <= point.delta && backward <= point.delta)
}

/// The set `T = { i : p_i > e^eps q_i }`, which maximizes
/// `P(T') - e^eps Q(T')` over all `T'` and therefore witnesses the divergence.
/// Empty when no symbol has positive margin.
pub fn certificate_set(p_hat: &[f64], q_hat: &[f64], epsilon: f64) -> Result<BTreeSet<usize>> {
    check_pair(p_hat, q_hat, epsilon)?;
    let scale = epsilon.exp();
    Ok(p_hat
        .iter()
        .zip(q_hat)
        .enumerate()
        .filter(|(_, (&pi, &qi))| pi > scale * qi)
        .map(|(i, _)| i)
        .collect())
}

/// Empirical margin `P(T) - e^eps Q(T)` of a candidate certificate set.
pub fn set_margin(p_hat: &[f64], q_hat: &[f64], epsilon: f64, set: &BTreeSet<usize>) -> f64 {
    let scale = epsilon.exp();
    set.iter()
        .map(|&i| p_hat.get(i).copied().unwrap_or(0.0) - scale * q_hat.get(i).copied().unwrap_or(0.0))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dist(probs: &[f64]) -> Distribution {
        Distribution::new(probs.to_vec()).unwrap()
    }

    #[test]
    fn identical_distributions_have_zero_divergence() {
        let p = dist(&[0.5, 0.5]);
        assert_eq!(d_eps(&p, &p, 0.0).unwrap(), 0.0);
        assert_eq!(d_eps(&p, &p, 3.0).unwrap(), 0.0);
    }

    #[test]
    fn disjoint_supports_give_one_for_any_epsilon() {
        let p = dist(&[1.0, 0.0]);
        let q = dist(&[0.0, 1.0]);
        for eps in [0.0, 0.5, 2.0, 10.0] {
            assert_eq!(d_eps(&p, &q, eps).unwrap(), 1.0);
        }
    }

    #[test]
    fn direct_evaluation_single_positive_term() {
        let p = dist(&[0.6, 0.4]);
        let q = dist(&[0.3, 0.7]);
        assert!((d_eps(&p, &q, 0.0).unwrap() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let p = dist(&[1.0]);
        let q = dist(&[0.5, 0.5]);
        assert!(matches!(
            d_eps(&p, &q, 0.0),
            Err(Error::DimensionMismatch { left: 1, right: 2 })
        ));
    }

    #[test]
    fn negative_epsilon_is_rejected() {
        let p = dist(&[1.0]);
        assert!(matches!(d_eps(&p, &p, -0.1), Err(Error::Domain(_))));
    }

    #[test]
    fn dp_check_is_two_sided() {
        let u = Distribution::uniform(4);
        assert!(is_eps_delta_dp(&u, &u, 0.0, 0.0).unwrap());

        let p = dist(&[1.0, 0.0]);
        let q = dist(&[0.0, 1.0]);
        assert!(!is_eps_delta_dp(&p, &q, 5.0, 0.5).unwrap());

        // Both ordered divergences are exactly 0.3 here, so delta = 0.3 passes.
        let p = dist(&[0.6, 0.4]);
        let q = dist(&[0.3, 0.7]);
        assert!((d_eps(&p, &q, 0.0).unwrap() - 0.3).abs() < 1e-15);
        assert!((d_eps(&q, &p, 0.0).unwrap() - 0.3).abs() < 1e-15);
        assert!(is_eps_delta_dp(&p, &q, 0.0, 0.3).unwrap());
        assert!(!is_eps_delta_dp(&p, &q, 0.0, 0.29).unwrap());
    }

    #[test]
    fn certificate_is_positive_margin_set() {
        let t = certificate_set(&[0.9, 0.1], &[0.1, 0.9], 0.0).unwrap();
        assert_eq!(t, BTreeSet::from([0]));

        let t = certificate_set(&[0.5, 0.5], &[0.5, 0.5], 0.0).unwrap();
        assert!(t.is_empty());

        // Per-symbol comparison against e^0.4 * q_i.
        let p = [0.5, 0.3, 0.2];
        let q = [0.1, 0.3, 0.6];
        let scale = 0.4f64.exp();
        for i in 0..3 {
            let positive = p[i] > scale * q[i];
            assert_eq!(positive, i == 0, "symbol {i}");
        }
        let t = certificate_set(&p, &q, 0.4).unwrap();
        assert_eq!(t, BTreeSet::from([0]));
    }

    #[test]
    fn divergence_at_zero_matches_total_variation() {
        // Brute-force TV on a few random-ish small instances.
        let cases = [
            (vec![0.2, 0.3, 0.5], vec![0.5, 0.2, 0.3]),
            (vec![0.7, 0.1, 0.1, 0.1], vec![0.25, 0.25, 0.25, 0.25]),
            (vec![1.0, 0.0], vec![0.0, 1.0]),
        ];
        for (p, q) in cases {
            let tv: f64 = p
                .iter()
                .zip(&q)
                .map(|(&pi, &qi): (&f64, &f64)| (pi - qi).max(0.0))
                .sum();
            let p = dist(&p);
            let q = dist(&q);
            assert!((d_eps(&p, &q, 0.0).unwrap() - tv).abs() < 1e-15);
        }
    }

    #[test]
    fn divergence_is_nonincreasing_and_vanishes_in_epsilon() {
        let p = dist(&[0.5, 0.3, 0.2]);
        let q = dist(&[0.2, 0.3, 0.5]);
        let mut last = f64::INFINITY;
        for k in 0..60 {
            let eps = 0.25 * k as f64;
            let d = d_eps(&p, &q, eps).unwrap();
            assert!(d <= last + 1e-15);
            last = d;
        }
        // supp(P) is contained in supp(Q), so the limit is zero.
        assert_eq!(last, 0.0);
    }

    #[test]
    fn certificate_beats_every_subset_exhaustively() {
        let p = [0.3, 0.05, 0.25, 0.1, 0.2, 0.1];
        let q = [0.1, 0.3, 0.2, 0.15, 0.05, 0.2];
        for eps in [0.0, 0.2, 0.7] {
            let best = certificate_set(&p, &q, eps).unwrap();
            let best_margin = set_margin(&p, &q, eps, &best);
            for mask in 0u32..(1 << p.len()) {
                let subset: BTreeSet<usize> =
                    (0..p.len()).filter(|i| mask >> i & 1 == 1).collect();
                let margin = set_margin(&p, &q, eps, &subset);
                assert!(
                    margin <= best_margin + 1e-12,
                    "subset {subset:?} beats certificate at eps={eps}"
                );
            }
        }
    }

    #[test]
    fn relaxed_normalization_class_is_constructible() {
        // Approximately normalized vectors are allowed with explicit slack.
        let q = Distribution::with_tolerance(vec![0.5, 0.45], 0.1).unwrap();
        assert_eq!(q.tolerance(), 0.1);
        assert!(Distribution::new(vec![0.5, 0.45]).is_err());
    }

    #[test]
    fn zipf_weights_follow_power_law() {
        let z = Distribution::zipf(100, -0.6);
        // get() is zero-indexed; entries 6 and 12 hold the i = 7 and i = 13
        // weights.
        let ratio = z.get(6) / z.get(12);
        assert!((ratio - (7f64 / 13f64).powf(0.6)).abs() < 1e-12);
        assert!((z.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
