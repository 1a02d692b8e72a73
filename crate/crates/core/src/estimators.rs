//! Top-level estimators of `d_eps(P||Q)` from Poissonized histograms: the
//! plug-in estimator, the known-P polynomial estimator, and the two-sample
//! polynomial estimator.
//!
//! The polynomial estimators classify every symbol, using one sample split,
//! into a smooth regime (where the plug-in term is fine or the contribution
//! is provably negligible) or a non-smooth regime around `p = e^eps q`
//! (where the plug-in estimator is badly biased and an unbiased estimate of
//! a best polynomial approximation is used instead, fed by the other split).
//! Per-symbol contributions are summed in value order, which makes the
//! reduction deterministic and invariant under symbol relabeling, and the
//! total is clamped to `[0, 1]`.

use std::collections::BTreeSet;

use crate::divergence::Distribution;
use crate::mvue;
use crate::poly::PolyCache;
use crate::sampling::{EmpiricalHistogram, SampleSplit};
use crate::{Error, Result};

/// Whether estimation reuses the classification histogram (`NoSplit`, the
/// experimental default) or consumes an independent split (`Split`, the
/// configuration the error analysis assumes).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitMode {
    Split,
    NoSplit,
}

/// Tuning constants shared by the polynomial estimators.
///
/// `K = floor(c3 ln n)` is the approximation degree; `c1` sizes the
/// non-smooth window, `c2 < c1` the classification band inside it.
#[derive(Debug, Clone, Copy)]
pub struct EstimatorConfig {
    pub epsilon: f64,
    pub c1: f64,
    pub c2: f64,
    pub c3: f64,
    pub n: f64,
    pub split_mode: SplitMode,
}

impl EstimatorConfig {
    pub fn new(epsilon: f64, c1: f64, c2: f64, c3: f64, n: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be >= 0, got {epsilon}")));
        }
        if !(c1 > 0.0) || !(c2 > 0.0) || !(c3 > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "constants must be positive, got c1={c1}, c2={c2}, c3={c3}"
            )));
        }
        if c2 >= c1 {
            return Err(Error::InvalidConfig(format!("need c2 < c1, got c1={c1}, c2={c2}")));
        }
        if !(n > 1.0) {
            return Err(Error::InvalidConfig(format!("need n > 1, got {n}")));
        }
        let config = Self {
            epsilon,
            c1,
            c2,
            c3,
            n,
            split_mode: SplitMode::NoSplit,
        };
        if config.k() < 1 {
            return Err(Error::InvalidConfig(format!(
                "degree floor(c3 ln n) = {} must be at least 1",
                config.k()
            )));
        }
        if c2 / c1 >= 8.0 / (std::f64::consts::SQRT_2 + 1.0).powi(2) - 1.0 {
            log::warn!(
                "c2/c1 = {:.3} violates the two-sample good-event assumption (< 0.373); \
                 classification error bounds no longer apply",
                c2 / c1
            );
        }
        Ok(config)
    }

    /// Constants used for the synthetic comparisons: c1=4, c2=0.1, c3=1.5.
    pub fn synthetic_defaults(epsilon: f64, n: f64) -> Result<Self> {
        Self::new(epsilon, 4.0, 0.1, 1.5, n)
    }

    /// Constants used for mechanism audits: c1=4, c2=0.1, c3=0.9.
    pub fn audit_defaults(epsilon: f64, n: f64) -> Result<Self> {
        Self::new(epsilon, 4.0, 0.1, 0.9, n)
    }

    pub fn with_split_mode(mut self, mode: SplitMode) -> Self {
        self.split_mode = mode;
        self
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Result<Self> {
        if !(epsilon >= 0.0) {
            return Err(Error::InvalidConfig(format!("epsilon must be >= 0, got {epsilon}")));
        }
        self.epsilon = epsilon;
        Ok(self)
    }

    /// Approximation degree `floor(c3 ln n)`.
    pub fn k(&self) -> u32 {
        (self.c3 * self.n.ln()).floor() as u32
    }

    /// Window unit `Delta = c1 ln n / n`.
    pub fn delta_unit(&self) -> f64 {
        self.c1 * self.n.ln() / self.n
    }
}

/// Which branch a symbol lands in, decided from the classification split.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeLabel {
    /// Far below the kink: contributes 0.
    SmoothBelow,
    /// Far above the kink: plug-in term.
    SmoothAbove,
    /// Non-smooth with small total mass: boxed product approximation.
    NonSmoothSmall,
    /// Non-smooth with large total mass: recentred `|t|` approximation.
    NonSmoothLarge,
}

/// Closed interval used by the known-P classification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub lo: f64,
    pub hi: f64,
}

impl Band {
    pub fn contains(&self, x: f64) -> bool {
        (self.lo..=self.hi).contains(&x)
    }
}

/// Sorted-by-value summation: deterministic and invariant under relabeling.
fn clamped_sum(mut deltas: Vec<f64>) -> f64 {
    deltas.sort_by(f64::total_cmp);
    let total: f64 = deltas.iter().sum();
    total.clamp(0.0, 1.0)
}

/// Plug-in estimate from two histograms over a shared symbol dictionary:
/// `sum_i [p_hat_i - e^eps q_hat_i]^+`, clamped to `[0, 1]`. Well defined
/// whether or not the histograms sum to one.
pub fn plugin_estimate(
    p_hat: &EmpiricalHistogram,
    q_hat: &EmpiricalHistogram,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let scale = epsilon.exp();
    let deltas: Vec<f64> = p_hat
        .symbols()
        .map(|s| (p_hat.value(s) - scale * q_hat.value(s)).max(0.0))
        .collect();
    Ok(clamped_sum(deltas))
}

/// Plug-in estimate with a known reference distribution on the left.
pub fn plugin_estimate_known(
    p: &Distribution,
    q_hat: &EmpiricalHistogram,
    epsilon: f64,
) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::Domain(format!("epsilon must be >= 0, got {epsilon}")));
    }
    let scale = epsilon.exp();
    let symbols = known_symbol_union(p, &[q_hat]);
    let deltas: Vec<f64> = symbols
        .into_iter()
        .map(|s| (known_mass(p, s) - scale * q_hat.value(s)).max(0.0))
        .collect();
    Ok(clamped_sum(deltas))
}

fn known_mass(p: &Distribution, symbol: u32) -> f64 {
    p.get(symbol as usize)
}

fn known_symbol_union(p: &Distribution, histograms: &[&EmpiricalHistogram]) -> BTreeSet<u32> {
    let mut symbols: BTreeSet<u32> = (0..p.len() as u32).collect();
    for h in histograms {
        symbols.extend(h.symbols());
    }
    symbols
}

/// Classification interval for the known-P estimator: everything below
/// `(c1 + c2) ln n / n` when `p` is small, otherwise a band of half-width
/// `sqrt(c2 e^-eps p ln n / n)` around `e^-eps p`.
pub fn region_known_p(p: f64, config: &EstimatorConfig) -> Band {
    let log_term = config.n.ln() / config.n;
    if p <= config.c1 * config.epsilon.exp() * log_term {
        Band {
            lo: 0.0,
            hi: (config.c1 + config.c2) * log_term,
        }
    } else {
        let center = (-config.epsilon).exp() * p;
        let half_width = (config.c2 * center * log_term).sqrt();
        Band {
            lo: center - half_width,
            hi: center + half_width,
        }
    }
}

fn split_roles<'a>(
    split: &'a SampleSplit,
    config: &EstimatorConfig,
) -> Result<(&'a EmpiricalHistogram, &'a EmpiricalHistogram)> {
    match config.split_mode {
        SplitMode::NoSplit => {
            if split.len() != 1 {
                return Err(Error::InvalidConfig(format!(
                    "no-split mode expects one histogram per source, got {}",
                    split.len()
                )));
            }
            Ok((split.part(0), split.part(0)))
        }
        SplitMode::Split => {
            if split.len() < 2 {
                return Err(Error::InvalidConfig(format!(
                    "split mode expects two histograms per source, got {}",
                    split.len()
                )));
            }
            Ok((split.part(0), split.part(1)))
        }
    }
}

/// Known-P estimator: per symbol, the classification split decides between a
/// zero contribution, the plug-in term, and the polynomial branch whose form
/// depends on `p` against `e^eps Delta`. Ties at band endpoints classify as
/// inside the band.
pub fn estimate_known_p(
    p: &Distribution,
    q_split: &SampleSplit,
    config: &EstimatorConfig,
    cache: &PolyCache,
) -> Result<f64> {
    let (classify, measure) = split_roles(q_split, config)?;
    if (q_split.rate_n() - config.n).abs() > 1e-9 * config.n {
        return Err(Error::InvalidConfig(format!(
            "histogram rate {} does not match configured n = {}",
            q_split.rate_n(),
            config.n
        )));
    }
    let k = config.k();
    let abs_poly = cache.remez_abs(k)?;
    let scale = config.epsilon.exp();
    let boundary = scale * config.delta_unit();

    // Symbols with reference mass but no observations still contribute;
    // the spec of the sum runs over supp(P) union everything observed.
    let symbols = known_symbol_union(p, &[classify, measure]);
    let mut deltas = Vec::with_capacity(symbols.len());
    for symbol in symbols {
        let mass = known_mass(p, symbol);
        let q1 = classify.value(symbol);
        let q2 = measure.value(symbol);
        let band = region_known_p(mass, config);
        let delta = if q1 > band.hi {
            0.0
        } else if q1 < band.lo {
            (mass - scale * q2).max(0.0)
        } else if mass <= boundary {
            mvue::d_tilde_known_case1(q2, mass, config.n, k, config.c1, config.epsilon)?
        } else {
            mvue::d_tilde_known_case2(q2, mass, config.n, k, config.c1, config.epsilon, &abs_poly)?
        };
        deltas.push(delta);
    }
    Ok(clamped_sum(deltas))
}

/// Four-way branch decision for the two-sample estimator, from first-split
/// masses. The band has width `sqrt((c1+c2) ln n / n) (sqrt(p) + sqrt(e^eps q))`;
/// ties classify as inside (non-smooth).
pub fn region2d_classify(p_hat1: f64, q_hat1: f64, config: &EstimatorConfig) -> RegimeLabel {
    let scaled_q = config.epsilon.exp() * q_hat1;
    let threshold =
        ((config.c1 + config.c2) * config.n.ln() / config.n).sqrt() * (p_hat1.sqrt() + scaled_q.sqrt());
    let margin = p_hat1 - scaled_q;
    if margin < -threshold {
        RegimeLabel::SmoothBelow
    } else if margin > threshold {
        RegimeLabel::SmoothAbove
    } else if p_hat1 + scaled_q < config.delta_unit() {
        RegimeLabel::NonSmoothSmall
    } else {
        RegimeLabel::NonSmoothLarge
    }
}

/// Two-sample estimator of `d_eps(P||Q)` from Poissonized splits of both
/// sources. The symbol dictionary is the union of all observed symbols; the
/// support size never needs to be known in advance.
pub fn estimate(
    p_split: &SampleSplit,
    q_split: &SampleSplit,
    config: &EstimatorConfig,
    cache: &PolyCache,
) -> Result<f64> {
    let (p1, p2) = split_roles(p_split, config)?;
    let (q1, q2) = split_roles(q_split, config)?;
    for split in [p_split, q_split] {
        if (split.rate_n() - config.n).abs() > 1e-9 * config.n {
            return Err(Error::InvalidConfig(format!(
                "histogram rate {} does not match configured n = {}",
                split.rate_n(),
                config.n
            )));
        }
    }
    let k = config.k();
    let abs_poly = cache.remez_abs(k)?;
    let h = cache.h2k(k)?;
    let scale = config.epsilon.exp();

    let mut symbols: BTreeSet<u32> = BTreeSet::new();
    for histogram in [p1, p2, q1, q2] {
        symbols.extend(histogram.symbols());
    }

    let mut deltas = Vec::with_capacity(symbols.len());
    for symbol in symbols {
        let (pc, qc) = (p1.value(symbol), q1.value(symbol));
        let (pm, qm) = (p2.value(symbol), q2.value(symbol));
        let delta = match region2d_classify(pc, qc, config) {
            RegimeLabel::SmoothBelow => 0.0,
            RegimeLabel::SmoothAbove => pm - scale * qm,
            RegimeLabel::NonSmoothSmall => {
                mvue::d_tilde1(pm, qm, config.n, k, config.c1, config.epsilon, &h)?
            }
            RegimeLabel::NonSmoothLarge => mvue::d_tilde2(
                pm,
                qm,
                pc,
                qc,
                config.n,
                k,
                config.c1,
                config.epsilon,
                &abs_poly,
            )?,
        };
        deltas.push(delta);
    }
    Ok(clamped_sum(deltas))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sampling::{
        poissonized_histogram, split_samples, substream_seed, CategoricalSampler,
        EmpiricalHistogram,
    };
    use std::collections::BTreeMap;

    fn hist_from(counts: &[(u32, u64)], n: f64) -> EmpiricalHistogram {
        let map: BTreeMap<u32, u64> = counts.iter().copied().collect();
        EmpiricalHistogram::from_counts(map, n).unwrap()
    }

    #[test]
    fn config_validation_and_degree() {
        let config = EstimatorConfig::synthetic_defaults(0.4, 1.0e5).unwrap();
        assert_eq!(config.k(), 17);
        assert!(EstimatorConfig::new(-0.1, 4.0, 0.1, 1.5, 100.0).is_err());
        assert!(EstimatorConfig::new(0.4, 4.0, 4.0, 1.5, 100.0).is_err());
        assert!(EstimatorConfig::new(0.4, 4.0, 0.1, 0.01, 100.0).is_err());
        let audit = EstimatorConfig::audit_defaults(0.4, 1.0e5).unwrap();
        assert_eq!(audit.k(), 10);
    }

    #[test]
    fn plugin_on_exact_histograms() {
        let n = 1000.0;
        let p = hist_from(&[(0, 500), (1, 500)], n);
        assert_eq!(plugin_estimate(&p, &p, 0.0).unwrap(), 0.0);

        let a = hist_from(&[(0, 1000)], n);
        let b = hist_from(&[(1, 1000)], n);
        assert_eq!(plugin_estimate(&a, &b, 0.7).unwrap(), 1.0);
    }

    #[test]
    fn plugin_known_reference_exact_match_is_zero() {
        let p = Distribution::new(vec![0.25; 4]).unwrap();
        let q = hist_from(&[(0, 25), (1, 25), (2, 25), (3, 25)], 100.0);
        assert_eq!(plugin_estimate_known(&p, &q, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn known_region_small_mass_branch() {
        let config = EstimatorConfig::synthetic_defaults(0.4, 1.0e5).unwrap();
        let band = region_known_p(0.0, &config);
        assert_eq!(band.lo, 0.0);
        assert!((band.hi - 4.1 * 1.0e5_f64.ln() / 1.0e5).abs() < 1e-15);
    }

    #[test]
    fn known_region_band_matches_hand_arithmetic() {
        // p = 1, eps = 0, c2 = 0.1, n = 1e5: band is 1 +/- 0.0033931.
        let config = EstimatorConfig::new(0.0, 4.0, 0.1, 1.5, 1.0e5).unwrap();
        let band = region_known_p(1.0, &config);
        assert!((band.lo - 0.996_606_9).abs() < 1e-6, "{band:?}");
        assert!((band.hi - 1.003_393_1).abs() < 1e-6, "{band:?}");
    }

    #[test]
    fn known_region_band_is_monotone_in_c2() {
        let narrow = EstimatorConfig::new(0.4, 4.0, 0.1, 1.5, 1.0e5).unwrap();
        let mut wide = narrow;
        wide.c2 = 3.9999;
        for i in 0..100 {
            let p = (i as f64 + 0.5) / 100.0;
            let a = region_known_p(p, &narrow);
            let b = region_known_p(p, &wide);
            assert!(b.lo <= a.lo && b.hi >= a.hi, "p = {p}");
        }
    }

    #[test]
    fn two_dim_classification_examples() {
        let config = EstimatorConfig::synthetic_defaults(0.4, 1.0e5).unwrap();
        assert_eq!(region2d_classify(0.0, 0.0, &config), RegimeLabel::NonSmoothSmall);
        assert_eq!(
            region2d_classify(0.5, 0.001, &config),
            RegimeLabel::SmoothAbove
        );
        let scaled = 0.001 * 0.4f64.exp();
        assert_eq!(region2d_classify(scaled, 0.5, &config), RegimeLabel::SmoothBelow);
        // On the kink with large mass: inside, large-sum branch.
        let q = 0.3;
        let p = q * 0.4f64.exp();
        assert_eq!(region2d_classify(p, q, &config), RegimeLabel::NonSmoothLarge);
    }

    #[test]
    fn known_p_zero_when_all_observations_sit_above_their_bands() {
        let config = EstimatorConfig::synthetic_defaults(0.0, 1000.0)
            .unwrap()
            .with_split_mode(SplitMode::Split);
        let cache = PolyCache::in_memory();
        let p = Distribution::new(vec![0.5, 0.5]).unwrap();
        // Observed masses far above both bands.
        let h = hist_from(&[(0, 900), (1, 900)], 1000.0);
        let split = SampleSplit::from_parts(vec![h.clone(), h]).unwrap();
        assert_eq!(estimate_known_p(&p, &split, &config, &cache).unwrap(), 0.0);
    }

    #[test]
    fn known_p_identical_sources_estimate_near_zero() {
        let cache = PolyCache::in_memory();
        let n = 1.0e4;
        let config = EstimatorConfig::synthetic_defaults(0.4, n)
            .unwrap()
            .with_split_mode(SplitMode::Split);
        let p = Distribution::uniform(50);
        let sampler = CategoricalSampler::new(p.as_slice()).unwrap();
        let trials = 40;
        let mut total = 0.0;
        for t in 0..trials {
            let split = split_samples(
                |rng| sampler.draw(rng),
                n,
                2,
                substream_seed(1001, &[t as u64]),
            )
            .unwrap();
            total += estimate_known_p(&p, &split, &config, &cache).unwrap();
        }
        let mean = total / trials as f64;
        assert!(mean <= 0.02, "mean = {mean}");
    }

    #[test]
    fn known_p_beats_plugin_on_mixed_masses() {
        // Uniform reference vs Zipf samples with many symbols near the kink:
        // the polynomial estimator's squared error stays below the plug-in's.
        let cache = PolyCache::in_memory();
        let n = 1.0e3;
        let eps = 0.4;
        let config = EstimatorConfig::synthetic_defaults(eps, n)
            .unwrap()
            .with_split_mode(SplitMode::Split);
        let p = Distribution::uniform(100);
        let q = Distribution::zipf(100, -0.6);
        let truth = crate::divergence::d_eps(&p, &q, eps).unwrap();
        let sampler = CategoricalSampler::new(q.as_slice()).unwrap();
        let trials = 60;
        let (mut mse_poly, mut mse_plugin) = (0.0, 0.0);
        for t in 0..trials {
            let split = split_samples(
                |rng| sampler.draw(rng),
                n,
                2,
                substream_seed(77, &[t as u64]),
            )
            .unwrap();
            let poly = estimate_known_p(&p, &split, &config, &cache).unwrap();
            let plugin = plugin_estimate_known(&p, split.part(0), eps).unwrap();
            mse_poly += (poly - truth).powi(2);
            mse_plugin += (plugin - truth).powi(2);
        }
        assert!(
            mse_poly < mse_plugin,
            "poly {mse_poly} vs plugin {mse_plugin}"
        );
    }

    #[test]
    fn two_sample_disjoint_supports_estimate_near_one() {
        let cache = PolyCache::in_memory();
        let n = 1.0e4;
        let config = EstimatorConfig::synthetic_defaults(0.4, n).unwrap();
        let p_hist = poissonized_histogram(|_| 0u32, n, 31).unwrap();
        let q_hist = poissonized_histogram(|_| 1u32, n, 32).unwrap();
        let est = estimate(
            &SampleSplit::single(p_hist),
            &SampleSplit::single(q_hist),
            &config,
            &cache,
        )
        .unwrap();
        assert!(est >= 0.95, "estimate = {est}");
    }

    #[test]
    fn two_sample_identical_sources_estimate_near_zero() {
        let cache = PolyCache::in_memory();
        let n = 1.0e4;
        let config = EstimatorConfig::synthetic_defaults(0.4, n).unwrap();
        let dist = Distribution::uniform(100);
        let sampler = CategoricalSampler::new(dist.as_slice()).unwrap();
        let trials = 50;
        let mut total = 0.0;
        for t in 0..trials {
            let ph = poissonized_histogram(
                |rng| sampler.draw(rng),
                n,
                substream_seed(400, &[t as u64, 0]),
            )
            .unwrap();
            let qh = poissonized_histogram(
                |rng| sampler.draw(rng),
                n,
                substream_seed(400, &[t as u64, 1]),
            )
            .unwrap();
            total += estimate(
                &SampleSplit::single(ph),
                &SampleSplit::single(qh),
                &config,
                &cache,
            )
            .unwrap();
        }
        let mean = total / trials as f64;
        assert!(mean <= 0.02, "mean = {mean}");
    }

    #[test]
    fn split_and_no_split_agree_within_monte_carlo_error() {
        let cache = PolyCache::in_memory();
        let n = 1.0e4;
        let eps = 0.4;
        let p = Distribution::uniform(100);
        let q = Distribution::zipf(100, -0.6);
        let sp = CategoricalSampler::new(p.as_slice()).unwrap();
        let sq = CategoricalSampler::new(q.as_slice()).unwrap();
        let trials = 60;

        let run = |mode: SplitMode, label: u64| -> (f64, f64) {
            let parts = if mode == SplitMode::Split { 2 } else { 1 };
            let config = EstimatorConfig::synthetic_defaults(eps, n)
                .unwrap()
                .with_split_mode(mode);
            let values: Vec<f64> = (0..trials)
                .map(|t| {
                    let ps = split_samples(
                        |rng| sp.draw(rng),
                        n,
                        parts,
                        substream_seed(label, &[t as u64, 0]),
                    )
                    .unwrap();
                    let qs = split_samples(
                        |rng| sq.draw(rng),
                        n,
                        parts,
                        substream_seed(label, &[t as u64, 1]),
                    )
                    .unwrap();
                    estimate(&ps, &qs, &config, &cache).unwrap()
                })
                .collect();
            let mean = values.iter().sum::<f64>() / trials as f64;
            let var =
                values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
            (mean, (var / trials as f64).sqrt())
        };

        let (mean_split, se_split) = run(SplitMode::Split, 900);
        let (mean_nosplit, se_nosplit) = run(SplitMode::NoSplit, 901);
        let gap = (mean_split - mean_nosplit).abs();
        let se = (se_split.powi(2) + se_nosplit.powi(2)).sqrt();
        assert!(gap <= 3.0 * se, "gap {gap} vs 3 SE {}", 3.0 * se);
    }

    #[test]
    fn both_estimators_converge_to_total_variation_at_eps_zero() {
        let cache = PolyCache::in_memory();
        let n = 1.0e6;
        let config = EstimatorConfig::synthetic_defaults(0.0, n).unwrap();
        let p = Distribution::new(vec![0.4, 0.3, 0.2, 0.1]).unwrap();
        let q = Distribution::new(vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let truth = crate::divergence::d_eps(&p, &q, 0.0).unwrap();
        let sp = CategoricalSampler::new(p.as_slice()).unwrap();
        let sq = CategoricalSampler::new(q.as_slice()).unwrap();
        let trials = 5;
        let (mut sum_poly, mut sum_plugin) = (0.0, 0.0);
        for t in 0..trials {
            let ph = poissonized_histogram(
                |rng| sp.draw(rng),
                n,
                substream_seed(555, &[t as u64, 0]),
            )
            .unwrap();
            let qh = poissonized_histogram(
                |rng| sq.draw(rng),
                n,
                substream_seed(555, &[t as u64, 1]),
            )
            .unwrap();
            sum_plugin += plugin_estimate(&ph, &qh, 0.0).unwrap();
            sum_poly += estimate(
                &SampleSplit::single(ph),
                &SampleSplit::single(qh),
                &config,
                &cache,
            )
            .unwrap();
        }
        let mean_poly = sum_poly / trials as f64;
        let mean_plugin = sum_plugin / trials as f64;
        assert!((mean_poly - truth).abs() < 0.005, "poly {mean_poly} vs {truth}");
        assert!(
            (mean_plugin - truth).abs() < 0.005,
            "plugin {mean_plugin} vs {truth}"
        );
    }

    #[test]
    fn estimate_is_invariant_under_symbol_relabeling() {
        let cache = PolyCache::in_memory();
        let n = 500.0;
        let config = EstimatorConfig::new(0.3, 4.0, 0.1, 1.5, n).unwrap();
        let p = hist_from(&[(0, 100), (3, 40), (9, 360)], n);
        let q = hist_from(&[(0, 90), (3, 80), (7, 330)], n);
        let base = estimate(
            &SampleSplit::single(p),
            &SampleSplit::single(q),
            &config,
            &cache,
        )
        .unwrap();

        // Relabel 0 -> 7, 3 -> 0, 9 -> 3, 7 -> 9 jointly.
        let p2 = hist_from(&[(7, 100), (0, 40), (3, 360)], n);
        let q2 = hist_from(&[(7, 90), (0, 80), (9, 330)], n);
        let relabeled = estimate(
            &SampleSplit::single(p2),
            &SampleSplit::single(q2),
            &config,
            &cache,
        )
        .unwrap();
        assert_eq!(base, relabeled);
    }

    #[test]
    fn estimate_stays_in_unit_interval_for_adversarial_histograms() {
        let cache = PolyCache::in_memory();
        let n = 100.0;
        let config = EstimatorConfig::new(0.5, 4.0, 0.1, 1.5, n).unwrap();
        // Counts wildly exceeding n on purpose.
        let p = hist_from(&[(0, 10_000), (1, 1)], n);
        let q = hist_from(&[(0, 1), (2, 5_000)], n);
        let est = estimate(
            &SampleSplit::single(p),
            &SampleSplit::single(q),
            &config,
            &cache,
        )
        .unwrap();
        assert!((0.0..=1.0).contains(&est));
    }

    #[test]
    fn split_mode_part_counts_are_validated() {
        let cache = PolyCache::in_memory();
        let n = 100.0;
        let config = EstimatorConfig::new(0.5, 4.0, 0.1, 1.5, n)
            .unwrap()
            .with_split_mode(SplitMode::Split);
        let h = hist_from(&[(0, 10)], n);
        let single = SampleSplit::single(h);
        assert!(matches!(
            estimate(&single, &single, &config, &cache),
            Err(Error::InvalidConfig(_))
        ));
    }
}
