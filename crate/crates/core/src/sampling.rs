//! Poissonized sample generation and MLE-normalized histograms.
//!
//! Instead of drawing a fixed number of samples, we draw `N ~ Poi(n)` and
//! then `N` iid samples from the source. Dividing per-symbol counts by the
//! *nominal* rate `n` (not by `N`) gives the maximum likelihood estimate of
//! the source distribution and makes the per-symbol counts independent
//! `Poi(n q_i)` variables, which is what the unbiased moment machinery in
//! [`crate::mvue`] relies on.
//!
//! All sampling is driven by a ChaCha stream cipher keyed from an explicit
//! seed, with substreams derived by hashing a label path onto the seed, so
//! every Monte-Carlo run is exactly reproducible and independent across
//! parts, trials and mechanism sides.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// SplitMix64 finalizer; good avalanche for seed derivation.
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

const GOLDEN: u64 = 0x9e37_79b9_7f4a_7c15;

/// Derive a child seed from a base seed and a label path.
///
/// Distinct label paths give statistically independent substreams.
pub fn substream_seed(seed: u64, labels: &[u64]) -> u64 {
    let mut h = mix(seed ^ GOLDEN);
    for &label in labels {
        h = mix(h ^ mix(label.wrapping_add(GOLDEN)));
    }
    h
}

/// Deterministic generator for the given seed and label path.
pub fn substream_rng(seed: u64, labels: &[u64]) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(substream_seed(seed, labels))
}

/// Lanczos approximation of `ln Gamma(x)` for `x > 0`; absolute error below
/// 1e-13 on the range used here.
pub(crate) fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 8] = [
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_13,
        -176.615_029_162_140_59,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_571_6e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        // Reflection formula.
        return std::f64::consts::PI.ln() - (std::f64::consts::PI * x).sin().ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = 0.999_999_999_999_809_93;
    for (i, &c) in COEF.iter().enumerate() {
        a += c / (x + (i + 1) as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

/// One draw from `Poi(lambda)`.
///
/// Inversion by sequential search below `lambda = 10`, Hormann's transformed
/// rejection (PTRS) above.
pub fn sample_poisson(rng: &mut ChaCha8Rng, lambda: f64) -> Result<u64> {
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("Poisson rate must be > 0, got {lambda}")));
    }
    if lambda < 10.0 {
        let limit = (-lambda).exp();
        let mut k = 0u64;
        let mut prod: f64 = rng.gen();
        while prod > limit {
            prod *= rng.gen::<f64>();
            k += 1;
        }
        Ok(k)
    } else {
        let slam = lambda.sqrt();
        let loglam = lambda.ln();
        let b = 0.931 + 2.53 * slam;
        let a = -0.059 + 0.024_83 * b;
        let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        let v_r = 0.9277 - 3.6224 / (b - 2.0);
        loop {
            let u: f64 = rng.gen::<f64>() - 0.5;
            let v: f64 = rng.gen();
            let us = 0.5 - u.abs();
            let k = ((2.0 * a / us + b) * u + lambda + 0.43).floor();
            if us >= 0.07 && v <= v_r {
                return Ok(k as u64);
            }
            if k < 0.0 || (us < 0.013 && v > us) {
                continue;
            }
            if v.ln() + inv_alpha.ln() - (a / (us * us) + b).ln()
                <= k * loglam - lambda - ln_gamma(k + 1.0)
            {
                return Ok(k as u64);
            }
        }
    }
}

/// Draws symbol ids from a fixed probability vector by CDF inversion.
#[derive(Debug, Clone)]
pub struct CategoricalSampler {
    cdf: Vec<f64>,
}

impl CategoricalSampler {
    pub fn new(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() || weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::Domain("weights must be non-empty and non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Domain("weights must have positive total mass".into()));
        }
        let mut acc = 0.0;
        let cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        Ok(Self { cdf })
    }

    pub fn draw(&self, rng: &mut ChaCha8Rng) -> u32 {
        let u: f64 = rng.gen();
        self.cdf.partition_point(|&c| c < u) as u32
    }
}

/// Poissonized counts divided by the nominal rate `n`.
///
/// The values `q_hat_i = counts_i / n` need not sum to one; unobserved
/// symbols have `q_hat_i = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalHistogram {
    counts: BTreeMap<u32, u64>,
    rate_n: f64,
}

impl EmpiricalHistogram {
    pub fn new(rate_n: f64) -> Result<Self> {
        if !(rate_n > 0.0) {
            return Err(Error::Domain(format!("rate n must be > 0, got {rate_n}")));
        }
        Ok(Self {
            counts: BTreeMap::new(),
            rate_n,
        })
    }

    pub fn from_counts(counts: BTreeMap<u32, u64>, rate_n: f64) -> Result<Self> {
        let mut h = Self::new(rate_n)?;
        h.counts = counts;
        h.counts.retain(|_, &mut c| c > 0);
        Ok(h)
    }

    pub fn record(&mut self, symbol: u32) {
        *self.counts.entry(symbol).or_insert(0) += 1;
    }

    pub fn rate_n(&self) -> f64 {
        self.rate_n
    }

    pub fn count(&self, symbol: u32) -> u64 {
        self.counts.get(&symbol).copied().unwrap_or(0)
    }

    /// MLE value `count / n` for a symbol.
    pub fn value(&self, symbol: u32) -> f64 {
        self.count(symbol) as f64 / self.rate_n
    }

    pub fn total_count(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn symbols(&self) -> impl Iterator<Item = u32> + '_ {
        self.counts.keys().copied()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    /// Text serialization: header `n=<rate>`, then `<symbol_id>,<count>` rows
    /// in ascending symbol order.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n={:.17e}", self.rate_n)?;
        for (&sym, &count) in &self.counts {
            writeln!(w, "{sym},{count}")?;
        }
        Ok(())
    }

    pub fn read_from<R: BufRead>(r: R) -> Result<Self> {
        let mut lines = r.lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::Domain("empty histogram file".into()))??;
        let rate = header
            .strip_prefix("n=")
            .ok_or_else(|| Error::Domain(format!("expected 'n=<rate>' header, got '{header}'")))?
            .parse::<f64>()
            .map_err(|e| Error::Domain(format!("bad rate in header: {e}")))?;
        let mut h = Self::new(rate)?;
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (sym, count) = line
                .split_once(',')
                .ok_or_else(|| Error::Domain(format!("expected '<symbol>,<count>', got '{line}'")))?;
            let sym: u32 = sym
                .trim()
                .parse()
                .map_err(|e| Error::Domain(format!("bad symbol id: {e}")))?;
            let count: u64 = count
                .trim()
                .parse()
                .map_err(|e| Error::Domain(format!("bad count: {e}")))?;
            if count > 0 {
                h.counts.insert(sym, count);
            }
        }
        Ok(h)
    }
}

/// Independent Poissonized histograms drawn from one source, each with the
/// same nominal rate.
#[derive(Debug, Clone)]
pub struct SampleSplit {
    parts: Vec<EmpiricalHistogram>,
}

impl SampleSplit {
    pub fn from_parts(parts: Vec<EmpiricalHistogram>) -> Result<Self> {
        if parts.is_empty() {
            return Err(Error::Domain("split needs at least one part".into()));
        }
        let n = parts[0].rate_n();
        if parts.iter().any(|p| p.rate_n() != n) {
            return Err(Error::Domain("split parts must share the same rate".into()));
        }
        Ok(Self { parts })
    }

    pub fn single(histogram: EmpiricalHistogram) -> Self {
        Self {
            parts: vec![histogram],
        }
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn part(&self, index: usize) -> &EmpiricalHistogram {
        &self.parts[index]
    }

    pub fn rate_n(&self) -> f64 {
        self.parts[0].rate_n()
    }
}

/// Draw `N ~ Poi(n)` samples from `source` into an MLE histogram, using the
/// provided generator.
pub fn poissonized_histogram_with<F>(
    source: &mut F,
    n: f64,
    rng: &mut ChaCha8Rng,
) -> Result<EmpiricalHistogram>
where
    F: FnMut(&mut ChaCha8Rng) -> u32,
{
    let mut histogram = EmpiricalHistogram::new(n)?;
    let draws = sample_poisson(rng, n)?;
    for _ in 0..draws {
        let symbol = source(rng);
        histogram.record(symbol);
    }
    Ok(histogram)
}

/// Seeded variant of [`poissonized_histogram_with`]; identical seeds give
/// identical histograms.
pub fn poissonized_histogram<F>(mut source: F, n: f64, seed: u64) -> Result<EmpiricalHistogram>
where
    F: FnMut(&mut ChaCha8Rng) -> u32,
{
    let mut rng = substream_rng(seed, &[]);
    poissonized_histogram_with(&mut source, n, &mut rng)
}

/// Independent Poissonized histograms, one per part, each `Poi(n)` sized.
/// The total expected budget is `parts * n`.
pub fn split_samples<F>(mut source: F, n: f64, parts: u32, seed: u64) -> Result<SampleSplit>
where
    F: FnMut(&mut ChaCha8Rng) -> u32,
{
    if parts < 1 {
        return Err(Error::Domain("parts must be >= 1".into()));
    }
    let histograms = (0..parts)
        .map(|j| {
            let mut rng = substream_rng(seed, &[j as u64]);
            poissonized_histogram_with(&mut source, n, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    SampleSplit::from_parts(histograms)
}

/// Truncated-sum oracle for `E[[q_hat - q]^+]` with `n q_hat ~ Poi(n q)`.
/// Tail mass beyond the truncation point is below 1e-15.
pub fn expected_positive_excess(n: f64, q: f64) -> f64 {
    let lambda = n * q;
    let mut pmf = (-lambda).exp();
    let mut total = 0.0;
    let mut k = 0u64;
    // Run to a generous multiple of the mean plus slack to push the Poisson
    // tail below 1e-15.
    let cap = (lambda + 60.0 * (lambda.sqrt() + 1.0)).ceil() as u64;
    while k <= cap {
        let value = k as f64 / n - q;
        if value > 0.0 {
            total += value * pmf;
        }
        k += 1;
        pmf *= lambda / k as f64;
    }
    total
}

/// Closed form for `E[[q_hat - q]^+]`: `lambda^(floor(lambda)+1) e^-lambda /
/// (n floor(lambda)!)` with `lambda = n q`.
pub fn positive_excess_closed_form(n: f64, q: f64) -> f64 {
    let lambda = n * q;
    let m = lambda.floor();
    ((m + 1.0) * lambda.ln() - lambda - ln_gamma(m + 1.0)).exp() / n
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn substreams_differ_and_are_stable() {
        let a = substream_seed(7, &[0]);
        let b = substream_seed(7, &[1]);
        let c = substream_seed(8, &[0]);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, substream_seed(7, &[0]));
    }

    #[test]
    fn ln_gamma_matches_factorials() {
        let mut log_fact = 0.0;
        for k in 1..=170u32 {
            log_fact += (k as f64).ln();
            assert!(
                (ln_gamma(k as f64 + 1.0) - log_fact).abs() < 1e-10 * (1.0 + log_fact),
                "k = {k}"
            );
        }
    }

    #[test]
    fn poisson_moments_match_within_monte_carlo_error() {
        for &lambda in &[0.5f64, 3.0, 9.9, 10.1, 47.3, 5.0e4] {
            let trials = if lambda > 1000.0 { 2000 } else { 20000 };
            let mut rng = substream_rng(42, &[lambda.to_bits()]);
            let samples: Vec<f64> = (0..trials)
                .map(|_| sample_poisson(&mut rng, lambda).unwrap() as f64)
                .collect();
            let t = trials as f64;
            let mean = samples.iter().sum::<f64>() / t;
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (t - 1.0);
            let mean_se = (lambda / t).sqrt();
            let var_se = lambda * (2.0 / (t - 1.0)).sqrt() * 1.5;
            assert!((mean - lambda).abs() < 4.0 * mean_se, "mean at lambda={lambda}");
            assert!((var - lambda).abs() < 4.0 * var_se + 0.05, "var at lambda={lambda}");
        }
    }

    #[test]
    fn poisson_pmf_goodness_of_fit() {
        // Chi-square GoF on lambda = 4, bins 0..=11 plus tail.
        let lambda = 4.0;
        let trials = 50_000u32;
        let mut rng = substream_rng(1234, &[]);
        let mut observed = [0u32; 13];
        for _ in 0..trials {
            let k = sample_poisson(&mut rng, lambda).unwrap() as usize;
            observed[k.min(12)] += 1;
        }
        let mut pmf = (-lambda as f64).exp();
        let mut expected = [0.0f64; 13];
        let mut tail = 1.0;
        for k in 0..12 {
            expected[k] = pmf * trials as f64;
            tail -= pmf;
            pmf *= lambda / (k as f64 + 1.0);
        }
        expected[12] = tail * trials as f64;
        let chi2: f64 = observed
            .iter()
            .zip(&expected)
            .map(|(&o, &e)| (o as f64 - e).powi(2) / e)
            .sum();
        // df = 12, alpha = 0.001 critical value.
        assert!(chi2 < 32.909, "chi2 = {chi2}");
    }

    #[test]
    fn fixed_seed_is_deterministic() {
        let sampler = CategoricalSampler::new(&[0.2, 0.3, 0.5]).unwrap();
        let h1 = poissonized_histogram(|rng| sampler.draw(rng), 500.0, 99).unwrap();
        let h2 = poissonized_histogram(|rng| sampler.draw(rng), 500.0, 99).unwrap();
        assert_eq!(h1, h2);
    }

    #[test]
    fn single_symbol_histogram_is_unbiased() {
        // E[q_hat_0] = 1.0 for a point-mass source at rate n = 100.
        let n = 100.0;
        let trials = 2000;
        let mut total = 0.0;
        for t in 0..trials {
            let h = poissonized_histogram(|_| 0u32, n, substream_seed(5, &[t])).unwrap();
            total += h.value(0);
        }
        let mean = total / trials as f64;
        let se = (1.0 / (n * trials as f64)).sqrt();
        assert!((mean - 1.0).abs() < 4.0 * se, "mean = {mean}");
    }

    #[test]
    fn positive_excess_closed_form_matches_truncated_sum() {
        for &(n, q) in &[(10.0, 0.5), (7.0, 0.1), (25.0, 0.9), (40.0, 0.52), (3.0, 0.33)] {
            let oracle = expected_positive_excess(n, q);
            let closed = positive_excess_closed_form(n, q);
            assert!(
                (oracle - closed).abs() < 1e-12,
                "n={n}, q={q}: {oracle} vs {closed}"
            );
        }
        // Spec example: n = 10, q = 0.5 gives about 0.08773.
        assert!((positive_excess_closed_form(10.0, 0.5) - 0.08773).abs() < 5e-6);
    }

    #[test]
    fn histogram_mean_and_variance_match_poissonization() {
        let q = [0.6, 0.4];
        let sampler = CategoricalSampler::new(&q).unwrap();
        let n = 200.0;
        let trials = 4000;
        let mut values = vec![Vec::with_capacity(trials); 2];
        for t in 0..trials {
            let h =
                poissonized_histogram(|rng| sampler.draw(rng), n, substream_seed(11, &[t as u64]))
                    .unwrap();
            for s in 0..2 {
                values[s].push(h.value(s as u32));
            }
        }
        for s in 0..2 {
            let t = trials as f64;
            let mean = values[s].iter().sum::<f64>() / t;
            let var = values[s].iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
            let true_var = q[s] / n;
            let mean_se = (true_var / t).sqrt();
            let var_se = true_var * (2.0 / (t - 1.0)).sqrt() * 1.5;
            assert!((mean - q[s]).abs() < 4.0 * mean_se, "symbol {s} mean");
            assert!((var - true_var).abs() < 4.0 * var_se, "symbol {s} var");
        }
    }

    #[test]
    fn split_parts_are_uncorrelated() {
        let sampler = CategoricalSampler::new(&[0.5, 0.5]).unwrap();
        let n = 1000.0;
        let trials = 1000;
        let mut first = Vec::with_capacity(trials);
        let mut second = Vec::with_capacity(trials);
        for t in 0..trials {
            let split =
                split_samples(|rng| sampler.draw(rng), n, 2, substream_seed(3, &[t as u64]))
                    .unwrap();
            first.push(split.part(0).count(0) as f64);
            second.push(split.part(1).count(0) as f64);
        }
        let t = trials as f64;
        let m1 = first.iter().sum::<f64>() / t;
        let m2 = second.iter().sum::<f64>() / t;
        let cov: f64 = first
            .iter()
            .zip(&second)
            .map(|(a, b)| (a - m1) * (b - m2))
            .sum::<f64>()
            / (t - 1.0);
        let s1 = (first.iter().map(|a| (a - m1).powi(2)).sum::<f64>() / (t - 1.0)).sqrt();
        let s2 = (second.iter().map(|b| (b - m2).powi(2)).sum::<f64>() / (t - 1.0)).sqrt();
        let corr = cov / (s1 * s2);
        assert!(corr.abs() < 0.1, "corr = {corr}");
    }

    #[test]
    fn four_part_split_has_independent_sizes() {
        let split = split_samples(|_| 0u32, 50.0, 4, 17).unwrap();
        assert_eq!(split.len(), 4);
        // Each part holds its own Poi(n) draw; with overwhelming probability
        // they are not all identical.
        let counts: Vec<u64> = (0..4).map(|i| split.part(i).total_count()).collect();
        assert!(counts.windows(2).any(|w| w[0] != w[1]), "{counts:?}");
    }

    #[test]
    fn counts_across_symbols_are_independent() {
        // Pairwise chi-square independence tests over 10^4 trials on a
        // 3-symbol source; must not reject at alpha = 0.001 (df = 9).
        let q = [0.3, 0.5, 0.2];
        let sampler = CategoricalSampler::new(&q).unwrap();
        let n = 10.0;
        let trials = 10_000usize;
        let mut counts = vec![[0u64; 3]; trials];
        for t in 0..trials {
            let h =
                poissonized_histogram(|rng| sampler.draw(rng), n, substream_seed(21, &[t as u64]))
                    .unwrap();
            for s in 0..3 {
                counts[t][s] = h.count(s as u32);
            }
        }
        let cell = |c: u64| (c.min(3)) as usize; // bins 0,1,2,3+
        for (a, b) in [(0usize, 1usize), (0, 2), (1, 2)] {
            let mut table = [[0.0f64; 4]; 4];
            for row in &counts {
                table[cell(row[a])][cell(row[b])] += 1.0;
            }
            let row_sum: Vec<f64> = (0..4).map(|i| table[i].iter().sum()).collect();
            let col_sum: Vec<f64> = (0..4).map(|j| (0..4).map(|i| table[i][j]).sum()).collect();
            let total: f64 = row_sum.iter().sum();
            let mut chi2 = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    let expected = row_sum[i] * col_sum[j] / total;
                    if expected > 0.0 {
                        chi2 += (table[i][j] - expected).powi(2) / expected;
                    }
                }
            }
            assert!(chi2 < 27.877, "symbols ({a},{b}): chi2 = {chi2}");
        }
    }

    #[test]
    fn histogram_round_trips_through_text() {
        let sampler = CategoricalSampler::new(&[0.1, 0.2, 0.7]).unwrap();
        let h = poissonized_histogram(|rng| sampler.draw(rng), 321.5, 8).unwrap();
        let mut buf = Vec::new();
        h.write_to(&mut buf).unwrap();
        let parsed = EmpiricalHistogram::read_from(buf.as_slice()).unwrap();
        assert_eq!(h, parsed);
    }

    #[test]
    fn invalid_rates_are_rejected() {
        assert!(poissonized_histogram(|_| 0u32, 0.0, 1).is_err());
        assert!(poissonized_histogram(|_| 0u32, -5.0, 1).is_err());
        assert!(split_samples(|_| 0u32, 10.0, 0, 1).is_err());
    }
}
