//! Monte-Carlo audit harness: runs a mechanism over its database pairs and
//! an epsilon grid, estimates `delta(eps)` per trial in both ordered
//! directions, and assembles reports with standard errors, the winning
//! category per epsilon, and a violation certificate when one exists.
//!
//! Every trial draws fresh Poissonized samples under a dedicated seed
//! substream labelled by (category, epsilon index, trial, side, part), so a
//! report is a pure function of `(seed, configuration)` and any certificate
//! can be re-derived by replaying its trial.

use std::io::Write;

use rayon::prelude::*;

use crate::divergence::{certificate_set, d_eps, set_margin, Distribution};
use crate::estimators::{estimate, plugin_estimate, EstimatorConfig, SplitMode};
use crate::mechanisms::{
    draw_output, MechanismSpec, QueryDatabasePair, Side, SymbolDictionary,
};
use crate::poly::PolyCache;
use crate::sampling::{
    poissonized_histogram_with, substream_rng, CategoricalSampler, EmpiricalHistogram,
    SampleSplit,
};
use crate::{Error, Result};

/// One point of the reported `delta(eps)` curve.
#[derive(Debug, Clone, PartialEq)]
pub struct EpsilonRecord {
    pub epsilon: f64,
    /// Mean over trials of the per-trial estimate (max over both ordered
    /// directions), maximized over categories.
    pub delta_hat: f64,
    pub stderr: f64,
    pub trials: u32,
    pub n: f64,
    /// Category achieving the maximum.
    pub category: String,
}

/// Per-category curve kept alongside the winning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryCurve {
    pub category: String,
    /// `(epsilon, delta_hat, stderr)` per grid point.
    pub points: Vec<(f64, f64, f64)>,
}

/// A concrete DP-violation witness: the positive-margin symbol set of the
/// strongest trial at the claimed budget.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub epsilon: f64,
    pub category: String,
    pub trial: u32,
    /// Which ordered direction the witness applies to; `Side::D` means the
    /// divergence of D's outputs against D''s.
    pub direction: Side,
    pub symbols: Vec<u32>,
    /// `P(T) - e^eps Q(T) - delta0`, strictly positive.
    pub margin: f64,
    /// Densified empirical vectors the certificate was extracted from.
    pub p_hat: Vec<f64>,
    pub q_hat: Vec<f64>,
}

/// Full audit output.
#[derive(Debug, Clone)]
pub struct AuditReport {
    pub mechanism: String,
    pub n: f64,
    pub trials: u32,
    pub seed: u64,
    pub records: Vec<EpsilonRecord>,
    pub categories: Vec<CategoryCurve>,
    pub certificate: Option<Certificate>,
}

impl AuditReport {
    /// The reported estimate at a grid epsilon, if present.
    pub fn delta_at(&self, epsilon: f64) -> Option<&EpsilonRecord> {
        self.records
            .iter()
            .find(|r| (r.epsilon - epsilon).abs() < 1e-12)
    }

    /// Soft monotonicity check: `delta_hat` should be non-increasing in
    /// epsilon up to noise. Returns human-readable flags, never fails.
    pub fn monotonicity_flags(&self) -> Vec<String> {
        let mut flags = Vec::new();
        for pair in self.records.windows(2) {
            let slack = 2.0 * (pair[0].stderr + pair[1].stderr);
            if pair[1].delta_hat > pair[0].delta_hat + slack {
                flags.push(format!(
                    "delta_hat rises from {:.4} at eps={:.3} to {:.4} at eps={:.3} (> 2 SE)",
                    pair[0].delta_hat, pair[0].epsilon, pair[1].delta_hat, pair[1].epsilon
                ));
            }
        }
        flags
    }

    /// CSV with header `epsilon,delta_hat,stderr,trials,n,category`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "epsilon,delta_hat,stderr,trials,n,category")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{:.10},{:.10},{},{},{}",
                r.epsilon, r.delta_hat, r.stderr, r.trials, r.n, r.category
            )?;
        }
        Ok(())
    }

    /// Companion certificate file: margin, context, then one symbol id per
    /// line.
    pub fn write_certificate<W: Write>(&self, mut w: W) -> Result<bool> {
        let Some(cert) = &self.certificate else {
            return Ok(false);
        };
        writeln!(w, "mechanism={}", self.mechanism)?;
        writeln!(w, "epsilon={}", cert.epsilon)?;
        writeln!(w, "category={}", cert.category)?;
        writeln!(w, "trial={}", cert.trial)?;
        writeln!(
            w,
            "direction={}",
            match cert.direction {
                Side::D => "d-vs-dprime",
                Side::Dprime => "dprime-vs-d",
            }
        )?;
        writeln!(w, "margin={:.10}", cert.margin)?;
        for s in &cert.symbols {
            writeln!(w, "{s}")?;
        }
        Ok(true)
    }
}

fn mean_and_stderr(values: &[f64]) -> (f64, f64) {
    let t = values.len() as f64;
    let mean = values.iter().sum::<f64>() / t;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (t - 1.0);
    (mean, (var / t).sqrt())
}

/// Jackknife standard error of the mean of `values` (leave-one-out form).
fn jackknife_se(values: &[f64]) -> f64 {
    let t = values.len();
    if t < 2 {
        return 0.0;
    }
    let total: f64 = values.iter().sum();
    let loo: Vec<f64> = values
        .iter()
        .map(|v| (total - v) / (t as f64 - 1.0))
        .collect();
    let loo_mean = loo.iter().sum::<f64>() / t as f64;
    let ss: f64 = loo.iter().map(|m| (m - loo_mean).powi(2)).sum();
    ((t as f64 - 1.0) / t as f64 * ss).sqrt()
}

struct TrialData {
    p_split: SampleSplit,
    q_split: SampleSplit,
    dict: SymbolDictionary,
}

/// Draw one trial's histograms for both sides under a shared dictionary.
fn draw_trial(
    spec: &MechanismSpec,
    pair: &QueryDatabasePair,
    n: f64,
    parts: u32,
    bin_width: f64,
    seed: u64,
    labels: [u64; 3],
) -> Result<TrialData> {
    let mut dict = SymbolDictionary::new(bin_width)?;
    let mut splits = Vec::with_capacity(2);
    for (side_idx, side) in [(0u64, Side::D), (1u64, Side::Dprime)] {
        let mut hists = Vec::with_capacity(parts as usize);
        for part in 0..parts {
            let mut rng = substream_rng(
                seed,
                &[labels[0], labels[1], labels[2], side_idx, part as u64],
            );
            let hist = poissonized_histogram_with(
                &mut |rng: &mut rand_chacha::ChaCha8Rng| {
                    let raw = draw_output(spec, pair, side, rng);
                    dict.intern(&raw)
                },
                n,
                &mut rng,
            )?;
            hists.push(hist);
        }
        splits.push(SampleSplit::from_parts(hists)?);
    }
    let q_split = splits.pop().unwrap();
    let p_split = splits.pop().unwrap();
    if dict.is_empty() {
        return Err(Error::DegenerateAudit(
            "no symbols observed on either database".into(),
        ));
    }
    Ok(TrialData {
        p_split,
        q_split,
        dict,
    })
}

fn densify(hist: &EmpiricalHistogram, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for s in hist.symbols() {
        if (s as usize) < len {
            out[s as usize] = hist.value(s);
        }
    }
    out
}

/// Audit a mechanism: for every category and epsilon, run `trials`
/// independent Poissonized estimates (both ordered directions, max taken),
/// then report the per-epsilon max over categories and a certificate at the
/// claimed budget when a positive-margin witness exists.
#[allow(clippy::too_many_arguments)]
pub fn run_audit(
    spec: &MechanismSpec,
    pairs: &[QueryDatabasePair],
    eps_grid: &[f64],
    n: f64,
    trials: u32,
    seed: u64,
    config: &EstimatorConfig,
    bin_width: f64,
    cache: &PolyCache,
) -> Result<AuditReport> {
    if trials < 1 {
        return Err(Error::InvalidConfig("trials must be >= 1".into()));
    }
    if eps_grid.is_empty() || eps_grid.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::InvalidConfig(
            "epsilon grid must be non-empty and non-negative".into(),
        ));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidConfig("no database pairs to audit".into()));
    }
    for pair in pairs {
        spec.validate_pair(pair)?;
    }
    let parts = match config.split_mode {
        SplitMode::NoSplit => 1,
        SplitMode::Split => 2,
    };
    // Warm the coefficient cache before fanning out.
    let template = EstimatorConfig::new(0.0, config.c1, config.c2, config.c3, n)?
        .with_split_mode(config.split_mode);
    cache.remez_abs(template.k())?;
    cache.h2k(template.k())?;

    let jobs: Vec<(usize, usize, u32)> = (0..pairs.len())
        .flat_map(|ci| {
            (0..eps_grid.len()).flat_map(move |ei| (0..trials).map(move |ti| (ci, ei, ti)))
        })
        .collect();

    let trial_values: Vec<f64> = jobs
        .par_iter()
        .map(|&(ci, ei, ti)| -> Result<f64> {
            let data = draw_trial(
                spec,
                &pairs[ci],
                n,
                parts,
                bin_width,
                seed,
                [ci as u64, ei as u64, ti as u64],
            )?;
            let config = template.with_epsilon(eps_grid[ei])?;
            let forward = estimate(&data.p_split, &data.q_split, &config, cache)?;
            let backward = estimate(&data.q_split, &data.p_split, &config, cache)?;
            Ok(forward.max(backward))
        })
        .collect::<Result<Vec<_>>>()?;

    let value_at = |ci: usize, ei: usize, ti: u32| {
        trial_values[(ci * eps_grid.len() + ei) * trials as usize + ti as usize]
    };

    let categories: Vec<CategoryCurve> = pairs
        .iter()
        .enumerate()
        .map(|(ci, pair)| {
            let points = eps_grid
                .iter()
                .enumerate()
                .map(|(ei, &eps)| {
                    let values: Vec<f64> = (0..trials).map(|ti| value_at(ci, ei, ti)).collect();
                    let (mean, se) = mean_and_stderr(&values);
                    (eps, mean, se)
                })
                .collect();
            CategoryCurve {
                category: pair.category.clone(),
                points,
            }
        })
        .collect();

    let records: Vec<EpsilonRecord> = eps_grid
        .iter()
        .enumerate()
        .map(|(ei, &eps)| {
            let (best_ci, &(_, delta_hat, stderr)) = categories
                .iter()
                .enumerate()
                .map(|(ci, c)| (ci, &c.points[ei]))
                .max_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
                .unwrap();
            EpsilonRecord {
                epsilon: eps,
                delta_hat,
                stderr,
                trials,
                n,
                category: pairs[best_ci].category.clone(),
            }
        })
        .collect();

    // Certificate at the grid point closest to the claimed budget: replay
    // the strongest trial and extract the positive-margin set.
    let claim_ei = eps_grid
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - spec.eps0).abs().total_cmp(&(b.1 - spec.eps0).abs()))
        .map(|(i, _)| i)
        .unwrap();
    let claim_eps = eps_grid[claim_ei];
    let mut certificate = None;
    let best = (0..pairs.len())
        .flat_map(|ci| (0..trials).map(move |ti| (ci, ti)))
        .max_by(|&(c1, t1), &(c2, t2)| {
            value_at(c1, claim_ei, t1).total_cmp(&value_at(c2, claim_ei, t2))
        });
    if let Some((ci, ti)) = best {
        if value_at(ci, claim_ei, ti) > 0.0 {
            let data = draw_trial(
                spec,
                &pairs[ci],
                n,
                parts,
                bin_width,
                seed,
                [ci as u64, claim_ei as u64, ti as u64],
            )?;
            let len = data.dict.len();
            let p_hat = densify(data.p_split.part(0), len);
            let q_hat = densify(data.q_split.part(0), len);
            for (direction, (left, right)) in [
                (Side::D, (&p_hat, &q_hat)),
                (Side::Dprime, (&q_hat, &p_hat)),
            ] {
                let set = certificate_set(left, right, claim_eps)?;
                if set.is_empty() {
                    continue;
                }
                let margin = set_margin(left, right, claim_eps, &set) - spec.claimed_delta();
                let better = certificate
                    .as_ref()
                    .map_or(true, |c: &Certificate| margin > c.margin);
                if margin > 0.0 && better {
                    certificate = Some(Certificate {
                        epsilon: claim_eps,
                        category: pairs[ci].category.clone(),
                        trial: ti,
                        direction,
                        symbols: set.iter().map(|&s| s as u32).collect(),
                        margin,
                        p_hat: left.clone(),
                        q_hat: right.clone(),
                    });
                }
            }
        }
    }

    Ok(AuditReport {
        mechanism: spec.kind.id().to_string(),
        n,
        trials,
        seed,
        records,
        categories,
        certificate,
    })
}

/// One row of the synthetic mean-squared-error comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MseRow {
    pub n: f64,
    pub mse_plugin: f64,
    pub mse_minimax: f64,
    pub se_plugin: f64,
    pub se_minimax: f64,
}

/// MSE sweep of plug-in vs the two-sample polynomial estimator against the
/// exact divergence of known distributions.
#[derive(Debug, Clone)]
pub struct MseTable {
    pub epsilon: f64,
    pub truth: f64,
    pub rows: Vec<MseRow>,
}

impl MseTable {
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,mse_plugin,mse_minimax,se_plugin,se_minimax")?;
        for r in &self.rows {
            writeln!(
                w,
                "{},{:.12e},{:.12e},{:.12e},{:.12e}",
                r.n, r.mse_plugin, r.mse_minimax, r.se_plugin, r.se_minimax
            )?;
        }
        Ok(())
    }

    /// Least-squares slope of `log10 mse_plugin` against `log10 n`.
    pub fn plugin_log_slope(&self) -> f64 {
        let points: Vec<(f64, f64)> = self
            .rows
            .iter()
            .map(|r| (r.n.log10(), r.mse_plugin.log10()))
            .collect();
        let t = points.len() as f64;
        let mx = points.iter().map(|p| p.0).sum::<f64>() / t;
        let my = points.iter().map(|p| p.1).sum::<f64>() / t;
        let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
        let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
        sxy / sxx
    }
}

/// Compare both estimators against the exact `d_eps(P||Q)` over a grid of
/// sample budgets, `trials` independent runs each.
#[allow(clippy::too_many_arguments)]
pub fn synthetic_mse(
    p: &Distribution,
    q: &Distribution,
    epsilon: f64,
    n_grid: &[f64],
    trials: u32,
    seed: u64,
    config: &EstimatorConfig,
    cache: &PolyCache,
) -> Result<MseTable> {
    if n_grid.is_empty() || trials < 1 {
        return Err(Error::InvalidConfig(
            "need a non-empty n grid and at least one trial".into(),
        ));
    }
    let truth = d_eps(p, q, epsilon)?;
    let p_sampler = CategoricalSampler::new(p.as_slice())?;
    let q_sampler = CategoricalSampler::new(q.as_slice())?;
    let parts = match config.split_mode {
        SplitMode::NoSplit => 1u32,
        SplitMode::Split => 2,
    };

    let mut rows = Vec::with_capacity(n_grid.len());
    for (ni, &n) in n_grid.iter().enumerate() {
        let run_config = EstimatorConfig::new(epsilon, config.c1, config.c2, config.c3, n)?
            .with_split_mode(config.split_mode);
        cache.remez_abs(run_config.k())?;
        cache.h2k(run_config.k())?;
        let errors: Vec<(f64, f64)> = (0..trials)
            .into_par_iter()
            .map(|ti| -> Result<(f64, f64)> {
                let draw = |sampler: &CategoricalSampler, side: u64| -> Result<SampleSplit> {
                    let hists = (0..parts)
                        .map(|part| {
                            let mut rng = substream_rng(
                                seed,
                                &[ni as u64, ti as u64, side, part as u64],
                            );
                            poissonized_histogram_with(
                                &mut |rng: &mut rand_chacha::ChaCha8Rng| sampler.draw(rng),
                                n,
                                &mut rng,
                            )
                        })
                        .collect::<Result<Vec<_>>>()?;
                    SampleSplit::from_parts(hists)
                };
                let p_split = draw(&p_sampler, 0)?;
                let q_split = draw(&q_sampler, 1)?;
                let minimax = estimate(&p_split, &q_split, &run_config, cache)?;
                let plugin = plugin_estimate(p_split.part(0), q_split.part(0), epsilon)?;
                Ok(((plugin - truth).powi(2), (minimax - truth).powi(2)))
            })
            .collect::<Result<Vec<_>>>()?;
        let plugin_sq: Vec<f64> = errors.iter().map(|e| e.0).collect();
        let minimax_sq: Vec<f64> = errors.iter().map(|e| e.1).collect();
        rows.push(MseRow {
            n,
            mse_plugin: plugin_sq.iter().sum::<f64>() / trials as f64,
            mse_minimax: minimax_sq.iter().sum::<f64>() / trials as f64,
            se_plugin: jackknife_se(&plugin_sq),
            se_minimax: jackknife_se(&minimax_sq),
        });
    }
    Ok(MseTable {
        epsilon,
        truth,
        rows,
    })
}
