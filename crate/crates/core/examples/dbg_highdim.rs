use dpaudit_core::divergence::{d_eps, Distribution};
use dpaudit_core::estimators::{estimate, plugin_estimate, EstimatorConfig, SplitMode};
use dpaudit_core::poly::PolyCache;
use dpaudit_core::sampling::{split_samples, substream_seed, CategoricalSampler};

fn main() {
    let cache = PolyCache::in_memory();
    let eps = 0.4;
    // High-dimensional regime: S comparable to n.
    for (s, n) in [(1000usize, 1.0e3f64), (5000, 5.0e3), (20000, 2.0e4)] {
        let p = Distribution::uniform(s);
        let q = Distribution::zipf(s, -0.6);
        let truth = d_eps(&p, &q, eps).unwrap();
        let sp = CategoricalSampler::new(p.as_slice()).unwrap();
        let sq = CategoricalSampler::new(q.as_slice()).unwrap();
        let config = EstimatorConfig::new(eps, 4.0, 0.1, 1.5, n).unwrap().with_split_mode(SplitMode::Split);
        let trials = 60u64;
        let (mut mse_m, mut mse_p) = (0.0, 0.0);
        let mut diffs = vec![];
        for t in 0..trials {
            let ps = split_samples(|rng| sp.draw(rng), n, 2, substream_seed(5, &[t, 0])).unwrap();
            let qs = split_samples(|rng| sq.draw(rng), n, 2, substream_seed(5, &[t, 1])).unwrap();
            let minimax = estimate(&ps, &qs, &config, &cache).unwrap();
            let plugin = plugin_estimate(ps.part(0), qs.part(0), eps).unwrap();
            let (a, b) = ((minimax - truth).powi(2), (plugin - truth).powi(2));
            mse_m += a; mse_p += b; diffs.push(b - a);
        }
        let t = trials as f64;
        let dm = diffs.iter().sum::<f64>() / t;
        let dv = diffs.iter().map(|d| (d - dm).powi(2)).sum::<f64>() / (t - 1.0);
        println!(
            "S={s:>6} n={n:.0e}: truth={truth:.4} mse_plugin={:.3e} mse_minimax={:.3e} ratio={:.1} ({:+.1} SE)",
            mse_p / t, mse_m / t, mse_p / mse_m, dm / (dv / t).sqrt()
        );
    }
}
