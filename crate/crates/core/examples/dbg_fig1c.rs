use dpaudit_core::divergence::{d_eps, Distribution};
use dpaudit_core::estimators::{estimate, plugin_estimate, EstimatorConfig, SplitMode};
use dpaudit_core::poly::PolyCache;
use dpaudit_core::sampling::{split_samples, substream_seed, CategoricalSampler};

fn main() {
    let cache = PolyCache::in_memory();
    let eps = 0.4;
    let p = Distribution::uniform(100);
    let q = Distribution::zipf(100, -0.6);
    let truth = d_eps(&p, &q, eps).unwrap();
    let sp = CategoricalSampler::new(p.as_slice()).unwrap();
    let sq = CategoricalSampler::new(q.as_slice()).unwrap();
    for c3 in [1.5f64, 0.9] {
        println!("c3 = {c3} (split mode)");
        for n in [1.0e3f64, 1.0e4, 1.0e5] {
            let config = EstimatorConfig::new(eps, 4.0, 0.1, c3, n).unwrap().with_split_mode(SplitMode::Split);
            let trials = 100u64;
            let mut diffs = vec![];
            let (mut mse_m, mut mse_p) = (0.0, 0.0);
            for t in 0..trials {
                let ps = split_samples(|rng| sp.draw(rng), n, 2, substream_seed(4242, &[t, 0])).unwrap();
                let qs = split_samples(|rng| sq.draw(rng), n, 2, substream_seed(4242, &[t, 1])).unwrap();
                let minimax = estimate(&ps, &qs, &config, &cache).unwrap();
                let plugin = plugin_estimate(ps.part(0), qs.part(0), eps).unwrap();
                let (sm, sp2) = ((minimax - truth).powi(2), (plugin - truth).powi(2));
                mse_m += sm; mse_p += sp2;
                diffs.push(sp2 - sm);
            }
            let t = trials as f64;
            let dm = diffs.iter().sum::<f64>() / t;
            let dv = diffs.iter().map(|d| (d - dm).powi(2)).sum::<f64>() / (t - 1.0);
            let dse = (dv / t).sqrt();
            println!("  n={:>8}: mse_plugin={:.3e} mse_minimax={:.3e} paired diff={:.3e} ({:+.1} SE)",
                n, mse_p / t, mse_m / t, dm, dm / dse);
        }
    }
}
