use dpaudit_core::divergence::{d_eps, Distribution};
use dpaudit_core::estimators::{estimate_known_p, plugin_estimate_known, EstimatorConfig, SplitMode};
use dpaudit_core::poly::PolyCache;
use dpaudit_core::sampling::{split_samples, substream_seed, CategoricalSampler};

fn main() {
    let cache = PolyCache::in_memory();
    let eps = 0.4;
    let p = Distribution::uniform(100);
    let q = Distribution::zipf(100, -0.6);
    let truth = d_eps(&p, &q, eps).unwrap();
    println!("truth = {truth}");
    let sampler = CategoricalSampler::new(q.as_slice()).unwrap();
    for n in [1.0e3f64, 1.0e4, 1.0e5] {
        for c3 in [0.9f64, 1.5] {
            let config = EstimatorConfig::new(eps, 4.0, 0.1, c3, n)
                .unwrap()
                .with_split_mode(SplitMode::Split);
            let trials = 100;
            let (mut mse_poly, mut mse_plugin, mut bias_poly, mut bias_plugin) = (0.0, 0.0, 0.0, 0.0);
            for t in 0..trials {
                let split = split_samples(|rng| sampler.draw(rng), n, 2, substream_seed(77, &[t])).unwrap();
                let poly = estimate_known_p(&p, &split, &config, &cache).unwrap();
                let plugin = plugin_estimate_known(&p, split.part(0), eps).unwrap();
                mse_poly += (poly - truth).powi(2);
                mse_plugin += (plugin - truth).powi(2);
                bias_poly += poly - truth;
                bias_plugin += plugin - truth;
            }
            let t = trials as f64;
            println!(
                "n={n:>8} c3={c3}: K={} mse_poly={:.4e} mse_plugin={:.4e}  bias_poly={:+.4e} bias_plugin={:+.4e}",
                config.k(), mse_poly / t, mse_plugin / t, bias_poly / t, bias_plugin / t
            );
        }
    }
}
