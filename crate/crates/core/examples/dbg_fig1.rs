use dpaudit_core::audit::synthetic_mse;
use dpaudit_core::divergence::Distribution;
use dpaudit_core::estimators::EstimatorConfig;
use dpaudit_core::poly::PolyCache;

fn main() {
    let cache = PolyCache::in_memory();
    let p = Distribution::uniform(100);
    let q = Distribution::zipf(100, -0.6);
    let config = EstimatorConfig::synthetic_defaults(0.4, 1000.0).unwrap();
    let table = synthetic_mse(
        &p, &q, 0.4,
        &[1.0e3, 1.0e4, 1.0e5],
        100, 4242, &config, &cache,
    ).unwrap();
    println!("truth = {:.6}", table.truth);
    for r in &table.rows {
        println!(
            "n={:>8}: mse_plugin={:.4e} (se {:.1e})  mse_minimax={:.4e} (se {:.1e})  ratio={:.2}",
            r.n, r.mse_plugin, r.se_plugin, r.mse_minimax, r.se_minimax,
            r.mse_plugin / r.mse_minimax
        );
    }
    println!("plugin log-slope = {:.3}", table.plugin_log_slope());
}
