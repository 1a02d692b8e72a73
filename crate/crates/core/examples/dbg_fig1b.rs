use dpaudit_core::audit::synthetic_mse;
use dpaudit_core::divergence::Distribution;
use dpaudit_core::estimators::{EstimatorConfig, SplitMode};
use dpaudit_core::poly::PolyCache;

fn main() {
    let cache = PolyCache::in_memory();
    let p = Distribution::uniform(100);
    let q = Distribution::zipf(100, -0.6);
    for (mode, label) in [(SplitMode::NoSplit, "no-split"), (SplitMode::Split, "split")] {
        for c3 in [0.9f64, 1.5] {
            let config = EstimatorConfig::new(0.4, 4.0, 0.1, c3, 1000.0)
                .unwrap()
                .with_split_mode(mode);
            let table = synthetic_mse(&p, &q, 0.4, &[1.0e3, 1.0e4, 1.0e5], 100, 4242, &config, &cache).unwrap();
            print!("{label} c3={c3}: ");
            for r in &table.rows {
                let sep = (r.mse_plugin - r.mse_minimax) / (r.se_plugin.powi(2) + r.se_minimax.powi(2)).sqrt();
                print!("n={:.0e}: ratio={:.2} sep={:+.1}SE  ", r.n, r.mse_plugin / r.mse_minimax, sep);
            }
            println!();
        }
    }
}
