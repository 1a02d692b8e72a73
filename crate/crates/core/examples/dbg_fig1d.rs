use dpaudit_core::divergence::{d_eps, Distribution};
use dpaudit_core::estimators::{estimate, plugin_estimate, EstimatorConfig, SplitMode};
use dpaudit_core::poly::PolyCache;
use dpaudit_core::sampling::{split_samples, substream_seed, CategoricalSampler};

fn run(label: &str, p: &Distribution, q: &Distribution, mode: SplitMode, seed: u64) {
    let cache = PolyCache::in_memory();
    let eps = 0.4;
    let truth = d_eps(p, q, eps).unwrap();
    let sp = CategoricalSampler::new(p.as_slice()).unwrap();
    let sq = CategoricalSampler::new(q.as_slice()).unwrap();
    let parts = if mode == SplitMode::Split { 2 } else { 1 };
    print!("{label} truth={truth:.4}: ");
    for n in [1.0e3f64, 1.0e4, 1.0e5] {
        let config = EstimatorConfig::new(eps, 4.0, 0.1, 1.5, n).unwrap().with_split_mode(mode);
        let trials = 100u64;
        let mut diffs = vec![];
        for t in 0..trials {
            let ps = split_samples(|rng| sp.draw(rng), n, parts, substream_seed(seed, &[t, 0])).unwrap();
            let qs = split_samples(|rng| sq.draw(rng), n, parts, substream_seed(seed, &[t, 1])).unwrap();
            let minimax = estimate(&ps, &qs, &config, &cache).unwrap();
            let plugin = plugin_estimate(ps.part(0), qs.part(0), eps).unwrap();
            diffs.push((plugin - truth).powi(2) - (minimax - truth).powi(2));
        }
        let t = trials as f64;
        let dm = diffs.iter().sum::<f64>() / t;
        let dv = diffs.iter().map(|d| (d - dm).powi(2)).sum::<f64>() / (t - 1.0);
        print!("n={:.0e}: {:+.1}SE  ", n, dm / (dv / t).sqrt());
    }
    println!();
}

fn main() {
    let uni = Distribution::uniform(100);
    let zipf = Distribution::zipf(100, -0.6);
    for seed in [4242u64, 777, 31] {
        run(&format!("U||Z nosplit s{seed}"), &uni, &zipf, SplitMode::NoSplit, seed);
        run(&format!("U||Z split   s{seed}"), &uni, &zipf, SplitMode::Split, seed);
        run(&format!("Z||U nosplit s{seed}"), &zipf, &uni, SplitMode::NoSplit, seed);
        run(&format!("Z||U split   s{seed}"), &zipf, &uni, SplitMode::Split, seed);
    }
}
