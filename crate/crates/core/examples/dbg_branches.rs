use dpaudit_core::divergence::{d_eps, Distribution};
use dpaudit_core::estimators::{region2d_classify, EstimatorConfig, RegimeLabel};
use dpaudit_core::mvue::{d_tilde1, d_tilde2};
use dpaudit_core::poly::PolyCache;
use dpaudit_core::sampling::{poissonized_histogram, substream_seed, CategoricalSampler};

fn main() {
    let cache = PolyCache::in_memory();
    let eps: f64 = 0.4;
    let p = Distribution::uniform(100);
    let q = Distribution::zipf(100, -0.6);
    let truth = d_eps(&p, &q, eps).unwrap();
    let sp = CategoricalSampler::new(p.as_slice()).unwrap();
    let sq = CategoricalSampler::new(q.as_slice()).unwrap();
    for n in [1.0e4f64, 1.0e5] {
        let config = EstimatorConfig::synthetic_defaults(eps, n).unwrap();
        let k = config.k();
        let abs_poly = cache.remez_abs(k).unwrap();
        let h = cache.h2k(k).unwrap();
        let trials = 100;
        let mut label_counts = [0usize; 4];
        let mut alg2_vals = vec![];
        let mut plug_vals = vec![];
        let mut smooth_sum_tot = vec![];
        let mut d2_sum_tot = vec![];
        for t in 0..trials {
            let ph = poissonized_histogram(|rng| sp.draw(rng), n, substream_seed(90, &[t, 0])).unwrap();
            let qh = poissonized_histogram(|rng| sq.draw(rng), n, substream_seed(90, &[t, 1])).unwrap();
            let mut total = 0.0; let mut plug = 0.0;
            let (mut ssum, mut d2sum) = (0.0, 0.0);
            let mut symbols: std::collections::BTreeSet<u32> = ph.symbols().collect();
            symbols.extend(qh.symbols());
            for s in symbols {
                let (pm, qm) = (ph.value(s), qh.value(s));
                plug += (pm - eps.exp() * qm).max(0.0);
                let delta = match region2d_classify(pm, qm, &config) {
                    RegimeLabel::SmoothBelow => { label_counts[0] += 1; 0.0 }
                    RegimeLabel::SmoothAbove => { label_counts[1] += 1; let v = pm - eps.exp()*qm; ssum += v; v }
                    RegimeLabel::NonSmoothSmall => { label_counts[2] += 1; d_tilde1(pm, qm, n, k, 4.0, eps, &h).unwrap() }
                    RegimeLabel::NonSmoothLarge => { label_counts[3] += 1; let v = d_tilde2(pm, qm, pm, qm, n, k, 4.0, eps, &abs_poly).unwrap(); d2sum += v; v }
                };
                total += delta;
            }
            alg2_vals.push(total.clamp(0.0, 1.0));
            plug_vals.push(plug.min(1.0));
            smooth_sum_tot.push(ssum);
            d2_sum_tot.push(d2sum);
        }
        let stat = |v: &Vec<f64>| {
            let m = v.iter().sum::<f64>() / v.len() as f64;
            let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64;
            (m, var)
        };
        let (ma, va) = stat(&alg2_vals);
        let (mp, vp) = stat(&plug_vals);
        let (ms, vs) = stat(&smooth_sum_tot);
        let (m2, v2) = stat(&d2_sum_tot);
        println!("n={n:>8} K={k} truth={truth:.5}");
        println!("  branches per trial: below={:.1} above={:.1} small={:.1} large={:.1}",
            label_counts[0] as f64 / trials as f64, label_counts[1] as f64 / trials as f64,
            label_counts[2] as f64 / trials as f64, label_counts[3] as f64 / trials as f64);
        println!("  alg2: bias={:+.2e} var={:.2e} mse={:.2e}", ma - truth, va, (ma-truth).powi(2)+va);
        println!("  plug: bias={:+.2e} var={:.2e} mse={:.2e}", mp - truth, vp, (mp-truth).powi(2)+vp);
        println!("  smooth-above sum: mean={ms:+.4e} var={vs:.2e}; d2 sum: mean={m2:+.4e} var={v2:.2e}");
        label_counts = [0; 4];
        let _ = label_counts;
    }
}
