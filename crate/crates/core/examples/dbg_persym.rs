use dpaudit_core::mvue::d_tilde2;
use dpaudit_core::oracle::expect_poissonized_pair;
use dpaudit_core::poly::PolyCache;

fn main() {
    let cache = PolyCache::in_memory();
    let eps: f64 = 0.4;
    for n in [1.0e4f64, 1.0e5] {
        for k in [10u32, 13, 17] {
            let abs_poly = cache.remez_abs(k).unwrap();
            let p: f64 = 0.01;
            for offset in [0.0f64, 0.5, 1.0] {
                // q at the kink, half-band, and band edge
                let delta = 4.0 * n.ln() / n;
                let w_true = (8.0 * delta).sqrt() * (p + p).sqrt(); // rough
                let q = (-eps).exp() * (p + offset * 0.5 * w_true);
                let truth = (p - eps.exp() * q).max(0.0);
                // plugin per-symbol MSE
                let mse_plug = expect_poissonized_pair(n, p, q, |ph, qh| {
                    ((ph - eps.exp() * qh).max(0.0) - truth).powi(2)
                });
                // D2 with classification values fixed at truth
                let mse_d2 = expect_poissonized_pair(n, p, q, |ph, qh| {
                    (d_tilde2(ph, qh, p, q, n, k, 4.0, eps, &abs_poly).unwrap() - truth).powi(2)
                });
                println!("n={n:.0e} K={k} offset={offset}: mse_plug={mse_plug:.3e} mse_d2={mse_d2:.3e} ratio={:.2}", mse_plug / mse_d2);
            }
        }
        println!();
    }
}
