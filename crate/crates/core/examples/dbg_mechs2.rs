use dpaudit_core::audit::run_audit;
use dpaudit_core::estimators::EstimatorConfig;
use dpaudit_core::mechanisms::{MechanismKind, MechanismSpec};
use dpaudit_core::poly::PolyCache;

fn main() {
    let cache = PolyCache::in_memory();
    let n = 1.0e5;
    let trials = 10;
    let config = EstimatorConfig::audit_defaults(0.5, n).unwrap();

    for kind in [MechanismKind::RnmLap, MechanismKind::RnmExp, MechanismKind::RnaLap] {
        for m in [5usize, 10] {
            let spec = MechanismSpec::new(kind, 0.5).unwrap();
            let pairs = spec.default_pairs(m);
            let report = run_audit(&spec, &pairs, &[0.5], n, trials, 7, &config, 0.1, &cache).unwrap();
            println!("{:<8} m={m:<2} delta(0.5)={:.4} [{}]", kind.id(), report.records[0].delta_hat, report.records[0].category);
        }
    }
    for w in [0.5f64, 1.0, 2.0] {
        for kind in [MechanismKind::HistogramWrongNoise, MechanismKind::Histogram] {
            let spec = MechanismSpec::new(kind, 0.5).unwrap();
            let pairs = spec.default_pairs(5);
            let report = run_audit(&spec, &pairs, &[0.5, 2.0], n, trials, 7, &config, w, &cache).unwrap();
            println!(
                "{:<22} w={w}: delta(0.5)={:.4} delta(2.0)={:.4}",
                kind.id(), report.records[0].delta_hat, report.records[1].delta_hat
            );
        }
    }
}
