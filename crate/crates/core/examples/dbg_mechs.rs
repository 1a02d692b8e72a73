use dpaudit_core::audit::run_audit;
use dpaudit_core::estimators::EstimatorConfig;
use dpaudit_core::mechanisms::{MechanismKind, MechanismSpec};
use dpaudit_core::poly::PolyCache;
use std::time::Instant;

fn main() {
    let cache = PolyCache::in_memory();
    let n = 1.0e5;
    let trials = 10;
    let config = EstimatorConfig::audit_defaults(0.5, n).unwrap();

    // Cheap mechanisms first: single eps point at the claimed budget.
    for kind in [MechanismKind::RnaLap, MechanismKind::RnaExp, MechanismKind::RnmLap, MechanismKind::RnmExp] {
        let spec = MechanismSpec::new(kind, 0.5).unwrap();
        let pairs = spec.default_pairs(5);
        let t0 = Instant::now();
        let report = run_audit(&spec, &pairs, &[0.5], n, trials, 7, &config, 0.1, &cache).unwrap();
        let r = &report.records[0];
        println!(
            "{:<22} delta(0.5)={:.4} +/- {:.4} [{}] cert={} ({:.1?})",
            kind.id(), r.delta_hat, r.stderr, r.category,
            report.certificate.is_some(), t0.elapsed()
        );
    }

    // MTGM at its claim.
    let spec = MechanismSpec::new(MechanismKind::Mtgm, 0.5).unwrap().with_delta0(0.2).unwrap();
    let pairs = spec.default_pairs(5);
    let t0 = Instant::now();
    let report = run_audit(&spec, &pairs, &[0.5], n, trials, 7, &config, 0.1, &cache).unwrap();
    println!("mtgm(d0=0.2)           delta(0.5)={:.4} +/- {:.4} ({:.1?})", report.records[0].delta_hat, report.records[0].stderr, t0.elapsed());

    // Histogram wrong noise at 0.5 and 2.0.
    let spec = MechanismSpec::new(MechanismKind::HistogramWrongNoise, 0.5).unwrap();
    let pairs = spec.default_pairs(5);
    let t0 = Instant::now();
    let config2 = EstimatorConfig::audit_defaults(0.5, n).unwrap();
    let report = run_audit(&spec, &pairs, &[0.5, 2.0], n, trials, 7, &config2, 0.1, &cache).unwrap();
    println!(
        "hist-wrong-noise       delta(0.5)={:.4} delta(2.0)={:.4} ({:.1?})",
        report.records[0].delta_hat, report.records[1].delta_hat, t0.elapsed()
    );

    // Correct histogram for reference.
    let spec = MechanismSpec::new(MechanismKind::Histogram, 0.5).unwrap();
    let pairs = spec.default_pairs(5);
    let report = run_audit(&spec, &pairs, &[0.5, 2.0], n, trials, 7, &config2, 0.1, &cache).unwrap();
    println!(
        "histogram (correct)    delta(0.5)={:.4} delta(2.0)={:.4}",
        report.records[0].delta_hat, report.records[1].delta_hat
    );

    // iSVT3 over the [0,1] grid.
    let spec = MechanismSpec::new(MechanismKind::Isvt3, 0.5).unwrap().with_bound(1).unwrap();
    let pairs = spec.default_pairs(5);
    let grid: Vec<f64> = (0..=20).map(|i| i as f64 * 0.05).collect();
    let t0 = Instant::now();
    let report = run_audit(&spec, &pairs, &grid, n, trials, 7, &config2, 0.1, &cache).unwrap();
    print!("isvt3: ");
    for r in &report.records {
        if (r.epsilon * 20.0).round() as i32 % 4 == 0 {
            print!("d({:.2})={:.4} ", r.epsilon, r.delta_hat);
        }
    }
    let first_ok = report.records.iter().find(|r| r.delta_hat <= 0.005).map(|r| r.epsilon);
    println!("\n  smallest eps with delta<=0.005: {first_ok:?} ({:.1?})", t0.elapsed());

    // SVT correct + isvt1/2 qualitative.
    for kind in [MechanismKind::Svt, MechanismKind::Isvt1, MechanismKind::Isvt2] {
        let spec = MechanismSpec::new(kind, 0.5).unwrap();
        let pairs = spec.default_pairs(5);
        let report = run_audit(&spec, &pairs, &[0.5, 1.0], n, trials, 7, &config2, 0.1, &cache).unwrap();
        println!(
            "{:<6} delta(0.5)={:.4} delta(1.0)={:.4}",
            kind.id(), report.records[0].delta_hat, report.records[1].delta_hat
        );
    }
}
