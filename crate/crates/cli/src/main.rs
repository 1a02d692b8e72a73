//! `dpaudit`: black-box differential-privacy auditing from the command line.
//!
//! Exit codes: 0 = success (no violation), 2 = privacy violation detected,
//! 64 = usage error, 74 = I/O error.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use dpaudit_core::audit::{run_audit, synthetic_mse};
use dpaudit_core::divergence::Distribution;
use dpaudit_core::estimators::{
    estimate, plugin_estimate, EstimatorConfig, SplitMode,
};
use dpaudit_core::mechanisms::{MechanismConfig, MechanismKind, MechanismSpec, QueryDatabasePair};
use dpaudit_core::poly::{PolyCache, MAX_DEGREE};
use dpaudit_core::sampling::{EmpiricalHistogram, SampleSplit};

const EXIT_OK: i32 = 0;
const EXIT_VIOLATION: i32 = 2;
const EXIT_USAGE: i32 = 64;
const EXIT_IO: i32 = 74;

#[derive(Parser)]
#[command(
    name = "dpaudit",
    about = "Estimate (eps, delta) privacy guarantees of mechanisms from samples",
    version
)]
struct Cli {
    /// Worker threads for parallel trials (default: available parallelism).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// Coefficient-cache file; DPAUDIT_CACHE is used when the flag is absent.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Audit a mechanism over an epsilon grid and write a delta-hat report.
    Audit(AuditArgs),
    /// Compare the plug-in and polynomial estimators on known distributions.
    SyntheticMse(SyntheticArgs),
    /// Estimate d_eps from two histogram files.
    Estimate(EstimateArgs),
    /// Populate and validate the polynomial coefficient table.
    PolyTable(PolyTableArgs),
}

#[derive(Args)]
struct AuditArgs {
    /// Mechanism id (rna-lap, rna-exp, rnm-lap, rnm-exp, histogram,
    /// histogram-wrong-noise, svt, isvt1, isvt2, isvt3, tgm, mtgm).
    #[arg(long)]
    mechanism: Option<String>,

    /// Optional key-value config file; flags win over file entries.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Claimed privacy budget eps0.
    #[arg(long)]
    eps0: Option<f64>,

    /// Claimed failure probability (MTGM).
    #[arg(long)]
    delta0: Option<f64>,

    /// Bound on trues for the SVT family.
    #[arg(long)]
    bound: Option<u32>,

    /// SVT threshold.
    #[arg(long)]
    threshold: Option<f64>,

    /// Number of composed queries (5 or 10).
    #[arg(long)]
    queries: Option<usize>,

    /// Bin width for continuous outputs (default: per-mechanism).
    #[arg(long)]
    bin_width: Option<f64>,

    /// Epsilon grid as start:end:count (default 0:1:21). The claimed eps0 is
    /// always included.
    #[arg(long, default_value = "0:1:21")]
    eps_grid: String,

    /// Expected samples per database and trial.
    #[arg(long, default_value_t = 1.0e5)]
    n: f64,

    #[arg(long, default_value_t = 10)]
    trials: u32,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 4.0)]
    c1: f64,

    #[arg(long, default_value_t = 0.1)]
    c2: f64,

    #[arg(long, default_value_t = 0.9)]
    c3: f64,

    /// Use independent sample splits for classification and estimation.
    #[arg(long)]
    split: bool,

    /// Report CSV path; the certificate (if any) goes to <out>.cert.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SyntheticArgs {
    /// Sampled distribution: "uniform" or "zipf:<alpha>".
    #[arg(long, default_value = "zipf:-0.6")]
    dist: String,

    /// Alphabet size.
    #[arg(long, default_value_t = 100)]
    s: usize,

    #[arg(long, default_value_t = 0.4)]
    eps: f64,

    /// Comma-separated sample budgets.
    #[arg(long, default_value = "1e3,1e4,1e5")]
    n_grid: String,

    #[arg(long, default_value_t = 100)]
    trials: u32,

    #[arg(long, default_value_t = 0)]
    seed: u64,

    #[arg(long, default_value_t = 4.0)]
    c1: f64,

    #[arg(long, default_value_t = 0.1)]
    c2: f64,

    #[arg(long, default_value_t = 1.5)]
    c3: f64,

    #[arg(long)]
    split: bool,

    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EstimateArgs {
    /// Histogram file for the left distribution (header n=<rate>).
    #[arg(long)]
    p_hist: PathBuf,

    /// Histogram file for the right distribution.
    #[arg(long)]
    q_hist: PathBuf,

    #[arg(long)]
    eps: f64,

    #[arg(long, default_value_t = 4.0)]
    c1: f64,

    #[arg(long, default_value_t = 0.1)]
    c2: f64,

    #[arg(long, default_value_t = 0.9)]
    c3: f64,
}

#[derive(Args)]
struct PolyTableArgs {
    /// Degrees to populate, comma separated.
    #[arg(long, value_delimiter = ',')]
    k: Vec<u32>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            // clap's own formatting, but with the documented usage exit code
            // for actual errors (--help / --version stay successful).
            let code = if err.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = err.print();
            std::process::exit(code);
        }
    };
    std::process::exit(run(cli));
}

fn exit_code_for(err: &dpaudit_core::Error) -> i32 {
    match err {
        dpaudit_core::Error::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn run(cli: Cli) -> i32 {
    if let Some(jobs) = cli.jobs {
        if let Err(err) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
            eprintln!("dpaudit: could not configure {jobs} worker threads: {err}");
        }
    }
    let cache = match open_cache(&cli) {
        Ok(cache) => cache,
        Err(err) => {
            eprintln!("dpaudit: {err}");
            return exit_code_for(&err);
        }
    };
    let result = match cli.command {
        Command::Audit(args) => cmd_audit(args, &cache),
        Command::SyntheticMse(args) => cmd_synthetic_mse(args, &cache),
        Command::Estimate(args) => cmd_estimate(args, &cache),
        Command::PolyTable(args) => cmd_poly_table(args, &cache),
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("dpaudit: {err}");
            exit_code_for(&err)
        }
    }
}

fn open_cache(cli: &Cli) -> dpaudit_core::Result<PolyCache> {
    let path = cli
        .cache
        .clone()
        .or_else(|| std::env::var_os("DPAUDIT_CACHE").map(PathBuf::from));
    match path {
        Some(path) => PolyCache::with_file(path),
        None => Ok(PolyCache::in_memory()),
    }
}

fn parse_eps_grid(text: &str) -> dpaudit_core::Result<Vec<f64>> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || dpaudit_core::Error::Domain(format!("bad eps grid '{text}', expected start:end:count"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let start: f64 = parts[0].parse().map_err(|_| bad())?;
    let end: f64 = parts[1].parse().map_err(|_| bad())?;
    let count: usize = parts[2].parse().map_err(|_| bad())?;
    if count < 1 || end < start || start < 0.0 {
        return Err(bad());
    }
    if count == 1 {
        return Ok(vec![start]);
    }
    Ok((0..count)
        .map(|i| start + (end - start) * i as f64 / (count - 1) as f64)
        .collect())
}

fn cmd_audit(args: AuditArgs, cache: &PolyCache) -> dpaudit_core::Result<i32> {
    let file_config = match &args.config {
        Some(path) => Some(MechanismConfig::from_str(&std::fs::read_to_string(path)?)?),
        None => None,
    };

    // Flags win over the config file.
    let kind = match (&args.mechanism, &file_config) {
        (Some(id), _) => MechanismKind::from_id(id)?,
        (None, Some(config)) => config.spec.kind,
        (None, None) => {
            return Err(dpaudit_core::Error::Domain(
                "--mechanism (or a config file providing one) is required".into(),
            ))
        }
    };
    let base = file_config.as_ref().map(|c| c.spec);
    let mut spec = MechanismSpec::new(kind, args.eps0.or(base.map(|s| s.eps0)).unwrap_or(0.5))?
        .with_delta0(args.delta0.or(base.map(|s| s.delta0)).unwrap_or(0.0))?
        .with_threshold(args.threshold.or(base.map(|s| s.threshold)).unwrap_or(1.0));
    spec = spec.with_bound(args.bound.or(base.map(|s| s.bound)).unwrap_or(1))?;

    let queries = args
        .queries
        .or(file_config.as_ref().map(|c| c.queries))
        .unwrap_or(5);
    if queries != 5 && queries != 10 {
        return Err(dpaudit_core::Error::Domain(format!(
            "queries must be 5 or 10, got {queries}"
        )));
    }
    let bin_width = args
        .bin_width
        .or(file_config.as_ref().map(|c| c.bin_width))
        .unwrap_or_else(|| spec.default_bin_width());
    let pairs: Vec<QueryDatabasePair> = match (&args.queries, &file_config) {
        // A config file's explicit categories are kept unless the query
        // count was overridden on the command line.
        (None, Some(config)) => config.pairs.clone(),
        _ => spec.default_pairs(queries),
    };

    let mut eps_grid = parse_eps_grid(&args.eps_grid)?;
    if !eps_grid.iter().any(|e| (e - spec.eps0).abs() < 1e-12) {
        eps_grid.push(spec.eps0);
        eps_grid.sort_by(f64::total_cmp);
    }

    let mode = if args.split { SplitMode::Split } else { SplitMode::NoSplit };
    let config = EstimatorConfig::new(spec.eps0, args.c1, args.c2, args.c3, args.n)?
        .with_split_mode(mode);

    let t0 = Instant::now();
    cache.remez_abs(config.k())?;
    cache.h2k(config.k())?;
    eprintln!("phase poly-table: {:?}", t0.elapsed());

    let t1 = Instant::now();
    let report = run_audit(
        &spec, &pairs, &eps_grid, args.n, args.trials, args.seed, &config, bin_width, cache,
    )?;
    eprintln!("phase audit ({} mechanism draws expected): {:?}",
        (pairs.len() as f64 * eps_grid.len() as f64 * args.trials as f64 * 2.0 * args.n) as u64,
        t1.elapsed());

    let t2 = Instant::now();
    report.write_csv(BufWriter::new(File::create(&args.out)?))?;
    let cert_path = args.out.with_extension("cert");
    if report.certificate.is_some() {
        report.write_certificate(BufWriter::new(File::create(&cert_path)?))?;
    }
    eprintln!("phase report: {:?}", t2.elapsed());

    for flag in report.monotonicity_flags() {
        log::warn!("{flag}");
    }

    let record = report
        .delta_at(spec.eps0)
        .expect("claimed eps0 is always on the grid");
    println!(
        "{}: delta_hat({}) = {:.6} +/- {:.6} (claimed delta0 = {})",
        spec.kind.id(),
        spec.eps0,
        record.delta_hat,
        record.stderr,
        spec.claimed_delta()
    );
    if let Some(cert) = &report.certificate {
        println!(
            "certificate: {} symbols, margin {:.6} ({} / trial {}) -> {}",
            cert.symbols.len(),
            cert.margin,
            cert.category,
            cert.trial,
            cert_path.display()
        );
    }

    let violation = record.delta_hat > spec.claimed_delta() + 3.0 * record.stderr;
    if violation {
        println!(
            "VIOLATION: delta_hat exceeds the claimed delta0 by more than 3 standard errors"
        );
        Ok(EXIT_VIOLATION)
    } else {
        println!("no violation detected at the claimed budget");
        Ok(EXIT_OK)
    }
}

fn parse_dist(text: &str, s: usize) -> dpaudit_core::Result<Distribution> {
    if text == "uniform" {
        return Ok(Distribution::uniform(s));
    }
    if let Some(alpha) = text.strip_prefix("zipf:") {
        let alpha: f64 = alpha
            .parse()
            .map_err(|_| dpaudit_core::Error::Domain(format!("bad zipf exponent in '{text}'")))?;
        return Ok(Distribution::zipf(s, alpha));
    }
    Err(dpaudit_core::Error::Domain(format!(
        "unknown distribution '{text}', expected 'uniform' or 'zipf:<alpha>'"
    )))
}

fn cmd_synthetic_mse(args: SyntheticArgs, cache: &PolyCache) -> dpaudit_core::Result<i32> {
    let n_grid: Vec<f64> = args
        .n_grid
        .split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| dpaudit_core::Error::Domain(format!("bad n '{t}'")))
        })
        .collect::<dpaudit_core::Result<_>>()?;
    let p = Distribution::uniform(args.s);
    let q = parse_dist(&args.dist, args.s)?;
    let mode = if args.split { SplitMode::Split } else { SplitMode::NoSplit };
    let config = EstimatorConfig::new(args.eps, args.c1, args.c2, args.c3, n_grid[0])?
        .with_split_mode(mode);

    let t0 = Instant::now();
    let table = synthetic_mse(&p, &q, args.eps, &n_grid, args.trials, args.seed, &config, cache)?;
    eprintln!("phase sweep: {:?}", t0.elapsed());

    table.write_csv(BufWriter::new(File::create(&args.out)?))?;
    println!(
        "d_{}(P||Q) = {:.6}; plug-in log-log slope = {:.3}",
        args.eps,
        table.truth,
        table.plugin_log_slope()
    );
    for row in &table.rows {
        println!(
            "n = {:>10}: mse_plugin = {:.4e}, mse_minimax = {:.4e}",
            row.n, row.mse_plugin, row.mse_minimax
        );
    }
    Ok(EXIT_OK)
}

fn cmd_estimate(args: EstimateArgs, cache: &PolyCache) -> dpaudit_core::Result<i32> {
    let p_hist = EmpiricalHistogram::read_from(BufReader::new(File::open(&args.p_hist)?))?;
    let q_hist = EmpiricalHistogram::read_from(BufReader::new(File::open(&args.q_hist)?))?;
    if (p_hist.rate_n() - q_hist.rate_n()).abs() > 1e-9 * p_hist.rate_n() {
        return Err(dpaudit_core::Error::Domain(format!(
            "histogram rates differ: {} vs {}",
            p_hist.rate_n(),
            q_hist.rate_n()
        )));
    }
    let config = EstimatorConfig::new(args.eps, args.c1, args.c2, args.c3, p_hist.rate_n())?;
    let plugin = plugin_estimate(&p_hist, &q_hist, args.eps)?;
    let minimax = estimate(
        &SampleSplit::single(p_hist),
        &SampleSplit::single(q_hist),
        &config,
        cache,
    )?;
    println!("plug-in   d_{}(P||Q) = {plugin:.6}", args.eps);
    println!("minimax   d_{}(P||Q) = {minimax:.6}", args.eps);
    Ok(EXIT_OK)
}

fn cmd_poly_table(args: PolyTableArgs, cache: &PolyCache) -> dpaudit_core::Result<i32> {
    if args.k.is_empty() {
        return Err(dpaudit_core::Error::Domain("--k requires at least one degree".into()));
    }
    for &k in &args.k {
        if k > MAX_DEGREE {
            return Err(dpaudit_core::Error::Domain(format!(
                "degree {k} refused: monomial coefficients grow like B^K and lose all \
                 precision past K = {MAX_DEGREE} in double precision"
            )));
        }
        let t0 = Instant::now();
        let entries = cache.ensure_degree(k)?;
        for entry in entries {
            println!(
                "{:<16} K = {:>2}: sup_error = {:.6e}",
                entry.function_id, entry.degree, entry.sup_error
            );
        }
        if k >= 20 {
            let abs = cache.remez_abs(k)?;
            println!(
                "                 K * sup_error = {:.4} (Bernstein constant 0.2802)",
                k as f64 * abs.sup_error
            );
        }
        eprintln!("phase degree {k}: {:?}", t0.elapsed());
    }
    if let Some(path) = cache.path() {
        println!("coefficient table: {}", path.display());
    } else {
        println!("coefficient table kept in memory (pass --cache or set DPAUDIT_CACHE to persist)");
    }
    Ok(EXIT_OK)
}
