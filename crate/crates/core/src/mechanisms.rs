//! The auditable mechanism zoo: correct mechanisms, published broken
//! variants, and the symbol dictionaries that map raw outputs onto the dense
//! alphabet the estimators work with.
//!
//! Query answers come from fixed neighboring-database categories; each audit
//! composes the `m` per-query answers into one giant query, so a mechanism
//! output is a single raw value (an index, a real, a vector, or a count)
//! symbolized whole under a dictionary shared by both databases.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::{Error, Result};

/// Neighboring-database categories; the entries are the true answers of the
/// composed queries on `D` (all ones) and on `D'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    OneAbove,
    OneBelow,
    OneAboveRestBelow,
    OneBelowRestAbove,
    HalfHalf,
    AllAboveAllBelow,
    XShape,
}

impl Category {
    pub const ALL: [Category; 7] = [
        Category::OneAbove,
        Category::OneBelow,
        Category::OneAboveRestBelow,
        Category::OneBelowRestAbove,
        Category::HalfHalf,
        Category::AllAboveAllBelow,
        Category::XShape,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Category::OneAbove => "one-above",
            Category::OneBelow => "one-below",
            Category::OneAboveRestBelow => "one-above-rest-below",
            Category::OneBelowRestAbove => "one-below-rest-above",
            Category::HalfHalf => "half-half",
            Category::AllAboveAllBelow => "all-above-all-below",
            Category::XShape => "x-shape",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        Category::ALL
            .into_iter()
            .find(|c| c.name() == name)
            .ok_or_else(|| Error::Domain(format!("unknown category '{name}'")))
    }

    /// True answers `(Q(D), Q(D'))` for `m` composed queries; the 5-query
    /// shapes generalize proportionally.
    pub fn answers(&self, m: usize) -> (Vec<i64>, Vec<i64>) {
        assert!(m >= 1);
        let d = vec![1i64; m];
        let dprime = match self {
            Category::OneAbove => {
                let mut v = vec![1; m];
                v[0] = 2;
                v
            }
            Category::OneBelow => {
                let mut v = vec![1; m];
                v[0] = 0;
                v
            }
            Category::OneAboveRestBelow => {
                let mut v = vec![0; m];
                v[0] = 2;
                v
            }
            Category::OneBelowRestAbove => {
                let mut v = vec![2; m];
                v[0] = 0;
                v
            }
            Category::HalfHalf => {
                let zeros = m.div_ceil(2);
                let mut v = vec![2; m];
                v[..zeros].fill(0);
                v
            }
            Category::AllAboveAllBelow => vec![2; m],
            Category::XShape => {
                let zeros = m / 2;
                let mut v = vec![1; m];
                v[..zeros].fill(0);
                v
            }
        };
        (d, dprime)
    }
}

/// A concrete query/database pair to audit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QueryDatabasePair {
    pub category: String,
    pub answers_d: Vec<i64>,
    pub answers_dprime: Vec<i64>,
}

impl QueryDatabasePair {
    pub fn new(category: impl Into<String>, answers_d: Vec<i64>, answers_dprime: Vec<i64>) -> Result<Self> {
        if answers_d.is_empty() || answers_d.len() != answers_dprime.len() {
            return Err(Error::Domain(
                "query answer vectors must be non-empty and equally long".into(),
            ));
        }
        Ok(Self {
            category: category.into(),
            answers_d,
            answers_dprime,
        })
    }

    pub fn from_category(category: Category, m: usize) -> Self {
        let (answers_d, answers_dprime) = category.answers(m);
        Self {
            category: category.name().to_string(),
            answers_d,
            answers_dprime,
        }
    }

    /// Single counting query with adjacent answers, for the truncated
    /// geometric mechanisms.
    pub fn counting(a: i64, a_prime: i64) -> Self {
        Self {
            category: format!("counting-{a}-vs-{a_prime}"),
            answers_d: vec![a],
            answers_dprime: vec![a_prime],
        }
    }

    pub fn query_count(&self) -> usize {
        self.answers_d.len()
    }

    /// Histogram-query neighbors may differ in at most one coordinate, by at
    /// most one.
    pub fn histogram_compatible(&self) -> bool {
        let mut changed = 0;
        for (a, b) in self.answers_d.iter().zip(&self.answers_dprime) {
            if a != b {
                changed += 1;
                if (a - b).abs() > 1 {
                    return false;
                }
            }
        }
        changed <= 1
    }

    pub fn answers(&self, side: Side) -> &[i64] {
        match side {
            Side::D => &self.answers_d,
            Side::Dprime => &self.answers_dprime,
        }
    }
}

/// Which database of the pair is being queried.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    D,
    Dprime,
}

/// Mechanisms in the zoo; the `Isvt*` entries and the wrong-noise histogram
/// are deliberately faulty published variants.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MechanismKind {
    RnaLap,
    RnaExp,
    RnmLap,
    RnmExp,
    Histogram,
    HistogramWrongNoise,
    Svt,
    Isvt1,
    Isvt2,
    Isvt3,
    Tgm,
    Mtgm,
}

impl MechanismKind {
    pub const ALL: [MechanismKind; 12] = [
        MechanismKind::RnaLap,
        MechanismKind::RnaExp,
        MechanismKind::RnmLap,
        MechanismKind::RnmExp,
        MechanismKind::Histogram,
        MechanismKind::HistogramWrongNoise,
        MechanismKind::Svt,
        MechanismKind::Isvt1,
        MechanismKind::Isvt2,
        MechanismKind::Isvt3,
        MechanismKind::Tgm,
        MechanismKind::Mtgm,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            MechanismKind::RnaLap => "rna-lap",
            MechanismKind::RnaExp => "rna-exp",
            MechanismKind::RnmLap => "rnm-lap",
            MechanismKind::RnmExp => "rnm-exp",
            MechanismKind::Histogram => "histogram",
            MechanismKind::HistogramWrongNoise => "histogram-wrong-noise",
            MechanismKind::Svt => "svt",
            MechanismKind::Isvt1 => "isvt1",
            MechanismKind::Isvt2 => "isvt2",
            MechanismKind::Isvt3 => "isvt3",
            MechanismKind::Tgm => "tgm",
            MechanismKind::Mtgm => "mtgm",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        MechanismKind::ALL
            .into_iter()
            .find(|k| k.id() == id)
            .ok_or_else(|| Error::Domain(format!("unknown mechanism '{id}'")))
    }
}

/// A mechanism plus its claimed privacy parameters.
#[derive(Debug, Clone, Copy)]
pub struct MechanismSpec {
    pub kind: MechanismKind,
    /// Claimed privacy budget.
    pub eps0: f64,
    /// Claimed failure probability; only the geometric mixture claims a
    /// non-zero one.
    pub delta0: f64,
    /// Bound on the number of trues for the SVT family.
    pub bound: u32,
    /// Threshold the SVT family compares against.
    pub threshold: f64,
}

impl MechanismSpec {
    pub fn new(kind: MechanismKind, eps0: f64) -> Result<Self> {
        if !(eps0 > 0.0) {
            return Err(Error::Domain(format!("privacy budget must be > 0, got {eps0}")));
        }
        Ok(Self {
            kind,
            eps0,
            delta0: 0.0,
            bound: 1,
            threshold: 1.0,
        })
    }

    pub fn with_delta0(mut self, delta0: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&delta0) {
            return Err(Error::Domain(format!("delta0 must be in [0, 1], got {delta0}")));
        }
        self.delta0 = delta0;
        Ok(self)
    }

    pub fn with_bound(mut self, bound: u32) -> Result<Self> {
        if bound < 1 {
            return Err(Error::Domain("bound must be >= 1".into()));
        }
        self.bound = bound;
        Ok(self)
    }

    pub fn with_threshold(mut self, threshold: f64) -> Self {
        self.threshold = threshold;
        self
    }

    /// The `(eps0, delta)` the mechanism claims to satisfy.
    pub fn claimed_delta(&self) -> f64 {
        match self.kind {
            MechanismKind::Mtgm => self.delta0,
            _ => 0.0,
        }
    }

    /// Default discretization width for continuous outputs. Scalar outputs
    /// resolve the noise scale at 0.1; the m-dimensional histogram outputs
    /// need coarser bins to keep the product alphabet well below the sample
    /// budget (at 0.1 every 5-tuple is distinct and the audit degenerates).
    pub fn default_bin_width(&self) -> f64 {
        match self.kind {
            MechanismKind::Histogram | MechanismKind::HistogramWrongNoise => 2.0,
            _ => DEFAULT_BIN_WIDTH,
        }
    }

    /// Database pairs this mechanism is audited on by default.
    pub fn default_pairs(&self, m: usize) -> Vec<QueryDatabasePair> {
        match self.kind {
            MechanismKind::Histogram | MechanismKind::HistogramWrongNoise => vec![
                QueryDatabasePair::from_category(Category::OneAbove, m),
                QueryDatabasePair::from_category(Category::OneBelow, m),
            ],
            MechanismKind::Tgm | MechanismKind::Mtgm => vec![QueryDatabasePair::counting(1, 2)],
            _ => Category::ALL
                .into_iter()
                .map(|c| QueryDatabasePair::from_category(c, m))
                .collect(),
        }
    }

    /// Check that the pair's shape is one this mechanism can be audited on.
    pub fn validate_pair(&self, pair: &QueryDatabasePair) -> Result<()> {
        match self.kind {
            MechanismKind::Histogram | MechanismKind::HistogramWrongNoise => {
                if !pair.histogram_compatible() {
                    return Err(Error::Domain(format!(
                        "histogram mechanisms require neighbors differing in at most one \
                         coordinate by at most 1; category '{}' does not qualify",
                        pair.category
                    )));
                }
            }
            MechanismKind::Tgm | MechanismKind::Mtgm => {
                if pair.query_count() != 1 {
                    return Err(Error::Domain(
                        "truncated geometric mechanisms take a single counting query".into(),
                    ));
                }
            }
            _ => {}
        }
        Ok(())
    }
}

/// One raw mechanism output before symbolization.
#[derive(Debug, Clone, PartialEq)]
pub enum RawOutput {
    Index(u32),
    Real(f64),
    RealVector(Vec<f64>),
    BoolVector(Vec<bool>),
    Count(u8),
}

fn exponential(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    let u: f64 = rng.gen();
    -scale * (1.0 - u).ln()
}

fn laplace(rng: &mut ChaCha8Rng, scale: f64) -> f64 {
    exponential(rng, scale) - exponential(rng, scale)
}

fn argmax_lowest_index(values: &[f64]) -> u32 {
    let mut best = 0usize;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best as u32
}

/// Threshold/query noise scales of the SVT family, as `(rho, nu)` Laplace
/// scales; `None` means no query noise at all.
pub(crate) fn svt_scales(kind: MechanismKind, eps0: f64, bound: u32) -> (f64, Option<f64>) {
    match kind {
        // Correct budget split: half on the threshold, half across the up to
        // `bound` positive answers (gap sensitivity 2).
        MechanismKind::Svt => (2.0 / eps0, Some(4.0 * bound as f64 / eps0)),
        // Broken variants: no query noise / no bound / noise that ignores
        // the bound (the latter is ((1+6N)/4) eps0-DP instead of eps0-DP).
        MechanismKind::Isvt1 => (2.0 / eps0, None),
        MechanismKind::Isvt2 => (2.0 / eps0, Some(2.0 / eps0)),
        MechanismKind::Isvt3 => (4.0 / eps0, Some(4.0 / (3.0 * eps0))),
        _ => unreachable!("not an SVT variant"),
    }
}

fn run_svt(
    answers: &[i64],
    threshold: f64,
    rho_scale: f64,
    nu_scale: Option<f64>,
    bound: Option<u32>,
    rng: &mut ChaCha8Rng,
) -> Vec<bool> {
    let noisy_threshold = threshold + laplace(rng, rho_scale);
    let mut out = Vec::with_capacity(answers.len());
    let mut trues = 0u32;
    for &a in answers {
        let noisy = a as f64
            + match nu_scale {
                Some(scale) => laplace(rng, scale),
                None => 0.0,
            };
        let hit = noisy >= noisy_threshold;
        out.push(hit);
        if hit {
            trues += 1;
            if let Some(b) = bound {
                if trues >= b {
                    break;
                }
            }
        }
    }
    out
}

/// Output range of the truncated geometric mechanisms.
pub const TGM_RANGE: (i64, i64) = (0, 3);

/// Exact output pmf of the truncated geometric mechanism on the counting
/// answer `answer`, over `{lo, .., hi}`: two-sided geometric noise with ratio
/// `e^-eps0`, with out-of-range mass folded onto the boundaries.
pub fn tgm_pmf(answer: i64, eps0: f64, lo: i64, hi: i64) -> Vec<f64> {
    assert!(hi > lo && eps0 > 0.0);
    let a = answer.clamp(lo, hi);
    let alpha = (-eps0).exp();
    let size = (hi - lo + 1) as usize;
    let mut pmf = vec![0.0; size];
    for (idx, slot) in pmf.iter_mut().enumerate() {
        let k = lo + idx as i64;
        *slot = if k == lo {
            alpha.powi((a - lo) as i32) / (1.0 + alpha)
        } else if k == hi {
            alpha.powi((hi - a) as i32) / (1.0 + alpha)
        } else {
            (1.0 - alpha) / (1.0 + alpha) * alpha.powi((k - a).abs() as i32)
        };
    }
    pmf
}

/// Exact output pmf of the mixture: truth with probability `delta0`,
/// truncated geometric otherwise.
pub fn mtgm_pmf(answer: i64, eps0: f64, delta0: f64, lo: i64, hi: i64) -> Vec<f64> {
    let a = answer.clamp(lo, hi);
    let mut pmf: Vec<f64> = tgm_pmf(answer, eps0, lo, hi)
        .into_iter()
        .map(|p| (1.0 - delta0) * p)
        .collect();
    pmf[(a - lo) as usize] += delta0;
    pmf
}

fn sample_from_pmf(pmf: &[f64], rng: &mut ChaCha8Rng) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &p) in pmf.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    pmf.len() - 1
}

/// One draw of the mechanism output on the chosen database side.
pub fn sample_mechanism(
    spec: &MechanismSpec,
    pair: &QueryDatabasePair,
    side: Side,
    rng: &mut ChaCha8Rng,
) -> Result<RawOutput> {
    spec.validate_pair(pair)?;
    Ok(draw_output(spec, pair, side, rng))
}

/// Sampling core without the pair-shape validation; callers validate once
/// before tight loops.
pub(crate) fn draw_output(
    spec: &MechanismSpec,
    pair: &QueryDatabasePair,
    side: Side,
    rng: &mut ChaCha8Rng,
) -> RawOutput {
    let answers = pair.answers(side);
    let out = match spec.kind {
        MechanismKind::RnaLap | MechanismKind::RnaExp | MechanismKind::RnmLap
        | MechanismKind::RnmExp => {
            let scale = 2.0 / spec.eps0;
            let noisy: Vec<f64> = answers
                .iter()
                .map(|&a| {
                    a as f64
                        + match spec.kind {
                            MechanismKind::RnaLap | MechanismKind::RnmLap => laplace(rng, scale),
                            _ => exponential(rng, scale),
                        }
                })
                .collect();
            match spec.kind {
                MechanismKind::RnaLap | MechanismKind::RnaExp => {
                    RawOutput::Index(argmax_lowest_index(&noisy))
                }
                _ => RawOutput::Real(noisy.iter().copied().fold(f64::NEG_INFINITY, f64::max)),
            }
        }
        MechanismKind::Histogram | MechanismKind::HistogramWrongNoise => {
            let scale = match spec.kind {
                MechanismKind::Histogram => 1.0 / spec.eps0,
                _ => spec.eps0,
            };
            RawOutput::RealVector(
                answers
                    .iter()
                    .map(|&a| a as f64 + laplace(rng, scale))
                    .collect(),
            )
        }
        MechanismKind::Svt | MechanismKind::Isvt1 | MechanismKind::Isvt2 | MechanismKind::Isvt3 => {
            let (rho, nu) = svt_scales(spec.kind, spec.eps0, spec.bound);
            let bound = match spec.kind {
                MechanismKind::Svt | MechanismKind::Isvt3 => Some(spec.bound),
                _ => None,
            };
            RawOutput::BoolVector(run_svt(answers, spec.threshold, rho, nu, bound, rng))
        }
        MechanismKind::Tgm => {
            let (lo, hi) = TGM_RANGE;
            let pmf = tgm_pmf(answers[0], spec.eps0, lo, hi);
            RawOutput::Count((lo + sample_from_pmf(&pmf, rng) as i64) as u8)
        }
        MechanismKind::Mtgm => {
            let (lo, hi) = TGM_RANGE;
            if rng.gen::<f64>() < spec.delta0 {
                RawOutput::Count(answers[0].clamp(lo, hi) as u8)
            } else {
                let pmf = tgm_pmf(answers[0], spec.eps0, lo, hi);
                RawOutput::Count((lo + sample_from_pmf(&pmf, rng) as i64) as u8)
            }
        }
    };
    out
}

/// Canonical hashable form of a raw output after binning.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum SymbolKey {
    Index(u32),
    Bin(i64),
    BinVector(Vec<i64>),
    Bools(Vec<bool>),
    Count(u8),
}

/// Bidirectional map from raw outputs to dense symbol ids.
///
/// Continuous outputs are binned at a fixed width anchored at zero before
/// lookup; the dictionary must be shared across both databases of an audit
/// so that identical outputs get identical ids.
#[derive(Debug, Clone)]
pub struct SymbolDictionary {
    bin_width: f64,
    ids: HashMap<SymbolKey, u32>,
    keys: Vec<SymbolKey>,
}

/// Default bin width for continuous outputs: resolves the Laplace scales in
/// play while keeping alphabets small against n = 1e5.
pub const DEFAULT_BIN_WIDTH: f64 = 0.1;

impl SymbolDictionary {
    pub fn new(bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0) {
            return Err(Error::Domain(format!("bin width must be > 0, got {bin_width}")));
        }
        Ok(Self {
            bin_width,
            ids: HashMap::new(),
            keys: Vec::new(),
        })
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    fn bin(&self, x: f64) -> i64 {
        (x / self.bin_width).floor() as i64
    }

    fn canonical(&self, raw: &RawOutput) -> SymbolKey {
        match raw {
            RawOutput::Index(i) => SymbolKey::Index(*i),
            RawOutput::Real(x) => SymbolKey::Bin(self.bin(*x)),
            RawOutput::RealVector(v) => SymbolKey::BinVector(v.iter().map(|&x| self.bin(x)).collect()),
            RawOutput::BoolVector(v) => SymbolKey::Bools(v.clone()),
            RawOutput::Count(c) => SymbolKey::Count(*c),
        }
    }

    /// Id for a raw output, assigning the next dense id on first sight.
    pub fn intern(&mut self, raw: &RawOutput) -> u32 {
        let key = self.canonical(raw);
        if let Some(&id) = self.ids.get(&key) {
            return id;
        }
        let id = self.keys.len() as u32;
        self.ids.insert(key.clone(), id);
        self.keys.push(key);
        id
    }

    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn key(&self, id: u32) -> Option<&SymbolKey> {
        self.keys.get(id as usize)
    }
}

/// Key-value mechanism configuration, one `key = value` pair per line.
/// `#` starts a comment. Recognized keys: `kind`, `eps0`, `delta0`, `bound`,
/// `threshold`, `queries`, `bin-width`, `categories` (comma-separated names).
#[derive(Debug, Clone)]
pub struct MechanismConfig {
    pub spec: MechanismSpec,
    pub queries: usize,
    pub bin_width: f64,
    pub pairs: Vec<QueryDatabasePair>,
}

impl MechanismConfig {
    pub fn from_str(text: &str) -> Result<Self> {
        let mut fields: HashMap<&str, &str> = HashMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Domain(format!("config line {}: expected 'key = value'", lineno + 1))
            })?;
            fields.insert(key.trim(), value.trim());
        }
        let kind = MechanismKind::from_id(
            fields
                .get("kind")
                .ok_or_else(|| Error::Domain("config is missing 'kind'".into()))?,
        )?;
        let parse_f64 = |key: &str, default: f64| -> Result<f64> {
            fields
                .get(key)
                .map(|v| {
                    v.parse::<f64>()
                        .map_err(|e| Error::Domain(format!("bad '{key}': {e}")))
                })
                .unwrap_or(Ok(default))
        };
        let eps0 = parse_f64("eps0", 0.5)?;
        let mut spec = MechanismSpec::new(kind, eps0)?
            .with_delta0(parse_f64("delta0", 0.0)?)?
            .with_threshold(parse_f64("threshold", 1.0)?);
        if let Some(bound) = fields.get("bound") {
            spec = spec.with_bound(
                bound
                    .parse()
                    .map_err(|e| Error::Domain(format!("bad 'bound': {e}")))?,
            )?;
        }
        let queries = fields
            .get("queries")
            .map(|v| v.parse::<usize>().map_err(|e| Error::Domain(format!("bad 'queries': {e}"))))
            .unwrap_or(Ok(5))?;
        if queries != 5 && queries != 10 {
            return Err(Error::Domain(format!("queries must be 5 or 10, got {queries}")));
        }
        let bin_width = parse_f64("bin-width", spec.default_bin_width())?;
        let pairs = match fields.get("categories") {
            None => spec.default_pairs(queries),
            Some(list) => list
                .split(',')
                .map(|name| Ok(QueryDatabasePair::from_category(Category::from_name(name.trim())?, queries)))
                .collect::<Result<Vec<_>>>()?,
        };
        Ok(Self {
            spec,
            queries,
            bin_width,
            pairs,
        })
    }
}
