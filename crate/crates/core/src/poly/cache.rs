//! Persistent table of polynomial-approximation coefficients.
//!
//! Coefficients only depend on the degree (never on data or epsilon), so they
//! are computed once per degree and looked up afterwards. The table can be
//! backed by a versioned text file; reads restore bit-identical coefficients
//! because every value is written with 17 significant digits.
//!
//! File layout:
//!
//! ```text
//! polycache v1
//! abs,<K>,<i>,<coefficient>            # monomial basis on [-1, 1]
//! abs.cheb,<K>,<i>,<coefficient>       # Chebyshev basis
//! abs.sup,<K>,0,<sup_error>
//! sqrt_sum,<K>,<i>,<j>,<coefficient>   # monomial basis on [0, 1]^2
//! sqrt_sum.cheb,<K>,<i>,<j>,<coefficient>
//! sqrt_sum.sup,<K>,0,0,<sup_error>
//! relu_sqrt_diff[...], h2k[...]        # same shape as sqrt_sum
//! ```
//!
//! `h2k` rows are keyed by the factor degree `K`; the stored polynomial has
//! per-variable degree `2K`.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use crate::{Error, Result};

use super::bivariate::{cheb_bivariate, h2k_from_parts, BivariateTarget};
use super::{check_degree, remez_abs, BiPolyApprox, UniPolyApprox};

const VERSION_HEADER: &str = "polycache v1";

const ID_ABS: &str = "abs";
const ID_H2K: &str = "h2k";

#[derive(Default)]
struct State {
    uni: HashMap<(String, u32), Arc<UniPolyApprox>>,
    bi: HashMap<(String, u32), Arc<BiPolyApprox>>,
}

/// Coefficient cache; the first caller of a missing degree builds it while
/// other callers wait, after which the entry is immutable.
pub struct PolyCache {
    path: Option<PathBuf>,
    state: Mutex<State>,
}

/// Summary row for table listings.
#[derive(Debug, Clone)]
pub struct CacheEntry {
    pub function_id: String,
    pub degree: u32,
    pub sup_error: f64,
}

impl PolyCache {
    /// Cache with no file backing.
    pub fn in_memory() -> Self {
        Self {
            path: None,
            state: Mutex::new(State::default()),
        }
    }

    /// File-backed cache. An existing file is loaded when the version matches;
    /// any other content is discarded and regenerated on demand.
    pub fn with_file(path: impl Into<PathBuf>) -> Result<Self> {
        let path = path.into();
        let mut state = State::default();
        if path.exists() {
            match load_file(&path) {
                Ok(loaded) => state = loaded,
                Err(err) => {
                    log::warn!(
                        "discarding coefficient cache {}: {err}",
                        path.display()
                    );
                }
            }
        }
        Ok(Self {
            path: Some(path),
            state: Mutex::new(state),
        })
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    /// Minimax approximation of `|t|` on `[-1, 1]` at the given degree.
    pub fn remez_abs(&self, k: u32) -> Result<Arc<UniPolyApprox>> {
        check_degree(k)?;
        let mut state = self.state.lock().unwrap();
        if let Some(p) = state.uni.get(&(ID_ABS.to_string(), k)) {
            return Ok(Arc::clone(p));
        }
        let built = Arc::new(remez_abs(k)?);
        state
            .uni
            .insert((ID_ABS.to_string(), k), Arc::clone(&built));
        self.persist(&state)?;
        Ok(built)
    }

    /// Filtered Chebyshev approximation of one bivariate target.
    pub fn bivariate(&self, target: BivariateTarget, k: u32) -> Result<Arc<BiPolyApprox>> {
        check_degree(k)?;
        let mut state = self.state.lock().unwrap();
        self.bivariate_locked(&mut state, target, k)
    }

    fn bivariate_locked(
        &self,
        state: &mut State,
        target: BivariateTarget,
        k: u32,
    ) -> Result<Arc<BiPolyApprox>> {
        let key = (target.id().to_string(), k);
        if let Some(p) = state.bi.get(&key) {
            return Ok(Arc::clone(p));
        }
        let built = Arc::new(cheb_bivariate(target, k)?);
        state.bi.insert(key, Arc::clone(&built));
        self.persist(state)?;
        Ok(built)
    }

    /// Product approximation `h_2K` of `[x - y]^+`, keyed by factor degree.
    pub fn h2k(&self, k: u32) -> Result<Arc<BiPolyApprox>> {
        check_degree(k)?;
        let mut state = self.state.lock().unwrap();
        if let Some(p) = state.bi.get(&(ID_H2K.to_string(), k)) {
            return Ok(Arc::clone(p));
        }
        let u = self.bivariate_locked(&mut state, BivariateTarget::SqrtSum, k)?;
        let v = self.bivariate_locked(&mut state, BivariateTarget::ReluSqrtDiff, k)?;
        let built = Arc::new(h2k_from_parts(&u, &v)?);
        state
            .bi
            .insert((ID_H2K.to_string(), k), Arc::clone(&built));
        self.persist(&state)?;
        Ok(built)
    }

    /// Build every entry needed at degree `k`. Returns the summary rows.
    pub fn ensure_degree(&self, k: u32) -> Result<Vec<CacheEntry>> {
        self.remez_abs(k)?;
        self.h2k(k)?;
        Ok(self
            .entries()
            .into_iter()
            .filter(|e| e.degree == k)
            .collect())
    }

    pub fn entries(&self) -> Vec<CacheEntry> {
        let state = self.state.lock().unwrap();
        let mut out: Vec<CacheEntry> = state
            .uni
            .iter()
            .map(|((id, k), p)| CacheEntry {
                function_id: id.clone(),
                degree: *k,
                sup_error: p.sup_error,
            })
            .chain(state.bi.iter().map(|((id, k), p)| CacheEntry {
                function_id: id.clone(),
                degree: *k,
                sup_error: p.sup_error,
            }))
            .collect();
        out.sort_by(|a, b| (&a.function_id, a.degree).cmp(&(&b.function_id, b.degree)));
        out
    }

    fn persist(&self, state: &State) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        let body = render(state);
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, body)?;
        fs::rename(&tmp, path)?;
        Ok(())
    }
}

fn fmt_row_uni(out: &mut String, id: &str, k: u32, coeffs: &[f64]) {
    for (i, c) in coeffs.iter().enumerate() {
        out.push_str(&format!("{id},{k},{i},{c:.17e}\n"));
    }
}

fn fmt_row_bi(out: &mut String, id: &str, k: u32, coeffs: &[Vec<f64>]) {
    for (i, row) in coeffs.iter().enumerate() {
        for (j, c) in row.iter().enumerate() {
            out.push_str(&format!("{id},{k},{i},{j},{c:.17e}\n"));
        }
    }
}

fn render(state: &State) -> String {
    let mut out = String::from(VERSION_HEADER);
    out.push('\n');

    let uni: BTreeMap<(String, u32), &Arc<UniPolyApprox>> = state
        .uni
        .iter()
        .map(|((id, k), p)| ((id.clone(), *k), p))
        .collect();
    for ((id, k), p) in uni {
        fmt_row_uni(&mut out, &id, k, &p.coeffs);
        fmt_row_uni(&mut out, &format!("{id}.cheb"), k, &p.cheb);
        out.push_str(&format!("{id}.sup,{k},0,{:.17e}\n", p.sup_error));
    }

    let bi: BTreeMap<(String, u32), &Arc<BiPolyApprox>> = state
        .bi
        .iter()
        .map(|((id, k), p)| ((id.clone(), *k), p))
        .collect();
    for ((id, k), p) in bi {
        fmt_row_bi(&mut out, &id, k, &p.coeffs);
        fmt_row_bi(&mut out, &format!("{id}.cheb"), k, &p.cheb);
        out.push_str(&format!("{id}.sup,{k},0,0,{:.17e}\n", p.sup_error));
    }
    out
}

#[derive(Default)]
struct PendingUni {
    mono: BTreeMap<usize, f64>,
    cheb: BTreeMap<usize, f64>,
    sup: Option<f64>,
}

#[derive(Default)]
struct PendingBi {
    mono: BTreeMap<(usize, usize), f64>,
    cheb: BTreeMap<(usize, usize), f64>,
    sup: Option<f64>,
}

fn load_file(path: &Path) -> Result<State> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == VERSION_HEADER => {}
        other => {
            return Err(Error::Cache(format!(
                "version mismatch: expected '{VERSION_HEADER}', found '{}'",
                other.unwrap_or("<empty>")
            )))
        }
    }

    let mut uni: HashMap<(String, u32), PendingUni> = HashMap::new();
    let mut bi: HashMap<(String, u32), PendingBi> = HashMap::new();

    for (lineno, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let bad = |what: &str| Error::Cache(format!("line {}: {what}: '{line}'", lineno + 2));
        if fields.len() != 4 && fields.len() != 5 {
            return Err(bad("expected 4 or 5 fields"));
        }
        let full_id = fields[0];
        let k: u32 = fields[1].parse().map_err(|_| bad("bad degree"))?;
        let value: f64 = fields[fields.len() - 1]
            .parse()
            .map_err(|_| bad("bad coefficient"))?;
        let (base, kind) = match full_id.rsplit_once('.') {
            Some((base, kind)) => (base, kind),
            None => (full_id, "mono"),
        };
        if fields.len() == 4 {
            let i: usize = fields[2].parse().map_err(|_| bad("bad index"))?;
            let entry = uni.entry((base.to_string(), k)).or_default();
            match kind {
                "mono" => {
                    entry.mono.insert(i, value);
                }
                "cheb" => {
                    entry.cheb.insert(i, value);
                }
                "sup" => entry.sup = Some(value),
                _ => return Err(bad("unknown row kind")),
            }
        } else {
            let i: usize = fields[2].parse().map_err(|_| bad("bad index"))?;
            let j: usize = fields[3].parse().map_err(|_| bad("bad index"))?;
            let entry = bi.entry((base.to_string(), k)).or_default();
            match kind {
                "mono" => {
                    entry.mono.insert((i, j), value);
                }
                "cheb" => {
                    entry.cheb.insert((i, j), value);
                }
                "sup" => entry.sup = Some(value),
                _ => return Err(bad("unknown row kind")),
            }
        }
    }

    let mut state = State::default();
    for ((id, k), pending) in uni {
        if id != ID_ABS {
            return Err(Error::Cache(format!("unknown univariate id '{id}'")));
        }
        let size = k as usize + 1;
        let mut coeffs = vec![0.0; size];
        let mut cheb = vec![0.0; size];
        for (i, c) in pending.mono {
            *coeffs
                .get_mut(i)
                .ok_or_else(|| Error::Cache(format!("{id},{k}: index {i} out of range")))? = c;
        }
        for (i, c) in pending.cheb {
            *cheb
                .get_mut(i)
                .ok_or_else(|| Error::Cache(format!("{id},{k}: index {i} out of range")))? = c;
        }
        let sup_error = pending
            .sup
            .ok_or_else(|| Error::Cache(format!("{id},{k}: missing sup row")))?;
        state.uni.insert(
            (id, k),
            Arc::new(UniPolyApprox {
                degree: k,
                coeffs,
                cheb,
                interval: [-1.0, 1.0],
                sup_error,
            }),
        );
    }
    for ((id, k), pending) in bi {
        if id != ID_H2K {
            BivariateTarget::from_id(&id).map_err(|_| Error::Cache(format!("unknown id '{id}'")))?;
        }
        let per_var = if id == ID_H2K { 2 * k } else { k } as usize;
        let mut coeffs = vec![vec![0.0; per_var + 1]; per_var + 1];
        let mut cheb = vec![vec![0.0; per_var + 1]; per_var + 1];
        for ((i, j), c) in pending.mono {
            *coeffs
                .get_mut(i)
                .and_then(|row| row.get_mut(j))
                .ok_or_else(|| Error::Cache(format!("{id},{k}: index ({i},{j}) out of range")))? = c;
        }
        for ((i, j), c) in pending.cheb {
            *cheb
                .get_mut(i)
                .and_then(|row| row.get_mut(j))
                .ok_or_else(|| Error::Cache(format!("{id},{k}: index ({i},{j}) out of range")))? = c;
        }
        let sup_error = pending
            .sup
            .ok_or_else(|| Error::Cache(format!("{id},{k}: missing sup row")))?;
        state.bi.insert(
            (id, k),
            Arc::new(BiPolyApprox {
                degree: per_var as u32,
                coeffs,
                cheb,
                sup_error,
            }),
        );
    }
    Ok(state)
}
