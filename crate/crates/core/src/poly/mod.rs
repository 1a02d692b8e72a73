//! Best (and near-best) polynomial approximations backing the estimators.
//!
//! Three families are needed:
//!
//! - `R_K`: the minimax polynomial for `|t|` on `[-1, 1]` (Remez exchange),
//!   whose coefficients `r_j` drive the order-K moment corrections;
//! - `H_K`: the minimax polynomial for a shifted ReLU `[b - y]^+` on
//!   `[0, 1]`, used when the known reference mass sits inside the sampling
//!   box;
//! - `u_K, v_K`: lowpass-filtered tensor Chebyshev approximations of
//!   `sqrt(x) + sqrt(y)` and `[sqrt(x) - sqrt(y)]^+` on `[0, 1]^2`, combined
//!   into `h_2K(x, y) = u_K v_K - u_K(0,0) v_K(0,0)` which approximates
//!   `[x - y]^+` with the bias profile the two-sample estimator needs.
//!
//! Every approximation is stored twice: in the Chebyshev basis of its domain
//! (numerically stable, used for evaluation and error measurement) and in the
//! monomial basis (required by the unbiased moment estimators, which replace
//! each monomial `x^j` by a factorial product). Monomial coefficients grow
//! like `B^K`, which is why degrees above [`MAX_DEGREE`] are rejected.

mod bivariate;
pub mod cache;
mod remez;

pub use bivariate::{cheb_bivariate, h2k, BivariateTarget};
pub use cache::PolyCache;

use crate::{Error, Result};

/// Hard cap on approximation degree; beyond this the monomial-basis
/// coefficients exceed what double precision can usefully cancel.
pub const MAX_DEGREE: u32 = 60;

pub(crate) fn check_degree(k: u32) -> Result<()> {
    if k > MAX_DEGREE {
        return Err(Error::Domain(format!(
            "degree {k} exceeds the numerical-stability cap of {MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// Warn once the stored coefficients pass the theoretical magnitude scale
/// `(sqrt(2) + 1)^(8K)` from the coefficient-bound argument.
fn warn_on_blowup(what: &str, k: u32, max_coeff: f64) {
    let scale = (std::f64::consts::SQRT_2 + 1.0).powi(8 * k as i32);
    if max_coeff > scale {
        log::warn!(
            "{what} at degree {k}: max |coefficient| = {max_coeff:.3e} exceeds the \
             (sqrt(2)+1)^(8K) = {scale:.3e} blow-up scale; results may lose precision"
        );
    }
}

/// Clenshaw evaluation of a Chebyshev series on `[-1, 1]`.
pub(crate) fn clenshaw(coeffs: &[f64], t: f64) -> f64 {
    if coeffs.is_empty() {
        return 0.0;
    }
    if coeffs.len() == 1 {
        return coeffs[0];
    }
    let mut b2 = 0.0;
    let mut b1 = coeffs[coeffs.len() - 1];
    let two_t = 2.0 * t;
    for &c in coeffs[1..coeffs.len() - 1].iter().rev() {
        let tmp = two_t * b1 - b2 + c;
        b2 = b1;
        b1 = tmp;
    }
    t * b1 - b2 + coeffs[0]
}

/// Monomial coefficient rows of the shifted Chebyshev polynomials
/// `T*_k(y) = T_k(2y - 1)` on `[0, 1]`, for `k = 0..=degree`.
pub(crate) fn shifted_cheb_monomial_table(degree: u32) -> Vec<Vec<f64>> {
    let deg = degree as usize;
    let mut table: Vec<Vec<f64>> = Vec::with_capacity(deg + 1);
    table.push(vec![1.0]);
    if deg == 0 {
        return table;
    }
    table.push(vec![-1.0, 2.0]);
    for k in 2..=deg {
        // T*_{k} = (4y - 2) T*_{k-1} - T*_{k-2}
        let mut next = vec![0.0; k + 1];
        for (i, &c) in table[k - 1].iter().enumerate() {
            next[i + 1] += 4.0 * c;
            next[i] -= 2.0 * c;
        }
        for (i, &c) in table[k - 2].iter().enumerate() {
            next[i] -= c;
        }
        table.push(next);
    }
    table
}

/// A univariate polynomial approximation on a stated interval.
///
/// `coeffs` are monomial-basis coefficients in the interval variable (what
/// the unbiased estimators consume); `cheb` is the same polynomial in the
/// Chebyshev basis of the interval (what evaluation uses).
#[derive(Debug, Clone, PartialEq)]
pub struct UniPolyApprox {
    pub degree: u32,
    pub coeffs: Vec<f64>,
    pub cheb: Vec<f64>,
    pub interval: [f64; 2],
    pub sup_error: f64,
}

impl UniPolyApprox {
    /// Numerically stable evaluation via Clenshaw on the Chebyshev form.
    pub fn eval(&self, x: f64) -> f64 {
        let [lo, hi] = self.interval;
        let t = (2.0 * x - lo - hi) / (hi - lo);
        clenshaw(&self.cheb, t)
    }

    /// Horner evaluation of the monomial form; exposed so tests can quantify
    /// the cancellation gap against [`Self::eval`].
    pub fn eval_monomial(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }
}

/// A bivariate polynomial approximation on `[0, 1]^2` with per-variable
/// degree `degree`; `coeffs[i][j]` multiplies `x^i y^j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BiPolyApprox {
    pub degree: u32,
    pub coeffs: Vec<Vec<f64>>,
    pub cheb: Vec<Vec<f64>>,
    pub sup_error: f64,
}

impl BiPolyApprox {
    pub fn coeff(&self, i: usize, j: usize) -> f64 {
        self.coeffs
            .get(i)
            .and_then(|row| row.get(j))
            .copied()
            .unwrap_or(0.0)
    }

    /// Stable evaluation via nested Clenshaw on the tensor Chebyshev form.
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        let tx = 2.0 * x - 1.0;
        let ty = 2.0 * y - 1.0;
        let inner: Vec<f64> = self.cheb.iter().map(|row| clenshaw(row, ty)).collect();
        clenshaw(&inner, tx)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs
            .iter()
            .flatten()
            .fold(0.0_f64, |m, &c| m.max(c.abs()))
    }
}

/// Minimax polynomial of degree at most `k` for `|t|` on `[-1, 1]`.
///
/// Exploits evenness: the best degree-`2m` (and `2m+1`) approximation of
/// `|t|` is `S_m(t^2)` where `S_m` is the minimax approximation of
/// `sqrt(s)` on `[0, 1]`, so the exchange runs on the half-degree problem.
/// Odd monomial coefficients are exactly zero.
pub fn remez_abs(k: u32) -> Result<UniPolyApprox> {
    check_degree(k)?;
    let m = k / 2;
    let outcome = remez::remez(&|s: f64| s.sqrt(), 0.0, 1.0, m, &[])?;

    // S_m in the shifted Chebyshev basis on [0,1]; T*_j(t^2) = T_{2j}(t),
    // so the Chebyshev form of R_k on [-1,1] is direct.
    let mut cheb = vec![0.0; k as usize + 1];
    for (j, &c) in outcome.cheb.iter().enumerate() {
        cheb[2 * j] = c;
    }

    // Monomial form: expand S_m's shifted Chebyshev basis, then map s -> t^2.
    let table = shifted_cheb_monomial_table(m);
    let mut mono_s = vec![0.0; m as usize + 1];
    for (j, &c) in outcome.cheb.iter().enumerate() {
        for (i, &t) in table[j].iter().enumerate() {
            mono_s[i] += c * t;
        }
    }
    let mut coeffs = vec![0.0; k as usize + 1];
    for (i, &c) in mono_s.iter().enumerate() {
        coeffs[2 * i] = c;
    }

    warn_on_blowup("remez_abs", k, coeffs.iter().fold(0.0_f64, |a, &c| a.max(c.abs())));
    Ok(UniPolyApprox {
        degree: k,
        coeffs,
        cheb,
        interval: [-1.0, 1.0],
        sup_error: outcome.levelled_error,
    })
}

/// Minimax polynomial of degree at most `k` for the shifted ReLU
/// `[b - y]^+` on `[0, 1]`, with the kink at `b`.
///
/// Built from the identity `[c]^+ = (c + |c|) / 2`: the non-trivial part is
/// a Remez approximation of `|y - b|`, to which the exact affine part is
/// added.
pub fn shifted_relu_approx(b: f64, k: u32) -> Result<UniPolyApprox> {
    check_degree(k)?;
    if !(0.0..=1.0).contains(&b) {
        return Err(Error::Domain(format!("kink location must be in [0, 1], got {b}")));
    }

    const BOUNDARY: f64 = 1e-9;
    if b <= BOUNDARY || b >= 1.0 - BOUNDARY {
        // The target is affine up to O(BOUNDARY): [0 - y]^+ = 0 and
        // [1 - y]^+ = 1 - y on [0, 1].
        let (coeffs, cheb) = if b <= BOUNDARY {
            (vec![0.0; k as usize + 1], vec![0.0; k as usize + 1])
        } else {
            let mut coeffs = vec![0.0; k as usize + 1];
            coeffs[0] = b;
            if k >= 1 {
                coeffs[1] = -1.0;
            }
            // 1 - y = (1/2 - T*_1(y)/2) + (b - 1)
            let mut cheb = vec![0.0; k as usize + 1];
            cheb[0] = b - 0.5;
            if k >= 1 {
                cheb[1] = -0.5;
            }
            (coeffs, cheb)
        };
        return Ok(UniPolyApprox {
            degree: k,
            coeffs,
            cheb,
            interval: [0.0, 1.0],
            sup_error: b.min(1.0 - b),
        });
    }

    let outcome = remez::remez(&|y: f64| (y - b).abs(), 0.0, 1.0, k, &[b])?;

    // [b - y]^+ = (b - y)/2 + |y - b|/2.
    let mut cheb: Vec<f64> = outcome.cheb.iter().map(|c| c / 2.0).collect();
    cheb[0] += b / 2.0 - 0.25;
    if k >= 1 {
        cheb[1] -= 0.25;
    } else {
        // Degree 0 cannot carry the affine part exactly; fold its Chebyshev
        // projection into the constant instead. This only happens for k = 0,
        // where the caller gets the best constant for the full target.
        return remez0_relu(b);
    }

    let table = shifted_cheb_monomial_table(k);
    let mut coeffs = vec![0.0; k as usize + 1];
    for (j, &c) in outcome.cheb.iter().enumerate() {
        for (i, &t) in table[j].iter().enumerate() {
            coeffs[i] += 0.5 * c * t;
        }
    }
    coeffs[0] += b / 2.0;
    coeffs[1] -= 0.5;

    Ok(UniPolyApprox {
        degree: k,
        coeffs,
        cheb,
        interval: [0.0, 1.0],
        sup_error: outcome.levelled_error / 2.0,
    })
}

/// Best constant for `[b - y]^+` on `[0, 1]`: midway between the extreme
/// values `b` and `0`.
fn remez0_relu(b: f64) -> Result<UniPolyApprox> {
    Ok(UniPolyApprox {
        degree: 0,
        coeffs: vec![b / 2.0],
        cheb: vec![b / 2.0],
        interval: [0.0, 1.0],
        sup_error: b / 2.0,
    })
}
