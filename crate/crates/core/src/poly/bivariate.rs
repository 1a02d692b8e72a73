//! Near-best bivariate approximation by lowpass-filtered tensor Chebyshev
//! expansion on `[0, 1]^2`.
//!
//! The two targets have first-order Ditzian-Totik smoothness, so a filtered
//! expansion of per-variable degree `K` reaches uniform error `O(1/K)`; exact
//! minimaxity is not needed. Sampling uses a degree-`4K` Chebyshev-Lobatto
//! tensor grid; coefficients above half the cutoff are tapered by a raised
//! cosine to suppress the kink's Gibbs oscillation.

use crate::{Error, Result};

use super::{check_degree, shifted_cheb_monomial_table, BiPolyApprox};

/// The two bivariate targets the estimators need.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BivariateTarget {
    /// `sqrt(x) + sqrt(y)`
    SqrtSum,
    /// `[sqrt(x) - sqrt(y)]^+`
    ReluSqrtDiff,
}

impl BivariateTarget {
    pub fn id(&self) -> &'static str {
        match self {
            BivariateTarget::SqrtSum => "sqrt_sum",
            BivariateTarget::ReluSqrtDiff => "relu_sqrt_diff",
        }
    }

    pub fn from_id(id: &str) -> Result<Self> {
        match id {
            "sqrt_sum" => Ok(BivariateTarget::SqrtSum),
            "relu_sqrt_diff" => Ok(BivariateTarget::ReluSqrtDiff),
            other => Err(Error::Domain(format!("unknown bivariate target '{other}'"))),
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            BivariateTarget::SqrtSum => x.sqrt() + y.sqrt(),
            BivariateTarget::ReluSqrtDiff => (x.sqrt() - y.sqrt()).max(0.0),
        }
    }
}

/// Raised-cosine taper: unity up to half the cutoff, rolling off to zero at
/// the cutoff.
fn filter_factor(k: usize, cutoff: u32) -> f64 {
    if cutoff == 0 {
        return 1.0;
    }
    let r = 2.0 * k as f64 / cutoff as f64 - 1.0;
    if r <= 0.0 {
        1.0
    } else {
        0.5 * (1.0 + (std::f64::consts::PI * r.min(1.0)).cos())
    }
}

/// 1-D Chebyshev interpolation coefficients from values at the Lobatto nodes
/// `t_i = cos(pi i / n)`, `i = 0..=n`.
fn cheb_coeffs_1d(values: &[f64], cos_table: &[f64]) -> Vec<f64> {
    let n = values.len() - 1;
    let mut coeffs = vec![0.0; n + 1];
    for (k, c) in coeffs.iter_mut().enumerate() {
        let mut acc = 0.5 * (values[0] + if k % 2 == 0 { values[n] } else { -values[n] });
        for (i, &v) in values.iter().enumerate().take(n).skip(1) {
            acc += v * cos_table[(k * i) % (2 * n)];
        }
        *c = 2.0 * acc / n as f64;
    }
    coeffs[0] /= 2.0;
    coeffs[n] /= 2.0;
    coeffs
}

/// Lowpass-filtered tensor Chebyshev approximation of `target` with
/// per-variable degree `k` on `[0, 1]^2`.
pub fn cheb_bivariate(target: BivariateTarget, k: u32) -> Result<BiPolyApprox> {
    check_degree(k)?;
    if k < 1 {
        return Err(Error::Domain("bivariate degree must be >= 1".into()));
    }
    let n = (4 * k as usize).max(8);
    let cos_table: Vec<f64> = (0..2 * n)
        .map(|r| (std::f64::consts::PI * r as f64 / n as f64).cos())
        .collect();
    let nodes: Vec<f64> = (0..=n).map(|i| (1.0 + cos_table[i % (2 * n)]) / 2.0).collect();

    // Row pass: transform y for every grid x.
    let row_coeffs: Vec<Vec<f64>> = nodes
        .iter()
        .map(|&x| {
            let values: Vec<f64> = nodes.iter().map(|&y| target.eval(x, y)).collect();
            cheb_coeffs_1d(&values, &cos_table)
        })
        .collect();

    // Column pass: transform x for every y-coefficient, truncate and taper.
    let deg = k as usize;
    let mut cheb = vec![vec![0.0; deg + 1]; deg + 1];
    let mut column = vec![0.0; n + 1];
    for l in 0..=deg {
        for (i, row) in row_coeffs.iter().enumerate() {
            column[i] = row[l];
        }
        let transformed = cheb_coeffs_1d(&column, &cos_table);
        for (kk, row) in cheb.iter_mut().enumerate() {
            row[l] = transformed[kk] * filter_factor(kk, k) * filter_factor(l, k);
        }
    }

    let coeffs = tensor_cheb_to_monomial(&cheb);
    let sup_error = measure_sup_error(&cheb, |x, y| target.eval(x, y));
    super::warn_on_blowup(target.id(), k, max_abs(&coeffs));

    Ok(BiPolyApprox {
        degree: k,
        coeffs,
        cheb,
        sup_error,
    })
}

/// `h_2K(x, y) = u_K(x, y) v_K(x, y) - u_K(0,0) v_K(0,0)`, the product
/// approximation of `[x - y]^+` on `[0, 1]^2` that vanishes exactly at the
/// origin. Per-variable degree is `2K`.
pub fn h2k(k: u32) -> Result<BiPolyApprox> {
    let u = cheb_bivariate(BivariateTarget::SqrtSum, k)?;
    let v = cheb_bivariate(BivariateTarget::ReluSqrtDiff, k)?;
    h2k_from_parts(&u, &v)
}

/// Assemble `h_2K` from already-built factors.
pub fn h2k_from_parts(u: &BiPolyApprox, v: &BiPolyApprox) -> Result<BiPolyApprox> {
    if u.degree != v.degree {
        return Err(Error::Domain("u and v must share the same degree".into()));
    }
    check_degree(u.degree)?;
    let k = u.degree as usize;
    let out = 2 * k;

    // Monomial product; the origin constant is then exactly cancelled.
    let mut coeffs = vec![vec![0.0; out + 1]; out + 1];
    for i1 in 0..=k {
        for j1 in 0..=k {
            let a = u.coeffs[i1][j1];
            if a == 0.0 {
                continue;
            }
            for i2 in 0..=k {
                for j2 in 0..=k {
                    coeffs[i1 + i2][j1 + j2] += a * v.coeffs[i2][j2];
                }
            }
        }
    }
    coeffs[0][0] -= u.coeffs[0][0] * v.coeffs[0][0];

    // Chebyshev product via T_a T_b = (T_{a+b} + T_{|a-b|}) / 2 per axis.
    let mut cheb = vec![vec![0.0; out + 1]; out + 1];
    for a in 0..=k {
        for b in 0..=k {
            let ua = u.cheb[a][b];
            if ua == 0.0 {
                continue;
            }
            for c in 0..=k {
                for d in 0..=k {
                    let w = 0.25 * ua * v.cheb[c][d];
                    if w == 0.0 {
                        continue;
                    }
                    let (xs, xd) = (a + c, a.abs_diff(c));
                    let (ys, yd) = (b + d, b.abs_diff(d));
                    cheb[xs][ys] += w;
                    cheb[xs][yd] += w;
                    cheb[xd][ys] += w;
                    cheb[xd][yd] += w;
                }
            }
        }
    }
    // Pin the Chebyshev form to zero at the origin as well.
    let origin = eval_tensor_cheb(&cheb, 0.0, 0.0);
    cheb[0][0] -= origin;

    let sup_error = measure_sup_error(&cheb, |x, y| (x - y).max(0.0));
    super::warn_on_blowup("h2k", u.degree, max_abs(&coeffs));

    Ok(BiPolyApprox {
        degree: 2 * u.degree,
        coeffs,
        cheb,
        sup_error,
    })
}

fn max_abs(matrix: &[Vec<f64>]) -> f64 {
    matrix
        .iter()
        .flatten()
        .fold(0.0_f64, |m, &c| m.max(c.abs()))
}

fn eval_tensor_cheb(cheb: &[Vec<f64>], x: f64, y: f64) -> f64 {
    let tx = 2.0 * x - 1.0;
    let ty = 2.0 * y - 1.0;
    let inner: Vec<f64> = cheb.iter().map(|row| super::clenshaw(row, ty)).collect();
    super::clenshaw(&inner, tx)
}

fn tensor_cheb_to_monomial(cheb: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let deg = cheb.len() - 1;
    let table = shifted_cheb_monomial_table(deg as u32);
    let mut mono = vec![vec![0.0; deg + 1]; deg + 1];
    for (k, row) in cheb.iter().enumerate() {
        for (l, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for (i, &ti) in table[k].iter().enumerate() {
                let w = a * ti;
                if w == 0.0 {
                    continue;
                }
                for (j, &tj) in table[l].iter().enumerate() {
                    mono[i][j] += w * tj;
                }
            }
        }
    }
    mono
}

/// Max absolute deviation from `target` over a 513x513 Chebyshev-clustered
/// grid (clustering resolves the square-root edge behavior).
fn measure_sup_error(cheb: &[Vec<f64>], target: impl Fn(f64, f64) -> f64) -> f64 {
    const G: usize = 512;
    let deg = cheb.len() - 1;
    let nodes: Vec<f64> = (0..=G)
        .map(|i| (1.0 - (std::f64::consts::PI * i as f64 / G as f64).cos()) / 2.0)
        .collect();

    // T*_k values on the grid, shared by both axes.
    let mut basis = vec![vec![0.0; G + 1]; deg + 1];
    for (a, &x) in nodes.iter().enumerate() {
        let t = 2.0 * x - 1.0;
        basis[0][a] = 1.0;
        if deg >= 1 {
            basis[1][a] = t;
        }
        for k in 2..=deg {
            basis[k][a] = 2.0 * t * basis[k - 1][a] - basis[k - 2][a];
        }
    }

    // inner[k][b] = sum_l cheb[k][l] T_l(y_b)
    let mut inner = vec![vec![0.0; G + 1]; deg + 1];
    for (k, row) in cheb.iter().enumerate() {
        for (l, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            for b in 0..=G {
                inner[k][b] += a * basis[l][b];
            }
        }
    }

    let mut worst = 0.0_f64;
    for (a, &x) in nodes.iter().enumerate() {
        for (b, &y) in nodes.iter().enumerate() {
            let mut value = 0.0;
            for k in 0..=deg {
                value += basis[k][a] * inner[k][b];
            }
            worst = worst.max((value - target(x, y)).abs());
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sqrt_sum_hits_the_corner_within_sup_error() {
        let u = cheb_bivariate(BivariateTarget::SqrtSum, 12).unwrap();
        assert!((u.eval(1.0, 1.0) - 2.0).abs() <= u.sup_error + 1e-12);
    }

    #[test]
    fn relu_sqrt_diff_vanishes_on_the_diagonal_within_sup_error() {
        let v = cheb_bivariate(BivariateTarget::ReluSqrtDiff, 12).unwrap();
        let worst = (0..=200)
            .map(|i| {
                let x = i as f64 / 200.0;
                v.eval(x, x).abs()
            })
            .fold(0.0_f64, f64::max);
        assert!(worst <= v.sup_error + 1e-12, "diagonal {worst} vs {}", v.sup_error);
    }

    #[test]
    fn sup_error_decays_like_one_over_k() {
        for target in [BivariateTarget::SqrtSum, BivariateTarget::ReluSqrtDiff] {
            let e20 = cheb_bivariate(target, 20).unwrap().sup_error;
            let e40 = cheb_bivariate(target, 40).unwrap().sup_error;
            let ratio = e20 / e40;
            assert!(
                (1.6..=2.6).contains(&ratio),
                "{}: e20={e20:.4e}, e40={e40:.4e}, ratio {ratio}",
                target.id()
            );
        }
    }

    #[test]
    fn h_vanishes_at_origin_by_construction() {
        let h = h2k(6).unwrap();
        assert_eq!(h.coeff(0, 0), 0.0);
        assert!(h.eval(0.0, 0.0).abs() < 1e-12);
    }

    #[test]
    fn h_degree_bound_is_twice_the_factor_degree() {
        let h = h2k(5).unwrap();
        assert_eq!(h.degree, 10);
        assert_eq!(h.coeffs.len(), 11);
        assert_eq!(h.coeffs[0].len(), 11);
    }

    #[test]
    fn h_tracks_relu_with_square_root_weighted_bias() {
        // |h(x,y) - [x-y]^+| <= C (sqrt(x)+sqrt(y))/K + C'/K^2 with measured
        // constants frozen with margin.
        let k = 10;
        let h = h2k(k).unwrap();
        let (c, c2) = (1.2, 6.0);
        for i in 0..=60 {
            for j in 0..=60 {
                let x = i as f64 / 60.0;
                let y = j as f64 / 60.0;
                let bound =
                    c * (x.sqrt() + y.sqrt()) / k as f64 + c2 / (k as f64 * k as f64);
                let err = (h.eval(x, y) - (x - y).max(0.0)).abs();
                assert!(err <= bound, "({x},{y}): err {err} vs bound {bound}");
            }
        }
    }

    #[test]
    fn unknown_degree_and_bad_inputs_are_rejected() {
        assert!(cheb_bivariate(BivariateTarget::SqrtSum, 0).is_err());
        assert!(cheb_bivariate(BivariateTarget::SqrtSum, 61).is_err());
        assert!(BivariateTarget::from_id("nope").is_err());
    }

    #[test]
    fn monomial_and_chebyshev_forms_agree_at_low_degree() {
        let u = cheb_bivariate(BivariateTarget::SqrtSum, 6).unwrap();
        for i in 0..=20 {
            for j in 0..=20 {
                let x = i as f64 / 20.0;
                let y = j as f64 / 20.0;
                let mono: f64 = u
                    .coeffs
                    .iter()
                    .enumerate()
                    .map(|(a, row)| {
                        row.iter()
                            .enumerate()
                            .map(|(b, &c)| c * x.powi(a as i32) * y.powi(b as i32))
                            .sum::<f64>()
                    })
                    .sum();
                assert!((mono - u.eval(x, y)).abs() < 1e-9);
            }
        }
    }
}
