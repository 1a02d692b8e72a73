//! Unbiased estimation of polynomial functionals of Poisson means.
//!
//! With `n x_hat ~ Poi(n x)`, the factorial product
//! `prod_{k<j} (x_hat - k/n)` is the unique minimum-variance unbiased
//! estimator of `x^j`. Everything here is a linear combination of such
//! products: centered powers `(p - q)^j`, cross powers `(e^eps q - p)^j`,
//! and the assembled polynomial-approximation estimators used inside the
//! non-smooth regime. Being polynomials in the observations, they are exact
//! in expectation; the only bias in the final estimators is the polynomial
//! approximation error itself.

use crate::poly::{self, BiPolyApprox, UniPolyApprox};
use crate::{Error, Result};

/// `prod_{k=0}^{j-1} (x_hat - k/n)`, with the empty product equal to 1.
///
/// Evaluated by forward accumulation in increasing `k`. Unbiased for `x^j`
/// under `n x_hat ~ Poi(n x)`.
pub fn factorial_product(x_hat: f64, j: u32, n: f64) -> f64 {
    let mut acc = 1.0;
    for k in 0..j {
        acc *= x_hat - k as f64 / n;
    }
    acc
}

/// Binomial coefficient as f64; relative error stays at the last-bit level
/// for the degrees in play (j <= 60).
pub(crate) fn binomial(j: u32, k: u32) -> f64 {
    if k > j {
        return 0.0;
    }
    let k = k.min(j - k);
    let mut acc = 1.0f64;
    for i in 0..k {
        acc = acc * (j - i) as f64 / (i + 1) as f64;
    }
    acc
}

/// Direct binomial form of `g_{j,q}`; exact but cancellation-prone when the
/// observed mass dwarfs `|x_hat - q|`. Kept as the reference the stable
/// route is checked against.
pub(crate) fn g_poly_direct(j: u32, q: f64, x_hat: f64, n: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..=j {
        total += binomial(j, k) * (-q).powi((j - k) as i32) * factorial_product(x_hat, k, n);
    }
    total
}

/// Coefficients `g_0..g_k` via the exponential generating function: with an
/// integer count `m = n x_hat`,
/// `sum_j g_{j,q}(x_hat) t^j / j! = exp((x_hat - q) t + m (ln(1 + t/n) - t/n))`,
/// so the `g_j` follow from the exp-of-power-series recurrence in quantities
/// of the size of the answer. Falls back to the direct form off the count
/// lattice.
fn g_poly_all(k: u32, q: f64, x_hat: f64, n: f64) -> Vec<f64> {
    let m = (x_hat * n).round();
    if (x_hat * n - m).abs() > 1e-6 {
        return (0..=k).map(|j| g_poly_direct(j, q, x_hat, n)).collect();
    }
    let kk = k as usize;
    let mut log_coeffs = vec![0.0; kk + 1];
    if kk >= 1 {
        log_coeffs[1] = x_hat - q;
    }
    let mut n_pow = 1.0;
    for (i, slot) in log_coeffs.iter_mut().enumerate().skip(2) {
        n_pow *= n;
        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
        *slot = sign * x_hat / (i as f64 * n_pow);
    }
    exp_series(&log_coeffs)
}

/// `h = exp(l)` as formal power series, returned as `j! h_j`.
fn exp_series(log_coeffs: &[f64]) -> Vec<f64> {
    let k = log_coeffs.len() - 1;
    let mut h = vec![0.0; k + 1];
    h[0] = 1.0;
    for j in 1..=k {
        let mut acc = 0.0;
        for i in 1..=j {
            acc += i as f64 * log_coeffs[i] * h[j - i];
        }
        h[j] = acc / j as f64;
    }
    let mut factorial = 1.0;
    for (j, slot) in h.iter_mut().enumerate() {
        if j > 0 {
            factorial *= j as f64;
        }
        *slot *= factorial;
    }
    h
}

/// MVUE of `(p - q)^j` from `n x_hat ~ Poi(n p)` with known offset `q`:
/// `g_{j,q}(x_hat) = sum_k C(j,k) (-q)^{j-k} prod_{h<k}(x_hat - h/n)`.
pub fn g_poly(j: u32, q: f64, x_hat: f64, n: f64) -> f64 {
    g_poly_all(j, q, x_hat, n)[j as usize]
}

/// Direct double-binomial form of `A_hat_j`; see [`g_poly_direct`] for why
/// the generating-function route is preferred at scale.
pub(crate) fn a_hat_direct(j: u32, p_hat: f64, q_hat: f64, n: f64, epsilon: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..=j {
        let sign = if (j - k) % 2 == 0 { 1.0 } else { -1.0 };
        total += binomial(j, k)
            * (epsilon * k as f64).exp()
            * sign
            * factorial_product(q_hat, k, n)
            * factorial_product(p_hat, j - k, n);
    }
    total
}

/// Coefficients `A_hat_0..A_hat_k` via the generating function
/// `(1 + e^eps t/n)^{n q_hat} (1 - t/n)^{n p_hat}`.
fn a_hat_all(k: u32, p_hat: f64, q_hat: f64, n: f64, epsilon: f64) -> Vec<f64> {
    let mp = (p_hat * n).round();
    let mq = (q_hat * n).round();
    if (p_hat * n - mp).abs() > 1e-6 || (q_hat * n - mq).abs() > 1e-6 {
        return (0..=k)
            .map(|j| a_hat_direct(j, p_hat, q_hat, n, epsilon))
            .collect();
    }
    let kk = k as usize;
    let mut log_coeffs = vec![0.0; kk + 1];
    if kk >= 1 {
        log_coeffs[1] = epsilon.exp() * q_hat - p_hat;
    }
    let mut n_pow = 1.0;
    for (i, slot) in log_coeffs.iter_mut().enumerate().skip(2) {
        n_pow *= n;
        let sign = if i % 2 == 0 { -1.0 } else { 1.0 };
        *slot = (sign * (epsilon * i as f64).exp() * q_hat - p_hat) / (i as f64 * n_pow);
    }
    exp_series(&log_coeffs)
}

/// MVUE of `(e^eps q - p)^j` from independent Poissonized `p_hat`, `q_hat`.
pub fn a_hat(j: u32, p_hat: f64, q_hat: f64, n: f64, epsilon: f64) -> f64 {
    a_hat_all(j, p_hat, q_hat, n, epsilon)[j as usize]
}

fn delta_unit(n: f64, c1: f64) -> Result<f64> {
    if !(n > 1.0) || !(c1 > 0.0) {
        return Err(Error::Domain(format!("need n > 1 and c1 > 0, got n={n}, c1={c1}")));
    }
    Ok(c1 * n.ln() / n)
}

/// Known-P estimator for the small-mass regime `p <= e^eps * Delta` with
/// `Delta = c1 ln n / n`: the best degree-K polynomial for
/// `[p - e^eps x]^+` on `[0, 2 Delta]`, estimated without bias by replacing
/// each monomial with its factorial product.
pub fn d_tilde_known_case1(
    q_hat: f64,
    p: f64,
    n: f64,
    k: u32,
    c1: f64,
    epsilon: f64,
) -> Result<f64> {
    let delta = delta_unit(n, c1)?;
    let scale = 2.0 * epsilon.exp() * delta;
    if p > epsilon.exp() * delta * (1.0 + 1e-12) {
        return Err(Error::Contract(format!(
            "case-1 regime requires p <= e^eps * Delta; p={p}, e^eps*Delta={}",
            epsilon.exp() * delta
        )));
    }
    let b = (p / scale).clamp(0.0, 1.0);
    let relu = poly::shifted_relu_approx(b, k)?;

    // D_K(x; p) = scale * H_K(x / (2 Delta)); monomials become factorial
    // products in q_hat. Products vanish once j exceeds the observed count.
    let two_delta = 2.0 * delta;
    let count_cap = (q_hat * n).round() as u32;
    let mut total = 0.0;
    let mut product = 1.0;
    let mut power = 1.0;
    for j in 0..=k.min(count_cap) {
        if j > 0 {
            product *= q_hat - (j - 1) as f64 / n;
            power *= two_delta;
        }
        total += scale * relu.coeffs[j as usize] / power * product;
    }
    Ok(total)
}

/// Known-P estimator for the large-mass regime `p > e^eps * Delta`: the
/// rescaled `|t|` approximation around the kink `e^-eps p`, with the affine
/// half absorbed through `a_1 = r_1 - 1`.
pub fn d_tilde_known_case2(
    q_hat: f64,
    p: f64,
    n: f64,
    k: u32,
    c1: f64,
    epsilon: f64,
    abs_poly: &UniPolyApprox,
) -> Result<f64> {
    let delta = delta_unit(n, c1)?;
    let center = (-epsilon).exp() * p;
    if p <= epsilon.exp() * delta {
        return Err(Error::Contract(format!(
            "case-2 regime requires p > e^eps * Delta; p={p}, e^eps*Delta={}",
            epsilon.exp() * delta
        )));
    }
    let sigma = (center * delta).sqrt();
    let centered = g_poly_all(k, center, q_hat, n);
    let mut total = 0.0;
    for j in 0..=k {
        let r_j = abs_poly.coeffs.get(j as usize).copied().unwrap_or(0.0);
        let a_j = if j == 1 { r_j - 1.0 } else { r_j };
        if a_j == 0.0 {
            continue;
        }
        total += a_j * sigma.powi(1 - j as i32) * centered[j as usize];
    }
    Ok(0.5 * epsilon.exp() * total)
}

/// Two-sample estimator for the small-sum branch: unbiased for
/// `2 Delta * h_2K(p / 2Delta, e^eps q / 2Delta)`, the scaled product
/// approximation of `[p - e^eps q]^+` on the box `[0, 2 Delta]^2`.
pub fn d_tilde1(
    p_hat: f64,
    q_hat: f64,
    n: f64,
    k: u32,
    c1: f64,
    epsilon: f64,
    h: &BiPolyApprox,
) -> Result<f64> {
    let delta = delta_unit(n, c1)?;
    let two_delta = 2.0 * delta;
    let top = 2 * k;

    // Scaled factorial products: sp[i] = g_{i,0}(p_hat) / (2 Delta)^i, so the
    // sum reads 2 Delta * sum h_ij sp[i] sq[j] and the factors stay order-1
    // inside the box.
    let cap_p = ((p_hat * n).round() as u32).min(top);
    let cap_q = ((q_hat * n).round() as u32).min(top);
    let mut sp = Vec::with_capacity(cap_p as usize + 1);
    let mut acc = 1.0;
    for i in 0..=cap_p {
        if i > 0 {
            acc *= (p_hat - (i - 1) as f64 / n) / two_delta;
        }
        sp.push(acc);
    }
    let mut sq = Vec::with_capacity(cap_q as usize + 1);
    acc = 1.0;
    let eps_scale = epsilon.exp();
    for j in 0..=cap_q {
        if j > 0 {
            acc *= eps_scale * (q_hat - (j - 1) as f64 / n) / two_delta;
        }
        sq.push(acc);
    }

    let mut total = 0.0;
    for (i, &spi) in sp.iter().enumerate() {
        for (j, &sqj) in sq.iter().enumerate() {
            if i + j == 0 {
                continue;
            }
            let coeff = h.coeff(i, j);
            if coeff != 0.0 {
                total += coeff * spi * sqj;
            }
        }
    }
    Ok(two_delta * total)
}

/// Two-sample estimator for the large-sum non-smooth branch: the `|t|`
/// approximation recentred on the first-split width
/// `W = sqrt(8 c1 ln n / n) * sqrt(p_hat1 + e^eps q_hat1)`, with cross powers
/// `(e^eps q - p)^j` estimated by their MVUE from the second split.
pub fn d_tilde2(
    p_hat2: f64,
    q_hat2: f64,
    p_hat1: f64,
    q_hat1: f64,
    n: f64,
    k: u32,
    c1: f64,
    epsilon: f64,
    abs_poly: &UniPolyApprox,
) -> Result<f64> {
    let delta = delta_unit(n, c1)?;
    let width = (8.0 * delta).sqrt() * (p_hat1 + epsilon.exp() * q_hat1).sqrt();
    if width == 0.0 {
        return Err(Error::Contract(
            "degenerate width: first-split masses are both zero".into(),
        ));
    }

    let cross = a_hat_all(k, p_hat2, q_hat2, n, epsilon);
    let mut total = 0.0;
    for j in 0..=k {
        let r_j = abs_poly.coeffs.get(j as usize).copied().unwrap_or(0.0);
        let a_j = if j == 1 { r_j - 1.0 } else { r_j };
        if a_j == 0.0 {
            continue;
        }
        total += a_j * width.powi(1 - j as i32) * cross[j as usize];
    }
    Ok(0.5 * total)
}
