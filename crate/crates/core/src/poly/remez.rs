//! Classic Remez exchange for best uniform polynomial approximation on an
//! interval.
//!
//! The levelled system is solved in the Chebyshev basis of the interval
//! (monomial Vandermonde matrices are hopeless beyond degree ~20), references
//! start at Chebyshev extrema, and each iteration exchanges the whole
//! reference for fresh sign-alternating extrema of the residual.

use crate::{Error, Result};

use super::clenshaw;

const ITERATION_CAP: u32 = 200;
const TARGET_SPREAD: f64 = 1e-12;

pub(crate) struct RemezOutcome {
    /// Chebyshev-basis coefficients on the interval.
    pub cheb: Vec<f64>,
    /// Magnitude of the equioscillating error.
    pub levelled_error: f64,
}

/// Gaussian elimination with partial pivoting; `a` is row-major `n x n`.
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())
            .unwrap();
        if a[pivot][col].abs() < 1e-300 {
            return Err(Error::Convergence("remez", "singular levelled system".into()));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let factor = a[row][col] / a[col][col];
            if factor == 0.0 {
                continue;
            }
            for k in col..n {
                a[row][k] -= factor * a[col][k];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let mut acc = b[row];
        for k in row + 1..n {
            acc -= a[row][k] * x[k];
        }
        x[row] = acc / a[row][row];
    }
    Ok(x)
}

struct Candidate {
    x: f64,
    residual: f64,
}

/// Best uniform approximation of `f` on `[lo, hi]` by a polynomial of degree
/// at most `degree`. `kinks` lists interior points where `f` is not smooth;
/// they are always scanned as extremum candidates.
///
/// Symmetric targets can make the levelled system on a symmetric reference
/// degenerate (the interpolant absorbs the alternation and `E = 0`), so on a
/// degenerate start the exchange is retried from skewed references.
pub(crate) fn remez(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    degree: u32,
    kinks: &[f64],
) -> Result<RemezOutcome> {
    let mut last_err = None;
    for &skew in &[0.0, 0.43, 1.17, 2.3] {
        match remez_attempt(f, lo, hi, degree, kinks, skew) {
            Ok(outcome) => return Ok(outcome),
            Err(err) => last_err = Some(err),
        }
    }
    Err(last_err.unwrap())
}

fn remez_attempt(
    f: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    degree: u32,
    kinks: &[f64],
    skew: f64,
) -> Result<RemezOutcome> {
    let n_ref = degree as usize + 2;
    let half = (hi - lo) / 2.0;
    let mid = (hi + lo) / 2.0;

    // Initial reference: Chebyshev extrema, asymmetrized by `skew`.
    let mut refs: Vec<f64> = (0..n_ref)
        .map(|i| {
            let angle =
                std::f64::consts::PI * (i as f64 + skew) / (n_ref as f64 - 1.0 + 2.0 * skew);
            mid - half * angle.cos()
        })
        .collect();

    let to_t = |x: f64| (x - mid) / half;
    let f_scale = refs.iter().map(|&x| f(x).abs()).fold(1.0_f64, f64::max);

    let mut best: Option<(Vec<f64>, f64, f64)> = None; // (cheb, |E|, spread)

    for _iteration in 0..ITERATION_CAP {
        // Levelled system: p(x_i) + (-1)^i E = f(x_i).
        let mut matrix = Vec::with_capacity(n_ref);
        let mut rhs = Vec::with_capacity(n_ref);
        for (i, &x) in refs.iter().enumerate() {
            let t = to_t(x);
            let mut row = Vec::with_capacity(n_ref);
            let (mut t_prev, mut t_cur) = (1.0, t);
            for j in 0..=degree as usize {
                if j == 0 {
                    row.push(1.0);
                } else if j == 1 {
                    row.push(t);
                } else {
                    let t_next = 2.0 * t * t_cur - t_prev;
                    t_prev = t_cur;
                    t_cur = t_next;
                    row.push(t_cur);
                }
            }
            row.push(if i % 2 == 0 { 1.0 } else { -1.0 });
            matrix.push(row);
            rhs.push(f(x));
        }
        let solution = solve_dense(matrix, rhs)?;
        let cheb = solution[..=degree as usize].to_vec();
        let levelled = solution[degree as usize + 1].abs();

        let residual = |x: f64| f(x) - clenshaw(&cheb, to_t(x));

        let candidates = scan_extrema(&residual, lo, hi, degree, kinks);
        let mut selected = select_alternating(candidates, n_ref);

        if selected.len() < n_ref {
            // The target is (numerically) a polynomial of degree <= K.
            let measured = selected
                .iter()
                .map(|c| c.residual.abs())
                .fold(0.0_f64, f64::max);
            if measured <= 1e-13 * f_scale {
                return Ok(RemezOutcome {
                    cheb,
                    levelled_error: measured.max(levelled),
                });
            }
            return Err(Error::Convergence(
                "remez",
                format!(
                    "found only {} alternating extrema (need {n_ref}) with residual {measured:.3e}",
                    selected.len()
                ),
            ));
        }

        let e_max = selected
            .iter()
            .map(|c| c.residual.abs())
            .fold(0.0_f64, f64::max);
        let e_min = selected
            .iter()
            .map(|c| c.residual.abs())
            .fold(f64::INFINITY, f64::min);
        let spread = (e_max - e_min) / e_max.max(1e-300);

        if best.as_ref().map_or(true, |(_, _, s)| spread < *s) {
            best = Some((cheb.clone(), e_max, spread));
        }

        // Absolute residual rounding puts a floor under the achievable
        // relative spread for small levelled errors.
        let noise_floor = 1e-13 * f_scale / e_max.max(1e-300);
        if spread <= TARGET_SPREAD.max(noise_floor) || e_max <= 1e-15 * f_scale {
            return Ok(RemezOutcome {
                cheb,
                levelled_error: e_max,
            });
        }

        refs = selected.drain(..).map(|c| c.x).collect();
    }

    match best {
        Some((cheb, e_max, spread)) if spread <= 1e-8 => {
            log::warn!(
                "remez stopped at iteration cap with residual spread {spread:.3e}; \
                 accepting the best levelled solution"
            );
            Ok(RemezOutcome {
                cheb,
                levelled_error: e_max,
            })
        }
        Some((_, e_max, spread)) => Err(Error::Convergence(
            "remez",
            format!("spread {spread:.3e} at error {e_max:.3e} after {ITERATION_CAP} iterations"),
        )),
        None => Err(Error::Convergence("remez", "no iterate produced".into())),
    }
}

/// Scan for local extrema of the residual on a Chebyshev-clustered grid,
/// refine each by golden-section search, and always include the endpoints
/// and the supplied kink locations.
fn scan_extrema(
    residual: &dyn Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    degree: u32,
    kinks: &[f64],
) -> Vec<Candidate> {
    let m = 2000.max(60 * (degree as usize + 2));
    let half = (hi - lo) / 2.0;
    let mid = (hi + lo) / 2.0;
    let mut xs: Vec<f64> = (0..=m)
        .map(|i| mid - half * (std::f64::consts::PI * i as f64 / m as f64).cos())
        .collect();
    for &k in kinks {
        if k > lo && k < hi {
            xs.push(k);
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    xs.dedup();

    let es: Vec<f64> = xs.iter().map(|&x| residual(x)).collect();

    let mut out = Vec::new();
    out.push(Candidate {
        x: xs[0],
        residual: es[0],
    });
    for i in 1..xs.len() - 1 {
        let is_max = es[i] >= es[i - 1] && es[i] >= es[i + 1];
        let is_min = es[i] <= es[i - 1] && es[i] <= es[i + 1];
        if is_max || is_min {
            let sign = if is_max { 1.0 } else { -1.0 };
            let (x, e) = golden_refine(residual, xs[i - 1], xs[i + 1], sign);
            out.push(Candidate { x, residual: e });
        }
    }
    out.push(Candidate {
        x: *xs.last().unwrap(),
        residual: *es.last().unwrap(),
    });
    out
}

/// Golden-section maximization of `sign * residual` on `[a, b]`.
fn golden_refine(residual: &dyn Fn(f64) -> f64, a: f64, b: f64, sign: f64) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = sign * residual(c);
    let mut fd = sign * residual(d);
    for _ in 0..60 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = sign * residual(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = sign * residual(d);
        }
        if b - a < 1e-14 * (1.0 + b.abs()) {
            break;
        }
    }
    let x = (a + b) / 2.0;
    (x, residual(x))
}

/// Reduce extremum candidates to at most `target` points with strictly
/// alternating residual signs, preferring large residuals.
fn select_alternating(candidates: Vec<Candidate>, target: usize) -> Vec<Candidate> {
    // Collapse same-sign runs, keeping the largest magnitude in each run.
    let mut alternating: Vec<Candidate> = Vec::new();
    for c in candidates {
        if c.residual == 0.0 {
            continue;
        }
        match alternating.last() {
            Some(last) if last.residual.signum() == c.residual.signum() => {
                if c.residual.abs() > last.residual.abs() {
                    *alternating.last_mut().unwrap() = c;
                }
            }
            _ => alternating.push(c),
        }
    }

    while alternating.len() > target {
        if (alternating.len() - target) % 2 == 1 {
            // Drop the weaker endpoint to fix parity.
            if alternating.first().unwrap().residual.abs()
                <= alternating.last().unwrap().residual.abs()
            {
                alternating.remove(0);
            } else {
                alternating.pop();
            }
        } else {
            // Drop the adjacent pair whose stronger member is weakest.
            let mut cut = 0;
            let mut cut_value = f64::INFINITY;
            for i in 0..alternating.len() - 1 {
                let pair = alternating[i]
                    .residual
                    .abs()
                    .max(alternating[i + 1].residual.abs());
                if pair < cut_value {
                    cut_value = pair;
                    cut = i;
                }
            }
            alternating.drain(cut..=cut + 1);
        }
    }
    alternating
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_polynomial_targets_are_recovered() {
        let f = |x: f64| 3.0 + 2.0 * x - x * x;
        let outcome = remez(&f, -1.0, 1.0, 2, &[]).unwrap();
        assert!(outcome.levelled_error < 1e-13);
        for i in 0..=50 {
            let x = -1.0 + i as f64 / 25.0;
            assert!((clenshaw(&outcome.cheb, x) - f(x)).abs() < 1e-12);
        }
    }

    #[test]
    fn exp_approximation_beats_taylor() {
        let outcome = remez(&f64::exp, -1.0, 1.0, 5, &[]).unwrap();
        // Known minimax error for exp on [-1,1] at degree 5 is ~4.5e-5.
        assert!(outcome.levelled_error < 5e-5);
        assert!(outcome.levelled_error > 1e-5);
    }

    #[test]
    fn sqrt_on_unit_interval_converges() {
        let outcome = remez(&f64::sqrt, 0.0, 1.0, 10, &[]).unwrap();
        // E_2m(|t|) = E_m(sqrt s); at m = 10 this is about 0.2801/20.
        let expected = 0.2802 / 20.0;
        assert!((outcome.levelled_error - expected).abs() < 0.1 * expected);
    }

    #[test]
    fn interior_kink_is_handled() {
        let b = 0.37;
        let outcome = remez(&|y: f64| (y - b).abs(), 0.0, 1.0, 6, &[b]).unwrap();
        assert!(outcome.levelled_error > 0.0);
        // Residual never exceeds the levelled error (up to refinement slack).
        for i in 0..=5000 {
            let y = i as f64 / 5000.0;
            let e = ((y - b).abs() - clenshaw(&outcome.cheb, 2.0 * y - 1.0)).abs();
            assert!(e <= outcome.levelled_error * (1.0 + 1e-9) + 1e-15);
        }
    }
}
