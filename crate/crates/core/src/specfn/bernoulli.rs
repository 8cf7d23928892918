//! Exact Bernoulli numbers (with `B_1 = -1/2`) and Bernoulli polynomials.

use crate::numerics::{c, C64};
use num_rational::Rational64;
use std::sync::OnceLock;

const CACHED: usize = 16;

fn binomial(n: usize, k: usize) -> i64 {
    (0..k).fold(1i64, |acc, j| acc * (n - j) as i64 / (j as i64 + 1))
}

fn numbers() -> &'static [Rational64] {
    static TABLE: OnceLock<Vec<Rational64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        // Σ_{j=0}^{m} C(m+1, j) B_j = 0
        let mut b = vec![Rational64::from_integer(1)];
        for m in 1..=CACHED {
            let s: Rational64 = (0..m).map(|j| b[j] * binomial(m + 1, j)).sum();
            b.push(-s / (m as i64 + 1));
        }
        b
    })
}

/// Bernoulli number `B_n` for `n ≤ 16`.
pub fn bernoulli_number(n: usize) -> Rational64 {
    assert!(n <= CACHED, "Bernoulli numbers are tabulated up to {CACHED}");
    numbers()[n]
}

/// Exact coefficients of `B_n(x) = Σ_j C(n,j) B_j x^{n-j}`, lowest degree first.
pub fn bernoulli_poly_coeffs(n: usize) -> Vec<Rational64> {
    let mut out = vec![Rational64::from_integer(0); n + 1];
    for j in 0..=n {
        out[n - j] = bernoulli_number(j) * binomial(n, j);
    }
    out
}

pub fn bernoulli_poly(n: usize, x: C64) -> C64 {
    bernoulli_poly_coeffs(n).iter().rev().fold(c(0.0, 0.0), |acc, r| acc * x + (*r.numer() as f64 / *r.denom() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rel_err;

    #[test]
    fn small_numbers() {
        assert_eq!(bernoulli_number(1), Rational64::new(-1, 2));
        assert_eq!(bernoulli_number(2), Rational64::new(1, 6));
        assert_eq!(bernoulli_number(3), Rational64::from_integer(0));
        assert_eq!(bernoulli_number(12), Rational64::new(-691, 2730));
    }

    #[test]
    fn second_polynomial() {
        let c2 = bernoulli_poly_coeffs(2);
        assert_eq!(c2, vec![Rational64::new(1, 6), Rational64::from_integer(-1), Rational64::from_integer(1)]);
    }

    #[test]
    fn generating_function() {
        // t e^{xt} / (e^t - 1) = Σ B_n(x) t^n / n!
        let x = c(0.3, -0.4);
        let t = c(0.5, 0.2);
        let lhs = t * (x * t).exp() / (t.exp() - 1.0);
        let mut rhs = c(0.0, 0.0);
        let mut tp = c(1.0, 0.0);
        for n in 0..=16 {
            rhs += bernoulli_poly(n, x) * tp / crate::numerics::factorial(n);
            tp *= t;
        }
        assert!(rel_err(rhs, lhs) < 1e-12);
    }

    #[test]
    fn difference_identity() {
        // B_n(x+1) - B_n(x) = n x^{n-1}
        let x = c(0.7, 0.1);
        for n in 1..=10 {
            let d = bernoulli_poly(n, x + 1.0) - bernoulli_poly(n, x);
            assert!(rel_err(d, x.powu(n as u32 - 1) * n as f64) < 1e-11);
        }
    }
}
