//! `Λ(w, η) = e^w Γ(w+η) / (√(2π) w^{w+η-½})`, the gamma function with its
//! Stirling growth divided out, so that `Λ → 1` as `w → ∞` away from the
//! negative axis.

use super::bernoulli::bernoulli_poly;
use super::gamma::{check_pole, lanczos_sum, ln_sin_pi, LANCZOS_G};
use crate::error::{Error, Result};
use crate::numerics::{c, log1p, C64, I, TWO_PI_I};
use std::f64::consts::{LN_2, PI};

fn check_args(w: C64, eta: C64) -> Result<()> {
    if w.norm() == 0.0 {
        return Err(Error::BranchPoint("w = 0".into()));
    }
    if w.im == 0.0 && w.re < 0.0 {
        return Err(Error::BranchCut(format!("w = {} on the negative axis", w.re)));
    }
    check_pole(w + eta)
}

/// Picks the integer `k` so that `approx + 2πik` has the imaginary part of
/// `target` up to rounding.
fn match_branch(approx: C64, target_im: f64) -> C64 {
    let k = ((target_im - approx.im) / (2.0 * PI)).round();
    approx + TWO_PI_I * k
}

/// `log Λ(w, η)` on the branch that tends to zero as `w → ∞`.
///
/// The large terms of Stirling's formula are combined analytically before
/// evaluation, so the result keeps full relative accuracy for large `|w|`.
pub fn ln_lambda(w: C64, eta: C64) -> Result<C64> {
    check_args(w, eta)?;
    let g = LANCZOS_G;
    let s = w + eta;
    if s.re >= 0.5 {
        let a = eta + g - 0.5;
        let t = s + g - 0.5;
        let l = match_branch(log1p(a / w), t.arg() - w.arg());
        Ok((s - 0.5) * l - a + lanczos_sum(s - 1.0).ln())
    } else {
        let u = c(1.0, 0.0) - s;
        let d = (c(0.5 + g, 0.0) - eta) / w;
        let tp = u + g - 0.5;
        let ld = log1p(-d);
        if s.im == 0.0 {
            let l = match_branch(-ld + c(0.0, PI), w.arg() - tp.arg());
            return Ok(c(0.5 + g - LN_2, 0.0) - eta + (u - 0.5) * l - ln_sin_pi(s) - lanczos_sum(u - 1.0).ln());
        }
        // Log w - Log t' = -log1p(-d) + iπm with m odd. The iπm(½-s) term
        // cancels against the linear part of log sin(πs) when m = ±1.
        let m = ((w.arg() - tp.arg() + ld.im) / PI).round();
        let sg = s.im.signum();
        let lin = c(0.0, PI * (m - sg)) * (c(0.5, 0.0) - s);
        let tail = log1p(-(I * 2.0 * PI * sg * s).exp());
        Ok(c(0.5 + g, 0.0) - eta - (u - 0.5) * ld + lin - tail - lanczos_sum(u - 1.0).ln())
    }
}

pub fn lambda_fn(w: C64, eta: C64) -> Result<C64> {
    Ok(ln_lambda(w, eta)?.exp())
}

/// `Λ(w,η)·Λ(-w,1-η)·(1 - e^{±2πi(w+η)}) - 1` with the sign of `Im w`;
/// vanishes by the reflection formula.
pub fn lambda_reflection_residual(w: C64, eta: C64) -> Result<C64> {
    if w.im == 0.0 {
        return Err(Error::BranchCut("reflection needs Im w != 0".into()));
    }
    let sign = w.im.signum();
    let prod = (ln_lambda(w, eta)? + ln_lambda(-w, c(1.0, 0.0) - eta)?).exp();
    let factor = c(1.0, 0.0) - (TWO_PI_I * sign * (w + eta)).exp();
    Ok(prod * factor - 1.0)
}

/// Truncated Stirling series `Σ_{k=2}^{K} (-1)^k B_k(η) / (k(k-1)) · w^{1-k}`
/// for `log Λ(w, η)`.
pub fn stirling_tail(w: C64, eta: C64, order: usize) -> Result<C64> {
    if order < 2 {
        return Err(Error::InvalidInput("Stirling order must be at least 2".into()));
    }
    if w.im == 0.0 && w.re <= 0.0 {
        return Err(Error::BranchCut("w on the non-positive axis".into()));
    }
    let mut acc = c(0.0, 0.0);
    let inv = w.inv();
    let mut pow = inv;
    for k in 2..=order {
        let b = bernoulli_poly(k, eta);
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        acc += b * pow * (sign / (k * (k - 1)) as f64);
        pow *= inv;
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rel_err;
    use proptest::prelude::*;

    #[test]
    fn value_at_one() {
        let v = lambda_fn(c(1.0, 0.0), c(0.0, 0.0)).unwrap();
        assert!(rel_err(v, c(std::f64::consts::E / (2.0 * PI).sqrt(), 0.0)) < 1e-13);
    }

    #[test]
    fn eta_shift_symmetry() {
        let w = c(2.0, 3.0);
        let a = lambda_fn(w, c(0.0, 0.0)).unwrap();
        let b = lambda_fn(w, c(1.0, 0.0)).unwrap();
        assert!(rel_err(a, b) < 1e-13);
    }

    #[test]
    fn errors() {
        assert_eq!(lambda_fn(c(1.0, 0.0), c(-1.0, 0.0)).unwrap_err().code(), "POLE");
        assert_eq!(lambda_fn(c(-2.0, 0.0), c(0.3, 0.0)).unwrap_err().code(), "BRANCH_CUT");
    }

    #[test]
    fn reflection_examples() {
        for (w, e) in [(c(0.0, 0.5), c(0.25, 0.0)), (c(0.0, -0.5), c(0.25, 0.0)), (c(0.0, 3.0), c(0.0, 0.0))] {
            assert!(lambda_reflection_residual(w, e).unwrap().norm() < 1e-11);
        }
    }

    #[test]
    fn stirling_leading_term() {
        let w = c(20.0, 0.0);
        let t = stirling_tail(w, c(0.0, 0.0), 2).unwrap();
        assert!(rel_err(t, c(1.0 / 240.0, 0.0)) < 1e-14);
        let full = ln_lambda(c(10.0, 0.0), c(0.3, 0.0)).unwrap();
        let st = stirling_tail(c(10.0, 0.0), c(0.3, 0.0), 8).unwrap();
        assert!((full - st).norm() < 1e-8);
    }

    #[test]
    fn large_argument_tends_to_one() {
        for arg in [-2.5f64, -1.0, 0.0, 1.0, 2.5] {
            let w = C64::from_polar(1e6, arg);
            let l = ln_lambda(w, c(0.3, -0.2)).unwrap();
            let st = stirling_tail(w, c(0.3, -0.2), 4).unwrap();
            assert!((l - st).norm() < 1e-12, "arg {arg}: {l} vs {st}");
        }
    }

    proptest! {
        #[test]
        fn matches_gamma_definition(x in 0.2f64..6.0, y in -4.0f64..4.0, e in -0.9f64..0.9) {
            let w = c(x, y);
            let eta = c(e, 0.1);
            let direct = super::super::gamma::gamma(w + eta).unwrap() * w.exp()
                / ((2.0 * PI).sqrt() * (w.ln() * (w + eta - 0.5)).exp());
            prop_assert!(rel_err(lambda_fn(w, eta).unwrap(), direct) < 1e-11);
        }

        #[test]
        fn never_vanishes(x in -5.0f64..5.0, y in 0.01f64..5.0, e in -2.0f64..2.0) {
            let v = lambda_fn(c(x, y), c(e, 0.0)).unwrap();
            prop_assert!(v.norm() > 0.0);
        }

        #[test]
        fn reflection_grid(x in -3.0f64..3.0, y in 0.05f64..3.0, e in -1.0f64..1.0, s in prop::bool::ANY) {
            let w = c(x, if s { y } else { -y });
            prop_assert!(lambda_reflection_residual(w, c(e, 0.2)).unwrap().norm() < 1e-10);
        }
    }
}
