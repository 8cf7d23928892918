use crate::error::{Error, Result};
use crate::numerics::{c, C64};
use std::f64::consts::PI;

pub(crate) const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// The Lanczos series `A(z)` such that
/// `Γ(z+1) = √(2π) t^{z+½} e^{-t} A(z)` with `t = z + g + ½`.
pub(crate) fn lanczos_sum(z: C64) -> C64 {
    let mut x = c(LANCZOS[0], 0.0);
    for (i, &ci) in LANCZOS.iter().enumerate().skip(1) {
        x += ci / (z + i as f64);
    }
    x
}

pub(crate) fn check_pole(z: C64) -> Result<()> {
    let n = z.re.round();
    if n <= 0.0 && (z - n).norm() < 1e-14 * (1.0 + n.abs()) {
        return Err(Error::Pole(format!("gamma at {}", n)));
    }
    Ok(())
}

/// `log Γ(z)` up to an additive multiple of `2πi`.
pub fn ln_gamma(z: C64) -> Result<C64> {
    check_pole(z)?;
    if z.re < 0.5 {
        let s = ln_sin_pi(z);
        return Ok(c(PI.ln(), 0.0) - s - ln_gamma(c(1.0, 0.0) - z)?);
    }
    let zm = z - 1.0;
    let t = zm + LANCZOS_G + 0.5;
    Ok(LN_SQRT_2PI + (zm + 0.5) * t.ln() - t + lanczos_sum(zm).ln())
}

pub fn gamma(z: C64) -> Result<C64> {
    Ok(ln_gamma(z)?.exp())
}

/// `log sin(πz)` computed without overflow for large `|Im z|`.
pub(crate) fn ln_sin_pi(z: C64) -> C64 {
    use crate::numerics::{log1p, I};
    if z.im > 0.0 {
        let e = (I * 2.0 * PI * z).exp();
        -I * PI * z + c(-std::f64::consts::LN_2, 0.5 * PI) + log1p(-e)
    } else if z.im < 0.0 {
        let e = (-I * 2.0 * PI * z).exp();
        I * PI * z + c(-std::f64::consts::LN_2, -0.5 * PI) + log1p(-e)
    } else {
        c((PI * z.re).sin(), 0.0).ln()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rel_err;
    use proptest::prelude::*;

    #[test]
    fn small_values() {
        assert!(rel_err(gamma(c(1.0, 0.0)).unwrap(), c(1.0, 0.0)) < 1e-14);
        assert!(rel_err(gamma(c(5.0, 0.0)).unwrap(), c(24.0, 0.0)) < 1e-13);
        assert!(rel_err(gamma(c(0.5, 0.0)).unwrap(), c(PI.sqrt(), 0.0)) < 1e-13);
        assert!(rel_err(gamma(c(-0.5, 0.0)).unwrap(), c(-2.0 * PI.sqrt(), 0.0)) < 1e-13);
    }

    #[test]
    fn poles() {
        for n in 0..5 {
            let e = gamma(c(-(n as f64), 0.0)).unwrap_err();
            assert_eq!(e.code(), "POLE");
        }
    }

    #[test]
    fn large_argument_factorial() {
        // Γ(31) = 30!
        let f30 = crate::numerics::factorial(30);
        assert!(rel_err(gamma(c(31.0, 0.0)).unwrap(), c(f30, 0.0)) < 1e-12);
    }

    #[test]
    fn imaginary_unit() {
        // |Γ(i)|² = π / sinh π
        let g = gamma(c(0.0, 1.0)).unwrap();
        assert!((g.norm_sqr() - PI / PI.sinh()).abs() < 1e-13);
    }

    proptest! {
        #[test]
        fn reflection(x in -8.0f64..8.0, y in -3.0f64..3.0) {
            let z = c(x, y);
            prop_assume!((z - z.re.round()).norm() > 1e-3);
            let lhs = gamma(z).unwrap() * gamma(c(1.0, 0.0) - z).unwrap() * (z * PI).sin() / PI;
            prop_assert!((lhs - 1.0).norm() < 1e-11);
        }

        #[test]
        fn recurrence(x in -6.0f64..20.0, y in -5.0f64..5.0) {
            let z = c(x, y);
            prop_assume!((z - z.re.round()).norm() > 1e-3);
            let a = gamma(z + 1.0).unwrap();
            let b = gamma(z).unwrap() * z;
            prop_assert!(rel_err(a, b) < 1e-12);
        }
    }
}
