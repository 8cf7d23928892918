use crate::error::{Error, Result};
use crate::numerics::{c, C64};
use polylog::{Li2, Li3};

/// `Li_k(x)` for `k = 0..=3` on the principal branch (cut along `[1, ∞)`).
pub fn polylog(k: u32, x: C64) -> Result<C64> {
    let one = c(1.0, 0.0);
    let at_one = (x - one).norm() < 1e-15;
    match k {
        0 if at_one => Err(Error::Pole("Li_0 at 1".into())),
        0 => Ok(x / (one - x)),
        1 if at_one => Err(Error::BranchPoint("Li_1 at 1".into())),
        1 => Ok(-(one - x).ln()),
        2 => Ok(x.li2()),
        3 => Ok(x.li3()),
        _ => Err(Error::InvalidInput(format!("polylog order {k} not supported"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rel_err;
    use proptest::prelude::*;

    #[test]
    fn reference_values() {
        assert!(rel_err(polylog(0, c(0.5, 0.0)).unwrap(), c(1.0, 0.0)) < 1e-15);
        assert!(rel_err(polylog(1, c(0.5, 0.0)).unwrap(), c(2f64.ln(), 0.0)) < 1e-15);
        let zeta3 = 1.202_056_903_159_594_3;
        assert!(rel_err(polylog(3, c(1.0, 0.0)).unwrap(), c(zeta3, 0.0)) < 1e-14);
        let pi2_6 = std::f64::consts::PI.powi(2) / 6.0;
        assert!(rel_err(polylog(2, c(1.0, 0.0)).unwrap(), c(pi2_6, 0.0)) < 1e-14);
    }

    #[test]
    fn singular_points() {
        assert_eq!(polylog(0, c(1.0, 0.0)).unwrap_err().code(), "POLE");
        assert_eq!(polylog(1, c(1.0, 0.0)).unwrap_err().code(), "BRANCH_POINT");
    }

    #[test]
    fn series_inside_disc() {
        let x = c(0.3, 0.4);
        for k in 2..=3u32 {
            let s: C64 = (1..200).map(|n| x.powu(n) / (n as f64).powi(k as i32)).sum();
            assert!(rel_err(polylog(k, x).unwrap(), s) < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn derivative_ladder(r in 0.05f64..3.0, a in 0.2f64..6.0) {
            let x = C64::from_polar(r, a);
            prop_assume!((x - 1.0).norm() > 0.1 && (x.im.abs() > 0.05 || x.re < 1.0));
            let h = 1e-5;
            for k in 1..=3u32 {
                let d = (polylog(k, x + h).unwrap() - polylog(k, x - h).unwrap()) / (2.0 * h);
                let expect = polylog(k - 1, x).unwrap() / x;
                prop_assert!((d - expect).norm() < 1e-6 * (1.0 + expect.norm()));
            }
        }
    }
}
