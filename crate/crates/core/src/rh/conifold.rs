//! The resolved-conifold solution built from `F*` and `G*`.

use super::{Family, RhSolution};
use crate::bps::{BpsStructure, Class, DoubledStructure, Ray, RAY_TOL};
use crate::error::{Error, Result};
use crate::numerics::{log1p, C64, TWO_PI_I};
use crate::specfn::{ln_starred, ConifoldKind, QuadOptions, StarredParams};
use crate::torus::TorusPoint;
use num_rational::Rational64;
use std::f64::consts::PI;

const PI_I: C64 = C64::new(0.0, PI);

/// `log B(v,w,ϑ,φ,ħ) = log F*(v,w,ϑ,φ,ħ)`.
pub fn conifold_b(v: C64, w: C64, vartheta: C64, phi: C64, hbar: C64, opts: QuadOptions) -> Result<C64> {
    ln_starred(ConifoldKind::F, &StarredParams::new(v, w, vartheta, phi, hbar)?, opts)
}

/// `log D(v,w,ϑ,φ,ħ) = log G*(v,w,ϑ,φ,ħ) - log G*(0,w,0,φ,ħ)`.
pub fn conifold_d(v: C64, w: C64, vartheta: C64, phi: C64, hbar: C64, opts: QuadOptions) -> Result<C64> {
    let p = StarredParams::new(v, w, vartheta, phi, hbar)?;
    let zero = C64::new(0.0, 0.0);
    // (0, w) sits on the boundary of the parameter domain, where G* is still defined.
    let p0 = StarredParams { v: zero, theta: zero, ..p };
    Ok(ln_starred(ConifoldKind::G, &p, opts)? - ln_starred(ConifoldKind::G, &p0, opts)?)
}

/// `Σ_{n≥n₀} e_n log(1 - a qⁿ)` until `|a qⁿ| < 1e-16`.
fn log_product(a: C64, q: C64, n0: u32, exponent: impl Fn(u32) -> f64) -> Result<C64> {
    if q.norm() >= 1.0 {
        return Err(Error::InvalidInput("|q| must be below 1 for the infinite products".into()));
    }
    let mut acc = C64::new(0.0, 0.0);
    let mut t = a * q.powu(n0);
    let mut n = n0;
    while t.norm() >= 1e-16 || n < n0 + 2 {
        let e = exponent(n);
        if e != 0.0 {
            if (1.0 - t).norm() < 1e-14 {
                return Err(Error::PoleHit(format!("factor 1 - x q^{n} vanishes")));
            }
            acc += log1p(-t) * e;
        }
        t *= q;
        n += 1;
        if n > 100_000 {
            return Err(Error::IllConditioned("infinite product converges too slowly".into()));
        }
    }
    Ok(acc)
}

/// Residuals `|lhs/rhs - 1|` of the reflection relations for `B` and `D`
/// at `ħ ∈ -i·Σ(0)`, with truncated products on the right. When `corrected`
/// is set the right sides include [`conifold_reflection_defect`].
pub fn conifold_reflection_residuals(
    v: C64,
    w: C64,
    vartheta: C64,
    phi: C64,
    hbar: C64,
    corrected: bool,
    opts: QuadOptions,
) -> Result<(f64, f64)> {
    let x = (vartheta - v / hbar).exp();
    let q = (phi - w / hbar).exp();
    let b = conifold_b(v, w, vartheta, phi, hbar, opts)? + conifold_b(v, w, -vartheta, -phi, -hbar, opts)?;
    let rb = log_product(x, q, 0, |_| 1.0)? - log_product(x.inv(), q, 1, |_| 1.0)?;
    let d = conifold_d(v, w, vartheta, phi, hbar, opts)? + conifold_d(v, w, -vartheta, -phi, -hbar, opts)?;
    let rd = log_product(x, q, 0, |n| n as f64)? + log_product(x.inv(), q, 1, |n| n as f64)?
        - log_product(C64::new(1.0, 0.0), q, 1, |k| 2.0 * k as f64)?;
    let (db, dd) = if corrected {
        conifold_reflection_defect(v, w, vartheta, phi, hbar)?
    } else {
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    };
    let res = |a: C64, b: C64| (super::wrap_log(a - b).exp() - 1.0).norm();
    Ok((res(b, rb - db), res(d, rd - dd)))
}

/// The exact defects `(δ_B, δ_D)` in the reflection relations at a general
/// fibre point: `log B(ħ) + log B(-ħ) = log Π_B - δ_B` and likewise for `D`.
///
/// With `e = e^{2πiv/w}` and `e' = e^{2πi(v-ħϑ)/(w-ħφ)}`,
/// `δ_B = Li₁(e') - Li₁(e)` and `δ_D = f(v-ħϑ, w-ħφ) - f(v, w)` where
/// `f(v, w) = Li₂(e)/2πi - (v/w) Li₁(e)`. Both vanish at `ϑ = φ = 0` and are
/// `O(ħ)` otherwise.
pub fn conifold_reflection_defect(v: C64, w: C64, vartheta: C64, phi: C64, hbar: C64) -> Result<(C64, C64)> {
    let li = |k: u32, v: C64, w: C64| crate::specfn::polylog(k, (TWO_PI_I * v / w).exp());
    let f = |v: C64, w: C64| -> Result<C64> { Ok(li(2, v, w)? / TWO_PI_I - v / w * li(1, v, w)?) };
    let (vp, wp) = (v - hbar * vartheta, w - hbar * phi);
    Ok((li(1, vp, wp)? - li(1, v, w)?, f(vp, wp)? - f(v, w)?))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConifoldParams {
    pub v: C64,
    pub w: C64,
    pub vartheta: C64,
    pub phi: C64,
    pub v_dual: C64,
    pub w_dual: C64,
    pub vartheta_dual: C64,
    pub phi_dual: C64,
}

#[derive(Debug, Clone)]
pub struct ConifoldSolution {
    params: ConifoldParams,
    structure: DoubledStructure,
    xi: TorusPoint,
    opts: QuadOptions,
}

impl ConifoldSolution {
    pub fn new(params: ConifoldParams, opts: QuadOptions) -> Result<Self> {
        let p = params;
        let structure = BpsStructure::conifold(p.v, p.w)?.double(vec![p.v_dual, p.w_dual])?;
        let xi =
            TorusPoint::new(structure.lattice().clone(), vec![p.vartheta, p.phi, p.vartheta_dual, p.phi_dual], true)?;
        Ok(ConifoldSolution { params, structure, xi, opts })
    }

    pub fn params(&self) -> &ConifoldParams {
        &self.params
    }

    /// The index `n` of the sector `Σ(n)` between `ℓ_{n-1}` and `ℓ_n`
    /// containing `ray`.
    pub fn sector(&self, ray: &Ray) -> Result<i64> {
        let (v, w) = (self.params.v, self.params.w);
        let u = ray.phase() / w * w.norm();
        let c = (v / w).im;
        if u.im <= RAY_TOL {
            return Err(Error::RegionUnsupported("only rays on the side of ℓ_∞ containing the ℓ_n are handled".into()));
        }
        let a = c * u.re / u.im - (v / w).re;
        let n = a.ceil();
        if (a - a.round()).abs() < RAY_TOL * (1.0 + a.abs()) {
            return Err(Error::BoundaryActive(format!("ray is ℓ_{}", a.round())));
        }
        Ok(n as i64)
    }

    /// `(log B_n(ħ), log D_n(ħ))`.
    pub fn log_bd(&self, n: i64, hbar: C64) -> Result<(C64, C64)> {
        let p = &self.params;
        let nf = n as f64;
        let (vn, tn) = (p.v + p.w * nf, p.vartheta + p.phi * nf);
        let b = conifold_b(vn, p.w, tn, p.phi, hbar, self.opts)?;
        let d = conifold_d(vn, p.w, tn, p.phi, hbar, self.opts)?;
        Ok((b, d + b * nf))
    }
}

/// Builds the conifold solution on the doubled lattice.
pub fn solve_conifold(params: ConifoldParams, opts: QuadOptions) -> Result<ConifoldSolution> {
    ConifoldSolution::new(params, opts)
}

impl RhSolution for ConifoldSolution {
    fn family(&self) -> Family {
        Family::Conifold
    }

    fn structure(&self) -> &DoubledStructure {
        &self.structure
    }

    fn xi(&self) -> &TorusPoint {
        &self.xi
    }

    /// `θ = ϑ - πi` for `β` (where the refinement is `-1`) and `φ` for `δ`.
    fn base_theta(&self) -> Vec<C64> {
        vec![self.params.vartheta - PI_I, self.params.phi]
    }

    fn with_base(&self, z: &[C64], theta: &[C64]) -> Result<Box<dyn RhSolution>> {
        if z.len() != 2 || theta.len() != 2 {
            return Err(Error::Dimension("conifold base point has two coordinates".into()));
        }
        let params = ConifoldParams { v: z[0], w: z[1], vartheta: theta[0] + PI_I, phi: theta[1], ..self.params };
        Ok(Box::new(ConifoldSolution::new(params, self.opts)?))
    }

    fn log_x(&self, ray: &Ray, j: usize, hbar: C64) -> Result<C64> {
        let p = &self.params;
        match j {
            0 => Ok(p.vartheta - p.v / hbar),
            1 => Ok(p.phi - p.w / hbar),
            2 | 3 => {
                let n = self.sector(ray)?;
                let (b, d) = self.log_bd(n, hbar)?;
                Ok(if j == 2 { p.vartheta_dual - p.v_dual / hbar + b } else { p.phi_dual - p.w_dual / hbar + d })
            }
            _ => Err(Error::Dimension(format!("class index {j} out of range"))),
        }
    }

    /// The single class `β + nδ` on `ℓ_n`; other rays are not handled.
    fn ray_classes(&self, ray: &Ray) -> Result<Vec<(Class, Rational64)>> {
        let (v, w) = (self.params.v, self.params.w);
        let a = ray.phase() / w * w.norm();
        if a.im <= RAY_TOL {
            return Err(Error::RegionUnsupported("jumps are checked on the rays ℓ_n only".into()));
        }
        let t = (v / w).im * a.re / a.im - (v / w).re;
        let n = t.round();
        if (t - n).abs() > 1e-9 * (1.0 + t.abs()) {
            return Ok(Vec::new());
        }
        Ok(vec![(vec![1, n as i64, 0, 0], Rational64::from_integer(1))])
    }
}

/// Second derivatives of the conifold Joyce function in `(θ, φ)`.
pub fn conifold_hessian_closed_form(v: C64, w: C64, theta: C64, phi: C64) -> Result<[[C64; 2]; 2]> {
    let li0 = crate::specfn::polylog(0, (crate::numerics::TWO_PI_I * v / w).exp())?;
    let k = (v * phi - w * theta) * li0;
    let w2 = w * w;
    let tt = k / w2;
    let tp = -v * k / (w2 * w);
    let pp = v * v * k / (w2 * w2);
    Ok([[tt, tp], [tp, pp]])
}

#[cfg(test)]
mod tests {
    use super::super::{extract_hessian, verify_asymptotics, verify_jumps};
    use super::*;
    use crate::numerics::c;

    fn params() -> ConifoldParams {
        ConifoldParams {
            v: c(0.4, 0.7),
            w: c(1.0, 0.0),
            vartheta: c(0.13, -0.21),
            phi: c(0.07, 0.11),
            v_dual: c(0.2, 0.1),
            w_dual: c(-0.3, 0.2),
            vartheta_dual: c(0.05, 0.0),
            phi_dual: c(0.0, -0.04),
        }
    }

    fn solution() -> ConifoldSolution {
        solve_conifold(params(), QuadOptions::default()).unwrap()
    }

    #[test]
    fn sectors() {
        let s = solution();
        assert_eq!(s.sector(&Ray::new(c(0.3, 0.7)).unwrap()).unwrap(), 0);
        assert_eq!(s.sector(&Ray::new(c(0.5, 0.7)).unwrap()).unwrap(), 1);
        assert_eq!(s.sector(&Ray::new(c(-0.7, 0.7)).unwrap()).unwrap(), -1);
        assert_eq!(s.sector(&Ray::new(c(0.4, 0.7)).unwrap()).unwrap_err().code(), "BOUNDARY_ACTIVE");
        assert_eq!(s.sector(&Ray::new(c(0.4, -0.7)).unwrap()).unwrap_err().code(), "REGION_UNSUPPORTED");
    }

    #[test]
    fn difference_relation() {
        let p = params();
        let o = QuadOptions::default();
        for h in [c(0.1, 0.1), c(0.05, 0.2), c(0.2, 0.05), c(0.3, 0.3)] {
            let x = (p.vartheta - p.v / h).exp();
            let b0 = conifold_b(p.v, p.w, p.vartheta, p.phi, h, o).unwrap();
            let b1 = conifold_b(p.v + p.w, p.w, p.vartheta + p.phi, p.phi, h, o).unwrap();
            let r = super::super::wrap_log(b1 - b0 + log1p(-x));
            assert!(r.norm() < 1e-8, "B at {h}: {r}");
            let d0 = conifold_d(p.v, p.w, p.vartheta, p.phi, h, o).unwrap();
            let d1 = conifold_d(p.v + p.w, p.w, p.vartheta + p.phi, p.phi, h, o).unwrap();
            let r = super::super::wrap_log(d1 - d0 + b1);
            assert!(r.norm() < 1e-8, "D at {h}: {r}");
        }
    }

    #[test]
    fn reflection_relation() {
        let p = params();
        // -i·Σ(0): Σ(0) lies between v - w and v.
        let mid = (p.v / p.v.norm() + (p.v - p.w) / (p.v - p.w).norm()) * 0.5;
        let o = QuadOptions::default();
        let zero = c(0.0, 0.0);
        for r in [0.1, 0.3] {
            let h = -crate::numerics::I * mid * r;
            let (eb, ed) = conifold_reflection_residuals(p.v, p.w, zero, zero, h, false, o).unwrap();
            assert!(eb < 1e-7 && ed < 1e-7, "{h}: {eb:.2e} {ed:.2e}");
            let (eb, ed) = conifold_reflection_residuals(p.v, p.w, p.vartheta, p.phi, h, true, o).unwrap();
            assert!(eb < 1e-10 && ed < 1e-10, "{h}: {eb:.2e} {ed:.2e}");
            // Without the defect the relation fails at order ħ.
            let (eb, _) = conifold_reflection_residuals(p.v, p.w, p.vartheta, p.phi, h, false, o).unwrap();
            assert!(eb > 1e-4);
        }
    }

    #[test]
    fn jump_across_l0() {
        let s = solution();
        let ray = Ray::new(s.params.v).unwrap();
        let samples = super::super::half_plane_samples(ray.phase(), 6, 0.05, 0.4, 1.0);
        let rep = verify_jumps(&s, &ray, &samples, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
    }

    #[test]
    fn dual_beta_tends_to_constant() {
        let s = solution();
        let ray = Ray::new(c(0.3, 0.7)).unwrap();
        let hs: Vec<_> = (1..=20).map(|k| ray.phase() * 0.5f64.powi(k)).collect();
        for g in [[0, 0, 1, 0], [0, 0, 0, 1]] {
            let rep = verify_asymptotics(&s, &ray, &g, &hs, 1e-6).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
    }

    #[test]
    fn hessian_matches_closed_form() {
        let s = solution();
        let th = s.base_theta();
        let expect = conifold_hessian_closed_form(s.params.v, s.params.w, th[0], th[1]).unwrap();
        let ray = Ray::new(c(0.3, 0.7)).unwrap();
        let hs = extract_hessian(&s, &ray, c(0.1, 0.2), None).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!(
                    (hs.value[i][j] - expect[i][j]).norm() < 1e-6,
                    "{i}{j}: {} vs {}",
                    hs.value[i][j],
                    expect[i][j]
                );
            }
        }
        // v J_θ + w J_φ = 0 differentiated in θ.
        let (v, w) = (s.params.v, s.params.w);
        assert!((v * expect[0][0] + w * expect[0][1]).norm() < 1e-12);
    }
}
