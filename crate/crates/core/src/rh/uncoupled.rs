//! The doubled A1 solution and its superposition over the active pairs of a
//! finite uncoupled integral structure.

use super::{Family, RhSolution};
use crate::bps::{BpsStructure, Class, DoubledStructure, Ray, RAY_TOL};
use crate::error::{Error, Result};
use crate::numerics::{C64, TWO_PI_I};
use crate::specfn::ln_lambda;
use crate::torus::{QuadraticRefinement, TorusPoint};
use num_rational::Rational64;
use std::f64::consts::PI;

const PI_I: C64 = C64::new(0.0, PI);

/// `log R_±(ħ) = ±log Λ(±z/2πiħ, (πi ∓ θ)/2πi)`.
pub fn a1_r(plus: bool, z: C64, theta: C64, hbar: C64) -> Result<C64> {
    if plus {
        ln_lambda(z / (TWO_PI_I * hbar), (PI_I - theta) / TWO_PI_I)
    } else {
        Ok(-ln_lambda(-z / (TWO_PI_I * hbar), (PI_I + theta) / TWO_PI_I)?)
    }
}

/// `|R₊ / (R₋ · (1 - X^{±1})^{-1}) - 1|` on `ℍ_{ℓ±}`, where
/// `X = exp(ϑ - z/ħ)` and `θ = ϑ + πi`.
pub fn a1_rabbit_residual(z: C64, theta: C64, hbar: C64) -> Result<f64> {
    let x = (theta - PI_I - z / hbar).exp();
    let factor = if (hbar / z).re > 0.0 { 1.0 - x } else { 1.0 - x.inv() };
    let d = a1_r(true, z, theta, hbar)? - a1_r(false, z, theta, hbar)? + factor.ln();
    Ok((super::wrap_log(d).exp() - 1.0).norm())
}

/// The superposed solution; the A1 case is a single pair.
#[derive(Debug, Clone)]
pub struct UncoupledSolution {
    family: Family,
    structure: DoubledStructure,
    xi: TorusPoint,
    sigma: QuadraticRefinement,
    /// One representative per `±` pair of active classes.
    pairs: Vec<(Class, Rational64)>,
}

fn representative(g: &[i64]) -> bool {
    g.iter().find(|&&x| x != 0).is_some_and(|&x| x > 0)
}

/// Doubled A1 with `Z(γ) = z`, `ξ(γ) = e^ϑ`, `Z(γ^∨) = z^∨`, `ξ(γ^∨) = e^{ϑ^∨}`.
pub fn solve_a1_doubled(z: C64, vartheta: C64, z_dual: C64, vartheta_dual: C64) -> Result<UncoupledSolution> {
    if z.norm() == 0.0 {
        return Err(Error::ZeroCentralCharge);
    }
    let mut sol = solve_uncoupled(
        &BpsStructure::a1(z)?,
        vec![z_dual],
        vec![vartheta, vartheta_dual],
        QuadraticRefinement::minus(1),
    )?;
    sol.family = Family::A1;
    Ok(sol)
}

/// Superposes A1 solutions over the active pairs of `s`.
///
/// `vartheta` holds the log coordinates of `ξ` on the doubled basis. The
/// refinement `sigma` of the base fixes `θ_i = ϑ_i + πi` where
/// `σ(γ_i) = -1`; dual classes carry `σ = +1`.
pub fn solve_uncoupled(
    s: &BpsStructure,
    dual_charge: Vec<C64>,
    vartheta: Vec<C64>,
    sigma: QuadraticRefinement,
) -> Result<UncoupledSolution> {
    let flags = s.classify()?;
    if !flags.finite {
        return Err(Error::NotFinite);
    }
    if !flags.uncoupled {
        return Err(Error::NotUncoupled);
    }
    if !flags.integral {
        return Err(Error::InvalidInput("uncoupled solutions need integral invariants".into()));
    }
    let n = s.rank();
    if sigma.signs.len() != n {
        return Err(Error::Dimension("refinement length differs from rank".into()));
    }
    let structure = s.double(dual_charge)?;
    let xi = TorusPoint::new(structure.lattice().clone(), vartheta, true)?;
    let pairs: Vec<_> = s.active_classes(None)?.into_iter().filter(|(g, _)| representative(g)).collect();
    if pairs.is_empty() {
        return Err(Error::NoActiveClasses);
    }
    Ok(UncoupledSolution { family: Family::Uncoupled, structure, xi, sigma, pairs })
}

impl UncoupledSolution {
    fn theta_shift(&self, i: usize) -> C64 {
        if self.sigma.signs[i] < 0 {
            PI_I
        } else {
            C64::new(0.0, 0.0)
        }
    }

    /// `θ(γ)`, shifted by `πi` when `σ(γ) = +1` so that `e^{θ} = -x_γ(ξ)`.
    fn theta_eff(&self, g: &[i64], theta: &[C64]) -> C64 {
        let t: C64 = g.iter().zip(theta).map(|(&k, t)| t * k as f64).sum();
        if self.sigma.eval(self.structure.base.lattice(), g) > 0 {
            t + PI_I
        } else {
            t
        }
    }
}

impl RhSolution for UncoupledSolution {
    fn family(&self) -> Family {
        self.family
    }

    fn structure(&self) -> &DoubledStructure {
        &self.structure
    }

    fn xi(&self) -> &TorusPoint {
        &self.xi
    }

    fn base_theta(&self) -> Vec<C64> {
        (0..self.base_rank()).map(|i| self.xi.log_coords[i] + self.theta_shift(i)).collect()
    }

    fn with_base(&self, z: &[C64], theta: &[C64]) -> Result<Box<dyn RhSolution>> {
        let n = self.base_rank();
        if z.len() != n || theta.len() != n {
            return Err(Error::Dimension("base point has the wrong length".into()));
        }
        let base = BpsStructure::new(
            self.structure.base.lattice().clone(),
            z.to_vec(),
            self.structure.base.omega_table().clone(),
        )?;
        let structure = base.double(self.structure.dual_charge.clone())?;
        let mut logs = self.xi.log_coords.clone();
        for i in 0..n {
            logs[i] = theta[i] - self.theta_shift(i);
        }
        let xi = TorusPoint::new(structure.lattice().clone(), logs, true)?;
        Ok(Box::new(UncoupledSolution { structure, xi, ..self.clone() }))
    }

    fn log_x(&self, ray: &Ray, j: usize, hbar: C64) -> Result<C64> {
        let n = self.base_rank();
        if j >= 2 * n {
            return Err(Error::Dimension(format!("class index {j} out of range")));
        }
        let zj = self.structure.central(&crate::bps::unit(2 * n, j));
        let mut out = self.xi.log_coords[j] - zj / hbar;
        if j < n {
            return Ok(out);
        }
        let k = j - n;
        let theta = self.base_theta();
        for (g, w) in &self.pairs {
            if g[k] == 0 {
                continue;
            }
            let zg = self.structure.base.central(g);
            let side = (zg / ray.phase()).im;
            if side.abs() <= RAY_TOL * zg.norm() {
                return Err(Error::BoundaryActive(format!("ray is active for class {g:?}")));
            }
            let e = (w * g[k]).to_integer() as f64;
            out += a1_r(side > 0.0, zg, self.theta_eff(g, &theta), hbar)? * e;
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::super::{extract_hessian, half_plane_samples, verify_asymptotics, verify_jumps};
    use super::*;
    use crate::bps::Lattice;
    use crate::numerics::c;
    use crate::specfn::lambda_fn;
    use proptest::prelude::*;

    fn a1() -> UncoupledSolution {
        solve_a1_doubled(c(1.0, 0.0), c(0.3, 0.2) - PI_I, c(0.4, -0.7), c(0.1, 0.5)).unwrap()
    }

    #[test]
    fn rabbit_on_both_half_planes() {
        let (z, th) = (c(0.7, 0.4), c(0.3, 0.2));
        for phase in [z, -z] {
            for h in half_plane_samples(phase / z.norm(), 20, 0.05, 2.0, 1.3) {
                assert!(a1_rabbit_residual(z, th, h).unwrap() < 1e-10);
            }
        }
    }

    #[test]
    fn vanishing_vartheta_matches_symmetric_solution() {
        let (z, h) = (c(1.0, 0.5), c(0.2, 0.3));
        let w = z / (TWO_PI_I * h);
        let r = a1_r(true, z, PI_I, h).unwrap().exp();
        assert!((r - lambda_fn(w, c(1.0, 0.0)).unwrap()).norm() < 1e-12);
        assert!((r - lambda_fn(w, c(0.0, 0.0)).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn jumps_match_wall_crossing() {
        let sol = a1();
        for ray in [Ray::new(c(1.0, 0.0)).unwrap(), Ray::new(c(-1.0, 0.0)).unwrap()] {
            let samples = half_plane_samples(ray.phase(), 20, 0.05, 2.0, 1.3);
            let rep = verify_jumps(&sol, &ray, &samples, 1e-10).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        let quiet = Ray::new(c(0.0, 1.0)).unwrap();
        let rep = verify_jumps(&sol, &quiet, &half_plane_samples(quiet.phase(), 5, 0.1, 1.0, 1.0), 1e-15).unwrap();
        assert_eq!(rep.max_error, 0.0);
    }

    #[test]
    fn dual_class_tends_to_constant() {
        let sol = solve_a1_doubled(c(100.0, 0.0), c(0.3, 0.2), c(0.0, 0.0), c(0.1, 0.0)).unwrap();
        let ray = Ray::new(c(0.0, 1.0)).unwrap();
        let hs: Vec<_> = (1..=20).map(|k| c(0.0, 0.5f64.powi(k))).collect();
        let rep = verify_asymptotics(&sol, &ray, &[0, 1], &hs, 1e-8).unwrap();
        assert!(rep.pass, "{rep:?}");
        // Exact up to the rounding of z/ħ.
        let base = verify_asymptotics(&sol, &ray, &[1, 0], &hs[..4], 1e-12).unwrap();
        assert!(base.distances.iter().all(|&d| d < 1e-12));
    }

    #[test]
    fn a1_hessian() {
        let sol = a1();
        let ray = Ray::new(c(0.0, 1.0)).unwrap();
        let theta = sol.base_theta()[0];
        assert!((theta - c(0.3, 0.2)).norm() < 1e-15);
        let expect = theta / (TWO_PI_I * c(1.0, 0.0));
        for h in [c(0.0, 1.0), c(0.0, 2.0), c(1.0, 1.0), c(-0.5, 0.8), c(0.3, 0.2)] {
            let s = extract_hessian(&sol, &ray, h, None).unwrap();
            assert!((s.value[0][0] - expect).norm() < 1e-7, "{h}: {}", s.value[0][0]);
            assert!(s.base_residual < 1e-8);
        }
    }

    #[test]
    fn a1_hessian_vanishes_at_zero() {
        let sol = solve_a1_doubled(c(1.0, 0.3), -PI_I, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
        let s = extract_hessian(&sol, &Ray::new(c(0.0, 1.0)).unwrap(), c(0.2, 0.5), None).unwrap();
        assert!(s.value[0][0].norm() < 1e-8);
    }

    #[test]
    fn orthogonal_summands_and_cubic() {
        let lat = Lattice::trivial(2);
        let one = Rational64::from_integer(1);
        let s = BpsStructure::from_pairs(lat, vec![c(1.0, 0.2), c(-0.3, 1.1)], &[(vec![1, 0], one), (vec![0, 1], one)])
            .unwrap();
        let sol = solve_uncoupled(
            &s,
            vec![c(0.2, 0.0), c(0.0, 0.3)],
            vec![c(0.1, 0.2), c(-0.2, 0.1), c(0.0, 0.0), c(0.0, 0.0)],
            QuadraticRefinement::minus(2),
        )
        .unwrap();
        for ray in [Ray::new(c(1.0, 0.2)).unwrap(), Ray::new(c(-0.3, 1.1)).unwrap()] {
            let rep = verify_jumps(&sol, &ray, &half_plane_samples(ray.phase(), 10, 0.05, 1.0, 1.0), 1e-10).unwrap();
            assert!(rep.pass, "{rep:?}");
        }
        let th = sol.base_theta();
        let hs = extract_hessian(&sol, &Ray::new(c(1.0, 1.0)).unwrap(), c(0.3, 0.4), None).unwrap();
        for i in 0..2 {
            let expect = th[i] / (TWO_PI_I * s.central_charges()[i]);
            assert!((hs.value[i][i] - expect).norm() < 1e-7);
        }
        assert!(hs.value[0][1].norm() < 1e-8);
    }

    #[test]
    fn coupled_structure_rejected() {
        let s = BpsStructure::a2(c(1.0, 0.0), c(0.0, 1.0)).unwrap();
        let e = solve_uncoupled(&s, vec![c(0.0, 0.0); 2], vec![c(0.0, 0.0); 4], QuadraticRefinement::minus(2));
        assert_eq!(e.unwrap_err().code(), "NOT_UNCOUPLED");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn a1_hessian_is_odd_and_homogeneous(tr in -1.0f64..1.0, ti in -1.0f64..1.0, lam in 0.5f64..3.0) {
            let ray = Ray::new(c(0.0, 1.0)).unwrap();
            let h = c(0.3, 0.6);
            let z = c(1.0, 0.4);
            let at = |z: C64, t: C64| {
                let sol = solve_a1_doubled(z, t - PI_I, c(0.0, 0.0), c(0.0, 0.0)).unwrap();
                extract_hessian(&sol, &ray, h, None).unwrap().value[0][0]
            };
            let t = c(tr, ti);
            let base = at(z, t);
            prop_assert!((at(z, -t) + base).norm() < 1e-8);
            prop_assert!((at(z * lam, t) - base / lam).norm() < 1e-8);
        }

        #[test]
        fn twisted_multiplicativity(a in -2i64..3, b in -2i64..3, p in -2i64..3, q in -2i64..3) {
            let sol = a1();
            let ray = Ray::new(c(0.2, 1.0)).unwrap();
            let h = c(0.4, 0.3);
            let pt = sol.point(&ray, h).unwrap();
            let (g1, g2) = (vec![a, b], vec![p, q]);
            let lat = sol.structure().lattice();
            let lhs = pt.character(&g1) * pt.character(&g2);
            let sign = if lat.pair(&g1, &g2) % 2 == 0 { 1.0 } else { -1.0 };
            let rhs = pt.character(&crate::bps::add(&g1, &g2)) * sign;
            prop_assert!((lhs - rhs).norm() < 1e-10 * rhs.norm().max(1.0));
        }
    }
}
