//! Closed-form solutions of the doubled Riemann–Hilbert problems, their
//! verification, and extraction of Joyce Hessians from them.

mod conifold;
mod uncoupled;

pub use conifold::{
    conifold_b, conifold_d, conifold_hessian_closed_form, conifold_reflection_defect, conifold_reflection_residuals,
    solve_conifold, ConifoldParams, ConifoldSolution,
};
pub use uncoupled::{a1_r, a1_rabbit_residual, solve_a1_doubled, solve_uncoupled, UncoupledSolution};

use crate::bps::{self, BpsStructure, Class, DoubledStructure, Ray, RAY_TOL};
use crate::error::{Error, Result};
use crate::numerics::C64;
use crate::torus::{apply_bps_automorphism, BirationalAutomorphism, CheckReport, TorusPoint};
use num_rational::Rational64;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Family {
    A1,
    Uncoupled,
    Conifold,
}

/// `z` with its imaginary part reduced to `(-π, π]`.
pub fn wrap_log(z: C64) -> C64 {
    let k = ((z.im + PI) / (2.0 * PI)).ceil() - 1.0;
    C64::new(z.re, z.im - 2.0 * PI * k)
}

/// A solution `X_r(ħ)` of the doubled problem, as a family of functions of
/// the base point `(z, θ)`.
///
/// Classes are indexed by the doubled basis: base classes `0..n`, then the
/// dual classes `n..2n`.
pub trait RhSolution: Send + Sync {
    fn family(&self) -> Family;

    fn structure(&self) -> &DoubledStructure;

    /// The constant term `ξ` as a twisted point of the doubled torus.
    fn xi(&self) -> &TorusPoint;

    /// Fibre coordinates `θ_i` of the base, as they enter the Joyce function.
    fn base_theta(&self) -> Vec<C64>;

    /// The same solution at another base point, dual data unchanged.
    fn with_base(&self, z: &[C64], theta: &[C64]) -> Result<Box<dyn RhSolution>>;

    /// `log X_{r,γ_j}(ħ)` for basis class `j` and a non-active ray `r`.
    fn log_x(&self, ray: &Ray, j: usize, hbar: C64) -> Result<C64>;

    fn base_rank(&self) -> usize {
        self.structure().base_rank()
    }

    fn base_z(&self) -> Vec<C64> {
        self.structure().base.central_charges().to_vec()
    }

    /// Classes on `ray` with their invariants, for jump verification.
    fn ray_classes(&self, ray: &Ray) -> Result<Vec<(Class, Rational64)>> {
        let z = self.structure().base.central_charges();
        let cutoff = 100.0 * z.iter().map(|c| c.norm()).fold(0.0, f64::max);
        Ok(self
            .structure()
            .structure
            .active_classes(Some(cutoff))?
            .into_iter()
            .filter(|(g, _)| ray.contains(self.structure().central(g)))
            .collect())
    }

    /// The whole point `X_r(ħ)` of the doubled twisted torus.
    fn point(&self, ray: &Ray, hbar: C64) -> Result<TorusPoint> {
        let n = 2 * self.base_rank();
        let logs = (0..n).map(|j| self.log_x(ray, j, hbar)).collect::<Result<Vec<_>>>()?;
        TorusPoint::new(self.structure().lattice().clone(), logs, true)
    }

    /// `log X_{r,γ}(ħ)` for a general class of the doubled lattice.
    fn log_x_class(&self, ray: &Ray, g: &[i64], hbar: C64) -> Result<C64> {
        Ok(self.point(ray, hbar)?.log_character(g))
    }
}

fn angle_gap(a: &Ray, b: &Ray) -> f64 {
    (a.phase() / b.phase()).arg().abs()
}

/// Largest rotation that keeps a ray away from every other active ray.
fn isolation(s: &BpsStructure, ray: &Ray) -> Result<f64> {
    let cutoff = 100.0 * s.central_charges().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let mut gap = 0.1f64;
    for (r, _) in s.active_rays(cutoff)? {
        let d = angle_gap(&r, ray);
        if d > RAY_TOL {
            gap = gap.min(d / 2.0);
        }
    }
    Ok(gap)
}

/// Checks `X_{r₂}(ħ) = 𝕊(ℓ)(X_{r₁}(ħ))` for rays `r₁`, `r₂` just
/// anticlockwise and clockwise of `ray`, at each sample `ħ`.
///
/// The wall-crossing image is computed on the twisted torus, independently
/// of the solution formulas.
pub fn verify_jumps(sol: &dyn RhSolution, ray: &Ray, samples: &[C64], tol: f64) -> Result<CheckReport> {
    let eps = isolation(&sol.structure().base, ray)?;
    let r_acw = ray.rotate(eps);
    let r_cw = ray.rotate(-eps);
    let auto = BirationalAutomorphism::new(sol.ray_classes(ray)?, true);
    let n = 2 * sol.base_rank();
    let mut max_error = 0.0f64;
    for &h in samples {
        let before = sol.point(&r_acw, h)?;
        let image = apply_bps_automorphism(&auto, &before)?;
        let after = sol.point(&r_cw, h)?;
        for j in 0..n {
            let g = bps::unit(n, j);
            let d = wrap_log(after.log_character(&g) - image.log_character(&g));
            max_error = max_error.max((d.exp() - 1.0).norm());
        }
    }
    Ok(CheckReport { max_error, samples: samples.len(), pass: max_error < tol })
}

#[derive(Debug, Clone, Serialize)]
pub struct AsymptoticReport {
    /// `|log(e^{Z(γ)/ħ} X_{r,γ}(ħ) / ξ(γ))|` along the sequence.
    pub distances: Vec<f64>,
    /// Whether the second half of `distances` is non-increasing.
    pub monotone: bool,
    pub final_distance: f64,
    /// Least-squares slope of `log|e^{Z(γ)/ħ} X_{r,γ}(ħ)/ξ(γ)|` against
    /// `log|ħ|` for large `|ħ|` along the ray.
    pub growth_exponent: f64,
    pub pass: bool,
}

fn normalized_log(sol: &dyn RhSolution, ray: &Ray, g: &[i64], hbar: C64) -> Result<C64> {
    let x = sol.log_x_class(ray, g, hbar)?;
    Ok(wrap_log(x + sol.structure().central(g) / hbar - sol.xi().log_character(g)))
}

/// Convergence `e^{Z(γ)/ħ} X_{r,γ}(ħ) → ξ(γ)` along `hbars` and polynomial
/// growth at large `|ħ|`.
pub fn verify_asymptotics(
    sol: &dyn RhSolution,
    ray: &Ray,
    g: &[i64],
    hbars: &[C64],
    tol: f64,
) -> Result<AsymptoticReport> {
    if hbars.is_empty() {
        return Err(Error::InvalidInput("empty ħ sequence".into()));
    }
    let distances =
        hbars.iter().map(|&h| normalized_log(sol, ray, g, h).map(|d| d.norm())).collect::<Result<Vec<_>>>()?;
    let monotone = distances[distances.len() / 2..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-9) + 1e-14);
    let final_distance = *distances.last().expect("nonempty");

    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    let m = 6;
    for k in 0..m {
        let h = ray.phase() * 10f64.powf(1.0 + 0.5 * k as f64);
        let y = normalized_log(sol, ray, g, h)?.re;
        let x = h.norm().ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    let mf = m as f64;
    let growth_exponent = (mf * sxy - sx * sy) / (mf * sxx - sx * sx);
    let pass = monotone && final_distance < tol && growth_exponent.is_finite() && growth_exponent.abs() < 20.0;
    Ok(AsymptoticReport { distances, monotone, final_distance, growth_exponent, pass })
}

#[derive(Debug, Clone, Serialize)]
pub struct HessianSample {
    pub z: Vec<C64>,
    pub theta: Vec<C64>,
    pub hbar: C64,
    /// `∂²J/∂θ_i∂θ_j` on the base.
    pub value: Vec<Vec<C64>>,
    /// Difference between the steps `h` and `h/2`.
    pub richardson_gap: f64,
    pub symmetry_gap: f64,
    /// `max |D_i x_j|` over base classes, which must vanish.
    pub base_residual: f64,
}

/// Directional derivative of `log X_{r,γ_j}` along `(∂/∂z_i + ħ^{-1}∂/∂θ_i)`.
fn d_log_x(sol: &dyn RhSolution, ray: &Ray, i: usize, j: usize, hbar: C64, h: f64) -> Result<C64> {
    let (z, th) = (sol.base_z(), sol.base_theta());
    let eval = |t: f64| -> Result<C64> {
        let mut z1 = z.clone();
        let mut t1 = th.clone();
        z1[i] += t;
        t1[i] += t / hbar;
        sol.with_base(&z1, &t1)?.log_x(ray, j, hbar)
    };
    Ok(wrap_log(eval(h)? - eval(-h)?) / (2.0 * h))
}

/// `∂/∂θ_q log X_{r,γ_j}` for a base direction `q`.
fn dtheta_log_x(sol: &dyn RhSolution, ray: &Ray, q: usize, j: usize, hbar: C64, h: f64) -> Result<C64> {
    let (z, th) = (sol.base_z(), sol.base_theta());
    let eval = |t: f64| -> Result<C64> {
        let mut t1 = th.clone();
        t1[q] += t;
        sol.with_base(&z, &t1)?.log_x(ray, j, hbar)
    };
    Ok(wrap_log(eval(h)? - eval(-h)?) / (2.0 * h))
}

/// Solves `J_i·(I - M) = D_i x_∨` for the Hessian rows, where
/// `M_{pj} = Σ_q η_{pq} ∂x_{j∨}/∂θ_q` over base `p, q`.
fn hessian_at_step(sol: &dyn RhSolution, ray: &Ray, hbar: C64, h: f64) -> Result<Vec<Vec<C64>>> {
    let n = sol.base_rank();
    let skew = sol.structure().base.lattice().skew().to_vec();
    let coupled = skew.iter().flatten().any(|&e| e != 0);
    let mut a = nalgebra::DMatrix::<C64>::identity(n, n);
    if coupled {
        for p in 0..n {
            for j in 0..n {
                let mut m = C64::new(0.0, 0.0);
                for (q, &e) in skew[p].iter().enumerate() {
                    if e != 0 {
                        m += dtheta_log_x(sol, ray, q, n + j, hbar, h)? * e as f64;
                    }
                }
                a[(p, j)] -= m;
            }
        }
    }
    // Row i of J solves J_i A = d_i, that is Aᵀ J_iᵀ = d_iᵀ.
    let at = a.transpose();
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let d = (0..n).map(|j| d_log_x(sol, ray, i, n + j, hbar, h)).collect::<Result<Vec<_>>>()?;
        rows.push(crate::numerics::solve(&at, &d)?);
    }
    Ok(rows)
}

fn max_diff(a: &[Vec<C64>], b: &[Vec<C64>]) -> f64 {
    a.iter().flatten().zip(b.iter().flatten()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// The base Hessian of the Joyce function at the solution's base point,
/// from the deformed-connection equation at one value of `ħ`.
///
/// `fd_step` defaults to `1e-5·max(1, |z|)`; the result is Richardson
/// extrapolated from steps `h` and `h/2`, which must agree to `1e-6`.
pub fn extract_hessian(sol: &dyn RhSolution, ray: &Ray, hbar: C64, fd_step: Option<f64>) -> Result<HessianSample> {
    let n = sol.base_rank();
    let z = sol.base_z();
    let zmax = z.iter().map(|c| c.norm()).fold(1.0, f64::max);
    let h = fd_step.unwrap_or(1e-5 * zmax);
    let coarse = hessian_at_step(sol, ray, hbar, h)?;
    let fine = hessian_at_step(sol, ray, hbar, h / 2.0)?;
    let richardson_gap = max_diff(&coarse, &fine);
    let scale = fine.iter().flatten().map(|x| x.norm()).fold(1.0, f64::max);
    if richardson_gap > 1e-6 * scale {
        return Err(Error::IllConditioned(format!("finite differences disagree by {richardson_gap:.3e}")));
    }
    let value: Vec<Vec<C64>> =
        (0..n).map(|i| (0..n).map(|j| (fine[i][j] * 4.0 - coarse[i][j]) / 3.0).collect()).collect();
    let mut symmetry_gap = 0.0f64;
    let mut base_residual = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            symmetry_gap = symmetry_gap.max((value[i][j] - value[j][i]).norm());
            base_residual = base_residual.max(d_log_x(sol, ray, i, j, hbar, h)?.norm());
        }
    }
    Ok(HessianSample { z, theta: sol.base_theta(), hbar, value, richardson_gap, symmetry_gap, base_residual })
}

/// `max |Σ_{p,q} η_{pq} ∂x_i/∂θ_p ∂x_j/∂θ_q - η_{ij}|` over the doubled
/// basis: how far `θ ↦ x` is from being Poisson.
pub fn poisson_residual(sol: &dyn RhSolution, ray: &Ray, hbar: C64, h: f64) -> Result<f64> {
    let n = sol.base_rank();
    let eta = sol.structure().lattice().skew().to_vec();
    let mut p = nalgebra::DMatrix::<C64>::zeros(2 * n, 2 * n);
    for i in 0..2 * n {
        for q in 0..n {
            p[(i, q)] = dtheta_log_x(sol, ray, q, i, hbar, h)?;
        }
        if i >= n {
            p[(i, i)] = C64::new(1.0, 0.0);
        }
    }
    let e = nalgebra::DMatrix::<C64>::from_fn(2 * n, 2 * n, |i, j| C64::new(eta[i][j] as f64, 0.0));
    let r = &p * &e * p.transpose() - &e;
    Ok(r.iter().map(|x| x.norm()).fold(0.0, f64::max))
}

/// `ħ = phase·ρ·e^{iψ}` samples spread over the open half-plane centred on
/// `phase`, at moduli between `rmin` and `rmax`.
pub fn half_plane_samples(phase: C64, count: usize, rmin: f64, rmax: f64, spread: f64) -> Vec<C64> {
    (0..count)
        .map(|k| {
            let t = if count > 1 { k as f64 / (count - 1) as f64 } else { 0.5 };
            let psi = spread * (2.0 * t - 1.0);
            let rho = rmin * (rmax / rmin).powf(((k * 7) % count.max(1)) as f64 / count.max(1) as f64);
            phase * C64::from_polar(rho, psi)
        })
        .collect()
}

/// `phase·2^{-k}` for `k = 1..=count`.
pub fn geometric_hbars(phase: C64, count: usize) -> Vec<C64> {
    (1..=count as i32).map(|k| phase * 0.5f64.powi(k)).collect()
}
