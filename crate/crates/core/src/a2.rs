//! The A2 quiver family over `M = {4a³ + 27b² ≠ 0}`: periods of
//! `y² = x³ + ax + b`, the chamber spectrum, fibre coordinates `θ`, the
//! explicit Joyce function, and numerical checks of the isomonodromy flows
//! and of the Joyce form.
//!
//! Fibre coordinates carry the sign `θ_i = -∫_{γ_i} (p/(x-q) + r) dx/2y`.
//! With this sign the flows push forward to `∂_{z_i} + ħ⁻¹∂_{θ_i} + ...`
//! and the Joyce form comes out as `+(2πi/5)(da⊗db + db⊗da)`.

use crate::bps::{a2_chamber, neg, BpsStructure, Class};
use crate::error::{Error, Result};
use crate::frobenius::{a2_discriminant, FrobeniusStructure};
use crate::joyce::{compatibility_from_data, linear_data_from_third, CompatibilityReport, FlatFrameData, LinearData};
use crate::numerics::{c, condition, inverse, newton, polydisc_coefficients, Tensor3, C64, TWO_PI_I};
use gauss_quad::chebyshev::{GaussChebyshevFirstKind, GaussChebyshevSecondKind};
use nalgebra::{DMatrix, Matrix3};
use serde::Serialize;

const DISC_TOL: f64 = 1e-10;
/// Minimum log Bernstein-ellipse parameter of the third root seen from a segment.
const ROOT_LOG_RHO: f64 = 0.005;
/// The same bound for `q`: the exclusion tube around each cycle.
const Q_LOG_RHO: f64 = 0.02;
const MAX_NODES: usize = 8192;
/// Polydisc radius and resolution for θ-Hessians at generic points.
const HESS_RHO: f64 = 0.002;
const HESS_M: usize = 8;
/// Polydisc radius for third derivatives at `θ = 0`.
const FORM_RHO: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct A2Point {
    pub a: C64,
    pub b: C64,
}

impl A2Point {
    pub fn new(a: C64, b: C64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::InvalidInput("non-finite (a, b)".into()));
        }
        let scale = 1f64.max(a.norm().powi(3)).max(b.norm_sqr());
        if a2_discriminant(a, b).norm() <= DISC_TOL * scale {
            return Err(Error::OnDiscriminant);
        }
        Ok(A2Point { a, b })
    }

    pub fn discriminant(&self) -> C64 {
        a2_discriminant(self.a, self.b)
    }

    pub fn cubic(&self, x: C64) -> C64 {
        x * x * x + self.a * x + self.b
    }

    /// Roots of `x³ + ax + b`, sorted by real part, then imaginary part.
    pub fn roots(&self) -> Result<[C64; 3]> {
        let z = c(0.0, 0.0);
        let one = c(1.0, 0.0);
        let comp = Matrix3::new(z, z, -self.b, one, z, -self.a, z, one, z);
        let ev = comp.eigenvalues().ok_or_else(|| Error::IllConditioned("companion eigenvalues".into()))?;
        let mut roots = [ev[0], ev[1], ev[2]];
        for x in roots.iter_mut() {
            for _ in 0..3 {
                let d = *x * *x * 3.0 + self.a;
                if d.norm() > 0.0 {
                    *x -= self.cubic(*x) / d;
                }
            }
        }
        let scale = roots.iter().map(|r| r.norm()).fold(1.0, f64::max);
        roots.sort_by(
            |x, y| {
                if (x.re - y.re).abs() > 1e-12 * scale {
                    x.re.total_cmp(&y.re)
                } else {
                    x.im.total_cmp(&y.im)
                }
            },
        );
        Ok(roots)
    }
}

/// A point `(a, b, q, p, r)` of the fibre bundle `W` with `p² = x³+ax+b` at `x = q`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WPoint {
    pub a: C64,
    pub b: C64,
    pub q: C64,
    pub p: C64,
    pub r: C64,
}

impl WPoint {
    pub fn new(a: C64, b: C64, q: C64, p: C64, r: C64) -> Result<Self> {
        let base = A2Point::new(a, b)?;
        if !(q.is_finite() && p.is_finite() && r.is_finite()) {
            return Err(Error::InvalidInput("non-finite (q, p, r)".into()));
        }
        let rhs = base.cubic(q);
        let scale = [1.0, p.norm_sqr(), q.norm().powi(3), (a * q).norm(), b.norm()].into_iter().fold(0.0, f64::max);
        if p.norm() <= 1e-12 * scale.sqrt() {
            return Err(Error::PZero);
        }
        if (p * p - rhs).norm() > 1e-10 * scale {
            return Err(Error::InvalidInput(format!("p² - q³ - aq - b = {:.3e}", (p * p - rhs).norm())));
        }
        Ok(WPoint { a, b, q, p, r })
    }

    /// Picks `p = ±√(q³+aq+b)`, the sign closest to `hint` (principal without one).
    pub fn from_qr(a: C64, b: C64, q: C64, r: C64, hint: Option<C64>) -> Result<Self> {
        let mut p = A2Point::new(a, b)?.cubic(q).sqrt();
        if let Some(h) = hint {
            if (p - h).norm() > (p + h).norm() {
                p = -p;
            }
        }
        Self::new(a, b, q, p, r)
    }

    pub fn base(&self) -> A2Point {
        A2Point { a: self.a, b: self.b }
    }

    /// The covering involution `(p, r) → (-p, -r)`.
    pub fn involution(&self) -> WPoint {
        WPoint { p: -self.p, r: -self.r, ..*self }
    }
}

/// A cycle lifting the segment between two roots, on the sheet where `y`
/// takes the value `y_mid` at the segment midpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cycle {
    pub from: usize,
    pub to: usize,
    pub y_mid: C64,
}

impl Cycle {
    fn third(&self) -> usize {
        3 - self.from - self.to
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CycleBasis {
    pub roots: [C64; 3],
    pub cycles: [Cycle; 2],
}

impl CycleBasis {
    /// Cycles over `(e₁,e₂)` and `(e₂,e₃)`, oriented so that both periods
    /// lie in the upper half-plane and ordered so that `⟨γ₁,γ₂⟩ = 1`.
    ///
    /// The intersection sign is read off from the holomorphic periods:
    /// `⟨γ₁,γ₂⟩ = 1` when `Im(ω₂/ω₁) > 0` with `ω_i = ∫_{γ_i} dx/y`.
    pub fn canonical(pt: &A2Point) -> Result<Self> {
        let roots = pt.roots()?;
        let mut cycles = [(0, 1), (1, 2)].map(|(i, j): (usize, usize)| Cycle {
            from: i,
            to: j,
            y_mid: pt.cubic((roots[i] + roots[j]) * 0.5).sqrt(),
        });
        for cyc in cycles.iter_mut() {
            let z = Segment::new(&roots, cyc).period()?;
            if z.im < -1e-14 * z.norm() || (z.im.abs() <= 1e-14 * z.norm() && z.re < 0.0) {
                std::mem::swap(&mut cyc.from, &mut cyc.to);
            }
        }
        let basis = CycleBasis { roots, cycles };
        let [s1, s2] = basis.segments();
        let w1 = s1.integrate_over_y(None, |_| [c(1.0, 0.0)])?[0];
        let w2 = s2.integrate_over_y(None, |_| [c(1.0, 0.0)])?[0];
        if (w2 / w1).im < 0.0 {
            return Ok(CycleBasis { roots, cycles: [cycles[1], cycles[0]] });
        }
        Ok(basis)
    }

    /// Follows the roots and sheets continuously to a nearby point.
    pub fn continue_to(&self, pt: &A2Point) -> Result<Self> {
        let new = pt.roots()?;
        let sep = (0..3)
            .flat_map(|i| (i + 1..3).map(move |j| (i, j)))
            .map(|(i, j)| (self.roots[i] - self.roots[j]).norm())
            .fold(f64::INFINITY, f64::min);
        let perms = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let (best, moved) = perms
            .iter()
            .map(|p| (p, (0..3).map(|i| (new[p[i]] - self.roots[i]).norm()).fold(0.0, f64::max)))
            .min_by(|x, y| x.1.total_cmp(&y.1))
            .expect("six permutations");
        if moved > 0.25 * sep {
            return Err(Error::InvalidInput("continuation step too large to follow the roots".into()));
        }
        let roots = [new[best[0]], new[best[1]], new[best[2]]];
        let cycles = self.cycles.map(|cyc| {
            let y = pt.cubic((roots[cyc.from] + roots[cyc.to]) * 0.5).sqrt();
            let y_mid = if (y - cyc.y_mid).norm() <= (y + cyc.y_mid).norm() { y } else { -y };
            Cycle { y_mid, ..cyc }
        });
        Ok(CycleBasis { roots, cycles })
    }

    /// The same basis with cycle `i` reversed.
    pub fn reversed(&self, i: usize) -> Self {
        let mut out = *self;
        std::mem::swap(&mut out.cycles[i].from, &mut out.cycles[i].to);
        out
    }

    fn segments(&self) -> [Segment; 2] {
        self.cycles.map(|cyc| Segment::new(&self.roots, &cyc))
    }
}

/// One root-to-root segment. With `x = eᵢ + (eⱼ-eᵢ)(1+t)/2` the curve reads
/// `y = κ √(1-t²) g(t)`, where `g = √(x-e_k)` is analytic on the segment.
struct Segment {
    ei: C64,
    ej: C64,
    ek: C64,
    kappa: C64,
    g0: C64,
}

impl Segment {
    fn new(roots: &[C64; 3], cyc: &Cycle) -> Self {
        let (ei, ej, ek) = (roots[cyc.from], roots[cyc.to], roots[cyc.third()]);
        let g0 = ((ei + ej) * 0.5 - ek).sqrt();
        Segment { ei, ej, ek, kappa: cyc.y_mid / g0, g0 }
    }

    fn x(&self, t: f64) -> C64 {
        self.ei + (self.ej - self.ei) * (0.5 * (1.0 + t))
    }

    fn g(&self, t: f64) -> C64 {
        let lm = (self.ei + self.ej) * 0.5 - self.ek;
        self.g0 * ((self.x(t) - self.ek) / lm).sqrt()
    }

    /// Log of the Bernstein-ellipse parameter of `s` relative to the segment.
    fn log_rho(&self, s: C64) -> f64 {
        let u = (s * 2.0 - self.ei - self.ej) / (self.ej - self.ei);
        let w = (u * u - 1.0).sqrt();
        (u + w).norm().max((u - w).norm()).ln()
    }

    fn nodes(&self, extra: Option<C64>) -> Result<usize> {
        let mut l = self.log_rho(self.ek);
        if l < ROOT_LOG_RHO {
            return Err(Error::RootCollision);
        }
        if let Some(s) = extra {
            let ls = self.log_rho(s);
            if ls < Q_LOG_RHO {
                return Err(Error::QOnCycle);
            }
            l = l.min(ls);
        }
        Ok((((20.0 / l).ceil() as usize) + 16).clamp(32, MAX_NODES))
    }

    /// `∫_γ y dx`, twice the segment integral.
    fn period(&self) -> Result<C64> {
        let n = self.nodes(None)?;
        let rule = GaussChebyshevSecondKind::new(n.try_into().expect("nonzero"));
        let s: C64 = rule.as_node_weight_pairs().iter().map(|&(t, w)| self.g(t) * w).sum();
        Ok(self.kappa * (self.ej - self.ei) * s)
    }

    /// `∫ f(x) dx / y` along the segment, for several integrands at once.
    fn integrate_over_y<const K: usize>(&self, extra: Option<C64>, f: impl Fn(C64) -> [C64; K]) -> Result<[C64; K]> {
        let n = self.nodes(extra)?;
        let rule = GaussChebyshevFirstKind::new(n.try_into().expect("nonzero"));
        let mut acc = [c(0.0, 0.0); K];
        for &(t, w) in rule.as_node_weight_pairs() {
            let scale = w / self.g(t);
            for (a, v) in acc.iter_mut().zip(f(self.x(t))) {
                *a += v * scale;
            }
        }
        let s = (self.ej - self.ei) / (self.kappa * 2.0);
        Ok(acc.map(|a| a * s))
    }
}

/// Central charges `(z₁, z₂) = (∫_{γ₁} y dx, ∫_{γ₂} y dx)`.
pub fn periods(pt: &A2Point, basis: &CycleBasis) -> Result<[C64; 2]> {
    let segs = basis.continue_to(pt)?.segments();
    Ok([segs[0].period()?, segs[1].period()?])
}

/// `(∂z_i/∂a, ∂z_i/∂b) = (∫ x dx/2y, ∫ dx/2y)` over `γ_i`, row `i`.
pub fn period_derivatives(pt: &A2Point, basis: &CycleBasis) -> Result<DMatrix<C64>> {
    let segs = basis.continue_to(pt)?.segments();
    let mut m = DMatrix::zeros(2, 2);
    for (i, s) in segs.iter().enumerate() {
        let [ia, ib] = s.integrate_over_y(None, |x| [x, c(1.0, 0.0)])?;
        m[(i, 0)] = ia;
        m[(i, 1)] = ib;
    }
    Ok(m)
}

/// `|z₁₂ + z₂₃ + z₃₁| / max|z|` for the three edges of the root triangle,
/// with `y` continued through the interior of the triangle.
pub fn cycle_relation_residual(pt: &A2Point) -> Result<f64> {
    let e = pt.roots()?;
    let area = ((e[1] - e[0]).conj() * (e[2] - e[0])).im;
    let scale = (e[1] - e[0]).norm() * (e[2] - e[0]).norm();
    if area.abs() < 1e-6 * scale {
        return Err(Error::RegionUnsupported("collinear roots".into()));
    }
    let mids = [(0, 1), (1, 2), (2, 0)].map(|(i, j)| (i, j, (e[i] + e[j]) * 0.5));
    let mut y = pt.cubic(mids[0].2).sqrt();
    let mut total = c(0.0, 0.0);
    let mut biggest = 0.0f64;
    for k in 0..3 {
        let (i, j, m) = mids[k];
        let z = Segment::new(&e, &Cycle { from: i, to: j, y_mid: y }).period()?;
        // A boundary traversal integrates each edge once, half the doubled cycle.
        total += z * 0.5;
        biggest = biggest.max(z.norm());
        if k < 2 {
            let next = mids[k + 1].2;
            for s in 1..=400 {
                let x = m + (next - m) * (s as f64 / 400.0);
                let v = pt.cubic(x).sqrt();
                y = if (v - y).norm() <= (v + y).norm() { v } else { -v };
            }
        }
    }
    Ok(total.norm() / biggest.max(1e-300))
}

/// Active classes and their invariants in the chamber of `(z₁, z₂)`.
pub fn spectrum_from_periods(z1: C64, z2: C64) -> Result<Vec<(Class, i64)>> {
    if !(z1.im > 0.0 && z2.im > 0.0) {
        return Err(Error::InvalidInput("periods must lie in the open upper half-plane".into()));
    }
    let mut reps: Vec<Class> = vec![vec![1, 0], vec![0, 1]];
    if a2_chamber(z1, z2)? == 'b' {
        reps.push(vec![1, 1]);
    }
    Ok(reps.into_iter().flat_map(|g| [(neg(&g), 1), (g, 1)]).collect())
}

/// The BPS structure at `pt` in its canonical basis.
pub fn bps_structure(pt: &A2Point) -> Result<BpsStructure> {
    let [z1, z2] = periods(pt, &CycleBasis::canonical(pt)?)?;
    BpsStructure::a2(z1, z2)
}

fn fiber_theta(segs: &[Segment; 2], w: &WPoint) -> Result<[C64; 2]> {
    let mut th = [c(0.0, 0.0); 2];
    for (t, s) in th.iter_mut().zip(segs) {
        let [i0, i1] = s.integrate_over_y(Some(w.q), |x| [c(1.0, 0.0), (x - w.q).inv()])?;
        *t = -(w.p * i1 + w.r * i0);
    }
    Ok(th)
}

/// `∂θ_i/∂(q, r)` at fixed `(a, b)`, row `i`.
fn fiber_jacobian(segs: &[Segment; 2], w: &WPoint) -> Result<DMatrix<C64>> {
    let dp = (w.q * w.q * 3.0 + w.a) / (w.p * 2.0);
    let mut m = DMatrix::zeros(2, 2);
    for (i, s) in segs.iter().enumerate() {
        let [i0, i1, i2] = s.integrate_over_y(Some(w.q), |x| {
            let u = (x - w.q).inv();
            [c(1.0, 0.0), u, u * u]
        })?;
        m[(i, 0)] = -(dp * i1 + w.p * i2);
        m[(i, 1)] = -i0;
    }
    Ok(m)
}

/// `(z₁, z₂, θ₁, θ₂)` at `w`.
pub fn theta_map(w: &WPoint, basis: &CycleBasis) -> Result<[C64; 4]> {
    let segs = basis.continue_to(&w.base())?.segments();
    let th = fiber_theta(&segs, w)?;
    Ok([segs[0].period()?, segs[1].period()?, th[0], th[1]])
}

/// `J = 2πi · (-1/4Δp) (2ap² + 3p(3b-2aq)r + (6aq²-9bq+4a²)r² - 2apr³)`.
pub fn a2_joyce_j(w: &WPoint) -> Result<C64> {
    let d = A2Point::new(w.a, w.b)?.discriminant();
    if w.p.norm() == 0.0 {
        return Err(Error::PZero);
    }
    let (a, b, q, p, r) = (w.a, w.b, w.q, w.p, w.r);
    let poly =
        a * p * p * 2.0 + p * (b * 3.0 - a * q * 2.0) * r * 3.0 + (a * q * q * 6.0 - b * q * 9.0 + a * a * 4.0) * r * r
            - a * p * r * r * r * 2.0;
    Ok(-TWO_PI_I * poly / (d * p * 4.0))
}

/// `θ`-Hessian of `J ∘ Θ⁻¹` at `w`, from Taylor coefficients on a small
/// polydisc; each sample inverts `Θ` on the fibre by Newton's method.
pub fn fiber_hessian(w: &WPoint, basis: &CycleBasis) -> Result<DMatrix<C64>> {
    let segs = basis.continue_to(&w.base())?.segments();
    let th0 = fiber_theta(&segs, w)?;
    let k0 = fiber_jacobian(&segs, w)?;
    let cond = condition(&k0);
    if cond > 1e8 {
        return Err(Error::JacobianSingular(format!("fibre Jacobian condition {cond:.3e}")));
    }
    let kinv = inverse(&k0)?;
    let at = |x: &[C64]| WPoint::from_qr(w.a, w.b, x[0], x[1], Some(w.p));
    let j_of = |target: &[C64]| -> Result<C64> {
        let d = [target[0] - th0[0], target[1] - th0[1]];
        let x0 = [w.q + kinv[(0, 0)] * d[0] + kinv[(0, 1)] * d[1], w.r + kinv[(1, 0)] * d[0] + kinv[(1, 1)] * d[1]];
        let tol = 1e-13 * target.iter().map(|t| t.norm()).fold(1.0, f64::max);
        let x = newton(
            |x| {
                let th = fiber_theta(&segs, &at(x)?)?;
                Ok(vec![th[0] - target[0], th[1] - target[1]])
            },
            |x| fiber_jacobian(&segs, &at(x)?),
            &x0,
            tol,
            30,
        )?;
        a2_joyce_j(&at(&x)?)
    };
    let co = polydisc_coefficients(j_of, &th0, HESS_RHO, HESS_M, &[vec![2, 0], vec![1, 1], vec![0, 2]])?;
    Ok(DMatrix::from_row_slice(2, 2, &[co[0] * 2.0, co[1], co[1], co[2] * 2.0]))
}

/// Finite-difference Jacobian of `Θ` in the coordinates `(a, b, q, r)`.
pub fn theta_jacobian(w: &WPoint, basis: &CycleBasis, h: f64) -> Result<DMatrix<C64>> {
    let basis = basis.continue_to(&w.base())?;
    let coords = [w.a, w.b, w.q, w.r];
    let mut jac = DMatrix::zeros(4, 4);
    for k in 0..4 {
        let step = h * coords[k].norm().max(1.0);
        let shifted = |s: f64| -> Result<[C64; 4]> {
            let mut x = coords;
            x[k] += s;
            theta_map(&WPoint::from_qr(x[0], x[1], x[2], x[3], Some(w.p))?, &basis)
        };
        let (up, dn) = (shifted(step)?, shifted(-step)?);
        for i in 0..4 {
            jac[(i, k)] = (up[i] - dn[i]) / (2.0 * step);
        }
    }
    Ok(jac)
}

/// An isomonodromy flow split as `V₀ + ħ⁻¹V₁`, components along
/// `(∂_a, ∂_b, ∂_q, ∂_p, ∂_r)`.
#[derive(Debug, Clone, Copy)]
pub struct Flow {
    pub name: &'static str,
    pub v0: [C64; 5],
    pub v1: [C64; 5],
}

/// The two isomonodromy flows at `w`.
pub fn isomonodromy_flows(w: &WPoint) -> [Flow; 2] {
    let (a, q, p, r) = (w.a, w.q, w.p, w.r);
    let z = c(0.0, 0.0);
    let one = c(1.0, 0.0);
    let f = q * q * 3.0 + a;
    [
        Flow { name: "first", v0: [z, one, z, (p * 2.0).inv(), r / (p * p * 2.0)], v1: [z, z, z, z, -one] },
        Flow {
            name: "second",
            v0: [one, -q, -r / p, -r * f / (p * p * 2.0), -r * r * f / (p * p * p * 2.0)],
            v1: [z, z, -p * 2.0, -f, z],
        },
    ]
}

/// `d(p² - q³ - aq - b)` applied to a vector in `(a, b, q, p, r)`.
fn constraint_derivative(w: &WPoint, v: &[C64; 5]) -> C64 {
    -w.q * v[0] - v[1] - (w.q * w.q * 3.0 + w.a) * v[2] + w.p * 2.0 * v[3]
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowResidual {
    pub flow: &'static str,
    pub hbar: [f64; 2],
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FlowReport {
    /// Largest value of `d(p² - q³ - aq - b)` on either flow, relative to scale.
    pub tangency: f64,
    pub residuals: Vec<FlowResidual>,
    pub max_residual: f64,
    /// `max |ħ⁻¹-part of ∂θ - ∂z-part|` over both flows.
    pub hbar_consistency: f64,
    pub pass: bool,
}

/// Pushes both flows forward through `Θ` and compares with
/// `Σ c_i (∂_{z_i} + ħ⁻¹∂_{θ_i}) + Σ c_i (J_{i1}∂_{θ₂} - J_{i2}∂_{θ₁})`.
pub fn verify_flow_pushforward(w: &WPoint, hbars: &[C64], tol: f64) -> Result<FlowReport> {
    if hbars.is_empty() || hbars.iter().any(|h| h.norm() == 0.0) {
        return Err(Error::InvalidInput("need nonzero ħ values".into()));
    }
    let basis = CycleBasis::canonical(&w.base())?;
    let jac = theta_jacobian(w, &basis, 1e-5)?;
    let cond = condition(&jac);
    if cond > 1e8 {
        return Err(Error::JacobianSingular(format!("Θ Jacobian condition {cond:.3e}")));
    }
    let hess = fiber_hessian(w, &basis)?;
    let scale = [1.0, w.p.norm_sqr(), w.q.norm().powi(3), w.a.norm(), w.b.norm()].into_iter().fold(0.0, f64::max);
    let push = |v: &[C64; 5]| -> Vec<C64> {
        let ab_qr = [v[0], v[1], v[2], v[4]];
        (0..4).map(|i| (0..4).map(|k| jac[(i, k)] * ab_qr[k]).sum()).collect()
    };
    let mut tangency = 0.0f64;
    let mut consistency = 0.0f64;
    let mut residuals = Vec::new();
    for flow in isomonodromy_flows(w) {
        for v in [&flow.v0, &flow.v1] {
            tangency = tangency.max(constraint_derivative(w, v).norm() / scale);
        }
        let (p0, p1) = (push(&flow.v0), push(&flow.v1));
        for i in 0..2 {
            consistency = consistency.max((p1[2 + i] - p0[i]).norm()).max(p1[i].norm());
        }
        for &h in hbars {
            let p: Vec<C64> = p0.iter().zip(&p1).map(|(a, b)| a + b / h).collect();
            let cz = [p[0], p[1]];
            let vert = [-(cz[0] * hess[(0, 1)] + cz[1] * hess[(1, 1)]), cz[0] * hess[(0, 0)] + cz[1] * hess[(1, 0)]];
            let residual = (0..2).map(|i| (p[2 + i] - cz[i] / h - vert[i]).norm()).fold(0.0, f64::max);
            residuals.push(FlowResidual { flow: flow.name, hbar: [h.re, h.im], residual });
        }
    }
    let max_residual = residuals.iter().map(|r| r.residual).fold(0.0, f64::max);
    let pass = tangency < 1e-12 && max_residual < tol && consistency < 1e-6;
    Ok(FlowReport { tangency, residuals, max_residual, hbar_consistency: consistency, pass })
}

/// `J` near `q = ∞` in the chart `q = τ⁻², p = τ⁻³S, r = τ⁻¹S + σ` with
/// `S = √(1 + aτ⁴ + bτ⁶)`; smooth and odd in `(τ, σ)`, zero at the origin.
fn joyce_at_infinity(a: C64, b: C64, tau: C64, sigma: C64) -> Result<C64> {
    let s = infinity_s(a, b, tau)?;
    let t2 = tau * tau;
    let t3 = t2 * tau;
    let t4 = t2 * t2;
    let t5 = t4 * tau;
    let n = s * a * sigma.powi(3) * 2.0 - a * a * a * t5 * 2.0 - a * a * tau * 2.0
        + a * b * b * t4 * t5 * 2.0
        + a * b * t3 * 2.0
        + sigma * sigma * (a * a * t3 * 2.0 + a * b * t5 * 6.0 + b * tau * 9.0)
        + sigma * s * (-a * a * t2 * 2.0 + a * b * t4 * 6.0 + b * 9.0);
    Ok(TWO_PI_I * n / (a2_discriminant(a, b) * s * 4.0))
}

fn infinity_s(a: C64, b: C64, tau: C64) -> Result<C64> {
    let u = a * tau.powi(4) + b * tau.powi(6);
    if u.norm() > 0.5 {
        return Err(Error::RegionUnsupported("too far from q = ∞".into()));
    }
    Ok((u + 1.0).sqrt())
}

/// `θ(τ, σ)` and its Jacobian in the chart at `q = ∞`.
fn infinity_theta(segs: &[Segment; 2], a: C64, b: C64, tau: C64, sigma: C64) -> Result<([C64; 2], DMatrix<C64>)> {
    let s = infinity_s(a, b, tau)?;
    let ds = (a * tau.powi(3) * 4.0 + b * tau.powi(5) * 6.0) / (s * 2.0);
    let pole = (tau.norm() > 0.0).then(|| (tau * tau).inv());
    let t2 = tau * tau;
    let mut th = [c(0.0, 0.0); 2];
    let mut jac = DMatrix::zeros(2, 2);
    for (i, seg) in segs.iter().enumerate() {
        let [ix, ixx, i0] = seg.integrate_over_y(pole, |x| {
            let u = (-x * t2 + 1.0).inv();
            [x * u, tau * x * x * u * u * 2.0, c(1.0, 0.0)]
        })?;
        th[i] = tau * s * ix - sigma * i0;
        jac[(i, 0)] = (s + tau * ds) * ix + tau * s * ixx;
        jac[(i, 1)] = -i0;
    }
    Ok((th, jac))
}

#[derive(Debug, Clone)]
pub struct JoyceForm {
    /// In the frame `(da, db)`.
    pub g_ab: DMatrix<C64>,
    /// In the frame `(dz₁, dz₂)`.
    pub g_z: DMatrix<C64>,
    pub third: Tensor3,
    pub z: [C64; 2],
    pub newton_residual: f64,
    /// `max |g_ab - (2πi/5)(da⊗db + db⊗da)|`.
    pub error: f64,
    pub asymmetry: f64,
    pub pass: bool,
}

/// The Joyce form at `pt` from third `θ`-derivatives of `J ∘ Θ⁻¹` at
/// `θ = 0`. The zero locus sits at `q = ∞`, where the chart `(τ, σ)` of
/// [`joyce_at_infinity`] keeps everything finite.
pub fn a2_joyce_form(pt: &A2Point, tol: f64) -> Result<JoyceForm> {
    let basis = CycleBasis::canonical(pt)?;
    let segs = basis.segments();
    let (a, b) = (pt.a, pt.b);
    let zero = [c(0.0, 0.0); 2];
    let theta_at = |x: &[C64]| infinity_theta(&segs, a, b, x[0], x[1]);
    let origin = newton(|x| Ok(theta_at(x)?.0.to_vec()), |x| Ok(theta_at(x)?.1), &zero, 1e-14, 20)?;
    let (th0, k0) = theta_at(&origin)?;
    let newton_residual = th0.iter().map(|t| t.norm()).fold(0.0, f64::max);
    let cond = condition(&k0);
    if cond > 1e8 {
        return Err(Error::JacobianSingular(format!("fibre Jacobian condition {cond:.3e}")));
    }
    let kinv = inverse(&k0)?;
    let rho = FORM_RHO / kinv.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let j_of = |target: &[C64]| -> Result<C64> {
        let x0 = [
            origin[0] + kinv[(0, 0)] * target[0] + kinv[(0, 1)] * target[1],
            origin[1] + kinv[(1, 0)] * target[0] + kinv[(1, 1)] * target[1],
        ];
        let x = newton(
            |x| {
                let th = theta_at(x)?.0;
                Ok(vec![th[0] - target[0], th[1] - target[1]])
            },
            |x| Ok(theta_at(x)?.1),
            &x0,
            1e-15,
            30,
        )?;
        joyce_at_infinity(a, b, x[0], x[1])
    };
    let alphas = [vec![3, 0], vec![2, 1], vec![1, 2], vec![0, 3]];
    let co = polydisc_coefficients(j_of, &zero, rho, 8, &alphas)?;
    let third = Tensor3::from_fn(2, |i, j, k| {
        let ones = [i, j, k].iter().filter(|&&x| x == 1).count();
        let fact = [6.0, 2.0, 2.0, 6.0][ones];
        co[ones] * fact
    });
    let z = [segs[0].period()?, segs[1].period()?];
    let g_z = DMatrix::from_fn(2, 2, |j, k| z[0] * third.get(0, j, k) + z[1] * third.get(1, j, k));
    let dz = period_derivatives(pt, &basis)?;
    let g_ab = dz.transpose() * &g_z * &dz;
    let expected = TWO_PI_I / 5.0;
    let error =
        [g_ab[(0, 0)].norm(), g_ab[(1, 1)].norm(), (g_ab[(0, 1)] - expected).norm(), (g_ab[(1, 0)] - expected).norm()]
            .into_iter()
            .fold(0.0, f64::max);
    let asymmetry = third.asymmetry();
    Ok(JoyceForm { g_ab, g_z, third, z, newton_residual, error, asymmetry, pass: error < tol && asymmetry < 1e-4 })
}

/// Linear data at `pt` in the coordinates `(z₁, z₂)`, with `∂(a, b)/∂z`.
pub fn a2_linear_data(pt: &A2Point) -> Result<(LinearData, DMatrix<C64>)> {
    let form = a2_joyce_form(pt, f64::INFINITY)?;
    let eta = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    let ld = linear_data_from_third(form.third, &eta, &form.z, form.z.to_vec());
    let dt = inverse(&period_derivatives(pt, &CycleBasis::canonical(pt)?)?)?;
    Ok((ld, dt))
}

/// Compares the A2 Joyce structure with the A2 Frobenius structure, whose
/// flat coordinates are `(a, b)`.
pub fn a2_compatibility(points: &[A2Point], tol: f64) -> Result<CompatibilityReport> {
    let frames = points
        .iter()
        .map(|pt| {
            let (ld, dt) = a2_linear_data(pt)?;
            FlatFrameData::transform(vec![pt.a, pt.b], &ld, &dt)
        })
        .collect::<Result<Vec<_>>>()?;
    compatibility_from_data(&frames, &FrobeniusStructure::a2(), tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{integrate_adaptive, I};
    use std::f64::consts::PI;

    fn pt(a: C64, b: C64) -> A2Point {
        A2Point::new(a, b).unwrap()
    }

    fn generic() -> A2Point {
        pt(c(0.7, 0.3), c(-0.4, 0.9))
    }

    #[test]
    fn roots_are_sorted_and_exact() {
        let p = generic();
        let r = p.roots().unwrap();
        for x in r {
            assert!(p.cubic(x).norm() < 1e-14);
        }
        assert!(r[0].re <= r[1].re && r[1].re <= r[2].re);
        assert_eq!(A2Point::new(c(-3.0, 0.0), c(2.0, 0.0)), Err(Error::OnDiscriminant));
    }

    #[test]
    fn basis_orientation() {
        let p = generic();
        let basis = CycleBasis::canonical(&p).unwrap();
        let z = periods(&p, &basis).unwrap();
        assert!(z[0].im > 0.0 && z[1].im > 0.0);
        let w = period_derivatives(&p, &basis).unwrap();
        assert!((w[(1, 1)] / w[(0, 1)]).im > 0.0);
    }

    #[test]
    fn real_curve_period_matches_quadrature() {
        let p = pt(c(-1.0, 0.0), c(0.0, 0.0));
        let basis = CycleBasis::canonical(&p).unwrap();
        let z = periods(&p, &basis).unwrap();
        // x = (1 - cos φ)/2 removes both endpoint square roots.
        let oracle = integrate_adaptive(
            |phi| {
                let x = 0.5 * (1.0 - phi.cos());
                let s = phi.sin();
                c(0.25 * s * s * (1.0 + x).sqrt(), 0.0)
            },
            0.0,
            PI,
            1e-15,
            1e-14,
        )
        .unwrap()
            * 2.0;
        let over_unit = z.iter().find(|v| v.re.abs() < 1e-12).unwrap();
        assert!((over_unit - I * oracle).norm() < 1e-8, "{over_unit} vs {oracle}");
    }

    #[test]
    fn weight_five_scaling() {
        for p in [generic(), pt(c(-1.2, 0.5), c(0.3, -0.2))] {
            let lam: f64 = 1.1;
            let q = pt(p.a * lam.powi(4), p.b * lam.powi(6));
            let z = periods(&p, &CycleBasis::canonical(&p).unwrap()).unwrap();
            let zq = periods(&q, &CycleBasis::canonical(&q).unwrap()).unwrap();
            for i in 0..2 {
                assert!((zq[i] - z[i] * lam.powi(5)).norm() < 1e-10 * z[i].norm());
            }
        }
    }

    #[test]
    fn reversing_a_cycle_negates_its_period() {
        let p = generic();
        let basis = CycleBasis::canonical(&p).unwrap();
        let z = periods(&p, &basis).unwrap();
        let zr = periods(&p, &basis.reversed(1)).unwrap();
        assert!((zr[1] + z[1]).norm() < 1e-13 && (zr[0] - z[0]).norm() < 1e-13);
    }

    #[test]
    fn cycle_relation() {
        for p in [generic(), pt(c(1.0, 1.0), c(-0.5, 0.2)), pt(c(2.0, -1.0), c(0.5, 3.0))] {
            assert!(cycle_relation_residual(&p).unwrap() < 1e-10);
        }
        assert!(matches!(cycle_relation_residual(&pt(c(-1.0, 0.0), c(0.0, 0.0))), Err(Error::RegionUnsupported(_))));
    }

    #[test]
    fn spectrum_by_chamber() {
        assert_eq!(spectrum_from_periods(I, c(1.0, 1.0)).unwrap().len(), 4);
        assert_eq!(spectrum_from_periods(I, c(-1.0, 1.0)).unwrap().len(), 6);
        assert_eq!(spectrum_from_periods(I, c(0.0, 2.0)), Err(Error::Wall));
    }

    fn sample_w() -> WPoint {
        WPoint::from_qr(c(-1.2, 0.5), c(0.3, -0.2), c(0.9, 0.6), c(-0.4, 0.2), None).unwrap()
    }

    #[test]
    fn theta_derivatives_in_r() {
        let w = sample_w();
        let basis = CycleBasis::canonical(&w.base()).unwrap();
        let h = 1e-5;
        let up = theta_map(&WPoint { r: w.r + h, ..w }, &basis).unwrap();
        let dn = theta_map(&WPoint { r: w.r - h, ..w }, &basis).unwrap();
        let dz = period_derivatives(&w.base(), &basis).unwrap();
        for i in 0..2 {
            let fd = (up[2 + i] - dn[2 + i]) / (2.0 * h);
            assert!((fd + dz[(i, 1)]).norm() < 1e-9, "{fd} vs {}", dz[(i, 1)]);
        }
        let segs = basis.segments();
        let k = fiber_jacobian(&segs, &w).unwrap();
        let uq = theta_map(&WPoint::from_qr(w.a, w.b, w.q + h, w.r, Some(w.p)).unwrap(), &basis).unwrap();
        let dq = theta_map(&WPoint::from_qr(w.a, w.b, w.q - h, w.r, Some(w.p)).unwrap(), &basis).unwrap();
        for i in 0..2 {
            assert!(((uq[2 + i] - dq[2 + i]) / (2.0 * h) - k[(i, 0)]).norm() < 1e-8);
        }
    }

    #[test]
    fn theta_is_invariant_under_the_involution() {
        let w = sample_w();
        let basis = CycleBasis::canonical(&w.base()).unwrap();
        let mut flipped = basis;
        for cyc in flipped.cycles.iter_mut() {
            cyc.y_mid = -cyc.y_mid;
        }
        let t = theta_map(&w, &basis).unwrap();
        let s = theta_map(&w.involution(), &flipped).unwrap();
        for i in 0..2 {
            assert!((t[2 + i] - s[2 + i]).norm() < 1e-13);
            assert!((t[i] + s[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn q_on_cycle_is_reported() {
        let p = generic();
        let basis = CycleBasis::canonical(&p).unwrap();
        let cyc = basis.cycles[0];
        let q = (basis.roots[cyc.from] + basis.roots[cyc.to]) * 0.5;
        let w = WPoint::from_qr(p.a, p.b, q, c(0.1, 0.0), None).unwrap();
        assert_eq!(theta_map(&w, &basis), Err(Error::QOnCycle));
    }

    #[test]
    fn joyce_function_values() {
        let w = WPoint::new(c(-1.0, 0.0), c(0.0, 0.0), c(2.0, 0.0), c(6f64.sqrt(), 0.0), c(0.0, 0.0)).unwrap();
        let j = a2_joyce_j(&w).unwrap();
        assert!((j - c(0.0, -PI * 6f64.sqrt() / 4.0)).norm() < 1e-14);
        let w = WPoint::from_qr(c(0.0, 0.0), c(1.0, 0.0), c(0.3, 0.0), c(0.0, 0.0), None).unwrap();
        assert_eq!(a2_joyce_j(&w).unwrap(), c(0.0, 0.0));
        let w = sample_w();
        let r0 = WPoint { r: c(0.0, 0.0), ..w };
        let expect = -I * PI * w.a * w.p / w.base().discriminant();
        assert!((a2_joyce_j(&r0).unwrap() - expect).norm() < 1e-14);
    }

    #[test]
    fn chart_at_infinity_agrees_with_the_direct_formula() {
        let (a, b) = (c(0.7, 0.3), c(-0.4, 0.9));
        for (tau, sigma) in [(c(0.3, 0.1), c(0.2, -0.1)), (c(-0.2, 0.25), c(0.5, 0.3))] {
            let s = infinity_s(a, b, tau).unwrap();
            let q = (tau * tau).inv();
            let p = s / tau.powi(3);
            let w = WPoint::new(a, b, q, p, s / tau + sigma).unwrap();
            let direct = a2_joyce_j(&w).unwrap();
            let chart = joyce_at_infinity(a, b, tau, sigma).unwrap();
            assert!((direct - chart).norm() < 1e-10 * direct.norm().max(1.0), "{direct} vs {chart}");
            let segs = CycleBasis::canonical(&pt(a, b)).unwrap().segments();
            let (th, _) = infinity_theta(&segs, a, b, tau, sigma).unwrap();
            let th_direct = fiber_theta(&segs, &w).unwrap();
            for i in 0..2 {
                assert!((th[i] - th_direct[i]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn flows_are_tangent_and_push_forward_to_the_hamiltonian_form() {
        let w = sample_w();
        let rep = verify_flow_pushforward(&w, &[I, c(1.0, 1.0)], 1e-3).unwrap();
        assert!(rep.tangency < 1e-14, "{rep:?}");
        assert!(rep.hbar_consistency < 1e-6, "{rep:?}");
        assert!(rep.max_residual < 1e-3, "{rep:?}");
        assert!(rep.pass);
    }

    #[test]
    fn joyce_form_at_the_zero_section() {
        let f = a2_joyce_form(&generic(), 1e-3).unwrap();
        assert!(f.newton_residual < 1e-14);
        assert!(f.error < 1e-3, "{:?}", f.g_ab);
        assert!(f.pass);
    }

    #[test]
    fn compatible_with_the_a2_frobenius_structure() {
        let rep = a2_compatibility(&[generic(), pt(c(2.0, -1.0), c(0.5, 3.0))], 1e-6).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.mu[0] - 5.0 / 6.0).abs() < 1e-8);
        assert!((c(rep.lambda[0], rep.lambda[1]) - TWO_PI_I * 0.6).norm() < 1e-8);
    }
}
