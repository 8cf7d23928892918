//! The contour integrals
//!
//! `F(z|ω₁,ω₂) = exp ∫_C e^{zs} / ((e^{ω₁s}-1)(e^{ω₂s}-1)) ds/s`,
//! `G(z|ω₁,ω₂) = exp ∫_C -e^{(z+ω₁)s} / ((e^{ω₁s}-1)²(e^{ω₂s}-1)) ds/s`,
//!
//! where `C` runs along a line through the origin with a small semicircular
//! detour to its left around `s = 0`. On the real line this is the defining
//! representation. Tilting the line to `e^{iα}ℝ` gives the analytic
//! continuation to every parameter set for which some tilt makes the
//! integrand decay at both ends.

use crate::error::{Error, Result};
use crate::numerics::{c, expm1, integrate_adaptive, integrate_composite, C64, I};
use std::f64::consts::PI;
use std::sync::OnceLock;

use super::polylog::polylog;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConifoldKind {
    F,
    G,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadMethod {
    /// Adaptive Gauss–Kronrod on each contour piece.
    Adaptive,
    /// Composite 20-point Gauss–Legendre with a fixed panel width.
    Fixed,
}

#[derive(Debug, Clone, Copy)]
pub struct QuadOptions {
    pub method: QuadMethod,
    /// Multiplies the truncation length of the two rays.
    pub length_scale: f64,
    /// Multiplies the panel width of the fixed rule.
    pub panel_scale: f64,
    pub rel_tol: f64,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { method: QuadMethod::Adaptive, length_scale: 1.0, panel_scale: 1.0, rel_tol: 1e-13 }
    }
}

impl QuadOptions {
    pub fn fixed() -> Self {
        QuadOptions { method: QuadMethod::Fixed, ..Default::default() }
    }
}

/// `1/(e^{u}-1)` written as `exp(shift)·factor` so neither part overflows.
fn recip_expm1(u: C64) -> (C64, C64) {
    if u.re > 0.0 {
        (-u, -expm1(-u).inv())
    } else {
        (c(0.0, 0.0), expm1(u).inv())
    }
}

fn integrand(kind: ConifoldKind, z: C64, w1: C64, w2: C64, s: C64) -> C64 {
    let (sh1, f1) = recip_expm1(w1 * s);
    let (sh2, f2) = recip_expm1(w2 * s);
    match kind {
        ConifoldKind::F => (z * s + sh1 + sh2).exp() * f1 * f2 / s,
        ConifoldKind::G => -((z + w1) * s + sh1 * 2.0 + sh2).exp() * f1 * f1 * f2 / s,
    }
}

/// The directions that must lie in the open half-plane `Re(e^{iα}u) > 0`.
fn constraint_directions(kind: ConifoldKind, z: C64, w1: C64, w2: C64) -> [C64; 4] {
    let lower = match kind {
        ConifoldKind::F => z,
        ConifoldKind::G => z + w1,
    };
    [w1, w2, lower, w1 + w2 - z]
}

/// The tilt that maximises the worst angular margin, or `None` when the
/// directions do not fit in an open half-plane.
pub fn best_tilt(kind: ConifoldKind, z: C64, w1: C64, w2: C64) -> Option<f64> {
    let dirs = constraint_directions(kind, z, w1, w2);
    if dirs.iter().any(|u| u.norm() == 0.0) {
        return None;
    }
    let base = dirs[0].arg();
    let mut lo = base;
    let mut hi = base;
    for u in &dirs[1..] {
        let mut d = u.arg() - base;
        while d > PI {
            d -= 2.0 * PI;
        }
        while d <= -PI {
            d += 2.0 * PI;
        }
        lo = lo.min(base + d);
        hi = hi.max(base + d);
    }
    if hi - lo >= PI - 1e-9 {
        return None;
    }
    Some(-(hi + lo) / 2.0)
}

fn check_tilt(kind: ConifoldKind, z: C64, w1: C64, w2: C64, alpha: f64) -> Result<()> {
    let d = C64::from_polar(1.0, alpha);
    let dirs = constraint_directions(kind, z, w1, w2);
    let names = ["Re ω₁", "Re ω₂", "lower strip edge", "upper strip edge"];
    for (u, name) in dirs.iter().zip(names) {
        if (d * u).re <= 0.0 {
            return Err(Error::StripViolation(format!("{name} condition fails")));
        }
    }
    Ok(())
}

fn legendre20() -> &'static gauss_quad::GaussLegendre {
    static RULE: OnceLock<gauss_quad::GaussLegendre> = OnceLock::new();
    RULE.get_or_init(|| gauss_quad::GaussLegendre::new(20.try_into().expect("nonzero")))
}

/// `∫_C` of the `F` or `G` integrand along the line `e^{iα}ℝ`.
pub fn contour_integral(kind: ConifoldKind, z: C64, w1: C64, w2: C64, alpha: f64, opts: QuadOptions) -> Result<C64> {
    check_tilt(kind, z, w1, w2, alpha)?;
    let d = C64::from_polar(1.0, alpha);

    // Nonzero poles sit at 2πik/ω_j; keep the detour well inside them and
    // refuse lines that pass too close to one.
    let mut r0: f64 = 0.25;
    let mut line_gap = f64::INFINITY;
    for w in [w1, w2] {
        r0 = r0.min(0.5 * 2.0 * PI / w.norm());
        line_gap = line_gap.min(2.0 * PI * (d * w).re / w.norm_sqr());
    }
    if line_gap < 1e-8 {
        return Err(Error::PoleNearContour(format!("pole at distance {line_gap:.2e} from the contour")));
    }

    let lower = match kind {
        ConifoldKind::F => z,
        ConifoldKind::G => z + w1,
    };
    let rate_plus = (d * (w1 + w2 - z)).re;
    let rate_minus = (d * lower).re;
    let t_plus = (r0 * 2.0).max(38.0 / rate_plus) * opts.length_scale;
    let t_minus = (r0 * 2.0).max(38.0 / rate_minus) * opts.length_scale;

    let on_line = |t: f64| integrand(kind, z, w1, w2, d * t) * d;
    let on_arc = |phi: f64| {
        let s = d * C64::from_polar(r0, phi);
        -integrand(kind, z, w1, w2, s) * I * s
    };

    match opts.method {
        QuadMethod::Adaptive => {
            let tol = opts.rel_tol;
            let right = integrate_adaptive(on_line, r0, t_plus, 1e-300, tol)?;
            let left = integrate_adaptive(on_line, -t_minus, -r0, 1e-300, tol)?;
            let arc = integrate_adaptive(on_arc, 0.0, PI, 1e-300, tol)?;
            Ok(left + arc + right)
        }
        QuadMethod::Fixed => {
            let freq = [z, w1, w2].iter().map(|u| (d * u).im.abs()).fold(1.0, f64::max);
            let width = 0.5_f64.min(line_gap).min(2.0 / freq).max(1e-4) * opts.panel_scale;
            let panels = |len: f64| ((len / width).ceil() as usize).clamp(1, 200_000);
            let rule = legendre20();
            let right = integrate_composite(on_line, r0, t_plus, panels(t_plus - r0), rule);
            let left = integrate_composite(on_line, -t_minus, -r0, panels(t_minus - r0), rule);
            let arc = integrate_composite(on_arc, 0.0, PI, (8.0 / opts.panel_scale).ceil() as usize, rule);
            Ok(left + arc + right)
        }
    }
}

/// `log F` or `log G` by analytic continuation: the contour is tilted to
/// the direction with the largest margin.
pub fn ln_continued(kind: ConifoldKind, z: C64, w1: C64, w2: C64, opts: QuadOptions) -> Result<C64> {
    let alpha =
        best_tilt(kind, z, w1, w2).ok_or_else(|| Error::StripViolation("no admissible contour direction".into()))?;
    contour_integral(kind, z, w1, w2, alpha, opts)
}

/// `F(z|ω₁,ω₂)` on its defining domain `Re ω_j > 0`, `0 < Re z < Re(ω₁+ω₂)`.
pub fn conifold_f(z: C64, w1: C64, w2: C64) -> Result<C64> {
    Ok(contour_integral(ConifoldKind::F, z, w1, w2, 0.0, QuadOptions::default())?.exp())
}

/// `G(z|ω₁,ω₂)` on its real-line domain `Re ω_j > 0`,
/// `-Re ω₁ < Re z < Re(ω₁+ω₂)`.
pub fn conifold_g(z: C64, w1: C64, w2: C64) -> Result<C64> {
    Ok(contour_integral(ConifoldKind::G, z, w1, w2, 0.0, QuadOptions::default())?.exp())
}

/// Arguments of `F*` and `G*`: `(v, w)` with `w ≠ 0`, `Im(v/w) > 0`,
/// fibre coordinates `(ϑ, φ)` and `ħ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarredParams {
    pub v: C64,
    pub w: C64,
    pub theta: C64,
    pub phi: C64,
    pub hbar: C64,
}

impl StarredParams {
    pub fn new(v: C64, w: C64, theta: C64, phi: C64, hbar: C64) -> Result<Self> {
        if w.norm() == 0.0 || (v / w).im <= 0.0 {
            return Err(Error::InvalidInput("(v, w) must satisfy w != 0 and Im(v/w) > 0".into()));
        }
        if hbar.norm() == 0.0 {
            return Err(Error::InvalidInput("hbar must be nonzero".into()));
        }
        Ok(StarredParams { v, w, theta, phi, hbar })
    }

    /// The arguments `(z, ω₁, ω₂) = (v-ħϑ, w-ħφ, -2πiħ)` of `F` and `G`.
    pub fn fg_args(&self) -> (C64, C64, C64) {
        let h = self.hbar;
        (self.v - h * self.theta, self.w - h * self.phi, -I * 2.0 * PI * h)
    }
}

/// The exponential corrections `(Q_F, Q_G)`.
pub fn q_factors(p: &StarredParams) -> Result<(C64, C64)> {
    let tpi = I * 2.0 * PI;
    let (v, w, th, ph, h) = (p.v, p.w, p.theta, p.phi, p.hbar);
    let e = (tpi * v / w).exp();
    let li1 = if v.norm() == 0.0 { c(0.0, 0.0) } else { polylog(1, e)? };
    let li2 = polylog(2, e)?;
    let li3 = polylog(3, e)?;
    let k = (v * ph - w * th) / (tpi * w);
    let qf = (w - h * ph) / (h * tpi * tpi) * li2 + (k + 0.5) * li1;
    // v·Li₁ → 0 as v → 0, so the last term is dropped there.
    let qg = (w - h * ph) * 2.0 / (h * tpi.powu(3)) * li3 - (v - h * th) / (h * tpi * tpi) * li2
        + (k + 0.25) / (I * PI) * li2
        - v / w * (k + 0.5) * li1;
    Ok((qf, qg))
}

/// `log F*` or `log G*` evaluated by contour continuation.
pub fn ln_starred(kind: ConifoldKind, p: &StarredParams, opts: QuadOptions) -> Result<C64> {
    let (z, w1, w2) = p.fg_args();
    let (qf, qg) = q_factors(p)?;
    let q = match kind {
        ConifoldKind::F => qf,
        ConifoldKind::G => qg,
    };
    Ok(ln_continued(kind, z, w1, w2, opts)? + q)
}

pub fn starred_f(p: &StarredParams) -> Result<C64> {
    Ok(ln_starred(ConifoldKind::F, p, QuadOptions::default())?.exp())
}

pub fn starred_g(p: &StarredParams) -> Result<C64> {
    Ok(ln_starred(ConifoldKind::G, p, QuadOptions::default())?.exp())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rel_err;

    fn sample() -> StarredParams {
        StarredParams::new(c(0.3, 0.5), c(1.0, 0.0), c(0.2, -0.1), c(0.15, 0.05), c(0.1, 0.3)).unwrap()
    }

    #[test]
    fn two_rules_agree() {
        let (z, w1, w2) = (c(0.5, 0.0), c(1.0, 0.0), c(1.0, 0.0));
        let a = contour_integral(ConifoldKind::F, z, w1, w2, 0.0, QuadOptions::default()).unwrap();
        let b = contour_integral(ConifoldKind::F, z, w1, w2, 0.0, QuadOptions::fixed()).unwrap();
        assert!((a - b).norm() < 1e-10, "{a} vs {b}");
    }

    #[test]
    fn homogeneous_of_degree_zero() {
        let (z, w1, w2) = (c(0.4, 0.0), c(1.0, 0.0), c(1.0, -0.5));
        for kind in [ConifoldKind::F, ConifoldKind::G] {
            let a = contour_integral(kind, z, w1, w2, 0.0, QuadOptions::default()).unwrap();
            let b = contour_integral(kind, z * 2.0, w1 * 2.0, w2 * 2.0, 0.0, QuadOptions::default()).unwrap();
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn symmetric_in_periods() {
        let (w1, w2) = (c(1.0, 0.3), c(0.7, -0.4));
        let z = (w1 + w2) / 2.0;
        let a = conifold_f(z, w1, w2).unwrap();
        let b = conifold_f(z, w2, w1).unwrap();
        assert!(rel_err(a, b) < 1e-10);
    }

    #[test]
    fn strip_violation() {
        let e = conifold_f(c(2.5, 0.0), c(1.0, 0.0), c(1.0, 0.0)).unwrap_err();
        assert_eq!(e.code(), "STRIP_VIOLATION");
        let e = conifold_f(c(0.5, 0.0), c(-1.0, 0.0), c(1.0, 0.0)).unwrap_err();
        assert_eq!(e.code(), "STRIP_VIOLATION");
    }

    #[test]
    fn tilt_agrees_with_real_line() {
        let (z, w1, w2) = (c(0.6, 0.2), c(1.0, 0.1), c(0.8, -0.3));
        for kind in [ConifoldKind::F, ConifoldKind::G] {
            let a = contour_integral(kind, z, w1, w2, 0.0, QuadOptions::default()).unwrap();
            let b = contour_integral(kind, z, w1, w2, 0.2, QuadOptions::default()).unwrap();
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn f_shift_relation() {
        // F(z+ω₁) = F(z)·(1 - e^{2πiz/ω₂})^{-1}
        let (z, w1, w2) = (c(0.3, 0.1), c(0.9, 0.0), c(1.1, -0.2));
        let a = ln_continued(ConifoldKind::F, z + w1, w1, w2, QuadOptions::default()).unwrap();
        let b = ln_continued(ConifoldKind::F, z, w1, w2, QuadOptions::default()).unwrap();
        let x = (I * 2.0 * PI * z / w2).exp();
        let lhs = (a - b).exp();
        assert!(rel_err(lhs, (c(1.0, 0.0) - x).inv()) < 1e-9, "{lhs}");
    }

    #[test]
    fn q_shift_relations() {
        let p = sample();
        let s = StarredParams { v: p.v + p.w, theta: p.theta + p.phi, ..p };
        let (f0, g0) = q_factors(&p).unwrap();
        let (f1, g1) = q_factors(&s).unwrap();
        assert!((f1 - f0).norm() < 1e-11);
        assert!((g1 - g0 + f0).norm() < 1e-11);
    }

    #[test]
    fn q_g_at_origin() {
        let p = StarredParams { v: c(0.0, 0.0), theta: c(0.0, 0.0), ..sample() };
        let (_, g) = q_factors(&p).unwrap();
        let zeta3 = 1.202_056_903_159_594_3;
        let tpi = I * 2.0 * PI;
        let expect = (p.w - p.hbar * p.phi) * 2.0 * zeta3 / (p.hbar * tpi.powu(3)) - I * PI / 24.0;
        assert!((g - expect).norm() < 1e-12);
    }

    #[test]
    fn starred_tends_to_one() {
        let base = sample();
        let mut last = f64::INFINITY;
        for k in 0..6 {
            let h = C64::from_polar(0.2 * 0.5f64.powi(k), 1.3);
            let p = StarredParams { hbar: h, ..base };
            let e = (ln_starred(ConifoldKind::F, &p, QuadOptions::default()).unwrap()).norm();
            assert!(e < last * 1.01);
            last = e;
        }
        assert!(last < 1e-2);
    }
}
