//! Points of the algebraic torus and its twisted form, quadratic
//! refinements, and wall-crossing automorphisms acting on points.
//!
//! Automorphisms act on points: `apply(C, p)` is the point whose characters
//! are the pullbacks `C*(y_β)` evaluated at `p`. Composites follow
//! `(F∘G)* = G*∘F*`.

use crate::bps::{self, BpsStructure, Class, Lattice, Ray, RayClasses, RAY_TOL};
use crate::error::{Error, Result};
use crate::numerics::{log1p, C64};
use num_rational::Rational64;
use num_traits::Zero;
use std::f64::consts::PI;

/// A sign `σ(γ_i) ∈ {±1}` per basis class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuadraticRefinement {
    pub signs: Vec<i8>,
}

impl QuadraticRefinement {
    pub fn new(signs: Vec<i8>) -> Result<Self> {
        if signs.iter().any(|s| s.abs() != 1) {
            return Err(Error::InvalidInput("refinement signs must be ±1".into()));
        }
        Ok(QuadraticRefinement { signs })
    }

    /// The refinement equal to `-1` on every basis class.
    pub fn minus(n: usize) -> Self {
        QuadraticRefinement { signs: vec![-1; n] }
    }

    pub fn plus(n: usize) -> Self {
        QuadraticRefinement { signs: vec![1; n] }
    }

    /// `σ(Σ n_i γ_i) = Π σ(γ_i)^{n_i} · (-1)^{Σ_{i<j} n_i n_j ⟨γ_i,γ_j⟩}`.
    pub fn eval(&self, lattice: &Lattice, g: &[i64]) -> i8 {
        let mut odd = 0i64;
        for (i, &n) in g.iter().enumerate() {
            if self.signs[i] < 0 {
                odd += n;
            }
        }
        let skew = lattice.skew();
        for i in 0..g.len() {
            for j in i + 1..g.len() {
                odd += g[i] * g[j] * skew[i][j];
            }
        }
        if odd.rem_euclid(2) == 0 {
            1
        } else {
            -1
        }
    }
}

/// A torus point in log coordinates: the basis characters are `exp(θ_i)`.
///
/// On the twisted torus the character of a general class carries the sign
/// of the refinement that is `+1` on the basis, so that
/// `x_{γ₁} x_{γ₂} = (-1)^{⟨γ₁,γ₂⟩} x_{γ₁+γ₂}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusPoint {
    pub lattice: Lattice,
    pub log_coords: Vec<C64>,
    pub twisted: bool,
}

impl TorusPoint {
    pub fn new(lattice: Lattice, log_coords: Vec<C64>, twisted: bool) -> Result<Self> {
        if log_coords.len() != lattice.rank() {
            return Err(Error::Dimension(format!("{} coordinates for rank {}", log_coords.len(), lattice.rank())));
        }
        Ok(TorusPoint { lattice, log_coords, twisted })
    }

    /// `log` of the character of `g`, up to the twisting sign.
    pub fn log_character(&self, g: &[i64]) -> C64 {
        let mut s: C64 = g.iter().zip(&self.log_coords).map(|(&n, t)| t * n as f64).sum();
        if self.twisted && QuadraticRefinement::plus(g.len()).eval(&self.lattice, g) < 0 {
            s += C64::new(0.0, PI);
        }
        s
    }

    /// `y_γ` on the torus, `x_γ` on the twisted torus.
    pub fn character(&self, g: &[i64]) -> C64 {
        self.log_character(g).exp()
    }

    /// The twisted point `x_γ = σ(γ) y_γ`.
    pub fn to_twisted(&self, sigma: &QuadraticRefinement) -> Result<TorusPoint> {
        if self.twisted {
            return Err(Error::InvalidInput("point is already twisted".into()));
        }
        Ok(self.shifted(sigma, true))
    }

    /// The untwisted point `y_γ = σ(γ) x_γ`.
    pub fn to_untwisted(&self, sigma: &QuadraticRefinement) -> Result<TorusPoint> {
        if !self.twisted {
            return Err(Error::InvalidInput("point is not twisted".into()));
        }
        Ok(self.shifted(sigma, false))
    }

    fn shifted(&self, sigma: &QuadraticRefinement, twisted: bool) -> TorusPoint {
        let log_coords = self
            .log_coords
            .iter()
            .zip(&sigma.signs)
            .map(|(t, &s)| if s < 0 { t + C64::new(0.0, PI) } else { *t })
            .collect();
        TorusPoint { lattice: self.lattice.clone(), log_coords, twisted }
    }
}

/// `Π_γ (1 ± c_γ)^{Ω(γ)⟨γ,·⟩}`: the twisted form uses `1 - x_γ`, the
/// untwisted form `1 + y_γ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BirationalAutomorphism {
    pub factors: Vec<(Class, Rational64)>,
    pub twisted: bool,
    /// Accept non-integer exponents, taking principal powers.
    pub allow_fractional: bool,
}

impl BirationalAutomorphism {
    pub fn new(factors: Vec<(Class, Rational64)>, twisted: bool) -> Self {
        BirationalAutomorphism { factors, twisted, allow_fractional: false }
    }

    /// `C_γ` of a single class with unit weight.
    pub fn single(g: Class, twisted: bool) -> Self {
        Self::new(vec![(g, Rational64::from_integer(1))], twisted)
    }

    pub fn inverse(&self) -> Self {
        BirationalAutomorphism { factors: self.factors.iter().map(|(g, w)| (g.clone(), -w)).collect(), ..self.clone() }
    }
}

/// Applies an automorphism to a point.
pub fn apply_bps_automorphism(auto: &BirationalAutomorphism, p: &TorusPoint) -> Result<TorusPoint> {
    if auto.twisted != p.twisted {
        return Err(Error::InvalidInput("automorphism and point disagree on twisting".into()));
    }
    let n = p.lattice.rank();
    let mut out = p.log_coords.clone();
    for (g, w) in &auto.factors {
        if w.is_zero() {
            continue;
        }
        if g.len() != n {
            return Err(Error::Dimension("class length differs from rank".into()));
        }
        let c = p.character(g);
        let arg = if auto.twisted { -c } else { c };
        if (C64::new(1.0, 0.0) + arg).norm() < 1e-14 {
            return Err(Error::PoleHit(format!("factor for class {g:?} vanishes")));
        }
        let l = log1p(arg);
        for (b, slot) in out.iter_mut().enumerate() {
            let e = w * p.lattice.pair(g, &bps::unit(n, b));
            if e.is_zero() {
                continue;
            }
            if !e.is_integer() && !auto.allow_fractional {
                return Err(Error::NonIntegerBranch(bps::format_rational(e)));
            }
            *slot += l * bps::rational_to_f64(e);
        }
    }
    Ok(TorusPoint { log_coords: out, ..p.clone() })
}

/// Applies `autos[0]`, then `autos[1]`, and so on: the point map of
/// `autos[k-1] ∘ … ∘ autos[0]`, equivalently the pullback `autos[0]* ∘ … ∘ autos[k-1]*`.
pub fn apply_sequence(autos: &[BirationalAutomorphism], p: &TorusPoint) -> Result<TorusPoint> {
    autos.iter().try_fold(p.clone(), |q, a| apply_bps_automorphism(a, &q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Orientation {
    Clockwise,
    Anticlockwise,
}

/// A convex sector swept anticlockwise from `start` to `end`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sector {
    pub start: Ray,
    pub end: Ray,
}

impl Sector {
    pub fn new(start: Ray, end: Ray) -> Result<Self> {
        let span = Self::offset(&start, end.phase());
        if !(span > 0.0 && span <= PI + RAY_TOL) {
            return Err(Error::InvalidInput("sector must be convex with distinct boundary rays".into()));
        }
        Ok(Sector { start, end })
    }

    /// The closed upper half-plane sector from `ℝ_{>0}` to `ℝ_{<0}`.
    pub fn upper_half_plane() -> Self {
        Sector { start: Ray::from_angle(0.0), end: Ray::from_angle(PI) }
    }

    fn offset(start: &Ray, u: C64) -> f64 {
        (u / start.phase()).arg().rem_euclid(2.0 * PI)
    }

    pub fn span(&self) -> f64 {
        let s = Self::offset(&self.start, self.end.phase());
        if s < RAY_TOL {
            2.0 * PI
        } else {
            s
        }
    }

    /// Anticlockwise angle of `u` from the start ray.
    pub fn position(&self, u: C64) -> f64 {
        Self::offset(&self.start, u)
    }
}

/// The BPS automorphisms of the active rays strictly inside `sector`,
/// ordered anticlockwise from the start ray.
pub fn sector_rays(s: &BpsStructure, sector: &Sector, cutoff: f64) -> Result<RayClasses> {
    let rays = match s.active_rays(cutoff) {
        Ok(r) => r,
        Err(Error::CutoffTooSmall(_)) => Vec::new(),
        Err(e) => return Err(e),
    };
    let span = sector.span();
    let mut inside = Vec::new();
    for (ray, classes) in rays {
        let pos = sector.position(ray.phase());
        let near = |a: f64, b: f64| (a - b).abs() < RAY_TOL || (a - b).abs() > 2.0 * PI - RAY_TOL;
        if near(pos, 0.0) || near(pos, span) {
            return Err(Error::BoundaryActive(format!("ray at angle {:.12}", ray.angle())));
        }
        if pos < span {
            inside.push((pos, ray, classes));
        }
    }
    inside.sort_by(|a, b| a.0.total_cmp(&b.0));
    Ok(inside.into_iter().map(|(_, r, c)| (r, c)).collect())
}

/// The product of BPS automorphisms over active rays in a sector, acting
/// on `p`.
///
/// With rays `ℓ₁, …, ℓ_k` in anticlockwise order, the anticlockwise
/// product is `𝕊(ℓ₁) ∘ … ∘ 𝕊(ℓ_k)` as maps of points, so `ℓ_k` acts first;
/// the clockwise product reverses the order.
pub fn sector_product(
    s: &BpsStructure,
    sector: &Sector,
    orientation: Orientation,
    p: &TorusPoint,
    cutoff: f64,
) -> Result<TorusPoint> {
    let mut autos: Vec<_> = sector_rays(s, sector, cutoff)?
        .into_iter()
        .map(|(_, classes)| BirationalAutomorphism::new(classes, p.twisted))
        .collect();
    if orientation == Orientation::Anticlockwise {
        autos.reverse();
    }
    apply_sequence(&autos, p)
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct CheckReport {
    pub max_error: f64,
    pub samples: usize,
    pub pass: bool,
}

/// Compares the two sides of the pentagon identity
/// `C_{γ₁}∘C_{γ₂} = C_{γ₂}∘C_{γ₁+γ₂}∘C_{γ₁}`, read as compositions of
/// pullbacks of untwisted automorphisms, on rank-2 sample points.
pub fn pentagon_check(samples: &[TorusPoint], tol: f64) -> Result<CheckReport> {
    let c = |g: Class| BirationalAutomorphism::single(g, false);
    let lhs = [c(vec![1, 0]), c(vec![0, 1])];
    let rhs = [c(vec![0, 1]), c(vec![1, 1]), c(vec![1, 0])];
    let mut max_error = 0.0f64;
    for p in samples {
        if p.lattice.rank() != 2 || p.twisted {
            return Err(Error::Dimension("pentagon samples are untwisted rank-2 points".into()));
        }
        let a = apply_sequence(&lhs, p)?;
        let b = apply_sequence(&rhs, p)?;
        for g in [[1, 0], [0, 1]] {
            let (x, y) = (a.character(&g), b.character(&g));
            max_error = max_error.max((x - y).norm() / y.norm().max(1e-300));
        }
    }
    Ok(CheckReport { max_error, samples: samples.len(), pass: max_error < tol })
}
