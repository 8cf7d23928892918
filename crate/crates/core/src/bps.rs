//! Lattices with skew forms, BPS structures, DT invariants and the doubling
//! construction.

use crate::error::{Error, Result};
use crate::numerics::C64;
use num_integer::Integer;
use num_rational::Rational64;
use num_traits::{Signed, Zero};
use std::f64::consts::PI;

/// Lattice classes are integer coordinate vectors in a fixed basis.
pub type Class = Vec<i64>;

/// Active rays with the classes on each and their Ω.
pub type RayClasses = Vec<(Ray, Vec<(Class, Rational64)>)>;

/// Two classes lie on one ray when their phases agree to this many radians.
pub const RAY_TOL: f64 = 1e-9;

pub fn add(a: &[i64], b: &[i64]) -> Class {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn neg(a: &[i64]) -> Class {
    a.iter().map(|x| -x).collect()
}

pub fn scale(a: &[i64], k: i64) -> Class {
    a.iter().map(|x| x * k).collect()
}

pub fn unit(n: usize, i: usize) -> Class {
    let mut v = vec![0; n];
    v[i] = 1;
    v
}

/// Greatest common divisor of the entries (zero for the zero class).
pub fn content(a: &[i64]) -> i64 {
    a.iter().fold(0i64, |g, &x| g.gcd(&x))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lattice {
    rank: usize,
    skew: Vec<Vec<i64>>,
}

impl Lattice {
    pub fn new(skew: Vec<Vec<i64>>) -> Result<Self> {
        let rank = skew.len();
        if rank == 0 {
            return Err(Error::InvalidInput("lattice rank must be positive".into()));
        }
        for (i, row) in skew.iter().enumerate() {
            if row.len() != rank {
                return Err(Error::InvalidInput("skew form must be square".into()));
            }
            for (j, &v) in row.iter().enumerate() {
                if v != -skew[j][i] {
                    return Err(Error::InvalidInput(format!("skew form not antisymmetric at ({i},{j})")));
                }
            }
        }
        Ok(Lattice { rank, skew })
    }

    /// Rank-`n` lattice with vanishing form.
    pub fn trivial(n: usize) -> Self {
        Lattice { rank: n, skew: vec![vec![0; n]; n] }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn skew(&self) -> &[Vec<i64>] {
        &self.skew
    }

    /// `⟨a, b⟩`.
    pub fn pair(&self, a: &[i64], b: &[i64]) -> i64 {
        let mut s = 0;
        for i in 0..self.rank {
            if a[i] == 0 {
                continue;
            }
            for j in 0..self.rank {
                s += a[i] * self.skew[i][j] * b[j];
            }
        }
        s
    }

    pub fn is_degenerate(&self) -> bool {
        let m = nalgebra::DMatrix::from_fn(self.rank, self.rank, |i, j| self.skew[i][j] as f64);
        m.determinant().abs() < 0.5
    }

    /// The form of the doubled lattice `Γ ⊕ Γ^∨`:
    /// `⟨(γ₁,λ₁),(γ₂,λ₂)⟩ = ⟨γ₁,γ₂⟩ + λ₁(γ₂) - λ₂(γ₁)`.
    pub fn doubled(&self) -> Lattice {
        let n = self.rank;
        let mut skew = vec![vec![0; 2 * n]; 2 * n];
        for i in 0..n {
            for j in 0..n {
                skew[i][j] = self.skew[i][j];
            }
            skew[i][n + i] = -1;
            skew[n + i][i] = 1;
        }
        Lattice { rank: 2 * n, skew }
    }
}

/// A ray `ℝ_{>0}·phase` in `ℂ*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    phase: C64,
}

impl Ray {
    pub fn new(u: C64) -> Result<Self> {
        let r = u.norm();
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidInput("a ray needs a nonzero direction".into()));
        }
        Ok(Ray { phase: u / r })
    }

    pub fn from_angle(angle: f64) -> Self {
        Ray { phase: C64::from_polar(1.0, angle) }
    }

    pub fn phase(&self) -> C64 {
        self.phase
    }

    /// Angle in `[0, 2π)`.
    pub fn angle(&self) -> f64 {
        let a = self.phase.arg();
        if a < 0.0 {
            a + 2.0 * PI
        } else {
            a
        }
    }

    pub fn opposite(&self) -> Ray {
        Ray { phase: -self.phase }
    }

    pub fn rotate(&self, angle: f64) -> Ray {
        Ray { phase: self.phase * C64::from_polar(1.0, angle) }
    }

    /// Whether `u` lies on this ray within [`RAY_TOL`].
    pub fn contains(&self, u: C64) -> bool {
        u.norm() > 0.0 && (u / self.phase).arg().abs() < RAY_TOL
    }

    /// Whether `ħ` lies in the open half-plane `ℍ_ℓ` centred on the ray.
    pub fn half_plane_contains(&self, hbar: C64) -> bool {
        (hbar / self.phase).re > 0.0
    }
}

/// Named families with infinite or chamber-dependent spectra.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Generator {
    /// Rank one, `Ω(±γ) = 1`.
    A1,
    /// Resolved conifold on `ℤβ ⊕ ℤδ`: `Ω(±β+nδ) = 1`, `Ω(kδ) = -2`.
    Conifold,
    /// A2 quiver; the chamber is read off from the central charge.
    A2,
}

#[derive(Debug, Clone, PartialEq)]
pub enum OmegaTable {
    Explicit(Vec<(Class, Rational64)>),
    Generator(Generator),
    /// Invariants of a doubled structure: those of the base on `Γ ⊕ 0`.
    Doubled(Box<BpsStructure>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Flags {
    pub finite: bool,
    pub uncoupled: bool,
    pub generic: bool,
    pub integral: bool,
}

impl Flags {
    pub fn names(&self) -> Vec<&'static str> {
        let mut v = Vec::new();
        if self.finite {
            v.push("finite");
        }
        if self.uncoupled {
            v.push("uncoupled");
        }
        if self.generic {
            v.push("generic");
        }
        if self.integral {
            v.push("integral");
        }
        v
    }
}

/// Norms on `Γ ⊗ ℝ` for the support property.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Norm {
    #[default]
    Euclidean,
    Max,
    L1,
}

impl Norm {
    pub fn eval(&self, a: &[i64]) -> f64 {
        match self {
            Norm::Euclidean => a.iter().map(|&x| (x * x) as f64).sum::<f64>().sqrt(),
            Norm::Max => a.iter().map(|x| x.abs()).max().unwrap_or(0) as f64,
            Norm::L1 => a.iter().map(|x| x.abs()).sum::<i64>() as f64,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpsStructure {
    lattice: Lattice,
    central_charge: Vec<C64>,
    omega: OmegaTable,
}

/// A2 chamber from the central charges of the basis classes.
pub fn a2_chamber(z1: C64, z2: C64) -> Result<char> {
    let r = (z2 / z1).im;
    if r.abs() < 1e-12 * (z2 / z1).norm().max(1.0) {
        return Err(Error::Wall);
    }
    Ok(if r < 0.0 { 'a' } else { 'b' })
}

impl BpsStructure {
    pub fn new(lattice: Lattice, central_charge: Vec<C64>, omega: OmegaTable) -> Result<Self> {
        let n = lattice.rank();
        if central_charge.len() != n {
            return Err(Error::Dimension(format!("{} central charges for rank {n}", central_charge.len())));
        }
        let s = BpsStructure { lattice, central_charge, omega };
        match &s.omega {
            OmegaTable::Explicit(list) => {
                for (g, w) in list {
                    if g.len() != n {
                        return Err(Error::Dimension("class length differs from rank".into()));
                    }
                    if g.iter().all(|&x| x == 0) {
                        return Err(Error::InvalidInput("Ω given on the zero class".into()));
                    }
                    if !w.is_zero() {
                        if s.omega(&neg(g)) != *w {
                            return Err(Error::InvalidInput(format!("Ω(-γ) != Ω(γ) for γ = {g:?}")));
                        }
                        if s.central(g).norm() == 0.0 {
                            return Err(Error::ZeroCentralCharge);
                        }
                    }
                }
            }
            OmegaTable::Generator(Generator::A1) if n != 1 => {
                return Err(Error::Dimension("the A1 generator has rank 1".into()))
            }
            OmegaTable::Generator(Generator::Conifold) => {
                if n != 2 || s.lattice.skew()[0][1] != 0 {
                    return Err(Error::Dimension("the conifold generator needs rank 2 with zero form".into()));
                }
                let (v, w) = (s.central_charge[0], s.central_charge[1]);
                if w.norm() == 0.0 || (v / w).im <= 0.0 {
                    return Err(Error::InvalidInput("conifold needs w != 0 and Im(v/w) > 0".into()));
                }
            }
            OmegaTable::Generator(Generator::A2) => {
                if n != 2 || s.lattice.skew()[0][1] != 1 {
                    return Err(Error::Dimension("the A2 generator needs rank 2 with <γ1,γ2> = 1".into()));
                }
                a2_chamber(s.central_charge[0], s.central_charge[1])?;
            }
            _ => {}
        }
        Ok(s)
    }

    /// Explicit table from one representative per `±` pair.
    pub fn from_pairs(lattice: Lattice, central_charge: Vec<C64>, pairs: &[(Class, Rational64)]) -> Result<Self> {
        let mut list = Vec::new();
        for (g, w) in pairs {
            list.push((g.clone(), *w));
            list.push((neg(g), *w));
        }
        Self::new(lattice, central_charge, OmegaTable::Explicit(list))
    }

    pub fn a1(z: C64) -> Result<Self> {
        Self::new(Lattice::trivial(1), vec![z], OmegaTable::Generator(Generator::A1))
    }

    /// Conifold structure with `Z(β) = v`, `Z(δ) = w`.
    pub fn conifold(v: C64, w: C64) -> Result<Self> {
        Self::new(Lattice::trivial(2), vec![v, w], OmegaTable::Generator(Generator::Conifold))
    }

    pub fn a2(z1: C64, z2: C64) -> Result<Self> {
        let lat = Lattice::new(vec![vec![0, 1], vec![-1, 0]])?;
        Self::new(lat, vec![z1, z2], OmegaTable::Generator(Generator::A2))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn rank(&self) -> usize {
        self.lattice.rank()
    }

    pub fn central_charges(&self) -> &[C64] {
        &self.central_charge
    }

    pub fn omega_table(&self) -> &OmegaTable {
        &self.omega
    }

    pub fn central(&self, g: &[i64]) -> C64 {
        g.iter().zip(&self.central_charge).map(|(&k, z)| z * k as f64).sum()
    }

    pub fn omega(&self, g: &[i64]) -> Rational64 {
        let zero = Rational64::zero();
        if g.iter().all(|&x| x == 0) {
            return zero;
        }
        match &self.omega {
            OmegaTable::Explicit(list) => list.iter().filter(|(c, _)| c.as_slice() == g).map(|(_, w)| *w).sum(),
            OmegaTable::Generator(Generator::A1) => {
                if g[0].abs() == 1 {
                    Rational64::from_integer(1)
                } else {
                    zero
                }
            }
            OmegaTable::Generator(Generator::Conifold) => match g[0].abs() {
                1 => Rational64::from_integer(1),
                0 => Rational64::from_integer(-2),
                _ => zero,
            },
            OmegaTable::Generator(Generator::A2) => {
                let chamber = a2_chamber(self.central_charge[0], self.central_charge[1]).unwrap_or('a');
                let (a, b) = (g[0], g[1]);
                let simple = (a.abs() == 1 && b == 0) || (a == 0 && b.abs() == 1);
                let sum = chamber == 'b' && a == b && a.abs() == 1;
                if simple || sum {
                    Rational64::from_integer(1)
                } else {
                    zero
                }
            }
            OmegaTable::Doubled(base) => {
                let n = base.rank();
                if g[n..].iter().any(|&x| x != 0) {
                    zero
                } else {
                    base.omega(&g[..n])
                }
            }
        }
    }

    /// `DT(γ) = Σ_{m | γ} Ω(γ/m) / m²`, exactly.
    pub fn dt_invariant(&self, g: &[i64]) -> Result<Rational64> {
        let k = content(g);
        if k == 0 {
            return Err(Error::InvalidInput("DT invariant of the zero class".into()));
        }
        let mut acc = Rational64::zero();
        for m in 1..=k.abs() {
            if k % m == 0 {
                let base: Class = g.iter().map(|x| x / m).collect();
                acc += self.omega(&base) / (m * m);
            }
        }
        Ok(acc)
    }

    /// Whether the active set is finite without a cutoff.
    pub fn is_finite(&self) -> bool {
        match &self.omega {
            OmegaTable::Explicit(_) => true,
            OmegaTable::Generator(Generator::Conifold) => false,
            OmegaTable::Generator(_) => true,
            OmegaTable::Doubled(b) => b.is_finite(),
        }
    }

    /// Active classes, restricted to `|Z(γ)| ≤ cutoff` when a cutoff is given.
    /// Infinite spectra need a cutoff.
    pub fn active_classes(&self, cutoff: Option<f64>) -> Result<Vec<(Class, Rational64)>> {
        let keep = |g: &Class| cutoff.is_none_or(|c| self.central(g).norm() <= c);
        let mut out: Vec<(Class, Rational64)> = match &self.omega {
            OmegaTable::Explicit(list) => list.iter().filter(|(_, w)| !w.is_zero()).cloned().collect(),
            OmegaTable::Generator(Generator::A1) => {
                vec![(vec![1], Rational64::from_integer(1)), (vec![-1], Rational64::from_integer(1))]
            }
            OmegaTable::Generator(Generator::A2) => {
                let mut v = Vec::new();
                for g in [vec![1, 0], vec![0, 1], vec![1, 1]] {
                    let w = self.omega(&g);
                    if !w.is_zero() {
                        v.push((neg(&g), w));
                        v.push((g, w));
                    }
                }
                v
            }
            OmegaTable::Generator(Generator::Conifold) => {
                let c = cutoff.ok_or_else(|| {
                    Error::FinitenessUndecidable("the conifold spectrum is infinite; give a cutoff".into())
                })?;
                let (v, w) = (self.central_charge[0], self.central_charge[1]);
                let mut out = Vec::new();
                // |±v + n w| ≤ c bounds n to an interval around ∓Re(v w̄)/|w|².
                let span = (c / w.norm()).ceil() as i64 + 1;
                for sgn in [1i64, -1] {
                    let centre = (-(v * sgn as f64 * w.conj()).re / w.norm_sqr()).round() as i64;
                    for n in centre - span..=centre + span {
                        out.push((vec![sgn, n], Rational64::from_integer(1)));
                    }
                }
                for k in 1..=span {
                    out.push((vec![0, k], Rational64::from_integer(-2)));
                    out.push((vec![0, -k], Rational64::from_integer(-2)));
                }
                out
            }
            OmegaTable::Doubled(base) => {
                let n = base.rank();
                base.active_classes(cutoff)?
                    .into_iter()
                    .map(|(g, w)| {
                        let mut d = g;
                        d.resize(2 * n, 0);
                        (d, w)
                    })
                    .collect()
            }
        };
        out.retain(|(g, _)| keep(g));
        Ok(out)
    }

    /// The flags of finiteness, uncoupledness, genericity and integrality.
    pub fn classify(&self) -> Result<Flags> {
        match &self.omega {
            OmegaTable::Generator(Generator::A1) => {
                Ok(Flags { finite: true, uncoupled: true, generic: true, integral: true })
            }
            // The form vanishes identically, so every condition on pairs holds.
            OmegaTable::Generator(Generator::Conifold) => {
                Ok(Flags { finite: false, uncoupled: true, generic: true, integral: true })
            }
            OmegaTable::Doubled(base) => base.classify(),
            _ => {
                let act = self.active_classes(None)?;
                let lat = &self.lattice;
                let mut uncoupled = true;
                let mut generic = true;
                for (a, _) in &act {
                    for (b, _) in &act {
                        if lat.pair(a, b) != 0 {
                            uncoupled = false;
                            let (za, zb) = (self.central(a), self.central(b));
                            if (za / zb).arg().abs() < RAY_TOL {
                                generic = false;
                            }
                        }
                    }
                }
                let integral = act.iter().all(|(_, w)| w.is_integer());
                Ok(Flags { finite: true, uncoupled, generic, integral })
            }
        }
    }

    /// `min |Z(γ)| / ‖γ‖` over active classes (within the cutoff, if any).
    pub fn support_constant(&self, norm: Norm, cutoff: Option<f64>) -> Result<f64> {
        let act = self.active_classes(cutoff)?;
        act.iter()
            .map(|(g, _)| self.central(g).norm() / norm.eval(g))
            .min_by(f64::total_cmp)
            .ok_or(Error::NoActiveClasses)
    }

    /// Active rays sorted by angle in `[0, 2π)`, each with its classes.
    pub fn active_rays(&self, cutoff: f64) -> Result<RayClasses> {
        if !(cutoff > 0.0) {
            return Err(Error::InvalidInput("cutoff must be positive".into()));
        }
        let mut act: Vec<(f64, Class, Rational64)> = self
            .active_classes(Some(cutoff))?
            .into_iter()
            .map(|(g, w)| (Ray::new(self.central(&g)).map(|r| r.angle()).unwrap_or(0.0), g, w))
            .collect();
        if act.is_empty() {
            return Err(Error::CutoffTooSmall(cutoff));
        }
        act.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut rays: Vec<(f64, Vec<(Class, Rational64)>)> = Vec::new();
        for (ang, g, w) in act {
            match rays.last_mut() {
                Some((a0, list)) if (ang - *a0).abs() < RAY_TOL => list.push((g, w)),
                _ => rays.push((ang, vec![(g, w)])),
            }
        }
        // Merge across the 0 / 2π seam.
        if rays.len() > 1 {
            let last = rays.last().expect("nonempty").0;
            if 2.0 * PI - last + rays[0].0 < RAY_TOL {
                let (_, tail) = rays.pop().expect("nonempty");
                rays[0].1.extend(tail);
            }
        }
        Ok(rays
            .into_iter()
            .map(|(a, mut list)| {
                list.sort_by_key(|(g, _)| (content(g).abs(), g.clone()));
                (Ray::from_angle(a), list)
            })
            .collect())
    }

    /// The doubled structure on `Γ ⊕ Γ^∨`.
    pub fn double(&self, dual_charge: Vec<C64>) -> Result<DoubledStructure> {
        let n = self.rank();
        if dual_charge.len() != n {
            return Err(Error::Dimension(format!("{} dual charges for rank {n}", dual_charge.len())));
        }
        let mut z = self.central_charge.clone();
        z.extend(dual_charge.iter().copied());
        let structure = BpsStructure {
            lattice: self.lattice.doubled(),
            central_charge: z,
            omega: OmegaTable::Doubled(Box::new(self.clone())),
        };
        Ok(DoubledStructure { base: self.clone(), dual_charge, structure })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DoubledStructure {
    pub base: BpsStructure,
    pub dual_charge: Vec<C64>,
    /// The doubled lattice with its form, charges and invariants.
    pub structure: BpsStructure,
}

impl DoubledStructure {
    pub fn base_rank(&self) -> usize {
        self.base.rank()
    }

    pub fn lattice(&self) -> &Lattice {
        self.structure.lattice()
    }

    pub fn omega(&self, g: &[i64]) -> Rational64 {
        self.structure.omega(g)
    }

    pub fn central(&self, g: &[i64]) -> C64 {
        self.structure.central(g)
    }
}

/// Exact rational from `"p/q"` or `"p"`.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let bad = || Error::InvalidInput(format!("not a rational: {s:?}"));
    let t = s.trim();
    match t.split_once('/') {
        Some((p, q)) => {
            let p: i64 = p.trim().parse().map_err(|_| bad())?;
            let q: i64 = q.trim().parse().map_err(|_| bad())?;
            if q == 0 {
                return Err(bad());
            }
            Ok(Rational64::new(p, q))
        }
        None => Ok(Rational64::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

pub fn format_rational(r: Rational64) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Whether `r` is a nonzero integer.
pub fn is_nonzero_integer(r: Rational64) -> bool {
    r.is_integer() && !r.is_zero()
}

/// `|r|` as a float, for reporting.
pub fn rational_to_f64(r: Rational64) -> f64 {
    let v = *r.numer() as f64 / *r.denom() as f64;
    if r.is_negative() {
        -v.abs()
    } else {
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::c;
    use proptest::prelude::*;

    fn r(p: i64, q: i64) -> Rational64 {
        Rational64::new(p, q)
    }

    #[test]
    fn dt_invariants() {
        let a1 = BpsStructure::a1(c(0.0, 1.0)).unwrap();
        assert_eq!(a1.dt_invariant(&[2]).unwrap(), r(1, 4));
        assert_eq!(a1.dt_invariant(&[1]).unwrap(), r(1, 1));
        let con = BpsStructure::conifold(c(0.3, 0.5), c(1.0, 0.0)).unwrap();
        assert_eq!(con.dt_invariant(&[0, 2]).unwrap(), r(-5, 2));
    }

    #[test]
    fn classification() {
        let a1 = BpsStructure::a1(c(1.0, 1.0)).unwrap().classify().unwrap();
        assert_eq!(a1.names(), vec!["finite", "uncoupled", "generic", "integral"]);
        let con = BpsStructure::conifold(c(0.3, 0.5), c(1.0, 0.0)).unwrap().classify().unwrap();
        assert!(con.uncoupled && con.integral && !con.finite);
        let a2 = BpsStructure::a2(c(0.0, 1.0), c(1.0, 1.0)).unwrap().classify().unwrap();
        assert!(a2.finite && a2.integral && !a2.uncoupled);
    }

    #[test]
    fn support_constants() {
        let a1 = BpsStructure::a1(c(3.0, 4.0)).unwrap();
        assert!((a1.support_constant(Norm::Euclidean, None).unwrap() - 5.0).abs() < 1e-15);
        let s = BpsStructure::from_pairs(
            Lattice::trivial(2),
            vec![c(1.0, 0.0), c(0.0, 2.0)],
            &[(vec![1, 0], r(1, 1)), (vec![0, 1], r(1, 1))],
        )
        .unwrap();
        assert!((s.support_constant(Norm::Euclidean, None).unwrap() - 1.0).abs() < 1e-15);
        let empty = BpsStructure::new(Lattice::trivial(1), vec![c(1.0, 0.0)], OmegaTable::Explicit(vec![])).unwrap();
        assert_eq!(empty.support_constant(Norm::Euclidean, None).unwrap_err().code(), "NO_ACTIVE_CLASSES");
    }

    #[test]
    fn rays_of_examples() {
        let a1 = BpsStructure::a1(c(0.0, 1.0)).unwrap();
        let rays = a1.active_rays(10.0).unwrap();
        assert_eq!(rays.len(), 2);
        assert!((rays[0].0.phase() - c(0.0, 1.0)).norm() < 1e-15);
        assert!((rays[1].0.phase() - c(0.0, -1.0)).norm() < 1e-15);

        let a2 = BpsStructure::a2(c(0.0, 1.0), c(-1.0, 1.0)).unwrap();
        assert_eq!(a2.active_rays(100.0).unwrap().len(), 6);

        let con = BpsStructure::conifold(c(0.3, 0.5), c(1.0, 0.0)).unwrap();
        let rays = con.active_rays(5.0).unwrap();
        let has = |u: C64| rays.iter().any(|(r, _)| r.contains(u));
        assert!(has(c(1.0, 0.0)) && has(c(-1.0, 0.0)));
        for n in -5i64..=4 {
            let u = c(0.3 + n as f64, 0.5);
            if u.norm() <= 5.0 {
                assert!(has(u) && has(-u), "missing ray for n = {n}");
            }
        }
    }

    #[test]
    fn cutoff_errors() {
        let a1 = BpsStructure::a1(c(0.0, 3.0)).unwrap();
        assert_eq!(a1.active_rays(1.0).unwrap_err().code(), "CUTOFF_TOO_SMALL");
        let con = BpsStructure::conifold(c(0.3, 0.5), c(1.0, 0.0)).unwrap();
        assert_eq!(con.active_classes(None).unwrap_err().code(), "FINITENESS_UNDECIDABLE");
    }

    #[test]
    fn doubling() {
        let a1 = BpsStructure::a1(c(1.0, 0.0)).unwrap();
        let d = a1.double(vec![c(0.5, 0.5)]).unwrap();
        let lat = d.lattice();
        assert_eq!(lat.pair(&[0, 1], &[1, 0]), 1);
        assert_eq!(lat.pair(&[1, 0], &[1, 0]), 0);
        assert_eq!(d.omega(&[1, 1]), r(0, 1));
        assert_eq!(d.omega(&[1, 0]), r(1, 1));
        assert!(!lat.is_degenerate());
    }

    #[test]
    fn asymmetric_table_rejected() {
        let e =
            BpsStructure::new(Lattice::trivial(1), vec![c(1.0, 0.0)], OmegaTable::Explicit(vec![(vec![1], r(1, 1))]));
        assert!(e.is_err());
    }

    #[test]
    fn rationals_round_trip() {
        for s in ["-5/2", "3", "1/4"] {
            assert_eq!(format_rational(parse_rational(s).unwrap()), s);
        }
    }

    proptest! {
        #[test]
        fn a1_multicover(n in 1i64..=20) {
            let a1 = BpsStructure::a1(c(0.0, 1.0)).unwrap();
            prop_assert_eq!(a1.dt_invariant(&[n]).unwrap(), r(1, n * n));
        }

        #[test]
        fn doubling_twice_is_unimodular(a in -3i64..3, b in -3i64..3, cc in -3i64..3) {
            let lat = Lattice::new(vec![vec![0, a, b], vec![-a, 0, cc], vec![-b, -cc, 0]]).unwrap();
            let dd = lat.doubled().doubled();
            let m = nalgebra::DMatrix::from_fn(dd.rank(), dd.rank(), |i, j| dd.skew()[i][j] as f64);
            prop_assert!((m.determinant().abs() - 1.0).abs() < 1e-9);
            for i in 0..dd.rank() {
                for j in 0..dd.rank() {
                    prop_assert_eq!(dd.skew()[i][j], -dd.skew()[j][i]);
                }
            }
        }

        #[test]
        fn rays_stable_under_cutoff(c1 in 2.0f64..6.0, extra in 0.5f64..4.0, re in -0.9f64..0.9, im in 0.1f64..1.0) {
            let con = BpsStructure::conifold(c(re, im), c(1.0, 0.0)).unwrap();
            let small = con.active_rays(c1).unwrap();
            let big = con.active_rays(c1 + extra).unwrap();
            for (ray, list) in &small {
                let (_, bl) = big.iter().find(|(r, _)| r.contains(ray.phase())).expect("ray persists");
                let kept: Vec<_> = bl.iter().filter(|(g, _)| con.central(g).norm() <= c1).cloned().collect();
                prop_assert_eq!(&kept, list);
            }
        }

        #[test]
        fn support_under_permutation(x in 0.1f64..3.0, y in 0.1f64..3.0) {
            let z = vec![c(x, 0.3), c(-0.2, y)];
            let pairs = [(vec![1, 0], r(1, 1)), (vec![0, 1], r(2, 1)), (vec![1, 1], r(1, 1))];
            let s = BpsStructure::from_pairs(Lattice::trivial(2), z.clone(), &pairs).unwrap();
            let swapped: Vec<_> = pairs.iter().map(|(g, w)| (vec![g[1], g[0]], *w)).collect();
            let t = BpsStructure::from_pairs(Lattice::trivial(2), vec![z[1], z[0]], &swapped).unwrap();
            let a = s.support_constant(Norm::Euclidean, None).unwrap();
            let b = t.support_constant(Norm::Euclidean, None).unwrap();
            prop_assert!((a - b).abs() < 1e-14);
        }
    }
}
