//! Joyce functions for the uncoupled and conifold families, and the linear
//! data they induce on the base: the linear Joyce connection, the Joyce
//! form `g`, the operator `V`, the diamond product and the prepotential.

use crate::bps::{BpsStructure, Class};
use crate::error::{Error, Result};
use crate::frobenius::FrobeniusStructure;
use crate::numerics::{c, condition, inverse, max_abs, polydisc_coefficients, Tensor3, C64, TWO_PI_I};
use crate::specfn::polylog;
use crate::torus::CheckReport;
use nalgebra::DMatrix;
use serde::Serialize;

/// Condition number above which `g` is treated as degenerate.
pub const DEGENERATE_COND: f64 = 1e12;

/// A Joyce function in coordinates `(z_i, θ_i)` with skew form `η`.
pub trait JoyceModel: Send + Sync {
    fn family(&self) -> &'static str;

    fn dim(&self) -> usize;

    /// `η_{pq}` on the cotangent basis `dz_p`.
    fn eta(&self) -> DMatrix<f64>;

    fn j(&self, z: &[C64], theta: &[C64]) -> Result<C64>;

    /// `∂J/∂θ_i`.
    fn grad_theta(&self, z: &[C64], theta: &[C64]) -> Result<Vec<C64>>;

    /// `∂²J/∂θ_i∂θ_j`.
    fn hessian(&self, z: &[C64], theta: &[C64]) -> Result<DMatrix<C64>>;

    /// `T_{ijk} = ∂³J/∂θ_i∂θ_j∂θ_k` at `θ = 0`.
    fn third(&self, z: &[C64]) -> Result<Tensor3>;

    fn euler(&self, z: &[C64]) -> Vec<C64> {
        z.to_vec()
    }
}

fn check_dims(m: &dyn JoyceModel, z: &[C64], theta: Option<&[C64]>) -> Result<()> {
    let n = m.dim();
    if z.len() != n || theta.is_some_and(|t| t.len() != n) {
        return Err(Error::Dimension(format!("{} model has dimension {n}", m.family())));
    }
    Ok(())
}

fn dot(g: &[f64], x: &[C64]) -> C64 {
    g.iter().zip(x).map(|(&k, v)| v * k).sum()
}

/// `J = (1/24πi) Σ_γ Ω(γ) θ(γ)³ / Z(γ)` over the active classes.
#[derive(Debug, Clone)]
pub struct UncoupledModel {
    n: usize,
    eta: DMatrix<f64>,
    classes: Vec<(Vec<f64>, f64)>,
}

impl UncoupledModel {
    pub fn new(s: &BpsStructure) -> Result<Self> {
        let flags = s.classify()?;
        if !flags.finite {
            return Err(Error::NotFinite);
        }
        if !flags.uncoupled {
            return Err(Error::NotUncoupled);
        }
        let n = s.rank();
        let skew = s.lattice().skew();
        let eta = DMatrix::from_fn(n, n, |i, j| skew[i][j] as f64);
        let classes: Vec<_> = s
            .active_classes(None)?
            .into_iter()
            .map(|(g, w): (Class, _)| (g.iter().map(|&k| k as f64).collect(), crate::bps::rational_to_f64(w)))
            .collect();
        if classes.is_empty() {
            return Err(Error::NoActiveClasses);
        }
        let m = UncoupledModel { n, eta, classes };
        m.charges(s.central_charges())?;
        Ok(m)
    }

    pub fn classes(&self) -> &[(Vec<f64>, f64)] {
        &self.classes
    }

    fn charges(&self, z: &[C64]) -> Result<Vec<C64>> {
        self.classes
            .iter()
            .map(|(g, _)| {
                let zg = dot(g, z);
                if zg.norm() < 1e-300 {
                    Err(Error::ZeroCentralCharge)
                } else {
                    Ok(zg)
                }
            })
            .collect()
    }
}

impl JoyceModel for UncoupledModel {
    fn family(&self) -> &'static str {
        "uncoupled"
    }

    fn dim(&self) -> usize {
        self.n
    }

    fn eta(&self) -> DMatrix<f64> {
        self.eta.clone()
    }

    fn j(&self, z: &[C64], theta: &[C64]) -> Result<C64> {
        check_dims(self, z, Some(theta))?;
        let zs = self.charges(z)?;
        let s: C64 = self.classes.iter().zip(&zs).map(|((g, w), zg)| dot(g, theta).powu(3) / zg * *w).sum();
        Ok(s / (TWO_PI_I * 12.0))
    }

    fn grad_theta(&self, z: &[C64], theta: &[C64]) -> Result<Vec<C64>> {
        check_dims(self, z, Some(theta))?;
        let zs = self.charges(z)?;
        let mut out = vec![c(0.0, 0.0); self.n];
        for ((g, w), zg) in self.classes.iter().zip(&zs) {
            let f = dot(g, theta).powu(2) / zg * *w;
            for i in 0..self.n {
                out[i] += f * g[i];
            }
        }
        Ok(out.into_iter().map(|v| v / (TWO_PI_I * 4.0)).collect())
    }

    fn hessian(&self, z: &[C64], theta: &[C64]) -> Result<DMatrix<C64>> {
        check_dims(self, z, Some(theta))?;
        let zs = self.charges(z)?;
        let mut h = DMatrix::zeros(self.n, self.n);
        for ((g, w), zg) in self.classes.iter().zip(&zs) {
            let f = dot(g, theta) / zg * *w;
            h += DMatrix::from_fn(self.n, self.n, |i, j| f * (g[i] * g[j]));
        }
        Ok(h / (TWO_PI_I * 2.0))
    }

    fn third(&self, z: &[C64]) -> Result<Tensor3> {
        check_dims(self, z, None)?;
        let zs = self.charges(z)?;
        Ok(Tensor3::from_fn(self.n, |i, j, k| {
            let s: C64 = self.classes.iter().zip(&zs).map(|((g, w), zg)| *w * g[i] * g[j] * g[k] / zg).sum();
            s / (TWO_PI_I * 2.0)
        }))
    }
}

/// `J = (1/6w⁴) Σ_β GV(β) (v(β)φ - wθ(β))³ Li₀(e^{2πi v(β)/w})` in
/// coordinates `(v_1, …, v_m, w; θ_1, …, θ_m, φ)`. The resolved conifold is
/// `m = 1` with a single curve class of weight one.
#[derive(Debug, Clone)]
pub struct ConifoldModel {
    curves: Vec<(Vec<f64>, f64)>,
    m: usize,
}

impl ConifoldModel {
    pub fn resolved() -> Self {
        ConifoldModel { curves: vec![(vec![1.0], 1.0)], m: 1 }
    }

    /// Curve classes in a basis of `H₂` with their genus-zero GV invariants.
    pub fn with_curves(m: usize, curves: Vec<(Vec<f64>, f64)>) -> Result<Self> {
        if curves.is_empty() || curves.iter().any(|(b, _)| b.len() != m) {
            return Err(Error::Dimension("curve classes must have length m and be nonempty".into()));
        }
        Ok(ConifoldModel { curves, m })
    }

    /// Per curve: `(Li₀(e^{2πi v(β)/w}), c(β))` with `c = (-wβ, v(β))`, so
    /// that `v(β)φ - wθ(β) = c·θ`.
    fn terms(&self, z: &[C64]) -> Result<Vec<(C64, f64, Vec<C64>)>> {
        let w = z[self.m];
        if w.norm() == 0.0 {
            return Err(Error::ZeroCentralCharge);
        }
        self.curves
            .iter()
            .map(|(b, gv)| {
                let vb = dot(b, &z[..self.m]);
                let e = (TWO_PI_I * vb / w).exp();
                let li0 = polylog(0, e).map_err(|_| Error::Pole(format!("e^(2πi v/w) = 1 at v = {vb}")))?;
                let mut cv: Vec<C64> = b.iter().map(|&k| -w * k).collect();
                cv.push(vb);
                Ok((li0, *gv, cv))
            })
            .collect()
    }
}

impl JoyceModel for ConifoldModel {
    fn family(&self) -> &'static str {
        "conifold"
    }

    fn dim(&self) -> usize {
        self.m + 1
    }

    fn eta(&self) -> DMatrix<f64> {
        DMatrix::zeros(self.m + 1, self.m + 1)
    }

    fn j(&self, z: &[C64], theta: &[C64]) -> Result<C64> {
        check_dims(self, z, Some(theta))?;
        let w4 = z[self.m].powu(4);
        let t = self.terms(z)?;
        Ok(t.iter().map(|(l, gv, cv)| l * *gv * dot_c(cv, theta).powu(3)).sum::<C64>() / (w4 * 6.0))
    }

    fn grad_theta(&self, z: &[C64], theta: &[C64]) -> Result<Vec<C64>> {
        check_dims(self, z, Some(theta))?;
        let w4 = z[self.m].powu(4);
        let mut out = vec![c(0.0, 0.0); self.dim()];
        for (l, gv, cv) in self.terms(z)? {
            let f = l * gv * dot_c(&cv, theta).powu(2) / (w4 * 2.0);
            for i in 0..self.dim() {
                out[i] += f * cv[i];
            }
        }
        Ok(out)
    }

    fn hessian(&self, z: &[C64], theta: &[C64]) -> Result<DMatrix<C64>> {
        check_dims(self, z, Some(theta))?;
        let n = self.dim();
        let w4 = z[self.m].powu(4);
        let mut h = DMatrix::zeros(n, n);
        for (l, gv, cv) in self.terms(z)? {
            let f = l * gv * dot_c(&cv, theta) / w4;
            h += DMatrix::from_fn(n, n, |i, j| f * cv[i] * cv[j]);
        }
        Ok(h)
    }

    fn third(&self, z: &[C64]) -> Result<Tensor3> {
        check_dims(self, z, None)?;
        let w4 = z[self.m].powu(4);
        let t = self.terms(z)?;
        Ok(Tensor3::from_fn(self.dim(), |i, j, k| {
            t.iter().map(|(l, gv, cv)| l * *gv * cv[i] * cv[j] * cv[k]).sum::<C64>() / w4
        }))
    }
}

fn dot_c(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// A base model pulled back to `Γ ⊕ Γ^∨`: `J` ignores the dual variables
/// and `η` is the doubled form `[[η, -1], [1, 0]]`.
pub struct DoubledModel<M: JoyceModel> {
    pub base: M,
}

impl<M: JoyceModel> DoubledModel<M> {
    pub fn new(base: M) -> Self {
        DoubledModel { base }
    }

    fn split<'a>(&self, z: &'a [C64]) -> &'a [C64] {
        &z[..self.base.dim()]
    }
}

impl<M: JoyceModel> JoyceModel for DoubledModel<M> {
    fn family(&self) -> &'static str {
        "doubled"
    }

    fn dim(&self) -> usize {
        2 * self.base.dim()
    }

    fn eta(&self) -> DMatrix<f64> {
        let n = self.base.dim();
        let mut e = DMatrix::zeros(2 * n, 2 * n);
        e.view_mut((0, 0), (n, n)).copy_from(&self.base.eta());
        for i in 0..n {
            e[(i, n + i)] = -1.0;
            e[(n + i, i)] = 1.0;
        }
        e
    }

    fn j(&self, z: &[C64], theta: &[C64]) -> Result<C64> {
        check_dims(self, z, Some(theta))?;
        self.base.j(self.split(z), self.split(theta))
    }

    fn grad_theta(&self, z: &[C64], theta: &[C64]) -> Result<Vec<C64>> {
        check_dims(self, z, Some(theta))?;
        let mut g = self.base.grad_theta(self.split(z), self.split(theta))?;
        g.resize(self.dim(), c(0.0, 0.0));
        Ok(g)
    }

    fn hessian(&self, z: &[C64], theta: &[C64]) -> Result<DMatrix<C64>> {
        check_dims(self, z, Some(theta))?;
        let n = self.base.dim();
        let mut h = DMatrix::zeros(2 * n, 2 * n);
        h.view_mut((0, 0), (n, n)).copy_from(&self.base.hessian(self.split(z), self.split(theta))?);
        Ok(h)
    }

    fn third(&self, z: &[C64]) -> Result<Tensor3> {
        check_dims(self, z, None)?;
        let n = self.base.dim();
        let t = self.base.third(self.split(z))?;
        Ok(Tensor3::from_fn(2 * n, |i, j, k| if i < n && j < n && k < n { t.get(i, j, k) } else { c(0.0, 0.0) }))
    }
}

fn shifted(z: &[C64], i: usize, h: C64) -> Vec<C64> {
    let mut out = z.to_vec();
    out[i] += h;
    out
}

/// Residual of `∂²J/∂θ_i∂z_j - ∂²J/∂θ_j∂z_i = Σ η_{pq} J_{θ_iθ_p} J_{θ_jθ_q}`
/// with the `z`-derivatives from central differences of `∂J/∂θ`.
pub fn fl_residual(m: &dyn JoyceModel, z: &[C64], theta: &[C64], fd_step: f64) -> Result<f64> {
    check_dims(m, z, Some(theta))?;
    let n = m.dim();
    let h = fd_step * z.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let mut dz = DMatrix::zeros(n, n);
    for j in 0..n {
        let up = m.grad_theta(&shifted(z, j, c(h, 0.0)), theta)?;
        let dn = m.grad_theta(&shifted(z, j, c(-h, 0.0)), theta)?;
        for i in 0..n {
            dz[(i, j)] = (up[i] - dn[i]) / (2.0 * h);
        }
    }
    let hess = m.hessian(z, theta)?;
    let eta = m.eta().map(|v| c(v, 0.0));
    let rhs = &hess * eta * hess.transpose();
    let lhs = &dz - dz.transpose();
    Ok(max_abs(&(lhs - rhs)))
}

/// Maximum [`fl_residual`] over sample points `(z, θ)`.
pub fn verify_fl_pde(
    m: &dyn JoyceModel,
    samples: &[(Vec<C64>, Vec<C64>)],
    fd_step: f64,
    tol: f64,
) -> Result<CheckReport> {
    let mut worst = 0.0f64;
    for (z, t) in samples {
        worst = worst.max(fl_residual(m, z, t, fd_step)?);
    }
    Ok(CheckReport { max_error: worst, samples: samples.len(), pass: worst < tol })
}

/// Linear data at a base point.
#[derive(Debug, Clone)]
pub struct LinearData {
    /// `T_{ijk}`.
    pub third: Tensor3,
    /// `Γ(i, j, m)`: `∇^J_{∂_i} ∂_j = Σ_m Γ(i, j, m) ∂_m`.
    pub connection: Tensor3,
    /// `g_{jk} = Σ_i z_i T_{ijk}`.
    pub joyce_form: DMatrix<C64>,
    /// Column `i` is `V(∂_i)`.
    pub v: DMatrix<C64>,
    /// `∂_i ⋄ ∂_j = Σ_l d(i, j, l) ∂_l`, absent when `g` is degenerate.
    pub diamond: Option<Tensor3>,
    /// Third derivatives of the prepotential, present when `η = 0`.
    pub prepotential_third: Option<Tensor3>,
    pub euler: Vec<C64>,
}

fn connection_from(t: &Tensor3, eta: &DMatrix<f64>) -> Tensor3 {
    let n = t.dim();
    Tensor3::from_fn(n, |i, j, m| -(0..n).map(|l| t.get(i, j, l) * eta[(l, m)]).sum::<C64>())
}

pub fn linear_data(m: &dyn JoyceModel, z: &[C64]) -> Result<LinearData> {
    check_dims(m, z, None)?;
    Ok(linear_data_from_third(m.third(z)?, &m.eta(), z, m.euler(z)))
}

/// Linear data from third derivatives `t` computed elsewhere.
pub fn linear_data_from_third(t: Tensor3, eta: &DMatrix<f64>, z: &[C64], e: Vec<C64>) -> LinearData {
    let n = t.dim();
    let g = DMatrix::from_fn(n, n, |j, k| (0..n).map(|i| e[i] * t.get(i, j, k)).sum::<C64>());
    let v = DMatrix::from_fn(n, n, |q, i| -(0..n).map(|p| g[(i, p)] * eta[(p, q)]).sum::<C64>());
    let diamond = diamond_from(&t, &g, z);
    let prepotential_third = eta.iter().all(|&x| x == 0.0).then(|| t.clone());
    LinearData {
        connection: connection_from(&t, eta),
        third: t,
        joyce_form: g,
        v,
        diamond,
        prepotential_third,
        euler: e,
    }
}

fn diamond_from(t: &Tensor3, g: &DMatrix<C64>, z: &[C64]) -> Option<Tensor3> {
    let n = t.dim();
    let scale = t.max_abs() * z.iter().map(|v| v.norm()).sum::<f64>();
    if max_abs(g) <= 1e-12 * scale || condition(g) >= DEGENERATE_COND || singular_ratio(g) < 1.0 / DEGENERATE_COND {
        return None;
    }
    let gi = inverse(g).ok()?;
    Some(Tensor3::from_fn(n, |i, j, l| (0..n).map(|k| t.get(i, j, k) * gi[(k, l)]).sum()))
}

fn singular_ratio(g: &DMatrix<C64>) -> f64 {
    let sv = g.clone().singular_values();
    let hi = sv.iter().copied().fold(0.0, f64::max);
    sv.iter().copied().fold(f64::INFINITY, f64::min) / hi.max(1e-300)
}

/// The diamond product structure constants, or `DegenerateForm`.
pub fn diamond(m: &dyn JoyceModel, z: &[C64]) -> Result<Tensor3> {
    linear_data(m, z)?.diamond.ok_or(Error::DegenerateForm)
}

/// `max |(X_i⋄X_j)⋄X_k - X_i⋄(X_j⋄X_k)|` over coordinate vectors.
pub fn associativity_residual(d: &Tensor3) -> f64 {
    let n = d.dim();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for out in 0..n {
                    let l: C64 = (0..n).map(|p| d.get(i, j, p) * d.get(p, k, out)).sum();
                    let r: C64 = (0..n).map(|p| d.get(j, k, p) * d.get(i, p, out)).sum();
                    worst = worst.max((l - r).norm());
                }
            }
        }
    }
    worst
}

/// Diamond associativity of the uncoupled model of `s` at each sample
/// point (the structure's own central charge when `samples` is empty).
pub fn wdvv_check(s: &BpsStructure, samples: &[Vec<C64>], tol: f64) -> Result<CheckReport> {
    let m = UncoupledModel::new(s)?;
    let own = [s.central_charges().to_vec()];
    let pts = if samples.is_empty() { &own[..] } else { samples };
    let mut worst = 0.0f64;
    for z in pts {
        worst = worst.max(associativity_residual(&diamond(&m, z)?));
    }
    Ok(CheckReport { max_error: worst, samples: pts.len(), pass: worst < tol })
}

/// Residuals of the identities satisfied by the linear data at one point.
#[derive(Debug, Clone, Serialize)]
pub struct LinearIdentities {
    /// Curvature of `∇^J` from central differences of `T` in `z`.
    pub flatness: f64,
    /// `∇^J g` from central differences of `g`.
    pub metric_parallel: f64,
    /// `g(VX, Y) + g(X, VY)`.
    pub v_skew: f64,
    /// `-V` against `η`-raising after `g`-lowering.
    pub diagram: f64,
    /// `g(E⋄X, Y) - g(X, Y)`, absent without a diamond product.
    pub euler_unit: Option<f64>,
    pub t_symmetry: f64,
}

pub fn linear_identities(m: &dyn JoyceModel, z: &[C64], fd_step: f64) -> Result<LinearIdentities> {
    let n = m.dim();
    let ld = linear_data(m, z)?;
    let eta = m.eta();
    let h = fd_step * z.iter().map(|v| v.norm()).fold(1.0, f64::max);
    let mut d_gamma = Vec::with_capacity(n);
    let mut d_g = Vec::with_capacity(n);
    for i in 0..n {
        let up = linear_data(m, &shifted(z, i, c(h, 0.0)))?;
        let dn = linear_data(m, &shifted(z, i, c(-h, 0.0)))?;
        d_gamma
            .push(Tensor3::from_fn(n, |a, b, k| (up.connection.get(a, b, k) - dn.connection.get(a, b, k)) / (2.0 * h)));
        d_g.push((up.joyce_form - dn.joyce_form) / c(2.0 * h, 0.0));
    }
    let gam = &ld.connection;
    let g = &ld.joyce_form;
    let mut flat = 0.0f64;
    let mut par = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for mm in 0..n {
                    let mut r = d_gamma[i].get(j, k, mm) - d_gamma[j].get(i, k, mm);
                    for l in 0..n {
                        r += gam.get(j, k, l) * gam.get(i, l, mm) - gam.get(i, k, l) * gam.get(j, l, mm);
                    }
                    flat = flat.max(r.norm());
                }
                let mut r = d_g[i][(j, k)];
                for l in 0..n {
                    r -= gam.get(i, j, l) * g[(l, k)] + gam.get(i, k, l) * g[(j, l)];
                }
                par = par.max(r.norm());
            }
        }
    }
    let v = &ld.v;
    let v_skew = max_abs(&(v.transpose() * g + g * v));
    let eta_c = eta.map(|x| c(x, 0.0));
    // Column i of -V against η(g(∂_i, -), -).
    let diagram = max_abs(&(-v.clone() - (g * &eta_c).transpose()));
    let euler_unit = ld.diamond.as_ref().map(|d| {
        let mut worst = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                let ex: C64 =
                    (0..n).map(|p| (0..n).map(|a| ld.euler[a] * d.get(a, x, p)).sum::<C64>() * g[(p, y)]).sum();
                worst = worst.max((ex - g[(x, y)]).norm());
            }
        }
        worst
    });
    Ok(LinearIdentities {
        flatness: flat,
        metric_parallel: par,
        v_skew,
        diagram,
        euler_unit,
        t_symmetry: ld.third.asymmetry(),
    })
}

/// A prepotential with closed form on the base.
#[derive(Debug, Clone)]
pub enum Prepotential {
    /// `(1/8πi) Σ Ω(γ) Z(γ)² log Z(γ)`.
    Uncoupled(Vec<(Vec<f64>, f64)>),
    /// `-(w²/(2πi)³) Σ GV(β) Li₃(e^{2πi v(β)/w})`.
    Conifold(Vec<(Vec<f64>, f64)>),
}

impl Prepotential {
    pub fn uncoupled(s: &BpsStructure) -> Result<Self> {
        Ok(Prepotential::Uncoupled(UncoupledModel::new(s)?.classes))
    }

    pub fn conifold(m: &ConifoldModel) -> Self {
        Prepotential::Conifold(m.curves.clone())
    }

    /// Value on the principal branch of `log`.
    pub fn value(&self, z: &[C64]) -> Result<C64> {
        self.value_from(z, None)
    }

    /// Whether some `Z(γ)` lies on the negative real axis, where the
    /// principal branch of the uncoupled prepotential jumps.
    pub fn on_branch_cut(&self, z: &[C64]) -> bool {
        match self {
            Prepotential::Uncoupled(cl) => cl.iter().any(|(g, _)| {
                let zg = dot(g, z);
                zg.re < 0.0 && zg.im.abs() <= 1e-12 * zg.norm()
            }),
            Prepotential::Conifold(_) => false,
        }
    }

    /// Logs are continued from the point `center` when given, so small
    /// neighbourhoods never straddle the cut.
    fn value_from(&self, z: &[C64], center: Option<&[C64]>) -> Result<C64> {
        match self {
            Prepotential::Uncoupled(cl) => {
                let mut acc = c(0.0, 0.0);
                for (g, w) in cl {
                    let zg = dot(g, z);
                    if zg.norm() == 0.0 {
                        return Err(Error::ZeroCentralCharge);
                    }
                    let log = match center {
                        Some(z0) => {
                            let z0g = dot(g, z0);
                            z0g.ln() + (zg / z0g).ln()
                        }
                        None => zg.ln(),
                    };
                    acc += zg * zg * log * *w;
                }
                Ok(acc / (TWO_PI_I * 4.0))
            }
            Prepotential::Conifold(cv) => {
                let m = cv.first().map_or(0, |b| b.0.len());
                let w = z[m];
                let mut acc = c(0.0, 0.0);
                for (b, gv) in cv {
                    acc += polylog(3, (TWO_PI_I * dot(b, &z[..m]) / w).exp())? * *gv;
                }
                Ok(-w * w * acc / TWO_PI_I.powu(3))
            }
        }
    }

    /// Third derivatives from Cauchy integrals on a small polydisc.
    pub fn third_derivatives(&self, z: &[C64], rho: f64) -> Result<Tensor3> {
        let n = z.len();
        let alpha = |i: usize, j: usize, k: usize| {
            let mut a = vec![0usize; n];
            for x in [i, j, k] {
                a[x] += 1;
            }
            a
        };
        let mut wanted = Vec::new();
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    wanted.push(alpha(i, j, k));
                }
            }
        }
        let coeffs = polydisc_coefficients(|p| self.value_from(p, Some(z)), z, rho, 8, &wanted)?;
        Ok(Tensor3::from_fn(n, |i, j, k| {
            let a = alpha(i, j, k);
            let pos = wanted.iter().position(|w| *w == a).expect("listed");
            let fact: f64 = a.iter().map(|&x| crate::numerics::factorial(x)).product();
            coeffs[pos] * fact
        }))
    }
}

/// Maps Joyce coordinates `z` to flat coordinates `t` of a Frobenius structure.
pub trait Chart {
    fn to_flat(&self, z: &[C64]) -> Result<Vec<C64>>;
    /// `∂t_a/∂z_i`, row `a`, column `i`.
    fn jacobian(&self, z: &[C64]) -> Result<DMatrix<C64>>;
}

/// `t = z`.
pub struct IdentityChart;

impl Chart for IdentityChart {
    fn to_flat(&self, z: &[C64]) -> Result<Vec<C64>> {
        Ok(z.to_vec())
    }

    fn jacobian(&self, z: &[C64]) -> Result<DMatrix<C64>> {
        Ok(DMatrix::identity(z.len(), z.len()))
    }
}

/// Joyce linear data expressed in flat Frobenius coordinates.
#[derive(Debug, Clone)]
pub struct FlatFrameData {
    pub t: Vec<C64>,
    pub g: DMatrix<C64>,
    pub diamond: Tensor3,
    pub v: DMatrix<C64>,
    pub euler: Vec<C64>,
}

impl FlatFrameData {
    /// Pushes `ld` forward along a chart with Jacobian `a = ∂t/∂z`.
    pub fn transform(t: Vec<C64>, ld: &LinearData, a: &DMatrix<C64>) -> Result<Self> {
        let d = ld.diamond.as_ref().ok_or(Error::DegenerateForm)?;
        let b = inverse(a)?;
        let n = a.nrows();
        let g = b.transpose() * &ld.joyce_form * &b;
        let diamond = Tensor3::from_fn(n, |p, q, r| {
            let mut acc = c(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    let w = b[(i, p)] * b[(j, q)];
                    if w.norm() == 0.0 {
                        continue;
                    }
                    acc += w * (0..n).map(|l| d.get(i, j, l) * a[(r, l)]).sum::<C64>();
                }
            }
            acc
        });
        let v = a * &ld.v * &b;
        let e = nalgebra::DVector::from_column_slice(&ld.euler);
        let euler = (a * e).iter().copied().collect();
        Ok(FlatFrameData { t, g, diamond, v, euler })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CompatibilityReport {
    pub lambda: [f64; 2],
    pub mu: [f64; 2],
    /// `(2 - d)/2`.
    pub mu_expected: f64,
    pub metric: f64,
    pub diamond: f64,
    pub euler: f64,
    pub v: f64,
    pub mu_residual: f64,
    pub pass: bool,
}

fn fit(pairs: &[(C64, C64)]) -> C64 {
    let num: C64 = pairs.iter().map(|(j, f)| j * f.conj()).sum();
    let den: f64 = pairs.iter().map(|(_, f)| f.norm_sqr()).sum();
    num / den.max(1e-300)
}

/// Fits `λ`, `μ` by least squares over the samples and checks
/// `g_J = λ g_F`, `⋄_J = μ ⋄_F`, `E_J = E_F/μ`, `V_J = V_F/μ` and
/// `μ = (2 - d)/2`.
pub fn compatibility_from_data(
    frames: &[FlatFrameData],
    f: &FrobeniusStructure,
    tol: f64,
) -> Result<CompatibilityReport> {
    if frames.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let n = f.dim();
    let mut g_pairs = Vec::new();
    let mut d_pairs = Vec::new();
    let mut fr = Vec::new();
    for s in frames {
        if s.g.nrows() != n {
            return Err(Error::Dimension(format!("Joyce dimension {} against Frobenius dimension {n}", s.g.nrows())));
        }
        let gf = f.metric();
        let df = f.twisted_product(&s.t)?;
        for (a, b) in s.g.iter().zip(gf.iter()) {
            g_pairs.push((*a, *b));
        }
        for p in 0..n {
            for q in 0..n {
                for r in 0..n {
                    d_pairs.push((s.diamond.get(p, q, r), df.get(p, q, r)));
                }
            }
        }
        fr.push((gf, df, f.euler(&s.t)?, f.frobenius_v()));
    }
    let lambda = fit(&g_pairs);
    let mu = fit(&d_pairs);
    let (mut em, mut ed, mut ee, mut ev) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (s, (gf, df, ef, vf)) in frames.iter().zip(&fr) {
        em = em.max(max_abs(&(&s.g - gf * lambda)));
        ed = ed.max(s.diamond.max_diff(&df.scaled(mu)));
        ee = ee.max(s.euler.iter().zip(ef).map(|(a, b)| (a - b / mu).norm()).fold(0.0, f64::max));
        ev = ev.max(max_abs(&(&s.v - vf / mu)));
    }
    let mu_expected = (2.0 - f.conformal_dimension()) / 2.0;
    let mu_residual = (mu - mu_expected).norm();
    let pass = [em, ed, ee, ev, mu_residual].iter().all(|&r| r < tol);
    Ok(CompatibilityReport {
        lambda: [lambda.re, lambda.im],
        mu: [mu.re, mu.im],
        mu_expected,
        metric: em,
        diamond: ed,
        euler: ee,
        v: ev,
        mu_residual,
        pass,
    })
}

/// Compatibility of a Joyce model with a Frobenius structure at sample
/// base points, through a coordinate chart.
pub fn compatibility_check(
    m: &dyn JoyceModel,
    f: &FrobeniusStructure,
    chart: &dyn Chart,
    samples: &[Vec<C64>],
    tol: f64,
) -> Result<CompatibilityReport> {
    if m.dim() != f.dim() {
        return Err(Error::Dimension(format!("Joyce dimension {} against Frobenius dimension {}", m.dim(), f.dim())));
    }
    let frames = samples
        .iter()
        .map(|z| FlatFrameData::transform(chart.to_flat(z)?, &linear_data(m, z)?, &chart.jacobian(z)?))
        .collect::<Result<Vec<_>>>()?;
    compatibility_from_data(&frames, f, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bps::Lattice;
    use num_rational::Rational64;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn a1(z: C64) -> UncoupledModel {
        UncoupledModel::new(&BpsStructure::a1(z).unwrap()).unwrap()
    }

    fn roots(pairs: &[[i64; 2]], z: [C64; 2]) -> BpsStructure {
        let mut v = Vec::new();
        for g in pairs {
            v.push((g.to_vec(), Rational64::from_integer(1)));
        }
        BpsStructure::from_pairs(Lattice::trivial(2), z.to_vec(), &v).unwrap()
    }

    fn coni_point() -> Vec<C64> {
        vec![c(0.4, 0.7), c(1.0, 0.1)]
    }

    #[test]
    fn a1_joyce_function() {
        let m = a1(c(1.0, 0.0));
        let j = m.j(&[c(1.0, 0.0)], &[c(0.0, PI / 2.0)]).unwrap();
        assert!((j - c(-PI * PI / 96.0, 0.0)).norm() < 1e-15);
        assert!((j.re + 0.102_808).abs() < 1e-6);
        assert_eq!(m.j(&[c(1.0, 0.0)], &[c(0.0, 0.0)]).unwrap(), c(0.0, 0.0));
        let z = c(0.3, -1.2);
        let th = c(0.5, 0.25);
        let want = th.powu(3) / (TWO_PI_I * 6.0 * z);
        assert!((a1(z).j(&[z], &[th]).unwrap() - want).norm() < 1e-15);
    }

    #[test]
    fn a1_linear_data() {
        let z = c(0.8, 0.6);
        let ld = linear_data(&a1(z), &[z]).unwrap();
        assert!((ld.joyce_form[(0, 0)] - TWO_PI_I.inv()).norm() < 1e-15);
        let d = ld.diamond.unwrap();
        assert!((d.get(0, 0, 0) - z.inv()).norm() < 1e-15);
        assert!(ld.v[(0, 0)].norm() == 0.0);
        assert!((ld.prepotential_third.unwrap().get(0, 0, 0) - (TWO_PI_I * z).inv()).norm() < 1e-15);
    }

    #[test]
    fn a1_prepotential() {
        let z = c(0.8, 0.6);
        let p = Prepotential::uncoupled(&BpsStructure::a1(z).unwrap()).unwrap();
        // Summing over ±γ gives z² log z/(4πi) up to the quadratic -z²/8.
        let want = z * z * z.ln() / (TWO_PI_I * 2.0);
        assert!((p.value(&[z]).unwrap() - want + z * z / 8.0).norm() < 1e-15);
        let t = p.third_derivatives(&[z], 0.05).unwrap();
        assert!((t.get(0, 0, 0) - (TWO_PI_I * z).inv()).norm() < 1e-10);
        assert!(p.on_branch_cut(&[c(-1.0, 0.0)]));
    }

    #[test]
    fn prepotential_near_the_cut() {
        let z = c(-1.0, 1e-4);
        let p = Prepotential::uncoupled(&BpsStructure::a1(c(1.0, 0.0)).unwrap()).unwrap();
        let t = p.third_derivatives(&[z], 0.01).unwrap();
        assert!((t.get(0, 0, 0) - (TWO_PI_I * z).inv()).norm() < 1e-8);
    }

    #[test]
    fn conifold_hessian_matches_closed_form() {
        let z = coni_point();
        let th = [c(0.13, -0.21), c(0.07, 0.11)];
        let m = ConifoldModel::resolved();
        let h = m.hessian(&z, &th).unwrap();
        let want = crate::rh::conifold_hessian_closed_form(z[0], z[1], th[0], th[1]).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((h[(i, j)] - want[i][j]).norm() < 1e-14);
            }
        }
        // H = v J_θ + w J_φ vanishes identically.
        let g = m.grad_theta(&z, &th).unwrap();
        assert!((z[0] * g[0] + z[1] * g[1]).norm() < 1e-12);
        assert_eq!(m.j(&z, &[c(0.0, 0.0); 2]).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn conifold_value_at_unit_theta() {
        let z = coni_point();
        let m = ConifoldModel::resolved();
        let j = m.j(&z, &[c(1.0, 0.0), c(0.0, 0.0)]).unwrap();
        let li0 = polylog(0, (TWO_PI_I * z[0] / z[1]).exp()).unwrap();
        assert!((j + li0 / (z[1] * 6.0)).norm() < 1e-14);
    }

    #[test]
    fn conifold_pole() {
        let m = ConifoldModel::resolved();
        let err = m.third(&[c(2.0, 0.0), c(1.0, 0.0)]).unwrap_err();
        assert_eq!(err.code(), "POLE");
    }

    #[test]
    fn conifold_form_is_degenerate() {
        let m = ConifoldModel::resolved();
        let ld = linear_data(&m, &coni_point()).unwrap();
        assert!(max_abs(&ld.joyce_form) < 1e-14);
        assert!(ld.diamond.is_none());
        assert_eq!(diamond(&m, &coni_point()).unwrap_err().code(), "DEGENERATE_FORM");
    }

    #[test]
    fn conifold_prepotential_matches_third_derivatives() {
        let m = ConifoldModel::resolved();
        let z = coni_point();
        let p = Prepotential::conifold(&m);
        let t = p.third_derivatives(&z, 0.02).unwrap();
        assert!(t.max_diff(&m.third(&z).unwrap()) < 1e-8);
    }

    #[test]
    fn fl_pde_holds() {
        let th = vec![c(0.13, -0.21), c(0.07, 0.11)];
        let m = ConifoldModel::resolved();
        let rep = verify_fl_pde(&m, &[(coni_point(), th.clone())], 1e-5, 1e-6).unwrap();
        assert!(rep.pass, "{rep:?}");
        let d = DoubledModel::new(ConifoldModel::resolved());
        let mut z = coni_point();
        z.extend([c(0.3, 0.2), c(-0.5, 0.9)]);
        let mut t4 = th;
        t4.extend([c(0.4, 0.0), c(0.0, -0.3)]);
        assert!(fl_residual(&d, &z, &t4, 1e-5).unwrap() < 1e-6);
    }

    #[test]
    fn doubled_linear_identities() {
        let d = DoubledModel::new(ConifoldModel::resolved());
        let mut z = coni_point();
        z.extend([c(0.3, 0.2), c(-0.5, 0.9)]);
        let li = linear_identities(&d, &z, 1e-5).unwrap();
        assert!(li.flatness < 1e-6 && li.metric_parallel < 1e-6, "{li:?}");
        assert!(li.v_skew < 1e-12 && li.diagram < 1e-12 && li.t_symmetry < 1e-14, "{li:?}");
        let ld = linear_data(&d, &z).unwrap();
        // The connection is nontrivial once η is doubled.
        assert!(ld.connection.max_abs() > 1e-3);
    }

    #[test]
    fn a2_roots_satisfy_wdvv() {
        let s = roots(&[[1, 0], [0, 1], [1, 1]], [c(0.3, 1.0), c(-0.7, 0.4)]);
        let rep = wdvv_check(&s, &[], 1e-10).unwrap();
        assert!(rep.pass, "{rep:?}");
        let samples = vec![vec![c(1.1, 0.2), c(0.3, -0.9)], vec![c(-0.4, 0.5), c(2.0, 1.0)]];
        assert!(wdvv_check(&s, &samples, 1e-10).unwrap().pass);
        let one = wdvv_check(&BpsStructure::a1(c(0.5, 0.5)).unwrap(), &[], 1e-12).unwrap();
        assert!(one.pass);
    }

    #[test]
    fn non_vee_system_reported() {
        let s = roots(&[[1, 0], [0, 1], [2, 1]], [c(0.3, 1.0), c(-0.7, 0.4)]);
        let rep = wdvv_check(&s, &[], 1e-10).unwrap();
        assert!(rep.max_error.is_finite());
    }

    #[test]
    fn a1_compatible_with_trivial_frobenius() {
        let m = a1(c(1.0, 0.0));
        let samples: Vec<_> = [c(0.5, 0.5), c(2.0, -1.0), c(-0.3, 0.8)].iter().map(|&z| vec![z]).collect();
        let rep = compatibility_check(&m, &FrobeniusStructure::trivial(), &IdentityChart, &samples, 1e-10).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!((rep.mu[0] - 1.0).abs() < 1e-12 && rep.mu[1].abs() < 1e-12);
        assert!((c(rep.lambda[0], rep.lambda[1]) - TWO_PI_I.inv()).norm() < 1e-12);
        let err = compatibility_check(&m, &FrobeniusStructure::a2(), &IdentityChart, &samples, 1e-10).unwrap_err();
        assert_eq!(err.code(), "DIMENSION");
    }

    fn structures() -> impl Strategy<Value = (BpsStructure, Vec<C64>)> {
        (1usize..=4).prop_flat_map(|n| {
            let cls = proptest::collection::vec(proptest::collection::vec(-2i64..=2, n), 1..4);
            let zs = proptest::collection::vec((-2.0f64..2.0, 0.2f64..2.0), n);
            let om = proptest::collection::vec(1i64..=3, 4);
            (cls, zs, om).prop_map(move |(cls, zs, om)| {
                let z: Vec<C64> = zs.iter().map(|&(x, y)| c(x, y)).collect();
                let mut pairs = Vec::new();
                for (g, w) in cls.iter().zip(&om) {
                    let neg: Vec<i64> = g.iter().map(|k| -k).collect();
                    if g.iter().all(|&k| k == 0) || pairs.iter().any(|(h, _): &(Vec<i64>, _)| *h == *g || *h == neg) {
                        continue;
                    }
                    pairs.push((g.clone(), Rational64::from_integer(*w)));
                }
                let s = BpsStructure::from_pairs(Lattice::trivial(n), z.clone(), &pairs).unwrap();
                (s, z)
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]
        #[test]
        fn uncoupled_invariants((s, z) in structures(), t in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 4)) {
            prop_assume!(s.active_classes(None).map(|v| !v.is_empty()).unwrap_or(false));
            let m = UncoupledModel::new(&s).unwrap();
            let n = m.dim();
            let th: Vec<C64> = t[..n].iter().map(|&(x, y)| c(x, y)).collect();
            prop_assume!(m.classes().iter().all(|(g, _)| dot(g, &z).norm() > 0.2));
            // Odd in θ, degree -1 in z.
            let neg: Vec<C64> = th.iter().map(|v| -v).collect();
            let j = m.j(&z, &th).unwrap();
            prop_assert!((m.j(&z, &neg).unwrap() + j).norm() < 1e-12 * (1.0 + j.norm()));
            let lam = c(1.7, -0.4);
            let zl: Vec<C64> = z.iter().map(|v| v * lam).collect();
            prop_assert!((m.j(&zl, &th).unwrap() * lam - j).norm() < 1e-12 * (1.0 + j.norm()));
            let ld = linear_data(&m, &z).unwrap();
            prop_assert!(ld.third.asymmetry() < 1e-15);
            // g = (1/4πi) Σ Ω X(γ) Y(γ).
            let g = DMatrix::from_fn(n, n, |a, b| {
                m.classes().iter().map(|(gg, w)| c(w * gg[a] * gg[b], 0.0)).sum::<C64>() / (TWO_PI_I * 2.0)
            });
            prop_assert!(max_abs(&(&ld.joyce_form - g)) < 1e-10);
            prop_assert!(fl_residual(&m, &z, &th, 1e-5).unwrap() < 1e-6);
            let p = Prepotential::uncoupled(&s).unwrap();
            let pt = p.third_derivatives(&z, 0.02).unwrap();
            prop_assert!(pt.max_diff(&ld.third) < 1e-6 * (1.0 + ld.third.max_abs()));
            if let Some(d) = &ld.diamond {
                let li = linear_identities(&m, &z, 1e-5).unwrap();
                let unit = li.euler_unit.unwrap();
                prop_assert!(unit < 1e-8 * (1.0 + d.max_abs()), "{li:?}");
            }
        }
    }
}
