//! Small numerical kernels shared across the crate: accurate complex
//! `expm1`/`log1p`, quadrature, finite differences, dense solves and
//! Cauchy-integral Taylor coefficients.

use crate::error::{Error, Result};
use nalgebra::DMatrix;
use num_complex::Complex64;
use std::f64::consts::PI;

pub type C64 = Complex64;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };
pub const TWO_PI_I: C64 = C64 { re: 0.0, im: 2.0 * PI };

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `exp(z) - 1` without cancellation near zero.
pub fn expm1(z: C64) -> C64 {
    let (a, b) = (z.re, z.im);
    let s = (0.5 * b).sin();
    let re = a.exp_m1() * b.cos() - 2.0 * s * s;
    let im = a.exp() * b.sin();
    C64::new(re, im)
}

/// Principal `log(1 + z)` without cancellation near zero.
pub fn log1p(z: C64) -> C64 {
    if z.norm() > 0.25 {
        return (C64::new(1.0, 0.0) + z).ln();
    }
    // ln|1+z| = ½ log1p(2x + x² + y²)
    let (x, y) = (z.re, z.im);
    let re = 0.5 * (2.0 * x + x * x + y * y).ln_1p();
    let im = y.atan2(1.0 + x);
    C64::new(re, im)
}

/// Relative distance, safe when `b` is zero.
pub fn rel_err(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(1e-300)
}

/// Maps a complex number to `[re, im]`.
pub fn pair(z: C64) -> [f64; 2] {
    [z.re, z.im]
}

const GK15_X: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const GK15_WK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728_0,
];
const GK15_WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

fn gk15<F: FnMut(f64) -> C64>(f: &mut F, a: f64, b: f64) -> (C64, f64, f64) {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(mid);
    let mut kron = fc * GK15_WK[7];
    let mut gauss = fc * GK15_WG[3];
    let mut abs = fc.norm() * GK15_WK[7];
    for j in 0..7 {
        let dx = half * GK15_X[j];
        let f1 = f(mid - dx);
        let f2 = f(mid + dx);
        kron += (f1 + f2) * GK15_WK[j];
        abs += (f1.norm() + f2.norm()) * GK15_WK[j];
        if j % 2 == 1 {
            gauss += (f1 + f2) * GK15_WG[j / 2];
        }
    }
    (kron * half, ((kron - gauss) * half).norm(), abs * half.abs())
}

/// Adaptive Gauss–Kronrod (7/15) quadrature of a complex integrand on a
/// real interval. Stops when the summed error estimate is below
/// `max(abs_tol, rel_tol * ∫|f|)`.
pub fn integrate_adaptive<F: FnMut(f64) -> C64>(mut f: F, a: f64, b: f64, abs_tol: f64, rel_tol: f64) -> Result<C64> {
    let mut intervals: Vec<(f64, f64, C64, f64, f64)> = Vec::new();
    let (v, e, m) = gk15(&mut f, a, b);
    intervals.push((a, b, v, e, m));
    for _ in 0..4000 {
        let total_err: f64 = intervals.iter().map(|t| t.3).sum();
        let total_abs: f64 = intervals.iter().map(|t| t.4).sum();
        if !total_err.is_finite() {
            return Err(Error::InvalidInput("non-finite integrand".into()));
        }
        if total_err <= abs_tol.max(rel_tol * total_abs) {
            return Ok(intervals.iter().map(|t| t.2).sum());
        }
        let (k, _) = intervals.iter().enumerate().max_by(|x, y| x.1 .3.total_cmp(&y.1 .3)).expect("nonempty");
        let (lo, hi, _, _, _) = intervals.swap_remove(k);
        let mid = 0.5 * (lo + hi);
        let (v1, e1, m1) = gk15(&mut f, lo, mid);
        let (v2, e2, m2) = gk15(&mut f, mid, hi);
        intervals.push((lo, mid, v1, e1, m1));
        intervals.push((mid, hi, v2, e2, m2));
    }
    let total_err: f64 = intervals.iter().map(|t| t.3).sum();
    let total_abs: f64 = intervals.iter().map(|t| t.4).sum();
    if total_err <= 1e3 * abs_tol.max(rel_tol * total_abs) {
        Ok(intervals.iter().map(|t| t.2).sum())
    } else {
        Err(Error::IllConditioned(format!("quadrature did not converge (error estimate {total_err:.3e})")))
    }
}

/// Composite Gauss–Legendre rule with `panels` equal panels.
pub fn integrate_composite<F: FnMut(f64) -> C64>(
    mut f: F,
    a: f64,
    b: f64,
    panels: usize,
    rule: &gauss_quad::GaussLegendre,
) -> C64 {
    let h = (b - a) / panels as f64;
    let mut acc = C64::new(0.0, 0.0);
    for k in 0..panels {
        let lo = a + h * k as f64;
        let mid = lo + 0.5 * h;
        for &(x, w) in rule.as_node_weight_pairs() {
            acc += f(mid + 0.5 * h * x) * (w * 0.5 * h);
        }
    }
    acc
}

/// Central difference of `f` at `x` along the complex direction `dir`.
pub fn central_diff<F: FnMut(C64) -> Result<C64>>(mut f: F, x: C64, dir: C64, h: f64) -> Result<C64> {
    let up = f(x + dir * h)?;
    let dn = f(x - dir * h)?;
    Ok((up - dn) / (2.0 * h))
}

/// Solves `A x = b` for complex dense `A`, refusing near-singular systems.
pub fn solve(a: &DMatrix<C64>, b: &[C64]) -> Result<Vec<C64>> {
    let n = a.nrows();
    let lu = a.clone().lu();
    let rhs = nalgebra::DVector::from_column_slice(b);
    let x = lu.solve(&rhs).ok_or_else(|| Error::IllConditioned("singular matrix".into()))?;
    let resid = (a * &x - &rhs).norm();
    let scale = a.norm() * x.norm() + rhs.norm();
    if !(resid <= 1e-8 * scale.max(1e-300)) || x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::IllConditioned(format!("residual {resid:.3e} in {n}x{n} solve")));
    }
    Ok(x.iter().copied().collect())
}

/// Inverse of a complex square matrix.
pub fn inverse(a: &DMatrix<C64>) -> Result<DMatrix<C64>> {
    a.clone().try_inverse().ok_or_else(|| Error::IllConditioned("singular matrix".into()))
}

/// Estimated 1-norm condition number.
pub fn condition(a: &DMatrix<C64>) -> f64 {
    match a.clone().try_inverse() {
        Some(inv) => one_norm(a) * one_norm(&inv),
        None => f64::INFINITY,
    }
}

fn one_norm(a: &DMatrix<C64>) -> f64 {
    (0..a.ncols()).map(|j| a.column(j).iter().map(|v| v.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Taylor coefficients of an analytic function of `n` complex variables
/// from samples on a polydisc torus of radius `rho` with `m` points per
/// variable. `alphas` lists the multi-indices wanted, each entry below `m`;
/// the result is `∂^α f / α!` in the same order.
pub fn polydisc_coefficients<F>(mut f: F, center: &[C64], rho: f64, m: usize, alphas: &[Vec<usize>]) -> Result<Vec<C64>>
where
    F: FnMut(&[C64]) -> Result<C64>,
{
    let n = center.len();
    let total = m.pow(n as u32);
    let roots: Vec<C64> = (0..m).map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / m as f64)).collect();
    let mut samples = vec![C64::new(0.0, 0.0); total];
    let mut point = vec![C64::new(0.0, 0.0); n];
    for (idx, s) in samples.iter_mut().enumerate() {
        let mut r = idx;
        for d in 0..n {
            point[d] = center[d] + roots[r % m] * rho;
            r /= m;
        }
        *s = f(&point)?;
    }
    let mut out = Vec::with_capacity(alphas.len());
    for alpha in alphas {
        if alpha.len() != n || alpha.iter().any(|&a| a >= m) {
            return Err(Error::Dimension("multi-index out of range".into()));
        }
        let mut acc = C64::new(0.0, 0.0);
        for (idx, s) in samples.iter().enumerate() {
            let (mut r, mut phase) = (idx, 0usize);
            for &a in alpha {
                phase += (r % m) * a;
                r /= m;
            }
            acc += s * roots[(m - phase % m) % m];
        }
        let order: usize = alpha.iter().sum();
        out.push(acc / (total as f64) / rho.powi(order as i32));
    }
    Ok(out)
}

/// Newton iteration for a square complex system with a caller-supplied
/// Jacobian. Returns the root once the residual norm is below `tol`.
pub fn newton<F, J>(mut f: F, mut jac: J, x0: &[C64], tol: f64, max_iter: usize) -> Result<Vec<C64>>
where
    F: FnMut(&[C64]) -> Result<Vec<C64>>,
    J: FnMut(&[C64]) -> Result<DMatrix<C64>>,
{
    let mut x = x0.to_vec();
    let mut fx = f(&x)?;
    for _ in 0..max_iter {
        let r: f64 = fx.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if r < tol {
            return Ok(x);
        }
        let jm = jac(&x)?;
        let step = solve(&jm, &fx)?;
        let mut lambda = 1.0;
        loop {
            let trial: Vec<C64> = x.iter().zip(&step).map(|(a, d)| a - d * lambda).collect();
            match f(&trial) {
                Ok(ft) => {
                    let rt: f64 = ft.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
                    if rt < r || lambda < 1e-3 {
                        x = trial;
                        fx = ft;
                        break;
                    }
                }
                Err(e) if lambda < 1e-3 => return Err(e),
                Err(_) => {}
            }
            lambda *= 0.5;
        }
    }
    let r: f64 = fx.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
    if r < tol * 1e3 {
        Ok(x)
    } else {
        Err(Error::NewtonDiverged(format!("residual {r:.3e} after {max_iter} steps")))
    }
}

/// A dense complex 3-tensor of shape `n×n×n`, indexed `(i, j, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor3 {
    n: usize,
    data: Vec<C64>,
}

impl Tensor3 {
    pub fn zeros(n: usize) -> Self {
        Tensor3 { n, data: vec![C64::new(0.0, 0.0); n * n * n] }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize, usize) -> C64) -> Self {
        let mut t = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    t.data[(i * n + j) * n + k] = f(i, j, k);
                }
            }
        }
        t
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> C64 {
        self.data[(i * self.n + j) * self.n + k]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, v: C64) {
        let n = self.n;
        self.data[(i * n + j) * n + k] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn max_diff(&self, other: &Tensor3) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, s: C64) -> Tensor3 {
        Tensor3 { n: self.n, data: self.data.iter().map(|v| v * s).collect() }
    }

    /// Largest deviation from full symmetry over the six index orders.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in 0..self.n {
                for k in 0..self.n {
                    let v = self.get(i, j, k);
                    for w in
                        [self.get(j, i, k), self.get(i, k, j), self.get(k, j, i), self.get(j, k, i), self.get(k, i, j)]
                    {
                        worst = worst.max((v - w).norm());
                    }
                }
            }
        }
        worst
    }

    /// Nested `[re, im]` arrays for JSON output.
    pub fn to_nested(&self) -> Vec<Vec<Vec<[f64; 2]>>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| (0..self.n).map(|k| pair(self.get(i, j, k))).collect()).collect())
            .collect()
    }
}

/// Rows of `[re, im]` pairs for JSON output.
pub fn matrix_to_nested(m: &DMatrix<C64>) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| pair(m[(i, j)])).collect()).collect()
}

/// Largest entry modulus.
pub fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

pub fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn expm1_small_argument() {
        let z = c(1e-12, -2e-12);
        assert!(rel_err(expm1(z), z + z * z / 2.0) < 1e-12);
        let w = c(0.7, 2.1);
        assert!(rel_err(expm1(w), w.exp() - 1.0) < 1e-14);
    }

    #[test]
    fn log1p_small_argument() {
        let z = c(3e-13, 1e-13);
        assert!(rel_err(log1p(z), z) < 1e-12);
        let w = c(-0.1, 0.2);
        assert!(rel_err(log1p(w), (w + 1.0).ln()) < 1e-14);
    }

    #[test]
    fn adaptive_matches_closed_form() {
        let v = integrate_adaptive(|x| c(x, 0.0).exp() * I, 0.0, 1.0, 1e-14, 1e-14).unwrap();
        assert!(rel_err(v, I * (std::f64::consts::E - 1.0)) < 1e-13);
    }

    #[test]
    fn composite_matches_adaptive() {
        let rule = gauss_quad::GaussLegendre::new(20.try_into().unwrap());
        let f = |x: f64| c(x.cos(), x.sin() * x);
        let a = integrate_composite(f, -2.0, 3.0, 8, &rule);
        let b = integrate_adaptive(f, -2.0, 3.0, 1e-14, 1e-14).unwrap();
        assert!(rel_err(a, b) < 1e-13);
    }

    #[test]
    fn polydisc_recovers_mixed_coefficient() {
        let f = |z: &[C64]| Ok(z[0] * z[0] * z[1] * 3.0 + z[1].exp());
        let center = [c(0.2, 0.1), c(-0.3, 0.0)];
        let m = 8;
        let co = polydisc_coefficients(f, &center, 0.1, m, &[vec![2, 1], vec![1, 1]]).unwrap();
        assert!((co[0] - 3.0).norm() < 1e-10);
        assert!((co[1] - center[0] * 6.0).norm() < 1e-10);
    }

    #[test]
    fn newton_finds_square_root() {
        let r = newton(
            |x| Ok(vec![x[0] * x[0] - c(0.0, 2.0)]),
            |x| Ok(DMatrix::from_element(1, 1, x[0] * 2.0)),
            &[c(1.0, 0.5)],
            1e-14,
            50,
        )
        .unwrap();
        assert!((r[0] - c(1.0, 1.0)).norm() < 1e-12);
    }
}
