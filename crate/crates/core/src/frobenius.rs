//! Two concrete Frobenius structures in flat coordinates: the trivial
//! one-dimensional structure and the A2 polynomial structure in `(a, b)`.
//! Both have constant metrics, so the Levi-Civita connection is trivial
//! in these coordinates.

use crate::error::{Error, Result};
use crate::numerics::{c, solve, Tensor3, C64};
use nalgebra::DMatrix;
use serde::Serialize;

/// Relative eigenvalue gap below which a point counts as not tame.
pub const TAME_GAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum FrobeniusKind {
    /// `t`, with `g = 1`, `∂t * ∂t = ∂t`, `E = t ∂t`.
    Trivial,
    /// `(a, b)`, with unit `∂b`, `∂a * ∂a = -(a/3) ∂b` and `E = (2a/3) ∂a + b ∂b`.
    A2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrobeniusStructure {
    kind: FrobeniusKind,
}

/// Eigen-decomposition of `U = E * (-)` at a tame point.
#[derive(Debug, Clone)]
pub struct CanonicalFrame {
    /// Canonical coordinates `u_i`.
    pub eigenvalues: Vec<C64>,
    /// Columns are `∂/∂u_i` in the flat frame, scaled to sum to the unit.
    pub idempotents: DMatrix<C64>,
    /// `max |∂u_i * ∂u_j - δ_ij ∂u_i|`.
    pub idempotency_residual: f64,
    /// `max |Σ u_i ∂u_i - E|`.
    pub euler_residual: f64,
}

impl FrobeniusStructure {
    pub fn trivial() -> Self {
        FrobeniusStructure { kind: FrobeniusKind::Trivial }
    }

    pub fn a2() -> Self {
        FrobeniusStructure { kind: FrobeniusKind::A2 }
    }

    pub fn kind(&self) -> FrobeniusKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match self.kind {
            FrobeniusKind::Trivial => 1,
            FrobeniusKind::A2 => 2,
        }
    }

    pub fn conformal_dimension(&self) -> f64 {
        match self.kind {
            FrobeniusKind::Trivial => 0.0,
            FrobeniusKind::A2 => 1.0 / 3.0,
        }
    }

    fn check(&self, t: &[C64]) -> Result<()> {
        if t.len() != self.dim() {
            return Err(Error::Dimension(format!("expected {} flat coordinates, got {}", self.dim(), t.len())));
        }
        Ok(())
    }

    /// The constant metric in flat coordinates.
    pub fn metric(&self) -> DMatrix<C64> {
        match self.kind {
            FrobeniusKind::Trivial => DMatrix::from_element(1, 1, c(1.0, 0.0)),
            FrobeniusKind::A2 => {
                let h = c(1.0 / 3.0, 0.0);
                DMatrix::from_row_slice(2, 2, &[c(0.0, 0.0), h, h, c(0.0, 0.0)])
            }
        }
    }

    /// Structure constants `∂_i * ∂_j = Σ_k c_{ij}^k ∂_k`.
    pub fn product(&self, t: &[C64]) -> Result<Tensor3> {
        self.check(t)?;
        Ok(match self.kind {
            FrobeniusKind::Trivial => Tensor3::from_fn(1, |_, _, _| c(1.0, 0.0)),
            FrobeniusKind::A2 => {
                let mut p = Tensor3::zeros(2);
                p.set(0, 0, 1, -t[0] / 3.0);
                p.set(0, 1, 0, c(1.0, 0.0));
                p.set(1, 0, 0, c(1.0, 0.0));
                p.set(1, 1, 1, c(1.0, 0.0));
                p
            }
        })
    }

    pub fn unit(&self) -> Vec<C64> {
        match self.kind {
            FrobeniusKind::Trivial => vec![c(1.0, 0.0)],
            FrobeniusKind::A2 => vec![c(0.0, 0.0), c(1.0, 0.0)],
        }
    }

    pub fn euler(&self, t: &[C64]) -> Result<Vec<C64>> {
        self.check(t)?;
        Ok(match self.kind {
            FrobeniusKind::Trivial => vec![t[0]],
            FrobeniusKind::A2 => vec![t[0] * (2.0 / 3.0), t[1]],
        })
    }

    /// `∂_j E^i`, constant because `E` is linear.
    pub fn euler_gradient(&self) -> DMatrix<C64> {
        match self.kind {
            FrobeniusKind::Trivial => DMatrix::from_element(1, 1, c(1.0, 0.0)),
            FrobeniusKind::A2 => DMatrix::from_diagonal(&nalgebra::dvector![c(2.0 / 3.0, 0.0), c(1.0, 0.0)]),
        }
    }

    /// Product of two tangent vectors.
    pub fn multiply(&self, t: &[C64], x: &[C64], y: &[C64]) -> Result<Vec<C64>> {
        let p = self.product(t)?;
        Ok(contract(&p, x, y))
    }

    /// The matrix of `U(X) = E * X`; column `j` is `U(∂_j)`.
    pub fn multiplication_operator_u(&self, t: &[C64]) -> Result<DMatrix<C64>> {
        let e = self.euler(t)?;
        let n = self.dim();
        let mut u = DMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.multiply(t, &e, &basis(n, j))?;
            for i in 0..n {
                u[(i, j)] = col[i];
            }
        }
        Ok(u)
    }

    /// `V = ∇E + ((d - 2)/2) id` in flat coordinates.
    pub fn frobenius_v(&self) -> DMatrix<C64> {
        let n = self.dim();
        let shift = (self.conformal_dimension() - 2.0) / 2.0;
        self.euler_gradient() + DMatrix::from_diagonal_element(n, n, c(shift, 0.0))
    }

    /// Structure constants of the twisted product `E * (X ⋄ Y) = X * Y`.
    pub fn twisted_product(&self, t: &[C64]) -> Result<Tensor3> {
        let u = self.multiplication_operator_u(t)?;
        let scale = u.iter().map(|v| v.norm()).fold(1.0, f64::max);
        if u.determinant().norm() < 1e-12 * scale.powi(self.dim() as i32) {
            return Err(Error::OnDiscriminant);
        }
        let p = self.product(t)?;
        let n = self.dim();
        let mut out = Tensor3::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let rhs: Vec<C64> = (0..n).map(|k| p.get(i, j, k)).collect();
                let x = solve(&u, &rhs).map_err(|_| Error::OnDiscriminant)?;
                for k in 0..n {
                    out.set(i, j, k, x[k]);
                }
            }
        }
        Ok(out)
    }

    pub fn twisted_multiply(&self, t: &[C64], x: &[C64], y: &[C64]) -> Result<Vec<C64>> {
        Ok(contract(&self.twisted_product(t)?, x, y))
    }

    /// Canonical coordinates from the eigenvectors of `U`, scaled so that
    /// the idempotents sum to the unit.
    pub fn canonical_coordinates(&self, t: &[C64]) -> Result<CanonicalFrame> {
        let u = self.multiplication_operator_u(t)?;
        let n = self.dim();
        let eig = eigenvalues(&u)?;
        let size = eig.iter().map(|v| v.norm()).fold(0.0, f64::max).max(1e-300);
        for i in 0..n {
            for j in 0..i {
                if (eig[i] - eig[j]).norm() < TAME_GAP * size {
                    return Err(Error::NotTame(format!("repeated eigenvalue {}", eig[i])));
                }
            }
        }
        let mut vecs = DMatrix::zeros(n, n);
        for (k, &lam) in eig.iter().enumerate() {
            let v = null_vector(&(&u - DMatrix::from_diagonal_element(n, n, lam)))?;
            vecs.set_column(k, &v);
        }
        let coeffs = solve(&vecs, &self.unit())?;
        let mut idem = vecs.clone();
        for k in 0..n {
            let col = idem.column(k) * coeffs[k];
            idem.set_column(k, &col);
        }
        let cols: Vec<Vec<C64>> = (0..n).map(|k| idem.column(k).iter().copied().collect()).collect();
        let mut idem_res = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                let prod = self.multiply(t, &cols[i], &cols[j])?;
                for k in 0..n {
                    let want = if i == j { cols[i][k] } else { c(0.0, 0.0) };
                    idem_res = idem_res.max((prod[k] - want).norm());
                }
            }
        }
        let e = self.euler(t)?;
        let euler_res =
            (0..n).map(|k| ((0..n).map(|i| cols[i][k] * eig[i]).sum::<C64>() - e[k]).norm()).fold(0.0, f64::max);
        Ok(CanonicalFrame {
            eigenvalues: eig,
            idempotents: idem,
            idempotency_residual: idem_res,
            euler_residual: euler_res,
        })
    }

    /// `max |Lie_E g - (2 - d) g|`, with `∂E` from central differences.
    pub fn lie_euler_residual(&self, t: &[C64], h: f64) -> Result<f64> {
        let n = self.dim();
        let mut grad = DMatrix::zeros(n, n);
        for j in 0..n {
            let mut up = t.to_vec();
            let mut dn = t.to_vec();
            up[j] += h;
            dn[j] -= h;
            let (eu, ed) = (self.euler(&up)?, self.euler(&dn)?);
            for i in 0..n {
                grad[(i, j)] = (eu[i] - ed[i]) / (2.0 * h);
            }
        }
        let g = self.metric();
        let lie = grad.transpose() * &g + &g * &grad;
        let want = g * c(2.0 - self.conformal_dimension(), 0.0);
        Ok((lie - want).iter().map(|v| v.norm()).fold(0.0, f64::max))
    }

    /// `max |g(X*Y, Z) - g(X, Y*Z)|` over coordinate vectors.
    pub fn frobenius_symmetry_residual(&self, t: &[C64]) -> Result<f64> {
        let n = self.dim();
        let g = self.metric();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let xy = self.multiply(t, &basis(n, i), &basis(n, j))?;
                    let yz = self.multiply(t, &basis(n, j), &basis(n, k))?;
                    let lhs: C64 = (0..n).map(|l| xy[l] * g[(l, k)]).sum();
                    let rhs: C64 = (0..n).map(|l| g[(i, l)] * yz[l]).sum();
                    worst = worst.max((lhs - rhs).norm());
                }
            }
        }
        Ok(worst)
    }
}

/// The A2 discriminant `4a³ + 27b²`.
pub fn a2_discriminant(a: C64, b: C64) -> C64 {
    a * a * a * 4.0 + b * b * 27.0
}

pub(crate) fn basis(n: usize, i: usize) -> Vec<C64> {
    (0..n).map(|k| if k == i { c(1.0, 0.0) } else { c(0.0, 0.0) }).collect()
}

/// `Σ_{ij} x_i y_j p_{ij}^k`.
pub fn contract(p: &Tensor3, x: &[C64], y: &[C64]) -> Vec<C64> {
    let n = p.dim();
    (0..n)
        .map(|k| {
            let mut acc = c(0.0, 0.0);
            for i in 0..n {
                for j in 0..n {
                    acc += x[i] * y[j] * p.get(i, j, k);
                }
            }
            acc
        })
        .collect()
}

fn eigenvalues(m: &DMatrix<C64>) -> Result<Vec<C64>> {
    if m.nrows() == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    if m.nrows() == 2 {
        let tr = m[(0, 0)] + m[(1, 1)];
        let det = m.determinant();
        let disc = (tr * tr - det * 4.0).sqrt();
        return Ok(vec![(tr + disc) / 2.0, (tr - disc) / 2.0]);
    }
    let schur = m.clone().schur();
    Ok(schur.unpack().1.diagonal().iter().copied().collect())
}

/// A unit vector spanning the numerical kernel.
fn null_vector(m: &DMatrix<C64>) -> Result<nalgebra::DVector<C64>> {
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::IllConditioned("SVD failed".into()))?;
    let (k, _) = svd.singular_values.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).expect("nonempty");
    Ok(vt.row(k).transpose().map(|v| v.conj()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cpt() -> impl Strategy<Value = C64> {
        (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(x, y)| c(x, y))
    }

    #[test]
    fn a2_metric_and_dimension() {
        let f = FrobeniusStructure::a2();
        let g = f.metric();
        assert_eq!(g[(0, 0)], c(0.0, 0.0));
        assert_eq!(g[(0, 1)], c(1.0 / 3.0, 0.0));
        assert_eq!(f.conformal_dimension(), 1.0 / 3.0);
    }

    #[test]
    fn u_at_origin_is_identity() {
        let f = FrobeniusStructure::a2();
        let u = f.multiplication_operator_u(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!((u - DMatrix::identity(2, 2)).iter().all(|v| v.norm() < 1e-15));
        let err = f.canonical_coordinates(&[c(0.0, 0.0), c(1.0, 0.0)]).unwrap_err();
        assert_eq!(err.code(), "NOT_TAME");
    }

    #[test]
    fn canonical_frame_is_idempotent() {
        let f = FrobeniusStructure::a2();
        let fr = f.canonical_coordinates(&[c(-3.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(fr.idempotency_residual < 1e-8);
        assert!(fr.euler_residual < 1e-7);
        let t = FrobeniusStructure::trivial().canonical_coordinates(&[c(0.7, 0.2)]).unwrap();
        assert!((t.eigenvalues[0] - c(0.7, 0.2)).norm() < 1e-15);
    }

    #[test]
    fn v_operators() {
        let v = FrobeniusStructure::a2().frobenius_v();
        assert!((v[(0, 0)] + 1.0 / 6.0).norm() < 1e-15 && (v[(1, 1)] - 1.0 / 6.0).norm() < 1e-15);
        let g = FrobeniusStructure::a2().metric();
        // g(V∂a, ∂b) = -1/18
        assert!(((v.transpose() * &g)[(0, 1)] + 1.0 / 18.0).norm() < 1e-15);
        assert!((v.transpose() * &g + &g * &v).iter().all(|x| x.norm() < 1e-15));
        assert!(FrobeniusStructure::trivial().frobenius_v()[(0, 0)].norm() == 0.0);
    }

    #[test]
    fn twisted_products_at_unit_point() {
        let f = FrobeniusStructure::a2();
        let (a, b) = (c(1.0, 0.0), c(1.0, 0.0));
        let d = a2_discriminant(a, b);
        assert_eq!(d, c(31.0, 0.0));
        let t = [a, b];
        let ea = basis(2, 0);
        let aa = f.twisted_multiply(&t, &ea, &ea).unwrap();
        assert!((aa[0] * d - a * a * 6.0).norm() < 1e-12 && (aa[1] * d + a * b * 9.0).norm() < 1e-12);
        let on = f.twisted_product(&[c(-3.0, 0.0), c(2.0, 0.0)]).unwrap_err();
        assert_eq!(on.code(), "ON_DISCRIMINANT");
    }

    #[test]
    fn trivial_structure() {
        let f = FrobeniusStructure::trivial();
        let t = [c(2.0, 1.0)];
        assert!(f.lie_euler_residual(&t, 1e-4).unwrap() < 1e-10);
        let p = f.twisted_product(&t).unwrap();
        assert!((p.get(0, 0, 0) - t[0].inv()).norm() < 1e-15);
    }

    proptest! {
        #[test]
        fn a2_identities(a in cpt(), b in cpt()) {
            let f = FrobeniusStructure::a2();
            let t = [a, b];
            let d = a2_discriminant(a, b);
            let u = f.multiplication_operator_u(&t).unwrap();
            prop_assert!((u.determinant() * 27.0 - d).norm() < 1e-10 * (1.0 + d.norm()));
            prop_assert!(f.frobenius_symmetry_residual(&t).unwrap() < 1e-12);
            prop_assert!(f.lie_euler_residual(&t, 1e-4).unwrap() < 1e-10);
            // U is self-adjoint for g.
            let g = f.metric();
            prop_assert!((u.transpose() * &g - &g * &u).iter().all(|x| x.norm() < 1e-12));
            prop_assume!(d.norm() > 1e-2);
            let p = f.twisted_product(&t).unwrap();
            let (ea, eb) = (basis(2, 0), basis(2, 1));
            let check = |x: &[C64], y: &[C64], want: [C64; 2]| {
                let v = contract(&p, x, y);
                (v[0] * d - want[0]).norm().max((v[1] * d - want[1]).norm())
            };
            prop_assert!(check(&ea, &ea, [a * a * 6.0, -a * b * 9.0]) < 1e-9);
            prop_assert!(check(&eb, &eb, [-a * 18.0, b * 27.0]) < 1e-9);
            prop_assert!(check(&ea, &eb, [b * 27.0, a * a * 6.0]) < 1e-9);
            // The Euler field is the unit of ⋄, and ⋄ is associative.
            let e = f.euler(&t).unwrap();
            for x in [&ea, &eb] {
                let ex = contract(&p, &e, x);
                prop_assert!((ex[0] - x[0]).norm() < 1e-9 && (ex[1] - x[1]).norm() < 1e-9);
            }
            for (x, y, z) in [(&ea, &ea, &eb), (&ea, &eb, &eb), (&ea, &ea, &ea)] {
                let l = contract(&p, &contract(&p, x, y), z);
                let r = contract(&p, x, &contract(&p, y, z));
                let s = 1.0 + l[0].norm() + l[1].norm();
                prop_assert!((l[0] - r[0]).norm() < 1e-10 * s && (l[1] - r[1]).norm() < 1e-10 * s);
            }
        }
    }
}
