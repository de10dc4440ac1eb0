//! Finite-dimensional Hilbert spaces given by a Gram matrix, and the
//! metric-aware linear algebra the rest of the crate is built on.
//!
//! The inner product of a space with Gram matrix `G` is
//! `inner(xi, eta) = eta^H G xi`: linear in the first slot, conjugate-linear
//! in the second. Whitening with `G^{1/2}` turns every metric question into
//! a plain Euclidean one, so norms, adjoints and singular values of a map
//! `M: H_src -> H_dst` are read off from `G_dst^{1/2} M G_src^{-1/2}`.

use std::sync::Arc;

use nalgebra::{Complex, DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

pub type C64 = Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = Complex { re: 0.0, im: 0.0 };
pub const ONE: C64 = Complex { re: 1.0, im: 0.0 };
pub const I: C64 = Complex { re: 0.0, im: 1.0 };

pub fn c(re: f64, im: f64) -> C64 {
    Complex::new(re, im)
}

pub fn real_vector(xs: &[f64]) -> CVec {
    CVec::from_iterator(xs.len(), xs.iter().map(|&x| c(x, 0.0)))
}

pub fn real_diag(xs: &[f64]) -> CMat {
    CMat::from_diagonal(&real_vector(xs))
}

/// Real matrix from rows; panics on ragged input.
pub fn real_matrix(rows: &[&[f64]]) -> CMat {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, |r| r.len());
    assert!(rows.iter().all(|r| r.len() == ncols), "ragged matrix rows");
    CMat::from_fn(nrows, ncols, |i, j| c(rows[i][j], 0.0))
}

pub fn basis_vector(dim: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(dim);
    v[k] = ONE;
    v
}

pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Largest singular value in the Euclidean sense.
pub fn spectral_norm(m: &CMat) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of the Hermitian part of `h`, eigenvalues ascending.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(hermitian_part(h));
    let n = eig.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn min_eigenvalue(h: &CMat) -> f64 {
    hermitian_eigen(h).0.first().copied().unwrap_or(0.0)
}

fn check_hermitian(h: &CMat, tol: &Tolerances) -> Result<f64> {
    if !h.is_square() {
        return Err(Error::DimMismatch {
            expected: h.nrows(),
            found: h.ncols(),
        });
    }
    let scale = h.norm();
    let defect = (h - h.adjoint()).norm();
    if defect > tol.herm * scale.max(f64::MIN_POSITIVE) && defect > 0.0 {
        return Err(Error::NotHermitian { defect });
    }
    Ok(scale)
}

/// Hermitian positive semidefinite square root.
///
/// Eigenvalues in `[-tol_pd * |H|, 0)` are clamped to zero; anything more
/// negative is rejected.
pub fn psd_sqrt(h: &CMat, tol: &Tolerances) -> Result<CMat> {
    let scale = check_hermitian(h, tol)?;
    psd_sqrt_at_scale(h, tol, scale)
}

/// [`psd_sqrt`] with the clamping window `tol_pd * scale` given explicitly,
/// for differences like `B^2 - I` whose own norm may be tiny.
pub fn psd_sqrt_at_scale(h: &CMat, tol: &Tolerances, scale: f64) -> Result<CMat> {
    check_hermitian(h, tol)?;
    let (values, vectors) = hermitian_eigen(h);
    if let Some(&lowest) = values.first() {
        if lowest < -tol.pd * scale {
            return Err(Error::NotPsd {
                min_eigenvalue: lowest,
            });
        }
    }
    let roots = real_vector(&values.iter().map(|v| v.max(0.0).sqrt()).collect::<Vec<_>>());
    Ok(hermitian_part(
        &(&vectors * CMat::from_diagonal(&roots) * vectors.adjoint()),
    ))
}

/// A Hilbert space `C^dim` carrying the inner product of a Hermitian
/// positive-definite Gram matrix. Square roots and inverses are computed
/// once at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpace {
    gram: CMat,
    sqrt: CMat,
    inv_sqrt: CMat,
    inv: CMat,
}

impl MetricSpace {
    pub fn new(gram: CMat, tol: &Tolerances) -> Result<Self> {
        let scale = check_hermitian(&gram, tol)?;
        if gram.nrows() == 0 {
            return Err(Error::InvalidParameter("space of dimension 0".into()));
        }
        let gram = hermitian_part(&gram);
        let (values, vectors) = hermitian_eigen(&gram);
        let lowest = values[0];
        if lowest.is_nan() || lowest <= tol.pd * scale {
            return Err(Error::NotPositiveDefinite {
                min_eigenvalue: lowest,
            });
        }
        let spectral = |f: fn(f64) -> f64| {
            let d = real_vector(&values.iter().map(|&v| f(v)).collect::<Vec<_>>());
            hermitian_part(&(&vectors * CMat::from_diagonal(&d) * vectors.adjoint()))
        };
        Ok(Self {
            sqrt: spectral(f64::sqrt),
            inv_sqrt: spectral(|v| 1.0 / v.sqrt()),
            inv: spectral(|v| 1.0 / v),
            gram,
        })
    }

    pub fn identity(dim: usize) -> Self {
        let id = CMat::identity(dim, dim);
        Self {
            gram: id.clone(),
            sqrt: id.clone(),
            inv_sqrt: id.clone(),
            inv: id,
        }
    }

    pub fn diagonal(weights: &[f64], tol: &Tolerances) -> Result<Self> {
        Self::new(real_diag(weights), tol)
    }

    pub fn dim(&self) -> usize {
        self.gram.nrows()
    }

    pub fn gram(&self) -> &CMat {
        &self.gram
    }

    pub fn gram_sqrt(&self) -> &CMat {
        &self.sqrt
    }

    pub fn gram_inv_sqrt(&self) -> &CMat {
        &self.inv_sqrt
    }

    pub fn gram_inv(&self) -> &CMat {
        &self.inv
    }

    pub fn check_vector(&self, v: &CVec) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::DimMismatch {
                expected: self.dim(),
                found: v.len(),
            });
        }
        Ok(())
    }

    pub fn inner(&self, xi: &CVec, eta: &CVec) -> Result<C64> {
        self.check_vector(xi)?;
        self.check_vector(eta)?;
        Ok(self.inner_unchecked(xi, eta))
    }

    pub(crate) fn inner_unchecked(&self, xi: &CVec, eta: &CVec) -> C64 {
        eta.dotc(&(&self.gram * xi))
    }

    pub fn norm(&self, xi: &CVec) -> Result<f64> {
        self.check_vector(xi)?;
        Ok(self.norm_unchecked(xi))
    }

    pub(crate) fn norm_unchecked(&self, xi: &CVec) -> f64 {
        self.inner_unchecked(xi, xi).re.max(0.0).sqrt()
    }
}

/// `inner(sp, xi, eta) = eta^H G xi`.
pub fn inner(sp: &MetricSpace, xi: &CVec, eta: &CVec) -> Result<C64> {
    sp.inner(xi, eta)
}

/// A linear map between two metrized spaces.
#[derive(Debug, Clone, PartialEq)]
pub struct LinMap {
    src: Arc<MetricSpace>,
    dst: Arc<MetricSpace>,
    matrix: CMat,
}

impl LinMap {
    pub fn new(src: Arc<MetricSpace>, dst: Arc<MetricSpace>, matrix: CMat) -> Result<Self> {
        if matrix.nrows() != dst.dim() {
            return Err(Error::DimMismatch {
                expected: dst.dim(),
                found: matrix.nrows(),
            });
        }
        if matrix.ncols() != src.dim() {
            return Err(Error::DimMismatch {
                expected: src.dim(),
                found: matrix.ncols(),
            });
        }
        Ok(Self { src, dst, matrix })
    }

    pub fn identity(space: Arc<MetricSpace>) -> Self {
        let n = space.dim();
        Self {
            src: space.clone(),
            dst: space,
            matrix: CMat::identity(n, n),
        }
    }

    pub fn src(&self) -> &Arc<MetricSpace> {
        &self.src
    }

    pub fn dst(&self) -> &Arc<MetricSpace> {
        &self.dst
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    pub fn apply(&self, v: &CVec) -> Result<CVec> {
        self.src.check_vector(v)?;
        Ok(&self.matrix * v)
    }

    /// `M* = G_src^{-1} M^H G_dst`.
    pub fn adjoint(&self) -> LinMap {
        LinMap {
            matrix: metric_adjoint(&self.matrix, &self.src, &self.dst),
            src: self.dst.clone(),
            dst: self.src.clone(),
        }
    }

    /// `G_dst^{1/2} M G_src^{-1/2}`.
    pub fn whitened(&self) -> CMat {
        whiten(&self.matrix, &self.src, &self.dst)
    }

    pub fn singular_values(&self) -> Vec<f64> {
        let mut sv: Vec<f64> = self.whitened().singular_values().iter().copied().collect();
        sv.sort_by(|a, b| b.total_cmp(a));
        sv
    }

    pub fn op_norm(&self) -> f64 {
        self.singular_values().first().copied().unwrap_or(0.0)
    }

    /// Smallest singular value on the source space: zero whenever the
    /// source is larger than the destination.
    pub fn lower_bound(&self) -> f64 {
        if self.src.dim() > self.dst.dim() {
            return 0.0;
        }
        self.singular_values().last().copied().unwrap_or(0.0)
    }

    pub fn compose(&self, inner: &LinMap) -> Result<LinMap> {
        if !Arc::ptr_eq(&inner.dst, &self.src) && inner.dst.as_ref() != self.src.as_ref() {
            return Err(Error::DimMismatch {
                expected: self.src.dim(),
                found: inner.dst.dim(),
            });
        }
        Ok(LinMap {
            src: inner.src.clone(),
            dst: self.dst.clone(),
            matrix: &self.matrix * &inner.matrix,
        })
    }
}

pub fn metric_adjoint(m: &CMat, src: &MetricSpace, dst: &MetricSpace) -> CMat {
    src.gram_inv() * m.adjoint() * dst.gram()
}

pub fn whiten(m: &CMat, src: &MetricSpace, dst: &MetricSpace) -> CMat {
    dst.gram_sqrt() * m * src.gram_inv_sqrt()
}

pub fn adjoint(m: &LinMap) -> LinMap {
    m.adjoint()
}

pub fn op_norm(m: &LinMap) -> f64 {
    m.op_norm()
}

/// Operator norm of `m: H_src -> H_dst` without building a [`LinMap`].
pub fn metric_op_norm(m: &CMat, src: &MetricSpace, dst: &MetricSpace) -> f64 {
    spectral_norm(&whiten(m, src, dst))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> Tolerances {
        Tolerances::default()
    }

    fn space(w: &[f64]) -> Arc<MetricSpace> {
        Arc::new(MetricSpace::diagonal(w, &tol()).unwrap())
    }

    #[test]
    fn inner_examples() {
        let id = MetricSpace::identity(2);
        let z = inner(&id, &real_vector(&[1.0, 0.0]), &real_vector(&[0.0, 1.0])).unwrap();
        assert_eq!(z, ZERO);

        let g = space(&[2.0, 5.0]);
        let ones = real_vector(&[1.0, 1.0]);
        assert!((g.inner(&ones, &ones).unwrap() - c(7.0, 0.0)).norm() < 1e-15);

        // eta = (i, 0): conjugation lands on the second slot.
        let eta = CVec::from_vec(vec![I, ZERO]);
        let z = g.inner(&real_vector(&[1.0, 0.0]), &eta).unwrap();
        assert!((z - c(0.0, -2.0)).norm() < 1e-15);
    }

    #[test]
    fn inner_rejects_wrong_length() {
        let g = MetricSpace::identity(2);
        let err = g.inner(&real_vector(&[1.0]), &real_vector(&[1.0, 0.0]));
        assert_eq!(err, Err(Error::DimMismatch { expected: 2, found: 1 }));
    }

    #[test]
    fn adjoint_examples() {
        let src = space(&[2.0, 5.0]);
        let dst = space(&[5.0, 10.0]);
        let m = LinMap::new(src, dst, real_diag(&[0.4, 0.5])).unwrap();
        let a = m.adjoint();
        assert!(max_abs_diff(a.matrix(), &CMat::identity(2, 2)) < 1e-14);
        assert!(max_abs_diff(a.adjoint().matrix(), m.matrix()) < 1e-14);

        let id = Arc::new(MetricSpace::identity(2));
        let raw = CMat::from_fn(2, 2, |i, j| c(i as f64 + 1.0, j as f64 - 0.5));
        let plain = LinMap::new(id.clone(), id, raw.clone()).unwrap();
        assert!(max_abs_diff(plain.adjoint().matrix(), &raw.adjoint()) < 1e-15);
    }

    #[test]
    fn op_norm_examples() {
        let s = space(&[2.0, 3.0]);
        assert!((LinMap::identity(s.clone()).op_norm() - 1.0).abs() < 1e-14);

        let m = LinMap::new(space(&[2.0, 5.0]), space(&[5.0, 10.0]), real_diag(&[0.4, 0.5])).unwrap();
        // singular values 0.4*sqrt(5/2) and 0.5*sqrt(2)
        let expected = (0.4 * (2.5f64).sqrt()).max(0.5 * 2f64.sqrt());
        assert!((m.op_norm() - expected).abs() < 1e-14);
        assert!((m.op_norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);

        let zero = LinMap::new(s.clone(), s, CMat::zeros(2, 2)).unwrap();
        assert_eq!(zero.op_norm(), 0.0);
    }

    #[test]
    fn psd_sqrt_examples() {
        let t = tol();
        let r = psd_sqrt(&real_diag(&[4.0, 9.0]), &t).unwrap();
        assert!(max_abs_diff(&r, &real_diag(&[2.0, 3.0])) < 1e-14);

        let id = CMat::identity(3, 3);
        assert!(max_abs_diff(&psd_sqrt(&id, &t).unwrap(), &id) < 1e-14);

        let h = real_matrix(&[&[2.0, 1.0], &[1.0, 2.0]]);
        let r = psd_sqrt(&h, &t).unwrap();
        assert!(max_abs_diff(&(&r * &r), &h) <= 1e-12);
    }

    #[test]
    fn psd_sqrt_rejects_negative_spectrum() {
        let err = psd_sqrt(&real_diag(&[1.0, -0.5]), &tol()).unwrap_err();
        assert!(matches!(err, Error::NotPsd { min_eigenvalue } if (min_eigenvalue + 0.5).abs() < 1e-12));
        // tiny negative eigenvalues are clamped
        let r = psd_sqrt(&real_diag(&[1.0, -1e-14]), &tol()).unwrap();
        assert!(max_abs_diff(&r, &real_diag(&[1.0, 0.0])) < 1e-14);
    }

    #[test]
    fn metric_space_rejects_bad_grams() {
        let t = tol();
        assert!(matches!(
            MetricSpace::new(real_diag(&[1.0, 0.0]), &t),
            Err(Error::NotPositiveDefinite { .. })
        ));
        assert!(matches!(
            MetricSpace::new(real_matrix(&[&[1.0, 2.0], &[0.0, 1.0]]), &t),
            Err(Error::NotHermitian { .. })
        ));
    }

    #[test]
    fn lower_bound_of_wide_map_is_zero() {
        let m = LinMap::new(space(&[1.0, 1.0]), space(&[1.0]), real_matrix(&[&[1.0, 0.0]])).unwrap();
        assert_eq!(m.lower_bound(), 0.0);
    }
}
