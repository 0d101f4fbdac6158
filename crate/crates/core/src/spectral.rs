//! Hermitian and positive semidefinite matrices with a cached spectral
//! decomposition. Every matrix function in the crate goes through
//! [`Spectral::apply`].

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const MAX_DIM: usize = 16;
/// Relative eigenvalue cut defining the support.
pub const REL_CUT: f64 = 1e-12;
/// Negative eigenvalues down to `-PSD_TOL * lambda_max` are clamped to zero.
pub const PSD_TOL: f64 = 1e-10;
pub const HERMITICITY_TOL: f64 = 1e-10;
const PRODUCT_PSD_TOL: f64 = 1e-7;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Largest absolute entry.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// Kronecker product of two complex matrices.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

fn check_square(m: &CMat) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

/// A dense complex matrix that is exactly Hermitian.
#[derive(Clone, Debug, PartialEq)]
pub struct Hermitian(CMat);

impl Hermitian {
    /// Certifies Hermiticity up to [`HERMITICITY_TOL`] and stores the
    /// symmetrized matrix.
    pub fn new(m: CMat) -> Result<Self> {
        let n = check_square(&m)?;
        if n == 0 {
            return Err(Error::Parameter("empty matrix".into()));
        }
        if n > MAX_DIM {
            return Err(Error::DimensionTooLarge(n));
        }
        let dev = max_abs(&(&m - m.adjoint()));
        if dev > HERMITICITY_TOL * (1.0 + max_abs(&m)) {
            return Err(Error::NotHermitian(dev));
        }
        Ok(Self::symmetrized(m))
    }

    /// Symmetrizes without checking; for results of exact-arithmetic Hermitian
    /// expressions that carry only rounding asymmetry.
    pub(crate) fn symmetrized(m: CMat) -> Self {
        let h = (&m + m.adjoint()) * c(0.5);
        Hermitian(h)
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        let m = CMat::from_fn(n, n, |i, j| c(rows[i][j]));
        Self::new(m)
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        Hermitian(CMat::from_fn(n, n, |i, j| if i == j { c(d[i]) } else { C64::ZERO }))
    }

    pub fn zeros(n: usize) -> Self {
        Hermitian(CMat::zeros(n, n))
    }

    pub fn identity(n: usize) -> Self {
        Hermitian(CMat::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn trace(&self) -> f64 {
        trace(&self.0).re
    }

    pub fn scale(&self, s: f64) -> Self {
        Hermitian(&self.0 * c(s))
    }

    pub fn add(&self, other: &Hermitian) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Hermitian(&self.0 + &other.0))
    }

    pub fn sub(&self, other: &Hermitian) -> Result<Self> {
        same_dim(self.dim(), other.dim())?;
        Ok(Hermitian(&self.0 - &other.0))
    }

    /// `X A X*` for an arbitrary (possibly rectangular) `X`.
    pub fn congruence(&self, x: &CMat) -> Self {
        Self::symmetrized(x * &self.0 * x.adjoint())
    }

    pub fn eig(&self) -> Result<Spectral> {
        eig_hermitian(self)
    }

    /// Spectral norm.
    pub fn op_norm(&self) -> Result<f64> {
        let s = self.eig()?;
        Ok(s.values.iter().fold(0.0f64, |a, v| a.max(v.abs())))
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.0)
    }

    /// Spectral calculus `f(A)` for real `f`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> Result<Hermitian> {
        Ok(self.eig()?.apply(f))
    }

    pub fn exp(&self) -> Result<Psd> {
        mat_exp(self)
    }
}

pub(crate) fn same_dim(a: usize, b: usize) -> Result<()> {
    if a != b {
        Err(Error::DimensionMismatch(a, b))
    } else {
        Ok(())
    }
}

/// Eigen-decomposition with eigenvalues in decreasing order.
#[derive(Clone, Debug)]
pub struct Spectral {
    pub values: Vec<f64>,
    pub vectors: CMat,
}

impl Spectral {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    /// `U f(Λ) U*`.
    pub fn apply<F: Fn(f64) -> f64>(&self, f: F) -> Hermitian {
        let n = self.dim();
        let mut scaled = self.vectors.clone();
        for j in 0..n {
            let fj = c(f(self.values[j]));
            for i in 0..n {
                scaled[(i, j)] *= fj;
            }
        }
        Hermitian::symmetrized(scaled * self.vectors.adjoint())
    }

    pub fn reconstruct(&self) -> Hermitian {
        self.apply(|x| x)
    }
}

pub fn eig_hermitian(a: &Hermitian) -> Result<Spectral> {
    let n = a.dim();
    let max_iter = 200 * n.max(4);
    let eig = a
        .0
        .clone()
        .try_symmetric_eigen(f64::EPSILON, max_iter)
        .ok_or(Error::NoConvergence(max_iter))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(n, n, |r, k| eig.eigenvectors[(r, order[k])]);
    Ok(Spectral { values, vectors })
}

/// Orthogonal projection onto the eigenvectors whose eigenvalue exceeds the cut.
#[derive(Clone, Debug)]
pub struct SupportInfo {
    pub rank: usize,
    pub projection: Hermitian,
    pub threshold_used: f64,
}

/// A positive semidefinite matrix together with its spectral decomposition.
#[derive(Clone, Debug)]
pub struct Psd {
    herm: Hermitian,
    spec: Spectral,
}

impl Psd {
    /// Certifies positivity: eigenvalues below `-PSD_TOL * lambda_max` are
    /// rejected, smaller negatives are clamped to zero.
    pub fn new(h: Hermitian) -> Result<Self> {
        Self::with_tolerance(h, PSD_TOL)
    }

    fn with_tolerance(h: Hermitian, tol: f64) -> Result<Self> {
        let mut spec = h.eig()?;
        let lmax = spec.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let lmin = *spec.values.last().unwrap();
        if lmin < -tol * lmax {
            return Err(Error::NotPsd(lmin));
        }
        let mut clamped = false;
        for v in spec.values.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
                clamped = true;
            }
        }
        let herm = if clamped { spec.reconstruct() } else { h };
        Ok(Psd { herm, spec })
    }

    pub fn from_matrix(m: CMat) -> Result<Self> {
        Self::new(Hermitian::new(m)?)
    }

    /// For results of expressions that are PSD in exact arithmetic; rounding
    /// in ill-conditioned products is allowed a looser negative band.
    pub(crate) fn from_product(m: CMat) -> Result<Self> {
        Self::with_tolerance(Hermitian::symmetrized(m), PRODUCT_PSD_TOL)
    }

    /// Trusted constructor from an eigen-decomposition with nonnegative values.
    pub(crate) fn from_spectral(values: Vec<f64>, vectors: CMat) -> Self {
        let spec = Spectral { values, vectors };
        let herm = spec.reconstruct();
        Psd { herm, spec }
    }

    pub fn diag(d: &[f64]) -> Result<Self> {
        Self::new(Hermitian::diag(d))
    }

    pub fn identity(n: usize) -> Self {
        Self::from_spectral(vec![1.0; n], CMat::identity(n, n))
    }

    pub fn from_real(rows: &[&[f64]]) -> Result<Self> {
        Self::new(Hermitian::from_real(rows)?)
    }

    pub fn dim(&self) -> usize {
        self.herm.dim()
    }

    pub fn hermitian(&self) -> &Hermitian {
        &self.herm
    }

    pub fn matrix(&self) -> &CMat {
        self.herm.matrix()
    }

    pub fn spectral(&self) -> &Spectral {
        &self.spec
    }

    /// Eigenvalues in decreasing order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.spec.values
    }

    pub fn lambda_max(&self) -> f64 {
        self.spec.values[0]
    }

    pub fn trace(&self) -> f64 {
        self.spec.values.iter().sum()
    }

    fn cut(&self, rel_cut: f64) -> f64 {
        rel_cut * self.lambda_max()
    }

    pub fn rank(&self) -> usize {
        let t = self.cut(REL_CUT);
        self.spec.values.iter().filter(|&&v| v > t).count()
    }

    pub fn is_full_rank(&self) -> bool {
        self.rank() == self.dim()
    }

    pub fn support(&self) -> SupportInfo {
        self.support_with(REL_CUT)
    }

    pub fn support_with(&self, rel_cut: f64) -> SupportInfo {
        let t = self.cut(rel_cut);
        let rank = self.spec.values.iter().filter(|&&v| v > t && v > 0.0).count();
        let projection = self.spec.apply(|v| if v > t && v > 0.0 { 1.0 } else { 0.0 });
        SupportInfo { rank, projection, threshold_used: t }
    }

    /// Applies `f` on the support and zero on the kernel.
    pub fn apply_on_support<F: Fn(f64) -> f64>(&self, f: F) -> Psd {
        self.apply_above(REL_CUT, f)
    }

    /// Like [`Psd::apply_on_support`] with an explicit relative cut; `0.0`
    /// keeps every positive eigenvalue.
    pub fn apply_above<F: Fn(f64) -> f64>(&self, rel_cut: f64, f: F) -> Psd {
        let t = self.cut(rel_cut);
        let values = self
            .spec
            .values
            .iter()
            .map(|&v| if v > t && v > 0.0 { f(v).max(0.0) } else { 0.0 })
            .collect::<Vec<_>>();
        reorder(values, self.spec.vectors.clone())
    }

    /// `A^r` with the generalized-inverse convention for `r < 0` and
    /// `A^0 = s(A)`.
    pub fn pow(&self, r: f64) -> Psd {
        if r == 1.0 {
            return self.clone();
        }
        self.apply_on_support(|v| v.powf(r))
    }

    /// `A^r` on every positive eigenvalue. For matrices known to be
    /// invertible whose condition number exceeds `1/REL_CUT`, e.g.
    /// congruences of full-rank factors.
    pub fn pow_invertible(&self, r: f64) -> Psd {
        if r == 1.0 {
            return self.clone();
        }
        self.apply_above(0.0, |v| v.powf(r))
    }

    pub fn inverse(&self) -> Psd {
        self.pow(-1.0)
    }

    pub fn sqrt(&self) -> Psd {
        self.pow(0.5)
    }

    /// Logarithm on the support, zero block on the kernel.
    pub fn log_support(&self) -> Result<Hermitian> {
        if self.lambda_max() <= 0.0 {
            return Err(Error::Domain("logarithm of the zero matrix".into()));
        }
        let t = self.cut(REL_CUT);
        Ok(self.spec.apply(|v| if v > t && v > 0.0 { v.ln() } else { 0.0 }))
    }

    /// Sum of log-eigenvalues; `-inf` when rank deficient.
    pub fn log_det(&self) -> f64 {
        if self.rank() < self.dim() {
            return f64::NEG_INFINITY;
        }
        self.spec.values.iter().map(|v| v.ln()).sum()
    }

    pub fn scale(&self, s: f64) -> Psd {
        assert!(s >= 0.0);
        reorder(self.spec.values.iter().map(|v| v * s).collect(), self.spec.vectors.clone())
    }

    pub fn add(&self, other: &Psd) -> Result<Psd> {
        Psd::new(self.herm.add(&other.herm)?)
    }

    /// `X A X*`.
    pub fn congruence(&self, x: &CMat) -> Result<Psd> {
        Psd::new(self.herm.congruence(x))
    }

    pub fn kron(&self, other: &Psd) -> Result<Psd> {
        Psd::from_product(kron(self.matrix(), other.matrix()))
    }

    /// `A + eps I`.
    pub fn shifted(&self, eps: f64) -> Psd {
        reorder(self.spec.values.iter().map(|v| v + eps).collect(), self.spec.vectors.clone())
    }
}

fn reorder(values: Vec<f64>, vectors: CMat) -> Psd {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    if order.iter().enumerate().all(|(k, &i)| k == i) {
        return Psd::from_spectral(values, vectors);
    }
    let v = order.iter().map(|&i| values[i]).collect();
    let u = CMat::from_fn(n, n, |r, k| vectors[(r, order[k])]);
    Psd::from_spectral(v, u)
}

pub fn mat_pow(a: &Psd, r: f64) -> Psd {
    a.pow(r)
}

pub fn support_projection(a: &Psd, rel_cut: f64) -> SupportInfo {
    a.support_with(rel_cut)
}

pub fn mat_log_support(a: &Psd) -> Result<Hermitian> {
    a.log_support()
}

pub fn mat_exp(h: &Hermitian) -> Result<Psd> {
    let s = h.eig()?;
    let values = s.values.iter().map(|v| v.exp()).collect();
    Ok(Psd::from_spectral(values, s.vectors))
}

/// Loewner order `A <= B`: `lambda_min(B - A) >= -tol (1 + ||B - A||)`.
pub fn loewner_le(a: &Hermitian, b: &Hermitian, tol: f64) -> Result<bool> {
    let d = b.sub(a)?;
    let s = d.eig()?;
    let lmin = *s.values.last().unwrap();
    let norm = s.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
    Ok(lmin >= -tol * (1.0 + norm))
}

/// `s(A) ∧ s(B)`, the projection onto the intersection of the two ranges,
/// taken as the eigenvalue-one eigenspace of `s(A) s(B) s(A)`.
pub fn support_meet(a: &Psd, b: &Psd) -> Result<Hermitian> {
    same_dim(a.dim(), b.dim())?;
    let pa = a.support().projection;
    let pb = b.support().projection;
    let prod = Hermitian::symmetrized(pa.matrix() * pb.matrix() * pa.matrix());
    let s = prod.eig()?;
    Ok(s.apply(|v| if v > 1.0 - 1e-8 { 1.0 } else { 0.0 }))
}

/// Row-major JSON exchange format `{"dim": n, "re": [[..]], "im": [[..]]}`.
#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct MatrixJson {
    pub dim: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_matrix(m: &CMat) -> Self {
        let n = m.nrows();
        let re = (0..n).map(|i| (0..n).map(|j| m[(i, j)].re).collect()).collect();
        let im = (0..n).map(|i| (0..n).map(|j| m[(i, j)].im).collect()).collect();
        MatrixJson { dim: n, re, im }
    }

    pub fn to_hermitian(&self) -> Result<Hermitian> {
        let n = self.dim;
        let rows_ok = |v: &Vec<Vec<f64>>| v.len() == n && v.iter().all(|r| r.len() == n);
        if !rows_ok(&self.re) || !rows_ok(&self.im) {
            return Err(Error::Format(format!("expected {n}x{n} arrays for re and im")));
        }
        Hermitian::new(CMat::from_fn(n, n, |i, j| C64::new(self.re[i][j], self.im[i][j])))
    }

    pub fn to_psd(&self) -> Result<Psd> {
        Psd::new(self.to_hermitian()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn diagonal_eigs_descending() {
        let s = Hermitian::diag(&[1.0, 4.0]).eig().unwrap();
        assert_eq!(s.values, vec![4.0, 1.0]);
        assert_relative_eq!(s.vectors[(1, 0)].norm(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.vectors[(0, 1)].norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn pauli_x() {
        let s = Hermitian::from_real(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap().eig().unwrap();
        assert_relative_eq!(s.values[0], 1.0, epsilon = 1e-15);
        assert_relative_eq!(s.values[1], -1.0, epsilon = 1e-15);
        let v0 = s.vectors.column(0);
        assert_relative_eq!((v0[0] - v0[1]).norm(), 0.0, epsilon = 1e-15);
        let v1 = s.vectors.column(1);
        assert_relative_eq!((v1[0] + v1[1]).norm(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_hermitian_and_large() {
        let m = CMat::from_fn(2, 2, |i, j| c((i + 2 * j) as f64));
        assert!(matches!(Hermitian::new(m), Err(Error::NotHermitian(_))));
        assert!(matches!(Hermitian::new(CMat::identity(17, 17)), Err(Error::DimensionTooLarge(17))));
        assert!(matches!(
            Hermitian::new(CMat::zeros(2, 3)),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn psd_clamps_and_rejects() {
        let a = Psd::diag(&[1.0, -1e-12]).unwrap();
        assert_eq!(a.eigenvalues()[1], 0.0);
        assert!(matches!(Psd::diag(&[1.0, -1e-6]), Err(Error::NotPsd(_))));
    }

    #[test]
    fn support_examples() {
        let a = Psd::diag(&[3.0, 0.0, 1e-18]).unwrap();
        let s = a.support();
        assert_eq!(s.rank, 1);
        assert_relative_eq!(max_abs(&(s.projection.matrix() - Hermitian::diag(&[1.0, 0.0, 0.0]).matrix())), 0.0, epsilon = 1e-15);

        let i3 = Psd::identity(3);
        assert_eq!(i3.support().rank, 3);

        let v = [C64::new(0.6, 0.0), C64::new(0.0, 0.8)];
        let p = CMat::from_fn(2, 2, |i, j| v[i] * v[j].conj());
        let pa = Psd::from_matrix(p.clone()).unwrap();
        assert!(max_abs(&(pa.support().projection.matrix() - p)) < 1e-14);
        assert_eq!(Psd::diag(&[0.0, 0.0]).unwrap().support().rank, 0);
    }

    #[test]
    fn generalized_inverse_half_power() {
        let a = Psd::diag(&[4.0, 0.0]).unwrap();
        let r = a.pow(-0.5);
        let expect = Hermitian::diag(&[0.5, 0.0]);
        assert!(max_abs(&(r.matrix() - expect.matrix())) < 1e-15);
    }

    #[test]
    fn square_of_two_by_two() {
        let a = Psd::from_real(&[&[2.0, 1.0], &[1.0, 2.0]]).unwrap();
        let sq = a.pow(2.0);
        let direct = a.matrix() * a.matrix();
        assert!(max_abs(&(sq.matrix() - &direct)) < 1e-13);
        assert_relative_eq!(direct[(0, 0)].re, 5.0);
        assert_relative_eq!(direct[(0, 1)].re, 4.0);
        assert!(max_abs(&(a.pow(1.0).matrix() - a.matrix())) == 0.0);
    }

    #[test]
    fn log_and_exp() {
        let a = Psd::diag(&[std::f64::consts::E, 1.0]).unwrap();
        let l = a.log_support().unwrap();
        assert!(max_abs(&(l.matrix() - Hermitian::diag(&[1.0, 0.0]).matrix())) < 1e-15);
        let e = mat_exp(&Hermitian::zeros(3)).unwrap();
        assert!(max_abs(&(e.matrix() - CMat::identity(3, 3))) < 1e-15);
        assert!(Psd::diag(&[0.0, 0.0]).unwrap().log_support().is_err());
    }

    #[test]
    fn loewner_examples() {
        let i = Hermitian::identity(2);
        assert!(loewner_le(&i, &i.scale(2.0), 1e-12).unwrap());
        let a = Hermitian::diag(&[2.0, 0.0]);
        let b = Hermitian::diag(&[1.0, 1.0]);
        assert!(!loewner_le(&a, &b, 1e-12).unwrap());
        assert!(!loewner_le(&b, &a, 1e-12).unwrap());
        assert!(loewner_le(&a, &a, 1e-12).unwrap());
        assert!(loewner_le(&a, &Hermitian::identity(3), 1e-12).is_err());
    }

    #[test]
    fn support_meet_of_planes() {
        // ranges span{e1,e2} and span{e2,e3} meet in span{e2}
        let a = Psd::diag(&[1.0, 2.0, 0.0]).unwrap();
        let b = Psd::diag(&[0.0, 1.0, 3.0]).unwrap();
        let p = support_meet(&a, &b).unwrap();
        assert!(max_abs(&(p.matrix() - Hermitian::diag(&[0.0, 1.0, 0.0]).matrix())) < 1e-12);
    }

    #[test]
    fn json_round_trip() {
        let h = Hermitian::new(CMat::from_fn(2, 2, |i, j| match (i, j) {
            (0, 1) => C64::new(1.0, 2.0),
            (1, 0) => C64::new(1.0, -2.0),
            _ => c(3.0),
        }))
        .unwrap();
        let js = MatrixJson::from_matrix(h.matrix());
        let text = serde_json::to_string(&js).unwrap();
        let back: MatrixJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_hermitian().unwrap(), h);
        let bad = MatrixJson { dim: 2, re: vec![vec![0.0, 1.0], vec![0.0, 0.0]], im: vec![vec![0.0; 2]; 2] };
        assert!(bad.to_hermitian().is_err());
    }
}
