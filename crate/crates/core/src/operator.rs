//! Dense real operators on a truncated Hilbert space.
//!
//! [`HermitianOperator`] carries a lazily computed spectral decomposition and is
//! the substrate for every operator function in the crate (heat kernels
//! `e^{-tA}`, fractional powers `A^{±α}`). [`GeneralOperator`] holds arbitrary
//! square matrices such as products of non-commuting exponentials.
//!
//! Both types are value-semantic: nothing is mutated after construction. The
//! spectral cache sits behind a [`OnceLock`], so sharing operators across threads
//! is safe.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::OnceLock;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest tolerated asymmetry `|h_ij - h_ji|` relative to `1 + max|h|`.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Bound on `‖QΛQᵀ − H‖` relative to `1 + ‖H‖`, and on `‖QᵀQ − I‖`.
pub const RECONSTRUCTION_TOL: f64 = 1e-10;

const EIGEN_MAX_ITER: usize = 10_000;

/// Eigenvalues in ascending order with matching orthonormal eigenvectors (columns).
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub eigenvalues: DVector<f64>,
    pub eigenvectors: DMatrix<f64>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        self.eigenvalues[self.dim() - 1]
    }

    /// `Q diag(values) Qᵀ`, symmetrized.
    fn synthesize(&self, values: &DVector<f64>) -> DMatrix<f64> {
        let q = &self.eigenvectors;
        let mut scaled = q.clone();
        for (j, v) in values.iter().enumerate() {
            scaled.column_mut(j).scale_mut(*v);
        }
        let m = scaled * q.transpose();
        symmetrized(&m)
    }
}

/// Self-adjoint operator with a cached spectral decomposition.
#[derive(Clone)]
pub struct HermitianOperator {
    entries: DMatrix<f64>,
    spectrum: OnceLock<Spectrum>,
}

impl fmt::Debug for HermitianOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermitianOperator")
            .field("dim", &self.dim())
            .field("entries", &self.entries)
            .finish()
    }
}

impl PartialEq for HermitianOperator {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

fn symmetrized(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

impl HermitianOperator {
    /// Builds an operator from a square matrix, symmetrizing it.
    ///
    /// Matrices that are asymmetric beyond [`SYMMETRY_TOL`] are rejected rather than
    /// silently projected.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::Dimension {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if entries.nrows() == 0 {
            return Err(Error::Argument("operator dimension must be positive".into()));
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(Error::Argument("operator has non-finite entries".into()));
        }
        let scale = 1.0 + entries.amax();
        let asym = (&entries - entries.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::Argument(format!(
                "matrix is not symmetric (max asymmetry {asym:e})"
            )));
        }
        Ok(Self::from_symmetric_unchecked(symmetrized(&entries)))
    }

    fn from_symmetric_unchecked(entries: DMatrix<f64>) -> Self {
        Self {
            entries,
            spectrum: OnceLock::new(),
        }
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::Argument("operator dimension must be positive".into()));
        }
        Self::new(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                found: bad.len(),
            });
        }
        Self::new(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_symmetric_unchecked(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self::from_symmetric_unchecked(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn to_general(&self) -> GeneralOperator {
        GeneralOperator(self.entries.clone())
    }

    /// Scales by a real factor, carrying the spectrum along when it is cached.
    pub fn scaled(&self, factor: f64) -> Self {
        let out = Self::from_symmetric_unchecked(&self.entries * factor);
        if let Some(spec) = self.spectrum.get() {
            if factor >= 0.0 {
                let _ = out.spectrum.set(Spectrum {
                    eigenvalues: &spec.eigenvalues * factor,
                    eigenvectors: spec.eigenvectors.clone(),
                });
            }
        }
        out
    }

    /// Conjugation `W H Wᵀ`.
    pub fn conjugated(&self, w: &DMatrix<f64>) -> Result<Self> {
        if w.nrows() != self.dim() || w.ncols() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                found: w.nrows(),
            });
        }
        let m = w * &self.entries * w.transpose();
        Ok(Self::from_symmetric_unchecked(symmetrized(&m)))
    }

    /// Spectral decomposition, computed on first use and cached.
    pub fn eigh(&self) -> Result<&Spectrum> {
        if let Some(s) = self.spectrum.get() {
            return Ok(s);
        }
        let spec = self.compute_spectrum()?;
        let _ = self.spectrum.set(spec);
        Ok(self.spectrum.get().expect("spectrum was just set"))
    }

    fn compute_spectrum(&self) -> Result<Spectrum> {
        let dim = self.dim();
        let eig = self
            .entries
            .clone()
            .try_symmetric_eigen(f64::EPSILON, EIGEN_MAX_ITER)
            .ok_or(Error::Eigen {
                dim,
                norm: self.entries.norm(),
            })?;
        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let eigenvalues = DVector::from_iterator(dim, order.iter().map(|&k| eig.eigenvalues[k]));
        let mut eigenvectors = DMatrix::zeros(dim, dim);
        for (j, &k) in order.iter().enumerate() {
            eigenvectors.set_column(j, &eig.eigenvectors.column(k));
        }
        let spec = Spectrum {
            eigenvalues,
            eigenvectors,
        };
        debug_assert!(
            {
                let recon = spec.synthesize(&spec.eigenvalues);
                let scale = 1.0 + self.entries.norm();
                (recon - &self.entries).norm() <= RECONSTRUCTION_TOL * scale
            },
            "eigendecomposition failed reconstruction check"
        );
        Ok(spec)
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigh()?.min())
    }

    pub fn max_eigenvalue(&self) -> Result<f64> {
        Ok(self.eigh()?.max())
    }

    /// Applies `f` on the spectrum: `Q f(Λ) Qᵀ`.
    ///
    /// `name` labels `f` in the domain error raised when `f` is not finite at some
    /// eigenvalue.
    pub fn operator_function<F>(&self, name: &str, f: F) -> Result<HermitianOperator>
    where
        F: Fn(f64) -> f64,
    {
        let spec = self.eigh()?;
        let mut values = DVector::zeros(spec.dim());
        for (k, &lambda) in spec.eigenvalues.iter().enumerate() {
            let v = f(lambda);
            if !v.is_finite() {
                return Err(Error::Domain {
                    function: name.to_string(),
                    eigenvalue: lambda,
                });
            }
            values[k] = v;
        }
        let out = Self::from_symmetric_unchecked(spec.synthesize(&values));
        let mut order: Vec<usize> = (0..spec.dim()).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        let mut eigenvectors = DMatrix::zeros(spec.dim(), spec.dim());
        for (j, &k) in order.iter().enumerate() {
            eigenvectors.set_column(j, &spec.eigenvectors.column(k));
        }
        let _ = out.spectrum.set(Spectrum {
            eigenvalues: DVector::from_iterator(spec.dim(), order.iter().map(|&k| values[k])),
            eigenvectors,
        });
        Ok(out)
    }

    /// Heat kernel `e^{-tH}`.
    pub fn exp_neg(&self, t: f64) -> Result<HermitianOperator> {
        self.operator_function("exp(-t·λ)", |l| (-t * l).exp())
    }

    /// Real power `H^p`; negative or fractional powers need a positive spectrum.
    pub fn power(&self, p: f64) -> Result<HermitianOperator> {
        let name = format!("λ^{p}");
        let integral = p.fract() == 0.0;
        self.operator_function(&name, |l| {
            if (p < 0.0 && l <= 0.0) || (!integral && l < 0.0) {
                f64::NAN
            } else {
                l.powf(p)
            }
        })
    }

    /// Operator norm, read off the spectrum.
    pub fn op_norm(&self) -> Result<f64> {
        let spec = self.eigh()?;
        Ok(spec.min().abs().max(spec.max().abs()))
    }
}

/// Arbitrary real square operator.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralOperator(DMatrix<f64>);

/// Supported Schatten exponents.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchattenP {
    /// Trace norm.
    One,
    /// Hilbert–Schmidt norm.
    Two,
    /// Operator norm.
    Inf,
}

impl GeneralOperator {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Dimension {
                expected: m.nrows(),
                found: m.ncols(),
            });
        }
        Ok(Self(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                found: bad.len(),
            });
        }
        Ok(Self(DMatrix::from_fn(d, d, |i, j| rows[i][j])))
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        Self(DMatrix::from_diagonal(&DVector::from_column_slice(diag)))
    }

    pub fn identity(dim: usize) -> Self {
        Self(DMatrix::identity(dim, dim))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(DMatrix::zeros(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(&self.0 * factor)
    }

    /// Singular values in descending order.
    pub fn singular_values(&self) -> Result<Vec<f64>> {
        singular_values(&self.0)
    }

    pub fn schatten_norm(&self, p: SchattenP) -> Result<f64> {
        let sv = self.singular_values()?;
        Ok(schatten_from_singular_values(&sv, p))
    }

    pub fn trace_norm(&self) -> Result<f64> {
        self.schatten_norm(SchattenP::One)
    }

    pub fn op_norm(&self) -> Result<f64> {
        self.schatten_norm(SchattenP::Inf)
    }

    /// Largest entrywise difference; a cheap equality probe for tests.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (&self.0 - &other.0).amax()
    }
}

/// Singular values of a real square matrix, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = m.nrows();
    let svd = m
        .clone()
        .try_svd(false, false, f64::EPSILON, EIGEN_MAX_ITER)
        .ok_or(Error::Svd {
            dim,
            norm: m.norm(),
        })?;
    let mut sv: Vec<f64> = svd.singular_values.iter().map(|s| s.abs()).collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    Ok(sv)
}

pub fn schatten_from_singular_values(sv: &[f64], p: SchattenP) -> f64 {
    match p {
        SchattenP::One => sv.iter().sum(),
        SchattenP::Two => sv.iter().map(|s| s * s).sum::<f64>().sqrt(),
        SchattenP::Inf => sv.first().copied().unwrap_or(0.0),
    }
}

/// Operator and trace norm of one matrix from a single decomposition.
pub fn op_and_trace_norm(m: &GeneralOperator) -> Result<(f64, f64)> {
    let sv = m.singular_values()?;
    Ok((
        schatten_from_singular_values(&sv, SchattenP::Inf),
        schatten_from_singular_values(&sv, SchattenP::One),
    ))
}

impl From<&HermitianOperator> for GeneralOperator {
    fn from(h: &HermitianOperator) -> Self {
        h.to_general()
    }
}

impl From<HermitianOperator> for GeneralOperator {
    fn from(h: HermitianOperator) -> Self {
        GeneralOperator(h.entries)
    }
}

impl Mul for &GeneralOperator {
    type Output = GeneralOperator;
    fn mul(self, rhs: Self) -> GeneralOperator {
        GeneralOperator(&self.0 * &rhs.0)
    }
}

impl Mul<&HermitianOperator> for &GeneralOperator {
    type Output = GeneralOperator;
    fn mul(self, rhs: &HermitianOperator) -> GeneralOperator {
        GeneralOperator(&self.0 * &rhs.entries)
    }
}

impl Mul<&GeneralOperator> for &HermitianOperator {
    type Output = GeneralOperator;
    fn mul(self, rhs: &GeneralOperator) -> GeneralOperator {
        GeneralOperator(&self.entries * &rhs.0)
    }
}

impl Mul for &HermitianOperator {
    type Output = GeneralOperator;
    fn mul(self, rhs: Self) -> GeneralOperator {
        GeneralOperator(&self.entries * &rhs.entries)
    }
}

impl Sub for &GeneralOperator {
    type Output = GeneralOperator;
    fn sub(self, rhs: Self) -> GeneralOperator {
        GeneralOperator(&self.0 - &rhs.0)
    }
}

impl Add for &GeneralOperator {
    type Output = GeneralOperator;
    fn add(self, rhs: Self) -> GeneralOperator {
        GeneralOperator(&self.0 + &rhs.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn two_by_two() -> HermitianOperator {
        HermitianOperator::from_rows(&[vec![2.0, 1.0], vec![1.0, 2.0]]).unwrap()
    }

    #[test]
    fn identity_spectrum() {
        let h = HermitianOperator::identity(3);
        let spec = h.eigh().unwrap();
        for &l in spec.eigenvalues.iter() {
            assert_abs_diff_eq!(l, 1.0, epsilon = 1e-15);
        }
        let recon = spec.synthesize(&spec.eigenvalues);
        assert_abs_diff_eq!((recon - h.matrix()).amax(), 0.0, epsilon = 1e-15);
    }

    #[test]
    fn diagonal_spectrum_is_sorted() {
        let h = HermitianOperator::from_diagonal(&[5.0, 1.0, 2.0]).unwrap();
        let spec = h.eigh().unwrap();
        assert_eq!(spec.eigenvalues.as_slice(), &[1.0, 2.0, 5.0]);
        // each eigenvector is a signed unit basis vector
        for j in 0..3 {
            let col = spec.eigenvectors.column(j);
            assert_abs_diff_eq!(col.amax(), 1.0, epsilon = 1e-15);
            assert_abs_diff_eq!(col.norm(), 1.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn two_by_two_eigenpairs() {
        // det(H - λ) = (2-λ)² - 1 → λ = 1, 3
        let h = two_by_two();
        let spec = h.eigh().unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(spec.eigenvalues[1], 3.0, epsilon = 1e-14);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let v0 = spec.eigenvectors.column(0);
        let v1 = spec.eigenvectors.column(1);
        assert_abs_diff_eq!((v0[0] * r - v0[1] * r).abs(), 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!((v1[0] * r + v1[1] * r).abs(), 1.0, epsilon = 1e-14);
        let qtq = spec.eigenvectors.transpose() * &spec.eigenvectors;
        assert!((qtq - DMatrix::<f64>::identity(2, 2)).amax() < 1e-14);
    }

    #[test]
    fn rejects_asymmetric_input() {
        let err = HermitianOperator::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(err, Error::Argument(_)));
    }

    #[test]
    fn symmetrizes_rounding_noise() {
        let h = HermitianOperator::from_rows(&[vec![1.0, 0.5 + 1e-15], vec![0.5, 1.0]]).unwrap();
        assert_eq!(h.matrix()[(0, 1)], h.matrix()[(1, 0)]);
    }

    #[test]
    fn diagonal_fractional_power() {
        let h = HermitianOperator::from_diagonal(&[1.0, 4.0]).unwrap();
        let p = h.power(-0.5).unwrap();
        assert_abs_diff_eq!(p.matrix()[(0, 0)], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p.matrix()[(1, 1)], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(p.matrix()[(0, 1)], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn negative_power_domain_error_names_eigenvalue() {
        let h = HermitianOperator::from_diagonal(&[0.0, 2.0]).unwrap();
        match h.power(-0.3) {
            Err(Error::Domain { eigenvalue, .. }) => assert_eq!(eigenvalue, 0.0),
            other => panic!("expected domain error, got {other:?}"),
        }
    }

    #[test]
    fn heat_kernel_of_identity() {
        let h = HermitianOperator::identity(4);
        for t in [0.0, 0.3, 2.5] {
            let g = h.exp_neg(t).unwrap();
            let expected = DMatrix::<f64>::identity(4, 4) * (-t).exp();
            assert!((g.matrix() - expected).amax() < 1e-15);
        }
    }

    #[test]
    fn heat_kernel_matches_taylor_series() {
        // Σ_k (-H)^k / k! truncated well past double precision.
        let h = two_by_two();
        let mut term = DMatrix::<f64>::identity(2, 2);
        let mut sum = term.clone();
        for k in 1..60 {
            term = -(&term * h.matrix()) / k as f64;
            sum += &term;
        }
        let g = h.exp_neg(1.0).unwrap();
        assert!((g.matrix() - sum).amax() < 1e-12);
    }

    #[test]
    fn function_result_caches_spectrum() {
        let h = two_by_two();
        let g = h.exp_neg(1.0).unwrap();
        let spec = g.eigh().unwrap();
        assert_abs_diff_eq!(spec.eigenvalues[0], (-3.0f64).exp(), epsilon = 1e-15);
        assert_abs_diff_eq!(spec.eigenvalues[1], (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn singular_value_examples() {
        let m = GeneralOperator::from_diagonal(&[3.0, -2.0]);
        assert_eq!(m.singular_values().unwrap(), vec![3.0, 2.0]);
        let z = GeneralOperator::zeros(3);
        assert_eq!(z.singular_values().unwrap(), vec![0.0; 3]);
        // MᵀM = diag(0, 1)
        let n = GeneralOperator::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let sv = n.singular_values().unwrap();
        assert_abs_diff_eq!(sv[0], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sv[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn schatten_examples() {
        let m = GeneralOperator::from_diagonal(&[1.0, 2.0, 3.0]);
        assert_abs_diff_eq!(m.schatten_norm(SchattenP::One).unwrap(), 6.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            m.schatten_norm(SchattenP::Two).unwrap(),
            14f64.sqrt(),
            epsilon = 1e-14
        );
        let i = GeneralOperator::identity(5);
        assert_abs_diff_eq!(i.schatten_norm(SchattenP::Inf).unwrap(), 1.0, epsilon = 1e-15);
        let h = two_by_two().to_general();
        assert_abs_diff_eq!(h.trace_norm().unwrap(), 4.0, epsilon = 1e-14);
    }

    #[test]
    fn semigroup_law() {
        let h = HermitianOperator::from_rows(&[
            vec![3.0, 0.5, 0.1],
            vec![0.5, 1.5, -0.2],
            vec![0.1, -0.2, 2.0],
        ])
        .unwrap();
        let (t, tau) = (0.37, 1.21);
        let lhs = &h.exp_neg(t).unwrap() * &h.exp_neg(tau).unwrap();
        let rhs = h.exp_neg(t + tau).unwrap().to_general();
        assert!(lhs.max_abs_diff(&rhs) < 1e-10);
    }

    #[test]
    fn gibbs_trace_bound() {
        let h = HermitianOperator::from_diagonal(&[1.0, 1.5, 7.0, 2.0]).unwrap();
        for t in [0.01, 0.5, 3.0] {
            let g = h.exp_neg(t).unwrap().to_general();
            assert!(g.trace_norm().unwrap() <= 4.0 * (-t).exp() + 1e-15);
        }
    }
}
