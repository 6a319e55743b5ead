use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

use super::BasisSpec;

/// Truncated `(n_max+1)²` matrix of an operator in a Laguerre basis.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorMatrix {
    pub basis: BasisSpec,
    pub entries: DMatrix<Complex64>,
    truncation: Option<f64>,
    hermitian: bool,
}

impl OperatorMatrix {
    /// Wraps `entries`; panics on a shape mismatch with `basis`.
    pub fn new(basis: BasisSpec, entries: DMatrix<Complex64>) -> Self {
        assert_eq!(entries.shape(), (basis.dim(), basis.dim()), "matrix shape does not match basis");
        OperatorMatrix { basis, entries, truncation: None, hermitian: false }
    }

    pub fn try_new(basis: BasisSpec, entries: DMatrix<Complex64>) -> Result<Self> {
        if entries.shape() != (basis.dim(), basis.dim()) {
            return Err(Error::config(format!(
                "matrix of shape {:?} does not fit a basis of dimension {}",
                entries.shape(),
                basis.dim()
            )));
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::domain("non-finite matrix entry"));
        }
        Ok(Self::new(basis, entries))
    }

    pub fn identity(basis: BasisSpec) -> Self {
        let d = basis.dim();
        let mut m = Self::new(basis, DMatrix::identity(d, d));
        m.hermitian = true;
        m
    }

    /// Real diagonal operator.
    pub fn diagonal(basis: BasisSpec, diag: &[f64]) -> Self {
        let d = DVector::from_iterator(basis.dim(), diag.iter().map(|&v| Complex64::new(v, 0.0)));
        let mut m = Self::new(basis, DMatrix::from_diagonal(&d));
        m.hermitian = true;
        m
    }

    pub fn with_truncation(mut self, estimate: f64) -> Self {
        self.truncation = Some(estimate);
        self
    }

    pub fn truncation_estimate(&self) -> Option<f64> {
        self.truncation
    }

    /// Marks the matrix hermitian after checking it to `tol` (relative to its norm).
    pub fn mark_hermitian(mut self, tol: f64) -> Result<Self> {
        let dev = self.hermitian_deviation();
        let scale = self.entries.norm().max(1.0);
        if dev > tol * scale {
            return Err(Error::Validity(format!("matrix is not hermitian: deviation {dev:e}")));
        }
        self.entries = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        self.hermitian = true;
        Ok(self)
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    /// `‖A − A†‖_F`.
    pub fn hermitian_deviation(&self) -> f64 {
        (&self.entries - self.entries.adjoint()).norm()
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn adjoint(&self) -> Self {
        OperatorMatrix {
            basis: self.basis,
            entries: self.entries.adjoint(),
            truncation: self.truncation,
            hermitian: self.hermitian,
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    /// Product in the common basis.
    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::new(self.basis, &self.entries * &other.entries))
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::new(self.basis, &self.entries - &other.entries))
    }

    /// Commutator `[A, B]`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self::new(self.basis, &self.entries * &other.entries - &other.entries * &self.entries))
    }

    /// Leading `k × k` block.
    pub fn leading_block(&self, k: usize) -> DMatrix<Complex64> {
        let k = k.min(self.dim());
        self.entries.view((0, 0), (k, k)).into_owned()
    }

    /// Sorted eigenvalues of the hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        let mut ev: Vec<f64> = h.symmetric_eigenvalues().iter().cloned().collect();
        ev.sort_by(|a, b| a.total_cmp(b));
        ev
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::config("operators live in different bases"));
        }
        Ok(())
    }
}
