//! Dense complex matrices and the numerical tolerances shared by every
//! other module.
//!
//! Composite indices follow the "left tensor factor is the most significant
//! digit" convention, so `kron(a, b)[(i_a * dim_b + i_b, ...)]`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Environment variable that overrides [`Tolerances::rtol_rate`].
pub const RTOL_ENV: &str = "DEPHASER_TOL";

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Tolerances {
    /// Magnitude below which an entry counts as numerically zero.
    pub atol_zero: f64,
    /// Allowed `|M_ij - conj(M_ji)|` for matrices treated as Hermitian.
    pub atol_herm: f64,
    /// Relative tolerance for comparing rates.
    pub rtol_rate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            atol_zero: 1e-10,
            atol_herm: 1e-10,
            rtol_rate: 1e-9,
        }
    }
}

impl Tolerances {
    pub fn new(atol_zero: f64, atol_herm: f64, rtol_rate: f64) -> Result<Self> {
        for (name, value) in [
            ("atol_zero", atol_zero),
            ("atol_herm", atol_herm),
            ("rtol_rate", rtol_rate),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::BadTolerance { name, value });
            }
        }
        Ok(Tolerances {
            atol_zero,
            atol_herm,
            rtol_rate,
        })
    }

    /// Defaults, with `rtol_rate` taken from `DEPHASER_TOL` when set.
    pub fn from_env() -> Result<Self> {
        let mut tol = Tolerances::default();
        if let Ok(raw) = std::env::var(RTOL_ENV) {
            let value: f64 = raw.trim().parse().map_err(|_| Error::BadTolerance {
                name: "rtol_rate",
                value: f64::NAN,
            })?;
            tol = Tolerances::new(tol.atol_zero, tol.atol_herm, value)?;
        }
        Ok(tol)
    }
}

/// Result of a diagonality test: the verdict plus the largest off-diagonal
/// entry when the matrix is not diagonal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagonalCheck {
    pub diagonal: bool,
    pub witness: Option<OffDiagonal>,
}

#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct OffDiagonal {
    pub i: usize,
    pub j: usize,
    pub magnitude: f64,
}

/// Square dense complex matrix. Carries Hamiltonians, Lindblad operators and
/// density matrices alike.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix(DMatrix<C64>);

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        ComplexMatrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        ComplexMatrix(DMatrix::identity(dim, dim))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> C64) -> Self {
        assert!(dim >= 1, "matrix dimension must be at least 1");
        ComplexMatrix(DMatrix::from_fn(dim, dim, f))
    }

    pub fn from_diagonal(diag: &[C64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { diag[i] } else { ZERO })
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        Self::from_fn(diag.len(), |i, j| if i == j { C64::from(diag[i]) } else { ZERO })
    }

    /// `|i><j|` in a `dim`-dimensional space.
    pub fn matrix_unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    /// Builds a matrix from row-major rows; every row must have `rows.len()`
    /// entries.
    pub fn from_rows(rows: &[Vec<C64>]) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 {
            return Err(Error::NotSquare { rows: 0, cols: 0 });
        }
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(Error::NotSquare {
                rows: dim,
                cols: bad.len(),
            });
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    /// Like [`from_rows`](Self::from_rows), but rejects non-Hermitian input.
    pub fn hermitian_from_rows(rows: &[Vec<C64>], tol: &Tolerances) -> Result<Self> {
        let m = Self::from_rows(rows)?;
        let deviation = m.hermiticity_error();
        if deviation > tol.atol_herm {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn as_inner(&self) -> &DMatrix<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<C64> {
        self.0
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.dim()).map(|i| self.0[(i, i)]).collect()
    }

    fn check_same_dim(&self, other: &ComplexMatrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }

    pub fn matmul(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_dim(other)?;
        Ok(ComplexMatrix(&self.0 * &other.0))
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> ComplexMatrix {
        ComplexMatrix(self.0.adjoint())
    }

    /// `[self, other] = self·other − other·self`.
    pub fn commutator(&self, other: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.check_same_dim(other)?;
        Ok(ComplexMatrix(&self.0 * &other.0 - &other.0 * &self.0))
    }

    pub fn kron(&self, other: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(self.0.kronecker(&other.0))
    }

    pub fn is_diagonal(&self, tol: &Tolerances) -> DiagonalCheck {
        let worst = self.max_off_diagonal();
        match worst {
            Some(w) if w.magnitude > tol.atol_zero => DiagonalCheck {
                diagonal: false,
                witness: Some(w),
            },
            _ => DiagonalCheck {
                diagonal: true,
                witness: None,
            },
        }
    }

    /// Largest off-diagonal entry, first in row-major order on ties.
    pub fn max_off_diagonal(&self) -> Option<OffDiagonal> {
        let n = self.dim();
        let mut best: Option<OffDiagonal> = None;
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let magnitude = self.0[(i, j)].norm();
                if best.is_none_or(|b| magnitude > b.magnitude) {
                    best = Some(OffDiagonal { i, j, magnitude });
                }
            }
        }
        best
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn frobenius_distance(&self, other: &ComplexMatrix) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok((&self.0 - &other.0).iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt())
    }

    pub fn max_abs_diff(&self, other: &ComplexMatrix) -> Result<f64> {
        self.check_same_dim(other)?;
        Ok(self
            .0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `max |M_ij − conj(M_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.0[(i, j)] - self.0[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// `(M + M†) / 2`.
    pub fn hermitian_part(&self) -> ComplexMatrix {
        ComplexMatrix((&self.0 + self.0.adjoint()) * C64::from(0.5))
    }

    pub fn scale(&self, factor: C64) -> ComplexMatrix {
        ComplexMatrix(&self.0 * factor)
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl From<DMatrix<C64>> for ComplexMatrix {
    fn from(m: DMatrix<C64>) -> Self {
        assert!(m.is_square() && m.nrows() >= 1, "matrix must be square");
        ComplexMatrix(m)
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;
    fn index(&self, idx: (usize, usize)) -> &C64 {
        &self.0[idx]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, idx: (usize, usize)) -> &mut C64 {
        &mut self.0[idx]
    }
}

// The arithmetic operators panic on dimension mismatch; use `matmul` and
// friends where the dimensions come from user input.
impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 + &rhs.0)
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 - &rhs.0)
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        ComplexMatrix(&self.0 * &rhs.0)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.dim();
        writeln!(f, "ComplexMatrix({n}x{n}) [")?;
        for i in 0..n {
            write!(f, "  ")?;
            for j in 0..n {
                let z = self.0[(i, j)];
                write!(f, "{:+.6}{:+.6}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn diag(v: &[f64]) -> ComplexMatrix {
        ComplexMatrix::from_real_diagonal(v)
    }

    #[test]
    fn identity_is_neutral() {
        let m = ComplexMatrix::from_fn(2, |i, j| C64::new(i as f64 + 1.0, j as f64 - 0.5));
        assert_eq!(ComplexMatrix::identity(2).matmul(&m).unwrap(), m);
    }

    #[test]
    fn sigma_z_squares_to_identity() {
        let z = diag(&[1.0, -1.0]);
        assert_eq!(z.matmul(&z).unwrap(), ComplexMatrix::identity(2));
    }

    #[test]
    fn diagonal_product_is_elementwise() {
        let a = diag(&[1.0, 0.0, 0.0, -1.0]);
        assert_eq!(a.matmul(&a).unwrap(), diag(&[1.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn matmul_rejects_mismatched_dims() {
        let err = ComplexMatrix::identity(2).matmul(&ComplexMatrix::identity(4));
        assert!(matches!(err, Err(Error::DimensionMismatch { expected: 2, found: 4 })));
    }

    #[test]
    fn dagger_examples() {
        let h = ComplexMatrix::from_rows(&[
            vec![C64::new(1.0, 0.0), C64::new(0.5, -0.25)],
            vec![C64::new(0.5, 0.25), C64::new(-2.0, 0.0)],
        ])
        .unwrap();
        assert_eq!(h.dagger(), h);

        let raise = ComplexMatrix::matrix_unit(2, 0, 1);
        assert_eq!(raise.dagger(), ComplexMatrix::matrix_unit(2, 1, 0));

        let d = ComplexMatrix::from_diagonal(&[I, ONE]);
        assert_eq!(d.dagger(), ComplexMatrix::from_diagonal(&[-I, ONE]));
    }

    #[test]
    fn commutator_examples() {
        let m = ComplexMatrix::from_fn(3, |i, j| C64::new((i * 3 + j) as f64, 0.1 * i as f64));
        assert_eq!(m.commutator(&m).unwrap(), ComplexMatrix::zeros(3));
        assert_eq!(
            ComplexMatrix::identity(3).commutator(&m).unwrap(),
            ComplexMatrix::zeros(3)
        );

        let (e1, e2) = (1.7, -0.4);
        let rho = ComplexMatrix::from_rows(&[
            vec![C64::new(0.6, 0.0), C64::new(0.2, 0.3)],
            vec![C64::new(0.2, -0.3), C64::new(0.4, 0.0)],
        ])
        .unwrap();
        let c = diag(&[e1, e2]).commutator(&rho).unwrap();
        assert!((c[(0, 1)] - (e1 - e2) * rho[(0, 1)]).norm() < 1e-15);
        assert!(ComplexMatrix::identity(2).commutator(&m).is_err());
    }

    #[test]
    fn kron_index_convention() {
        let p = diag(&[1.0, 0.0]);
        let id = ComplexMatrix::identity(2);
        assert_eq!(p.kron(&id), diag(&[1.0, 1.0, 0.0, 0.0]));
        assert_eq!(id.kron(&p), diag(&[1.0, 0.0, 1.0, 0.0]));
        assert_eq!(id.kron(&id), ComplexMatrix::identity(4));
    }

    #[test]
    fn diagonality_with_witness() {
        assert!(diag(&[1.0, 0.0, 0.0, -1.0]).is_diagonal(&Tolerances::default()).diagonal);

        let x = ComplexMatrix::from_rows(&[vec![ZERO, ONE], vec![ONE, ZERO]]).unwrap();
        let check = x.is_diagonal(&Tolerances::default());
        assert!(!check.diagonal);
        assert_eq!(
            check.witness,
            Some(OffDiagonal {
                i: 0,
                j: 1,
                magnitude: 1.0
            })
        );

        let mut nearly = ComplexMatrix::identity(2);
        nearly[(0, 1)] = C64::new(1e-12, 0.0);
        nearly[(1, 0)] = C64::new(1e-12, 0.0);
        let check = nearly.is_diagonal(&Tolerances::default());
        assert!(check.diagonal);
        assert!(check.witness.is_none());
    }

    #[test]
    fn reductions() {
        assert_eq!(ComplexMatrix::identity(4).trace(), C64::new(4.0, 0.0));
        let m = ComplexMatrix::from_fn(3, |i, j| C64::new(i as f64, j as f64));
        assert_eq!(m.frobenius_distance(&m).unwrap(), 0.0);
        assert_eq!(diag(&[1.0, 0.0]).max_abs_diff(&diag(&[0.0, 0.0])).unwrap(), 1.0);
        assert!(m.max_abs_diff(&ComplexMatrix::zeros(2)).is_err());
        assert!(m.frobenius_distance(&ComplexMatrix::zeros(2)).is_err());
    }

    #[test]
    fn hermitian_constructor_checks() {
        let tol = Tolerances::default();
        let rows = vec![vec![ONE, C64::new(0.0, 1.0)], vec![C64::new(0.0, 1.0), ONE]];
        assert!(matches!(
            ComplexMatrix::hermitian_from_rows(&rows, &tol),
            Err(Error::NotHermitian { .. })
        ));
        let rows = vec![vec![ONE, C64::new(0.0, 1.0)], vec![C64::new(0.0, -1.0), ONE]];
        assert!(ComplexMatrix::hermitian_from_rows(&rows, &tol).is_ok());
        assert!(ComplexMatrix::from_rows(&[vec![ONE, ONE]]).is_err());
    }

    #[test]
    fn tolerances_must_be_positive() {
        assert!(Tolerances::new(1e-10, 1e-10, 0.0).is_err());
        assert!(Tolerances::new(-1.0, 1e-10, 1e-9).is_err());
        assert!(Tolerances::new(1e-10, f64::NAN, 1e-9).is_err());
        assert!(Tolerances::new(1e-10, 1e-10, 1e-9).is_ok());
    }
}
