//! Complex matrices stored as a pair of real matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::{GwpError, Result};

/// A complex `n×m` matrix held as separate real and imaginary parts.
///
/// Keeping the parts apart lets the Hagedorn `(Q, P)` pair map onto the real
/// symplectic matrix `[Re Q, Im Q; Re P, Im P]` bit-for-bit.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    pub re: DMatrix<f64>,
    pub im: DMatrix<f64>,
}

impl CMat {
    pub fn new(re: DMatrix<f64>, im: DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(GwpError::DimensionMismatch(format!(
                "real part {:?} vs imaginary part {:?}",
                re.shape(),
                im.shape()
            )));
        }
        Ok(Self { re, im })
    }

    pub fn from_real(re: DMatrix<f64>) -> Self {
        let im = DMatrix::zeros(re.nrows(), re.ncols());
        Self { re, im }
    }

    pub fn from_imag(im: DMatrix<f64>) -> Self {
        let re = DMatrix::zeros(im.nrows(), im.ncols());
        Self { re, im }
    }

    pub fn zeros(n: usize, m: usize) -> Self {
        Self {
            re: DMatrix::zeros(n, m),
            im: DMatrix::zeros(n, m),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self::from_real(DMatrix::identity(d, d))
    }

    pub fn nrows(&self) -> usize {
        self.re.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.re.ncols()
    }

    pub fn to_complex(&self) -> DMatrix<Complex64> {
        DMatrix::from_fn(self.nrows(), self.ncols(), |i, j| {
            Complex64::new(self.re[(i, j)], self.im[(i, j)])
        })
    }

    pub fn from_complex(m: &DMatrix<Complex64>) -> Self {
        Self {
            re: m.map(|z| z.re),
            im: m.map(|z| z.im),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(self.re[(i, j)], self.im[(i, j)])
    }

    pub fn transpose(&self) -> Self {
        Self {
            re: self.re.transpose(),
            im: self.im.transpose(),
        }
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self {
            re: self.re.transpose(),
            im: -self.im.transpose(),
        }
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            re: &self.re * s,
            im: &self.im * s,
        }
    }

    /// Multiplication by `i`.
    pub fn times_i(&self) -> Self {
        Self {
            re: -&self.im,
            im: self.re.clone(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    /// `M · self` for a real matrix `M`.
    pub fn left_mul_real(&self, m: &DMatrix<f64>) -> Self {
        Self {
            re: m * &self.re,
            im: m * &self.im,
        }
    }

    /// `self · M` for a real matrix `M`.
    pub fn right_mul_real(&self, m: &DMatrix<f64>) -> Self {
        Self {
            re: &self.re * m,
            im: &self.im * m,
        }
    }

    pub fn try_inverse(&self) -> Result<Self> {
        let inv = self
            .to_complex()
            .try_inverse()
            .ok_or(GwpError::Singular("complex matrix inverse"))?;
        let out = Self::from_complex(&inv);
        if out.re.iter().chain(out.im.iter()).all(|x| x.is_finite()) {
            Ok(out)
        } else {
            Err(GwpError::Singular("complex matrix inverse"))
        }
    }

    pub fn determinant(&self) -> Complex64 {
        self.to_complex().determinant()
    }

    pub fn trace(&self) -> Complex64 {
        Complex64::new(self.re.trace(), self.im.trace())
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.re
            .iter()
            .zip(self.im.iter())
            .map(|(a, b)| a.hypot(*b))
            .fold(0.0, f64::max)
    }
}
