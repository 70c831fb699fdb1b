//! Small dense matrix geometry: symmetric and antisymmetric matrices, the
//! Siegel upper half space, the real symplectic group, and the group actions
//! that connect them.
//!
//! Conventions:
//! - `𝕁 = [0, I; -I, 0]` is the standard symplectic matrix.
//! - A symplectic matrix `Y` is identified with a Hagedorn pair `(Q, P)` via
//!   `Y = [Re Q, Im Q; Re P, Im P]`.
//! - `Sp(2d)` acts on the Siegel space by `(C + D Z)(A + B Z)^{-1}` with
//!   `X = [A, B; C, D]`.

mod complex;

use nalgebra::{DMatrix, DVector, SymmetricEigen, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{GwpError, Result};
use crate::wavepacket::ReducedState;

pub use complex::CMat;

/// Numerical validity thresholds. The defaults are the ones the library is
/// tested against.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Max entrywise asymmetry accepted by [`SymMat`] and [`AntisymMat`].
    pub symmetry: f64,
    /// Relative eigenvalue floor for positive-definiteness.
    pub spd_relative: f64,
    /// Max entrywise residual of `Yᵀ𝕁Y − 𝕁`.
    pub symplectic: f64,
    /// Max Hagedorn constraint residual accepted for a [`crate::wavepacket::HagedornState`].
    pub hagedorn_constraint: f64,
    /// Max residual of `RᵀR − I` and `det R − 1`.
    pub rotation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            symmetry: 1e-12,
            spd_relative: 1e-12,
            symplectic: 1e-10,
            hagedorn_constraint: 1e-8,
            rotation: 1e-10,
        }
    }
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Real symmetric `d×d` matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymMat(DMatrix<f64>);

impl SymMat {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(m, Tolerances::default().symmetry)
    }

    /// Accepts `m` when its asymmetry is at most `tol`, storing the exact
    /// symmetric part.
    pub fn with_tol(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(GwpError::DimensionMismatch(format!(
                "symmetric matrix must be square, got {:?}",
                m.shape()
            )));
        }
        let residual = max_abs(&(&m - m.transpose()));
        if !(residual <= tol) {
            return Err(GwpError::NotSymmetric { residual, tol });
        }
        Ok(Self((&m + m.transpose()) * 0.5))
    }

    pub fn identity(d: usize) -> Self {
        Self(DMatrix::identity(d, d))
    }

    pub fn zeros(d: usize) -> Self {
        Self(DMatrix::zeros(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.0
    }

    /// `R M Rᵀ`.
    pub fn congruence(&self, r: &DMatrix<f64>) -> Self {
        let m = r * &self.0 * r.transpose();
        Self((&m + m.transpose()) * 0.5)
    }
}

/// Real antisymmetric matrix, an element of `so(d)` (and of its dual via the
/// pairing `⟨ξ, η⟩ = ½ tr(ξᵀη)`).
#[derive(Debug, Clone, PartialEq)]
pub struct AntisymMat(DMatrix<f64>);

impl AntisymMat {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(m, Tolerances::default().symmetry)
    }

    pub fn with_tol(m: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(GwpError::DimensionMismatch(format!(
                "antisymmetric matrix must be square, got {:?}",
                m.shape()
            )));
        }
        let residual = max_abs(&(&m + m.transpose()));
        if !(residual <= tol) {
            return Err(GwpError::NotAntisymmetric { residual, tol });
        }
        Ok(Self((&m - m.transpose()) * 0.5))
    }

    /// Antisymmetric part of an arbitrary square matrix.
    pub fn from_antisymmetric_part(m: &DMatrix<f64>) -> Self {
        Self((m - m.transpose()) * 0.5)
    }

    /// Basis element `E_jk = e_j e_kᵀ − e_k e_jᵀ` (zero-based indices).
    pub fn basis(d: usize, j: usize, k: usize) -> Self {
        let mut m = DMatrix::zeros(d, d);
        if j != k {
            m[(j, k)] = 1.0;
            m[(k, j)] = -1.0;
        }
        Self(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    /// The pairing `½ tr(selfᵀ other)`; with `other = E_jk` this is entry `(j, k)`.
    pub fn pairing(&self, other: &AntisymMat) -> f64 {
        0.5 * self.0.component_mul(&other.0).sum()
    }
}

/// A point `C = A + iB` of the Siegel upper half space.
#[derive(Debug, Clone, PartialEq)]
pub struct SiegelPoint {
    a: SymMat,
    b: SymMat,
}

impl SiegelPoint {
    pub fn new(a: SymMat, b: SymMat) -> Result<Self> {
        Self::with_tol(a, b, Tolerances::default().spd_relative)
    }

    pub fn with_tol(a: SymMat, b: SymMat, spd_relative: f64) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(GwpError::DimensionMismatch(format!(
                "A is {0}x{0} but B is {1}x{1}",
                a.dim(),
                b.dim()
            )));
        }
        check_positive_definite(b.matrix(), spd_relative)?;
        Ok(Self { a, b })
    }

    /// Builds from raw matrices, validating symmetry and positivity.
    pub fn from_matrices(a: DMatrix<f64>, b: DMatrix<f64>) -> Result<Self> {
        Self::new(SymMat::new(a)?, SymMat::new(b)?)
    }

    /// `i·I`.
    pub fn base_point(d: usize) -> Self {
        Self {
            a: SymMat::zeros(d),
            b: SymMat::identity(d),
        }
    }

    /// Takes a complex matrix whose parts are symmetric up to `symmetry`.
    pub fn from_cmat(c: &CMat, tol: &Tolerances) -> Result<Self> {
        Self::with_tol(
            SymMat::with_tol(c.re.clone(), tol.symmetry)?,
            SymMat::with_tol(c.im.clone(), tol.symmetry)?,
            tol.spd_relative,
        )
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn a(&self) -> &SymMat {
        &self.a
    }

    pub fn b(&self) -> &SymMat {
        &self.b
    }

    pub fn to_cmat(&self) -> CMat {
        CMat {
            re: self.a.matrix().clone(),
            im: self.b.matrix().clone(),
        }
    }

    /// `B⁻¹`, computed through the symmetric eigendecomposition.
    pub fn b_inverse(&self) -> DMatrix<f64> {
        sym_function(self.b.matrix(), |x| 1.0 / x)
    }

    /// Entrywise max distance to another point.
    pub fn distance_max(&self, other: &SiegelPoint) -> f64 {
        self.to_cmat().sub(&other.to_cmat()).max_abs()
    }
}

fn check_positive_definite(b: &DMatrix<f64>, relative: f64) -> Result<()> {
    let eig = SymmetricEigen::new(b.clone());
    let min_eig = eig.eigenvalues.min();
    let max_eig = eig.eigenvalues.max();
    if !(max_eig > 0.0 && min_eig > relative * max_eig) || b.clone().cholesky().is_none() {
        return Err(GwpError::NotPositiveDefinite { min_eig, max_eig });
    }
    Ok(())
}

/// Applies a scalar function to the eigenvalues of a symmetric matrix.
pub fn sym_function(m: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let vals = DMatrix::from_diagonal(&eig.eigenvalues.map(f));
    let out = &eig.eigenvectors * vals * eig.eigenvectors.transpose();
    (&out + out.transpose()) * 0.5
}

/// Symmetric square root of a positive-definite matrix.
pub fn sym_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_positive_definite(m, Tolerances::default().spd_relative)?;
    Ok(sym_function(m, f64::sqrt))
}

/// Symmetric inverse square root of a positive-definite matrix.
pub fn sym_inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    check_positive_definite(m, Tolerances::default().spd_relative)?;
    Ok(sym_function(m, |x| 1.0 / x.sqrt()))
}

/// The standard symplectic matrix `𝕁 = [0, I; −I, 0]` of size `2d`.
pub fn standard_j(d: usize) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
    }
    j
}

/// A real `2d×2d` matrix `Y` with `Yᵀ𝕁Y = 𝕁`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymplecticMatrix2d {
    y: DMatrix<f64>,
}

impl SymplecticMatrix2d {
    pub fn new(y: DMatrix<f64>) -> Result<Self> {
        Self::with_tol(y, Tolerances::default().symplectic)
    }

    pub fn with_tol(y: DMatrix<f64>, tol: f64) -> Result<Self> {
        if !y.is_square() || y.nrows() % 2 != 0 {
            return Err(GwpError::DimensionMismatch(format!(
                "symplectic matrix must be 2d x 2d, got {:?}",
                y.shape()
            )));
        }
        let residual = symplectic_residual(&y);
        if !(residual <= tol) {
            return Err(GwpError::NotSymplectic { residual, tol });
        }
        Ok(Self { y })
    }

    /// Wraps `y` without checking. Used by integrators that update `Y` by
    /// products of exactly symplectic factors; callers check residuals
    /// through [`symplectic_residual`] or the Hagedorn constraints.
    pub fn from_matrix_unchecked(y: DMatrix<f64>) -> Self {
        Self { y }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            y: DMatrix::identity(2 * d, 2 * d),
        }
    }

    /// `Y = [Re Q, Im Q; Re P, Im P]`.
    pub fn from_qp(q: &CMat, p: &CMat) -> Result<Self> {
        let d = q.nrows();
        if q.ncols() != d || p.nrows() != d || p.ncols() != d {
            return Err(GwpError::DimensionMismatch(
                "Q and P must be square and of equal size".into(),
            ));
        }
        let mut y = DMatrix::zeros(2 * d, 2 * d);
        y.view_mut((0, 0), (d, d)).copy_from(&q.re);
        y.view_mut((0, d), (d, d)).copy_from(&q.im);
        y.view_mut((d, 0), (d, d)).copy_from(&p.re);
        y.view_mut((d, d), (d, d)).copy_from(&p.im);
        Self::new(y)
    }

    pub fn dim(&self) -> usize {
        self.y.nrows() / 2
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.y
    }

    pub fn into_inner(self) -> DMatrix<f64> {
        self.y
    }

    pub fn block(&self, row: usize, col: usize) -> nalgebra::DMatrixView<'_, f64> {
        let d = self.dim();
        self.y.view((row * d, col * d), (d, d))
    }

    pub fn re_q(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.block(0, 0)
    }

    pub fn im_q(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.block(0, 1)
    }

    pub fn re_p(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.block(1, 0)
    }

    pub fn im_p(&self) -> nalgebra::DMatrixView<'_, f64> {
        self.block(1, 1)
    }

    pub fn q(&self) -> CMat {
        CMat {
            re: self.re_q().into_owned(),
            im: self.im_q().into_owned(),
        }
    }

    pub fn p(&self) -> CMat {
        CMat {
            re: self.re_p().into_owned(),
            im: self.im_p().into_owned(),
        }
    }

    pub fn mul(&self, other: &SymplecticMatrix2d) -> SymplecticMatrix2d {
        SymplecticMatrix2d {
            y: &self.y * &other.y,
        }
    }

    /// `Y⁻¹ = −𝕁 Yᵀ 𝕁`.
    pub fn inverse(&self) -> SymplecticMatrix2d {
        let j = standard_j(self.dim());
        SymplecticMatrix2d {
            y: -(&j * self.y.transpose() * &j),
        }
    }

    pub fn residual(&self) -> f64 {
        symplectic_residual(&self.y)
    }
}

/// `‖Yᵀ𝕁Y − 𝕁‖_max`.
pub fn symplectic_residual(y: &DMatrix<f64>) -> f64 {
    let j = standard_j(y.nrows() / 2);
    max_abs(&(y.transpose() * &j * y - &j))
}

/// The hat map `ℝ³ → so(3)`: `hat(v) w = v × w`.
pub fn hat(v: &Vector3<f64>) -> AntisymMat {
    AntisymMat(DMatrix::from_row_slice(
        3,
        3,
        &[0.0, -v[2], v[1], v[2], 0.0, -v[0], -v[1], v[0], 0.0],
    ))
}

/// Inverse of [`hat`]. Reads the lower-left entries `(M₃₂, M₁₃, M₂₁)`.
pub fn vee(m: &AntisymMat) -> Result<Vector3<f64>> {
    if m.dim() != 3 {
        return Err(GwpError::DimensionMismatch(format!(
            "vee needs a 3x3 matrix, got {0}x{0}",
            m.dim()
        )));
    }
    let a = m.matrix();
    Ok(Vector3::new(a[(2, 1)], a[(0, 2)], a[(1, 0)]))
}

/// `(q ⋄ p)_ij = q_j p_i − q_i p_j`.
pub fn diamond(q: &DVector<f64>, p: &DVector<f64>) -> Result<AntisymMat> {
    if q.len() != p.len() {
        return Err(GwpError::DimensionMismatch(format!(
            "q has {} entries, p has {}",
            q.len(),
            p.len()
        )));
    }
    let d = q.len();
    Ok(AntisymMat(DMatrix::from_fn(d, d, |i, j| {
        q[j] * p[i] - q[i] * p[j]
    })))
}

/// Linear fractional action `Z ↦ (C + DZ)(A + BZ)⁻¹` of `X = [A, B; C, D]`.
pub fn siegel_action(x: &SymplecticMatrix2d, z: &SiegelPoint) -> Result<SiegelPoint> {
    let d = z.dim();
    if x.dim() != d {
        return Err(GwpError::DimensionMismatch(format!(
            "action of Sp({}) on Siegel space of dimension {}",
            2 * x.dim(),
            d
        )));
    }
    let zc = z.to_cmat();
    let a = x.block(0, 0).into_owned();
    let b = x.block(0, 1).into_owned();
    let c = x.block(1, 0).into_owned();
    let dd = x.block(1, 1).into_owned();
    let denom = zc.left_mul_real(&b).add(&CMat::from_real(a));
    let numer = zc.left_mul_real(&dd).add(&CMat::from_real(c));
    let inv = denom
        .try_inverse()
        .map_err(|_| GwpError::Singular("A + BZ in the Siegel action"))?;
    symmetric_siegel(&numer.mul(&inv))
}

/// Projection `Sp(2d) → Σ_d`, `Y ↦ P Q⁻¹`.
pub fn quotient_map(y: &SymplecticMatrix2d) -> Result<SiegelPoint> {
    let (q, p) = (y.q(), y.p());
    let inv = q.try_inverse().map_err(|_| {
        let (r1, r2) = constraint_residuals(&q, &p);
        GwpError::ConstraintViolation { r1, r2 }
    })?;
    symmetric_siegel(&p.mul(&inv))
}

/// Accepts a complex matrix that should be symmetric up to roundoff.
pub(crate) fn symmetric_siegel(c: &CMat) -> Result<SiegelPoint> {
    let scale = c.max_abs().max(1.0);
    let tol = Tolerances::default();
    let sym_tol = 1e-9 * scale;
    SiegelPoint::with_tol(
        SymMat::with_tol(c.re.clone(), sym_tol)?,
        SymMat::with_tol(c.im.clone(), sym_tol)?,
        tol.spd_relative,
    )
}

/// Canonical section of the quotient map: `Q = B^{-1/2}`, `P = (A + iB) B^{-1/2}`.
pub fn siegel_to_qp(z: &SiegelPoint) -> Result<(CMat, CMat)> {
    let b_inv_half = sym_inv_sqrt(z.b().matrix())?;
    let q = CMat::from_real(b_inv_half.clone());
    let p = z.to_cmat().right_mul_real(&b_inv_half);
    Ok((q, p))
}

/// The symplectic matrix `[B^{-1/2}, 0; A B^{-1/2}, B^{1/2}]` carrying `iI` to `Z`.
pub fn siegel_factorization(z: &SiegelPoint) -> Result<SymplecticMatrix2d> {
    let d = z.dim();
    let b_half = sym_sqrt(z.b().matrix())?;
    let b_inv_half = sym_inv_sqrt(z.b().matrix())?;
    let mut y = DMatrix::zeros(2 * d, 2 * d);
    y.view_mut((0, 0), (d, d)).copy_from(&b_inv_half);
    y.view_mut((d, 0), (d, d))
        .copy_from(&(z.a().matrix() * &b_inv_half));
    y.view_mut((d, d), (d, d)).copy_from(&b_half);
    Ok(SymplecticMatrix2d::from_matrix_unchecked(y))
}

/// Embeds `U + iV ∈ U(d)` as `[U, V; −V, U]`.
pub fn embed_unitary(u: &DMatrix<f64>, v: &DMatrix<f64>) -> Result<SymplecticMatrix2d> {
    let d = u.nrows();
    if u.shape() != (d, d) || v.shape() != (d, d) {
        return Err(GwpError::DimensionMismatch("U and V must be d x d".into()));
    }
    let mut y = DMatrix::zeros(2 * d, 2 * d);
    y.view_mut((0, 0), (d, d)).copy_from(u);
    y.view_mut((0, d), (d, d)).copy_from(v);
    y.view_mut((d, 0), (d, d)).copy_from(&(-v));
    y.view_mut((d, d), (d, d)).copy_from(u);
    SymplecticMatrix2d::new(y)
}

/// Checks `RᵀR = I` and `det R = 1`.
pub fn check_rotation(r: &DMatrix<f64>, tol: f64) -> Result<()> {
    if !r.is_square() {
        return Err(GwpError::DimensionMismatch(format!(
            "rotation must be square, got {:?}",
            r.shape()
        )));
    }
    let d = r.nrows();
    let orth = max_abs(&(r.transpose() * r - DMatrix::identity(d, d)));
    let det = (r.determinant() - 1.0).abs();
    let residual = orth.max(det);
    if !(residual <= tol) {
        return Err(GwpError::NotRotation { residual, tol });
    }
    Ok(())
}

/// `Γ_R (q, p, A, B) = (Rq, Rp, RARᵀ, RBRᵀ)`.
pub fn so_action_reduced(r: &DMatrix<f64>, w: &ReducedState) -> Result<ReducedState> {
    check_rotation(r, Tolerances::default().rotation)?;
    if r.nrows() != w.dim() {
        return Err(GwpError::DimensionMismatch(format!(
            "rotation of size {} acting on state of dimension {}",
            r.nrows(),
            w.dim()
        )));
    }
    let c = SiegelPoint::new(w.c.a().congruence(r), w.c.b().congruence(r))?;
    ReducedState::new(r * &w.q, r * &w.p, c)
}

/// `γ̂_R(Y) = R̃ Y R̃ᵀ` with `R̃ = diag(R, R)`.
pub fn so_action_sp(r: &DMatrix<f64>, y: &SymplecticMatrix2d) -> Result<SymplecticMatrix2d> {
    check_rotation(r, Tolerances::default().rotation)?;
    let d = y.dim();
    if r.nrows() != d {
        return Err(GwpError::DimensionMismatch(format!(
            "rotation of size {} acting on Sp({})",
            r.nrows(),
            2 * d
        )));
    }
    let rt = block_diag(r);
    Ok(SymplecticMatrix2d::from_matrix_unchecked(
        &rt * y.matrix() * rt.transpose(),
    ))
}

/// `diag(R, R)`.
pub fn block_diag(r: &DMatrix<f64>) -> DMatrix<f64> {
    let d = r.nrows();
    let mut out = DMatrix::zeros(2 * d, 2 * d);
    out.view_mut((0, 0), (d, d)).copy_from(r);
    out.view_mut((d, d), (d, d)).copy_from(r);
    out
}

/// `(‖QᵀP − PᵀQ‖_max, ‖Q*P − P*Q − 2iI‖_max)`.
pub fn constraint_residuals(q: &CMat, p: &CMat) -> (f64, f64) {
    let d = q.nrows();
    let r1 = q.transpose().mul(p).sub(&p.transpose().mul(q)).max_abs();
    let two_i = CMat::from_imag(DMatrix::identity(d, d) * 2.0);
    let r2 = q
        .adjoint()
        .mul(p)
        .sub(&p.adjoint().mul(q))
        .sub(&two_i)
        .max_abs();
    (r1, r2)
}
