//! Wave packet state records, pointwise evaluation and conversions between
//! the Siegel (`C = A + iB`) and Hagedorn (`C = P Q⁻¹`) parametrizations.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{GwpError, Result};
use crate::geometry::{
    constraint_residuals, quotient_map, siegel_to_qp, CMat, SiegelPoint, SymplecticMatrix2d,
    Tolerances,
};
use crate::integrators::IntegratorKind;
use crate::potentials::{AverageMethod, PotentialSpec};

/// Reduced phase point `(q, p, A, B)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedState {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub c: SiegelPoint,
}

impl ReducedState {
    pub fn new(q: DVector<f64>, p: DVector<f64>, c: SiegelPoint) -> Result<Self> {
        if q.len() != p.len() || q.len() != c.dim() {
            return Err(GwpError::DimensionMismatch(format!(
                "q: {}, p: {}, C: {}",
                q.len(),
                p.len(),
                c.dim()
            )));
        }
        Ok(Self { q, p, c })
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn a(&self) -> &DMatrix<f64> {
        self.c.a().matrix()
    }

    pub fn b(&self) -> &DMatrix<f64> {
        self.c.b().matrix()
    }
}

/// Reduced state plus phase `φ` (unwrapped) and log-norm parameter `δ`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullState {
    pub reduced: ReducedState,
    pub phi: f64,
    pub delta: f64,
}

pub fn reduced_to_full(w: ReducedState, phi: f64, delta: f64) -> FullState {
    FullState {
        reduced: w,
        phi,
        delta,
    }
}

pub fn full_to_reduced(y: &FullState) -> ReducedState {
    y.reduced.clone()
}

/// Hagedorn parameters `(q, p, Q, P, S)`; `(Q, P)` are stored as the real
/// symplectic matrix `Y = [Re Q, Im Q; Re P, Im P]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HagedornState {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    y: SymplecticMatrix2d,
    pub s: f64,
}

impl HagedornState {
    pub fn new(q: DVector<f64>, p: DVector<f64>, qm: &CMat, pm: &CMat, s: f64) -> Result<Self> {
        Self::with_tol(q, p, qm, pm, s, &Tolerances::default())
    }

    pub fn with_tol(
        q: DVector<f64>,
        p: DVector<f64>,
        qm: &CMat,
        pm: &CMat,
        s: f64,
        tol: &Tolerances,
    ) -> Result<Self> {
        let (r1, r2) = constraint_residuals(qm, pm);
        if !(r1 <= tol.hagedorn_constraint && r2 <= tol.hagedorn_constraint) {
            return Err(GwpError::ConstraintViolation { r1, r2 });
        }
        let y = SymplecticMatrix2d::with_tol(
            {
                let d = qm.nrows();
                let mut y = DMatrix::zeros(2 * d, 2 * d);
                y.view_mut((0, 0), (d, d)).copy_from(&qm.re);
                y.view_mut((0, d), (d, d)).copy_from(&qm.im);
                y.view_mut((d, 0), (d, d)).copy_from(&pm.re);
                y.view_mut((d, d), (d, d)).copy_from(&pm.im);
                y
            },
            f64::INFINITY,
        )?;
        Self::from_y_unchecked(q, p, y, s)
    }

    pub fn from_y(q: DVector<f64>, p: DVector<f64>, y: SymplecticMatrix2d, s: f64) -> Result<Self> {
        Self::new(q, p, &y.q(), &y.p(), s)
    }

    /// Skips the constraint check; dimensions are still validated.
    pub(crate) fn from_y_unchecked(
        q: DVector<f64>,
        p: DVector<f64>,
        y: SymplecticMatrix2d,
        s: f64,
    ) -> Result<Self> {
        if q.len() != p.len() || q.len() != y.dim() {
            return Err(GwpError::DimensionMismatch(format!(
                "q: {}, p: {}, Y: {}",
                q.len(),
                p.len(),
                2 * y.dim()
            )));
        }
        Ok(Self { q, p, y, s })
    }

    /// Lifts a reduced state through the canonical section `Q = B^{-1/2}`.
    pub fn from_reduced(w: &ReducedState, s: f64) -> Result<Self> {
        let (qm, pm) = siegel_to_qp(&w.c)?;
        Self::new(w.q.clone(), w.p.clone(), &qm, &pm, s)
    }

    pub fn dim(&self) -> usize {
        self.q.len()
    }

    pub fn y(&self) -> &SymplecticMatrix2d {
        &self.y
    }

    pub fn q_mat(&self) -> CMat {
        self.y.q()
    }

    pub fn p_mat(&self) -> CMat {
        self.y.p()
    }

    pub fn constraint_residuals(&self) -> (f64, f64) {
        constraint_residuals(&self.q_mat(), &self.p_mat())
    }
}

/// Global parameters of a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub dim: usize,
    pub hbar: f64,
    pub mass: f64,
    pub dt: f64,
    pub t_end: f64,
    pub potential: PotentialSpec,
    pub integrator: IntegratorKind,
    pub stride: usize,
    pub averages: AverageMethod,
    pub tolerances: Tolerances,
}

impl SimulationConfig {
    /// Defaults: `dt = 0.01`, `t_end = 1`, stride 10, radial quartic
    /// potential, variational splitting, analytic averages.
    pub fn new(dim: usize, hbar: f64, mass: f64) -> Self {
        Self {
            dim,
            hbar,
            mass,
            dt: 0.01,
            t_end: 1.0,
            potential: PotentialSpec::QuarticRadial {},
            integrator: IntegratorKind::VariationalSplitting,
            stride: 10,
            averages: AverageMethod::Analytic,
            tolerances: Tolerances::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(GwpError::InvalidConfig(format!("{name} must be positive, got {v}")))
            }
        };
        if self.dim == 0 {
            return Err(GwpError::InvalidConfig("dim must be positive".into()));
        }
        if !(self.hbar >= 0.0 && self.hbar.is_finite()) {
            return Err(GwpError::InvalidConfig(format!(
                "hbar must be non-negative, got {}",
                self.hbar
            )));
        }
        positive("mass", self.mass)?;
        positive("dt", self.dt)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(GwpError::InvalidConfig(format!(
                "t_end must be non-negative, got {}",
                self.t_end
            )));
        }
        if self.stride == 0 {
            return Err(GwpError::InvalidConfig("stride must be positive".into()));
        }
        self.potential.validate(self.dim)?;
        Ok(())
    }

    /// Number of steps, `round(t_end / dt)`.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt).round() as usize
    }
}

fn quadratic_form(c: &CMat, y: &DVector<f64>) -> Complex64 {
    Complex64::new(y.dot(&(&c.re * y)), y.dot(&(&c.im * y)))
}

/// Normalized Gaussian `ψ₀(x)` with zero phase.
pub fn evaluate_psi0(w: &ReducedState, cfg: &SimulationConfig, x: &DVector<f64>) -> Complex64 {
    let hbar = cfg.hbar;
    let d = w.dim() as f64;
    let y = x - &w.q;
    let norm = (w.b().determinant() / (PI * hbar).powf(d)).powf(0.25);
    let exponent = (0.5 * quadratic_form(&w.c.to_cmat(), &y) + w.p.dot(&y)) * Complex64::i() / hbar;
    norm * exponent.exp()
}

/// `‖χ‖² = sqrt((πħ)^d / det B) · exp(−2δ/ħ)`.
pub fn chi_norm_squared(y: &FullState, cfg: &SimulationConfig) -> f64 {
    let hbar = cfg.hbar;
    let d = y.reduced.dim() as f64;
    ((PI * hbar).powf(d) / y.reduced.b().determinant()).sqrt() * (-2.0 * y.delta / hbar).exp()
}

/// The `δ` making `‖χ‖ = 1`: `(ħ/4) ln((πħ)^d / det B)`.
pub fn unit_norm_delta(w: &ReducedState, hbar: f64) -> f64 {
    let d = w.dim() as f64;
    0.25 * hbar * ((PI * hbar).powf(d) / w.b().determinant()).ln()
}

/// Tracks a continuous branch of `arg det Q` along a trajectory.
///
/// The first observation takes the principal branch. Each later observation
/// is unwrapped against the previous angle; increments larger than
/// `max_increment` are reported as [`GwpError::BranchJump`] because the
/// branch can no longer be resolved from the samples.
#[derive(Debug, Clone)]
pub struct PhaseBranch {
    angle: Option<f64>,
    max_increment: f64,
}

impl Default for PhaseBranch {
    fn default() -> Self {
        Self {
            angle: None,
            max_increment: 0.5 * PI,
        }
    }
}

impl PhaseBranch {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_max_increment(max_increment: f64) -> Self {
        Self {
            angle: None,
            max_increment,
        }
    }

    pub fn angle(&self) -> Option<f64> {
        self.angle
    }

    /// Updates the tracked angle from a new determinant and returns it.
    pub fn track(&mut self, det: Complex64) -> Result<f64> {
        let principal = det.arg();
        let next = match self.angle {
            None => principal,
            Some(prev) => {
                let inc = (principal - prev + PI).rem_euclid(2.0 * PI) - PI;
                if inc.abs() > self.max_increment {
                    return Err(GwpError::BranchJump {
                        increment: inc,
                        limit: self.max_increment,
                    });
                }
                prev + inc
            }
        };
        self.angle = Some(next);
        Ok(next)
    }
}

/// Hagedorn ground state `φ₀(x)` with `(det Q)^{-1/2}` taken on the branch
/// carried by `branch`.
pub fn evaluate_hagedorn_ground(
    h: &HagedornState,
    cfg: &SimulationConfig,
    x: &DVector<f64>,
    branch: &mut PhaseBranch,
) -> Result<Complex64> {
    let hbar = cfg.hbar;
    let d = h.dim() as f64;
    let (qm, pm) = (h.q_mat(), h.p_mat());
    let det = qm.determinant();
    if det.norm() == 0.0 {
        let (r1, r2) = constraint_residuals(&qm, &pm);
        return Err(GwpError::ConstraintViolation { r1, r2 });
    }
    let theta = branch.track(det)?;
    let inv_sqrt_det = Complex64::from_polar(det.norm().powf(-0.5), -0.5 * theta);
    let c = pm.mul(&qm.try_inverse()?);
    let y = x - &h.q;
    let exponent = (0.5 * quadratic_form(&c, &y) + h.p.dot(&y)) * Complex64::i() / hbar;
    Ok((PI * hbar).powf(-0.25 * d) * inv_sqrt_det * exponent.exp())
}

/// `C = P Q⁻¹` split into `(A, B)`.
pub fn hagedorn_to_reduced(h: &HagedornState) -> Result<ReducedState> {
    let c = quotient_map(h.y())?;
    let qm = h.q_mat();
    let id_check = CMat::from_real(c.b().matrix().clone())
        .mul(&qm.mul(&qm.adjoint()))
        .sub(&CMat::identity(h.dim()))
        .max_abs();
    if !(id_check <= 1e-8) {
        let (r1, r2) = h.constraint_residuals();
        return Err(GwpError::ConstraintViolation { r1, r2 });
    }
    ReducedState::new(h.q.clone(), h.p.clone(), c)
}
