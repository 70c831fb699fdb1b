//! Vector fields of the semiclassical, Hagedorn and first-variation systems,
//! and the reduced Hamiltonians they are generated by.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{GwpError, Result};
use crate::geometry::{CMat, SiegelPoint};
use crate::potentials::{gaussian_average, PotentialModel};
use crate::wavepacket::{FullState, HagedornState, ReducedState, SimulationConfig};

/// `(q̇, ṗ, Ȧ, Ḃ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentReduced {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
}

/// `(q̇, ṗ, Ȧ, Ḃ, φ̇, δ̇)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFull {
    pub reduced: TangentReduced,
    pub phi: f64,
    pub delta: f64,
}

/// `(q̇, ṗ, Ẏ, Ṡ)` with `Ẏ = [Re Q̇, Im Q̇; Re Ṗ, Im Ṗ]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentHagedorn {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub y: DMatrix<f64>,
    pub s: f64,
}

/// Classical phase point `z = (q, p)` with a tangent vector `δz`.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstVariationState {
    pub z: DVector<f64>,
    pub dz: DVector<f64>,
}

impl FirstVariationState {
    pub fn new(z: DVector<f64>, dz: DVector<f64>) -> Result<Self> {
        if z.len() % 2 != 0 || z.len() != dz.len() {
            return Err(GwpError::DimensionMismatch(format!(
                "z has {} entries, dz has {}",
                z.len(),
                dz.len()
            )));
        }
        Ok(Self { z, dz })
    }

    pub fn dim(&self) -> usize {
        self.z.len() / 2
    }

    pub fn q(&self) -> DVector<f64> {
        self.z.rows(0, self.dim()).into_owned()
    }

    pub fn p(&self) -> DVector<f64> {
        self.z.rows(self.dim(), self.dim()).into_owned()
    }
}

/// Which reduced Hamiltonian: exact Gaussian averages, or the `O(ħ)`
/// expansion `H¹` about `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HamiltonianVariant {
    Exact,
    Asymptotic,
}

fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// `−(A² − B²)/m` and `−(AB + BA)/m`.
fn kinetic_blocks(a: &DMatrix<f64>, b: &DMatrix<f64>, mass: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let da = -(a * a - b * b) / mass;
    let db = -(a * b + b * a) / mass;
    (da, db)
}

/// Six-equation system with exact Gaussian averages.
pub fn heller_full_rhs(
    y: &FullState,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> Result<TangentFull> {
    let w = &y.reduced;
    let (m, hbar) = (cfg.mass, cfg.hbar);
    let avg = gaussian_average(model, &w.q, w.b(), hbar, cfg.averages)?;
    let b_inv = w.c.b_inverse();
    let phi = w.p.norm_squared() / (2.0 * m) - avg.value - hbar / (2.0 * m) * w.b().trace()
        + 0.25 * hbar * (&b_inv * &avg.hessian).trace();
    let delta = hbar / (2.0 * m) * w.a().trace();
    let (da, db) = kinetic_blocks(w.a(), w.b(), m);
    Ok(TangentFull {
        reduced: TangentReduced {
            q: &w.p / m,
            p: -avg.gradient,
            a: symmetrize(da - avg.hessian),
            b: symmetrize(db),
        },
        phi,
        delta,
    })
}

/// `(q, p, A, B)` part of [`heller_full_rhs`].
pub fn heller_reduced_rhs(
    w: &ReducedState,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> Result<TangentReduced> {
    let avg = gaussian_average(model, &w.q, w.b(), cfg.hbar, cfg.averages)?;
    let (da, db) = kinetic_blocks(w.a(), w.b(), cfg.mass);
    Ok(TangentReduced {
        q: &w.p / cfg.mass,
        p: -avg.gradient,
        a: symmetrize(da - avg.hessian),
        b: symmetrize(db),
    })
}

/// `∂_q tr(B⁻¹ ∇²V(q)) = Σ_ij (B⁻¹)_ij ∂_ijk V`.
pub fn trace_correction_gradient(
    model: &dyn PotentialModel,
    q: &DVector<f64>,
    b_inv: &DMatrix<f64>,
) -> DVector<f64> {
    model.third(q).contract_matrix(b_inv)
}

/// Vector field of `H¹`: classical `(q, p)` with the `−(ħ/4)∂_q tr(B⁻¹∇²V)`
/// force correction, and the Riccati equation for `C` at `q`.
pub fn heller_asymptotic_rhs(
    w: &ReducedState,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> TangentReduced {
    let mut force = -model.gradient(&w.q);
    if cfg.hbar != 0.0 {
        force -= 0.25 * cfg.hbar * trace_correction_gradient(model, &w.q, &w.c.b_inverse());
    }
    let (da, db) = kinetic_blocks(w.a(), w.b(), cfg.mass);
    TangentReduced {
        q: &w.p / cfg.mass,
        p: force,
        a: symmetrize(da - model.hessian(&w.q)),
        b: symmetrize(db),
    }
}

/// `Ċ = −C²/m − ∇²V(q)`.
pub fn riccati_rhs(
    c: &SiegelPoint,
    q: &DVector<f64>,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> CMat {
    let cm = c.to_cmat();
    let h = CMat::from_real(model.hessian(q));
    cm.mul(&cm).scale(-1.0 / cfg.mass).sub(&h)
}

/// `ξ = [0, I/m; −∇²V(q), 0]`, the linearization of the classical flow.
pub fn xi_matrix(q: &DVector<f64>, model: &dyn PotentialModel, mass: f64) -> DMatrix<f64> {
    let d = q.len();
    let mut xi = DMatrix::zeros(2 * d, 2 * d);
    xi.view_mut((0, d), (d, d))
        .copy_from(&(DMatrix::identity(d, d) / mass));
    xi.view_mut((d, 0), (d, d)).copy_from(&(-model.hessian(q)));
    xi
}

/// `q̇ = p/m`, `ṗ = −∇V(q)`, `Ẏ = ξY`, `Ṡ = p²/2m − V(q)`.
pub fn hagedorn_rhs(
    h: &HagedornState,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> TangentHagedorn {
    let m = cfg.mass;
    TangentHagedorn {
        q: &h.p / m,
        p: -model.gradient(&h.q),
        y: xi_matrix(&h.q, model, m) * h.y().matrix(),
        s: h.p.norm_squared() / (2.0 * m) - model.value(&h.q),
    }
}

/// `ż = 𝕁∇H(z)`, `δ̇z = ξ(z) δz` for `H = p²/2m + V(q)`.
pub fn first_variation_rhs(
    s: &FirstVariationState,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> FirstVariationState {
    let d = s.dim();
    let (q, p) = (s.q(), s.p());
    let mut z = DVector::zeros(2 * d);
    z.rows_mut(0, d).copy_from(&(&p / cfg.mass));
    z.rows_mut(d, d).copy_from(&(-model.gradient(&q)));
    FirstVariationState {
        z,
        dz: xi_matrix(&q, model, cfg.mass) * &s.dz,
    }
}

/// `p²/2m + V(q)`.
pub fn classical_hamiltonian(
    q: &DVector<f64>,
    p: &DVector<f64>,
    model: &dyn PotentialModel,
    mass: f64,
) -> f64 {
    p.norm_squared() / (2.0 * mass) + model.value(q)
}

/// `H_ħ` (exact) or `H¹` (asymptotic).
pub fn reduced_hamiltonian(
    w: &ReducedState,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
    variant: HamiltonianVariant,
) -> Result<f64> {
    let (m, hbar) = (cfg.mass, cfg.hbar);
    let (a, b) = (w.a(), w.b());
    let b_inv = w.c.b_inverse();
    let a2b2 = a * a + b * b;
    let kinetic = w.p.norm_squared() / (2.0 * m);
    match variant {
        HamiltonianVariant::Exact => {
            let avg = gaussian_average(model, &w.q, b, hbar, cfg.averages)?;
            Ok(kinetic + hbar / (4.0 * m) * (&b_inv * a2b2).trace() + avg.value)
        }
        HamiltonianVariant::Asymptotic => {
            let inner = a2b2 / m + model.hessian(&w.q);
            Ok(kinetic + model.value(&w.q) + 0.25 * hbar * (&b_inv * inner).trace())
        }
    }
}
