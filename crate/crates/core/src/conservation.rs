//! Momentum maps and Noether quantities, the semiclassical Poisson bracket,
//! symmetry residuals and drift statistics.

use nalgebra::{DMatrix, DVector, Vector3};
use serde::{Deserialize, Serialize};

use crate::dynamics::{reduced_hamiltonian, HamiltonianVariant};
use crate::error::{GwpError, Result};
use crate::geometry::{
    diamond, hat, quotient_map, so_action_reduced, vee, AntisymMat, CMat, SiegelPoint, SymMat,
    SymplecticMatrix2d,
};
use crate::potentials::PotentialModel;
use crate::wavepacket::{chi_norm_squared, FullState, ReducedState, SimulationConfig};

/// Time series of a (possibly vector-valued) conserved quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantSeries {
    pub name: String,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl InvariantSeries {
    pub fn new(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            times: Vec::new(),
            values: Vec::new(),
        }
    }

    pub fn push(&mut self, t: f64, value: Vec<f64>) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if !(t > last) {
                return Err(GwpError::TimeGridMismatch(format!(
                    "{}: time {t} does not follow {last}",
                    self.name
                )));
            }
        }
        if let Some(first) = self.values.first() {
            if first.len() != value.len() {
                return Err(GwpError::DimensionMismatch(format!(
                    "{}: {} components, expected {}",
                    self.name,
                    value.len(),
                    first.len()
                )));
            }
        }
        self.times.push(t);
        self.values.push(value);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Value at the first record.
    pub fn reference(&self) -> Option<&[f64]> {
        self.values.first().map(Vec::as_slice)
    }

    /// Single component as a plain series.
    pub fn component(&self, k: usize) -> Vec<f64> {
        self.values.iter().map(|v| v[k]).collect()
    }
}

/// Drift statistics against the value at the first record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftReport {
    /// `max_t ‖v(t) − v(0)‖_max`.
    pub max_abs_drift: f64,
    /// `max_abs_drift / ‖v(0)‖_max`; equals `max_abs_drift` when `v(0) = 0`.
    pub max_rel_drift: f64,
    /// Largest componentwise `max_t v − min_t v`.
    pub peak_to_peak: f64,
}

pub fn drift_report(series: &InvariantSeries) -> Result<DriftReport> {
    let reference = series
        .reference()
        .ok_or_else(|| GwpError::EmptySeries(series.name.clone()))?;
    let mut max_abs_drift: f64 = 0.0;
    let mut lo = reference.to_vec();
    let mut hi = reference.to_vec();
    for v in &series.values {
        for (k, (&x, &x0)) in v.iter().zip(reference).enumerate() {
            max_abs_drift = max_abs_drift.max((x - x0).abs());
            lo[k] = lo[k].min(x);
            hi[k] = hi[k].max(x);
        }
    }
    let scale = reference.iter().fold(0.0_f64, |a, x| a.max(x.abs()));
    let peak_to_peak = lo
        .iter()
        .zip(&hi)
        .fold(0.0_f64, |a, (l, h)| a.max(h - l));
    Ok(DriftReport {
        max_abs_drift,
        max_rel_drift: if scale > 0.0 {
            max_abs_drift / scale
        } else {
            max_abs_drift
        },
        peak_to_peak,
    })
}

/// `J₀ = q ⋄ p`.
pub fn classical_angular_momentum(q: &DVector<f64>, p: &DVector<f64>) -> Result<AntisymMat> {
    diamond(q, p)
}

fn commutator(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    x * y - y * x
}

/// `J_ħ = q ⋄ p − (ħ/2)[B⁻¹, A]`.
pub fn semiclassical_angular_momentum(w: &ReducedState, hbar: f64) -> AntisymMat {
    let j0 = diamond(&w.q, &w.p).expect("state dimensions agree");
    let corr = commutator(&w.c.b_inverse(), w.a()) * (0.5 * hbar);
    AntisymMat::from_antisymmetric_part(&(j0.matrix() - corr))
}

/// Independent components of an `so(d)` element, entries `(i, j)` with
/// `i > j` in row-major order. For `d = 2` this is the single scalar
/// `M₂₁`.
pub fn so_components(m: &AntisymMat) -> Vec<f64> {
    let d = m.dim();
    let mut out = Vec::with_capacity(d * (d.saturating_sub(1)) / 2);
    for i in 0..d {
        for j in 0..i {
            out.push(m.matrix()[(i, j)]);
        }
    }
    out
}

/// A momentum map on classical phase space `z = (q, p) ∈ ℝ^{2d}`.
pub trait MomentumMap {
    /// Configuration dimension `d`.
    fn dim(&self) -> usize;

    fn value(&self, z: &DVector<f64>) -> DVector<f64>;

    /// `∂𝐉/∂z`, one row per component.
    fn gradient(&self, z: &DVector<f64>) -> DMatrix<f64>;
}

fn split(z: &DVector<f64>, d: usize) -> (DVector<f64>, DVector<f64>) {
    (z.rows(0, d).into_owned(), z.rows(d, d).into_owned())
}

/// `𝐉 = p`, generated by translations.
#[derive(Debug, Clone, Copy)]
pub struct LinearMomentum {
    pub dim: usize,
}

impl MomentumMap for LinearMomentum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, z: &DVector<f64>) -> DVector<f64> {
        split(z, self.dim).1
    }

    fn gradient(&self, _z: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let mut g = DMatrix::zeros(d, 2 * d);
        g.view_mut((0, d), (d, d)).fill_with_identity();
        g
    }
}

/// `𝐉 = q × p` for `d = 3`.
#[derive(Debug, Clone, Copy)]
pub struct AngularMomentum3;

impl MomentumMap for AngularMomentum3 {
    fn dim(&self) -> usize {
        3
    }

    fn value(&self, z: &DVector<f64>) -> DVector<f64> {
        let (q, p) = split(z, 3);
        let l = Vector3::new(q[0], q[1], q[2]).cross(&Vector3::new(p[0], p[1], p[2]));
        DVector::from_column_slice(l.as_slice())
    }

    /// `[−p̂ | q̂]`.
    fn gradient(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let (q, p) = split(z, 3);
        let mut g = DMatrix::zeros(3, 6);
        g.view_mut((0, 0), (3, 3))
            .copy_from(&(-hat(&Vector3::new(p[0], p[1], p[2])).matrix()));
        g.view_mut((0, 3), (3, 3))
            .copy_from(hat(&Vector3::new(q[0], q[1], q[2])).matrix());
        g
    }
}

/// `𝐉 = q ⋄ p` in any dimension, components as in [`so_components`].
#[derive(Debug, Clone, Copy)]
pub struct SoMomentum {
    pub dim: usize,
}

impl MomentumMap for SoMomentum {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, z: &DVector<f64>) -> DVector<f64> {
        let (q, p) = split(z, self.dim);
        DVector::from_vec(so_components(&diamond(&q, &p).expect("equal lengths")))
    }

    fn gradient(&self, z: &DVector<f64>) -> DMatrix<f64> {
        let d = self.dim;
        let (q, p) = split(z, d);
        let mut g = DMatrix::zeros(d * (d - 1) / 2, 2 * d);
        let mut row = 0;
        for i in 0..d {
            for j in 0..i {
                // J_ij = q_j p_i − q_i p_j
                g[(row, j)] += p[i];
                g[(row, i)] -= p[j];
                g[(row, d + i)] += q[j];
                g[(row, d + j)] -= q[i];
                row += 1;
            }
        }
        g
    }
}

fn check_phase_point(z: &DVector<f64>, j: &dyn MomentumMap) -> Result<()> {
    if z.len() != 2 * j.dim() {
        return Err(GwpError::DimensionMismatch(format!(
            "phase point of length {} for a momentum map on dimension {}",
            z.len(),
            j.dim()
        )));
    }
    Ok(())
}

/// `D𝐉(z) · Y`; every column is conserved by the Hagedorn flow of a
/// `G`-invariant Hamiltonian.
pub fn hagedorn_noether(
    z: &DVector<f64>,
    y: &SymplecticMatrix2d,
    j: &dyn MomentumMap,
) -> Result<DMatrix<f64>> {
    check_phase_point(z, j)?;
    if y.dim() != j.dim() {
        return Err(GwpError::DimensionMismatch(format!(
            "Y in Sp({}) for a momentum map on dimension {}",
            2 * y.dim(),
            j.dim()
        )));
    }
    Ok(j.gradient(z) * y.matrix())
}

/// `𝒥 = q̂ P − p̂ Q` for `d = 3`.
pub fn hagedorn_so3_invariant(
    q: &DVector<f64>,
    p: &DVector<f64>,
    qm: &CMat,
    pm: &CMat,
) -> Result<CMat> {
    if q.len() != 3 || p.len() != 3 || qm.nrows() != 3 || pm.nrows() != 3 {
        return Err(GwpError::Unsupported(
            "the SO(3) Hagedorn invariant needs d = 3".into(),
        ));
    }
    let qh = hat(&Vector3::new(q[0], q[1], q[2]));
    let ph = hat(&Vector3::new(p[0], p[1], p[2]));
    Ok(pm.left_mul_real(qh.matrix()).sub(&qm.left_mul_real(ph.matrix())))
}

/// `J_𝓜 = −ħ ‖χ‖²`.
pub fn s1_momentum_map(y: &FullState, cfg: &SimulationConfig) -> f64 {
    -cfg.hbar * chi_norm_squared(y, cfg)
}

/// Coordinates `(q, p, A, G = B⁻¹)` in which the semiclassical bracket is
/// canonical.
#[derive(Debug, Clone, PartialEq)]
pub struct Chart {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub a: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

impl Chart {
    pub fn from_reduced(w: &ReducedState) -> Self {
        Self {
            q: w.q.clone(),
            p: w.p.clone(),
            a: w.a().clone(),
            g: w.c.b_inverse(),
        }
    }

    pub fn to_reduced(&self) -> Result<ReducedState> {
        let b = self
            .g
            .clone()
            .try_inverse()
            .ok_or(GwpError::Singular("B⁻¹ in chart"))?;
        let c = SiegelPoint::new(
            SymMat::with_tol(self.a.clone(), f64::INFINITY)?,
            SymMat::with_tol(b, f64::INFINITY)?,
        )?;
        ReducedState::new(self.q.clone(), self.p.clone(), c)
    }

    /// `J_ħ = q ⋄ p − (ħ/2)[G, A]`, without inverting `G`.
    pub fn angular_momentum(&self, hbar: f64) -> DMatrix<f64> {
        let d = self.q.len();
        let j0 = DMatrix::from_fn(d, d, |i, j| self.q[j] * self.p[i] - self.q[i] * self.p[j]);
        j0 - commutator(&self.g, &self.a) * (0.5 * hbar)
    }
}

/// Gradient of a scalar field in chart coordinates; matrix parts are the
/// symmetric gradients, `dF = Σ_jk (∂F/∂A)_jk dA_jk`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChartGradient {
    pub q: DVector<f64>,
    pub p: DVector<f64>,
    pub a: DMatrix<f64>,
    pub g: DMatrix<f64>,
}

fn fd_step(x: f64) -> f64 {
    1e-6 * (1.0 + x.abs())
}

/// Central finite-difference gradient with step `1e-6·(1 + |coordinate|)`.
pub fn chart_gradient(f: &dyn Fn(&Chart) -> f64, at: &Chart) -> ChartGradient {
    let d = at.q.len();
    let central = |perturb: &dyn Fn(&mut Chart, f64), x: f64| {
        let h = fd_step(x);
        let mut plus = at.clone();
        let mut minus = at.clone();
        perturb(&mut plus, h);
        perturb(&mut minus, -h);
        (f(&plus) - f(&minus)) / (2.0 * h)
    };
    let q = DVector::from_fn(d, |i, _| central(&|c, h| c.q[i] += h, at.q[i]));
    let p = DVector::from_fn(d, |i, _| central(&|c, h| c.p[i] += h, at.p[i]));
    let mut a = DMatrix::zeros(d, d);
    let mut g = DMatrix::zeros(d, d);
    for j in 0..d {
        for k in j..d {
            // symmetric perturbation moves both (j,k) and (k,j)
            let factor = if j == k { 1.0 } else { 0.5 };
            let da = factor
                * central(
                    &|c, h| {
                        c.a[(j, k)] += h;
                        if j != k {
                            c.a[(k, j)] += h;
                        }
                    },
                    at.a[(j, k)],
                );
            let dg = factor
                * central(
                    &|c, h| {
                        c.g[(j, k)] += h;
                        if j != k {
                            c.g[(k, j)] += h;
                        }
                    },
                    at.g[(j, k)],
                );
            a[(j, k)] = da;
            a[(k, j)] = da;
            g[(j, k)] = dg;
            g[(k, j)] = dg;
        }
    }
    ChartGradient { q, p, a, g }
}

/// `{F, G}_ħ = ∂_qF·∂_pG − ∂_qG·∂_pF + (4/ħ) Σ (∂F/∂B⁻¹ ∂G/∂A − ∂G/∂B⁻¹ ∂F/∂A)`.
pub fn bracket_from_gradients(f: &ChartGradient, g: &ChartGradient, hbar: f64) -> Result<f64> {
    if hbar == 0.0 {
        return Err(GwpError::ZeroHbar);
    }
    let canonical = f.q.dot(&g.p) - g.q.dot(&f.p);
    let matrix = f.g.component_mul(&g.a).sum() - g.g.component_mul(&f.a).sum();
    Ok(canonical + 4.0 / hbar * matrix)
}

/// Semiclassical bracket of two scalar fields at `w`, by finite differences.
pub fn poisson_bracket(
    f: &dyn Fn(&Chart) -> f64,
    g: &dyn Fn(&Chart) -> f64,
    w: &ReducedState,
    hbar: f64,
) -> Result<f64> {
    if hbar == 0.0 {
        return Err(GwpError::ZeroHbar);
    }
    let at = Chart::from_reduced(w);
    bracket_from_gradients(&chart_gradient(f, &at), &chart_gradient(g, &at), hbar)
}

/// `⟨ψ₀, (x̂ × p̂) ψ₀⟩` from Gaussian moments: with `Σ = (ħ/2)B⁻¹`,
/// `⟨x_i p̂_j⟩ = q_i p_j + (CΣ)_ji`. Returns three components for `d = 3`
/// and the scalar `⟨x₁p̂₂ − x₂p̂₁⟩` for `d = 2`.
pub fn expected_angular_momentum(w: &ReducedState, cfg: &SimulationConfig) -> Result<DVector<f64>> {
    let d = w.dim();
    let sigma = w.c.b_inverse() * (0.5 * cfg.hbar);
    // only the real part survives antisymmetrization
    let a_sigma = w.a() * &sigma;
    let xp = |i: usize, j: usize| w.q[i] * w.p[j] + a_sigma[(j, i)];
    let l = |i: usize, j: usize| xp(i, j) - xp(j, i);
    match d {
        2 => Ok(DVector::from_vec(vec![l(0, 1)])),
        3 => Ok(DVector::from_vec(vec![l(1, 2), l(2, 0), l(0, 1)])),
        _ => Err(GwpError::Unsupported(format!(
            "angular momentum expectation needs d = 2 or 3, got {d}"
        ))),
    }
}

/// `vee(J)` for `d = 3`, or `J₂₁` for `d = 2`.
pub fn angular_momentum_vector(j: &AntisymMat) -> Result<DVector<f64>> {
    match j.dim() {
        2 => Ok(DVector::from_vec(vec![j.matrix()[(1, 0)]])),
        3 => Ok(DVector::from_column_slice(vee(j)?.as_slice())),
        d => Err(GwpError::Unsupported(format!(
            "angular momentum vector needs d = 2 or 3, got {d}"
        ))),
    }
}

/// `𝐉̃(δz) = d𝐉(z) · δz`.
pub fn first_variation_noether(
    z: &DVector<f64>,
    dz: &DVector<f64>,
    j: &dyn MomentumMap,
) -> Result<DVector<f64>> {
    check_phase_point(z, j)?;
    check_phase_point(dz, j)?;
    Ok(j.gradient(z) * dz)
}

/// `‖J_ħ(Γ_R w) − R J_ħ(w) Rᵀ‖_max`.
pub fn equivariance_residual(w: &ReducedState, r: &DMatrix<f64>, hbar: f64) -> Result<f64> {
    let rotated = so_action_reduced(r, w)?;
    let lhs = semiclassical_angular_momentum(&rotated, hbar);
    let rhs = r * semiclassical_angular_momentum(w, hbar).matrix() * r.transpose();
    Ok((lhs.matrix() - rhs).amax())
}

/// `|H(Γ_R w) − H(w)|`.
pub fn invariance_residual(
    variant: HamiltonianVariant,
    w: &ReducedState,
    r: &DMatrix<f64>,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> Result<f64> {
    let rotated = so_action_reduced(r, w)?;
    Ok((reduced_hamiltonian(&rotated, model, cfg, variant)?
        - reduced_hamiltonian(w, model, cfg, variant)?)
    .abs())
}

/// `‖π(Y(t)) − C(t)‖_max` per record of two trajectories on the same grid.
pub fn lift_consistency_residual(
    hagedorn: &[(f64, SymplecticMatrix2d)],
    reduced: &[(f64, SiegelPoint)],
) -> Result<Vec<f64>> {
    if hagedorn.len() != reduced.len() {
        return Err(GwpError::TimeGridMismatch(format!(
            "{} Hagedorn records vs {} reduced records",
            hagedorn.len(),
            reduced.len()
        )));
    }
    hagedorn
        .iter()
        .zip(reduced)
        .map(|((ta, y), (tb, c))| {
            if (ta - tb).abs() > 1e-12 * (1.0 + ta.abs()) {
                return Err(GwpError::TimeGridMismatch(format!("t = {ta} vs t = {tb}")));
            }
            Ok(quotient_map(y)?.distance_max(c))
        })
        .collect()
}
