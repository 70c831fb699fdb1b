//! Fixed-step time integrators and the trajectory driver.
//!
//! Störmer–Verlet and its Hagedorn extension are kick-drift-kick. The
//! variational splitting integrates `H¹ = T + W` as `W/2 ∘ T ∘ W/2`, with
//!
//! ```text
//! T = p²/2m + (ħ/4m) tr(B⁻¹(A² + B²))     W = V(q) + (ħ/4) tr(B⁻¹ ∇²V(q))
//! ```
//!
//! Both subflows are solved exactly, so every substep is symplectic and, for
//! rotation-invariant `V`, conserves `J_ħ` to roundoff.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::conservation::InvariantSeries;
use crate::dynamics::{
    first_variation_rhs, hagedorn_rhs, heller_asymptotic_rhs, heller_full_rhs,
    heller_reduced_rhs, trace_correction_gradient, FirstVariationState, TangentReduced,
};
use crate::error::{GwpError, Result};
use crate::geometry::{symmetric_siegel, CMat, SiegelPoint, SymMat, SymplecticMatrix2d};
use crate::potentials::PotentialModel;
use crate::wavepacket::{FullState, HagedornState, ReducedState, SimulationConfig};

/// Time stepper selected by a run configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IntegratorKind {
    /// Splitting of `H¹` on `(q, p, A, B)`.
    VariationalSplitting,
    /// Kick-drift-kick on `(q, p, Q, P, S)`.
    HagedornVerlet,
    /// RK4 on the asymptotic reduced system.
    Rk4Asymptotic,
    /// RK4 on the reduced system with exact Gaussian averages.
    Rk4Exact,
    /// RK4 on the six-equation system including `φ` and `δ`.
    Rk4Full,
}

/// One kick-drift-kick step of `H = p²/2m + V(q)`.
pub fn stormer_verlet_step(
    q: &DVector<f64>,
    p: &DVector<f64>,
    dt: f64,
    model: &dyn PotentialModel,
    mass: f64,
) -> (DVector<f64>, DVector<f64>) {
    let p_half = p - 0.5 * dt * model.gradient(q);
    let q_new = q + &p_half * (dt / mass);
    let p_new = &p_half - 0.5 * dt * model.gradient(&q_new);
    (q_new, p_new)
}

/// Kick-drift-kick on the Hagedorn system. Kicks act on `(p, P)` through
/// `(∇V(q), ∇²V(q) Q)`, drifts on `(q, Q)`; each substep is a linear
/// symplectic map on `Y`, so both constraints hold to roundoff.
pub fn hagedorn_verlet_step(
    h: &HagedornState,
    dt: f64,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> Result<HagedornState> {
    let m = cfg.mass;
    let d = h.dim();
    let mut y = h.y().matrix().clone();
    let kick = |y: &mut DMatrix<f64>, q: &DVector<f64>| {
        let top = y.rows(0, d).into_owned();
        let dp = model.hessian(q) * top * (0.5 * dt);
        let mut bottom = y.rows_mut(d, d);
        bottom -= dp;
    };

    let p_half = &h.p - 0.5 * dt * model.gradient(&h.q);
    kick(&mut y, &h.q);

    let q_new = &h.q + &p_half * (dt / m);
    let bottom = y.rows(d, d).into_owned();
    let mut top = y.rows_mut(0, d);
    top += bottom * (dt / m);

    let p_new = &p_half - 0.5 * dt * model.gradient(&q_new);
    kick(&mut y, &q_new);

    let s = h.s
        + dt * (p_half.norm_squared() / (2.0 * m)
            - 0.5 * (model.value(&h.q) + model.value(&q_new)));
    HagedornState::from_y_unchecked(q_new, p_new, SymplecticMatrix2d::from_matrix_unchecked(y), s)
}

/// Exact flow of `W` for time `t`: `q`, `B` frozen,
/// `p ← p − t[∇V + (ħ/4)∂_q tr(B⁻¹∇²V)]`, `A ← A − t ∇²V`.
pub fn potential_flow(
    w: &ReducedState,
    t: f64,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> Result<ReducedState> {
    let mut force = model.gradient(&w.q);
    if cfg.hbar != 0.0 {
        force += 0.25 * cfg.hbar * trace_correction_gradient(model, &w.q, &w.c.b_inverse());
    }
    let a = w.a() - model.hessian(&w.q) * t;
    let c = SiegelPoint::new(
        SymMat::with_tol(a, f64::INFINITY)?,
        w.c.b().clone(),
    )?;
    ReducedState::new(w.q.clone(), &w.p - force * t, c)
}

/// Exact flow of `T` for time `t`: `p` frozen, `q ← q + t p/m`,
/// `C ← C (I + (t/m) C)⁻¹`.
pub fn kinetic_flow(w: &ReducedState, t: f64, cfg: &SimulationConfig) -> Result<ReducedState> {
    let c = w.c.to_cmat();
    let denom = CMat::identity(w.dim()).add(&c.scale(t / cfg.mass));
    let inv = denom
        .try_inverse()
        .map_err(|_| GwpError::Singular("I + (t/m)C in the kinetic flow"))?;
    let c_new = symmetric_siegel(&c.mul(&inv))?;
    ReducedState::new(&w.q + &w.p * (t / cfg.mass), w.p.clone(), c_new)
}

/// One step of `W/2 ∘ T ∘ W/2`.
pub fn variational_splitting_step(
    w: &ReducedState,
    dt: f64,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> Result<ReducedState> {
    let w = potential_flow(w, 0.5 * dt, model, cfg)?;
    let w = kinetic_flow(&w, dt, cfg)?;
    potential_flow(&w, 0.5 * dt, model, cfg)
}

/// Classical fourth-order Runge–Kutta step on a flat state vector.
pub fn rk4_step<F>(f: F, y: &[f64], dt: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> {
        a.iter().zip(b).map(|(x, k)| x + s * k).collect()
    };
    let k1 = f(y)?;
    let k2 = f(&axpy(y, 0.5 * dt, &k1))?;
    let k3 = f(&axpy(y, 0.5 * dt, &k2))?;
    let k4 = f(&axpy(y, dt, &k3))?;
    Ok(y.iter()
        .enumerate()
        .map(|(i, x)| x + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// `[q, p, A (column-major), B (column-major)]`.
pub fn pack_reduced(w: &ReducedState) -> Vec<f64> {
    let mut v = Vec::with_capacity(2 * w.dim() * (1 + w.dim()));
    v.extend(w.q.iter());
    v.extend(w.p.iter());
    v.extend(w.a().iter());
    v.extend(w.b().iter());
    v
}

pub fn unpack_reduced(v: &[f64], d: usize) -> Result<ReducedState> {
    let dd = d * d;
    if v.len() != 2 * d + 2 * dd {
        return Err(GwpError::DimensionMismatch(format!(
            "packed reduced state of length {} for d = {d}",
            v.len()
        )));
    }
    let q = DVector::from_column_slice(&v[..d]);
    let p = DVector::from_column_slice(&v[d..2 * d]);
    let a = DMatrix::from_column_slice(d, d, &v[2 * d..2 * d + dd]);
    let b = DMatrix::from_column_slice(d, d, &v[2 * d + dd..2 * d + 2 * dd]);
    let c = SiegelPoint::new(
        SymMat::with_tol(a, f64::INFINITY)?,
        SymMat::with_tol(b, f64::INFINITY)?,
    )?;
    ReducedState::new(q, p, c)
}

fn pack_tangent(t: &TangentReduced) -> Vec<f64> {
    let mut v = Vec::new();
    v.extend(t.q.iter());
    v.extend(t.p.iter());
    v.extend(t.a.iter());
    v.extend(t.b.iter());
    v
}

pub fn pack_full(y: &FullState) -> Vec<f64> {
    let mut v = pack_reduced(&y.reduced);
    v.push(y.phi);
    v.push(y.delta);
    v
}

pub fn unpack_full(v: &[f64], d: usize) -> Result<FullState> {
    let n = v.len();
    if n != 2 * d + 2 * d * d + 2 {
        return Err(GwpError::DimensionMismatch(format!(
            "packed full state of length {n} for d = {d}"
        )));
    }
    Ok(FullState {
        reduced: unpack_reduced(&v[..n - 2], d)?,
        phi: v[n - 2],
        delta: v[n - 1],
    })
}

/// `[q, p, Y (column-major), S]`.
pub fn pack_hagedorn(h: &HagedornState) -> Vec<f64> {
    let mut v = Vec::new();
    v.extend(h.q.iter());
    v.extend(h.p.iter());
    v.extend(h.y().matrix().iter());
    v.push(h.s);
    v
}

pub fn unpack_hagedorn(v: &[f64], d: usize) -> Result<HagedornState> {
    let n = v.len();
    if n != 2 * d + 4 * d * d + 1 {
        return Err(GwpError::DimensionMismatch(format!(
            "packed Hagedorn state of length {n} for d = {d}"
        )));
    }
    HagedornState::from_y_unchecked(
        DVector::from_column_slice(&v[..d]),
        DVector::from_column_slice(&v[d..2 * d]),
        SymplecticMatrix2d::from_matrix_unchecked(DMatrix::from_column_slice(
            2 * d,
            2 * d,
            &v[2 * d..n - 1],
        )),
        v[n - 1],
    )
}

/// A fixed-step map on some state type.
pub trait Stepper {
    type State: Clone;

    fn step(&self, state: &Self::State, dt: f64) -> Result<Self::State>;

    /// Rejects states the run should not continue from.
    fn check(&self, _state: &Self::State) -> Result<()> {
        Ok(())
    }
}

pub struct SplittingStepper<'a> {
    pub model: &'a dyn PotentialModel,
    pub cfg: &'a SimulationConfig,
}

impl Stepper for SplittingStepper<'_> {
    type State = ReducedState;

    fn step(&self, w: &ReducedState, dt: f64) -> Result<ReducedState> {
        variational_splitting_step(w, dt, self.model, self.cfg)
    }
}

pub struct HagedornVerletStepper<'a> {
    pub model: &'a dyn PotentialModel,
    pub cfg: &'a SimulationConfig,
}

fn check_hagedorn(h: &HagedornState, tol: f64) -> Result<()> {
    let (r1, r2) = h.constraint_residuals();
    if !(r1 <= tol && r2 <= tol) {
        return Err(GwpError::ConstraintViolation { r1, r2 });
    }
    Ok(())
}

impl Stepper for HagedornVerletStepper<'_> {
    type State = HagedornState;

    fn step(&self, h: &HagedornState, dt: f64) -> Result<HagedornState> {
        hagedorn_verlet_step(h, dt, self.model, self.cfg)
    }

    fn check(&self, h: &HagedornState) -> Result<()> {
        check_hagedorn(h, self.cfg.tolerances.hagedorn_constraint)
    }
}

/// RK4 on `(q, p, A, B)` with either exact or asymptotic averages.
pub struct Rk4ReducedStepper<'a> {
    pub model: &'a dyn PotentialModel,
    pub cfg: &'a SimulationConfig,
    pub exact: bool,
}

impl Stepper for Rk4ReducedStepper<'_> {
    type State = ReducedState;

    fn step(&self, w: &ReducedState, dt: f64) -> Result<ReducedState> {
        let d = w.dim();
        let out = rk4_step(
            |v| {
                let w = unpack_reduced(v, d)?;
                let t = if self.exact {
                    heller_reduced_rhs(&w, self.model, self.cfg)?
                } else {
                    heller_asymptotic_rhs(&w, self.model, self.cfg)
                };
                Ok(pack_tangent(&t))
            },
            &pack_reduced(w),
            dt,
        )?;
        unpack_reduced(&out, d)
    }
}

pub struct Rk4FullStepper<'a> {
    pub model: &'a dyn PotentialModel,
    pub cfg: &'a SimulationConfig,
}

impl Stepper for Rk4FullStepper<'_> {
    type State = FullState;

    fn step(&self, y: &FullState, dt: f64) -> Result<FullState> {
        let d = y.reduced.dim();
        let out = rk4_step(
            |v| {
                let y = unpack_full(v, d)?;
                let t = heller_full_rhs(&y, self.model, self.cfg)?;
                let mut out = pack_tangent(&t.reduced);
                out.push(t.phi);
                out.push(t.delta);
                Ok(out)
            },
            &pack_full(y),
            dt,
        )?;
        unpack_full(&out, d)
    }
}

pub struct Rk4HagedornStepper<'a> {
    pub model: &'a dyn PotentialModel,
    pub cfg: &'a SimulationConfig,
}

impl Stepper for Rk4HagedornStepper<'_> {
    type State = HagedornState;

    fn step(&self, h: &HagedornState, dt: f64) -> Result<HagedornState> {
        let d = h.dim();
        let out = rk4_step(
            |v| {
                let h = unpack_hagedorn(v, d)?;
                let t = hagedorn_rhs(&h, self.model, self.cfg);
                let mut out = Vec::new();
                out.extend(t.q.iter());
                out.extend(t.p.iter());
                out.extend(t.y.iter());
                out.push(t.s);
                Ok(out)
            },
            &pack_hagedorn(h),
            dt,
        )?;
        unpack_hagedorn(&out, d)
    }

    fn check(&self, h: &HagedornState) -> Result<()> {
        check_hagedorn(h, self.cfg.tolerances.hagedorn_constraint)
    }
}

pub struct Rk4FirstVariationStepper<'a> {
    pub model: &'a dyn PotentialModel,
    pub cfg: &'a SimulationConfig,
}

impl Stepper for Rk4FirstVariationStepper<'_> {
    type State = FirstVariationState;

    fn step(&self, s: &FirstVariationState, dt: f64) -> Result<FirstVariationState> {
        let n = s.z.len();
        let mut flat: Vec<f64> = s.z.iter().copied().collect();
        flat.extend(s.dz.iter());
        let out = rk4_step(
            |v| {
                let st = FirstVariationState::new(
                    DVector::from_column_slice(&v[..n]),
                    DVector::from_column_slice(&v[n..]),
                )?;
                let t = first_variation_rhs(&st, self.model, self.cfg);
                Ok(t.z.iter().chain(t.dz.iter()).copied().collect())
            },
            &flat,
            dt,
        )?;
        FirstVariationState::new(
            DVector::from_column_slice(&out[..n]),
            DVector::from_column_slice(&out[n..]),
        )
    }
}

/// A named quantity evaluated at every record.
pub struct Invariant<'a, S> {
    pub name: String,
    pub eval: Box<dyn Fn(&S) -> Result<Vec<f64>> + 'a>,
}

impl<'a, S> Invariant<'a, S> {
    pub fn new(name: impl Into<String>, eval: impl Fn(&S) -> Result<Vec<f64>> + 'a) -> Self {
        Self {
            name: name.into(),
            eval: Box::new(eval),
        }
    }
}

/// Recorded states and invariants.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord<S> {
    pub times: Vec<f64>,
    pub states: Vec<S>,
    pub invariants: Vec<InvariantSeries>,
}

impl<S> TrajectoryRecord<S> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn invariant(&self, name: &str) -> Option<&InvariantSeries> {
        self.invariants.iter().find(|s| s.name == name)
    }

    pub fn last(&self) -> Option<&S> {
        self.states.last()
    }
}

fn invalid(step: usize, e: GwpError) -> GwpError {
    match e {
        GwpError::StateInvalid { .. } => e,
        other => GwpError::StateInvalid {
            step,
            reason: other.to_string(),
        },
    }
}

/// Runs `cfg.steps()` steps of size `cfg.dt`, recording every `cfg.stride`
/// steps and at `t = 0`; the record count is `⌊steps / stride⌋ + 1`.
pub fn integrate<T: Stepper>(
    stepper: &T,
    state0: T::State,
    cfg: &SimulationConfig,
    invariants: &[Invariant<'_, T::State>],
) -> Result<TrajectoryRecord<T::State>> {
    if cfg.stride == 0 {
        return Err(GwpError::InvalidConfig("stride must be positive".into()));
    }
    let steps = cfg.steps();
    let mut rec = TrajectoryRecord {
        times: Vec::with_capacity(steps / cfg.stride + 1),
        states: Vec::with_capacity(steps / cfg.stride + 1),
        invariants: invariants.iter().map(|i| InvariantSeries::new(&i.name)).collect(),
    };
    let record = |rec: &mut TrajectoryRecord<T::State>, k: usize, s: &T::State| -> Result<()> {
        let t = k as f64 * cfg.dt;
        for (inv, series) in invariants.iter().zip(rec.invariants.iter_mut()) {
            series.push(t, (inv.eval)(s).map_err(|e| invalid(k, e))?)?;
        }
        rec.times.push(t);
        rec.states.push(s.clone());
        Ok(())
    };
    stepper.check(&state0).map_err(|e| invalid(0, e))?;
    record(&mut rec, 0, &state0)?;
    let mut state = state0;
    for k in 1..=steps {
        state = stepper.step(&state, cfg.dt).map_err(|e| invalid(k, e))?;
        stepper.check(&state).map_err(|e| invalid(k, e))?;
        if k % cfg.stride == 0 {
            record(&mut rec, k, &state)?;
        }
    }
    Ok(rec)
}
