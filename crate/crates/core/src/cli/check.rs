//! `check`: property suites run against a fixture, reported as JSON.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::config::RunConfig;
use super::{CliError, CliResult};
use crate::conservation::{
    angular_momentum_vector, expected_angular_momentum, hagedorn_noether,
    lift_consistency_residual, poisson_bracket, semiclassical_angular_momentum, Chart, SoMomentum,
};
use crate::dynamics::{reduced_hamiltonian, HamiltonianVariant};
use crate::error::Result;
use crate::integrators::{integrate, HagedornVerletStepper, Rk4ReducedStepper, SplittingStepper};
use crate::sampling::Sampler;
use crate::wavepacket::{HagedornState, ReducedState, SimulationConfig};

pub const SUITES: [&str; 7] = [
    "noether-reduced",
    "noether-hagedorn",
    "lift-consistency",
    "brackets",
    "expectation-identity",
    "constraints",
    "energy",
];

pub const DEFAULT_FIXTURE: &str = include_str!("../../fixtures/quartic2d.json");
pub const DEFAULT_SEED: u64 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckItem {
    pub name: String,
    pub value: f64,
    pub relation: Relation,
    pub threshold: f64,
    /// Distance to the threshold on the passing side; negative on failure.
    pub margin: f64,
    pub passed: bool,
}

impl CheckItem {
    fn new(name: &str, value: f64, relation: Relation, threshold: f64) -> Self {
        let margin = match relation {
            Relation::AtMost => threshold - value,
            Relation::AtLeast => value - threshold,
        };
        // NaN fails both ways
        let passed = margin >= 0.0;
        Self {
            name: name.into(),
            value,
            relation,
            threshold,
            margin,
            passed,
        }
    }

    fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtMost, threshold)
    }

    fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Self::new(name, value, Relation::AtLeast, threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub suite: String,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<CheckItem>,
}

fn every_step(run: &RunConfig) -> SimulationConfig {
    SimulationConfig {
        stride: 1,
        ..run.simulation()
    }
}

fn splitting_states(cfg: &SimulationConfig, w0: ReducedState) -> Result<Vec<ReducedState>> {
    let model = cfg.potential.build(cfg.dim)?;
    let st = SplittingStepper { model: model.as_ref(), cfg };
    Ok(integrate(&st, w0, cfg, &[])?.states)
}

fn hagedorn_states(cfg: &SimulationConfig, w0: &ReducedState) -> Result<Vec<HagedornState>> {
    let model = cfg.potential.build(cfg.dim)?;
    let st = HagedornVerletStepper { model: model.as_ref(), cfg };
    Ok(integrate(&st, HagedornState::from_reduced(w0, 0.0)?, cfg, &[])?.states)
}

fn noether_reduced(run: &RunConfig) -> Result<Vec<CheckItem>> {
    let cfg = every_step(run);
    let states = splitting_states(&cfg, run.initial_state()?)?;
    let j = |w: &ReducedState| semiclassical_angular_momentum(w, cfg.hbar).matrix().clone();
    let j0 = j(&states[0]);
    let scale = if j0.amax() > 0.0 { j0.amax() } else { 1.0 };
    let drift = states.iter().map(|w| (j(w) - &j0).amax()).fold(0.0, f64::max);
    Ok(vec![CheckItem::at_most("Jhbar_relative_drift", drift / scale, 1e-8)])
}

fn noether_hagedorn(run: &RunConfig) -> Result<Vec<CheckItem>> {
    let cfg = every_step(run);
    let states = hagedorn_states(&cfg, &run.initial_state()?)?;
    let map = SoMomentum { dim: cfg.dim };
    let noether = |h: &HagedornState| -> Result<DMatrix<f64>> {
        let z = DVector::from_iterator(2 * cfg.dim, h.q.iter().chain(h.p.iter()).copied());
        hagedorn_noether(&z, h.y(), &map)
    };
    let n0 = noether(&states[0])?;
    let mut drift: f64 = 0.0;
    for h in &states {
        drift = drift.max((noether(h)? - &n0).amax());
    }
    Ok(vec![CheckItem::at_most("dJ_Y_absolute_drift", drift, 1e-8)])
}

/// `π(Y(t))` from Hagedorn–Verlet against RK4 on the asymptotic reduced
/// system with the `ħ` force correction off, at the last record.
fn lift_residual(run: &RunConfig, dt: f64, t_end: f64) -> Result<f64> {
    let steps = (t_end / dt).round().max(1.0) as usize;
    let cfg = SimulationConfig {
        dt,
        t_end,
        stride: steps,
        ..run.simulation()
    };
    let w0 = run.initial_state()?;
    let hv = hagedorn_states(&cfg, &w0)?;
    let classical = SimulationConfig { hbar: 0.0, ..cfg.clone() };
    let model = cfg.potential.build(cfg.dim)?;
    let rk = integrate(
        &Rk4ReducedStepper {
            model: model.as_ref(),
            cfg: &classical,
            exact: false,
        },
        w0,
        &classical,
        &[],
    )?;
    let times: Vec<f64> = rk.times.clone();
    let pairs_h: Vec<_> = times.iter().zip(&hv).map(|(t, h)| (*t, h.y().clone())).collect();
    let pairs_c: Vec<_> = times.iter().zip(&rk.states).map(|(t, w)| (*t, w.c.clone())).collect();
    Ok(*lift_consistency_residual(&pairs_h, &pairs_c)?.last().expect("t = 0 is recorded"))
}

fn lift_consistency(run: &RunConfig) -> Result<Vec<CheckItem>> {
    let t_end = run.t_end.min(10.0);
    if t_end == 0.0 {
        return Ok(vec![CheckItem::at_most("residual", lift_residual(run, run.dt, 0.0)?, 1e-4)]);
    }
    let r1 = lift_residual(run, run.dt, t_end)?;
    let r2 = lift_residual(run, run.dt / 2.0, t_end)?;
    Ok(vec![
        CheckItem::at_most("residual", r1, 1e-4),
        CheckItem::at_least("halving_ratio", r1 / r2, 3.0),
        CheckItem::at_most("halving_ratio", r1 / r2, 5.0),
    ])
}

fn so3_component(c: &Chart, hbar: f64, k: usize) -> f64 {
    let j = c.angular_momentum(hbar);
    match k {
        0 => j[(2, 1)],
        1 => j[(0, 2)],
        _ => j[(1, 0)],
    }
}

fn brackets(run: &RunConfig, seed: u64) -> Result<Vec<CheckItem>> {
    let hbar = run.hbar;
    let mut s = Sampler::new(seed);
    let mut vector_err: f64 = 0.0;
    for _ in 0..50 {
        let w = s.reduced_state(3);
        let at = Chart::from_reduced(&w);
        for (a, b, k) in [(0, 1, 2), (1, 2, 0), (2, 0, 1)] {
            let got = poisson_bracket(
                &|c: &Chart| so3_component(c, hbar, a),
                &|c: &Chart| so3_component(c, hbar, b),
                &w,
                hbar,
            )?;
            vector_err = vector_err.max((got - so3_component(&at, hbar, k)).abs());
        }
    }
    // d = 4 so all four indices can differ
    let d = 4;
    let kr = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut index_err: f64 = 0.0;
    for _ in 0..50 {
        let w = s.reduced_state(d);
        let (j, k, r, q) = (s.index(d), s.index(d), s.index(d), s.index(d));
        let jm = Chart::from_reduced(&w).angular_momentum(hbar);
        let got = poisson_bracket(
            &|c: &Chart| c.angular_momentum(hbar)[(j, k)],
            &|c: &Chart| c.angular_momentum(hbar)[(r, q)],
            &w,
            hbar,
        )?;
        let expected = kr(k, r) * jm[(j, q)] - kr(k, q) * jm[(j, r)] + kr(j, q) * jm[(k, r)]
            - kr(j, r) * jm[(k, q)];
        index_err = index_err.max((got - expected).abs());
    }
    Ok(vec![
        CheckItem::at_most("vector_relation_max_error", vector_err, 1e-6),
        CheckItem::at_most("index_relation_max_error", index_err, 1e-6),
    ])
}

fn expectation_identity(run: &RunConfig, seed: u64) -> Result<Vec<CheckItem>> {
    let mut s = Sampler::new(seed);
    let cfg3 = SimulationConfig::new(3, run.hbar, run.mass);
    let mut random_err: f64 = 0.0;
    for _ in 0..50 {
        let w = s.reduced_state(3);
        let l = expected_angular_momentum(&w, &cfg3)?;
        let v = angular_momentum_vector(&semiclassical_angular_momentum(&w, cfg3.hbar))?;
        random_err = random_err.max((l - v).amax());
    }
    let w = run.initial_state()?;
    let l = expected_angular_momentum(&w, &run.simulation())?;
    let j = semiclassical_angular_momentum(&w, run.hbar);
    let fixture_err = match run.dim {
        2 => (l[0] - j.matrix()[(1, 0)]).abs(),
        3 => (l - angular_momentum_vector(&j)?).amax(),
        d => {
            return Err(crate::error::GwpError::Unsupported(format!(
                "the expectation identity is checked for d = 2 or 3, not {d}"
            )))
        }
    };
    Ok(vec![
        CheckItem::at_most("random_states_max_error", random_err, 1e-10),
        CheckItem::at_most("fixture_state_error", fixture_err, 1e-10),
    ])
}

fn constraints(run: &RunConfig) -> Result<Vec<CheckItem>> {
    let states = hagedorn_states(&every_step(run), &run.initial_state()?)?;
    let (mut r1, mut r2): (f64, f64) = (0.0, 0.0);
    for h in &states {
        let (a, b) = h.constraint_residuals();
        r1 = r1.max(a);
        r2 = r2.max(b);
    }
    Ok(vec![
        CheckItem::at_most("QtP-PtQ", r1, 1e-10),
        CheckItem::at_most("Q*P-P*Q-2iI", r2, 1e-10),
    ])
}

fn energy_deviation(run: &RunConfig, dt: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let cfg = SimulationConfig {
        dt,
        ..every_step(run)
    };
    let model = cfg.potential.build(cfg.dim)?;
    let states = splitting_states(&cfg, run.initial_state()?)?;
    let h = states
        .iter()
        .map(|w| reduced_hamiltonian(w, model.as_ref(), &cfg, HamiltonianVariant::Asymptotic))
        .collect::<Result<Vec<f64>>>()?;
    let times = (0..h.len()).map(|k| k as f64 * dt).collect();
    let rel = h.iter().map(|e| (e - h[0]).abs() / h[0].abs()).collect();
    Ok((times, rel))
}

fn energy(run: &RunConfig) -> Result<Vec<CheckItem>> {
    let (times, rel) = energy_deviation(run, run.dt)?;
    let bound = rel.iter().cloned().fold(0.0, f64::max);
    let mut items = vec![CheckItem::at_most("H1_relative_deviation", bound, 1e-4)];
    if run.t_end > 0.0 {
        let half = run.t_end / 2.0;
        let window = |late: bool| {
            times
                .iter()
                .zip(&rel)
                .filter(|(t, _)| (**t > half) == late)
                .fold(0.0_f64, |a, (_, r)| a.max(*r))
        };
        items.push(CheckItem::at_most("late_over_early_max", window(true) / window(false), 2.0));
        let (_, rel_half) = energy_deviation(run, run.dt / 2.0)?;
        let ratio = bound / rel_half.iter().cloned().fold(0.0, f64::max);
        items.push(CheckItem::at_least("halving_ratio", ratio, 3.0));
        items.push(CheckItem::at_most("halving_ratio", ratio, 5.0));
    }
    Ok(items)
}

fn unknown_suite(name: &str) -> CliError {
    CliError::Usage(format!("unknown suite `{name}`; expected one of {}", SUITES.join(", ")))
}

pub fn run_suite(suite: &str, run: &RunConfig, seed: u64) -> CliResult<CheckReport> {
    let checks = match suite {
        "noether-reduced" => noether_reduced(run),
        "noether-hagedorn" => noether_hagedorn(run),
        "lift-consistency" => lift_consistency(run),
        "brackets" => brackets(run, seed),
        "expectation-identity" => expectation_identity(run, seed),
        "constraints" => constraints(run),
        "energy" => energy(run),
        other => return Err(unknown_suite(other)),
    }?;
    Ok(CheckReport {
        suite: suite.into(),
        seed,
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

/// Loads the fixture (or the bundled quartic one) and runs the suite.
pub fn check(suite: &str, fixture: Option<&Path>, seed: u64) -> CliResult<CheckReport> {
    if !SUITES.contains(&suite) {
        return Err(unknown_suite(suite));
    }
    let run = match fixture {
        Some(p) => RunConfig::from_path(p),
        None => RunConfig::from_json(DEFAULT_FIXTURE),
    }
    .map_err(|e| CliError::Config(e.to_string()))?;
    run_suite(suite, &run, seed)
}
