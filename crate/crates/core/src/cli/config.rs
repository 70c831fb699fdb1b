//! JSON run configuration.
//!
//! ```json
//! {
//!   "dim": 2, "hbar": 0.005, "mass": 1.0, "dt": 0.01, "t_end": 50.0,
//!   "stride": 10,
//!   "potential": {"type": "quartic_radial"},
//!   "integrator": "variational_splitting",
//!   "averages": {"method": "analytic"},
//!   "initial": {"q": [1, 0], "p": [0, 1],
//!               "A": [[1, 0.5], [0.5, 1]], "B": [[1, 0.5], [0.5, 1]]},
//!   "sweep": {"hbar": [0.005, 0.05]}
//! }
//! ```
//!
//! `stride`, `integrator`, `averages`, `tolerances` and `sweep` are optional.
//! Unknown keys are rejected.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{GwpError, Result};
use crate::geometry::{SiegelPoint, Tolerances};
use crate::integrators::IntegratorKind;
use crate::potentials::{AverageMethod, PotentialSpec};
use crate::wavepacket::{ReducedState, SimulationConfig};

/// Initial reduced state; matrices are row lists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(rename = "B")]
    pub b: Vec<Vec<f64>>,
}

/// Grid over one parameter; each value produces one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Sweep {
    Hbar(Vec<f64>),
    Dt(Vec<f64>),
}

fn default_stride() -> usize {
    10
}

fn default_integrator() -> IntegratorKind {
    IntegratorKind::VariationalSplitting
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub dim: usize,
    pub hbar: f64,
    pub mass: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub potential: PotentialSpec,
    #[serde(default = "default_integrator")]
    pub integrator: IntegratorKind,
    #[serde(default)]
    pub averages: AverageMethod,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub initial: InitialState,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Sweep>,
}

fn matrix(rows: &[Vec<f64>], d: usize, name: &str) -> Result<DMatrix<f64>> {
    if rows.len() != d || rows.iter().any(|r| r.len() != d) {
        return Err(GwpError::InvalidConfig(format!("{name} must be {d}x{d}")));
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig =
            serde_json::from_str(text).map_err(|e| GwpError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| GwpError::InvalidConfig(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn simulation(&self) -> SimulationConfig {
        SimulationConfig {
            dim: self.dim,
            hbar: self.hbar,
            mass: self.mass,
            dt: self.dt,
            t_end: self.t_end,
            potential: self.potential.clone(),
            integrator: self.integrator,
            stride: self.stride,
            averages: self.averages,
            tolerances: self.tolerances,
        }
    }

    pub fn initial_state(&self) -> Result<ReducedState> {
        let d = self.dim;
        let init = &self.initial;
        if init.q.len() != d || init.p.len() != d {
            return Err(GwpError::InvalidConfig(format!(
                "initial q and p must have {d} entries"
            )));
        }
        let c = SiegelPoint::from_matrices(matrix(&init.a, d, "A")?, matrix(&init.b, d, "B")?)
            .map_err(|e| GwpError::InvalidConfig(format!("initial (A, B): {e}")))?;
        ReducedState::new(
            DVector::from_vec(init.q.clone()),
            DVector::from_vec(init.p.clone()),
            c,
        )
    }

    pub fn validate(&self) -> Result<()> {
        self.simulation().validate()?;
        self.initial_state()?;
        let hbars: Vec<f64> = match &self.sweep {
            Some(Sweep::Hbar(v)) => v.clone(),
            _ => vec![self.hbar],
        };
        if self.integrator == IntegratorKind::Rk4Full && hbars.iter().any(|h| *h <= 0.0) {
            // the unit-norm phase offset needs ln(πħ)
            return Err(GwpError::InvalidConfig("rk4_full needs hbar > 0".into()));
        }
        match &self.sweep {
            Some(Sweep::Hbar(v)) | Some(Sweep::Dt(v)) if v.is_empty() => {
                Err(GwpError::InvalidConfig("sweep needs at least one value".into()))
            }
            Some(sweep) => {
                for run in self.expand_with(sweep) {
                    run.simulation().validate()?;
                }
                Ok(())
            }
            None => Ok(()),
        }
    }

    fn expand_with(&self, sweep: &Sweep) -> Vec<RunConfig> {
        let base = RunConfig {
            sweep: None,
            ..self.clone()
        };
        match sweep {
            Sweep::Hbar(v) => v
                .iter()
                .map(|&hbar| RunConfig { hbar, ..base.clone() })
                .collect(),
            Sweep::Dt(v) => v
                .iter()
                .map(|&dt| RunConfig { dt, ..base.clone() })
                .collect(),
        }
    }

    /// One config per sweep value, or just this config without a sweep.
    pub fn expand(&self) -> Vec<RunConfig> {
        match &self.sweep {
            Some(s) => self.expand_with(s),
            None => vec![self.clone()],
        }
    }

    /// SHA-256 of the canonical JSON of the resolved config, hex encoded.
    pub fn content_hash(&self) -> String {
        let json = serde_json::to_string(self).expect("config serializes");
        Sha256::digest(json.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}
