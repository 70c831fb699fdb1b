//! `simulate`: run one config (or a sweep) and write CSV plus metadata.
//!
//! Column order is stable: `t`, `q_i`, `p_i`, `A_ij`, `B_ij` (row-major,
//! 1-based), the energy (`H1` for the asymptotic integrators, `Hhbar` for
//! the exact ones), `Jhbar_ij` and `J0_ij` for `i > j`, then `phi`,
//! `delta`, `JM` for the full system or `S` for Hagedorn–Verlet.

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::config::RunConfig;
use super::{CliError, CliResult};
use crate::conservation::{classical_angular_momentum, s1_momentum_map, semiclassical_angular_momentum, so_components};
use crate::dynamics::{reduced_hamiltonian, HamiltonianVariant};
use crate::error::Result;
use crate::integrators::{
    integrate, HagedornVerletStepper, IntegratorKind, Rk4FullStepper, Rk4ReducedStepper,
    SplittingStepper,
};
use crate::potentials::PotentialModel;
use crate::wavepacket::{hagedorn_to_reduced, unit_norm_delta, FullState, HagedornState, ReducedState, SimulationConfig};

/// Recorded trajectory flattened to named columns.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k]).collect())
    }
}

fn variant(kind: IntegratorKind) -> HamiltonianVariant {
    match kind {
        IntegratorKind::Rk4Exact | IntegratorKind::Rk4Full => HamiltonianVariant::Exact,
        _ => HamiltonianVariant::Asymptotic,
    }
}

/// The CSV header for a dimension and integrator.
pub fn header(d: usize, kind: IntegratorKind) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    h.extend((1..=d).map(|i| format!("q_{i}")));
    h.extend((1..=d).map(|i| format!("p_{i}")));
    for name in ["A", "B"] {
        for i in 1..=d {
            h.extend((1..=d).map(|j| format!("{name}_{i}{j}")));
        }
    }
    h.push(match variant(kind) {
        HamiltonianVariant::Exact => "Hhbar".into(),
        HamiltonianVariant::Asymptotic => "H1".into(),
    });
    for name in ["Jhbar", "J0"] {
        for i in 1..=d {
            h.extend((1..i).map(|j| format!("{name}_{i}{j}")));
        }
    }
    match kind {
        IntegratorKind::Rk4Full => h.extend(["phi", "delta", "JM"].map(String::from)),
        IntegratorKind::HagedornVerlet => h.push("S".into()),
        _ => {}
    }
    h
}

fn reduced_row(
    t: f64,
    w: &ReducedState,
    model: &dyn PotentialModel,
    cfg: &SimulationConfig,
) -> Result<Vec<f64>> {
    let mut row = vec![t];
    row.extend(w.q.iter());
    row.extend(w.p.iter());
    for m in [w.a(), w.b()] {
        for i in 0..w.dim() {
            row.extend(m.row(i).iter());
        }
    }
    row.push(reduced_hamiltonian(w, model, cfg, variant(cfg.integrator))?);
    row.extend(so_components(&semiclassical_angular_momentum(w, cfg.hbar)));
    row.extend(so_components(&classical_angular_momentum(&w.q, &w.p)?));
    Ok(row)
}

/// Integrates the run and tabulates every record.
pub fn run_table(run: &RunConfig) -> Result<Table> {
    let cfg = run.simulation();
    let model = cfg.potential.build(cfg.dim)?;
    let model = model.as_ref();
    let w0 = run.initial_state()?;
    let mut rows = Vec::new();
    match cfg.integrator {
        IntegratorKind::VariationalSplitting => {
            let rec = integrate(&SplittingStepper { model, cfg: &cfg }, w0, &cfg, &[])?;
            for (t, w) in rec.times.iter().zip(&rec.states) {
                rows.push(reduced_row(*t, w, model, &cfg)?);
            }
        }
        IntegratorKind::Rk4Asymptotic | IntegratorKind::Rk4Exact => {
            let exact = cfg.integrator == IntegratorKind::Rk4Exact;
            let rec = integrate(&Rk4ReducedStepper { model, cfg: &cfg, exact }, w0, &cfg, &[])?;
            for (t, w) in rec.times.iter().zip(&rec.states) {
                rows.push(reduced_row(*t, w, model, &cfg)?);
            }
        }
        IntegratorKind::HagedornVerlet => {
            let h0 = HagedornState::from_reduced(&w0, 0.0)?;
            let rec = integrate(&HagedornVerletStepper { model, cfg: &cfg }, h0, &cfg, &[])?;
            for (t, h) in rec.times.iter().zip(&rec.states) {
                let mut row = reduced_row(*t, &hagedorn_to_reduced(h)?, model, &cfg)?;
                row.push(h.s);
                rows.push(row);
            }
        }
        IntegratorKind::Rk4Full => {
            let y0 = FullState {
                delta: unit_norm_delta(&w0, cfg.hbar),
                reduced: w0,
                phi: 0.0,
            };
            let rec = integrate(&Rk4FullStepper { model, cfg: &cfg }, y0, &cfg, &[])?;
            for (t, y) in rec.times.iter().zip(&rec.states) {
                let mut row = reduced_row(*t, &y.reduced, model, &cfg)?;
                row.extend([y.phi, y.delta, s1_momentum_map(y, &cfg)]);
                rows.push(row);
            }
        }
    }
    Ok(Table {
        header: header(cfg.dim, cfg.integrator),
        rows,
    })
}

/// 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_csv(table: &Table, path: &Path) -> CliResult<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::Usage(e.to_string()))?;
    let csv_err = |e: csv::Error| CliError::Usage(format!("{}: {e}", path.display()));
    w.write_record(&table.header).map_err(csv_err)?;
    for row in &table.rows {
        w.write_record(row.iter().map(|x| format_number(*x))).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Library {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Metadata<'a> {
    library: Library,
    config_sha256: String,
    records: usize,
    columns: &'a [String],
    config: &'a RunConfig,
}

fn write_metadata(run: &RunConfig, table: &Table, path: &Path) -> CliResult<()> {
    let meta = Metadata {
        library: Library {
            name: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
        },
        config_sha256: run.content_hash(),
        records: table.rows.len(),
        columns: &table.header,
        config: run,
    };
    let text = serde_json::to_string_pretty(&meta).expect("metadata serializes");
    fs::write(path, text + "\n")?;
    Ok(())
}

fn run_one(run: &RunConfig, csv_path: &Path, meta_path: &Path) -> CliResult<()> {
    let table = run_table(run)?;
    write_csv(&table, csv_path)?;
    write_metadata(run, &table, meta_path)
}

/// Worker cap from `GWP_THREADS`; unset means the rayon default.
pub fn thread_cap() -> CliResult<Option<usize>> {
    match std::env::var("GWP_THREADS") {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!("GWP_THREADS must be a positive integer, got `{v}`"))),
        },
    }
}

/// Writes `trajectory.csv` and `metadata.json`, or for a sweep one
/// `run-<hash>.csv` / `run-<hash>.json` pair per grid value.
pub fn simulate(config: &Path, out: &Path) -> CliResult<Vec<PathBuf>> {
    let run = RunConfig::from_path(config).map_err(|e| CliError::Config(e.to_string()))?;
    fs::create_dir_all(out)?;
    if run.sweep.is_none() {
        let csv_path = out.join("trajectory.csv");
        run_one(&run, &csv_path, &out.join("metadata.json"))?;
        return Ok(vec![csv_path]);
    }
    let runs = run.expand();
    let jobs: Vec<(RunConfig, PathBuf, PathBuf)> = runs
        .into_iter()
        .map(|r| {
            let stem = format!("run-{}", &r.content_hash()[..16]);
            let csv_path = out.join(format!("{stem}.csv"));
            let meta_path = out.join(format!("{stem}.json"));
            (r, csv_path, meta_path)
        })
        .collect();
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_cap()? {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(e.to_string()))?;
    let results: Vec<CliResult<()>> = pool.install(|| {
        use rayon::prelude::*;
        jobs.par_iter().map(|(r, c, m)| run_one(r, c, m)).collect()
    });
    // first failure in grid order, independent of scheduling
    results.into_iter().collect::<CliResult<Vec<()>>>()?;
    Ok(jobs.into_iter().map(|(_, c, _)| c).collect())
}
