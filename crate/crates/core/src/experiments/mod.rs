//! Experiment drivers behind the command line: condition tables, the MinRes
//! parameter sweep, the perfusion run and the scalar model sweep.
//!
//! Every driver takes an [`ExperimentConfig`], returns a typed result and can
//! write it as CSV. [`run`] does all of that and adds a JSON manifest.

mod condition;
mod perfusion;
mod scalar;
mod sweep;

pub use condition::{run_condition_table, ConditionCell, ConditionTable};
pub use perfusion::{k_trans, run_perfusion, vessel_weights, PerfusionConfig, PerfusionRun, PerfusionSolver, PerfusionSummary};
pub use scalar::{run_scalar_model, ScalarGrid, ScalarReport};
pub use sweep::{run_iteration_sweep, IterationTable, SweepRhs};

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::pencil::PencilKind;
use crate::precond::ProblemParameters;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    ConditionTable,
    IterationSweep,
    Perfusion,
    ScalarModel,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::ConditionTable => "condition-table",
            ExperimentKind::IterationSweep => "iteration-sweep",
            ExperimentKind::Perfusion => "perfusion",
            ExperimentKind::ScalarModel => "scalar-model",
        }
    }
}

/// One JSON document describing a run. Missing fields take the defaults of
/// the study problems.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: Option<ExperimentKind>,
    pub dimension: usize,
    /// Cells per side; defaults to 32, 64, 128 in 2D and 4, 8, 16 in 3D.
    pub resolutions: Option<Vec<usize>>,
    pub d_gamma: Vec<f64>,
    pub beta: Vec<f64>,
    pub k: Vec<f64>,
    pub d_omega: f64,
    pub gamma: f64,
    /// Exponent of the curve operator; the dimension default when absent.
    pub s: Option<f64>,
    pub radius: f64,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub pencils: Vec<PencilKind>,
    /// Allow the Lanczos path for pencils too large for dense solves.
    pub lanczos: bool,
    pub atol: f64,
    pub max_iterations: usize,
    pub rhs: SweepRhs,
    pub perfusion: PerfusionConfig,
    pub scalar: ScalarGrid,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: None,
            dimension: 2,
            resolutions: None,
            d_gamma: vec![1.0, 1e2, 1e4, 1e6],
            beta: vec![1e-8, 1e-6, 1e-4],
            k: vec![1e-8, 1e-6, 1e-4],
            d_omega: 1.0,
            gamma: 1.0,
            s: None,
            radius: 0.02,
            output_dir: PathBuf::from("out"),
            seed: 0,
            pencils: vec![PencilKind::Mass, PencilKind::Energy],
            lanczos: true,
            atol: 1e-10,
            max_iterations: 500,
            rhs: SweepRhs::Smooth,
            perfusion: PerfusionConfig::default(),
            scalar: ScalarGrid::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn resolutions(&self) -> Vec<usize> {
        match &self.resolutions {
            Some(r) => r.clone(),
            None if self.dimension == 3 => vec![4, 8, 16],
            None => vec![32, 64, 128],
        }
    }

    pub fn exponent(&self) -> f64 {
        self.s.unwrap_or_else(|| ProblemParameters::default_exponent(self.dimension))
    }

    /// Checks the fields used by `kind`.
    pub fn validate(&self, kind: ExperimentKind) -> Result<()> {
        if let Some(e) = self.experiment {
            if e != kind {
                return Err(Error::Config(format!("config is for {}, not {}", e.name(), kind.name())));
            }
        }
        let grid_kinds = [ExperimentKind::ConditionTable, ExperimentKind::IterationSweep];
        if grid_kinds.contains(&kind) {
            if !(self.dimension == 2 || self.dimension == 3) {
                return Err(Error::Config(format!("dimension must be 2 or 3, got {}", self.dimension)));
            }
            let res = self.resolutions();
            if res.is_empty() {
                return Err(Error::Config("resolution list is empty".into()));
            }
            if let Some(n) = res.iter().find(|&&n| n == 0 || n % 4 != 0) {
                return Err(Error::Config(format!("resolution {n} is not a positive multiple of 4")));
            }
            if !(-1.0..=0.0).contains(&self.exponent()) {
                return Err(Error::Config(format!("exponent s = {} outside [-1, 0]", self.exponent())));
            }
        }
        match kind {
            ExperimentKind::ConditionTable if self.pencils.is_empty() => Err(Error::Config("pencil list is empty".into())),
            ExperimentKind::IterationSweep => {
                for (name, grid) in [("d_gamma", &self.d_gamma), ("beta", &self.beta), ("k", &self.k)] {
                    if grid.is_empty() {
                        return Err(Error::Config(format!("{name} grid is empty")));
                    }
                    if let Some(v) = grid.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                        return Err(Error::Config(format!("{name} grid holds non-positive value {v}")));
                    }
                }
                Ok(())
            }
            ExperimentKind::Perfusion => self.perfusion.validate(),
            ExperimentKind::ScalarModel => self.scalar.validate(),
            _ => Ok(()),
        }
    }

    /// SHA-256 of the canonical JSON form without the output directory, as
    /// lowercase hex.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = PathBuf::new();
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Written next to the outputs of every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub experiment: ExperimentKind,
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub outputs: Vec<String>,
    pub summary: serde_json::Value,
}

/// Runs `kind` with `config`, writing CSV (and VTK for perfusion) plus
/// `manifest.json` into the output directory. Returns the manifest.
pub fn run(kind: ExperimentKind, config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate(kind)?;
    let dir = &config.output_dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (outputs, summary) = match kind {
        ExperimentKind::ConditionTable => {
            let table = run_condition_table(config)?;
            let name = format!("condition_{}d.csv", config.dimension);
            write_file(&dir.join(&name), |w| table.write_csv(w))?;
            let cells = format!("condition_{}d_cells.csv", config.dimension);
            write_file(&dir.join(&cells), |w| table.write_cells_csv(w))?;
            (vec![name, cells], serde_json::to_value(&table)?)
        }
        ExperimentKind::IterationSweep => {
            let table = run_iteration_sweep(config)?;
            let name = format!("iterations_{}d.csv", config.dimension);
            write_file(&dir.join(&name), |w| table.write_csv(w))?;
            let summary = serde_json::json!({
                "max_iterations": table.max_iterations(),
                "failed_cells": table.failed_cells(),
                "max_h_ratio": table.max_h_ratio(),
            });
            (vec![name], summary)
        }
        ExperimentKind::Perfusion => {
            let run = run_perfusion(&config.perfusion, Some(dir))?;
            let name = "perfusion.csv".to_string();
            write_file(&dir.join(&name), |w| run.summary.write_csv(w))?;
            let mut outputs = vec![name];
            outputs.extend(run.snapshots.iter().cloned());
            let summary = serde_json::json!({
                "nu": run.summary.nu,
                "dofs": run.dofs,
                "solver": run.solver,
                "quadrature_points": run.quadrature_points,
                "bound_violation": run.summary.bound_violation,
            });
            (outputs, summary)
        }
        ExperimentKind::ScalarModel => {
            let report = run_scalar_model(&config.scalar)?;
            let name = "scalar_model.csv".to_string();
            write_file(&dir.join(&name), |w| report.write_csv(w))?;
            (vec![name], serde_json::to_value(&report)?)
        }
    };
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        experiment: kind,
        config_hash: config.hash(),
        config: config.clone(),
        outputs,
        summary,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
    Ok(manifest)
}

fn write_file(path: &Path, body: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
    let mut buf = Vec::new();
    body(&mut buf)?;
    fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Formats a float so it reads back to the same value.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:e}")
}

pub(crate) fn csv_row<W: std::io::Write>(w: &mut csv::Writer<W>, fields: impl IntoIterator<Item = impl Display>) -> Result<()> {
    w.write_record(fields.into_iter().map(|f| f.to_string()))?;
    Ok(())
}

/// Maps `f` over `items` on a small thread pool; results keep input order.
pub(crate) fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1).min(items.len().max(1));
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("every item mapped")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_dimension() {
        let c = ExperimentConfig::from_json(r#"{"dimension": 3}"#).unwrap();
        assert_eq!(c.resolutions(), vec![4, 8, 16]);
        assert_eq!(c.exponent(), -0.55);
        assert_eq!(ExperimentConfig::default().resolutions(), vec![32, 64, 128]);
    }

    #[test]
    fn rejects_bad_grids() {
        let mut c = ExperimentConfig {
            resolutions: Some(vec![]),
            ..Default::default()
        };
        assert!(matches!(c.validate(ExperimentKind::ConditionTable), Err(Error::Config(_))));
        c.resolutions = Some(vec![6]);
        assert!(c.validate(ExperimentKind::IterationSweep).is_err());
        c.resolutions = Some(vec![8]);
        c.beta.clear();
        assert!(c.validate(ExperimentKind::IterationSweep).is_err());
        assert!(c.validate(ExperimentKind::ConditionTable).is_ok());
        assert!(ExperimentConfig::from_json(r#"{"dimensoin": 3}"#).is_err());
    }

    #[test]
    fn experiment_field_must_match() {
        let c = ExperimentConfig::from_json(r#"{"experiment": "perfusion"}"#).unwrap();
        assert!(c.validate(ExperimentKind::ScalarModel).is_err());
    }

    #[test]
    fn hash_tracks_content() {
        let a = ExperimentConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash(), b.hash());
        b.seed = 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn par_map_keeps_order() {
        let v: Vec<usize> = (0..50).collect();
        assert_eq!(par_map(&v, |x| x * 2), v.iter().map(|x| x * 2).collect::<Vec<_>>());
    }
}
