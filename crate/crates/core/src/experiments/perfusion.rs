use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{csv_row, fmt_f64};
use crate::coupling::{assemble_averaging, CircleQuadrature};
use crate::error::{Error, Result};
use crate::fem::FunctionSpace;
use crate::linalg::LinearOperator;
use crate::mesh::vtk::{save_curve, save_mesh};
use crate::mesh::{synthetic_vascular_tree, CurveMesh, TreeSpec};
use crate::precond::ProblemParameters;
use crate::system::{assemble_system, run_transient, InletSchedule, State, StepSolver, TissueSolver};

/// Bounds on the tissue mean closer than this are flagged but accepted.
pub const BOUND_TOLERANCE: f64 = 1e-8;

/// Above this many unknowns `Auto` switches from LU to MinRes.
pub const DENSE_PERFUSION_LIMIT: usize = 3000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PerfusionSolver {
    Auto,
    Dense,
    Minres,
}

/// Tracer uptake and clearance on a synthetic vessel tree. Lengths in μm,
/// times in s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PerfusionConfig {
    pub extent: f64,
    pub resolution: usize,
    pub depth: usize,
    pub radius_root: f64,
    pub tree_seed: u64,
    pub d_omega: f64,
    pub d_gamma: f64,
    pub beta: f64,
    pub gamma: f64,
    pub k: f64,
    /// Total steps; the inlet is held at `inlet_value` for the first third.
    pub steps: usize,
    pub inlet_value: f64,
    /// Write VTK snapshots every this many steps (0 disables).
    pub snapshot_every: usize,
    pub solver: PerfusionSolver,
    /// Points per averaging circle; adaptive when absent.
    pub circle_points: Option<usize>,
}

impl Default for PerfusionConfig {
    fn default() -> Self {
        PerfusionConfig {
            extent: 240.0,
            resolution: 12,
            depth: 4,
            radius_root: 12.0,
            tree_seed: 0,
            d_omega: 187.0,
            d_gamma: 6.926e7,
            beta: 50.0,
            gamma: 1.0,
            k: 1.0,
            steps: 600,
            inlet_value: 1.0,
            snapshot_every: 100,
            solver: PerfusionSolver::Auto,
            circle_points: None,
        }
    }
}

impl PerfusionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.steps < 3 {
            return Err(Error::Config(format!("perfusion needs at least 3 steps, got {}", self.steps)));
        }
        if self.resolution == 0 || self.resolution % 4 != 0 {
            return Err(Error::Config(format!("resolution {} is not a positive multiple of 4", self.resolution)));
        }
        if !(self.extent > 0.0) || !self.inlet_value.is_finite() {
            return Err(Error::Config("extent must be positive and the inlet value finite".into()));
        }
        self.parameters().validate()
    }

    pub fn parameters(&self) -> ProblemParameters {
        ProblemParameters {
            d_omega: self.d_omega,
            d_gamma: self.d_gamma,
            beta: self.beta,
            k: self.k,
            gamma: self.gamma,
            radius: self.radius_root,
            exponent_s: ProblemParameters::default_exponent(3),
        }
    }

    pub fn tree(&self) -> TreeSpec {
        TreeSpec {
            depth: self.depth,
            extent: self.extent,
            resolution: self.resolution,
            radius_root: self.radius_root,
            seed: self.tree_seed,
        }
    }

    pub fn uptake_steps(&self) -> usize {
        self.steps / 3
    }
}

/// Mean concentrations over time and the transfer constant derived from
/// `dC_t/dt = (K_trans / ν)(C_v - C_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfusionSummary {
    pub times: Vec<f64>,
    pub c_t: Vec<f64>,
    pub c_v: Vec<f64>,
    /// In 1/s; `None` where `|C_v - C_t|` is too small to divide by.
    pub k_trans: Vec<Option<f64>>,
    pub nu: f64,
    pub total_mass: Vec<f64>,
    /// Largest excursion of `C_t` outside `[0, inlet]`, zero if none.
    pub bound_violation: f64,
}

impl PerfusionSummary {
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        csv_row(&mut w, ["time_s", "c_t", "c_v", "k_trans_per_s", "k_trans_per_min", "total_mass", "nu"])?;
        for i in 0..self.times.len() {
            let (ks, km) = match self.k_trans[i] {
                Some(k) => (fmt_f64(k), fmt_f64(60.0 * k)),
                None => (String::new(), String::new()),
            };
            csv_row(
                &mut w,
                [fmt_f64(self.times[i]), fmt_f64(self.c_t[i]), fmt_f64(self.c_v[i]), ks, km, fmt_f64(self.total_mass[i]), fmt_f64(self.nu)],
            )?;
        }
        w.flush().map_err(|e| Error::io("csv output", e))?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerfusionRun {
    pub summary: PerfusionSummary,
    pub dofs: usize,
    pub solver: PerfusionSolver,
    pub quadrature_points: usize,
    /// File names of the VTK snapshots written.
    pub snapshots: Vec<String>,
}

/// `∫_Γ π R² ψ_q` for each curve vertex, with `R` linear on segments.
pub fn vessel_weights(curve: &CurveMesh) -> Vec<f64> {
    let mut w = vec![0.0; curve.num_vertices()];
    for (s, &[a, b]) in curve.segments.iter().enumerate() {
        let (ra, rb) = (curve.radii[a], curve.radii[b]);
        let scale = std::f64::consts::PI * curve.segment_length(s) / 12.0;
        w[a] += scale * (3.0 * ra * ra + 2.0 * ra * rb + rb * rb);
        w[b] += scale * (ra * ra + 2.0 * ra * rb + 3.0 * rb * rb);
    }
    w
}

/// `ν dC_t/dt / (C_v - C_t)` with centred differences inside and one-sided
/// ones at the ends.
pub fn k_trans(times: &[f64], c_t: &[f64], c_v: &[f64], nu: f64) -> Vec<Option<f64>> {
    let n = times.len();
    (0..n)
        .map(|i| {
            if n < 2 {
                return None;
            }
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let rate = (c_t[hi] - c_t[lo]) / (times[hi] - times[lo]);
            let gap = c_v[i] - c_t[i];
            (gap.abs() > 1e-12).then(|| nu * rate / gap)
        })
        .collect()
}

/// Uptake for a third of the steps, then clearance. Snapshots go to
/// `out_dir` when given.
pub fn run_perfusion(config: &PerfusionConfig, out_dir: Option<&Path>) -> Result<PerfusionRun> {
    config.validate()?;
    let tree = synthetic_vascular_tree(&config.tree())?;
    let omega = FunctionSpace::on_mesh(&tree.mesh);
    let gamma = FunctionSpace::on_curve(&tree.curve);
    let quadrature = match config.circle_points {
        Some(n) => CircleQuadrature::Fixed(n),
        None => CircleQuadrature::default(),
    };
    let coupling = assemble_averaging(&tree.mesh, &gamma, &tree.curve, quadrature)?;
    let params = config.parameters();
    let system = assemble_system(&omega, &gamma, &coupling, &params)?;
    let inlets = tree.curve.inlets.clone();
    let dofs = system.dim();
    let choice = match config.solver {
        PerfusionSolver::Auto if dofs <= DENSE_PERFUSION_LIMIT => PerfusionSolver::Dense,
        PerfusionSolver::Auto => PerfusionSolver::Minres,
        s => s,
    };
    let solver = match choice {
        PerfusionSolver::Dense => StepSolver::dense(&system, &inlets)?,
        _ => StepSolver::MinRes {
            preconditioner: system.preconditioner(tree.mesh.h(), TissueSolver::Cg { rtol: 1e-12 })?,
            atol: 1e-12,
            maxiter: 1000,
        },
    };
    let weights = vessel_weights(&tree.curve);
    let volume = config.extent.powi(3);
    let nu = tree.curve.vessel_volume() / volume;
    let schedule = InletSchedule::UptakeClearance {
        switch_step: config.uptake_steps(),
        high: config.inlet_value,
        low: 0.0,
    };
    let mut snapshots = Vec::new();
    let (_, history) = run_transient(&system, State::zeros(&system), schedule, &inlets, config.steps, &solver, &weights, |n, state| {
        match out_dir {
            Some(dir) if config.snapshot_every > 0 && n % config.snapshot_every == 0 => {
                let tissue = format!("tissue_{n:05}.vtk");
                let vessel = format!("vessel_{n:05}.vtk");
                save_mesh(&dir.join(&tissue), &tree.mesh, &[("u", &state.u.coefficients)])?;
                save_curve(
                    &dir.join(&vessel),
                    &tree.curve,
                    &[("u_hat", &state.u_hat.coefficients), ("lambda", &state.lambda.coefficients)],
                )?;
                snapshots.extend([tissue, vessel]);
                Ok(())
            }
            _ => Ok(()),
        }
    })?;
    let top = config.inlet_value.max(0.0);
    let bound_violation = history
        .tissue_mean
        .iter()
        .map(|&c| (-c).max(c - top).max(0.0))
        .fold(0.0, f64::max);
    if bound_violation > BOUND_TOLERANCE {
        return Err(Error::Breakdown(format!("tissue mean leaves [0, {top}] by {bound_violation:e}")));
    }
    let k = k_trans(&history.times, &history.tissue_mean, &history.vessel_mean, nu);
    Ok(PerfusionRun {
        summary: PerfusionSummary {
            times: history.times,
            c_t: history.tissue_mean,
            c_v: history.vessel_mean,
            k_trans: k,
            nu,
            total_mass: history.total_mass,
            bound_violation,
        },
        dofs,
        solver: choice,
        quadrature_points: coupling.quadrature_points_per_circle,
        snapshots,
    })
}
