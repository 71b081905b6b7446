//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the process fails if any criterion does.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use perfuse::experiments::{
    run, run_condition_table, run_iteration_sweep, run_perfusion, run_scalar_model, ExperimentConfig, ExperimentKind, PerfusionConfig,
    ScalarGrid,
};
use perfuse::fem::{assemble_mass, assemble_stiffness, interpolate, FunctionSpace};
use perfuse::mesh::{embedded_curve, Mesh, StudyGeometry};
use perfuse::pencil::PencilKind;
use perfuse::precond::{build_fractional, scalar_model_condition_svd, ProblemParameters};
use perfuse::study::StudyDiscretization;
use perfuse::system::{assemble_system, step, Dirichlet, State, StepSolver, TimeStepProblem, TissueSolver};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<(bool, String), String>;

fn norm(a: &[f64]) -> f64 {
    a.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(p, q)| p - q).collect()
}

fn spread(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    hi / lo
}

fn within(v: &[f64], lo: f64, hi: f64) -> bool {
    v.iter().all(|&x| x >= lo && x <= hi)
}

fn fmt(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x:.3}")).collect::<Vec<_>>().join("/")
}

fn spectral_identities() -> Outcome {
    const MASS_TOL: f64 = 1e-10;
    const STIFF_TOL: f64 = 1e-8;
    const COMPOSE_TOL: f64 = 1e-8;
    let mut worst = [0.0f64; 3];
    for (dim, n, geometry) in [(2, 256, StudyGeometry::TShape), (3, 32, StudyGeometry::Branch3d)] {
        let mesh = Mesh::lattice(dim, n, 1.0).map_err(|e| e.to_string())?;
        let curve = embedded_curve(&mesh, geometry, 0.02).map_err(|e| e.to_string())?;
        let g = FunctionSpace::on_curve(&curve);
        if g.dof_count() > 500 {
            return Err(format!("{} curve dofs exceeds 500", g.dof_count()));
        }
        let frac = build_fractional(&g).map_err(|e| e.to_string())?;
        let m = assemble_mass(&g).map_err(|e| e.to_string())?;
        let am = assemble_stiffness(&g).and_then(|a| a.add(1.0, &m, 1.0)).map_err(|e| e.to_string())?.to_dense();
        worst[0] = worst[0].max(frac.matrix(0.0).frobenius_distance(&m.to_dense()));
        worst[1] = worst[1].max(frac.matrix(1.0).frobenius_distance(&am) / am.frobenius_norm());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let x: Vec<f64> = (0..frac.dim()).map(|_| rng.gen::<f64>() - 0.5).collect();
            let (s, t) = (-rng.gen::<f64>(), rng.gen::<f64>() - 0.5);
            let inner = frac.mass_inverse(&frac.apply(t, &x).unwrap()).unwrap();
            let composed = frac.apply(s, &inner).unwrap();
            let direct = frac.apply(s + t, &x).unwrap();
            worst[2] = worst[2].max(norm(&sub(&composed, &direct)) / norm(&direct));
        }
    }
    let ok = worst[0] <= MASS_TOL && worst[1] <= STIFF_TOL && worst[2] <= COMPOSE_TOL;
    Ok((ok, format!("|H0-M|={:.1e} |H1-(A+M)|/|A+M|={:.1e} composition={:.1e}", worst[0], worst[1], worst[2])))
}

fn condition_rows(kind: PencilKind, dim: usize, resolutions: Vec<usize>, s: Option<f64>) -> Result<Vec<f64>, String> {
    let config = ExperimentConfig {
        experiment: Some(ExperimentKind::ConditionTable),
        dimension: dim,
        resolutions: Some(resolutions),
        pencils: vec![kind],
        s,
        ..Default::default()
    };
    let table = run_condition_table(&config).map_err(|e| e.to_string())?;
    table.row(kind).into_iter().map(|k| k.ok_or_else(|| "a cell failed".to_string())).collect()
}

fn mass_pencil() -> Outcome {
    const BAND_2D: (f64, f64) = (3.0, 6.5);
    const BAND_3D: (f64, f64) = (3.0, 8.0);
    const MAX_SPREAD_2D: f64 = 1.15;
    let k2 = condition_rows(PencilKind::Mass, 2, vec![32, 64, 128], None)?;
    let k3 = condition_rows(PencilKind::Mass, 3, vec![4, 8, 16], None)?;
    let ok = within(&k2, BAND_2D.0, BAND_2D.1) && spread(&k2) <= MAX_SPREAD_2D && within(&k3, BAND_3D.0, BAND_3D.1);
    Ok((ok, format!("2D {} (spread {:.3}), 3D {}", fmt(&k2), spread(&k2), fmt(&k3))))
}

fn energy_pencil() -> Outcome {
    const BAND_2D: (f64, f64) = (6.5, 12.0);
    const BAND_3D: (f64, f64) = (5.0, 16.0);
    const MAX_SPREAD_2D: f64 = 1.15;
    let k2 = condition_rows(PencilKind::Energy, 2, vec![32, 64, 128], Some(-0.5))?;
    let k3 = condition_rows(PencilKind::Energy, 3, vec![4, 8, 16], Some(-0.55))?;
    let ok2 = within(&k2, BAND_2D.0, BAND_2D.1) && spread(&k2) <= MAX_SPREAD_2D;
    let ok3 = within(&k3, BAND_3D.0, BAND_3D.1);
    Ok((ok2 && ok3, format!("2D {} (spread {:.3}, {}), 3D {} ({})", fmt(&k2), spread(&k2), pass(ok2), fmt(&k3), pass(ok3))))
}

fn minres_sweep() -> Outcome {
    const ATOL: f64 = 1e-10;
    const MAX_ITER_2D: i64 = 30;
    const MAX_ITER_3D: i64 = 35;
    const MAX_H_RATIO: f64 = 2.5;
    let mut ok = true;
    let mut notes = Vec::new();
    for (dim, resolutions, limit) in [(2, vec![32, 64, 128], MAX_ITER_2D), (3, vec![4, 8, 16], MAX_ITER_3D)] {
        let config = ExperimentConfig {
            experiment: Some(ExperimentKind::IterationSweep),
            dimension: dim,
            resolutions: Some(resolutions),
            atol: ATOL,
            ..Default::default()
        };
        let t = run_iteration_sweep(&config).map_err(|e| e.to_string())?;
        ok &= t.failed_cells() == 0 && t.max_iterations() <= limit && t.max_h_ratio() <= MAX_H_RATIO;
        notes.push(format!("{dim}D max {} its, h-ratio {:.2}, {} failed", t.max_iterations(), t.max_h_ratio(), t.failed_cells()));
    }
    Ok((ok, notes.join("; ")))
}

fn scalar_model() -> Outcome {
    const MAX_RATIO: f64 = 100.0;
    const ORACLE_TOL: f64 = 1e-6;
    let report = run_scalar_model(&ScalarGrid::default()).map_err(|e| e.to_string())?;
    let oracle = |p: [f64; 5]| scalar_model_condition_svd(p[0], p[1], p[2], p[3], p[4]).map_err(|e| e.to_string());
    let (hi, lo) = (oracle(report.argmax)?, oracle(report.argmin)?);
    let agrees = (hi - report.max_condition).abs() <= ORACLE_TOL * hi && (lo - report.min_condition).abs() <= ORACLE_TOL * lo;
    let finite = report.max_condition.is_finite();
    let ratio = hi / lo;
    Ok((
        finite && agrees && ratio <= MAX_RATIO,
        format!("{} points, cond in [{lo:.3e}, {hi:.3e}], ratio {ratio:.3e}, max at {:?}", report.points, report.argmax),
    ))
}

fn conservation() -> Outcome {
    const DRIFT_TOL: f64 = 1e-10;
    const STEPS: usize = 20;
    let p = ProblemParameters { beta: 1.0, k: 1e-2, d_gamma: 1e2, ..Default::default() };
    let mut worst = 0.0f64;
    for (dim, n) in [(2, 32), (3, 8)] {
        let disc = StudyDiscretization::new(dim, n, 0.02).map_err(|e| e.to_string())?;
        let sys = assemble_system(&disc.omega, &disc.gamma, &disc.coupling, &p).map_err(|e| e.to_string())?;
        let solver = StepSolver::MinRes {
            preconditioner: sys.preconditioner(disc.h(), TissueSolver::Banded).map_err(|e| e.to_string())?,
            atol: 1e-13,
            maxiter: 500,
        };
        let mut state = State::zeros(&sys);
        state.u = interpolate(&disc.omega, |x| 1.0 + (3.0 * x[0]).cos() * x[1]).map_err(|e| e.to_string())?;
        let mut mass = sys.total_mass(&state).unwrap();
        for _ in 0..STEPS {
            let problem = TimeStepProblem::new(&sys, &state, None, None).map_err(|e| e.to_string())?;
            state = step(&problem, &solver).map_err(|e| e.to_string())?.0;
            let next = sys.total_mass(&state).unwrap();
            worst = worst.max((next - mass).abs() / mass.abs());
            mass = next;
        }
    }
    Ok((worst <= DRIFT_TOL, format!("largest relative drift per step {worst:.2e} over {STEPS} steps")))
}

fn oracle_equivalence() -> Outcome {
    const TOL: f64 = 1e-8;
    let mut worst = 0.0f64;
    for dim in [2, 3] {
        let disc = StudyDiscretization::new(dim, 4, 0.02).map_err(|e| e.to_string())?;
        for (beta, k, d_gamma) in [(1e-4, 1e-4, 1.0), (1.0, 1e-2, 1e4), (10.0, 1.0, 1e6)] {
            let p = ProblemParameters { beta, k, d_gamma, exponent_s: ProblemParameters::default_exponent(dim), ..Default::default() };
            let sys = assemble_system(&disc.omega, &disc.gamma, &disc.coupling, &p).map_err(|e| e.to_string())?;
            let mut prev = State::zeros(&sys);
            prev.u = interpolate(&disc.omega, |x| x[0] - 2.0 * x[1] + x[2] * x[0]).map_err(|e| e.to_string())?;
            prev.u_hat = interpolate(&disc.gamma, |x| 1.0 + x[1]).map_err(|e| e.to_string())?;
            for dirichlet in [None, Some(Dirichlet { dofs: vec![0], values: vec![1.0] })] {
                let constrained: Vec<usize> = dirichlet.iter().flat_map(|d| d.dofs.clone()).collect();
                let problem = TimeStepProblem::new(&sys, &prev, None, dirichlet).map_err(|e| e.to_string())?;
                let dense = StepSolver::dense(&sys, &constrained).map_err(|e| e.to_string())?;
                let iterative = StepSolver::MinRes {
                    preconditioner: sys.preconditioner(disc.h(), TissueSolver::Cg { rtol: 1e-12 }).map_err(|e| e.to_string())?,
                    atol: 1e-13,
                    maxiter: 500,
                };
                let a = step(&problem, &dense).map_err(|e| e.to_string())?.0.to_block_vector();
                let b = step(&problem, &iterative).map_err(|e| e.to_string())?.0.to_block_vector();
                worst = worst.max(sub(&a, &b).iter().fold(0.0, |m, v| m.max(v.abs())));
            }
        }
    }
    Ok((worst <= TOL, format!("largest entry difference {worst:.2e}")))
}

fn perfusion() -> Outcome {
    const K_TRANS_BAND: (f64, f64) = (1e-4, 1e-1);
    const HALVED_STEP_TOL: f64 = 0.01;
    let config = PerfusionConfig::default();
    let base = run_perfusion(&config, None).map_err(|e| e.to_string())?;
    let fine_config = PerfusionConfig { k: config.k / 2.0, steps: 2 * config.steps, ..config.clone() };
    let fine = run_perfusion(&fine_config, None).map_err(|e| e.to_string())?;
    let s = &base.summary;
    // Uptake window; the centred difference at the switch step straddles
    // the inlet change and is excluded.
    let uptake: Vec<f64> = (1..config.uptake_steps()).map(|i| s.k_trans[i].map_or(f64::NAN, |k| 60.0 * k)).collect();
    let positive = uptake.iter().all(|&k| k > 0.0);
    let monotone = uptake.windows(2).all(|w| w[1] <= w[0]);
    let banded = within(&uptake, K_TRANS_BAND.0, K_TRANS_BAND.1);
    let peak = s.c_t.iter().fold(0.0f64, |m, c| m.max(c.abs()));
    let diff = (0..s.c_t.len()).map(|i| (s.c_t[i] - fine.summary.c_t[2 * i]).abs()).fold(0.0, f64::max);
    let rel = diff / peak;
    let ok = positive && monotone && banded && rel < HALVED_STEP_TOL && s.bound_violation == 0.0;
    Ok((
        ok,
        format!(
            "K_trans {:.5}->{:.5} /min (positive {positive}, nonincreasing {monotone}), nu {:.4}, halved-k change {rel:.2e}",
            uptake[0],
            uptake[uptake.len() - 1],
            s.nu
        ),
    ))
}

fn determinism() -> Outcome {
    let mut checked = 0;
    for kind in [ExperimentKind::ConditionTable, ExperimentKind::IterationSweep, ExperimentKind::Perfusion, ExperimentKind::ScalarModel] {
        let mut bytes = Vec::new();
        for _ in 0..2 {
            let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
            let mut c = ExperimentConfig {
                experiment: Some(kind),
                resolutions: Some(vec![8, 16]),
                output_dir: dir.path().to_path_buf(),
                ..Default::default()
            };
            c.perfusion.resolution = 8;
            c.perfusion.steps = 30;
            c.perfusion.snapshot_every = 10;
            c.scalar.points_per_decade = 1;
            let manifest = run(kind, &c).map_err(|e| e.to_string())?;
            let csv: Vec<Vec<u8>> = manifest
                .outputs
                .iter()
                .filter(|f| f.ends_with(".csv"))
                .map(|f| std::fs::read(dir.path().join(f)).map_err(|e| e.to_string()))
                .collect::<Result<_, _>>()?;
            bytes.push(csv);
        }
        if bytes[0].is_empty() || bytes[0] != bytes[1] {
            return Ok((false, format!("{} output differs between runs", kind.name())));
        }
        checked += bytes[0].len();
    }
    Ok((true, format!("{checked} CSV files identical across reruns")))
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    let criteria: [(&str, Duration, fn() -> Outcome); 9] = [
        ("1 spectral identities", Duration::from_secs(10), spectral_identities),
        ("2 mass pencil condition", Duration::from_secs(300), mass_pencil),
        ("3 energy pencil condition", Duration::from_secs(600), energy_pencil),
        ("4 minres parameter sweep", Duration::from_secs(1800), minres_sweep),
        ("5 scalar model boundedness", Duration::from_secs(60), scalar_model),
        ("6 neumann conservation", Duration::MAX, conservation),
        ("7 dense/minres equivalence", Duration::MAX, oracle_equivalence),
        ("8 perfusion transfer constant", Duration::from_secs(300), perfusion),
        ("9 determinism", Duration::MAX, determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, budget, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match outcome {
            Ok((ok, detail)) => (ok && elapsed <= budget, detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let timing = if elapsed > budget { " over time budget" } else { "" };
        println!("{} criterion {name}: {detail} [{:.1}s{timing}]", pass(ok), elapsed.as_secs_f64());
        failed += usize::from(!ok);
    }
    println!("acceptance: {failed} criteria failed");
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
