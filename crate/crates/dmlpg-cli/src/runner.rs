//! Orchestration: build the configured problem, run the solver or study,
//! and write the CSV artifacts.

use crate::config::{ProblemKind, RunConfig, SchemeKind};
use dmlpg::{
    assemble, convergence_study, fgm_probe_points, fgm_problem, fgm_series_solution,
    make_regular_grid, postprocess, solve_method_of_lines, step_backward_euler,
    step_crank_nicolson, FgmParams, HeatProblem, NodeSet, Trajectory,
};
use nalgebra::{DVector, Point2};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

/// Failures split by exit code: configuration problems exit with 2,
/// solver and I/O failures with 3.
pub enum CliError {
    Config(String),
    Solver(String),
}

impl From<dmlpg::Error> for CliError {
    fn from(e: dmlpg::Error) -> Self {
        match e {
            dmlpg::Error::InvalidConfig(_) | dmlpg::Error::InvalidSpacing(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Solver(format!("i/o failure: {e}"))
    }
}

/// Lossless decimal formatting (17 significant digits).
fn csv_num(v: f64) -> String {
    format!("{v:.16e}")
}

struct ResolvedProblem {
    prob: Arc<HeatProblem>,
    nodes: NodeSet,
    fgm: Option<FgmParams>,
}

fn resolve_problem(cfg: &RunConfig) -> Result<ResolvedProblem, CliError> {
    let (mut prob, fgm) = match cfg.problem {
        ProblemKind::Test => (dmlpg::test_problem(), None),
        ProblemKind::Manufactured => (dmlpg::manufactured_problem(), None),
        ProblemKind::Fgm => {
            let mut params = FgmParams::new(cfg.gamma);
            if let Some(tf) = cfg.t_final {
                params.t_final = tf;
            }
            (fgm_problem(&params), Some(params))
        }
    };
    if let Some(tf) = cfg.t_final {
        Arc::get_mut(&mut prob)
            .expect("problem is freshly built")
            .t_final = tf;
    }
    let width = prob.domain.x_max - prob.domain.x_min;
    let h = if let Some(n) = cfg.grid_n {
        width / (n - 1) as f64
    } else {
        cfg.h.unwrap_or(width / 10.0)
    };
    let nodes = make_regular_grid(&prob.domain, h)?;
    Ok(ResolvedProblem { prob, nodes, fgm })
}

/// Output samples of one run: `(t, point, value)` rows.
struct Samples {
    rows: Vec<(f64, Point2<f64>, f64)>,
    /// (reference value, computed value) pairs when a reference exists.
    reference: Vec<(f64, f64)>,
}

fn sample_trajectory_states(traj: &Trajectory, max_outputs: usize) -> Vec<usize> {
    let n = traj.times.len();
    let stride = (n / max_outputs).max(1);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx
}

pub fn run_solve(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(out_dir)?;
    let resolved = resolve_problem(cfg)?;
    let prob = &resolved.prob;
    let nodes = &resolved.nodes;
    let solver_cfg = cfg.solver_config();
    let t_final = prob.t_final;

    let total_start = Instant::now();
    let t0 = Instant::now();
    let sys = assemble(prob, nodes, cfg.method, &solver_cfg)?;
    let assemble_s = t0.elapsed().as_secs_f64();

    // States at output times, as (t, full nodal state).
    let t1 = Instant::now();
    let states: Vec<(f64, DVector<f64>)> = match cfg.scheme {
        SchemeKind::CrankNicolson | SchemeKind::BackwardEuler => {
            let traj = if cfg.scheme == SchemeKind::CrankNicolson {
                step_crank_nicolson(&sys, cfg.dt, t_final)?
            } else {
                step_backward_euler(&sys, cfg.dt, t_final)?
            };
            sample_trajectory_states(&traj, 120)
                .into_iter()
                .map(|i| (traj.times[i], traj.states[i].clone()))
                .collect()
        }
        SchemeKind::MethodOfLines => {
            let n_out = 120usize;
            let t_eval: Vec<f64> = (1..=n_out)
                .map(|i| t_final * i as f64 / n_out as f64)
                .collect();
            let sol = solve_method_of_lines(&sys, cfg.rtol, cfg.atol, &t_eval)?;
            sol.times.into_iter().zip(sol.states).collect()
        }
    };
    let solve_s = t1.elapsed().as_secs_f64();

    // Sample the solution: strip problems probe the midline at the three
    // reference fractions over time; square benchmarks dump the nodal
    // field at the final time.
    let samples = if let Some(params) = &resolved.fgm {
        let probes = fgm_probe_points(params, &[0.25, 0.5, 0.75]);
        let mut rows = Vec::new();
        let mut reference = Vec::new();
        for (t, state) in &states {
            let vals = postprocess(nodes, state, &probes, cfg.degree, &solver_cfg.weight)?;
            for (p, v) in probes.iter().zip(vals) {
                rows.push((*t, *p, v));
                if params.gamma == 0.0 {
                    reference.push((fgm_series_solution(params, p.x, *t)?, v));
                }
            }
        }
        Samples { rows, reference }
    } else {
        let (t, state) = states.last().expect("at least one output state");
        let mut rows = Vec::new();
        let mut reference = Vec::new();
        for (k, p) in nodes.points().iter().enumerate() {
            rows.push((*t, *p, state[k]));
        }
        if let Some(exact) = &prob.exact {
            for (k, p) in nodes.points().iter().enumerate() {
                reference.push((exact(p, *t), state[k]));
            }
        }
        Samples { rows, reference }
    };

    let mut solution = String::from("t,x1,x2,u\n");
    for (t, p, v) in &samples.rows {
        let _ = writeln!(
            solution,
            "{},{},{},{}",
            csv_num(*t),
            csv_num(p.x),
            csv_num(p.y),
            csv_num(*v)
        );
    }
    fs::write(out_dir.join("solution.csv"), solution)?;

    if !samples.reference.is_empty() {
        let mut max_err: f64 = 0.0;
        let mut sum2 = 0.0;
        for (reference, value) in &samples.reference {
            let e = value - reference;
            max_err = max_err.max(e.abs());
            sum2 += e * e;
        }
        let rms = (sum2 / samples.reference.len() as f64).sqrt();
        let mut errors = String::from("h,max_err,rms_err,order\n");
        let _ = writeln!(
            errors,
            "{},{},{},",
            csv_num(nodes.h()),
            csv_num(max_err),
            csv_num(rms)
        );
        fs::write(out_dir.join("errors.csv"), errors)?;
    }

    let total_s = total_start.elapsed().as_secs_f64();
    let mut timings = String::from("phase,seconds\n");
    let _ = writeln!(timings, "assemble,{}", csv_num(assemble_s));
    let _ = writeln!(timings, "solve,{}", csv_num(solve_s));
    let _ = writeln!(timings, "total,{}", csv_num(total_s));
    fs::write(out_dir.join("timings.csv"), timings)?;
    fs::write(out_dir.join("manifest.txt"), cfg.manifest())?;
    Ok(())
}

pub fn run_convergence(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    if cfg.problem != ProblemKind::Test {
        return Err(CliError::Config(
            "the convergence study uses the exact-solution test problem; set problem = test"
                .into(),
        ));
    }
    fs::create_dir_all(out_dir)?;
    let t_final = cfg.t_final.unwrap_or(1.0);
    let report = convergence_study(
        cfg.method,
        &cfg.solver_config(),
        &cfg.h_list,
        cfg.dt,
        t_final,
    )?;
    let mut errors = String::from("h,max_err,rms_err,order\n");
    for (i, &h) in report.h.iter().enumerate() {
        let order = if i == 0 {
            String::new()
        } else {
            csv_num(report.orders[i - 1])
        };
        let _ = writeln!(
            errors,
            "{},{},{},{order}",
            csv_num(h),
            csv_num(report.max_err[i]),
            csv_num(report.rms_err[i])
        );
    }
    fs::write(out_dir.join("errors.csv"), errors)?;
    fs::write(out_dir.join("manifest.txt"), cfg.manifest())?;
    Ok(())
}

pub fn run_timing(cfg: &RunConfig, out_dir: &Path) -> Result<(), CliError> {
    if cfg.problem != ProblemKind::Test {
        return Err(CliError::Config(
            "the timing study uses the test problem workload; set problem = test".into(),
        ));
    }
    fs::create_dir_all(out_dir)?;
    let t_final = cfg.t_final.unwrap_or(1.0);
    let rows = dmlpg::problems::timing_study(
        cfg.method,
        &cfg.solver_config(),
        &cfg.h_list,
        cfg.dt,
        t_final,
    )?;
    let mut timings = String::from("phase,seconds\n");
    for row in &rows {
        let _ = writeln!(timings, "assemble_h={},{}", row.h, csv_num(row.assemble_s));
        let _ = writeln!(timings, "solve_h={},{}", row.h, csv_num(row.solve_s));
    }
    fs::write(out_dir.join("timings.csv"), timings)?;
    fs::write(out_dir.join("manifest.txt"), cfg.manifest())?;
    Ok(())
}
