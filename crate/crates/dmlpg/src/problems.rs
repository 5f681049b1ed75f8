//! Canned benchmark problems, analytic references, and convergence and
//! timing studies.

use crate::assembly::{assemble, Method, SolverConfig};
use crate::domain::{BcKind, DomainSpec};
use crate::error::{Error, Result};
use crate::nodes::make_regular_grid;
use crate::timestep::step_crank_nicolson;
use crate::weakforms::HeatProblem;
use nalgebra::{DVector, Point2, Vector2};
use std::f64::consts::PI;
use std::sync::Arc;
use std::time::Instant;

/// Separable cosine problem on the unit square with a known decaying
/// solution: `rho c = 2 pi^2`, `kappa = 1`, no source, zero flux on the
/// horizontal sides, and Dirichlet data `+-exp(-t) cos(pi x2)` on the
/// vertical sides. The exact solution is
/// `u = exp(-t) cos(pi x1) cos(pi x2)`.
pub fn test_problem() -> Arc<HeatProblem> {
    let rc = 2.0 * PI * PI;
    Arc::new(HeatProblem {
        domain: DomainSpec::rectangle(
            0.0,
            1.0,
            0.0,
            1.0,
            BcKind::Dirichlet,
            BcKind::Dirichlet,
            BcKind::Neumann,
            BcKind::Neumann,
        ),
        kappa: Box::new(|_| 1.0),
        kappa_grad: Box::new(|_| Vector2::zeros()),
        rho_c: Box::new(move |_| rc),
        source: Box::new(|_, _| 0.0),
        u_dirichlet: Box::new(|p, t| (-t).exp() * (PI * p.x).cos() * (PI * p.y).cos()),
        u_neumann: Box::new(|_, _| 0.0),
        u0: Box::new(|p| (PI * p.x).cos() * (PI * p.y).cos()),
        t_final: 1.0,
        exact: Some(Box::new(|p, t| {
            (-t).exp() * (PI * p.x).cos() * (PI * p.y).cos()
        })),
    })
}

/// Stationary manufactured problem with exact solution `u = x1^2`
/// (`kappa = 1`, `f = -2`): the discrete solution must reproduce it to
/// solver precision because all functionals are exact on quadratics.
pub fn manufactured_problem() -> Arc<HeatProblem> {
    Arc::new(HeatProblem {
        domain: DomainSpec::rectangle(
            0.0,
            1.0,
            0.0,
            1.0,
            BcKind::Dirichlet,
            BcKind::Dirichlet,
            BcKind::Neumann,
            BcKind::Neumann,
        ),
        kappa: Box::new(|_| 1.0),
        kappa_grad: Box::new(|_| Vector2::zeros()),
        rho_c: Box::new(|_| 1.0),
        source: Box::new(|_, _| -2.0),
        u_dirichlet: Box::new(|p, _| p.x * p.x),
        u_neumann: Box::new(|_, _| 0.0),
        u0: Box::new(|p| p.x * p.x),
        t_final: 1.0,
        exact: Some(Box::new(|p, _| p.x * p.x)),
    })
}

/// Functionally graded strip: exponential conductivity along x1.
#[derive(Debug, Clone, Copy)]
pub struct FgmParams {
    /// Reference conductivity (W m^-1 C^-1).
    pub kappa0: f64,
    /// Grading exponent (m^-1).
    pub gamma: f64,
    /// Volumetric heat capacity (J m^-3 C^-1).
    pub rho_c: f64,
    /// Strip side length (m).
    pub side: f64,
    /// Step amplitude of the thermal shock (C).
    pub shock: f64,
    /// Final time of the transient run (s).
    pub t_final: f64,
}

impl FgmParams {
    pub fn new(gamma: f64) -> Self {
        FgmParams {
            kappa0: 17.0,
            gamma,
            rho_c: 1e6,
            side: 0.04,
            shock: 1.0,
            t_final: 60.0,
        }
    }

    /// Diffusivity `kappa0 / (rho c)` entering the series solution.
    pub fn alpha0(&self) -> f64 {
        self.kappa0 / self.rho_c
    }
}

/// Strip with zero initial temperature, zero temperature on the left
/// side, a Heaviside step `u = T` on the right side (imposed for all
/// t >= 0), and zero flux on top and bottom.
pub fn fgm_problem(p: &FgmParams) -> Arc<HeatProblem> {
    let (k0, gamma, rc, shock) = (p.kappa0, p.gamma, p.rho_c, p.shock);
    let a = p.side;
    Arc::new(HeatProblem {
        domain: DomainSpec::rectangle(
            0.0,
            a,
            0.0,
            a,
            BcKind::Dirichlet,
            BcKind::Dirichlet,
            BcKind::Neumann,
            BcKind::Neumann,
        ),
        kappa: Box::new(move |x| k0 * (gamma * x.x).exp()),
        kappa_grad: Box::new(move |x| Vector2::new(k0 * gamma * (gamma * x.x).exp(), 0.0)),
        rho_c: Box::new(move |_| rc),
        source: Box::new(|_, _| 0.0),
        u_dirichlet: Box::new(move |x, _| {
            if (x.x - a).abs() < 1e-9 * a {
                shock
            } else {
                0.0
            }
        }),
        u_neumann: Box::new(|_, _| 0.0),
        u0: Box::new(|_| 0.0),
        t_final: p.t_final,
        exact: None,
    })
}

/// Series solution of the homogeneous strip (`gamma = 0`):
///
/// ```text
/// u(x1, t) = T x1/a + (2/pi) sum_n (T cos(n pi)/n) sin(n pi x1/a)
///            exp(-alpha0 n^2 pi^2 t / a^2)
/// ```
///
/// Terms are added until the next one falls below 1e-12, capped at 1e5.
pub fn fgm_series_solution(p: &FgmParams, x1: f64, t: f64) -> Result<f64> {
    if p.gamma != 0.0 {
        return Err(Error::NotApplicable(
            "the series solution holds for the homogeneous strip only".into(),
        ));
    }
    let a = p.side;
    let decay = p.alpha0() * PI * PI * t / (a * a);
    let mut sum = p.shock * x1 / a;
    for n in 1..=100_000usize {
        let nf = n as f64;
        let cos_npi = if n % 2 == 0 { 1.0 } else { -1.0 };
        let term = (2.0 / PI) * p.shock * cos_npi / nf
            * (nf * PI * x1 / a).sin()
            * (-decay * nf * nf).exp();
        sum += term;
        if term.abs() < 1e-12 && (-decay * nf * nf).exp() < 1e-12 {
            break;
        }
    }
    Ok(sum)
}

/// Closed-form steady state of the graded strip,
/// `u = T (exp(-gamma x1) - 1) / (exp(-gamma a) - 1)`, with the
/// homogeneous limit `T x1 / a` as `gamma -> 0`.
pub fn fgm_steady_state(p: &FgmParams, x1: f64) -> f64 {
    if p.gamma == 0.0 || (p.gamma * p.side).abs() < 1e-14 {
        return p.shock * x1 / p.side;
    }
    p.shock * (-p.gamma * x1).exp_m1() / (-p.gamma * p.side).exp_m1()
}

/// Error norms of a solver run against a reference field.
#[derive(Debug, Clone)]
pub struct ErrorReport {
    pub h: Vec<f64>,
    pub max_err: Vec<f64>,
    pub rms_err: Vec<f64>,
    /// Observed order between consecutive grids,
    /// `log2(e_h / e_{h/2})` scaled to the actual spacing ratio.
    pub orders: Vec<f64>,
    /// (time, max nodal error) samples of the finest run.
    pub time_samples: Vec<(f64, f64)>,
}

impl ErrorReport {
    /// Least-squares slope of `log(err)` against `log(h)`.
    pub fn fitted_order(&self) -> f64 {
        fit_slope(&self.h, &self.max_err)
    }
}

/// Least-squares slope of log(y) vs log(x).
pub fn fit_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut den = 0.0;
    for (a, b) in lx.iter().zip(&ly) {
        num += (a - mx) * (b - my);
        den += (a - mx) * (a - mx);
    }
    num / den
}

/// Max and RMS nodal error against the problem's exact solution at `t`.
pub fn nodal_error(
    nodes: &crate::nodes::NodeSet,
    state: &DVector<f64>,
    prob: &HeatProblem,
    t: f64,
) -> (f64, f64) {
    let exact = prob.exact.as_ref().expect("problem carries a reference");
    let mut max_err: f64 = 0.0;
    let mut sum2 = 0.0;
    for (k, p) in nodes.points().iter().enumerate() {
        let e = state[k] - exact(p, t);
        max_err = max_err.max(e.abs());
        sum2 += e * e;
    }
    (max_err, (sum2 / nodes.len() as f64).sqrt())
}

/// Runs the cosine test problem over a sequence of spacings with
/// fixed-step Crank-Nicolson and reports maximum nodal errors at the
/// final time together with the observed convergence orders.
pub fn convergence_study(
    method: Method,
    cfg: &SolverConfig,
    h_list: &[f64],
    dt: f64,
    t_final: f64,
) -> Result<ErrorReport> {
    let prob = test_problem();
    let mut report = ErrorReport {
        h: h_list.to_vec(),
        max_err: Vec::new(),
        rms_err: Vec::new(),
        orders: Vec::new(),
        time_samples: Vec::new(),
    };
    for &h in h_list {
        let nodes = make_regular_grid(&prob.domain, h)?;
        let sys = assemble(&prob, &nodes, method, cfg)?;
        let traj = step_crank_nicolson(&sys, dt, t_final)?;
        let (max_err, rms) = nodal_error(&nodes, traj.final_state(), &prob, t_final);
        report.max_err.push(max_err);
        report.rms_err.push(rms);
        report.time_samples = traj
            .times
            .iter()
            .zip(&traj.states)
            .filter(|(t, _)| {
                let q = *t / (0.25 * t_final);
                (q - q.round()).abs() < 1e-9
            })
            .map(|(t, s)| (*t, nodal_error(&nodes, s, &prob, *t).0))
            .collect();
    }
    for w in 0..report.h.len().saturating_sub(1) {
        let ratio = report.h[w] / report.h[w + 1];
        report
            .orders
            .push((report.max_err[w] / report.max_err[w + 1]).ln() / ratio.ln());
    }
    Ok(report)
}

/// Wall-time measurements of one run phase.
#[derive(Debug, Clone)]
pub struct TimingRow {
    pub h: f64,
    pub nodes: usize,
    pub assemble_s: f64,
    pub solve_s: f64,
}

/// Assembly and fixed-step solve timings of the cosine test problem over
/// a sequence of spacings. Each phase is measured twice and the smaller
/// value kept; the workload itself is deterministic.
pub fn timing_study(
    method: Method,
    cfg: &SolverConfig,
    h_list: &[f64],
    dt: f64,
    t_final: f64,
) -> Result<Vec<TimingRow>> {
    let prob = test_problem();
    let mut rows = Vec::new();
    for &h in h_list {
        let nodes = make_regular_grid(&prob.domain, h)?;
        let mut assemble_s = f64::INFINITY;
        let mut solve_s = f64::INFINITY;
        for _ in 0..2 {
            let t0 = Instant::now();
            let sys = assemble(&prob, &nodes, method, cfg)?;
            assemble_s = assemble_s.min(t0.elapsed().as_secs_f64());
            let t1 = Instant::now();
            let _ = step_crank_nicolson(&sys, dt, t_final)?;
            solve_s = solve_s.min(t1.elapsed().as_secs_f64());
        }
        rows.push(TimingRow {
            h,
            nodes: nodes.len(),
            assemble_s,
            solve_s,
        });
    }
    Ok(rows)
}

/// Postprocessing probes along the strip midline at `x1/a` fractions.
pub fn fgm_probe_points(p: &FgmParams, fractions: &[f64]) -> Vec<Point2<f64>> {
    fractions
        .iter()
        .map(|f| Point2::new(f * p.side, 0.5 * p.side))
        .collect()
}
