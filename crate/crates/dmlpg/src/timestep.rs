//! Time integration of the assembled differential-algebraic system.
//!
//! Fixed-step theta schemes factorize the iteration matrix exactly once
//! and replace constraint rows by the recovery equations at the new time
//! level. The adaptive method of lines eliminates the algebraic rows
//! first, integrates the remaining linear ODE with TR-BDF2 (one
//! trapezoidal and one BDF2 stage sharing a single iteration matrix per
//! step size), and re-injects the constrained values on output.

use crate::assembly::SemiDiscreteSystem;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, Dyn};

type DenseLu = nalgebra::linalg::LU<f64, Dyn, Dyn>;

/// Time discretization selector.
#[derive(Debug, Clone, Copy)]
pub enum TimeScheme {
    CrankNicolson { dt: f64 },
    BackwardEuler { dt: f64 },
    MethodOfLines { rtol: f64, atol: f64 },
}

/// Fixed-step solution history.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    /// Matrix factorizations performed during the run.
    pub factorizations: usize,
}

impl Trajectory {
    pub fn final_state(&self) -> &DVector<f64> {
        self.states.last().expect("non-empty trajectory")
    }

    /// State at a recorded time, matched within `1e-9 * t_max`.
    pub fn state_at(&self, t: f64) -> Option<&DVector<f64>> {
        let tol = 1e-9 * self.times.last().copied().unwrap_or(1.0).max(1.0);
        self.times
            .iter()
            .position(|&ti| (ti - t).abs() <= tol)
            .map(|i| &self.states[i])
    }
}

fn checked_step_count(dt: f64, t_final: f64) -> Result<usize> {
    if dt <= 0.0 {
        return Err(Error::InvalidConfig(format!("dt = {dt} must be positive")));
    }
    let ratio = t_final / dt;
    let n = ratio.round();
    if n < 1.0 || (ratio - n).abs() > 1e-12 * ratio.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "dt = {dt} does not divide the final time {t_final}"
        )));
    }
    Ok(n as usize)
}

/// Crank-Nicolson stepping with constraint rows replaced by the recovery
/// equations at the new time level. One factorization per run.
pub fn step_crank_nicolson(
    sys: &SemiDiscreteSystem,
    dt: f64,
    t_final: f64,
) -> Result<Trajectory> {
    theta_scheme(sys, dt, t_final, 0.5)
}

/// Backward Euler stepping; same constraint handling as Crank-Nicolson.
pub fn step_backward_euler(sys: &SemiDiscreteSystem, dt: f64, t_final: f64) -> Result<Trajectory> {
    theta_scheme(sys, dt, t_final, 1.0)
}

fn theta_scheme(sys: &SemiDiscreteSystem, dt: f64, t_final: f64, theta: f64) -> Result<Trajectory> {
    let nsteps = checked_step_count(dt, t_final)?;
    let n = sys.n();

    // Iteration matrix: A1/dt + theta A on differential rows, the
    // constraint rows of A verbatim.
    let mut c = sys.a1.to_dense() / dt;
    let a_dense = sys.a.to_dense();
    for i in 0..n {
        if sys.is_constraint(i) {
            for j in 0..n {
                c[(i, j)] = a_dense[(i, j)];
            }
        } else {
            for j in 0..n {
                c[(i, j)] += theta * a_dense[(i, j)];
            }
        }
    }
    let lu = c.lu();
    let factorizations = 1;

    let mut u = sys.u0.clone();
    let mut times = Vec::with_capacity(nsteps + 1);
    let mut states = Vec::with_capacity(nsteps + 1);
    times.push(0.0);
    states.push(u.clone());
    let mut b_old = sys.b(0.0);
    for step in 1..=nsteps {
        let t_new = if step == nsteps {
            t_final
        } else {
            step as f64 * dt
        };
        let b_new = sys.b(t_new);
        let a1u = sys.a1.mul_vec(&u);
        let au = sys.a.mul_vec(&u);
        let mut rhs = DVector::zeros(n);
        for i in 0..n {
            rhs[i] = if sys.is_constraint(i) {
                b_new[i]
            } else {
                a1u[i] / dt - (1.0 - theta) * au[i] + theta * b_new[i] + (1.0 - theta) * b_old[i]
            };
        }
        u = lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("theta-scheme iteration matrix".into()))?;
        times.push(t_new);
        states.push(u.clone());
        b_old = b_new;
    }
    Ok(Trajectory {
        times,
        states,
        factorizations,
    })
}

/// Index bookkeeping and factorizations for eliminating the algebraic
/// constraint rows: with `B` the constraint block of `A`, the constrained
/// nodal values satisfy `u_c = B_cc^{-1} (g(t) - B_cf u_f)`.
pub(crate) struct Reduction {
    pub free: Vec<usize>,
    pub cons: Vec<usize>,
    b_cc_lu: DenseLu,
    b_cf: DMatrix<f64>,
}

impl Reduction {
    pub fn new(sys: &SemiDiscreteSystem) -> Result<Self> {
        let n = sys.n();
        let cons = sys.constraint_rows.clone();
        let free: Vec<usize> = (0..n).filter(|&i| !sys.is_constraint(i)).collect();
        let b_cc = sys.a.dense_block(&cons, &cons);
        let b_cf = sys.a.dense_block(&cons, &free);
        let b_cc_lu = b_cc.lu();
        if !cons.is_empty() && !b_cc_lu.is_invertible() {
            return Err(Error::SingularSystem(
                "constraint block is singular; boundary recovery rows are degenerate".into(),
            ));
        }
        Ok(Reduction {
            free,
            cons,
            b_cc_lu,
            b_cf,
        })
    }

    /// `B_cc^{-1} x` for a vector on the constraint index set.
    pub fn solve_cc(&self, x: &DVector<f64>) -> DVector<f64> {
        if self.cons.is_empty() {
            return DVector::zeros(0);
        }
        self.b_cc_lu.solve(x).expect("checked at construction")
    }

    /// `B_cc^{-1} X` for a matrix with constraint-set rows.
    pub fn solve_cc_mat(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        if self.cons.is_empty() {
            return DMatrix::zeros(0, x.ncols());
        }
        self.b_cc_lu.solve(x).expect("checked at construction")
    }

    pub fn gather(&self, full: &DVector<f64>, idx: &[usize]) -> DVector<f64> {
        DVector::from_iterator(idx.len(), idx.iter().map(|&i| full[i]))
    }

    /// Full nodal vector from free values and constraint data `g`.
    pub fn inject(&self, u_f: &DVector<f64>, g: &DVector<f64>, n: usize) -> DVector<f64> {
        let mut full = DVector::zeros(n);
        for (i, &k) in self.free.iter().enumerate() {
            full[k] = u_f[i];
        }
        if !self.cons.is_empty() {
            let u_c = self.solve_cc(&(g - &self.b_cf * u_f));
            for (i, &k) in self.cons.iter().enumerate() {
                full[k] = u_c[i];
            }
        }
        full
    }
}

/// Crank-Nicolson with the constraint unknowns eliminated exactly (Schur
/// complement of the row-replaced step). Agrees with
/// [`step_crank_nicolson`] to roundoff; kept as an independent route for
/// consistency checks.
pub fn step_crank_nicolson_eliminated(
    sys: &SemiDiscreteSystem,
    dt: f64,
    t_final: f64,
) -> Result<Trajectory> {
    let nsteps = checked_step_count(dt, t_final)?;
    let n = sys.n();
    let red = Reduction::new(sys)?;
    let (free, cons) = (&red.free, &red.cons);

    let a1_ff = sys.a1.dense_block(free, free);
    let a1_fc = sys.a1.dense_block(free, cons);
    let a_ff = sys.a.dense_block(free, free);
    let a_fc = sys.a.dense_block(free, cons);
    // X = B_cc^{-1} B_cf maps free values to constrained values.
    let x_map = red.solve_cc_mat(&red.b_cf.clone());

    let c_ff = &a1_ff / dt + &a_ff * 0.5;
    let c_fc = &a1_fc / dt + &a_fc * 0.5;
    let reduced = &c_ff - &c_fc * &x_map;
    let lu = reduced.lu();

    let mut u = sys.u0.clone();
    let mut times = vec![0.0];
    let mut states = vec![u.clone()];
    let mut b_old = sys.b(0.0);
    for step in 1..=nsteps {
        let t_new = if step == nsteps {
            t_final
        } else {
            step as f64 * dt
        };
        let b_new = sys.b(t_new);
        let a1u = sys.a1.mul_vec(&u);
        let au = sys.a.mul_vec(&u);
        let rhs_f = DVector::from_iterator(
            free.len(),
            free.iter().map(|&i| {
                a1u[i] / dt - 0.5 * au[i] + 0.5 * (b_new[i] + b_old[i])
            }),
        );
        let g_new = red.gather(&b_new, cons);
        let rhs = rhs_f - &c_fc * red.solve_cc(&g_new);
        let u_f = lu
            .solve(&rhs)
            .ok_or_else(|| Error::SingularSystem("reduced iteration matrix".into()))?;
        u = red.inject(&u_f, &g_new, n);
        times.push(t_new);
        states.push(u.clone());
        b_old = b_new;
    }
    Ok(Trajectory {
        times,
        states,
        factorizations: 2, // constraint block + reduced matrix
    })
}

/// Adaptive method-of-lines solution sampled at the requested times.
#[derive(Debug, Clone)]
pub struct MolSolution {
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
    pub steps_accepted: usize,
    pub steps_rejected: usize,
    pub factorizations: usize,
}

/// TR-BDF2 constants: both stages share the iteration matrix
/// `M + d dt K` with `d = gamma / 2`.
const TRBDF2_GAMMA: f64 = 2.0 - std::f64::consts::SQRT_2;

struct ReducedOde {
    red: Reduction,
    m_red: DMatrix<f64>,
    k_red: DMatrix<f64>,
    a1_fc: DMatrix<f64>,
    a_fc: DMatrix<f64>,
    n: usize,
    t_final: f64,
}

impl ReducedOde {
    fn new(sys: &SemiDiscreteSystem) -> Result<Self> {
        let red = Reduction::new(sys)?;
        let (free, cons) = (&red.free, &red.cons);
        let a1_ff = sys.a1.dense_block(free, free);
        let a1_fc = sys.a1.dense_block(free, cons);
        let a_ff = sys.a.dense_block(free, free);
        let a_fc = sys.a.dense_block(free, cons);
        let x_map = red.solve_cc_mat(&red.b_cf.clone());
        let m_red = &a1_ff - &a1_fc * &x_map;
        let k_red = &a_ff - &a_fc * &x_map;
        Ok(ReducedOde {
            red,
            m_red,
            k_red,
            a1_fc,
            a_fc,
            n: sys.n(),
            t_final: sys.t_final,
        })
    }

    /// Constraint data and its time derivative (one-sided at t = 0; the
    /// data only needs to be evaluable inside the integration window).
    fn constraint_data(&self, sys: &SemiDiscreteSystem, t: f64) -> (DVector<f64>, DVector<f64>) {
        let tau = 1e-6 * self.t_final.max(1.0);
        let g = self.red.gather(&sys.b(t), &self.red.cons);
        let gdot = if t >= tau {
            let gp = self.red.gather(&sys.b(t + tau), &self.red.cons);
            let gm = self.red.gather(&sys.b(t - tau), &self.red.cons);
            (gp - gm) / (2.0 * tau)
        } else {
            let gp = self.red.gather(&sys.b(t + tau), &self.red.cons);
            (gp - &g) / tau
        };
        (g, gdot)
    }

    /// Reduced load `b_f - A_fc B_cc^{-1} g - A1_fc B_cc^{-1} g'`.
    fn load(&self, sys: &SemiDiscreteSystem, t: f64) -> DVector<f64> {
        let b_full = sys.b(t);
        let mut out = self.red.gather(&b_full, &self.red.free);
        if !self.red.cons.is_empty() {
            let (g, gdot) = self.constraint_data(sys, t);
            out -= &self.a_fc * self.red.solve_cc(&g);
            out -= &self.a1_fc * self.red.solve_cc(&gdot);
        }
        out
    }

    fn inject(&self, sys: &SemiDiscreteSystem, u_f: &DVector<f64>, t: f64) -> DVector<f64> {
        let g = self.red.gather(&sys.b(t), &self.red.cons);
        self.red.inject(u_f, &g, self.n)
    }
}

/// Integrates the system over `[0, t_final]` with TR-BDF2 and local
/// error control, returning the full nodal states at each time in
/// `t_eval` (which must be sorted ascending within `[0, t_final]`).
///
/// The Jacobian pair is constant, so the iteration matrix is refactorized
/// only when the step size changes.
pub fn solve_method_of_lines(
    sys: &SemiDiscreteSystem,
    rtol: f64,
    atol: f64,
    t_eval: &[f64],
) -> Result<MolSolution> {
    if rtol <= 0.0 || atol <= 0.0 {
        return Err(Error::InvalidConfig(
            "tolerances must be positive".into(),
        ));
    }
    let t_final = sys.t_final;
    if t_eval.windows(2).any(|w| w[1] <= w[0])
        || t_eval.first().is_some_and(|&t| t < 0.0)
        || t_eval.last().is_some_and(|&t| t > t_final * (1.0 + 1e-12))
    {
        return Err(Error::InvalidConfig(
            "evaluation times must be strictly increasing within the time span".into(),
        ));
    }
    let ode = ReducedOde::new(sys)?;
    let nf = ode.red.free.len();

    let mut out = MolSolution {
        times: Vec::with_capacity(t_eval.len()),
        states: Vec::with_capacity(t_eval.len()),
        steps_accepted: 0,
        steps_rejected: 0,
        factorizations: 0,
    };

    // Pure-constraint systems need no integration at all.
    if nf == 0 {
        for &t in t_eval {
            out.times.push(t);
            out.states.push(ode.inject(sys, &DVector::zeros(0), t));
        }
        return Ok(out);
    }

    let gamma = TRBDF2_GAMMA;
    let d = 0.5 * gamma;
    let c_gamma = 1.0 / (gamma * (2.0 - gamma));
    let c_prev = (1.0 - gamma) * (1.0 - gamma) / (gamma * (2.0 - gamma));
    let err_const = (-3.0 * gamma * gamma + 4.0 * gamma - 2.0) / (12.0 * (2.0 - gamma));

    let mut u = ode.red.gather(&sys.u0, &ode.red.free);
    let mut t = 0.0;
    let mut eval_idx = 0usize;
    let span = t_final.max(f64::MIN_POSITIVE);
    let tol_t = 1e-12 * span;

    // Record any evaluation points at t = 0 before stepping.
    while eval_idx < t_eval.len() && t_eval[eval_idx] <= tol_t {
        out.times.push(t_eval[eval_idx]);
        out.states.push(ode.inject(sys, &u, t_eval[eval_idx]));
        eval_idx += 1;
    }

    let mut dt = (1e-6 * span).min(span);
    let mut factored_dt = f64::NAN;
    let mut lu: Option<DenseLu> = None;
    let mut f_now = ode.load(sys, 0.0) - &ode.k_red * &u;
    let max_steps = 1_000_000usize;

    for _ in 0..max_steps {
        if t >= t_final - tol_t {
            break;
        }
        // Clamp the step to the next output or the final time.
        let mut dt_step = dt.min(t_final - t);
        if eval_idx < t_eval.len() {
            let target = t_eval[eval_idx];
            if t + dt_step > target - tol_t {
                dt_step = target - t;
            }
        }
        if dt_step < 1e-14 * span {
            return Err(Error::IntegratorFailure {
                t,
                dt: dt_step,
                message: "step size underflow".into(),
            });
        }
        if lu.is_none() || (dt_step - factored_dt).abs() > 1e-12 * factored_dt.abs() {
            let c = &ode.m_red + &ode.k_red * (d * dt_step);
            let f = c.lu();
            if !f.is_invertible() {
                return Err(Error::SingularSystem(
                    "method-of-lines iteration matrix".into(),
                ));
            }
            lu = Some(f);
            factored_dt = dt_step;
            out.factorizations += 1;
        }
        let fac = lu.as_ref().unwrap();

        let t_gamma = t + gamma * dt_step;
        let t_new = t + dt_step;
        let g_gamma = ode.load(sys, t_gamma);
        let g_new = ode.load(sys, t_new);

        // Trapezoidal stage.
        let rhs1 = &ode.m_red * &u + (&f_now + &g_gamma) * (d * dt_step);
        let u_gamma = fac.solve(&rhs1).expect("factor verified");
        let f_gamma = &g_gamma - &ode.k_red * &u_gamma;

        // BDF2 stage.
        let rhs2 = &ode.m_red * (&u_gamma * c_gamma - &u * c_prev) + &g_new * (d * dt_step);
        let u_new = fac.solve(&rhs2).expect("factor verified");
        let f_new = &g_new - &ode.k_red * &u_new;

        // Filtered local error estimate.
        let raw = (&f_now / gamma - &f_gamma / (gamma * (1.0 - gamma)) + &f_new / (1.0 - gamma))
            * (2.0 * err_const * dt_step);
        let est = fac.solve(&raw).expect("factor verified");
        let mut err2 = 0.0;
        for i in 0..nf {
            let sc = atol + rtol * u[i].abs().max(u_new[i].abs());
            let e = est[i] / sc;
            err2 += e * e;
        }
        let err = (err2 / nf as f64).sqrt();

        if err <= 1.0 || dt_step <= 1e-13 * span {
            t = t_new;
            u = u_new;
            f_now = f_new;
            out.steps_accepted += 1;
            while eval_idx < t_eval.len() && (t_eval[eval_idx] - t).abs() <= tol_t.max(1e-9 * span)
            {
                out.times.push(t_eval[eval_idx]);
                out.states.push(ode.inject(sys, &u, t));
                eval_idx += 1;
            }
            let grow = (0.9 * err.powf(-1.0 / 3.0)).clamp(0.2, 5.0);
            dt = (dt_step * grow).min(span);
        } else {
            out.steps_rejected += 1;
            let shrink = (0.9 * err.powf(-1.0 / 3.0)).clamp(0.1, 0.5);
            dt = dt_step * shrink;
        }
    }

    if eval_idx < t_eval.len() {
        return Err(Error::IntegratorFailure {
            t,
            dt,
            message: "maximum step count exceeded before reaching all outputs".into(),
        });
    }
    Ok(out)
}
