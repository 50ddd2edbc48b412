//! Low-storage RK3 time advancement, the CFL time-step estimate, and the
//! driver loop with step callbacks and wall-time accounting.

use std::time::Instant;

use super::{SolutionField, Solver, Workspace};
use crate::error::{Error, Result};

/// Williamson three-stage low-storage (2N) RK3 coefficients.
pub const RK3_A: [f64; 3] = [0.0, -5.0 / 9.0, -153.0 / 128.0];
pub const RK3_B: [f64; 3] = [1.0 / 3.0, 15.0 / 16.0, 8.0 / 15.0];
pub const RK3_C: [f64; 3] = [0.0, 1.0 / 3.0, 3.0 / 4.0];

/// One low-storage RK3 step of y' = rhs(t, y) on a flat state vector.
///
/// `register` and `dudt` are caller-owned scratch of the same length as `y`.
/// This is the same kernel the PDE solver uses, so scalar ODE diagnostics
/// exercise the production coefficients.
pub fn lsrk3_advance<E>(
    y: &mut [f64],
    register: &mut [f64],
    dudt: &mut [f64],
    dt: f64,
    t: f64,
    mut rhs: impl FnMut(f64, &[f64], &mut [f64]) -> std::result::Result<(), E>,
) -> std::result::Result<(), E> {
    for s in 0..3 {
        rhs(t + RK3_C[s] * dt, y, dudt)?;
        let (a, b) = (RK3_A[s], RK3_B[s]);
        if s == 0 {
            for ((y, r), f) in y.iter_mut().zip(register.iter_mut()).zip(dudt.iter()) {
                *r = dt * *f;
                *y += b * *r;
            }
        } else {
            for ((y, r), f) in y.iter_mut().zip(register.iter_mut()).zip(dudt.iter()) {
                *r = a * *r + dt * *f;
                *y += b * *r;
            }
        }
    }
    Ok(())
}

/// Run termination condition.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub t_end: Option<f64>,
    pub n_steps: Option<usize>,
    /// Hard step cap guarding against vanishing time steps.
    pub max_steps: usize,
}

impl RunOptions {
    pub fn until(t_end: f64) -> Self {
        Self {
            t_end: Some(t_end),
            n_steps: None,
            max_steps: 50_000_000,
        }
    }

    pub fn steps(n: usize) -> Self {
        Self {
            t_end: None,
            n_steps: Some(n),
            max_steps: 50_000_000,
        }
    }
}

/// Per-step information passed to run callbacks (after the step).
#[derive(Debug, Clone, Copy)]
pub struct StepInfo {
    pub step: usize,
    pub time: f64,
    pub dt: f64,
}

/// Outcome of a completed run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub steps: usize,
    /// Start and end times of this run segment.
    pub t_start: f64,
    pub time: f64,
    /// Pure compute seconds per step (callbacks and I/O excluded).
    pub step_seconds: Vec<f64>,
}

impl RunReport {
    /// Mean wall seconds per iteration, excluding the first `warmup` steps.
    pub fn sec_per_iter(&self, warmup: usize) -> Option<f64> {
        let tail = self.step_seconds.get(warmup..)?;
        if tail.is_empty() {
            return None;
        }
        Some(tail.iter().sum::<f64>() / tail.len() as f64)
    }

    /// Mean time step over the run segment.
    pub fn mean_dt(&self) -> Option<f64> {
        (self.steps > 0).then(|| (self.time - self.t_start) / self.steps as f64)
    }

    /// Wall seconds per convective time unit of `ctu_duration` solver time
    /// (chord / U; 1 in solver units for unit references).
    pub fn sec_per_ctu(&self, warmup: usize, ctu_duration: f64) -> Option<f64> {
        Some(self.sec_per_iter(warmup)? / self.mean_dt()? * ctu_duration)
    }
}

impl Solver {
    /// CFL time-step estimate:
    /// dt = CFL * min over nodes of [ dx/(|v|+a), dx^2 rho / (c_visc (mu+mu_t)) ]
    /// with dx = (J w_bar)^{1/3} / (N+1) and w_bar the uniform nodal share of
    /// the reference volume, 8/(N+1)^3.
    ///
    /// Deterministic: the same field gives the same dt bit for bit.
    pub fn compute_dt(&self, q: &SolutionField, ws: &mut Workspace) -> Result<f64> {
        self.validate_field(&q.data)?;
        let viscous = self.needs_gradients();
        self.prepare_stage(&q.data, 0.0, &mut ws.op, viscous);
        Ok(self.dt_from_scratch(&ws.op))
    }

    pub(crate) fn dt_from_scratch(&self, op: &super::operator::OpScratch) -> f64 {
        let np = self.basis.len();
        let nn = self.nodes_per_element();
        let npf = np as f64;
        let w_bar = 8.0 / (npf * npf * npf);
        let c_visc = 2.5;
        let mu = self.scheme.gas.mu;
        let mut min_dt = f64::INFINITY;
        for (e, elem) in self.geom.elems.iter().enumerate() {
            for node in 0..nn {
                let dx = (elem.jac[node] * w_bar).cbrt() / npf;
                let q = &op.prim[e * nn + node];
                let speed = (q.v[0] * q.v[0] + q.v[1] * q.v[1] + q.v[2] * q.v[2]).sqrt() + q.a;
                let mut dt = dx / speed;
                let mu_eff = mu + op.mu_t[e * nn + node];
                if mu_eff > 0.0 {
                    dt = dt.min(dx * dx * q.rho / (c_visc * mu_eff));
                }
                min_dt = min_dt.min(dt);
            }
        }
        self.scheme.cfl * min_dt
    }

    pub(crate) fn prepare_stage(
        &self,
        data: &[f64],
        t: f64,
        op: &mut super::operator::OpScratch,
        viscous: bool,
    ) {
        self.update_primitives(data, op);
        if viscous {
            self.gradient_face_phase(data, op, t);
            self.gradient_element_phase(op);
        }
    }

    /// One Williamson low-storage RK3 step at fixed dt.
    ///
    /// On a divergence (NaN or positivity loss after any stage) the error
    /// carries the step and stage index; the field is left as-is for
    /// diagnosis, so callers keep their own last-valid copy.
    pub fn rk3_step(
        &self,
        q: &mut SolutionField,
        dt: f64,
        t: f64,
        step: usize,
        ws: &mut Workspace,
    ) -> Result<()> {
        let viscous = self.needs_gradients();
        let Workspace { op, dudt, rk } = ws;
        for s in 0..3 {
            let ts = t + RK3_C[s] * dt;
            self.prepare_stage(&q.data, ts, op, viscous);
            self.finish_operator(&q.data, ts, op, dudt, viscous);
            let (a, b) = (RK3_A[s], RK3_B[s]);
            if s == 0 {
                for ((y, r), f) in q.data.iter_mut().zip(rk.iter_mut()).zip(dudt.iter()) {
                    *r = dt * *f;
                    *y += b * *r;
                }
            } else {
                for ((y, r), f) in q.data.iter_mut().zip(rk.iter_mut()).zip(dudt.iter()) {
                    *r = a * *r + dt * *f;
                    *y += b * *r;
                }
            }
            self.validate_field(&q.data).map_err(|e| Error::Divergence {
                step,
                stage: s,
                detail: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Advance `q` from (t0, step0) until the run options are met, invoking
    /// the callback after every accepted step (outside the timed section).
    ///
    /// The time step is recomputed from the CFL condition each step unless the
    /// scheme pins a fixed dt. On divergence the field is restored to the last
    /// valid state and the error is returned.
    pub fn run(
        &self,
        q: &mut SolutionField,
        t0: f64,
        step0: usize,
        opts: RunOptions,
        ws: &mut Workspace,
        mut callback: impl FnMut(&StepInfo, &SolutionField, &Workspace) -> Result<()>,
    ) -> Result<RunReport> {
        self.validate_field(&q.data)?;
        let viscous = self.needs_gradients();
        let mut t = t0;
        let mut step = step0;
        let mut done = 0usize;
        let mut step_seconds = Vec::new();
        let mut prev = q.data.clone();
        let t_tol = 1e-12;
        loop {
            if let Some(n) = opts.n_steps {
                if done >= n {
                    break;
                }
            }
            if let Some(te) = opts.t_end {
                if t >= te - t_tol * te.abs().max(1.0) {
                    break;
                }
            }
            if done >= opts.max_steps {
                return Err(Error::Config(format!(
                    "step cap {} reached at t = {t}",
                    opts.max_steps
                )));
            }
            prev.copy_from_slice(&q.data);
            let clock = Instant::now();
            // stage 0 preparation doubles as the dt estimate input
            let dt = {
                let Workspace { op, .. } = ws;
                self.prepare_stage(&q.data, t, op, viscous);
                let mut dt = match self.scheme.fixed_dt {
                    Some(dt) => dt,
                    None => self.dt_from_scratch(op),
                };
                if let Some(te) = opts.t_end {
                    dt = dt.min(te - t);
                }
                dt
            };
            let result = self.rk3_step_prepared(q, dt, t, step, ws, viscous);
            let elapsed = clock.elapsed().as_secs_f64();
            if let Err(e) = result {
                q.data.copy_from_slice(&prev);
                return Err(e);
            }
            step_seconds.push(elapsed);
            t += dt;
            step += 1;
            done += 1;
            callback(
                &StepInfo {
                    step,
                    time: t,
                    dt,
                },
                q,
                ws,
            )?;
        }
        Ok(RunReport {
            steps: done,
            t_start: t0,
            time: t,
            step_seconds,
        })
    }

    /// RK3 step where stage 0's primitive/gradient preparation has already
    /// run (shared with the dt estimate).
    fn rk3_step_prepared(
        &self,
        q: &mut SolutionField,
        dt: f64,
        t: f64,
        step: usize,
        ws: &mut Workspace,
        viscous: bool,
    ) -> Result<()> {
        let Workspace { op, dudt, rk } = ws;
        for s in 0..3 {
            let ts = t + RK3_C[s] * dt;
            if s > 0 {
                self.prepare_stage(&q.data, ts, op, viscous);
            }
            self.finish_operator(&q.data, ts, op, dudt, viscous);
            let (a, b) = (RK3_A[s], RK3_B[s]);
            if s == 0 {
                for ((y, r), f) in q.data.iter_mut().zip(rk.iter_mut()).zip(dudt.iter()) {
                    *r = dt * *f;
                    *y += b * *r;
                }
            } else {
                for ((y, r), f) in q.data.iter_mut().zip(rk.iter_mut()).zip(dudt.iter()) {
                    *r = a * *r + dt * *f;
                    *y += b * *r;
                }
            }
            self.validate_field(&q.data).map_err(|e| Error::Divergence {
                step,
                stage: s,
                detail: e.to_string(),
            })?;
        }
        Ok(())
    }
}
