//! Explicit integrators: classical RK4, Dormand-Prince 5(4) with PI step
//! control, and a method-of-steps DDE driver built on RK4 with cubic
//! Hermite dense output.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dynamics::{History, VectorField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Rk4,
    #[default]
    Rk45,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveConfig {
    pub t0: f64,
    pub t1: f64,
    /// Fixed step for RK4 and DDEs, initial step for RK45.
    pub dt: f64,
    pub method: Method,
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Budget of attempted steps, rejected ones included.
    pub max_steps: usize,
    /// Keep every k-th accepted step; the final point is always kept.
    pub save_every: usize,
    /// Smallest step the adaptive controller may take, and the smallest
    /// positive delay a DDE may have.
    pub min_dt: f64,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            t0: 0.0,
            t1: 1.0,
            dt: 0.01,
            method: Method::Rk45,
            abs_tol: 1e-10,
            rel_tol: 1e-8,
            max_steps: 1_000_000,
            save_every: 1,
            min_dt: 1e-12,
        }
    }
}

impl SolveConfig {
    pub fn rk4(t0: f64, t1: f64, dt: f64) -> Self {
        Self {
            t0,
            t1,
            dt,
            method: Method::Rk4,
            ..Self::default()
        }
    }

    pub fn rk45(t0: f64, t1: f64, tol: f64) -> Self {
        Self {
            t0,
            t1,
            abs_tol: tol,
            rel_tol: tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), SolveError> {
        let bad = |m: &str| Err(SolveError::InvalidConfig(m.to_string()));
        if !(self.t0.is_finite() && self.t1.is_finite()) {
            return bad("t0 and t1 must be finite");
        }
        if self.t1 <= self.t0 {
            return bad("t1 must exceed t0");
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad("dt must be positive");
        }
        if !(self.abs_tol > 0.0 && self.rel_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.min_dt.is_nan() || self.min_dt <= 0.0 {
            return bad("min_dt must be positive");
        }
        if self.max_steps == 0 || self.save_every == 0 {
            return bad("max_steps and save_every must be at least 1");
        }
        Ok(())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("initial state has length {found}, field has dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("field has delays {0:?}; use solve_dde")]
    HasDelays(Vec<f64>),
    #[error("step budget of {steps} exhausted at t = {t}")]
    MaxSteps { steps: usize, t: f64 },
    #[error("non-finite derivative at t = {t}, state {state:?}")]
    NonFinite { t: f64, state: Vec<f64> },
    #[error("step size fell below {min_dt} at t = {t}")]
    StepUnderflow { t: f64, min_dt: f64 },
    #[error("delay {delay} is smaller than the minimum step {min_dt}")]
    DelayBelowMinStep { delay: f64, min_dt: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub var_names: Vec<String>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.var_names.len()
    }

    pub fn final_state(&self) -> &[f64] {
        self.states.last().map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn var_index(&self, name: &str) -> Option<usize> {
        self.var_names.iter().position(|v| v == name)
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[k]).collect()
    }

    /// Linear interpolation; `None` outside `[times[0], times[last]]`.
    pub fn interpolate(&self, t: f64) -> Option<Vec<f64>> {
        let (first, last) = (*self.times.first()?, *self.times.last()?);
        if !(first..=last).contains(&t) {
            return None;
        }
        let j = self.times.partition_point(|&x| x < t);
        if self.times[j] == t {
            return Some(self.states[j].clone());
        }
        let (ta, tb) = (self.times[j - 1], self.times[j]);
        let w = (t - ta) / (tb - ta);
        Some(
            self.states[j - 1]
                .iter()
                .zip(&self.states[j])
                .map(|(a, b)| a + w * (b - a))
                .collect(),
        )
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            times: self.times.clone(),
            states: self
                .states
                .iter()
                .map(|s| s.iter().map(|x| c * x).collect())
                .collect(),
            var_names: self.var_names.clone(),
        }
    }

    /// CSV with header `t,<vars>`; numbers use the shortest representation
    /// that round-trips.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t");
        for v in &self.var_names {
            out.push(',');
            out.push_str(v);
        }
        out.push('\n');
        for (t, s) in self.times.iter().zip(&self.states) {
            let _ = write!(out, "{t}");
            for x in s {
                let _ = write!(out, ",{x}");
            }
            out.push('\n');
        }
        out
    }
}

struct Recorder {
    traj: Trajectory,
    save_every: usize,
    accepted: usize,
}

impl Recorder {
    fn new(f: &VectorField, t0: f64, u0: &[f64], save_every: usize) -> Self {
        Self {
            traj: Trajectory {
                times: vec![t0],
                states: vec![u0.to_vec()],
                var_names: f.var_names().to_vec(),
            },
            save_every,
            accepted: 0,
        }
    }

    fn push(&mut self, t: f64, u: &[f64], last: bool) {
        self.accepted += 1;
        if last || self.accepted.is_multiple_of(self.save_every) {
            self.traj.times.push(t);
            self.traj.states.push(u.to_vec());
        }
    }
}

fn check_finite(t: f64, u: &[f64], du: &[f64]) -> Result<(), SolveError> {
    if du.iter().chain(u).all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(SolveError::NonFinite {
            t,
            state: u.to_vec(),
        })
    }
}

fn check_input(f: &VectorField, u0: &[f64], cfg: &SolveConfig) -> Result<(), SolveError> {
    cfg.validate()?;
    if u0.len() != f.dim() {
        return Err(SolveError::DimensionMismatch {
            expected: f.dim(),
            found: u0.len(),
        });
    }
    Ok(())
}

/// Number of fixed steps covering `[t0, t1]`; the grid is `t0 + k dt` with
/// the last point moved to `t1`.
fn fixed_grid(t0: f64, t1: f64, dt: f64) -> usize {
    let n = ((t1 - t0) / dt - 1e-9).ceil();
    (n as usize).max(1)
}

fn grid_time(cfg: &SolveConfig, dt: f64, k: usize, n: usize) -> f64 {
    if k == n {
        cfg.t1
    } else {
        cfg.t0 + k as f64 * dt
    }
}

fn axpy(out: &mut [f64], u: &[f64], h: f64, k: &[f64]) {
    for ((o, a), b) in out.iter_mut().zip(u).zip(k) {
        *o = a + h * b;
    }
}

pub fn solve_ode(f: &VectorField, u0: &[f64], cfg: &SolveConfig) -> Result<Trajectory, SolveError> {
    check_input(f, u0, cfg)?;
    if !f.delays().is_empty() {
        return Err(SolveError::HasDelays(f.delays().to_vec()));
    }
    match cfg.method {
        Method::Rk4 => rk4(f, u0, cfg),
        Method::Rk45 => dopri(f, u0, cfg),
    }
}

fn rk4(f: &VectorField, u0: &[f64], cfg: &SolveConfig) -> Result<Trajectory, SolveError> {
    let n = fixed_grid(cfg.t0, cfg.t1, cfg.dt);
    if n > cfg.max_steps {
        return Err(SolveError::MaxSteps {
            steps: cfg.max_steps,
            t: cfg.t0,
        });
    }
    let d = f.dim();
    let mut rec = Recorder::new(f, cfg.t0, u0, cfg.save_every);
    let mut u = u0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
    );
    for k in 0..n {
        let t = grid_time(cfg, cfg.dt, k, n);
        let h = grid_time(cfg, cfg.dt, k + 1, n) - t;
        f.eval_into(t, &u, None, &mut k1);
        check_finite(t, &u, &k1)?;
        axpy(&mut tmp, &u, h / 2.0, &k1);
        f.eval_into(t + h / 2.0, &tmp, None, &mut k2);
        axpy(&mut tmp, &u, h / 2.0, &k2);
        f.eval_into(t + h / 2.0, &tmp, None, &mut k3);
        axpy(&mut tmp, &u, h, &k3);
        f.eval_into(t + h, &tmp, None, &mut k4);
        for i in 0..d {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let t_next = grid_time(cfg, cfg.dt, k + 1, n);
        check_finite(t_next, &u, &[])?;
        rec.push(t_next, &u, k + 1 == n);
    }
    Ok(rec.traj)
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
// Fifth-order weights minus embedded fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn dopri(f: &VectorField, u0: &[f64], cfg: &SolveConfig) -> Result<Trajectory, SolveError> {
    const SAFETY: f64 = 0.9;
    const ALPHA: f64 = 0.7 / 5.0;
    const BETA: f64 = 0.4 / 5.0;
    let d = f.dim();
    let mut rec = Recorder::new(f, cfg.t0, u0, cfg.save_every);
    let mut u = u0.to_vec();
    let mut t = cfg.t0;
    let mut h = cfg.dt.min(cfg.t1 - cfg.t0);
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; d]; 7];
    let mut tmp = vec![0.0; d];
    let mut err_prev: f64 = 1e-4;
    let mut first_same_as_last = false;
    let mut attempts = 0usize;

    while t < cfg.t1 {
        attempts += 1;
        if attempts > cfg.max_steps {
            return Err(SolveError::MaxSteps {
                steps: cfg.max_steps,
                t,
            });
        }
        let last = t + h >= cfg.t1 || (cfg.t1 - (t + h)) <= 1e-12 * cfg.t1.abs().max(1.0);
        if last {
            h = cfg.t1 - t;
        }
        if !first_same_as_last {
            f.eval_into(t, &u, None, &mut k[0]);
            check_finite(t, &u, &k[0])?;
        }
        for s in 1..7 {
            tmp.copy_from_slice(&u);
            for (j, kj) in k.iter().enumerate().take(s) {
                let a = A[s][j];
                if a != 0.0 {
                    for i in 0..d {
                        tmp[i] += h * a * kj[i];
                    }
                }
            }
            f.eval_into(t + C[s] * h, &tmp, None, &mut k[s]);
        }
        // The seventh stage is evaluated at the fifth-order solution.
        let unew = tmp.clone();
        let mut acc = 0.0;
        for i in 0..d {
            let e: f64 = (0..7).map(|s| E[s] * k[s][i]).sum::<f64>() * h;
            let sc = cfg.abs_tol + cfg.rel_tol * u[i].abs().max(unew[i].abs());
            acc += (e / sc).powi(2);
        }
        let err = if d == 0 { 0.0 } else { (acc / d as f64).sqrt() };
        if !err.is_finite() || unew.iter().any(|x| !x.is_finite()) {
            h *= 0.2;
            first_same_as_last = true;
            if h < cfg.min_dt {
                return Err(SolveError::NonFinite { t, state: u });
            }
            continue;
        }
        if err <= 1.0 {
            t = if last { cfg.t1 } else { t + h };
            u = unew;
            let (k0, rest) = k.split_at_mut(1);
            k0[0].copy_from_slice(&rest[5]);
            first_same_as_last = true;
            rec.push(t, &u, last);
            let factor = if err == 0.0 {
                5.0
            } else {
                (SAFETY * err.powf(-ALPHA) * err_prev.powf(BETA)).clamp(0.2, 5.0)
            };
            err_prev = err.max(1e-4);
            h *= factor;
        } else {
            first_same_as_last = true;
            h *= (SAFETY * err.powf(-ALPHA)).clamp(0.2, 1.0);
            if h < cfg.min_dt {
                return Err(SolveError::StepUnderflow {
                    t,
                    min_dt: cfg.min_dt,
                });
            }
        }
    }
    Ok(rec.traj)
}

/// Stored solution of a DDE: grid states with derivatives for Hermite
/// interpolation, falling back to the initial history before `t0`.
struct Dense<'a> {
    t0: f64,
    before: &'a dyn History,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
    derivs: Vec<Vec<f64>>,
}

impl Dense<'_> {
    fn at(&self, t: f64, out: &mut [f64]) {
        if t < self.t0 {
            self.before.state_at(t, out);
            return;
        }
        let n = self.derivs.len();
        let j = self.times[..n].partition_point(|&x| x < t);
        if j == 0 {
            out.copy_from_slice(&self.states[0]);
            return;
        }
        if j >= n {
            // Rounding can place a query a hair past the last point whose
            // derivative is known; clamp there.
            out.copy_from_slice(&self.states[n - 1]);
            return;
        }
        let (ta, tb) = (self.times[j - 1], self.times[j]);
        let h = tb - ta;
        let s = (t - ta) / h;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        let (ya, yb) = (&self.states[j - 1], &self.states[j]);
        let (da, db) = (&self.derivs[j - 1], &self.derivs[j]);
        for i in 0..out.len() {
            out[i] = h00 * ya[i] + h10 * h * da[i] + h01 * yb[i] + h11 * h * db[i];
        }
    }
}

/// History seen while evaluating one RK stage: zero-delay queries land on
/// the stage itself, everything earlier comes from the dense output.
struct StageHistory<'a, 'b> {
    dense: &'a Dense<'b>,
    t: f64,
    u: &'a [f64],
}

impl History for StageHistory<'_, '_> {
    fn state_at(&self, t: f64, out: &mut [f64]) {
        if t >= self.t - 1e-12 * self.t.abs().max(1.0) {
            out.copy_from_slice(self.u);
        } else {
            self.dense.at(t, out);
        }
    }
}

/// Method of steps for fixed delays. The step is `cfg.dt` reduced so that it
/// divides the smallest positive delay, which keeps every delayed lookup
/// inside already computed history. All grid points are stored, so memory
/// grows as O(steps x dim).
pub fn solve_dde(
    f: &VectorField,
    u0: &[f64],
    hist: &dyn History,
    cfg: &SolveConfig,
) -> Result<Trajectory, SolveError> {
    check_input(f, u0, cfg)?;
    let min_delay = f
        .delays()
        .iter()
        .copied()
        .filter(|&d| d > 0.0)
        .fold(f64::INFINITY, f64::min);
    let dt = if min_delay.is_finite() {
        if min_delay < cfg.min_dt {
            return Err(SolveError::DelayBelowMinStep {
                delay: min_delay,
                min_dt: cfg.min_dt,
            });
        }
        min_delay / (min_delay / cfg.dt - 1e-9).ceil().max(1.0)
    } else {
        cfg.dt
    };
    let n = fixed_grid(cfg.t0, cfg.t1, dt);
    if n > cfg.max_steps {
        return Err(SolveError::MaxSteps {
            steps: cfg.max_steps,
            t: cfg.t0,
        });
    }
    let d = f.dim();
    let mut rec = Recorder::new(f, cfg.t0, u0, cfg.save_every);
    let mut dense = Dense {
        t0: cfg.t0,
        before: hist,
        times: Vec::with_capacity(n + 1),
        states: Vec::with_capacity(n + 1),
        derivs: Vec::with_capacity(n + 1),
    };
    dense.times.push(cfg.t0);
    dense.states.push(u0.to_vec());
    let mut u = u0.to_vec();
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
        vec![0.0; d],
    );

    let stage = |dense: &Dense<'_>, t: f64, x: &[f64], out: &mut [f64]| {
        let h = StageHistory { dense, t, u: x };
        f.eval_into(t, x, Some(&h), out);
    };

    for k in 0..n {
        let t = grid_time(cfg, dt, k, n);
        let t_next = grid_time(cfg, dt, k + 1, n);
        let h = t_next - t;
        stage(&dense, t, &u, &mut k1);
        check_finite(t, &u, &k1)?;
        dense.derivs.push(k1.clone());
        axpy(&mut tmp, &u, h / 2.0, &k1);
        stage(&dense, t + h / 2.0, &tmp, &mut k2);
        axpy(&mut tmp, &u, h / 2.0, &k2);
        stage(&dense, t + h / 2.0, &tmp, &mut k3);
        axpy(&mut tmp, &u, h, &k3);
        stage(&dense, t + h, &tmp, &mut k4);
        for i in 0..d {
            u[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        check_finite(t_next, &u, &[])?;
        dense.times.push(t_next);
        dense.states.push(u.clone());
        rec.push(t_next, &u, k + 1 == n);
    }
    Ok(rec.traj)
}

/// Solves either kind of field; delayed fields get the constant history
/// `u0` before `t0`.
pub fn simulate(f: &VectorField, u0: &[f64], cfg: &SolveConfig) -> Result<Trajectory, SolveError> {
    if f.delays().is_empty() {
        solve_ode(f, u0, cfg)
    } else {
        let init = u0.to_vec();
        let hist = move |_t: f64, out: &mut [f64]| out.copy_from_slice(&init);
        solve_dde(f, u0, &hist, cfg)
    }
}
