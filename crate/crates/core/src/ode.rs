//! Integration of `dx/dt = v_t(x)` from t = 0 to t = 1.
//!
//! Two methods: adaptive Dormand–Prince 5(4) with the usual mixed
//! absolute/relative error control, and fixed-step classical RK4.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::field::EmpiricalField;
use crate::path::{ConditionalPath, Schedule};

/// A time-dependent vector field on `R^d`.
pub trait VelocityField: Sync {
    fn dim(&self) -> usize;
    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()>;
}

impl<S: Schedule> VelocityField for EmpiricalField<S> {
    fn dim(&self) -> usize {
        EmpiricalField::dim(self)
    }

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.velocity_into(t, x, out)
    }
}

impl<S: Schedule> VelocityField for ConditionalPath<S> {
    fn dim(&self) -> usize {
        self.kernel().dim()
    }

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        out.copy_from_slice(&self.velocity(t, x)?);
        Ok(())
    }
}

/// Adapts a closure `(t, x, out)` into a [`VelocityField`].
pub struct FnField<F> {
    dim: usize,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> VelocityField for FnField<F>
where
    F: Fn(f64, &[f64], &mut [f64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        (self.f)(t, x, out);
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OdeMethod {
    Dopri5,
    Rk4Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OdeConfig {
    pub method: OdeMethod,
    pub atol: f64,
    pub rtol: f64,
    /// Cap on attempted steps (accepted plus rejected).
    pub max_steps: usize,
    /// Number of steps for `Rk4Fixed`.
    pub fixed_steps: usize,
    pub max_step: f64,
    /// Keep every accepted knot instead of only the endpoints.
    pub record_knots: bool,
}

impl Default for OdeConfig {
    fn default() -> Self {
        Self {
            method: OdeMethod::Dopri5,
            atol: 1e-5,
            rtol: 1e-5,
            max_steps: 100_000,
            fixed_steps: 1000,
            max_step: 1.0,
            record_knots: false,
        }
    }
}

impl OdeConfig {
    pub fn dopri5(atol: f64, rtol: f64) -> Self {
        Self { atol, rtol, ..Self::default() }
    }

    pub fn rk4(steps: usize) -> Self {
        Self { method: OdeMethod::Rk4Fixed, fixed_steps: steps, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.atol > 0.0 && self.rtol > 0.0) {
            return Err(Error::input("atol and rtol must be positive"));
        }
        if self.max_steps == 0 || !(self.max_step > 0.0) {
            return Err(Error::input("max_steps and max_step must be positive"));
        }
        if self.method == OdeMethod::Rk4Fixed && self.fixed_steps == 0 {
            return Err(Error::input("rk4_fixed needs at least one step"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn endpoint(&self) -> &[f64] {
        self.states.last().expect("trajectory holds at least the initial state")
    }
}

// Dormand–Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// Difference between the 5th and embedded 4th order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 10.0;

struct Recorder {
    keep_knots: bool,
    times: Vec<f64>,
    states: Vec<Vec<f64>>,
}

impl Recorder {
    fn new(keep_knots: bool, x0: &[f64]) -> Self {
        Self { keep_knots, times: vec![0.0], states: vec![x0.to_vec()] }
    }

    fn push(&mut self, t: f64, x: &[f64]) {
        if self.keep_knots {
            self.times.push(t);
            self.states.push(x.to_vec());
        }
    }

    fn finish(mut self, t: f64, x: &[f64], accepted: usize, rejected: usize) -> Trajectory {
        if !self.keep_knots && t > 0.0 {
            self.times.push(t);
            self.states.push(x.to_vec());
        }
        Trajectory { times: self.times, states: self.states, accepted_steps: accepted, rejected_steps: rejected }
    }
}

fn eval_checked<F: VelocityField + ?Sized>(field: &F, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
    field.eval(t, x, out)?;
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Evaluation(format!("non-finite field value at t = {t}")));
    }
    Ok(())
}

fn rms(v: impl Iterator<Item = f64>, n: usize) -> f64 {
    (v.map(|e| e * e).sum::<f64>() / n as f64).sqrt()
}

/// Integrates the flow ODE from `x0` at t = 0 up to t = 1.
pub fn integrate<F: VelocityField + ?Sized>(field: &F, x0: &[f64], cfg: &OdeConfig) -> Result<Trajectory> {
    cfg.validate()?;
    check_dim(field.dim(), x0.len(), "ODE initial state")?;
    match cfg.method {
        OdeMethod::Dopri5 => dopri5(field, x0, cfg),
        OdeMethod::Rk4Fixed => rk4(field, x0, cfg),
    }
}

fn rk4<F: VelocityField + ?Sized>(field: &F, x0: &[f64], cfg: &OdeConfig) -> Result<Trajectory> {
    let d = x0.len();
    let n = cfg.fixed_steps;
    let h = 1.0 / n as f64;
    let mut x = x0.to_vec();
    let mut k = vec![vec![0.0; d]; 4];
    let mut tmp = vec![0.0; d];
    let mut rec = Recorder::new(cfg.record_knots, x0);
    for i in 0..n {
        let t = i as f64 * h;
        eval_checked(field, t, &x, &mut k[0])?;
        for j in 0..d {
            tmp[j] = x[j] + 0.5 * h * k[0][j];
        }
        eval_checked(field, t + 0.5 * h, &tmp, &mut k[1])?;
        for j in 0..d {
            tmp[j] = x[j] + 0.5 * h * k[1][j];
        }
        eval_checked(field, t + 0.5 * h, &tmp, &mut k[2])?;
        for j in 0..d {
            tmp[j] = x[j] + h * k[2][j];
        }
        let t_next = if i + 1 == n { 1.0 } else { (i + 1) as f64 * h };
        eval_checked(field, t_next, &tmp, &mut k[3])?;
        for j in 0..d {
            x[j] += h / 6.0 * (k[0][j] + 2.0 * k[1][j] + 2.0 * k[2][j] + k[3][j]);
        }
        rec.push(t_next, &x);
    }
    Ok(rec.finish(1.0, &x, n, 0))
}

fn initial_step<F: VelocityField + ?Sized>(
    field: &F,
    x0: &[f64],
    f0: &[f64],
    cfg: &OdeConfig,
    span: f64,
) -> Result<f64> {
    let d = x0.len();
    let scale: Vec<f64> = x0.iter().map(|v| cfg.atol + cfg.rtol * v.abs()).collect();
    let d0 = rms(x0.iter().zip(&scale).map(|(x, s)| x / s), d);
    let d1 = rms(f0.iter().zip(&scale).map(|(f, s)| f / s), d);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 }.min(span);
    let x1: Vec<f64> = x0.iter().zip(f0).map(|(x, f)| x + h0 * f).collect();
    let mut f1 = vec![0.0; d];
    eval_checked(field, h0, &x1, &mut f1)?;
    let d2 = rms(f1.iter().zip(f0).zip(&scale).map(|((a, b), s)| (a - b) / s), d) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        // No local scale at all: the field vanishes to first order, take the whole span.
        span
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    let h = if d1.max(d2) <= 1e-15 { h1 } else { (100.0 * h0).min(h1) };
    Ok(h.min(cfg.max_step).min(span))
}

fn dopri5<F: VelocityField + ?Sized>(field: &F, x0: &[f64], cfg: &OdeConfig) -> Result<Trajectory> {
    let d = x0.len();
    let mut t = 0.0;
    let mut x = x0.to_vec();
    let mut k = vec![vec![0.0; d]; 7];
    eval_checked(field, 0.0, &x, &mut k[0])?;
    let mut h = initial_step(field, &x, &k[0], cfg, 1.0)?;
    let mut stage = vec![0.0; d];
    let mut x_new = vec![0.0; d];
    let mut k_stage = vec![0.0; d];
    let (mut accepted, mut rejected) = (0usize, 0usize);
    let mut rec = Recorder::new(cfg.record_knots, x0);
    let mut last_rejected = false;

    while t < 1.0 {
        if accepted + rejected >= cfg.max_steps {
            let partial = rec.finish(t, &x, accepted, rejected);
            return Err(Error::Nonconvergence { max_steps: cfg.max_steps, t_reached: t, partial: Box::new(partial) });
        }
        let mut final_step = false;
        if t + h >= 1.0 {
            h = 1.0 - t;
            final_step = true;
        }
        for s in 1..7 {
            for j in 0..d {
                let acc: f64 = (0..s).map(|r| A[s][r] * k[r][j]).sum();
                stage[j] = x[j] + h * acc;
            }
            let ts = if final_step && C[s] == 1.0 { 1.0 } else { t + C[s] * h };
            eval_checked(field, ts, &stage, &mut k_stage)?;
            k[s].copy_from_slice(&k_stage);
        }
        // The last stage row equals the 5th-order weights, so `stage` is the new
        // state and `k[6]` already holds the FSAL derivative there.
        x_new.copy_from_slice(&stage);
        let t_new = if final_step { 1.0 } else { t + h };
        let err = rms(
            (0..d).map(|j| {
                let e: f64 = (0..7).map(|s| E[s] * k[s][j]).sum::<f64>() * h;
                e / (cfg.atol + cfg.rtol * x[j].abs().max(x_new[j].abs()))
            }),
            d,
        );
        if err <= 1.0 {
            accepted += 1;
            t = t_new;
            x.copy_from_slice(&x_new);
            k.swap(0, 6);
            rec.push(t, &x);
            let mut factor = if err == 0.0 { MAX_FACTOR } else { SAFETY * err.powf(-0.2) };
            factor = factor.clamp(MIN_FACTOR, MAX_FACTOR);
            if last_rejected {
                factor = factor.min(1.0);
            }
            h = (h * factor).min(cfg.max_step);
            last_rejected = false;
        } else {
            rejected += 1;
            let factor = (SAFETY * err.powf(-0.2)).max(MIN_FACTOR);
            h *= factor;
            last_rejected = true;
            if h < 1e-14 {
                return Err(Error::Evaluation(format!("step size underflow at t = {t}")));
            }
        }
    }
    Ok(rec.finish(1.0, &x, accepted, rejected))
}

/// Endpoints `ψ₁(x)` for each start, each with its own error control.
///
/// Failures are collected with their indices into [`Error::Batch`].
pub fn integrate_batch<F: VelocityField + ?Sized>(
    field: &F,
    starts: &[Vec<f64>],
    cfg: &OdeConfig,
) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    let quiet = OdeConfig { record_knots: false, ..*cfg };
    let results: Vec<Result<Vec<f64>>> = starts
        .par_iter()
        .map(|x0| integrate(field, x0, &quiet).map(|tr| tr.endpoint().to_vec()))
        .collect();
    let mut out = Vec::with_capacity(starts.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(x) => out.push(x),
            Err(e) => failures.push((i, e)),
        }
    }
    if failures.is_empty() {
        Ok(out)
    } else {
        Err(Error::Batch { failures })
    }
}
