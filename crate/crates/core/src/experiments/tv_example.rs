//! Two flows that are W1-close but TV-far: the identity and the flow of
//! `v(x) = ε sin(x/ε)` run to `t = 1`, both applied to a standard normal.

use std::f64::consts::PI;
use std::time::Instant;

use rand_distr::{Distribution, StandardNormal};

use super::config::ExperimentConfig;
use super::record::RunRecord;
use crate::error::{Error, Result};
use crate::metrics::{tv_1d, Density1D};
use crate::rng::{derive_seed, label, rng_from_seed};

const MIN_GRID: usize = 10_000;
const POINTS_PER_PERIOD: f64 = 400.0;
const MASS_TOLERANCE: f64 = 1e-3;

/// Closed-form time-`t` flow of `ẋ = ε sin(x/ε)`:
/// `tan(x_t/2ε) = e^t tan(x_0/2ε)` on the branch containing `x_0`.
pub fn sine_flow(x: f64, eps: f64, t: f64) -> f64 {
    let theta = x / (2.0 * eps);
    let k = (theta / PI).round();
    2.0 * eps * (k * PI + (t.exp() * (theta - k * PI).tan()).atan())
}

pub fn sine_flow_inverse(y: f64, eps: f64, t: f64) -> f64 {
    sine_flow(y, eps, -t)
}

/// `∂ψ_t/∂x = e^t / ((e^{2t} − 1) sin²(x/2ε) + 1)`.
pub fn sine_flow_derivative(x: f64, eps: f64, t: f64) -> f64 {
    t.exp() / (((2.0 * t).exp() - 1.0) * (x / (2.0 * eps)).sin().powi(2) + 1.0)
}

fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

/// Grid size that resolves the pushed-forward density for a given ε.
pub fn required_grid(eps: f64, half_width: f64) -> usize {
    MIN_GRID.max((POINTS_PER_PERIOD * 2.0 * half_width / (2.0 * PI * eps)).ceil() as usize)
}

/// TV between N(0,1) and its push-forward under `ψ₁`, on `points` grid nodes.
pub fn tv_for(eps: f64, half_width: f64, points: usize) -> Result<f64> {
    let needed = required_grid(eps, half_width);
    if points < needed {
        return Err(Error::Evaluation(format!(
            "{points} nodes under-resolve the period 2π·{eps}; use at least {needed} nodes"
        )));
    }
    let phi = Density1D::tabulate(std_normal_pdf, -half_width, half_width, points)?;
    let pushed = Density1D::tabulate(
        |y| {
            let x = sine_flow_inverse(y, eps, 1.0);
            std_normal_pdf(x) / sine_flow_derivative(x, eps, 1.0)
        },
        -half_width,
        half_width,
        points,
    )?;
    let mass = pushed.mass();
    if (mass - 1.0).abs() > MASS_TOLERANCE {
        return Err(Error::Evaluation(format!(
            "pushed-forward mass {mass:.6} on {points} nodes for eps={eps}; use at least {} nodes",
            4 * needed
        )));
    }
    tv_1d(&phi, &pushed)
}

/// Monte Carlo mean and standard error of `|Z − ψ₁(Z)|`.
pub fn displacement_mc(eps: f64, draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = rng_from_seed(seed);
    let vals: Vec<f64> = (0..draws)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut rng);
            (z - sine_flow(z, eps, 1.0)).abs()
        })
        .collect();
    let m = vals.len() as f64;
    let mean = vals.iter().sum::<f64>() / m;
    let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}

pub fn run_tv_example(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rec = RunRecord::new("tv_example", cfg.hash()?, cfg.seed);
    let hw = cfg.tv.half_width;
    for &eps in &cfg.tv.epsilons {
        let seed = derive_seed(cfg.seed, &[label("tv_example"), eps.to_bits()]);
        let (w1, se) = displacement_mc(eps, cfg.tv.draws, seed);
        let tv = tv_for(eps, hw, required_grid(eps, hw))?;
        rec.push(0, cfg.tv.draws, eps, "w1_mc", w1, seed);
        rec.push(0, cfg.tv.draws, eps, "w1_se", se, seed);
        rec.push(0, cfg.tv.draws, eps, "tv", tv, seed);
        if w1 > eps + 3.0 * se {
            rec.flag(format!("eps={eps}: W1 estimate {w1:.4e} above eps + 3 SE"));
        }
    }
    rec.wall_clock_s = start.elapsed().as_secs_f64();
    rec.finish();
    Ok(rec)
}
