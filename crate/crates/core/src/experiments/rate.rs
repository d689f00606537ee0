use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, SigmaPolicy};
use super::densities::TestDensity;
use super::record::{mean, median_iqr, RunRecord, SlopeRecord};
use crate::error::{Error, Result};
use crate::field::Dataset;
use crate::kde::KdeModel;
use crate::kernel::KernelSpec;
use crate::metrics::{w1_1d, w1_assignment};
use crate::rng::{derive_seed, label, rng_from_seed};

/// Half-width of the acceptance band around a target slope.
pub const SLOPE_TOLERANCE: f64 = 0.2;

/// Exact W1 between equal-size point clouds: sorted coupling in d = 1,
/// assignment otherwise.
pub fn empirical_w1(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64> {
    if a.first().map_or(0, Vec::len) == 1 {
        let xa: Vec<f64> = a.iter().map(|p| p[0]).collect();
        let xb: Vec<f64> = b.iter().map(|p| p[0]).collect();
        w1_1d(&xa, &xb)
    } else {
        Ok(w1_assignment(a, b)?.cost)
    }
}

/// One repeat of a baseline-corrected rate measurement.
pub(crate) struct RateSample {
    pub raw: f64,
    pub baseline: f64,
    /// Extra per-repeat metrics.
    pub extras: Vec<(&'static str, f64)>,
}

fn policy_alpha(policy: &SigmaPolicy) -> f64 {
    match policy {
        SigmaPolicy::BandwidthRule { alpha, .. } => *alpha,
        SigmaPolicy::Explicit { .. } => 1.0,
    }
}

/// Runs `measure(n, sigma, seed)` over every `(n, repeat)` pair, records raw,
/// baseline and corrected W1 and fits the slope of the repeat-mean corrected
/// W1 against `n`.
pub(crate) fn rate_sweep(
    rec: &mut RunRecord,
    cfg: &ExperimentConfig,
    ns: &[usize],
    tag: &str,
    target: f64,
    measure: impl Fn(usize, f64, u64) -> Result<RateSample> + Sync,
) -> Result<()> {
    let sigmas: Vec<f64> = ns.iter().enumerate().map(|(i, &n)| cfg.sigma.sigma_for(n, i)).collect::<Result<_>>()?;
    let jobs: Vec<(usize, usize)> = (0..ns.len()).flat_map(|i| (0..cfg.repeats).map(move |r| (i, r))).collect();
    let results: Vec<(usize, usize, u64, Result<RateSample>)> = jobs
        .par_iter()
        .map(|&(i, r)| {
            let seed = derive_seed(cfg.seed, &[label(tag), ns[i] as u64, r as u64]);
            (i, r, seed, measure(ns[i], sigmas[i], seed))
        })
        .collect();
    let mut corrected: Vec<Vec<f64>> = vec![Vec::new(); ns.len()];
    let mut baselines: Vec<Vec<f64>> = vec![Vec::new(); ns.len()];
    for (i, r, seed, res) in results {
        let s = res?;
        let (n, sigma) = (ns[i], sigmas[i]);
        rec.push(r, n, sigma, &format!("{tag}_w1_raw"), s.raw, seed);
        rec.push(r, n, sigma, &format!("{tag}_w1_baseline"), s.baseline, seed);
        rec.push(r, n, sigma, &format!("{tag}_w1_corrected"), s.raw - s.baseline, seed);
        for (name, v) in s.extras {
            rec.push(r, n, sigma, &format!("{tag}_{name}"), v, seed);
        }
        corrected[i].push(s.raw - s.baseline);
        baselines[i].push(s.baseline);
    }
    let mut points = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let mut value = mean(&corrected[i]);
        rec.summary.insert(format!("{tag}_mean_corrected_n{n}"), value);
        if value <= 0.0 {
            let floor = median_iqr(&baselines[i]).1.max(f64::MIN_POSITIVE);
            rec.flag(format!("{tag}: mean corrected W1 {value:.3e} at n={n} floored at baseline IQR {floor:.3e}"));
            value = floor;
        }
        points.push((n as f64, value));
    }
    let slope = SlopeRecord::fit_loglog(
        &format!("{tag}_slope"),
        points,
        target,
        (target - SLOPE_TOLERANCE, target + SLOPE_TOLERANCE),
    );
    if let Some(note) = &slope.note {
        rec.flag(format!("{tag}: {note}"));
    }
    rec.slopes.push(slope);
    Ok(())
}

/// KDE convergence in W1 against fresh target samples, or the deterministic
/// bias curve when `rate.bias_only` is set.
pub fn run_rate_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rec = RunRecord::new("rate", cfg.hash()?, cfg.seed);
    let density = TestDensity::new(cfg.rate.density, cfg.rate.dim).map_err(|e| Error::Config(e.to_string()))?;
    if cfg.rate.bias_only {
        run_bias(cfg, &density, &mut rec)?;
    } else {
        let kernel = KernelSpec::gaussian(cfg.rate.dim)?;
        let d = cfg.rate.dim as f64;
        let alpha = policy_alpha(&cfg.sigma);
        let target = -(1.0 + alpha) / (2.0 * alpha + d);
        rate_sweep(&mut rec, cfg, &cfg.n, "kde", target, |n, sigma, seed| {
            let sub = |tag: &str| derive_seed(seed, &[label(tag)]);
            let data = Dataset::new(density.sample(n, &mut rng_from_seed(sub("data"))))?;
            let kde = KdeModel::new(data, sigma, kernel)?;
            let generated = kde.sample(cfg.m, sub("kde"))?;
            let target = density.sample(cfg.m, &mut rng_from_seed(sub("target")));
            let other = density.sample(cfg.m, &mut rng_from_seed(sub("baseline")));
            Ok(RateSample {
                raw: empirical_w1(&generated, &target)?,
                baseline: empirical_w1(&target, &other)?,
                extras: Vec::new(),
            })
        })?;
    }
    rec.wall_clock_s = start.elapsed().as_secs_f64();
    rec.finish();
    Ok(rec)
}

fn run_bias(cfg: &ExperimentConfig, density: &TestDensity, rec: &mut RunRecord) -> Result<()> {
    if density.dim() != 1 {
        return Err(Error::Config("bias-only mode is one-dimensional".into()));
    }
    let sigmas = cfg.sigma.values()?;
    let mut points = Vec::new();
    for &sigma in sigmas {
        let bias = smoothing_bias_w1(density, sigma)?;
        rec.push(0, 0, sigma, "bias_w1", bias, cfg.seed);
        points.push((sigma, bias));
    }
    let alpha = 1.0;
    let slope = SlopeRecord::fit_loglog("bias_slope", points, 1.0 + alpha, (1.8, 2.2));
    if let Some(note) = &slope.note {
        rec.flag(format!("bias: {note}"));
    }
    rec.slopes.push(slope);
    Ok(())
}

fn simpson_weights(points: usize) -> impl Iterator<Item = f64> {
    (0..points).map(move |i| if i == 0 || i == points - 1 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 })
}

/// `W1(P, K_σ ∗ P) = ∫ |F_σ − F| dx` with
/// `F_σ(x) − F(x) = ∫ [F(x − σz) − F(x)] φ(z) dz`, both by Simpson's rule.
pub fn smoothing_bias_w1(density: &TestDensity, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::input("bias quadrature needs sigma > 0"));
    }
    const Z_POINTS: usize = 1601;
    const X_POINTS: usize = 4001;
    let z_half = 8.0;
    let hz = 2.0 * z_half / (Z_POINTS - 1) as f64;
    let phi: Vec<(f64, f64)> = simpson_weights(Z_POINTS)
        .enumerate()
        .map(|(i, w)| {
            let z = -z_half + i as f64 * hz;
            (z, w * hz / 3.0 * (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt())
        })
        .collect();
    let (lo, hi) = (-1.0 - z_half * sigma, 1.0 + z_half * sigma);
    let hx = (hi - lo) / (X_POINTS - 1) as f64;
    let mut total = 0.0;
    for (i, wx) in simpson_weights(X_POINTS).enumerate() {
        let x = lo + i as f64 * hx;
        let fx = density.cdf_1d(x)?;
        let mut diff = 0.0;
        for &(z, w) in &phi {
            diff += w * (density.cdf_1d(x - sigma * z)? - fx);
        }
        total += wx * diff.abs();
    }
    Ok(total * hx / 3.0)
}
