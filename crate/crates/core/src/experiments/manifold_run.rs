use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, SigmaPolicy};
use super::rate::{rate_sweep, RateSample};
use super::record::RunRecord;
use crate::error::{Error, Result};
use crate::field::Dataset;
use crate::kde::KdeModel;
use crate::kernel::KernelSpec;
use crate::manifold::{SamplingMode, SineChart};
use crate::mlp::{train_cfm, windowed_medians, MlpField, NetConfig, TrainConfig};
use crate::ode::{integrate_batch, OdeConfig};
use crate::path::PathSchedule;
use crate::rng::{derive_seed, label};

/// Number of windows the loss trace is split into for the median comparison.
const LOSS_WINDOWS: usize = 10;

type Metrics = Vec<(String, f64)>;

/// Spearman rank correlation (no ties expected).
pub fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    fn ranks(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
        let mut r = vec![0.0; v.len()];
        for (rank, i) in idx.into_iter().enumerate() {
            r[i] = rank as f64;
        }
        r
    }
    let (rx, ry) = (ranks(xs), ranks(ys));
    let n = xs.len() as f64;
    let d2: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - b).powi(2)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Statistics of one generated sample against the curve.
fn sample_metrics(
    chart: &SineChart,
    samples: &[Vec<f64>],
    reference: &[Vec<f64>],
    include_boundary: bool,
) -> Result<Vec<(String, f64)>> {
    let w = chart.arc_w1(samples, reference)?;
    Ok(vec![
        ("mean_distance".into(), chart.mean_distance(samples)?),
        ("largest_gap".into(), chart.largest_gap(samples, include_boundary)?),
        ("arc_w1".into(), w.w1),
        ("out_of_tube".into(), w.out_of_tube_a as f64),
        ("max_abs_coord".into(), samples.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()))),
    ])
}

/// Trains the FM network on one dataset and evaluates generated samples.
pub fn fm_arm(
    chart: &SineChart,
    data: &Dataset,
    sigma: f64,
    cfg: &ExperimentConfig,
    seed: u64,
    reference: &[Vec<f64>],
) -> Result<(Metrics, Vec<String>)> {
    let kernel = KernelSpec::gaussian(2)?;
    let schedule = PathSchedule::linear(sigma)?;
    let train = TrainConfig {
        steps: cfg.net.steps,
        adam: cfg.net.adam,
        seed: derive_seed(seed, &[label("train")]),
        checkpoints: cfg.net.checkpoints.clone(),
        time_sampling: cfg.net.time_sampling,
        lipschitz_penalty: None,
        log_every: cfg.net.log_every,
    };
    let mut out = Vec::new();
    let mut flags = Vec::new();
    let outcome = match train_cfm(data, &schedule, &kernel, &NetConfig { hidden: cfg.net.hidden.clone() }, &train) {
        Ok(o) => o,
        Err(Error::Training { step, loss }) => {
            out.push(("fm_diverged".into(), 1.0));
            flags.push(format!("sigma={sigma}: training diverged at step {step} (loss {loss})"));
            return Ok((out, flags));
        }
        Err(e) => return Err(e),
    };
    out.push(("fm_diverged".into(), 0.0));
    let medians = windowed_medians(&outcome.loss_trace, outcome.loss_trace.len().div_ceil(LOSS_WINDOWS));
    if let (Some(first), Some(last)) = (medians.first(), medians.last()) {
        out.push(("fm_loss_median_first".into(), *first));
        out.push(("fm_loss_median_last".into(), *last));
    }
    let latent = kernel.sample(cfg.m, derive_seed(seed, &[label("fm_latent")]))?;
    let mut evaluate = |name: String, net: &MlpField| -> Result<()> {
        match integrate_batch(net, &latent, &cfg.ode) {
            Ok(samples) => {
                for (metric, v) in sample_metrics(chart, &samples, reference, cfg.manifold.include_boundary)? {
                    out.push((format!("{name}_{metric}"), v));
                }
            }
            Err(e @ (Error::Batch { .. } | Error::Nonconvergence { .. })) => {
                out.push((format!("{name}_ode_failed"), 1.0));
                flags.push(format!("sigma={sigma}: {name} sampling failed: {e}"));
            }
            Err(e) => return Err(e),
        }
        Ok(())
    };
    for (step, net) in &outcome.checkpoints {
        if *step != cfg.net.steps {
            evaluate(format!("fm_ckpt{step}"), net)?;
        }
    }
    evaluate("fm".into(), &outcome.net)?;
    Ok((out, flags))
}

/// KDE and FM arms on the sine curve per bandwidth, plus the projected-rate
/// sub-experiment when `manifold.rate_n` is nonempty.
pub fn run_manifold_experiment(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rec = RunRecord::new("manifold_run", cfg.hash()?, cfg.seed);
    let chart = SineChart::new(cfg.manifold.tube_radius).map_err(|e| Error::Config(e.to_string()))?;
    let sigmas = cfg.sigma.values()?.to_vec();
    let n = cfg.n[0];
    let jobs: Vec<(f64, usize)> = sigmas.iter().flat_map(|&s| (0..cfg.repeats).map(move |r| (s, r))).collect();
    type JobOut = (f64, usize, u64, Vec<(String, f64)>, Vec<String>);
    let outputs: Vec<Result<JobOut>> = jobs
        .par_iter()
        .map(|&(sigma, r)| {
            let seed = derive_seed(cfg.seed, &[label("manifold"), sigma.to_bits(), r as u64]);
            // The dataset and reference sample depend on the repeat only, so
            // every bandwidth sees the same data.
            let data_seed = derive_seed(cfg.seed, &[label("manifold_data"), r as u64]);
            let data = Dataset::new(chart.sample(n, data_seed, cfg.manifold.sampling)?)?;
            let reference =
                chart.sample(cfg.m, derive_seed(data_seed, &[label("reference")]), cfg.manifold.sampling)?;
            let kde = KdeModel::new(data.clone(), sigma, KernelSpec::gaussian(2)?)?;
            let generated = kde.sample(cfg.m, derive_seed(seed, &[label("kde")]))?;
            let mut metrics: Vec<(String, f64)> = sample_metrics(&chart, &generated, &reference, cfg.manifold.include_boundary)?
                .into_iter()
                .map(|(k, v)| (format!("kde_{k}"), v))
                .collect();
            let mut flags = Vec::new();
            if cfg.manifold.fm_arm {
                let (fm, f) = fm_arm(&chart, &data, sigma, cfg, seed, &reference)?;
                metrics.extend(fm);
                flags.extend(f.into_iter().map(|m| format!("repeat {r}, {m}")));
            }
            Ok((sigma, r, seed, metrics, flags))
        })
        .collect();
    for o in outputs {
        let (sigma, r, seed, metrics, flags) = o?;
        for (name, v) in metrics {
            rec.push(r, n, sigma, &name, v, seed);
        }
        flags.into_iter().for_each(|f| rec.flag(f));
    }
    rec.finish();
    if sigmas.len() >= 2 {
        let medians: Vec<f64> = sigmas
            .iter()
            .map(|&s| rec.aggregate_for("kde_mean_distance", n, s).map_or(f64::NAN, |a| a.median))
            .collect();
        rec.summary.insert("kde_mean_distance_spearman".into(), spearman(&sigmas, &medians));
    }
    if !cfg.manifold.rate_n.is_empty() {
        let mut sub = cfg.clone();
        sub.n = cfg.manifold.rate_n.clone();
        sub.m = cfg.manifold.rate_m;
        sub.sigma = SigmaPolicy::rule(cfg.manifold.rate_alpha, 1);
        projected_rate(&mut rec, &sub, &chart)?;
    }
    rec.wall_clock_s = start.elapsed().as_secs_f64();
    rec.finish();
    Ok(rec)
}

/// Projected-rate experiment on its own.
pub fn run_rate_manifold(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rec = RunRecord::new("rate_manifold", cfg.hash()?, cfg.seed);
    let chart = SineChart::new(cfg.manifold.tube_radius).map_err(|e| Error::Config(e.to_string()))?;
    projected_rate(&mut rec, cfg, &chart)?;
    rec.wall_clock_s = start.elapsed().as_secs_f64();
    rec.finish();
    Ok(rec)
}

fn projected_rate(rec: &mut RunRecord, cfg: &ExperimentConfig, chart: &SineChart) -> Result<()> {
    let alpha = match cfg.sigma {
        SigmaPolicy::BandwidthRule { alpha, .. } => alpha,
        SigmaPolicy::Explicit { .. } => 1.0,
    };
    let target = -(1.0 + alpha) / (2.0 * alpha + 1.0);
    let mode = cfg.manifold.sampling;
    let kernel = KernelSpec::gaussian(2)?;
    rate_sweep(rec, cfg, &cfg.n, "projected", target, |n, sigma, seed| {
        let sub = |tag: &str| derive_seed(seed, &[label(tag)]);
        let data = Dataset::new(chart.sample(n, sub("data"), mode)?)?;
        let kde = KdeModel::new(data, sigma, kernel)?;
        let generated = kde.sample(cfg.m, sub("kde"))?;
        let reference = chart.sample(cfg.m, sub("target"), mode)?;
        let other = chart.sample(cfg.m, sub("baseline"), mode)?;
        let raw = chart.arc_w1(&generated, &reference)?;
        let baseline = chart.arc_w1(&reference, &other)?;
        Ok(RateSample {
            raw: raw.w1,
            baseline: baseline.w1,
            extras: vec![("out_of_tube", raw.out_of_tube_a as f64)],
        })
    })
}

/// Latent-to-sample map of a trained network, for callers that only need samples.
pub fn generate(net: &MlpField, count: usize, seed: u64, ode: &OdeConfig) -> Result<Vec<Vec<f64>>> {
    let latent = KernelSpec::gaussian(net.dim())?.sample(count, seed)?;
    integrate_batch(net, &latent, ode)
}

/// Samples from a KDE fitted to `n` curve points (helper for quick checks).
pub fn kde_on_curve(chart: &SineChart, n: usize, sigma: f64, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    let data = Dataset::new(chart.sample(n, derive_seed(seed, &[label("data")]), SamplingMode::ArcUniform)?)?;
    KdeModel::new(data, sigma, KernelSpec::gaussian(2)?)?.sample(count, derive_seed(seed, &[label("kde")]))
}
