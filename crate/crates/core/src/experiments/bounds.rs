use std::time::Instant;

use rand::Rng as _;
use rand_distr::StandardNormal;

use super::config::ExperimentConfig;
use super::densities::TestDensity;
use super::record::RunRecord;
use crate::error::{Error, Result};
use crate::field::{Dataset, EmpiricalField};
use crate::kernel::KernelSpec;
use crate::path::{PathSchedule, Schedule};
use crate::rng::{derive_seed, label, rng_from_seed, Rng};

/// Central-difference residual of `∂_t p + div(p v)` at `(t, x)`, with the density there.
pub fn continuity_residual(field: &EmpiricalField, t: f64, x: &[f64], h: f64) -> Result<(f64, f64)> {
    let p = field.density(t, x)?;
    let dp_dt = (field.density(t + h, x)? - field.density(t - h, x)?) / (2.0 * h);
    let mut div = 0.0;
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        probe[k] = x[k] + h;
        let plus = field.density(t, &probe)? * field.velocity(t, &probe)?[k];
        probe[k] = x[k] - h;
        let minus = field.density(t, &probe)? * field.velocity(t, &probe)?[k];
        probe[k] = x[k];
        div += (plus - minus) / (2.0 * h);
    }
    Ok((dp_dt + div, p))
}

/// Tolerance the continuity residual is held to: `1e-4 · max(1, p · lip_bound)`.
pub fn continuity_threshold(density: f64, lip_bound: f64) -> f64 {
    1e-4 * (1.0f64).max(density * lip_bound)
}

/// Point drawn from `p_t`: `σ_t z + t X_i` for a random anchor.
pub fn draw_from_path(field: &EmpiricalField, t: f64, rng: &mut Rng) -> Vec<f64> {
    let data = field.data();
    let anchor = data.point(rng.gen_range(0..data.len()));
    let sigma = field.schedule().sigma(t);
    anchor.iter().map(|&y| sigma * rng.sample::<f64, _>(StandardNormal) + t * y).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct BoundsSummary {
    pub sup_violations: usize,
    pub lip_violations: usize,
    pub min_sup_margin: f64,
    pub min_lip_margin: f64,
    pub max_sup_observed: f64,
    pub max_lip_observed: f64,
}

/// Grid search of `|v|` and finite-difference slopes against the field bounds.
pub fn check_bounds(field: &EmpiricalField, a: f64, points: usize, fd_step: f64, seed: u64) -> Result<BoundsSummary> {
    let d = field.dim();
    let mut rng = rng_from_seed(seed);
    let mut s = BoundsSummary { min_sup_margin: f64::INFINITY, min_lip_margin: f64::INFINITY, ..Default::default() };
    for _ in 0..points {
        let t: f64 = rng.gen_range(0.0..=1.0);
        let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-a..a)).collect();
        let mut dir: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        dir.iter_mut().for_each(|v| *v *= fd_step / norm);
        let bounds = field.field_bounds(a, t)?;
        let v = field.velocity(t, &x)?;
        let shifted: Vec<f64> = x.iter().zip(&dir).map(|(xi, di)| xi + di).collect();
        let w = field.velocity(t, &shifted)?;
        let speed = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let slope = v.iter().zip(&w).map(|(p, q)| (p - q).powi(2)).sum::<f64>().sqrt() / fd_step;
        s.max_sup_observed = s.max_sup_observed.max(speed);
        s.max_lip_observed = s.max_lip_observed.max(slope);
        s.min_sup_margin = s.min_sup_margin.min(bounds.sup_bound - speed);
        s.min_lip_margin = s.min_lip_margin.min(bounds.lip_bound - slope);
        s.sup_violations += usize::from(speed > bounds.sup_bound);
        s.lip_violations += usize::from(slope > bounds.lip_bound);
    }
    Ok(s)
}

/// Sup and Lipschitz bound margins plus the continuity-equation residual table.
pub fn run_bounds_check(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let mut rec = RunRecord::new("bounds_check", cfg.hash()?, cfg.seed);
    let b = &cfg.bounds;
    for &d in &b.dims {
        let density = TestDensity::new(cfg.rate.density, d).map_err(|e| Error::Config(e.to_string()))?;
        for &n in &cfg.n {
            for &sigma in cfg.sigma.values()? {
                let seed = derive_seed(cfg.seed, &[label("bounds"), d as u64, n as u64, sigma.to_bits()]);
                let sub = |tag: &str| derive_seed(seed, &[label(tag)]);
                let data = Dataset::new(density.sample(n, &mut rng_from_seed(sub("data"))))?;
                let field = EmpiricalField::new(data, PathSchedule::linear(sigma)?, KernelSpec::gaussian(d)?)?;
                let s = check_bounds(&field, b.a, b.points, b.fd_step, sub("grid"))?;
                let tag = format!("d{d}");
                rec.push(0, n, sigma, &format!("{tag}_sup_violations"), s.sup_violations as f64, seed);
                rec.push(0, n, sigma, &format!("{tag}_lip_violations"), s.lip_violations as f64, seed);
                rec.push(0, n, sigma, &format!("{tag}_min_sup_margin"), s.min_sup_margin, seed);
                rec.push(0, n, sigma, &format!("{tag}_min_lip_margin"), s.min_lip_margin, seed);
                rec.push(0, n, sigma, &format!("{tag}_max_sup_observed"), s.max_sup_observed, seed);
                rec.push(0, n, sigma, &format!("{tag}_max_lip_observed"), s.max_lip_observed, seed);
                if s.sup_violations + s.lip_violations > 0 {
                    rec.flag(format!("d={d}, n={n}, sigma={sigma}: bound violated"));
                }

                let mut rng = rng_from_seed(sub("continuity"));
                let mut worst: f64 = 0.0;
                let mut failures = 0usize;
                for i in 0..b.points {
                    let t = rng.gen_range(0.05..=0.95);
                    let x = draw_from_path(&field, t, &mut rng);
                    let (res, p) = continuity_residual(&field, t, &x, 1e-4)?;
                    let ratio = res.abs() / continuity_threshold(p, field.field_bounds(b.a, t)?.lip_bound);
                    rec.push(i, n, sigma, &format!("{tag}_continuity_ratio"), ratio, seed);
                    worst = worst.max(ratio);
                    failures += usize::from(ratio > 1.0);
                }
                rec.summary.insert(format!("{tag}_n{n}_sigma{sigma}_continuity_worst_ratio"), worst);
                rec.summary.insert(format!("{tag}_n{n}_sigma{sigma}_continuity_failures"), failures as f64);
                if failures > 0 {
                    rec.flag(format!("d={d}, n={n}, sigma={sigma}: {failures} continuity residuals above threshold"));
                }
            }
        }
    }
    rec.wall_clock_s = start.elapsed().as_secs_f64();
    rec.finish();
    Ok(rec)
}
