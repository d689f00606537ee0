use std::time::Instant;

use rayon::prelude::*;

use super::config::ExperimentConfig;
use super::densities::TestDensity;
use super::rate::empirical_w1;
use super::record::{median, RunRecord};
use crate::error::{Error, Result};
use crate::field::{Dataset, EmpiricalField};
use crate::kde::KdeModel;
use crate::kernel::KernelSpec;
use crate::ode::integrate_batch;
use crate::path::PathSchedule;
use crate::rng::{derive_seed, label, rng_from_seed};

/// Acceptance factor: the flow-vs-KDE distance may exceed the median
/// KDE-vs-KDE distance by at most this much.
pub const EQUIVALENCE_FACTOR: f64 = 1.5;

/// Flow endpoints of `m` latent draws pushed through the exact empirical field.
pub fn flow_samples(field: &EmpiricalField, m: usize, seed: u64, ode: &crate::ode::OdeConfig) -> Result<Vec<Vec<f64>>> {
    let latent = field.kernel().sample(m, seed)?;
    integrate_batch(field, &latent, ode)
}

/// Compares ODE samples from the empirical field with direct KDE samples,
/// against the null spread of KDE-vs-KDE distances.
pub fn run_flow_vs_kde(cfg: &ExperimentConfig) -> Result<RunRecord> {
    cfg.validate()?;
    let d = cfg.rate.dim;
    if d > 3 || cfg.m > 2048 || cfg.n.iter().any(|&n| n > 1000) {
        return Err(Error::Config("flow_vs_kde supports d <= 3, n <= 1000 and m <= 2048".into()));
    }
    let start = Instant::now();
    let mut rec = RunRecord::new("flow_vs_kde", cfg.hash()?, cfg.seed);
    let density = TestDensity::new(cfg.rate.density, d).map_err(|e| Error::Config(e.to_string()))?;
    let kernel = KernelSpec::gaussian(d)?;
    let mut all_ok = true;
    for &n in &cfg.n {
        for &sigma in cfg.sigma.values()? {
            let seed = derive_seed(cfg.seed, &[label("flow_vs_kde"), n as u64, sigma.to_bits()]);
            let sub = |tag: &str, j: u64| derive_seed(seed, &[label(tag), j]);
            let data = Dataset::new(density.sample(n, &mut rng_from_seed(sub("data", 0))))?;
            let field = EmpiricalField::new(data.clone(), PathSchedule::linear(sigma)?, kernel)?;
            let kde = KdeModel::new(data, sigma, kernel)?;

            let flow = flow_samples(&field, cfg.m, sub("latent", 0), &cfg.ode)?;
            let a = empirical_w1(&flow, &kde.sample(cfg.m, sub("kde", 0))?)?;
            rec.push(0, n, sigma, "a_flow_vs_kde", a, seed);

            let nulls: Vec<f64> = (0..cfg.repeats as u64)
                .into_par_iter()
                .map(|j| empirical_w1(&kde.sample(cfg.m, sub("null_a", j))?, &kde.sample(cfg.m, sub("null_b", j))?))
                .collect::<Result<_>>()?;
            for (j, &b) in nulls.iter().enumerate() {
                rec.push(j, n, sigma, "b_kde_vs_kde", b, sub("null_a", j as u64));
            }
            let med = median(&nulls);
            let ratio = a / med;
            let ok = a <= EQUIVALENCE_FACTOR * med;
            all_ok &= ok;
            rec.summary.insert(format!("ratio_n{n}_sigma{sigma}"), ratio);
            rec.summary.insert(format!("equivalent_n{n}_sigma{sigma}"), f64::from(u8::from(ok)));
            if !ok {
                rec.flag(format!("n={n}, sigma={sigma}: A={a:.4e} exceeds {EQUIVALENCE_FACTOR}·median(B)={med:.4e}"));
            }
        }
    }
    rec.summary.insert("all_equivalent".into(), f64::from(u8::from(all_ok)));
    rec.wall_clock_s = start.elapsed().as_secs_f64();
    rec.finish();
    Ok(rec)
}
