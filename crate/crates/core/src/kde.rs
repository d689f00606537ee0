//! Kernel density estimator, both as a density and as a generative sampler.
//!
//! Under the linear schedule the t = 1 marginal of the empirical path is
//! exactly this mixture, so [`KdeModel::density`] and
//! [`EmpiricalField::density`](crate::field::EmpiricalField::density) at t = 1
//! agree.

use rand::Rng as _;

use crate::error::{check_dim, Error, Result};
use crate::field::{log_sum_exp, Dataset};
use crate::kernel::KernelSpec;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone)]
pub struct KdeModel {
    data: Dataset,
    bandwidth: f64,
    kernel: KernelSpec,
}

impl KdeModel {
    pub fn new(data: Dataset, bandwidth: f64, kernel: KernelSpec) -> Result<Self> {
        check_dim(kernel.dim(), data.dim(), "KDE kernel")?;
        if !(bandwidth > 0.0 && bandwidth <= 1.0) {
            return Err(Error::input(format!("bandwidth {bandwidth} must lie in (0, 1]")));
        }
        Ok(Self { data, bandwidth, kernel })
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    /// Draws `X_I + σ_min·Z` with `I` uniform over the data and `Z ~ K`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::input("sample count must be at least 1"));
        }
        let mut rng = rng_from_seed(seed);
        let n = self.data.len();
        let mut z = vec![0.0; self.kernel.dim()];
        Ok((0..count)
            .map(|_| {
                let anchor = self.data.point(rng.gen_range(0..n));
                self.kernel.sample_into(&mut rng, &mut z);
                anchor.iter().zip(&z).map(|(a, zi)| a + self.bandwidth * zi).collect()
            })
            .collect())
    }

    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.kernel.dim(), x.len(), "KDE density")?;
        let mut u = vec![0.0; x.len()];
        let terms: Vec<f64> = self
            .data
            .iter()
            .map(|y| {
                for ((ui, &xi), &yi) in u.iter_mut().zip(x).zip(y) {
                    *ui = xi - yi;
                }
                self.kernel.scaled_log_density(&u, self.bandwidth)
            })
            .collect();
        Ok(log_sum_exp(&terms) - (self.data.len() as f64).ln())
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(x)?.exp())
    }
}

/// Rate-optimal bandwidth `n^{-1/(2α + d_eff)}`.
///
/// With `log_correction` the sample size is replaced by `n / log²n`, clamped so
/// the result never exceeds 1.
pub fn bandwidth_rule(n: usize, alpha: f64, d_eff: usize, log_correction: bool) -> Result<f64> {
    if n == 0 {
        return Err(Error::input("bandwidth rule needs n >= 1"));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::input(format!("smoothness alpha={alpha} must lie in (0, 1]")));
    }
    let n = n as f64;
    let effective = if log_correction {
        let l = n.ln();
        if l <= 0.0 {
            return Ok(1.0);
        }
        n / (l * l)
    } else {
        n
    };
    Ok(effective.powf(-1.0 / (2.0 * alpha + d_eff as f64)).min(1.0))
}
