//! Kernels used both as the latent distribution and as the KDE smoothing kernel.

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::rng::{rng_from_seed, Rng};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelKind {
    /// Standard normal N(0, I_d).
    Gaussian,
    /// Uniform on [-1, 1]^d.
    UniformProduct,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KernelSpec {
    kind: KernelKind,
    dim: usize,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("kernel dimension must be positive"));
        }
        Ok(Self { kind, dim })
    }

    pub fn gaussian(dim: usize) -> Result<Self> {
        Self::new(KernelKind::Gaussian, dim)
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        Self::new(KernelKind::UniformProduct, dim)
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len(), "kernel density")?;
        Ok(match self.kind {
            KernelKind::Gaussian => self.log_density_unchecked(x).exp(),
            KernelKind::UniformProduct => {
                if x.iter().all(|v| v.abs() <= 1.0) {
                    0.5f64.powi(self.dim as i32)
                } else {
                    0.0
                }
            }
        })
    }

    /// Natural log of the density; `-inf` outside a compact support.
    pub fn log_density(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim, x.len(), "kernel log-density")?;
        Ok(self.log_density_unchecked(x))
    }

    pub(crate) fn log_density_unchecked(&self, x: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Gaussian => {
                let sq: f64 = x.iter().map(|v| v * v).sum();
                -0.5 * sq - 0.5 * self.dim as f64 * LN_2PI
            }
            KernelKind::UniformProduct => {
                if x.iter().all(|v| v.abs() <= 1.0) {
                    -(self.dim as f64) * std::f64::consts::LN_2
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    /// Log-density of the scaled kernel `scale^{-d} K(u / scale)` at `u`.
    pub(crate) fn scaled_log_density(&self, u: &[f64], scale: f64) -> f64 {
        match self.kind {
            KernelKind::Gaussian => {
                let sq: f64 = u.iter().map(|v| v * v).sum();
                let d = self.dim as f64;
                -0.5 * sq / (scale * scale) - d * scale.ln() - 0.5 * d * LN_2PI
            }
            KernelKind::UniformProduct => {
                if u.iter().all(|v| v.abs() <= scale) {
                    -(self.dim as f64) * (2.0 * scale).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
        }
    }

    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.dim);
        match self.kind {
            KernelKind::Gaussian => {
                for v in out.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
            }
            KernelKind::UniformProduct => {
                for v in out.iter_mut() {
                    *v = rng.gen_range(-1.0..=1.0);
                }
            }
        }
    }

    pub fn sample_one(&self, rng: &mut Rng) -> Vec<f64> {
        let mut z = vec![0.0; self.dim];
        self.sample_into(rng, &mut z);
        z
    }

    /// `count` i.i.d. draws, reproducible from `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        if count == 0 {
            return Err(Error::input("sample count must be at least 1"));
        }
        let mut rng = rng_from_seed(seed);
        Ok((0..count).map(|_| self.sample_one(&mut rng)).collect())
    }
}
