//! Empirical marginal density `pⁿ_t` and empirical vector field `vⁿ_t`.
//!
//! `pⁿ_t(x)` is the average of the conditional densities over the observed
//! sample and `vⁿ_t(x)` the posterior-weighted average of the conditional
//! fields. Weights are always formed in log space with the max subtracted,
//! since near t = 1 the Gaussian conditional densities underflow.

use rayon::prelude::*;

use crate::error::{check_dim, check_time, Error, Result};
use crate::kernel::{KernelKind, KernelSpec};
use crate::path::{cond_velocity_into, PathSchedule, Schedule};

/// Log-weight gap below which an anchor is dropped when truncation is on.
pub const TRUNCATION_GAP: f64 = 40.0;

/// The observed sample, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    dim: usize,
    flat: Vec<f64>,
    in_unit_box: bool,
}

impl Dataset {
    pub fn new(points: Vec<Vec<f64>>) -> Result<Self> {
        let dim = points
            .first()
            .ok_or_else(|| Error::input("dataset must contain at least one point"))?
            .len();
        if dim == 0 {
            return Err(Error::input("dataset points must have positive dimension"));
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        for (i, p) in points.iter().enumerate() {
            check_dim(dim, p.len(), "dataset point")?;
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("dataset point {i} is not finite")));
            }
            flat.extend_from_slice(p);
        }
        let in_unit_box = flat.iter().all(|v| v.abs() <= 1.0);
        Ok(Self { dim, flat, in_unit_box })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.flat.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.flat.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.flat[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.flat.chunks_exact(self.dim)
    }

    /// Whether every point lies in `[-1, 1]^d`.
    pub fn in_unit_box(&self) -> bool {
        self.in_unit_box
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.iter().map(<[f64]>::to_vec).collect()
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for p in self.iter() {
            for (a, b) in m.iter_mut().zip(p) {
                *a += b;
            }
        }
        let n = self.len() as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }
}

/// Upper bounds on `|vⁿ_t|` over `(−a, a)^d` and on `Lip(vⁿ_t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FieldBounds {
    pub sup_bound: f64,
    pub lip_bound: f64,
}

#[derive(Debug, Clone)]
pub struct EmpiricalField<S = PathSchedule> {
    data: Dataset,
    schedule: S,
    kernel: KernelSpec,
    truncate: bool,
}

impl<S: Schedule> EmpiricalField<S> {
    pub fn new(data: Dataset, schedule: S, kernel: KernelSpec) -> Result<Self> {
        check_dim(kernel.dim(), data.dim(), "empirical field kernel")?;
        Ok(Self { data, schedule, kernel, truncate: false })
    }

    /// Skip anchors whose log-weight is more than [`TRUNCATION_GAP`] below the maximum.
    pub fn with_truncation(mut self, on: bool) -> Self {
        self.truncate = on;
        self
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn schedule(&self) -> &S {
        &self.schedule
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn dim(&self) -> usize {
        self.data.dim()
    }

    fn sigma(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let s = self.schedule.sigma(t);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::State(format!("schedule gives sigma({t}) = {s}")));
        }
        Ok(s)
    }

    /// Per-anchor conditional log-densities `log p_t(x|X_i)`.
    fn log_weights(&self, t: f64, sigma: f64, x: &[f64], mu: &mut [f64], out: &mut Vec<f64>) {
        out.clear();
        for y in self.data.iter() {
            self.schedule.mu(t, y, mu);
            for (m, &xi) in mu.iter_mut().zip(x) {
                *m = xi - *m;
            }
            out.push(self.kernel.scaled_log_density(mu, sigma));
        }
    }

    pub fn log_density(&self, t: f64, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len(), "empirical density")?;
        let sigma = self.sigma(t)?;
        let mut mu = vec![0.0; x.len()];
        let mut lw = Vec::with_capacity(self.data.len());
        self.log_weights(t, sigma, x, &mut mu, &mut lw);
        Ok(log_sum_exp(&lw) - (self.data.len() as f64).ln())
    }

    pub fn density(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(t, x)?.exp())
    }

    pub fn velocity(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.velocity_into(t, x, &mut out)?;
        Ok(out)
    }

    pub fn velocity_into(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        check_dim(self.dim(), x.len(), "empirical velocity")?;
        check_dim(self.dim(), out.len(), "empirical velocity output")?;
        let sigma = self.sigma(t)?;
        let d = self.dim();
        let mut mu = vec![0.0; d];
        let mut vi = vec![0.0; d];
        let mut lw = Vec::with_capacity(self.data.len());
        self.log_weights(t, sigma, x, &mut mu, &mut lw);

        let max = lw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max == f64::NEG_INFINITY {
            return Err(Error::Evaluation(format!(
                "x = {x:?} at t = {t} lies outside the support of every conditional path"
            )));
        }
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut total = 0.0;
        for (y, &l) in self.data.iter().zip(&lw) {
            let gap = l - max;
            if gap == f64::NEG_INFINITY || (self.truncate && gap < -TRUNCATION_GAP) {
                continue;
            }
            let w = gap.exp();
            total += w;
            cond_velocity_into(&self.schedule, sigma, t, y, x, &mut mu, &mut vi);
            for (o, v) in out.iter_mut().zip(&vi) {
                *o += w * v;
            }
        }
        out.iter_mut().for_each(|o| *o /= total);
        Ok(())
    }

    /// Evaluates the field at many points; results are in input order.
    pub fn velocity_batch(&self, t: f64, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        xs.par_iter().map(|x| self.velocity(t, x)).collect()
    }
}

impl EmpiricalField<PathSchedule> {
    /// Supremum-norm and Lipschitz bounds for the linear schedule with a
    /// Gaussian kernel and data inside `[-1, 1]^d`:
    /// `|vⁿ_t(x)| ≤ √d (1 + a) / σ_t` for `x ∈ (−a, a)^d` and
    /// `Lip(vⁿ_t) ≤ 1/σ_t + 2d/σ_t³`.
    pub fn field_bounds(&self, a: f64, t: f64) -> Result<FieldBounds> {
        if !self.schedule.is_linear() {
            return Err(Error::Unsupported(
                "field bounds are only available for the linear schedule".into(),
            ));
        }
        if self.kernel.kind() != KernelKind::Gaussian {
            return Err(Error::Unsupported(
                "the Lipschitz bound is only established for the Gaussian kernel".into(),
            ));
        }
        if !self.data.in_unit_box() {
            return Err(Error::input("field bounds require all data inside [-1, 1]^d"));
        }
        if !(a > 1.0) {
            return Err(Error::input(format!("box half-width a={a} must exceed 1")));
        }
        let sigma = self.sigma(t)?;
        let d = self.dim() as f64;
        Ok(FieldBounds {
            sup_bound: d.sqrt() * (1.0 + a) / sigma,
            lip_bound: 1.0 / sigma + 2.0 * d / sigma.powi(3),
        })
    }
}

pub(crate) fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|v| (v - max).exp()).sum::<f64>().ln()
}
