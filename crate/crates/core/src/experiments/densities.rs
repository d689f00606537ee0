//! Target densities with exact samplers (and exact CDFs where the bias
//! quadrature needs them).

use std::f64::consts::PI;

use rand::Rng as _;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    /// Product of trapezoids on [−1, 1]: flat on [−½, ½], linear ramps to zero.
    Ramp,
    /// N(0, ½² I) restricted to [−1, 1]^d.
    TruncatedGaussian,
    /// (1 + cos πx)/2 on [−1, 1], one-dimensional only.
    RaisedCosine,
}

const TRUNC_SCALE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TestDensity {
    kind: DensityKind,
    dim: usize,
}

impl TestDensity {
    pub fn new(kind: DensityKind, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("density dimension must be at least 1"));
        }
        if kind == DensityKind::RaisedCosine && dim != 1 {
            return Err(Error::input("the raised-cosine density is one-dimensional"));
        }
        Ok(Self { kind, dim })
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&self, count: usize, rng: &mut Rng) -> Vec<Vec<f64>> {
        (0..count).map(|_| (0..self.dim).map(|_| self.sample_coord(rng)).collect()).collect()
    }

    fn sample_coord(&self, rng: &mut Rng) -> f64 {
        match self.kind {
            DensityKind::Ramp | DensityKind::RaisedCosine => self.inverse_cdf_1d(rng.gen()),
            DensityKind::TruncatedGaussian => loop {
                let x: f64 = rng.sample::<f64, _>(StandardNormal) * TRUNC_SCALE;
                if x.abs() <= 1.0 {
                    break x;
                }
            },
        }
    }

    /// Density of one coordinate (all three are products of identical factors).
    pub fn density_1d(&self, x: f64) -> f64 {
        if x.abs() > 1.0 {
            return 0.0;
        }
        match self.kind {
            DensityKind::Ramp => {
                if x.abs() <= 0.5 {
                    2.0 / 3.0
                } else {
                    4.0 / 3.0 * (1.0 - x.abs())
                }
            }
            DensityKind::RaisedCosine => 0.5 * (1.0 + (PI * x).cos()),
            DensityKind::TruncatedGaussian => {
                // Normalised numerically once; only used for plots and checks.
                (-0.5 * (x / TRUNC_SCALE).powi(2)).exp() / trunc_mass()
            }
        }
    }

    pub fn density(&self, x: &[f64]) -> f64 {
        x.iter().map(|&xi| self.density_1d(xi)).product()
    }

    /// Exact CDF of one coordinate; unavailable for the truncated Gaussian.
    pub fn cdf_1d(&self, x: f64) -> Result<f64> {
        let x = x.clamp(-1.0, 1.0);
        match self.kind {
            DensityKind::Ramp => Ok(if x <= -0.5 {
                2.0 / 3.0 * (1.0 + x).powi(2)
            } else if x <= 0.5 {
                1.0 / 6.0 + 2.0 / 3.0 * (x + 0.5)
            } else {
                1.0 - 2.0 / 3.0 * (1.0 - x).powi(2)
            }),
            DensityKind::RaisedCosine => Ok((x + 1.0) / 2.0 + (PI * x).sin() / (2.0 * PI)),
            DensityKind::TruncatedGaussian => {
                Err(Error::Unsupported("no closed-form CDF for the truncated Gaussian".into()))
            }
        }
    }

    fn inverse_cdf_1d(&self, u: f64) -> f64 {
        match self.kind {
            DensityKind::Ramp => {
                if u < 1.0 / 6.0 {
                    -1.0 + (1.5 * u).sqrt()
                } else if u <= 5.0 / 6.0 {
                    1.5 * (u - 1.0 / 6.0) - 0.5
                } else {
                    1.0 - (1.5 * (1.0 - u)).sqrt()
                }
            }
            DensityKind::RaisedCosine => {
                // Bisection keeps a bracket; Newton steps accelerate inside it.
                let (mut lo, mut hi) = (-1.0_f64, 1.0_f64);
                let mut x = 2.0 * u - 1.0;
                for _ in 0..100 {
                    let f = (x + 1.0) / 2.0 + (PI * x).sin() / (2.0 * PI) - u;
                    if f.abs() < 1e-15 {
                        break;
                    }
                    if f > 0.0 {
                        hi = x;
                    } else {
                        lo = x;
                    }
                    let slope = 0.5 * (1.0 + (PI * x).cos());
                    let newton = x - f / slope;
                    x = if slope > 1e-12 && newton > lo && newton < hi { newton } else { 0.5 * (lo + hi) };
                    if hi - lo < 1e-15 {
                        break;
                    }
                }
                x
            }
            DensityKind::TruncatedGaussian => unreachable!("sampled by rejection"),
        }
    }
}

fn trunc_mass() -> f64 {
    // ∫_{-1}^{1} exp(−x²/(2s²)) dx by Simpson's rule.
    let n = 2000;
    let h = 2.0 / n as f64;
    (0..=n)
        .map(|i| {
            let x = -1.0 + i as f64 * h;
            let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
            w * (-0.5 * (x / TRUNC_SCALE).powi(2)).exp()
        })
        .sum::<f64>()
        * h
        / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;

    fn quad(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * f(lo + i as f64 * h)
            })
            .sum::<f64>()
            * h
            / 3.0
    }

    #[test]
    fn densities_integrate_to_one_and_match_cdfs() {
        for kind in [DensityKind::Ramp, DensityKind::RaisedCosine, DensityKind::TruncatedGaussian] {
            let d = TestDensity::new(kind, 1).unwrap();
            assert!((quad(|x| d.density_1d(x), -1.0, 1.0) - 1.0).abs() < 1e-6, "{kind:?}");
            if kind == DensityKind::TruncatedGaussian {
                assert!(d.cdf_1d(0.0).is_err());
                continue;
            }
            for i in 0..=20 {
                let x = -1.0 + 0.1 * i as f64;
                let integral = quad(|u| d.density_1d(u), -1.0, x);
                assert!((d.cdf_1d(x).unwrap() - integral).abs() < 1e-6, "{kind:?} at {x}");
                let u = d.cdf_1d(x).unwrap();
                assert!((d.inverse_cdf_1d(u) - x).abs() < 1e-7, "{kind:?} inverse at {x}");
            }
        }
    }

    #[test]
    fn samples_follow_the_cdf() {
        for kind in [DensityKind::Ramp, DensityKind::RaisedCosine] {
            let d = TestDensity::new(kind, 1).unwrap();
            let mut rng = rng_from_seed(4);
            let mut xs: Vec<f64> = d.sample(50_000, &mut rng).into_iter().map(|p| p[0]).collect();
            xs.sort_by(f64::total_cmp);
            let m = xs.len() as f64;
            let ks = xs
                .iter()
                .enumerate()
                .map(|(i, &x)| {
                    let f = d.cdf_1d(x).unwrap();
                    (f - i as f64 / m).abs().max((f - (i + 1) as f64 / m).abs())
                })
                .fold(0.0, f64::max);
            assert!(ks < 0.01, "{kind:?} {ks}");
        }
        let d = TestDensity::new(DensityKind::TruncatedGaussian, 3).unwrap();
        let pts = d.sample(1000, &mut rng_from_seed(2));
        assert!(pts.iter().all(|p| p.len() == 3 && p.iter().all(|x| x.abs() <= 1.0)));
        assert!(TestDensity::new(DensityKind::RaisedCosine, 2).is_err());
    }
}
