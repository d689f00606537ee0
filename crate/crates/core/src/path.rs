//! Conditional kernel probability paths.
//!
//! A path is fixed by a [`Schedule`] (σ_t and μ_t(y) together with their time
//! derivatives) and a [`KernelSpec`]. For an anchor `y` the conditional flow is
//! `ψ_t(z|y) = σ_t z + μ_t(y)`, which pushes the kernel forward to
//! `p_t(x|y) = σ_t^{-d} K((x − μ_t(y)) / σ_t)` and is generated by the field
//! `v_t(x|y) = (σ̇_t / σ_t)(x − μ_t(y)) + μ̇_t(y)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, check_time, Error, Result};
use crate::kernel::KernelSpec;

/// Time schedule of a conditional path. Values and derivatives are supplied
/// analytically, never by numerical differentiation.
///
/// Implementations must satisfy σ_0 = 1, σ_1 = σ_min, σ_t > 0 on [0, 1],
/// μ_0(y) = 0 and μ_1(y) = y.
pub trait Schedule: Send + Sync {
    fn sigma_min(&self) -> f64;
    fn sigma(&self, t: f64) -> f64;
    fn sigma_dot(&self, t: f64) -> f64;
    fn mu(&self, t: f64, y: &[f64], out: &mut [f64]);
    fn mu_dot(&self, t: f64, y: &[f64], out: &mut [f64]);
}

/// The schedules shipped with the crate. Both use the straight mean path
/// `μ_t(y) = t·y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathSchedule {
    /// `σ_t = 1 − (1 − σ_min) t`.
    Linear { sigma_min: f64 },
    /// `σ_t = (1 − (1 − σ_min^{1/k}) t)^k`; `k = 1` is `Linear`.
    Power { sigma_min: f64, k: f64 },
}

impl PathSchedule {
    pub fn linear(sigma_min: f64) -> Result<Self> {
        check_sigma_min(sigma_min)?;
        Ok(PathSchedule::Linear { sigma_min })
    }

    pub fn power(sigma_min: f64, k: f64) -> Result<Self> {
        check_sigma_min(sigma_min)?;
        if !(k.is_finite() && k > 0.0) {
            return Err(Error::input(format!("curvature exponent k={k} must be positive")));
        }
        Ok(PathSchedule::Power { sigma_min, k })
    }

    /// True for the linear schedule (or the power family at k = 1).
    pub fn is_linear(&self) -> bool {
        match *self {
            PathSchedule::Linear { .. } => true,
            PathSchedule::Power { k, .. } => k == 1.0,
        }
    }
}

fn check_sigma_min(sigma_min: f64) -> Result<()> {
    if !(sigma_min > 0.0 && sigma_min <= 1.0) {
        return Err(Error::input(format!("sigma_min={sigma_min} must lie in (0, 1]")));
    }
    Ok(())
}

impl Schedule for PathSchedule {
    fn sigma_min(&self) -> f64 {
        match *self {
            PathSchedule::Linear { sigma_min } | PathSchedule::Power { sigma_min, .. } => sigma_min,
        }
    }

    fn sigma(&self, t: f64) -> f64 {
        match *self {
            PathSchedule::Linear { sigma_min } => 1.0 - (1.0 - sigma_min) * t,
            PathSchedule::Power { sigma_min, k } => {
                let c = 1.0 - sigma_min.powf(1.0 / k);
                (1.0 - c * t).powf(k)
            }
        }
    }

    fn sigma_dot(&self, t: f64) -> f64 {
        match *self {
            PathSchedule::Linear { sigma_min } => -(1.0 - sigma_min),
            PathSchedule::Power { sigma_min, k } => {
                let c = 1.0 - sigma_min.powf(1.0 / k);
                -k * c * (1.0 - c * t).powf(k - 1.0)
            }
        }
    }

    fn mu(&self, t: f64, y: &[f64], out: &mut [f64]) {
        for (o, &yi) in out.iter_mut().zip(y) {
            *o = t * yi;
        }
    }

    fn mu_dot(&self, _t: f64, y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(y);
    }
}

/// A conditional path anchored at a single point `y`.
#[derive(Debug, Clone)]
pub struct ConditionalPath<S = PathSchedule> {
    schedule: S,
    kernel: KernelSpec,
    anchor: Vec<f64>,
}

impl<S: Schedule> ConditionalPath<S> {
    pub fn new(schedule: S, kernel: KernelSpec, anchor: Vec<f64>) -> Result<Self> {
        check_dim(kernel.dim(), anchor.len(), "conditional path anchor")?;
        Ok(Self { schedule, kernel, anchor })
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn schedule(&self) -> &S {
        &self.schedule
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    fn checked_sigma(&self, t: f64) -> Result<f64> {
        check_time(t)?;
        let s = self.schedule.sigma(t);
        if !(s > 0.0 && s.is_finite()) {
            return Err(Error::State(format!("schedule gives sigma({t}) = {s}")));
        }
        Ok(s)
    }

    /// `ψ_t(z|y) = σ_t z + μ_t(y)`.
    pub fn flow(&self, t: f64, z: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.kernel.dim(), z.len(), "conditional flow")?;
        let s = self.checked_sigma(t)?;
        let mut out = vec![0.0; z.len()];
        self.schedule.mu(t, &self.anchor, &mut out);
        for (o, &zi) in out.iter_mut().zip(z) {
            *o += s * zi;
        }
        Ok(out)
    }

    pub fn velocity(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_dim(self.kernel.dim(), x.len(), "conditional velocity")?;
        let s = self.checked_sigma(t)?;
        let mut out = vec![0.0; x.len()];
        let mut mu = vec![0.0; x.len()];
        cond_velocity_into(&self.schedule, s, t, &self.anchor, x, &mut mu, &mut out);
        Ok(out)
    }

    pub fn density(&self, t: f64, x: &[f64]) -> Result<f64> {
        Ok(self.log_density(t, x)?.exp())
    }

    pub fn log_density(&self, t: f64, x: &[f64]) -> Result<f64> {
        check_dim(self.kernel.dim(), x.len(), "conditional density")?;
        let s = self.checked_sigma(t)?;
        let mut u = vec![0.0; x.len()];
        self.schedule.mu(t, &self.anchor, &mut u);
        for (ui, &xi) in u.iter_mut().zip(x) {
            *ui = xi - *ui;
        }
        Ok(self.kernel.scaled_log_density(&u, s))
    }
}

/// Writes `v_t(x|y)` into `out`; `mu` is scratch of the same length.
pub(crate) fn cond_velocity_into<S: Schedule + ?Sized>(
    schedule: &S,
    sigma: f64,
    t: f64,
    anchor: &[f64],
    x: &[f64],
    mu: &mut [f64],
    out: &mut [f64],
) {
    let rate = schedule.sigma_dot(t) / sigma;
    schedule.mu(t, anchor, mu);
    schedule.mu_dot(t, anchor, out);
    for ((o, &m), &xi) in out.iter_mut().zip(mu.iter()).zip(x) {
        *o += rate * (xi - m);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;

    fn path(sigma_min: f64, y: &[f64]) -> ConditionalPath {
        ConditionalPath::new(
            PathSchedule::linear(sigma_min).unwrap(),
            KernelSpec::gaussian(y.len()).unwrap(),
            y.to_vec(),
        )
        .unwrap()
    }

    #[test]
    fn schedule_endpoints() {
        for s in [
            PathSchedule::linear(0.1).unwrap(),
            PathSchedule::power(0.1, 2.0).unwrap(),
            PathSchedule::power(0.3, 0.5).unwrap(),
        ] {
            assert!((s.sigma(0.0) - 1.0).abs() < 1e-15);
            assert!((s.sigma(1.0) - s.sigma_min()).abs() < 1e-12);
            for i in 0..=100 {
                assert!(s.sigma(i as f64 / 100.0) > 0.0);
            }
            let y = [2.0, -1.0];
            let mut m = [0.0; 2];
            s.mu(0.0, &y, &mut m);
            assert_eq!(m, [0.0, 0.0]);
            s.mu(1.0, &y, &mut m);
            assert_eq!(m, y);
        }
        assert!(PathSchedule::linear(0.0).is_err());
        assert!(PathSchedule::linear(1.5).is_err());
    }

    #[test]
    fn sigma_dot_matches_finite_differences() {
        for s in [PathSchedule::linear(0.2).unwrap(), PathSchedule::power(0.05, 3.0).unwrap()] {
            for i in 1..20 {
                let t = i as f64 / 20.0;
                let h = 1e-6;
                let fd = (s.sigma(t + h) - s.sigma(t - h)) / (2.0 * h);
                assert!((fd - s.sigma_dot(t)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn flow_examples() {
        assert_eq!(path(0.5, &[1.0]).flow(1.0, &[0.0]).unwrap(), vec![1.0]);
        assert_eq!(path(0.5, &[1.0]).flow(0.0, &[2.0]).unwrap(), vec![2.0]);
        let v = path(0.1, &[1.0, 0.0]).flow(0.5, &[1.0, 1.0]).unwrap();
        assert!((v[0] - 1.05).abs() < 1e-15 && (v[1] - 0.55).abs() < 1e-15);
        assert!(matches!(path(0.5, &[1.0]).flow(1.5, &[0.0]), Err(Error::Input(_))));
        assert!(matches!(path(0.5, &[1.0]).flow(-0.1, &[0.0]), Err(Error::Input(_))));
    }

    #[test]
    fn velocity_examples() {
        let p = path(1.0, &[3.0]);
        for t in [0.0, 0.3, 1.0] {
            for x in [-5.0, 0.0, 7.0] {
                assert_eq!(p.velocity(t, &[x]).unwrap(), vec![3.0]);
            }
        }
        assert_eq!(path(0.5, &[1.0]).velocity(0.0, &[0.0]).unwrap(), vec![1.0]);
        assert_eq!(path(0.5, &[1.0]).velocity(1.0, &[1.0]).unwrap(), vec![1.0]);
    }

    struct Collapsing;
    impl Schedule for Collapsing {
        fn sigma_min(&self) -> f64 {
            0.0
        }
        fn sigma(&self, t: f64) -> f64 {
            1.0 - t
        }
        fn sigma_dot(&self, _t: f64) -> f64 {
            -1.0
        }
        fn mu(&self, t: f64, y: &[f64], out: &mut [f64]) {
            PathSchedule::Linear { sigma_min: 1.0 }.mu(t, y, out)
        }
        fn mu_dot(&self, t: f64, y: &[f64], out: &mut [f64]) {
            PathSchedule::Linear { sigma_min: 1.0 }.mu_dot(t, y, out)
        }
    }

    #[test]
    fn zero_sigma_is_state_error() {
        let p = ConditionalPath::new(Collapsing, KernelSpec::gaussian(1).unwrap(), vec![1.0]).unwrap();
        assert!(p.velocity(0.5, &[0.0]).is_ok());
        assert!(matches!(p.velocity(1.0, &[0.0]), Err(Error::State(_))));
    }

    #[test]
    fn density_examples() {
        let k = KernelSpec::gaussian(2).unwrap();
        let p = path(0.3, &[2.0, -1.0]);
        let x = [0.4, 0.9];
        assert!((p.density(0.0, &x).unwrap() - k.density(&x).unwrap()).abs() < 1e-15);
        let v = path(0.1, &[1.0]).density(1.0, &[1.0]).unwrap();
        assert!((v - 10.0 * 0.398_942_280_401_432_7).abs() < 1e-10);
    }

    #[test]
    fn density_integrates_to_one() {
        for (t, y) in [(0.0, 0.5), (0.4, -1.0), (0.9, 1.0), (1.0, 0.3)] {
            let p = path(0.1, &[y]);
            let n = 20001;
            let (lo, hi) = (-10.0, 10.0);
            let h = (hi - lo) / (n - 1) as f64;
            let mass: f64 = (0..n)
                .map(|i| {
                    let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                    w * p.density(t, &[lo + i as f64 * h]).unwrap()
                })
                .sum::<f64>()
                * h;
            assert!((mass - 1.0).abs() < 1e-4, "t={t}: {mass}");
        }
        let p = ConditionalPath::new(
            PathSchedule::linear(0.2).unwrap(),
            KernelSpec::uniform(2).unwrap(),
            vec![0.5, 0.5],
        )
        .unwrap();
        let n = 801;
        let h = 4.0 / (n - 1) as f64;
        let mut mass = 0.0;
        for i in 0..n {
            for j in 0..n {
                mass += p.density(0.5, &[-2.0 + i as f64 * h, -2.0 + j as f64 * h]).unwrap();
            }
        }
        assert!((mass * h * h - 1.0).abs() < 1e-2);
    }

    #[test]
    fn flow_derivative_matches_velocity() {
        let mut rng = rng_from_seed(5);
        for sched in [PathSchedule::linear(0.1).unwrap(), PathSchedule::power(0.1, 2.0).unwrap()] {
            for _ in 0..200 {
                let y = vec![rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
                let z = vec![rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0)];
                let t = rng.gen_range(0.01..0.99);
                let p = ConditionalPath::new(sched, KernelSpec::gaussian(2).unwrap(), y).unwrap();
                let h = 1e-5;
                let fwd = p.flow(t + h, &z).unwrap();
                let bwd = p.flow(t - h, &z).unwrap();
                let v = p.velocity(t, &p.flow(t, &z).unwrap()).unwrap();
                for j in 0..2 {
                    assert!(((fwd[j] - bwd[j]) / (2.0 * h) - v[j]).abs() < 1e-6);
                }
            }
        }
    }

    #[test]
    fn pushforward_matches_density_in_cdf() {
        // Kolmogorov distance between pushed samples and the quadrature CDF.
        let p = path(0.2, &[1.5]);
        let t = 0.7;
        let k = KernelSpec::gaussian(1).unwrap();
        let mut rng = rng_from_seed(17);
        let mut xs: Vec<f64> = (0..100_000)
            .map(|_| p.flow(t, &k.sample_one(&mut rng)).unwrap()[0])
            .collect();
        xs.sort_by(f64::total_cmp);

        let (lo, hi, n) = (-6.0, 8.0, 140_001);
        let h = (hi - lo) / (n - 1) as f64;
        let mut cdf = vec![0.0; n];
        let mut prev = p.density(t, &[lo]).unwrap();
        for i in 1..n {
            let cur = p.density(t, &[lo + i as f64 * h]).unwrap();
            cdf[i] = cdf[i - 1] + 0.5 * h * (prev + cur);
            prev = cur;
        }
        let m = xs.len() as f64;
        let mut ks: f64 = 0.0;
        for (i, &x) in xs.iter().enumerate() {
            let idx = (((x - lo) / h).round() as usize).min(n - 1);
            let f = cdf[idx];
            ks = ks.max((f - i as f64 / m).abs()).max((f - (i + 1) as f64 / m).abs());
        }
        assert!(ks <= 0.01, "Kolmogorov distance {ks}");
    }
}
