//! Empirical conditional flow matching: regress `v_θ(t, x)` onto the
//! conditional field `v_t(x|X_i)` at points drawn along each conditional path.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::adam::{Adam, AdamConfig};
use super::net::{MlpField, Workspace};
use crate::error::{check_dim, Error, Result};
use crate::field::Dataset;
use crate::kernel::{KernelKind, KernelSpec};
use crate::path::{cond_velocity_into, Schedule};
use crate::rng::{derive_seed, label, rng_from_seed, Rng};

/// How training times are drawn within one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeSampling {
    /// A fresh `t_i ~ U[0, 1]` for every data point.
    PerPoint,
    /// One shared `t ~ U[0, 1]` per step.
    PerStep,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetConfig {
    pub hidden: Vec<usize>,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self { hidden: vec![512, 512, 512] }
    }
}

impl NetConfig {
    pub fn uniform(width: usize, depth: usize) -> Self {
        Self { hidden: vec![width; depth] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub steps: usize,
    pub adam: AdamConfig,
    pub seed: u64,
    /// Steps after which a copy of the network is kept.
    pub checkpoints: Vec<usize>,
    pub time_sampling: TimeSampling,
    /// Weight of the finite-difference Lipschitz penalty; `None` disables it.
    pub lipschitz_penalty: Option<f64>,
    /// The loss trace stores the mean loss of each block of this many steps.
    pub log_every: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            steps: 40_000,
            adam: AdamConfig::default(),
            seed: 0,
            checkpoints: vec![10_000, 20_000, 30_000, 40_000],
            time_sampling: TimeSampling::PerPoint,
            lipschitz_penalty: None,
            log_every: 100,
        }
    }
}

/// One frozen set of regression pairs `((t_i, x_i), target_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct CfmBatch {
    pub times: Vec<f64>,
    pub points: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
}

impl CfmBatch {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// Draws one `(t_i, z_i)` per data point and forms `x_i = ψ_{t_i}(z_i|X_i)`
/// with target `v_{t_i}(x_i|X_i)`.
pub fn draw_cfm_batch<S: Schedule>(
    data: &Dataset,
    schedule: &S,
    kernel: &KernelSpec,
    time_sampling: TimeSampling,
    rng: &mut Rng,
) -> Result<CfmBatch> {
    check_dim(kernel.dim(), data.dim(), "training kernel")?;
    let d = data.dim();
    let shared_t: f64 = rng.gen_range(0.0..1.0);
    let mut batch = CfmBatch {
        times: Vec::with_capacity(data.len()),
        points: Vec::with_capacity(data.len()),
        targets: Vec::with_capacity(data.len()),
    };
    let mut z = vec![0.0; d];
    let mut mu = vec![0.0; d];
    for y in data.iter() {
        let t = match time_sampling {
            TimeSampling::PerPoint => rng.gen_range(0.0..1.0),
            TimeSampling::PerStep => shared_t,
        };
        kernel.sample_into(rng, &mut z);
        let sigma = schedule.sigma(t);
        let mut x = vec![0.0; d];
        schedule.mu(t, y, &mut x);
        for (xi, zi) in x.iter_mut().zip(&z) {
            *xi += sigma * zi;
        }
        let mut target = vec![0.0; d];
        cond_velocity_into(schedule, sigma, t, y, &x, &mut mu, &mut target);
        batch.times.push(t);
        batch.points.push(x);
        batch.targets.push(target);
    }
    Ok(batch)
}

/// Mean squared residual `mean_i |v_θ(t_i, x_i) − target_i|²` and its gradient.
pub fn loss_and_grad(net: &MlpField, batch: &CfmBatch) -> (f64, Vec<f64>) {
    let mut grads = vec![0.0; net.num_params()];
    let mut ws = Workspace::default();
    let scale = 1.0 / batch.len() as f64;
    let mut loss = 0.0;
    let mut residual = vec![0.0; net.dim()];
    for ((&t, x), target) in batch.times.iter().zip(&batch.points).zip(&batch.targets) {
        let out = net.forward_ws(t, x, &mut ws);
        for ((r, o), y) in residual.iter_mut().zip(out).zip(target) {
            *r = o - y;
            loss += *r * *r;
            *r *= 2.0 * scale;
        }
        net.backward_ws(&mut ws, &residual, &mut grads);
    }
    (loss * scale, grads)
}

/// Adds `λ·mean_i |v_θ(t_i, x_i + h u_i) − v_θ(t_i, x_i)|² / h²` for random
/// unit `u_i`, returning the penalty value.
fn add_lipschitz_penalty(net: &MlpField, batch: &CfmBatch, weight: f64, rng: &mut Rng, grads: &mut [f64]) -> f64 {
    const H: f64 = 1e-3;
    let d = net.dim();
    let scale = weight / (batch.len() as f64 * H * H);
    let mut ws = Workspace::default();
    let mut penalty = 0.0;
    let mut shifted = vec![0.0; d];
    let mut dir = vec![0.0; d];
    for (&t, x) in batch.times.iter().zip(&batch.points) {
        KernelSpec::gaussian(d).expect("d > 0").sample_into(rng, &mut dir);
        let norm = dir.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        for ((s, xi), u) in shifted.iter_mut().zip(x).zip(&dir) {
            *s = xi + H * u / norm;
        }
        let base = net.forward_ws(t, x, &mut ws).to_vec();
        let moved = net.forward_ws(t, &shifted, &mut ws).to_vec();
        let r: Vec<f64> = moved.iter().zip(&base).map(|(a, b)| a - b).collect();
        penalty += scale * r.iter().map(|v| v * v).sum::<f64>();
        let g: Vec<f64> = r.iter().map(|v| 2.0 * scale * v).collect();
        net.backward_ws(&mut ws, &g, grads);
        net.forward_ws(t, x, &mut ws);
        let neg: Vec<f64> = g.iter().map(|v| -v).collect();
        net.backward_ws(&mut ws, &neg, grads);
    }
    penalty
}

/// Draws a fresh batch from `seed` and returns its loss and gradient.
pub fn cfm_loss_and_grad<S: Schedule>(
    net: &MlpField,
    data: &Dataset,
    schedule: &S,
    kernel: &KernelSpec,
    seed: u64,
) -> Result<(f64, Vec<f64>)> {
    check_dim(net.dim(), data.dim(), "network")?;
    let mut rng = rng_from_seed(seed);
    let batch = draw_cfm_batch(data, schedule, kernel, TimeSampling::PerPoint, &mut rng)?;
    Ok(loss_and_grad(net, &batch))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossPoint {
    /// Last step of the block.
    pub step: usize,
    pub loss: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub net: MlpField,
    pub loss_trace: Vec<LossPoint>,
    pub checkpoints: Vec<(usize, MlpField)>,
}

/// Full-batch CFM training with Adam. Deterministic given `train.seed`.
pub fn train_cfm<S: Schedule>(
    data: &Dataset,
    schedule: &S,
    kernel: &KernelSpec,
    net_cfg: &NetConfig,
    train: &TrainConfig,
) -> Result<TrainOutcome> {
    if kernel.kind() != KernelKind::Gaussian {
        return Err(Error::Unsupported("CFM training uses the Gaussian latent kernel".into()));
    }
    check_dim(kernel.dim(), data.dim(), "training kernel")?;
    if !(train.adam.lr > 0.0) || train.log_every == 0 {
        return Err(Error::input("learning rate and log interval must be positive"));
    }
    let net = MlpField::new(data.dim(), &net_cfg.hidden, derive_seed(train.seed, &[label("init")]))?;
    train_from(net, data, schedule, kernel, train)
}

/// Continues training an existing network.
pub fn train_from<S: Schedule>(
    mut net: MlpField,
    data: &Dataset,
    schedule: &S,
    kernel: &KernelSpec,
    train: &TrainConfig,
) -> Result<TrainOutcome> {
    check_dim(net.dim(), data.dim(), "network")?;
    let mut rng = rng_from_seed(derive_seed(train.seed, &[label("draws")]));
    let mut opt = Adam::new(net.num_params(), train.adam);
    let mut loss_trace = Vec::new();
    let mut checkpoints = Vec::new();
    let mut block_sum = 0.0;
    let mut block_len = 0usize;
    for step in 1..=train.steps {
        let batch = draw_cfm_batch(data, schedule, kernel, train.time_sampling, &mut rng)?;
        let (mut loss, mut grads) = loss_and_grad(&net, &batch);
        if let Some(weight) = train.lipschitz_penalty {
            loss += add_lipschitz_penalty(&net, &batch, weight, &mut rng, &mut grads);
        }
        if !loss.is_finite() {
            return Err(Error::Training { step, loss });
        }
        opt.step(net.params_mut(), &grads);
        block_sum += loss;
        block_len += 1;
        if step % train.log_every == 0 || step == train.steps {
            loss_trace.push(LossPoint { step, loss: block_sum / block_len as f64 });
            block_sum = 0.0;
            block_len = 0;
        }
        if train.checkpoints.contains(&step) {
            checkpoints.push((step, net.clone()));
        }
    }
    Ok(TrainOutcome { net, loss_trace, checkpoints })
}

/// Medians of consecutive windows of `window` trace entries.
pub fn windowed_medians(trace: &[LossPoint], window: usize) -> Vec<f64> {
    trace
        .chunks(window.max(1))
        .map(|c| {
            let mut v: Vec<f64> = c.iter().map(|p| p.loss).collect();
            v.sort_by(f64::total_cmp);
            let k = v.len();
            if k % 2 == 1 {
                v[k / 2]
            } else {
                0.5 * (v[k / 2 - 1] + v[k / 2])
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::PathSchedule;

    fn small_data() -> Dataset {
        Dataset::new(vec![vec![0.5, -0.3], vec![-0.8, 0.1], vec![0.2, 0.9], vec![-0.1, -0.6]]).unwrap()
    }

    #[test]
    fn batch_targets_are_conditional_velocities() {
        let data = small_data();
        let sched = PathSchedule::linear(0.1).unwrap();
        let k = KernelSpec::gaussian(2).unwrap();
        let mut rng = rng_from_seed(1);
        let b = draw_cfm_batch(&data, &sched, &k, TimeSampling::PerPoint, &mut rng).unwrap();
        assert_eq!(b.len(), 4);
        for i in 0..4 {
            let y = data.point(i);
            let t = b.times[i];
            let s = 1.0 - 0.9 * t;
            for j in 0..2 {
                let expected = -0.9 / s * (b.points[i][j] - t * y[j]) + y[j];
                assert!((b.targets[i][j] - expected).abs() < 1e-12);
            }
        }
        let shared = draw_cfm_batch(&data, &sched, &k, TimeSampling::PerStep, &mut rng).unwrap();
        assert!(shared.times.iter().all(|&t| t == shared.times[0]));
    }

    #[test]
    fn zero_network_loss_is_mean_squared_target() {
        let net = MlpField::zeros(2, &[8, 8]).unwrap();
        let data = small_data();
        let sched = PathSchedule::linear(0.2).unwrap();
        let k = KernelSpec::gaussian(2).unwrap();
        let mut rng = rng_from_seed(9);
        let b = draw_cfm_batch(&data, &sched, &k, TimeSampling::PerPoint, &mut rng).unwrap();
        let (loss, _) = loss_and_grad(&net, &b);
        let expected = b.targets.iter().map(|t| t.iter().map(|v| v * v).sum::<f64>()).sum::<f64>() / 4.0;
        assert!((loss - expected).abs() < 1e-12);
    }

    #[test]
    fn zero_steps_returns_initial_network() {
        let data = small_data();
        let sched = PathSchedule::linear(0.2).unwrap();
        let k = KernelSpec::gaussian(2).unwrap();
        let cfg = TrainConfig { steps: 0, checkpoints: vec![], ..TrainConfig::default() };
        let net_cfg = NetConfig::uniform(8, 3);
        let out = train_cfm(&data, &sched, &k, &net_cfg, &cfg).unwrap();
        let init = MlpField::new(2, &[8, 8, 8], derive_seed(cfg.seed, &[label("init")])).unwrap();
        assert_eq!(out.net, init);
        assert!(out.loss_trace.is_empty());
    }

    #[test]
    fn training_is_deterministic_and_checkpoints() {
        let data = small_data();
        let sched = PathSchedule::linear(0.2).unwrap();
        let k = KernelSpec::gaussian(2).unwrap();
        let cfg = TrainConfig { steps: 300, checkpoints: vec![100, 300], seed: 4, ..TrainConfig::default() };
        let a = train_cfm(&data, &sched, &k, &NetConfig::uniform(8, 2), &cfg).unwrap();
        let b = train_cfm(&data, &sched, &k, &NetConfig::uniform(8, 2), &cfg).unwrap();
        assert_eq!(a.net, b.net);
        assert_eq!(a.loss_trace, b.loss_trace);
        assert_eq!(a.loss_trace.len(), 3);
        assert_eq!(a.checkpoints.iter().map(|c| c.0).collect::<Vec<_>>(), vec![100, 300]);
        assert_eq!(a.checkpoints[1].1, a.net);
    }

    #[test]
    fn uniform_kernel_is_refused_for_training() {
        let data = small_data();
        let sched = PathSchedule::linear(0.2).unwrap();
        let k = KernelSpec::uniform(2).unwrap();
        let cfg = TrainConfig { steps: 1, ..TrainConfig::default() };
        assert!(matches!(train_cfm(&data, &sched, &k, &NetConfig::uniform(4, 1), &cfg), Err(Error::Unsupported(_))));
    }

    #[test]
    fn exploding_learning_rate_reports_step() {
        let data = small_data();
        let sched = PathSchedule::linear(0.01).unwrap();
        let k = KernelSpec::gaussian(2).unwrap();
        let mut cfg = TrainConfig { steps: 2000, checkpoints: vec![], ..TrainConfig::default() };
        cfg.adam.lr = 1e150;
        match train_cfm(&data, &sched, &k, &NetConfig::uniform(8, 3), &cfg) {
            Err(Error::Training { step, .. }) => assert!(step >= 1),
            other => panic!("expected divergence, got {:?}", other.map(|o| o.loss_trace.len())),
        }
    }

    #[test]
    fn lipschitz_penalty_gradient_matches_finite_differences() {
        let data = small_data();
        let sched = PathSchedule::linear(0.2).unwrap();
        let k = KernelSpec::gaussian(2).unwrap();
        let net = MlpField::new(2, &[6, 6], 3).unwrap();
        let mut rng = rng_from_seed(12);
        let batch = draw_cfm_batch(&data, &sched, &k, TimeSampling::PerPoint, &mut rng).unwrap();
        let penalty_at = |n: &MlpField| {
            let mut g = vec![0.0; n.num_params()];
            add_lipschitz_penalty(n, &batch, 0.5, &mut rng_from_seed(99), &mut g)
        };
        let mut grads = vec![0.0; net.num_params()];
        add_lipschitz_penalty(&net, &batch, 0.5, &mut rng_from_seed(99), &mut grads);
        let h = 1e-6;
        for p in (0..net.num_params()).step_by(7) {
            let mut plus = net.clone();
            plus.params_mut()[p] += h;
            let mut minus = net.clone();
            minus.params_mut()[p] -= h;
            let fd = (penalty_at(&plus) - penalty_at(&minus)) / (2.0 * h);
            assert!((fd - grads[p]).abs() <= 1e-4 * fd.abs().max(1e-3), "param {p}: {fd} vs {}", grads[p]);
        }
    }

    #[test]
    fn windowed_medians_of_trace() {
        let trace: Vec<LossPoint> =
            [5.0, 1.0, 3.0, 2.0, 8.0].iter().enumerate().map(|(i, &l)| LossPoint { step: i, loss: l }).collect();
        assert_eq!(windowed_medians(&trace, 2), vec![3.0, 2.5, 8.0]);
    }
}
