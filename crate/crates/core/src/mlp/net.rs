use rand_distr::{Distribution, Normal};

use crate::error::{check_dim, check_time, Error, Result};
use crate::ode::VelocityField;
use crate::rng::rng_from_seed;

pub const SELU_LAMBDA: f64 = 1.050_700_987_355_480_5;
pub const SELU_ALPHA: f64 = 1.673_263_242_354_377_2;

#[inline]
pub fn selu(z: f64) -> f64 {
    if z > 0.0 {
        SELU_LAMBDA * z
    } else {
        SELU_LAMBDA * SELU_ALPHA * z.exp_m1()
    }
}

#[inline]
fn selu_grad(z: f64) -> f64 {
    if z > 0.0 {
        SELU_LAMBDA
    } else {
        SELU_LAMBDA * SELU_ALPHA * z.exp()
    }
}

/// Feedforward vector field `v_θ(t, x)`: input `(t, x₁..x_d)`, SeLU hidden
/// layers, affine output of dimension `d`.
///
/// Parameters live in one flat buffer, layer by layer, each layer's weight
/// matrix (row-major, `out × in`) followed by its bias.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpField {
    sizes: Vec<usize>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

/// Per-sample activations kept for the backward pass.
#[derive(Debug, Clone, Default)]
pub struct Workspace {
    // pre[l], post[l] for layer l = 0..L; post[-1] is the input.
    input: Vec<f64>,
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    delta: Vec<f64>,
    delta_prev: Vec<f64>,
}

impl MlpField {
    /// All-zero parameters with the given hidden widths.
    pub fn zeros(dim: usize, hidden: &[usize]) -> Result<Self> {
        if dim == 0 || hidden.contains(&0) {
            return Err(Error::input("network dimensions must be positive"));
        }
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(dim + 1);
        sizes.extend_from_slice(hidden);
        sizes.push(dim);
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut total = 0;
        for w in sizes.windows(2) {
            offsets.push(total);
            total += w[1] * w[0] + w[1];
        }
        Ok(Self { sizes, offsets, params: vec![0.0; total] })
    }

    /// LeCun-normal weights (variance 1/fan_in) and zero biases.
    pub fn new(dim: usize, hidden: &[usize], seed: u64) -> Result<Self> {
        let mut net = Self::zeros(dim, hidden)?;
        let mut rng = rng_from_seed(seed);
        for l in 0..net.num_layers() {
            let fan_in = net.sizes[l];
            let normal = Normal::new(0.0, (1.0 / fan_in as f64).sqrt()).expect("positive std");
            for w in net.weights_mut(l) {
                *w = normal.sample(&mut rng);
            }
        }
        Ok(net)
    }

    /// Builds a network from layer sizes `[d+1, h₁, …, d]` and a flat parameter vector.
    pub fn from_parts(sizes: Vec<usize>, params: Vec<f64>) -> Result<Self> {
        if sizes.len() < 2 || sizes[0] != sizes[sizes.len() - 1] + 1 {
            return Err(Error::input("layer sizes must run from d+1 to d"));
        }
        let net = Self::zeros(sizes[sizes.len() - 1], &sizes[1..sizes.len() - 1])?;
        if params.len() != net.params.len() {
            return Err(Error::input(format!(
                "expected {} parameters for these layer sizes, got {}",
                net.params.len(),
                params.len()
            )));
        }
        Ok(Self { params, ..net })
    }

    pub fn dim(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn num_layers(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn weight_range(&self, l: usize) -> std::ops::Range<usize> {
        let start = self.offsets[l];
        start..start + self.sizes[l + 1] * self.sizes[l]
    }

    fn bias_range(&self, l: usize) -> std::ops::Range<usize> {
        let start = self.weight_range(l).end;
        start..start + self.sizes[l + 1]
    }

    pub fn weights(&self, l: usize) -> &[f64] {
        &self.params[self.weight_range(l)]
    }

    pub fn weights_mut(&mut self, l: usize) -> &mut [f64] {
        let r = self.weight_range(l);
        &mut self.params[r]
    }

    pub fn bias(&self, l: usize) -> &[f64] {
        &self.params[self.bias_range(l)]
    }

    pub fn bias_mut(&mut self, l: usize) -> &mut [f64] {
        let r = self.bias_range(l);
        &mut self.params[r]
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|p| p.is_finite())
    }

    pub fn forward(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        check_time(t)?;
        check_dim(self.dim(), x.len(), "network input")?;
        if !self.all_finite() {
            return Err(Error::State("network has non-finite parameters".into()));
        }
        let mut ws = Workspace::default();
        Ok(self.forward_ws(t, x, &mut ws).to_vec())
    }

    /// Forward pass that keeps every layer's activations in `ws`.
    pub(crate) fn forward_ws<'w>(&self, t: f64, x: &[f64], ws: &'w mut Workspace) -> &'w [f64] {
        let layers = self.num_layers();
        ws.input.clear();
        ws.input.push(t);
        ws.input.extend_from_slice(x);
        ws.pre.resize(layers, Vec::new());
        ws.post.resize(layers, Vec::new());
        for l in 0..layers {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = self.weights(l);
            let b = self.bias(l);
            let (before, rest) = ws.post.split_at_mut(l);
            let input: &[f64] = if l == 0 { &ws.input } else { &before[l - 1] };
            let pre = &mut ws.pre[l];
            pre.clear();
            for o in 0..fan_out {
                let row = &w[o * fan_in..(o + 1) * fan_in];
                pre.push(b[o] + row.iter().zip(input).map(|(a, v)| a * v).sum::<f64>());
            }
            let post = &mut rest[0];
            post.clear();
            if l + 1 == layers {
                post.extend_from_slice(pre);
            } else {
                post.extend(pre.iter().map(|&z| selu(z)));
            }
        }
        &ws.post[layers - 1]
    }

    /// Accumulates `∂(out_grad · v_θ)/∂θ` into `grads` using the activations
    /// left in `ws` by the matching [`forward_ws`](Self::forward_ws) call.
    pub(crate) fn backward_ws(&self, ws: &mut Workspace, out_grad: &[f64], grads: &mut [f64]) {
        let layers = self.num_layers();
        ws.delta.clear();
        ws.delta.extend_from_slice(out_grad);
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let input: &[f64] = if l == 0 { &ws.input } else { &ws.post[l - 1] };
            let wr = self.weight_range(l);
            let br = self.bias_range(l);
            {
                let gw = &mut grads[wr.clone()];
                for o in 0..fan_out {
                    let d = ws.delta[o];
                    if d != 0.0 {
                        for (g, v) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(input) {
                            *g += d * v;
                        }
                    }
                }
            }
            for (g, d) in grads[br].iter_mut().zip(&ws.delta) {
                *g += d;
            }
            if l == 0 {
                break;
            }
            let w = &self.params[wr];
            ws.delta_prev.clear();
            ws.delta_prev.resize(fan_in, 0.0);
            for o in 0..fan_out {
                let d = ws.delta[o];
                if d != 0.0 {
                    for (acc, a) in ws.delta_prev.iter_mut().zip(&w[o * fan_in..(o + 1) * fan_in]) {
                        *acc += d * a;
                    }
                }
            }
            for (acc, &z) in ws.delta_prev.iter_mut().zip(&ws.pre[l - 1]) {
                *acc *= selu_grad(z);
            }
            std::mem::swap(&mut ws.delta, &mut ws.delta_prev);
        }
    }
}

impl VelocityField for MlpField {
    fn dim(&self) -> usize {
        MlpField::dim(self)
    }

    fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) -> Result<()> {
        let mut ws = Workspace::default();
        out.copy_from_slice(self.forward_ws(t, x, &mut ws));
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::rng_from_seed;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn zero_network_outputs_zero() {
        let net = MlpField::zeros(2, &[8, 8, 8]).unwrap();
        assert_eq!(net.forward(0.3, &[1.0, -4.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn single_affine_layer_identity() {
        let mut net = MlpField::zeros(2, &[]).unwrap();
        // rows: out_j = 0·t + x_j
        net.weights_mut(0).copy_from_slice(&[0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert_eq!(net.forward(0.7, &[2.5, -1.0]).unwrap(), vec![2.5, -1.0]);
    }

    #[test]
    fn matches_straight_line_evaluation() {
        let net = MlpField::new(2, &[8, 8, 8], 42).unwrap();
        let (t, x) = (0.37, [0.8, -1.3]);
        // Independent re-evaluation from the public weight accessors.
        let mut a = vec![t, x[0], x[1]];
        for l in 0..net.num_layers() {
            let (n_in, n_out) = (net.layer_sizes()[l], net.layer_sizes()[l + 1]);
            let mut next = vec![0.0; n_out];
            for o in 0..n_out {
                let mut s = net.bias(l)[o];
                for i in 0..n_in {
                    s += net.weights(l)[o * n_in + i] * a[i];
                }
                next[o] = if l + 1 < net.num_layers() {
                    if s > 0.0 {
                        1.0507009873554805 * s
                    } else {
                        1.0507009873554805 * 1.6732632423543772 * (s.exp() - 1.0)
                    }
                } else {
                    s
                };
            }
            a = next;
        }
        let got = net.forward(t, &x).unwrap();
        for j in 0..2 {
            assert!((got[j] - a[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_validation() {
        let mut net = MlpField::new(1, &[4], 1).unwrap();
        assert!(net.forward(1.5, &[0.0]).is_err());
        assert!(net.forward(0.5, &[0.0, 1.0]).is_err());
        net.params_mut()[3] = f64::NAN;
        assert!(matches!(net.forward(0.5, &[0.0]), Err(Error::State(_))));
        assert!(MlpField::zeros(0, &[4]).is_err());
        assert!(MlpField::from_parts(vec![3, 4, 2], vec![0.0; 5]).is_err());
        assert!(MlpField::from_parts(vec![3, 4, 3], vec![0.0; 31]).is_err());
    }

    #[test]
    fn parameter_layout() {
        let net = MlpField::zeros(2, &[8, 32]).unwrap();
        assert_eq!(net.layer_sizes(), &[3, 8, 32, 2]);
        assert_eq!(net.num_params(), 3 * 8 + 8 + 8 * 32 + 32 + 32 * 2 + 2);
        assert_eq!(net.weights(1).len(), 256);
        assert_eq!(net.bias(2).len(), 2);
    }

    #[test]
    fn lecun_init_preserves_variance_through_selu() {
        let width = 256;
        let net = MlpField::new(width - 1, &[width, width], 5).unwrap();
        let mut rng = rng_from_seed(6);
        let probes: Vec<Vec<f64>> =
            (0..200).map(|_| (0..width).map(|_| rng.sample(StandardNormal)).collect()).collect();
        let variance = |rows: &[Vec<f64>]| {
            let all: Vec<f64> = rows.iter().flatten().copied().collect();
            let m = all.iter().sum::<f64>() / all.len() as f64;
            all.iter().map(|v| (v - m).powi(2)).sum::<f64>() / all.len() as f64
        };
        let v_in = variance(&probes);
        let mut layer_in = probes;
        for l in 0..2 {
            let n_in = net.layer_sizes()[l];
            let out: Vec<Vec<f64>> = layer_in
                .iter()
                .map(|a| {
                    (0..net.layer_sizes()[l + 1])
                        .map(|o| {
                            let row = &net.weights(l)[o * n_in..(o + 1) * n_in];
                            selu(row.iter().zip(a).map(|(w, v)| w * v).sum::<f64>() + net.bias(l)[o])
                        })
                        .collect()
                })
                .collect();
            let ratio = variance(&out) / v_in;
            assert!((0.5..=2.0).contains(&ratio), "layer {l}: variance ratio {ratio}");
            layer_in = out;
        }
    }
}
