//! Small dense feed-forward network with a scalar output, trained by
//! minibatch Adam.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::loss::Loss;
use super::{Activation, LearnError, Matrix};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub n_in: usize,
    pub n_out: usize,
    /// Row-major `n_out x n_in`.
    pub w: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub activation: Activation,
    /// Hidden layers followed by the `1`-unit linear output layer.
    pub layers: Vec<Layer>,
}

fn activate(act: Activation, z: f64) -> f64 {
    match act {
        Activation::Relu => z.max(0.0),
        Activation::Sigmoid => super::loss::sigmoid(z),
        Activation::Tanh => z.tanh(),
    }
}

/// Derivative expressed through the pre-activation `z` and output `h`.
fn activate_grad(act: Activation, z: f64, h: f64) -> f64 {
    match act {
        Activation::Relu => {
            if z > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Sigmoid => h * (1.0 - h),
        Activation::Tanh => 1.0 - h * h,
    }
}

/// Forward/backward scratch space for one sample.
struct Workspace {
    pre: Vec<Vec<f64>>,
    post: Vec<Vec<f64>>,
    delta: Vec<Vec<f64>>,
    offsets: Vec<usize>,
}

impl Mlp {
    /// Uniform fan-in initialization `U(-1/sqrt(n_in), 1/sqrt(n_in))`.
    pub fn new(input_dim: usize, hidden: &[usize], activation: Activation, seed: u64) -> Mlp {
        let mut rng = rng::stream(seed, "mlp-init");
        let mut layers = Vec::with_capacity(hidden.len() + 1);
        let mut n_in = input_dim;
        for &n_out in hidden.iter().chain(std::iter::once(&1)) {
            let bound = 1.0 / (n_in.max(1) as f64).sqrt();
            let w = (0..n_in * n_out)
                .map(|_| rng.random_range(-bound..bound))
                .collect();
            layers.push(Layer {
                n_in,
                n_out,
                w,
                b: vec![0.0; n_out],
            });
            n_in = n_out;
        }
        Mlp { activation, layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].n_in
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.w.len() + l.b.len()).sum()
    }

    /// All weights and biases, layer by layer (`w` then `b`).
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for l in &self.layers {
            out.extend_from_slice(&l.w);
            out.extend_from_slice(&l.b);
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.n_params());
        let mut k = 0;
        for l in &mut self.layers {
            let nw = l.w.len();
            l.w.copy_from_slice(&params[k..k + nw]);
            k += nw;
            let nb = l.b.len();
            l.b.copy_from_slice(&params[k..k + nb]);
            k += nb;
        }
    }

    fn workspace(&self) -> Workspace {
        Workspace {
            pre: self.layers.iter().map(|l| vec![0.0; l.n_out]).collect(),
            post: self.layers.iter().map(|l| vec![0.0; l.n_out]).collect(),
            delta: self.layers.iter().map(|l| vec![0.0; l.n_out]).collect(),
            offsets: self
                .layers
                .iter()
                .scan(0, |k, l| {
                    let off = *k;
                    *k += l.w.len() + l.b.len();
                    Some(off)
                })
                .collect(),
        }
    }

    fn forward_ws(&self, x: &[f64], ws: &mut Workspace) -> f64 {
        let last = self.layers.len() - 1;
        for (li, layer) in self.layers.iter().enumerate() {
            let (before, rest) = ws.post.split_at_mut(li);
            let input: &[f64] = if li == 0 { x } else { &before[li - 1] };
            let out = &mut rest[0];
            let pre = &mut ws.pre[li];
            for o in 0..layer.n_out {
                let row = &layer.w[o * layer.n_in..(o + 1) * layer.n_in];
                let z = layer.b[o] + row.iter().zip(input).map(|(w, v)| w * v).sum::<f64>();
                pre[o] = z;
                out[o] = if li == last { z } else { activate(self.activation, z) };
            }
        }
        ws.post[last][0]
    }

    pub fn forward(&self, x: &[f64]) -> f64 {
        let mut ws = self.workspace();
        self.forward_ws(x, &mut ws)
    }

    /// Accumulates `scale * dL/dparams` for one sample whose forward pass is
    /// in `ws`, given `d_out = dL/df`.
    fn backward_ws(&self, x: &[f64], d_out: f64, scale: f64, ws: &mut Workspace, grad: &mut [f64]) {
        let last = self.layers.len() - 1;
        ws.delta[last][0] = d_out * scale;
        for li in (0..=last).rev() {
            let layer = &self.layers[li];
            let input: &[f64] = if li == 0 { x } else { &ws.post[li - 1] };
            let off = ws.offsets[li];
            let (gw, gb) = grad[off..off + layer.w.len() + layer.b.len()].split_at_mut(layer.w.len());
            for o in 0..layer.n_out {
                let d = ws.delta[li][o];
                if d == 0.0 {
                    continue;
                }
                gb[o] += d;
                let row = &mut gw[o * layer.n_in..(o + 1) * layer.n_in];
                for (g, v) in row.iter_mut().zip(input) {
                    *g += d * v;
                }
            }
            if li > 0 {
                let (lower, upper) = ws.delta.split_at_mut(li);
                let prev = &mut lower[li - 1];
                let cur = &upper[0];
                for (j, p) in prev.iter_mut().enumerate() {
                    let mut acc = 0.0;
                    for o in 0..layer.n_out {
                        acc += cur[o] * layer.w[o * layer.n_in + j];
                    }
                    *p = acc * activate_grad(self.activation, ws.pre[li - 1][j], ws.post[li - 1][j]);
                }
            }
        }
    }

    /// Weighted mean loss and its exact gradient over all rows.
    pub fn loss_and_grad(
        &self,
        x: &Matrix,
        targets: &[f64],
        weights: Option<&[f64]>,
        loss: Loss,
    ) -> (f64, Vec<f64>) {
        let mut ws = self.workspace();
        let mut grad = vec![0.0; self.n_params()];
        let n = x.rows() as f64;
        let mut total = 0.0;
        for i in 0..x.rows() {
            let w = weights.map_or(1.0, |w| w[i]);
            let f = self.forward_ws(x.row(i), &mut ws);
            total += w * loss.value(f, targets[i]);
            self.backward_ws(x.row(i), loss.derivative(f, targets[i]), w / n, &mut ws, &mut grad);
        }
        (total / n, grad)
    }
}

pub(crate) struct TrainOptions {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub ridge: f64,
    pub seed: u64,
}

/// Minibatch Adam with a linearly decaying step size and patience-based
/// early stopping on the epoch loss. Returns the per-epoch loss trace.
pub(crate) fn train(
    net: &mut Mlp,
    x: &Matrix,
    targets: &[f64],
    weights: Option<&[f64]>,
    loss: Loss,
    opts: &TrainOptions,
) -> Result<Vec<f64>, LearnError> {
    const BETA1: f64 = 0.9;
    const BETA2: f64 = 0.999;
    const EPS: f64 = 1e-8;
    let patience = (opts.epochs / 5).max(10);

    let n = x.rows();
    let np = net.n_params();
    let mut params = net.params();
    let mut m = vec![0.0; np];
    let mut v = vec![0.0; np];
    let mut grad = vec![0.0; np];
    let mut ws = net.workspace();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = rng::stream(opts.seed, "mlp-train");
    let batch = opts.batch_size.clamp(1, n);
    let mut t = 0i32;
    let mut trace = Vec::with_capacity(opts.epochs);
    let mut best = f64::INFINITY;
    let mut since_best = 0;

    for epoch in 0..opts.epochs {
        order.shuffle(&mut rng);
        let lr = opts.learning_rate * (1.0 - 0.9 * epoch as f64 / opts.epochs as f64);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let scale = 1.0 / chunk.len() as f64;
            for &i in chunk {
                let w = weights.map_or(1.0, |w| w[i]);
                if w == 0.0 {
                    continue;
                }
                let f = net.forward_ws(x.row(i), &mut ws);
                epoch_loss += w * loss.value(f, targets[i]);
                net.backward_ws(x.row(i), loss.derivative(f, targets[i]), w * scale, &mut ws, &mut grad);
            }
            t += 1;
            let bc1 = 1.0 - BETA1.powi(t);
            let bc2 = 1.0 - BETA2.powi(t);
            for k in 0..np {
                let g = grad[k] + 2.0 * opts.ridge * params[k];
                m[k] = BETA1 * m[k] + (1.0 - BETA1) * g;
                v[k] = BETA2 * v[k] + (1.0 - BETA2) * g * g;
                params[k] -= lr * (m[k] / bc1) / ((v[k] / bc2).sqrt() + EPS);
            }
            net.set_params(&params);
        }
        epoch_loss /= n as f64;
        trace.push(epoch_loss);
        if !epoch_loss.is_finite() || params.iter().any(|p| !p.is_finite()) {
            return Err(LearnError::NonConvergence { trace });
        }
        if epoch_loss < best * (1.0 - 1e-6) {
            best = epoch_loss;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= patience {
                break;
            }
        }
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn random_instance(seed: u64, n: usize, p: usize, classify: bool) -> (Matrix, Vec<f64>, Vec<f64>) {
        let mut rng = rng::stream(seed, "gradcheck");
        let x = Matrix::new(n, p, (0..n * p).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let y = (0..n)
            .map(|_| {
                if classify {
                    if rng.random_bool(0.5) { 1.0 } else { -1.0 }
                } else {
                    rng.random_range(-2.0..2.0)
                }
            })
            .collect();
        let w = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
        (x, y, w)
    }

    fn check(net: &Mlp, x: &Matrix, y: &[f64], w: &[f64], loss: Loss) {
        let (_, g) = net.loss_and_grad(x, y, Some(w), loss);
        let p0 = net.params();
        let h = 1e-6;
        for k in 0..p0.len() {
            let mut probe = net.clone();
            let mut p = p0.clone();
            p[k] += h;
            probe.set_params(&p);
            let (lp, _) = probe.loss_and_grad(x, y, Some(w), loss);
            p[k] -= 2.0 * h;
            probe.set_params(&p);
            let (lm, _) = probe.loss_and_grad(x, y, Some(w), loss);
            let fd = (lp - lm) / (2.0 * h);
            let rel = (fd - g[k]).abs() / fd.abs().max(g[k].abs()).max(1e-8);
            assert!(rel < 1e-4 || (fd - g[k]).abs() < 1e-9, "param {k}: fd {fd} vs {}", g[k]);
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for seed in 0..5 {
            for hidden in [vec![], vec![4], vec![3, 2]] {
                for act in [Activation::Tanh, Activation::Sigmoid] {
                    let (x, y, w) = random_instance(seed, 7, 3, false);
                    let net = Mlp::new(3, &hidden, act, seed);
                    check(&net, &x, &y, &w, Loss::Squared);
                    let (x, y, w) = random_instance(seed + 100, 7, 3, true);
                    check(&net, &x, &y, &w, Loss::Logistic);
                }
            }
        }
    }

    #[test]
    fn params_roundtrip() {
        let mut net = Mlp::new(2, &[3], Activation::Relu, 1);
        let p: Vec<f64> = (0..net.n_params()).map(|k| k as f64).collect();
        net.set_params(&p);
        assert_eq!(net.params(), p);
        assert_eq!(net.n_params(), 2 * 3 + 3 + 3 + 1);
    }
}
