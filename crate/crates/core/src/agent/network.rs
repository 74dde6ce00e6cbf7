//! Fully connected networks with tanh hidden layers, a linear output layer
//! and hand-written backpropagation over a flat parameter vector.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths, input first.
    pub sizes: Vec<usize>,
    /// Per layer: weights `[out, in]` row-major, then biases `[out]`.
    pub params: Vec<f64>,
}

/// Activations of one batched forward pass.
#[derive(Debug, Clone)]
pub struct Forward {
    /// `acts[0]` is the input, the last entry the (linear) output.
    acts: Vec<Array2<f64>>,
}

impl Forward {
    pub fn output(&self) -> &Array2<f64> {
        self.acts.last().expect("at least the input")
    }
}

fn layer_len(fan_in: usize, fan_out: usize) -> usize {
    fan_in * fan_out + fan_out
}

impl Mlp {
    /// LeCun-normal weights, zero biases; the output layer is scaled by
    /// `output_gain`.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Self {
        assert!(sizes.len() >= 2, "a network needs an input and an output width");
        let mut params = Vec::with_capacity(sizes.windows(2).map(|w| layer_len(w[0], w[1])).sum());
        let layers = sizes.len() - 1;
        for (i, w) in sizes.windows(2).enumerate() {
            let gain = if i + 1 == layers { output_gain } else { 1.0 };
            let std = gain / (w[0] as f64).sqrt();
            params.extend((0..w[0] * w[1]).map(|_| { let z: f64 = StandardNormal.sample(rng); std * z }));
            params.extend(std::iter::repeat_n(0.0, w[1]));
        }
        Self {
            sizes: sizes.to_vec(),
            params,
        }
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("non-empty")
    }

    fn offsets(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.sizes.windows(2).scan(0, |off, w| {
            let start = *off;
            *off += layer_len(w[0], w[1]);
            Some((start, w[0], w[1]))
        })
    }

    fn layer(&self, start: usize, fan_in: usize, fan_out: usize) -> (ArrayView2<'_, f64>, ArrayView1<'_, f64>) {
        let w = ArrayView2::from_shape((fan_out, fan_in), &self.params[start..start + fan_in * fan_out])
            .expect("layout matches sizes");
        let b = ArrayView1::from(&self.params[start + fan_in * fan_out..start + layer_len(fan_in, fan_out)]);
        (w, b)
    }

    pub fn forward(&self, input: ArrayView2<'_, f64>) -> Forward {
        let layers = self.sizes.len() - 1;
        let mut acts = vec![input.to_owned()];
        for (i, (start, fan_in, fan_out)) in self.offsets().enumerate() {
            let (w, b) = self.layer(start, fan_in, fan_out);
            let mut z = acts[i].dot(&w.t()) + b;
            if i + 1 < layers {
                z.mapv_inplace(f64::tanh);
            }
            acts.push(z);
        }
        Forward { acts }
    }

    pub fn predict(&self, input: &[f64]) -> Vec<f64> {
        let x = ArrayView2::from_shape((1, input.len()), input).expect("row vector");
        self.forward(x).output().row(0).to_vec()
    }

    /// Gradient of a scalar loss with respect to all parameters, given the
    /// loss gradient with respect to the batched output.
    pub fn backward(&self, fwd: &Forward, grad_output: Array2<f64>) -> Vec<f64> {
        let mut grad = vec![0.0; self.params.len()];
        let layers: Vec<(usize, usize, usize)> = self.offsets().collect();
        let mut delta = grad_output;
        for (i, &(start, fan_in, fan_out)) in layers.iter().enumerate().rev() {
            let prev = &fwd.acts[i];
            let gw = delta.t().dot(prev);
            let gb: Array1<f64> = delta.sum_axis(Axis(0));
            grad[start..start + fan_in * fan_out].copy_from_slice(gw.as_slice().expect("standard layout"));
            grad[start + fan_in * fan_out..start + layer_len(fan_in, fan_out)]
                .copy_from_slice(gb.as_slice().expect("contiguous"));
            if i > 0 {
                let (w, _) = self.layer(start, fan_in, fan_out);
                let mut back = delta.dot(&w);
                // hidden activations are tanh: d tanh = 1 − tanh²
                back.zip_mut_with(prev, |d, &a| *d *= 1.0 - a * a);
                delta = back;
            }
        }
        grad
    }
}

/// Adam with bias correction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; len],
            v: vec![0.0; len],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        assert_eq!(params.len(), grad.len());
        assert_eq!(params.len(), self.m.len());
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// Rows `idx` of `x` as a new matrix.
pub(crate) fn gather_rows(x: &Array2<f64>, idx: &[usize]) -> Array2<f64> {
    let mut out = Array2::zeros((idx.len(), x.ncols()));
    for (r, &i) in idx.iter().enumerate() {
        out.slice_mut(s![r, ..]).assign(&x.row(i));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn parameter_count() {
        let net = Mlp::new(&[4, 6, 6, 2], 1.0, &mut ChaCha8Rng::seed_from_u64(0));
        assert_eq!(net.num_params(), 4 * 6 + 6 + 6 * 6 + 6 + 6 * 2 + 2);
    }

    #[test]
    fn hand_computed_forward() {
        let net = Mlp {
            sizes: vec![2, 2, 1],
            // W1 = [[1, 0], [0, -1]], b1 = [0, 0.5], W2 = [[2, 1]], b2 = [0.1]
            params: vec![1.0, 0.0, 0.0, -1.0, 0.0, 0.5, 2.0, 1.0, 0.1],
        };
        let y = net.predict(&[0.3, 0.2]);
        let want = 2.0 * 0.3f64.tanh() + (0.5f64 - 0.2).tanh() + 0.1;
        assert!((y[0] - want).abs() < 1e-15);
    }

    #[test]
    fn backward_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut net = Mlp::new(&[3, 5, 4, 2], 1.0, &mut rng);
        let x = array![[0.1, -0.4, 0.7], [0.5, 0.2, -0.3], [-0.9, 0.0, 0.4]];
        let target = array![[0.3, -0.2], [0.0, 0.5], [1.0, -1.0]];
        let loss = |n: &Mlp| {
            let out = n.forward(x.view()).output().clone();
            0.5 * (&out - &target).mapv(|v| v * v).sum()
        };
        let fwd = net.forward(x.view());
        let grad = net.backward(&fwd, fwd.output() - &target);
        let h = 1e-6;
        for i in 0..net.num_params() {
            let orig = net.params[i];
            net.params[i] = orig + h;
            let up = loss(&net);
            net.params[i] = orig - h;
            let down = loss(&net);
            net.params[i] = orig;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - grad[i]).abs() <= 1e-7 * (1.0 + fd.abs()), "param {i}: {fd} vs {}", grad[i]);
        }
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let mut p = vec![1.0, -2.0];
        let mut opt = Adam::new(2, 0.01);
        opt.step(&mut p, &[0.5, -3.0]);
        assert!((p[0] - 0.99).abs() < 1e-9);
        assert!((p[1] + 1.99).abs() < 1e-9);
    }

    #[test]
    fn adam_minimizes_quadratic() {
        let mut p = vec![3.0];
        let mut opt = Adam::new(1, 0.1);
        for _ in 0..2000 {
            let g = vec![2.0 * (p[0] - 1.0)];
            opt.step(&mut p, &g);
        }
        assert!((p[0] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn gather() {
        let x = array![[1.0, 2.0], [3.0, 4.0], [5.0, 6.0]];
        assert_eq!(gather_rows(&x, &[2, 0]), array![[5.0, 6.0], [1.0, 2.0]]);
    }
}
