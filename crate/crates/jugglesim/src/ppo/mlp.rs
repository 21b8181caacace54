//! Dense multi-layer perceptron with tanh hidden activations, a linear head,
//! orthogonal initialization, and hand-derived backpropagation over batches.

use nalgebra::DMatrix;
use ndarray::{Array1, Array2, Axis};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// One dense layer; weights are `out × in`, applied as `x·Wᵀ + b`.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: Array2<f64>,
    pub b: Array1<f64>,
}

impl Dense {
    pub fn n_params(&self) -> usize {
        self.w.len() + self.b.len()
    }
}

/// MLP: tanh after every layer except the last.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Dense>,
}

/// Forward-pass cache for backprop: the input to each layer and the
/// post-activation outputs of the hidden layers.
pub struct MlpCache {
    inputs: Vec<Array2<f64>>,
    hidden_acts: Vec<Array2<f64>>,
}

/// Per-layer parameter gradients.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub layers: Vec<(Array2<f64>, Array1<f64>)>,
}

/// Orthogonal matrix of shape `rows × cols`, scaled by `gain`.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let big = rows.max(cols);
    let small = rows.min(cols);
    let m = DMatrix::from_fn(big, small, |_, _| rng.sample::<f64, _>(StandardNormal));
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    // fix signs so the decomposition (and hence the init) is unique
    for j in 0..small {
        if r[(j, j)] < 0.0 {
            for i in 0..big {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    let mut out = Array2::zeros((rows, cols));
    for i in 0..rows {
        for j in 0..cols {
            let v = if rows >= cols { q[(i, j)] } else { q[(j, i)] };
            out[(i, j)] = gain * v;
        }
    }
    out
}

impl Mlp {
    /// Build from layer sizes `[in, h1, ..., out]`. Hidden layers use the
    /// tanh orthogonal gain (5/3); the head is scaled by `head_gain`.
    pub fn new(sizes: &[usize], head_gain: f64, rng: &mut ChaCha8Rng) -> Self {
        assert!(sizes.len() >= 2);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for k in 0..sizes.len() - 1 {
            let last = k == sizes.len() - 2;
            let gain = if last { head_gain } else { 5.0 / 3.0 };
            layers.push(Dense {
                w: orthogonal(sizes[k + 1], sizes[k], gain, rng),
                b: Array1::zeros(sizes[k + 1]),
            });
        }
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(Dense::n_params).sum()
    }

    /// Batched forward pass; `x` is `batch × in`.
    pub fn forward(&self, x: &Array2<f64>) -> (Array2<f64>, MlpCache) {
        let n_layers = self.layers.len();
        let mut inputs = Vec::with_capacity(n_layers);
        let mut hidden_acts = Vec::with_capacity(n_layers.saturating_sub(1));
        let mut h = x.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            inputs.push(h.clone());
            let mut y = h.dot(&layer.w.t());
            y += &layer.b;
            if k + 1 < n_layers {
                y.mapv_inplace(f64::tanh);
                hidden_acts.push(y.clone());
            }
            h = y;
        }
        (
            h,
            MlpCache {
                inputs,
                hidden_acts,
            },
        )
    }

    /// Output without keeping a cache (evaluation path).
    pub fn infer(&self, x: &Array2<f64>) -> Array2<f64> {
        let n_layers = self.layers.len();
        let mut h = x.clone();
        for (k, layer) in self.layers.iter().enumerate() {
            let mut y = h.dot(&layer.w.t());
            y += &layer.b;
            if k + 1 < n_layers {
                y.mapv_inplace(f64::tanh);
            }
            h = y;
        }
        h
    }

    /// Backpropagate `grad_out = dL/dy` (batch × out); returns parameter
    /// gradients and `dL/dx`.
    pub fn backward(&self, cache: &MlpCache, grad_out: &Array2<f64>) -> (MlpGrads, Array2<f64>) {
        let n_layers = self.layers.len();
        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(n_layers);
        let mut delta = grad_out.clone();
        for k in (0..n_layers).rev() {
            // delta is dL/d(pre-activation of layer k) once the activation
            // derivative below has been applied on the way down
            let dw = delta.t().dot(&cache.inputs[k]);
            let db = delta.sum_axis(Axis(0));
            let dx = delta.dot(&self.layers[k].w);
            grads.push((dw, db));
            if k > 0 {
                // through the tanh of layer k-1
                let act = &cache.hidden_acts[k - 1];
                delta = dx * &act.mapv(|a| 1.0 - a * a);
            } else {
                delta = dx;
            }
        }
        grads.reverse();
        (MlpGrads { layers: grads }, delta)
    }

    pub fn zero_grads(&self) -> MlpGrads {
        MlpGrads {
            layers: self
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.w.dim()), Array1::zeros(l.b.len())))
                .collect(),
        }
    }

    /// Append all parameters (per layer: weights row-major, then bias).
    pub fn write_params(&self, out: &mut Vec<f64>) {
        for layer in &self.layers {
            out.extend(layer.w.iter());
            out.extend(layer.b.iter());
        }
    }

    /// Read parameters back in `write_params` order; returns elements consumed.
    pub fn read_params(&mut self, data: &[f64]) -> usize {
        let mut k = 0;
        for layer in &mut self.layers {
            for v in layer.w.iter_mut() {
                *v = data[k];
                k += 1;
            }
            for v in layer.b.iter_mut() {
                *v = data[k];
                k += 1;
            }
        }
        k
    }
}

impl MlpGrads {
    pub fn write(&self, out: &mut Vec<f64>) {
        for (w, b) in &self.layers {
            out.extend(w.iter());
            out.extend(b.iter());
        }
    }

    pub fn add_scaled(&mut self, other: &MlpGrads, s: f64) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(other.layers.iter()) {
            w.scaled_add(s, ow);
            b.scaled_add(s, ob);
        }
    }
}
