use rand::Rng;

use super::gemm::{gemm, Operand};
use crate::domain::seeded_rng;
use crate::error::{Error, Result};

/// Shape of a feedforward rectifier network.
///
/// Hidden layers after the first are residual: `h ← h + relu(W h + b)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpArch {
    pub input_dim: usize,
    pub hidden_units: usize,
    pub hidden_layers: usize,
    pub output_dim: usize,
    /// Sigmoid on the output.
    pub squash: bool,
}

impl MlpArch {
    pub fn new(input_dim: usize, output_dim: usize) -> Self {
        MlpArch {
            input_dim,
            hidden_units: 50,
            hidden_layers: 3,
            output_dim,
            squash: false,
        }
    }

    pub fn with_squash(mut self, squash: bool) -> Self {
        self.squash = squash;
        self
    }

    /// `(fan_in, fan_out)` per affine layer.
    pub fn layer_dims(&self) -> Vec<(usize, usize)> {
        if self.hidden_layers == 0 {
            return vec![(self.input_dim, self.output_dim)];
        }
        let mut dims = vec![(self.input_dim, self.hidden_units)];
        dims.extend(std::iter::repeat_n((self.hidden_units, self.hidden_units), self.hidden_layers - 1));
        dims.push((self.hidden_units, self.output_dim));
        dims
    }

    pub fn param_count(&self) -> usize {
        self.layer_dims().iter().map(|(i, o)| i * o + o).sum()
    }

    fn is_residual(&self, layer: usize) -> bool {
        layer >= 1 && layer < self.hidden_layers
    }

    fn is_output(&self, layer: usize) -> bool {
        layer == self.hidden_layers
    }
}

/// Flat-parameter MLP. Layer `l` stores `W_l` (fan_out × fan_in, row-major)
/// followed by `b_l`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    arch: MlpArch,
    params: Vec<f64>,
}

/// Intermediate values of a batched forward pass, kept for backprop.
#[derive(Debug, Clone)]
pub struct Activations {
    pub batch: usize,
    layer_inputs: Vec<Vec<f64>>,
    pre: Vec<Vec<f64>>,
    /// `batch × output_dim`, after the optional sigmoid.
    pub output: Vec<f64>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl Mlp {
    pub fn zeros(arch: MlpArch) -> Self {
        Mlp {
            arch,
            params: vec![0.0; arch.param_count()],
        }
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init(arch: MlpArch, seed: u64) -> Self {
        let mut rng = seeded_rng(seed);
        let mut params = Vec::with_capacity(arch.param_count());
        for (fan_in, fan_out) in arch.layer_dims() {
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            params.extend((0..fan_in * fan_out).map(|_| rng.random_range(-limit..=limit)));
            params.extend(std::iter::repeat_n(0.0, fan_out));
        }
        Mlp { arch, params }
    }

    pub fn from_params(arch: MlpArch, params: Vec<f64>) -> Result<Self> {
        if params.len() != arch.param_count() {
            return Err(Error::Dimension {
                what: "MLP parameters",
                found: params.len(),
                expected: arch.param_count(),
            });
        }
        Ok(Mlp { arch, params })
    }

    pub fn arch(&self) -> &MlpArch {
        &self.arch
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// `(weights, biases)` of every layer.
    fn layers<'a>(&self, params: &'a [f64]) -> Vec<(&'a [f64], &'a [f64])> {
        let mut out = Vec::new();
        let mut off = 0;
        for (i, o) in self.arch.layer_dims() {
            let w = &params[off..off + i * o];
            let b = &params[off + i * o..off + i * o + o];
            out.push((w, b));
            off += i * o + o;
        }
        out
    }

    /// Forward pass over `batch` row-major input rows.
    pub fn forward_batch(&self, inputs: &[f64], batch: usize) -> Result<Activations> {
        if inputs.len() != batch * self.arch.input_dim {
            return Err(Error::Dimension {
                what: "MLP input",
                found: inputs.len(),
                expected: batch * self.arch.input_dim,
            });
        }
        let dims = self.arch.layer_dims();
        let layers = self.layers(&self.params);
        let mut layer_inputs = Vec::with_capacity(dims.len());
        let mut pre = Vec::with_capacity(dims.len());
        let mut current = inputs.to_vec();
        for (l, (&(fan_in, fan_out), (w, b))) in dims.iter().zip(&layers).enumerate() {
            let mut z = Vec::with_capacity(batch * fan_out);
            for _ in 0..batch {
                z.extend_from_slice(b);
            }
            gemm(
                batch,
                fan_in,
                fan_out,
                Operand::rows(&current, fan_in),
                Operand::transposed(w, fan_in),
                1.0,
                &mut z,
            );
            let next: Vec<f64> = if self.arch.is_output(l) {
                if self.arch.squash {
                    z.iter().map(|&v| sigmoid(v)).collect()
                } else {
                    z.clone()
                }
            } else if self.arch.is_residual(l) {
                current.iter().zip(&z).map(|(&h, &v)| h + v.max(0.0)).collect()
            } else {
                z.iter().map(|&v| v.max(0.0)).collect()
            };
            layer_inputs.push(std::mem::replace(&mut current, next));
            pre.push(z);
        }
        Ok(Activations {
            batch,
            layer_inputs,
            pre,
            output: current,
        })
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_batch(input, 1)?.output)
    }

    /// Reverse-mode gradient of a scalar loss given `d_output = dL/d(output)`.
    pub fn backward(&self, acts: &Activations, d_output: &[f64]) -> Vec<f64> {
        let batch = acts.batch;
        let dims = self.arch.layer_dims();
        let layers = self.layers(&self.params);
        let mut grad = vec![0.0; self.params.len()];
        let mut offsets = Vec::with_capacity(dims.len());
        let mut off = 0;
        for &(i, o) in &dims {
            offsets.push(off);
            off += i * o + o;
        }

        let mut g_out = d_output.to_vec();
        for l in (0..dims.len()).rev() {
            let (fan_in, fan_out) = dims[l];
            let z = &acts.pre[l];
            let dz: Vec<f64> = if self.arch.is_output(l) {
                if self.arch.squash {
                    g_out
                        .iter()
                        .zip(z)
                        .map(|(&g, &v)| {
                            let s = sigmoid(v);
                            g * s * (1.0 - s)
                        })
                        .collect()
                } else {
                    g_out.clone()
                }
            } else {
                g_out.iter().zip(z).map(|(&g, &v)| if v > 0.0 { g } else { 0.0 }).collect()
            };
            let a = &acts.layer_inputs[l];
            let (gw, gb) = grad[offsets[l]..offsets[l] + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
            gemm(fan_out, batch, fan_in, Operand::transposed(&dz, fan_out), Operand::rows(a, fan_in), 0.0, gw);
            for row in dz.chunks_exact(fan_out) {
                for (g, &d) in gb.iter_mut().zip(row) {
                    *g += d;
                }
            }
            if l == 0 {
                break;
            }
            let (w, _) = layers[l];
            let mut g_in = if self.arch.is_residual(l) { g_out } else { vec![0.0; batch * fan_in] };
            gemm(batch, fan_out, fan_in, Operand::rows(&dz, fan_out), Operand::rows(w, fan_in), 1.0, &mut g_in);
            g_out = g_in;
        }
        grad
    }
}
