//! Single-layer LSTM over masked sequences, with backpropagation through
//! time.
//!
//! Gate blocks are packed along the last axis in the order input, forget,
//! candidate, output: the kernel is `[d, 4h]`, the recurrent matrix
//! `[h, 4h]` and the bias `[4h]`. At a masked-out step the previous
//! `(h, c)` pair is carried forward unchanged and the step contributes
//! nothing to any gradient, so padding never affects results.

use rand::Rng;

use super::ops::{matmul, sigmoid};
use super::{init, Mask, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Gate {
    Input = 0,
    Forget = 1,
    Candidate = 2,
    Output = 3,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LstmCellParams {
    pub input_dim: usize,
    pub hidden_dim: usize,
    /// `[d, 4h]`
    pub kernel: Tensor,
    /// `[h, 4h]`
    pub recurrent: Tensor,
    /// `[4h]`
    pub bias: Tensor,
}

/// Initial forget-gate bias.
pub const FORGET_BIAS_INIT: f64 = 1.0;

impl LstmCellParams {
    pub fn zeros(input_dim: usize, hidden_dim: usize) -> Self {
        LstmCellParams {
            input_dim,
            hidden_dim,
            kernel: Tensor::zeros(vec![input_dim, 4 * hidden_dim]),
            recurrent: Tensor::zeros(vec![hidden_dim, 4 * hidden_dim]),
            bias: Tensor::zeros(vec![4 * hidden_dim]),
        }
    }

    /// Glorot-uniform kernels, forget bias one, other biases zero.
    pub fn init<R: Rng>(input_dim: usize, hidden_dim: usize, rng: &mut R) -> Self {
        let h = hidden_dim;
        let mut bias = vec![0.0; 4 * h];
        bias[h..2 * h].fill(FORGET_BIAS_INIT);
        LstmCellParams {
            input_dim,
            hidden_dim,
            kernel: init::glorot_uniform(input_dim, 4 * h, rng),
            recurrent: init::glorot_uniform(h, 4 * h, rng),
            bias: Tensor::new(vec![4 * h], bias).expect("bias length"),
        }
    }

    pub fn num_parameters(&self) -> usize {
        self.kernel.len() + self.recurrent.len() + self.bias.len()
    }

    /// Copy of one gate's `[d, h]` input weights.
    pub fn gate_kernel(&self, gate: Gate) -> Vec<f64> {
        let h = self.hidden_dim;
        let off = gate as usize * h;
        self.kernel
            .data()
            .chunks(4 * h)
            .flat_map(|row| row[off..off + h].iter().copied())
            .collect()
    }

    pub fn gate_bias(&self, gate: Gate) -> &[f64] {
        let h = self.hidden_dim;
        &self.bias.data()[gate as usize * h..(gate as usize + 1) * h]
    }
}

pub(crate) fn check(
    x: &Tensor,
    mask: &Mask,
    kernel: &Tensor,
    recurrent: &Tensor,
    bias: &Tensor,
) -> Result<(usize, usize, usize, usize)> {
    let (b, l, d) = x.dims3("lstm")?;
    mask.check_shape("lstm", b, l)?;
    let (kd, four_h) = kernel.dims2("lstm")?;
    if kd != d || four_h % 4 != 0 || four_h == 0 {
        return Err(Error::shape(
            "lstm",
            format!("kernel {:?} for input width {d}", kernel.shape()),
        ));
    }
    let h = four_h / 4;
    if recurrent.shape() != [h, 4 * h] || bias.shape() != [4 * h] {
        return Err(Error::shape(
            "lstm",
            format!(
                "recurrent {:?} / bias {:?} for hidden {h}",
                recurrent.shape(),
                bias.shape()
            ),
        ));
    }
    Ok((b, l, d, h))
}

/// Quantities kept from the forward pass for BPTT.
#[derive(Clone, Debug)]
pub(crate) struct LstmCache {
    /// Activated gates `[B, L, 4h]`.
    gates: Vec<f64>,
    /// Cell state `[B, L, h]`.
    cells: Vec<f64>,
    /// `tanh(c_t)` `[B, L, h]`.
    tanh_cells: Vec<f64>,
    dims: (usize, usize, usize, usize),
}

/// Returns the hidden sequence `[B, L, h]` and the cache.
pub(crate) fn forward_cached(
    x: &Tensor,
    mask: &Mask,
    kernel: &Tensor,
    recurrent: &Tensor,
    bias: &Tensor,
) -> Result<(Tensor, LstmCache)> {
    let (b, l, d, h) = check(x, mask, kernel, recurrent, bias)?;
    let g4 = 4 * h;
    // Input projections for every position at once; becomes the gate buffer.
    let mut gates = matmul(x.data(), kernel.data(), b * l, d, g4);
    let mut hidden = vec![0.0; b * l * h];
    let mut cells = vec![0.0; b * l * h];
    let mut tanh_cells = vec![0.0; b * l * h];
    let zeros = vec![0.0; h];
    let u = recurrent.data();

    for r in 0..b {
        for t in 0..l {
            let cur = (r * l + t) * h;
            if !mask.is_set(r, t) {
                if t > 0 {
                    let prev = cur - h;
                    hidden.copy_within(prev..prev + h, cur);
                    cells.copy_within(prev..prev + h, cur);
                    tanh_cells.copy_within(prev..prev + h, cur);
                }
                gates[(r * l + t) * g4..(r * l + t + 1) * g4].fill(0.0);
                continue;
            }
            let (h_prev, c_prev): (Vec<f64>, Vec<f64>) = if t == 0 {
                (zeros.clone(), zeros.clone())
            } else {
                (hidden[cur - h..cur].to_vec(), cells[cur - h..cur].to_vec())
            };
            let z = &mut gates[(r * l + t) * g4..(r * l + t + 1) * g4];
            for (zj, bj) in z.iter_mut().zip(bias.data()) {
                *zj += bj;
            }
            for (k, &hk) in h_prev.iter().enumerate() {
                if hk == 0.0 {
                    continue;
                }
                for (zj, &ukj) in z.iter_mut().zip(&u[k * g4..(k + 1) * g4]) {
                    *zj += hk * ukj;
                }
            }
            for j in 0..h {
                z[j] = sigmoid(z[j]);
                z[h + j] = sigmoid(z[h + j]);
                z[2 * h + j] = z[2 * h + j].tanh();
                z[3 * h + j] = sigmoid(z[3 * h + j]);
                let c = z[h + j] * c_prev[j] + z[j] * z[2 * h + j];
                let tc = c.tanh();
                cells[cur + j] = c;
                tanh_cells[cur + j] = tc;
                hidden[cur + j] = z[3 * h + j] * tc;
            }
        }
    }
    Ok((
        Tensor::new(vec![b, l, h], hidden)?,
        LstmCache {
            gates,
            cells,
            tanh_cells,
            dims: (b, l, d, h),
        },
    ))
}

pub(crate) struct LstmGrads {
    pub dx: Vec<f64>,
    pub dkernel: Vec<f64>,
    pub drecurrent: Vec<f64>,
    pub dbias: Vec<f64>,
}

pub(crate) fn backward(
    upstream: &[f64],
    x: &Tensor,
    mask: &Mask,
    kernel: &Tensor,
    recurrent: &Tensor,
    hidden: &Tensor,
    cache: &LstmCache,
) -> LstmGrads {
    let (b, l, d, h) = cache.dims;
    let g4 = 4 * h;
    let (w, u) = (kernel.data(), recurrent.data());
    let hs = hidden.data();
    let xs = x.data();
    let mut dx = vec![0.0; b * l * d];
    let mut dkernel = vec![0.0; d * g4];
    let mut drecurrent = vec![0.0; h * g4];
    let mut dbias = vec![0.0; g4];
    let mut dz = vec![0.0; g4];

    for r in 0..b {
        let mut dh_next = vec![0.0; h];
        let mut dc_next = vec![0.0; h];
        for t in (0..l).rev() {
            let cur = (r * l + t) * h;
            for j in 0..h {
                dh_next[j] += upstream[cur + j];
            }
            if !mask.is_set(r, t) {
                continue;
            }
            let gz = &cache.gates[(r * l + t) * g4..(r * l + t + 1) * g4];
            for j in 0..h {
                let (i, f, g, o) = (gz[j], gz[h + j], gz[2 * h + j], gz[3 * h + j]);
                let tc = cache.tanh_cells[cur + j];
                let c_prev = if t == 0 {
                    0.0
                } else {
                    cache.cells[cur - h + j]
                };
                let dh = dh_next[j];
                let d_o = dh * tc;
                let dc = dc_next[j] + dh * o * (1.0 - tc * tc);
                dz[j] = dc * g * i * (1.0 - i);
                dz[h + j] = dc * c_prev * f * (1.0 - f);
                dz[2 * h + j] = dc * i * (1.0 - g * g);
                dz[3 * h + j] = d_o * o * (1.0 - o);
                dc_next[j] = dc * f;
            }
            for (acc, v) in dbias.iter_mut().zip(&dz) {
                *acc += v;
            }
            let xrow = &xs[(r * l + t) * d..(r * l + t + 1) * d];
            for (p, &xp) in xrow.iter().enumerate() {
                for (acc, v) in dkernel[p * g4..(p + 1) * g4].iter_mut().zip(&dz) {
                    *acc += xp * v;
                }
            }
            let dxrow = &mut dx[(r * l + t) * d..(r * l + t + 1) * d];
            for (p, o) in dxrow.iter_mut().enumerate() {
                *o = w[p * g4..(p + 1) * g4]
                    .iter()
                    .zip(&dz)
                    .map(|(a, b)| a * b)
                    .sum();
            }
            if t > 0 {
                let h_prev = &hs[cur - h..cur];
                for (k, &hk) in h_prev.iter().enumerate() {
                    for (acc, v) in drecurrent[k * g4..(k + 1) * g4].iter_mut().zip(&dz) {
                        *acc += hk * v;
                    }
                }
            }
            for (k, o) in dh_next.iter_mut().enumerate() {
                *o = u[k * g4..(k + 1) * g4]
                    .iter()
                    .zip(&dz)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        }
    }
    LstmGrads {
        dx,
        dkernel,
        drecurrent,
        dbias,
    }
}

/// Inference-only forward pass returning the hidden sequence `[B, L, h]`.
pub fn lstm_forward(x: &Tensor, mask: &Mask, params: &LstmCellParams) -> Result<Tensor> {
    forward_cached(x, mask, &params.kernel, &params.recurrent, &params.bias).map(|(y, _)| y)
}
