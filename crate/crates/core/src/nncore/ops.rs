//! Forward and backward kernels on flat row-major buffers. The graph
//! records which kernel produced a node; these functions do the math.
//! Loops run in fixed index order so results are bit-reproducible.

use std::fmt;
use std::str::FromStr;

use rand::Rng;

use super::{Mask, Tensor};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};

/// Probabilities are clipped to `[PROB_CLIP, 1 - PROB_CLIP]` before the log.
pub const PROB_CLIP: f64 = 1e-7;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
    Sigmoid,
    None,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => x.max(0.0),
            Activation::Tanh => x.tanh(),
            Activation::Sigmoid => sigmoid(x),
            Activation::None => x,
        }
    }

    /// Derivative expressed through the activation's output.
    pub fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Sigmoid => y * (1.0 - y),
            Activation::None => 1.0,
        }
    }
}

impl fmt::Display for Activation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Sigmoid => "sigmoid",
            Activation::None => "none",
        })
    }
}

impl FromStr for Activation {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "relu" => Ok(Activation::Relu),
            "tanh" => Ok(Activation::Tanh),
            "sigmoid" => Ok(Activation::Sigmoid),
            "none" => Ok(Activation::None),
            other => Err(Error::InvalidArgument(format!(
                "unknown activation `{other}`"
            ))),
        }
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `a[m,k] · b[k,n]`.
pub fn matmul(a: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let row = &mut out[i * n..(i + 1) * n];
        for (p, &aip) in a[i * k..(i + 1) * k].iter().enumerate() {
            if aip == 0.0 {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in row.iter_mut().zip(brow) {
                *o += aip * bv;
            }
        }
    }
    out
}

/// `acc[k,n] += a[m,k]ᵀ · g[m,n]`.
pub fn matmul_at_b_acc(acc: &mut [f64], a: &[f64], g: &[f64], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for (p, &aip) in a[i * k..(i + 1) * k].iter().enumerate() {
            let arow = &mut acc[p * n..(p + 1) * n];
            for (o, &gv) in arow.iter_mut().zip(grow) {
                *o += aip * gv;
            }
        }
    }
}

/// `g[m,n] · b[k,n]ᵀ`, result `[m,k]`.
pub fn matmul_a_bt(g: &[f64], b: &[f64], m: usize, k: usize, n: usize) -> Vec<f64> {
    let mut out = vec![0.0; m * k];
    for i in 0..m {
        let grow = &g[i * n..(i + 1) * n];
        for p in 0..k {
            let brow = &b[p * n..(p + 1) * n];
            out[i * k + p] = grow.iter().zip(brow).map(|(x, y)| x * y).sum();
        }
    }
    out
}

pub(crate) fn check_linear(x: &Tensor, w: &Tensor, b: &Tensor) -> Result<(usize, usize, usize)> {
    let (batch, n) = x.dims2("dense")?;
    let (wn, m) = w.dims2("dense")?;
    if wn != n {
        return Err(Error::shape(
            "dense",
            format!("input width {n}, weight rows {wn}"),
        ));
    }
    if b.shape() != [m] {
        return Err(Error::shape(
            "dense",
            format!("bias shape {:?}, expected [{m}]", b.shape()),
        ));
    }
    Ok((batch, n, m))
}

/// `act(x·W + b)` without recording anything.
pub fn dense_forward(x: &Tensor, w: &Tensor, b: &Tensor, activation: Activation) -> Result<Tensor> {
    let (batch, n, m) = check_linear(x, w, b)?;
    let mut y = matmul(x.data(), w.data(), batch, n, m);
    for row in y.chunks_mut(m) {
        for (v, bias) in row.iter_mut().zip(b.data()) {
            *v = activation.apply(*v + bias);
        }
    }
    Tensor::new(vec![batch, m], y)
}

/// Masked mean over the sequence axis of `x[B,L,d]`.
pub fn global_average_pool(x: &Tensor, mask: &Mask) -> Result<Tensor> {
    let (b, l, d) = x.dims3("global_average_pool")?;
    mask.check_nonempty("global_average_pool", b, l)?;
    let mut out = vec![0.0; b * d];
    for r in 0..b {
        let acc = &mut out[r * d..(r + 1) * d];
        for t in (0..l).filter(|&t| mask.is_set(r, t)) {
            for (a, &v) in acc
                .iter_mut()
                .zip(&x.data()[(r * l + t) * d..(r * l + t + 1) * d])
            {
                *a += v;
            }
        }
        let n = mask.row_count(r) as f64;
        acc.iter_mut().for_each(|a| *a /= n);
    }
    Tensor::new(vec![b, d], out)
}

pub(crate) fn avg_pool_backward(upstream: &[f64], mask: &Mask, d: usize) -> Vec<f64> {
    let (b, l) = (mask.rows(), mask.cols());
    let mut dx = vec![0.0; b * l * d];
    for r in 0..b {
        let n = mask.row_count(r) as f64;
        for t in (0..l).filter(|&t| mask.is_set(r, t)) {
            for f in 0..d {
                dx[(r * l + t) * d + f] = upstream[r * d + f] / n;
            }
        }
    }
    dx
}

/// Masked max over the sequence axis with the winning positions. Ties go
/// to the first maximal position.
pub(crate) fn max_pool_with_argmax(x: &Tensor, mask: &Mask) -> Result<(Tensor, Vec<usize>)> {
    let (b, l, d) = x.dims3("global_max_pool")?;
    mask.check_nonempty("global_max_pool", b, l)?;
    let mut out = vec![f64::NEG_INFINITY; b * d];
    let mut arg = vec![0usize; b * d];
    for r in 0..b {
        for t in (0..l).filter(|&t| mask.is_set(r, t)) {
            for f in 0..d {
                let v = x.data()[(r * l + t) * d + f];
                if v > out[r * d + f] {
                    out[r * d + f] = v;
                    arg[r * d + f] = t;
                }
            }
        }
    }
    Ok((Tensor::new(vec![b, d], out)?, arg))
}

pub fn global_max_pool(x: &Tensor, mask: &Mask) -> Result<Tensor> {
    max_pool_with_argmax(x, mask).map(|(y, _)| y)
}

pub(crate) fn max_pool_backward(
    upstream: &[f64],
    argmax: &[usize],
    b: usize,
    l: usize,
    d: usize,
) -> Vec<f64> {
    let mut dx = vec![0.0; b * l * d];
    for r in 0..b {
        for f in 0..d {
            dx[(r * l + argmax[r * d + f]) * d + f] += upstream[r * d + f];
        }
    }
    dx
}

pub(crate) fn check_dropout_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    Ok(())
}

/// Per-element multipliers for inverted dropout: 0 with probability
/// `rate`, otherwise `1 / (1 - rate)`.
pub(crate) fn dropout_scales(n: usize, rate: f64, seed: u64) -> Vec<f64> {
    if rate == 0.0 {
        return vec![1.0; n];
    }
    let keep = 1.0 / (1.0 - rate);
    let mut rng = seed::rng(seed, Stream::Dropout, 0);
    (0..n)
        .map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep })
        .collect()
}

pub fn dropout(x: &Tensor, rate: f64, training: bool, seed: u64) -> Result<Tensor> {
    check_dropout_rate(rate)?;
    if !training || rate == 0.0 {
        return Ok(x.clone());
    }
    let scales = dropout_scales(x.len(), rate, seed);
    let data = x.data().iter().zip(&scales).map(|(v, s)| v * s).collect();
    Tensor::new(x.shape().to_vec(), data)
}

pub(crate) fn clip_prob(p: f64) -> f64 {
    p.clamp(PROB_CLIP, 1.0 - PROB_CLIP)
}

/// `(1/B) Σ_i w_i · (1/K) Σ_k bce(p_ik, y_ik)` over `[B, K]` buffers.
/// With `K = 1` this is the per-example weighted mean.
pub fn weighted_bce_wide(p: &[f64], y: &[f64], w: &[f64], width: usize) -> f64 {
    let batch = w.len();
    let mut total = 0.0;
    for i in 0..batch {
        let mut row = 0.0;
        for k in 0..width {
            let q = clip_prob(p[i * width + k]);
            let t = y[i * width + k];
            row += -t * q.ln() - (1.0 - t) * (1.0 - q).ln();
        }
        total += w[i] * row / width as f64;
    }
    total / batch as f64
}

pub fn weighted_bce(p: &[f64], y: &[f64], w: &[f64]) -> f64 {
    weighted_bce_wide(p, y, w, 1)
}

pub(crate) fn weighted_bce_backward(
    p: &[f64],
    y: &[f64],
    w: &[f64],
    width: usize,
    upstream: f64,
) -> Vec<f64> {
    let batch = w.len();
    let scale = upstream / (batch * width) as f64;
    let mut g = vec![0.0; p.len()];
    for i in 0..batch {
        for k in 0..width {
            let j = i * width + k;
            let raw = p[j];
            // Clipping has zero slope outside the interval.
            if raw < PROB_CLIP || raw > 1.0 - PROB_CLIP {
                continue;
            }
            let t = y[j];
            g[j] = scale * w[i] * (-t / raw + (1.0 - t) / (1.0 - raw));
        }
    }
    g
}
