//! Small neural building blocks on top of candle tensors.
//!
//! Parameters are created through [`ParamBuilder`], which draws initial values
//! from a seeded ChaCha stream so that a model built twice with the same seed
//! is bit-identical. Everything here is composed of differentiable primitives.

use std::sync::{Arc, Mutex};

use candle_core::{DType, Device, Module, Tensor, Var, D};
use candle_nn::{Embedding, Linear, VarMap};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Init {
    /// Uniform in `[-bound, bound)`.
    Uniform(f64),
    Normal(f64),
    Zeros,
    Ones,
}

/// Creates named parameters inside a shared [`VarMap`].
#[derive(Clone)]
pub struct ParamBuilder {
    map: VarMap,
    rng: Arc<Mutex<ChaCha8Rng>>,
    prefix: String,
    dtype: DType,
    device: Device,
}

impl ParamBuilder {
    pub fn new(map: VarMap, seed: u64, dtype: DType, device: Device) -> Self {
        ParamBuilder {
            map,
            rng: Arc::new(Mutex::new(ChaCha8Rng::seed_from_u64(seed))),
            prefix: String::new(),
            dtype,
            device,
        }
    }

    pub fn pp(&self, name: &str) -> Self {
        let prefix = if self.prefix.is_empty() {
            name.to_string()
        } else {
            format!("{}.{name}", self.prefix)
        };
        ParamBuilder {
            prefix,
            ..self.clone()
        }
    }

    pub fn dtype(&self) -> DType {
        self.dtype
    }

    pub fn device(&self) -> &Device {
        &self.device
    }

    pub fn get(&self, shape: &[usize], name: &str, init: Init) -> Result<Tensor> {
        let count: usize = shape.iter().product();
        let values: Vec<f64> = {
            let mut rng = self.rng.lock().expect("parameter rng poisoned");
            match init {
                Init::Zeros => vec![0.0; count],
                Init::Ones => vec![1.0; count],
                Init::Uniform(bound) => (0..count).map(|_| rng.gen_range(-bound..bound)).collect(),
                Init::Normal(std) => {
                    let normal = Normal::new(0.0, std).expect("finite std");
                    (0..count).map(|_| normal.sample(&mut *rng)).collect()
                }
            }
        };
        let tensor = Tensor::from_vec(values, shape, &self.device)?.to_dtype(self.dtype)?;
        let var = Var::from_tensor(&tensor)?;
        let full = self.pp(name).prefix;
        let out = var.as_tensor().clone();
        self.map
            .data()
            .lock()
            .expect("var map poisoned")
            .insert(full, var);
        Ok(out)
    }

    /// PyTorch-style linear layer: weights and bias uniform in ±1/√fan_in.
    pub fn linear(&self, fan_in: usize, fan_out: usize, name: &str, bias: bool) -> Result<Linear> {
        let b = self.pp(name);
        let bound = 1.0 / (fan_in as f64).sqrt();
        let weight = b.get(&[fan_out, fan_in], "weight", Init::Uniform(bound))?;
        let bias = if bias {
            Some(b.get(&[fan_out], "bias", Init::Uniform(bound))?)
        } else {
            None
        };
        Ok(Linear::new(weight, bias))
    }

    pub fn embedding(&self, rows: usize, width: usize, name: &str) -> Result<Embedding> {
        let table = self.pp(name).get(&[rows, width], "weight", Init::Normal(1.0))?;
        Ok(Embedding::new(table, width))
    }
}

/// Numerically safe softmax over the last dimension with positions where
/// `mask == 0` pushed to (effectively) zero probability.
pub fn masked_softmax(logits: &Tensor, mask: &Tensor) -> Result<Tensor> {
    let penalty = ((mask - 1.0)? * 1e9)?;
    let z = logits.broadcast_add(&penalty)?;
    Ok(candle_nn::ops::softmax(&z, D::Minus1)?)
}

/// Plain softmax over the last dimension.
pub fn softmax(logits: &Tensor) -> Result<Tensor> {
    Ok(candle_nn::ops::softmax(logits, D::Minus1)?)
}

/// Inverted dropout with a mask drawn from `rng`.
pub fn dropout(x: &Tensor, p: f64, rng: &Mutex<ChaCha8Rng>) -> Result<Tensor> {
    if p <= 0.0 {
        return Ok(x.clone());
    }
    let keep = 1.0 - p;
    let count = x.elem_count();
    let mask: Vec<f32> = {
        let mut rng = rng.lock().expect("dropout rng poisoned");
        (0..count)
            .map(|_| if rng.gen::<f64>() < keep { (1.0 / keep) as f32 } else { 0.0 })
            .collect()
    };
    let mask = Tensor::from_vec(mask, x.shape(), x.device())?.to_dtype(x.dtype())?;
    Ok((x * mask)?)
}

/// Layer normalization over the last dimension.
#[derive(Debug, Clone)]
pub struct LayerNorm {
    gamma: Tensor,
    beta: Tensor,
    eps: f64,
}

impl LayerNorm {
    pub fn new(b: &ParamBuilder, width: usize) -> Result<Self> {
        Ok(LayerNorm {
            gamma: b.get(&[width], "weight", Init::Ones)?,
            beta: b.get(&[width], "bias", Init::Zeros)?,
            eps: 1e-5,
        })
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        let mean = x.mean_keepdim(D::Minus1)?;
        let centered = x.broadcast_sub(&mean)?;
        let var = centered.sqr()?.mean_keepdim(D::Minus1)?;
        let normed = centered.broadcast_div(&(var + self.eps)?.sqrt()?)?;
        Ok(normed.broadcast_mul(&self.gamma)?.broadcast_add(&self.beta)?)
    }
}

/// LSTM cell with gate order input, forget, cell, output and a single bias.
///
/// Callers usually pre-project inputs with [`LstmCell::project`] so that
/// sequence-wide input products are computed in one matmul.
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub w_ih: Tensor,
    pub w_hh: Tensor,
    pub bias: Tensor,
    pub hidden: usize,
}

impl LstmCell {
    pub fn new(b: &ParamBuilder, input: usize, hidden: usize) -> Result<Self> {
        let bound = 1.0 / (hidden as f64).sqrt();
        Ok(LstmCell {
            w_ih: b.get(&[4 * hidden, input], "w_ih", Init::Uniform(bound))?,
            w_hh: b.get(&[4 * hidden, hidden], "w_hh", Init::Uniform(bound))?,
            bias: b.get(&[4 * hidden], "bias", Init::Uniform(bound))?,
            hidden,
        })
    }

    pub fn input_width(&self) -> usize {
        self.w_ih.dim(1).unwrap_or(0)
    }

    /// `x · W_ihᵀ` restricted to input columns `[offset, offset + width)`.
    /// Works for `[B, width]` and `[B, n, width]` inputs.
    pub fn project(&self, x: &Tensor, offset: usize) -> Result<Tensor> {
        let width = x.dim(D::Minus1)?;
        let w = self.w_ih.narrow(1, offset, width)?.contiguous()?;
        Ok(Linear::new(w, None).forward(x)?)
    }

    /// Full input projection plus bias for a `[B, input]` vector.
    pub fn project_all(&self, x: &Tensor) -> Result<Tensor> {
        Ok(self.project(x, 0)?.broadcast_add(&self.bias)?)
    }

    /// One recurrence from pre-projected input gates (bias included).
    pub fn step(&self, gates_in: &Tensor, h: &Tensor, c: &Tensor) -> Result<(Tensor, Tensor)> {
        let gates = (gates_in + h.matmul(&self.w_hh.t()?)?)?;
        let chunks = gates.chunk(4, D::Minus1)?;
        let i = candle_nn::ops::sigmoid(&chunks[0])?;
        let f = candle_nn::ops::sigmoid(&chunks[1])?;
        let g = chunks[2].tanh()?;
        let o = candle_nn::ops::sigmoid(&chunks[3])?;
        let c = ((f * c)? + (i * g)?)?;
        let h = (o * c.tanh()?)?;
        Ok((h, c))
    }
}

/// Bidirectional LSTM over padded `[B, n, ·]` sequences.
#[derive(Debug, Clone)]
pub struct BiLstm {
    pub forward: LstmCell,
    pub backward: LstmCell,
}

impl BiLstm {
    pub fn new(b: &ParamBuilder, input: usize, hidden: usize) -> Result<Self> {
        Ok(BiLstm {
            forward: LstmCell::new(&b.pp("fwd"), input, hidden)?,
            backward: LstmCell::new(&b.pp("bwd"), input, hidden)?,
        })
    }

    pub fn hidden(&self) -> usize {
        self.forward.hidden
    }

    /// Runs both directions over pre-projected gate inputs `[B, n, 4h]`
    /// (bias excluded). The state is zeroed at padding positions, so the
    /// backward pass of every sequence starts fresh at its true last token.
    /// Returns `[B, n, 2h]`.
    pub fn run(&self, fwd_in: &Tensor, bwd_in: &Tensor, mask: &Tensor) -> Result<Tensor> {
        let fwd = Self::direction(&self.forward, fwd_in, mask, false)?;
        let bwd = Self::direction(&self.backward, bwd_in, mask, true)?;
        Ok(Tensor::cat(&[fwd, bwd], D::Minus1)?)
    }

    fn direction(cell: &LstmCell, input: &Tensor, mask: &Tensor, reverse: bool) -> Result<Tensor> {
        let (b, n, _) = input.dims3()?;
        let input = input.broadcast_add(&cell.bias)?;
        let zeros = Tensor::zeros((b, cell.hidden), input.dtype(), input.device())?;
        let (mut h, mut c) = (zeros.clone(), zeros);
        let mut outputs = vec![None; n];
        let order: Box<dyn Iterator<Item = usize>> = if reverse {
            Box::new((0..n).rev())
        } else {
            Box::new(0..n)
        };
        for t in order {
            let x = input.narrow(1, t, 1)?.squeeze(1)?;
            let (h_next, c_next) = cell.step(&x, &h, &c)?;
            let m = mask.narrow(1, t, 1)?;
            h = h_next.broadcast_mul(&m)?;
            c = c_next.broadcast_mul(&m)?;
            outputs[t] = Some(h.clone());
        }
        let outputs: Vec<Tensor> = outputs.into_iter().map(|o| o.expect("every step ran")).collect();
        Ok(Tensor::stack(&outputs, 1)?)
    }
}

/// Row-wise `Σ_i weights[b, i] · values[b, i, :]` for `[B, n]` weights and
/// `[B, n, d]` values.
pub fn weighted_sum(weights: &Tensor, values: &Tensor) -> Result<Tensor> {
    Ok(weights.unsqueeze(1)?.matmul(values)?.squeeze(1)?)
}

/// Reads a `[B, k]` tensor into per-row `f64` vectors.
pub fn rows_f64(t: &Tensor) -> Result<Vec<Vec<f64>>> {
    Ok(t.to_dtype(DType::F64)?.to_vec2::<f64>()?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn builder(dtype: DType) -> ParamBuilder {
        ParamBuilder::new(VarMap::new(), 7, dtype, Device::Cpu)
    }

    #[test]
    fn seeded_parameters_are_reproducible() {
        let a = builder(DType::F32).get(&[3, 4], "w", Init::Uniform(0.5)).unwrap();
        let b = builder(DType::F32).get(&[3, 4], "w", Init::Uniform(0.5)).unwrap();
        assert_eq!(a.to_vec2::<f32>().unwrap(), b.to_vec2::<f32>().unwrap());
    }

    #[test]
    fn masked_softmax_zeroes_padding() {
        let logits = Tensor::new(&[[1.0f32, 2.0, 3.0, 50.0]], &Device::Cpu).unwrap();
        let mask = Tensor::new(&[[1.0f32, 1.0, 1.0, 0.0]], &Device::Cpu).unwrap();
        let p = masked_softmax(&logits, &mask).unwrap().to_vec2::<f32>().unwrap();
        assert!(p[0][3] <= 1e-7);
        assert!((p[0].iter().sum::<f32>() - 1.0).abs() < 1e-5);
    }

    #[test]
    fn layer_norm_centers() {
        let b = builder(DType::F64);
        let ln = LayerNorm::new(&b, 4).unwrap();
        let x = Tensor::new(&[[1.0f64, 2.0, 3.0, 10.0]], &Device::Cpu).unwrap();
        let y = ln.forward(&x).unwrap().to_vec2::<f64>().unwrap();
        let mean: f64 = y[0].iter().sum::<f64>() / 4.0;
        assert!(mean.abs() < 1e-9);
    }

    #[test]
    fn bilstm_ignores_padding() {
        let b = builder(DType::F64);
        let lstm = BiLstm::new(&b, 3, 2).unwrap();
        let x = Tensor::new(
            &[[[0.1f64, 0.2, 0.3], [0.4, 0.5, 0.6], [9.0, 9.0, 9.0]]],
            &Device::Cpu,
        )
        .unwrap();
        let short = x.narrow(1, 0, 2).unwrap();
        let project = |cell: &LstmCell, x: &Tensor| cell.project(x, 0).unwrap();
        let mask3 = Tensor::new(&[[1.0f64, 1.0, 0.0]], &Device::Cpu).unwrap();
        let mask2 = Tensor::new(&[[1.0f64, 1.0]], &Device::Cpu).unwrap();
        let padded = lstm
            .run(&project(&lstm.forward, &x), &project(&lstm.backward, &x), &mask3)
            .unwrap();
        let plain = lstm
            .run(&project(&lstm.forward, &short), &project(&lstm.backward, &short), &mask2)
            .unwrap();
        let a = padded.narrow(1, 0, 2).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        let b = plain.flatten_all().unwrap().to_vec1::<f64>().unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
        let pad_row = padded.narrow(1, 2, 1).unwrap().flatten_all().unwrap().to_vec1::<f64>().unwrap();
        assert!(pad_row.iter().all(|v| *v == 0.0));
    }
}
