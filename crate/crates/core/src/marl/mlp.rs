use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::linalg::RMat;
use crate::{Error, Result};

pub const LEAKY_SLOPE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputMap {
    Linear,
    /// Logistic squash onto `(0, 1)`.
    Logistic,
}

fn leaky(z: f64) -> f64 {
    if z >= 0.0 {
        z
    } else {
        LEAKY_SLOPE * z
    }
}

fn leaky_grad(z: f64) -> f64 {
    if z >= 0.0 {
        1.0
    } else {
        LEAKY_SLOPE
    }
}

pub fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Fully connected network with leaky-ReLU hidden layers. Batches are
/// column-major: one sample per column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    pub weights: Vec<RMat>,
    pub biases: Vec<DVector<f64>>,
    pub output: OutputMap,
}

/// Parameter-shaped gradient (or update) buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub weights: Vec<RMat>,
    pub biases: Vec<DVector<f64>>,
}

pub struct Cache {
    /// Input of every layer, the network input first.
    inputs: Vec<RMat>,
    /// Pre-activation of every layer.
    pre: Vec<RMat>,
    pub output: RMat,
}

impl Cache {
    /// Pre-activation of every layer for the cached batch.
    pub fn pre_activations(&self) -> &[RMat] {
        &self.pre
    }
}

impl Mlp {
    /// Uniform `±1/sqrt(fan_in)` initialisation, with a small `±3e-3` range on
    /// the last layer.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], output: OutputMap, rng: &mut R) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidArgument(format!("bad layer sizes {sizes:?}")));
        }
        let layers = sizes.len() - 1;
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let bound = if l + 1 == layers {
                3e-3
            } else {
                1.0 / (fan_in as f64).sqrt()
            };
            weights.push(RMat::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..bound)));
            biases.push(DVector::from_fn(fan_out, |_, _| rng.random_range(-bound..bound)));
        }
        Ok(Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
            output,
        })
    }

    pub fn zeros(sizes: &[usize], output: OutputMap) -> Self {
        let weights = sizes.windows(2).map(|w| RMat::zeros(w[1], w[0])).collect();
        let biases = sizes.windows(2).map(|w| DVector::zeros(w[1])).collect();
        Mlp {
            sizes: sizes.to_vec(),
            weights,
            biases,
            output,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap_or(&0)
    }

    fn squash(&self, z: f64) -> f64 {
        match self.output {
            OutputMap::Linear => z,
            OutputMap::Logistic => logistic(z),
        }
    }

    fn squash_grad(&self, z: f64) -> f64 {
        match self.output {
            OutputMap::Linear => 1.0,
            OutputMap::Logistic => {
                let s = logistic(z);
                s * (1.0 - s)
            }
        }
    }

    fn affine(&self, l: usize, x: &RMat) -> RMat {
        let mut z = &self.weights[l] * x;
        for mut col in z.column_iter_mut() {
            col += &self.biases[l];
        }
        z
    }

    pub fn forward_cached(&self, x: &RMat) -> Result<Cache> {
        if x.nrows() != self.input_dim() {
            return Err(Error::Dimension(format!(
                "network expects {} inputs, got {}",
                self.input_dim(),
                x.nrows()
            )));
        }
        let layers = self.weights.len();
        let mut inputs = Vec::with_capacity(layers);
        let mut pre = Vec::with_capacity(layers);
        let mut h = x.clone();
        for l in 0..layers {
            let z = self.affine(l, &h);
            let next = if l + 1 == layers {
                z.map(|v| self.squash(v))
            } else {
                z.map(leaky)
            };
            inputs.push(h);
            pre.push(z);
            h = next;
        }
        Ok(Cache { inputs, pre, output: h })
    }

    pub fn forward(&self, x: &RMat) -> Result<RMat> {
        Ok(self.forward_cached(x)?.output)
    }

    /// Output before the final squash.
    pub fn forward_pre_squash(&self, x: &RMat) -> Result<RMat> {
        let cache = self.forward_cached(x)?;
        Ok(cache.pre.last().cloned().unwrap_or_else(|| RMat::zeros(0, 0)))
    }

    /// Single-sample forward pass.
    pub fn forward_one(&self, x: &[f64]) -> Result<Vec<f64>> {
        let out = self.forward(&RMat::from_column_slice(x.len(), 1, x))?;
        Ok(out.as_slice().to_vec())
    }

    /// Gradients of `Σ upstream ⊙ output` with respect to the parameters and
    /// to the input, summed over the batch.
    pub fn backward(&self, cache: &Cache, upstream: &RMat) -> Result<(Grads, RMat)> {
        if upstream.shape() != cache.output.shape() {
            return Err(Error::Dimension(format!(
                "upstream gradient {:?} does not match output {:?}",
                upstream.shape(),
                cache.output.shape()
            )));
        }
        let layers = self.weights.len();
        let mut gw = vec![RMat::zeros(0, 0); layers];
        let mut gb = vec![DVector::zeros(0); layers];
        let last = &cache.pre[layers - 1];
        let mut dz = upstream.zip_map(last, |g, z| g * self.squash_grad(z));
        for l in (0..layers).rev() {
            gw[l] = &dz * cache.inputs[l].transpose();
            gb[l] = dz.column_sum();
            let dh = self.weights[l].transpose() * &dz;
            if l == 0 {
                return Ok((
                    Grads {
                        weights: gw,
                        biases: gb,
                    },
                    dh,
                ));
            }
            dz = dh.zip_map(&cache.pre[l - 1], |g, z| g * leaky_grad(z));
        }
        unreachable!("network has at least one layer")
    }

    pub fn zero_grads(&self) -> Grads {
        Grads {
            weights: self.weights.iter().map(|w| RMat::zeros(w.nrows(), w.ncols())).collect(),
            biases: self.biases.iter().map(|b| DVector::zeros(b.len())).collect(),
        }
    }

    /// `θ += step * g`.
    pub fn apply(&mut self, g: &Grads, step: f64) {
        for (w, d) in self.weights.iter_mut().zip(&g.weights) {
            *w += d * step;
        }
        for (b, d) in self.biases.iter_mut().zip(&g.biases) {
            *b += d * step;
        }
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>() + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn params(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.n_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            v.extend_from_slice(w.as_slice());
            v.extend_from_slice(b.as_slice());
        }
        v
    }

    pub fn set_params(&mut self, v: &[f64]) -> Result<()> {
        if v.len() != self.n_params() {
            return Err(Error::Dimension(format!(
                "{} values for {} parameters",
                v.len(),
                self.n_params()
            )));
        }
        let mut off = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let n = w.len();
            w.as_mut_slice().copy_from_slice(&v[off..off + n]);
            off += n;
            let n = b.len();
            b.as_mut_slice().copy_from_slice(&v[off..off + n]);
            off += n;
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.weights.iter().all(|w| w.iter().all(|x| x.is_finite()))
            && self.biases.iter().all(|b| b.iter().all(|x| x.is_finite()))
    }
}

impl Grads {
    pub fn norm_sqr(&self) -> f64 {
        self.weights.iter().map(|w| w.norm_squared()).sum::<f64>()
            + self.biases.iter().map(|b| b.norm_squared()).sum::<f64>()
    }

    pub fn scale(&mut self, s: f64) {
        self.weights.iter_mut().for_each(|w| *w *= s);
        self.biases.iter_mut().for_each(|b| *b *= s);
    }

    pub fn add(&mut self, other: &Grads) {
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            *w += o;
        }
        for (b, o) in self.biases.iter_mut().zip(&other.biases) {
            *b += o;
        }
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            v.extend_from_slice(w.as_slice());
            v.extend_from_slice(b.as_slice());
        }
        v
    }
}

/// Rescale `grads` jointly so their global L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_global_norm(grads: &mut [&mut Grads], max_norm: f64) -> f64 {
    let norm = grads.iter().map(|g| g.norm_sqr()).sum::<f64>().sqrt();
    if norm > max_norm && norm > 0.0 {
        let s = max_norm / norm;
        for g in grads.iter_mut() {
            g.scale(s);
        }
    }
    norm
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoftUpdate {
    /// `θ' ← τ θ + (1 − τ) θ'`.
    #[default]
    Standard,
    /// `θ' ← τ θ' + (1 − τ) θ`, the target keeping only a `τ` share of itself.
    Literal,
}

/// Blend `current` into `target`.
pub fn soft_update(target: &mut Mlp, current: &Mlp, tau: f64, direction: SoftUpdate) -> Result<()> {
    if target.sizes != current.sizes {
        return Err(Error::Dimension(format!(
            "target {:?} and current {:?} networks differ in shape",
            target.sizes, current.sizes
        )));
    }
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidArgument(format!("tau must lie in (0, 1], got {tau}")));
    }
    let blend = |t: f64, c: f64| match direction {
        SoftUpdate::Standard => tau * c + (1.0 - tau) * t,
        SoftUpdate::Literal => tau * t + (1.0 - tau) * c,
    };
    for (t, c) in target.weights.iter_mut().zip(&current.weights) {
        t.zip_apply(c, |t, c| *t = blend(*t, c));
    }
    for (t, c) in target.biases.iter_mut().zip(&current.biases) {
        t.zip_apply(c, |t, c| *t = blend(*t, c));
    }
    Ok(())
}
