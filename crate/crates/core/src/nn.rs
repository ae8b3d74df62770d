//! Minimal dense multi-layer perceptron with manual backpropagation.
//!
//! The approximators here are small (a few hidden layers of modest width)
//! and run on a single core inside a training loop that also solves SDPs,
//! so a hand-rolled f64 implementation with exact gradients is both fast
//! enough and easy to verify against finite differences.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use rand::Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Identity,
}

impl Activation {
    fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation output.
    fn derivative_from_output(&self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Layer {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
    pub activation: Activation,
}

/// Fully-connected network: tanh on hidden layers, identity output.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub layers: Vec<Layer>,
}

/// Per-layer parameter gradients, same shapes as the network.
#[derive(Debug, Clone)]
pub struct Grads {
    pub w: Vec<DMatrix<f64>>,
    pub b: Vec<DVector<f64>>,
}

/// Layer activations retained for the backward pass; `outputs[0]` is the
/// input, `outputs[k]` the output of layer k-1.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub outputs: Vec<DVector<f64>>,
}

impl Mlp {
    /// `dims = [input, hidden..., output]`; weights initialized uniformly in
    /// [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
    pub fn new<R: Rng + ?Sized>(dims: &[usize], rng: &mut R) -> Self {
        assert!(dims.len() >= 2);
        let mut layers = Vec::new();
        for k in 0..dims.len() - 1 {
            let (fan_in, fan_out) = (dims[k], dims[k + 1]);
            let a = 1.0 / (fan_in as f64).sqrt();
            let w = DMatrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-a..a));
            let b = DVector::zeros(fan_out);
            let activation = if k + 2 == dims.len() { Activation::Identity } else { Activation::Tanh };
            layers.push(Layer { w, b, activation });
        }
        Mlp { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].w.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().unwrap().w.nrows()
    }

    pub fn forward(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut h = x.clone();
        for layer in &self.layers {
            h = (&layer.w * h + &layer.b).map(|v| layer.activation.apply(v));
        }
        h
    }

    pub fn forward_cache(&self, x: &DVector<f64>) -> ForwardCache {
        let mut outputs = vec![x.clone()];
        for layer in &self.layers {
            let h = (&layer.w * outputs.last().unwrap() + &layer.b)
                .map(|v| layer.activation.apply(v));
            outputs.push(h);
        }
        ForwardCache { outputs }
    }

    /// Backpropagates `grad_out` (d loss / d network-output); accumulates
    /// parameter gradients into `grads` and returns d loss / d input.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        grad_out: &DVector<f64>,
        grads: &mut Grads,
    ) -> DVector<f64> {
        let mut delta = grad_out.clone();
        for (k, layer) in self.layers.iter().enumerate().rev() {
            let out = &cache.outputs[k + 1];
            // through the activation
            let dz = DVector::from_fn(delta.len(), |i, _| {
                delta[i] * layer.activation.derivative_from_output(out[i])
            });
            grads.w[k] += &dz * cache.outputs[k].transpose();
            grads.b[k] += &dz;
            delta = layer.w.transpose() * dz;
        }
        delta
    }

    pub fn zero_grads(&self) -> Grads {
        Grads {
            w: self.layers.iter().map(|l| DMatrix::zeros(l.w.nrows(), l.w.ncols())).collect(),
            b: self.layers.iter().map(|l| DVector::zeros(l.b.len())).collect(),
        }
    }

    /// In-place parameter update `p += scale * grad` (negative scale for
    /// descent, positive for ascent).
    pub fn apply_grads(&mut self, grads: &Grads, scale: f64) {
        for (k, layer) in self.layers.iter_mut().enumerate() {
            layer.w += grads.w[k].scale(scale);
            layer.b += grads.b[k].scale(scale);
        }
    }

    /// Flattened parameters, layer by layer, weights (column-major) then bias.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer.w.iter());
            out.extend(layer.b.iter());
        }
        out
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        let mut idx = 0;
        for layer in &mut self.layers {
            let nw = layer.w.len();
            let nb = layer.b.len();
            if idx + nw + nb > params.len() {
                return Err(Error::InvalidArgument("parameter vector too short".into()));
            }
            layer.w.iter_mut().zip(&params[idx..idx + nw]).for_each(|(p, &v)| *p = v);
            idx += nw;
            layer.b.iter_mut().zip(&params[idx..idx + nb]).for_each(|(p, &v)| *p = v);
            idx += nb;
        }
        if idx != params.len() {
            return Err(Error::InvalidArgument(format!(
                "parameter vector has {} values, network needs {idx}",
                params.len()
            )));
        }
        Ok(())
    }

    /// Element-wise `target = tau * online + (1 - tau) * target`.
    pub fn soft_update_from(&mut self, online: &Mlp, tau: f64) -> Result<()> {
        if self.layers.len() != online.layers.len() {
            return Err(Error::InvalidArgument("layer count mismatch".into()));
        }
        for (t, o) in self.layers.iter_mut().zip(&online.layers) {
            if t.w.shape() != o.w.shape() {
                return Err(Error::InvalidArgument("layer shape mismatch".into()));
            }
            t.w = o.w.scale(tau) + t.w.scale(1.0 - tau);
            t.b = o.b.scale(tau) + t.b.scale(1.0 - tau);
        }
        Ok(())
    }
}
