//! Streaming autoencoder: `d → 2 → d` network with logistic units.
//!
//! The anomaly score is half the squared reconstruction error. Training is
//! plain stochastic backpropagation on that same quantity, so each call to
//! [`StreamingAutoencoder::train`] is one gradient step on one instance.

use alloc::vec::Vec;

use rand::Rng;

use super::{AnomalyScore, OneClassClassifier};
use crate::error::{bail, check_dimension, check_finite, Result};
use crate::rng::seeded;

pub const HIDDEN_WIDTH: usize = 2;
pub const DEFAULT_LEARNING_RATE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq)]
pub struct StreamingAutoencoder {
    width: usize,
    /// Row-major `HIDDEN_WIDTH × width`.
    encoder: Vec<f64>,
    encoder_bias: [f64; HIDDEN_WIDTH],
    /// Row-major `width × HIDDEN_WIDTH`.
    decoder: Vec<f64>,
    decoder_bias: Vec<f64>,
    learning_rate: f64,
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-z))
}

struct Activations {
    hidden: [f64; HIDDEN_WIDTH],
    output: Vec<f64>,
}

impl StreamingAutoencoder {
    /// Fresh network with weights uniform in `[-0.5, 0.5]`.
    pub fn new(width: usize, learning_rate: f64, seed: u64) -> Result<Self> {
        if width == 0 {
            bail!(Config, "autoencoder width must be at least 1");
        }
        if !(learning_rate >= 0.0) || !learning_rate.is_finite() {
            bail!(Config, "learning rate must be a non-negative finite number");
        }
        let mut rng = seeded(seed);
        let mut draw = || rng.random_range(-0.5..=0.5);
        let encoder = (0..HIDDEN_WIDTH * width).map(|_| draw()).collect();
        let encoder_bias = [draw(), draw()];
        let decoder = (0..width * HIDDEN_WIDTH).map(|_| draw()).collect();
        let decoder_bias = (0..width).map(|_| draw()).collect();
        Ok(StreamingAutoencoder {
            width,
            encoder,
            encoder_bias,
            decoder,
            decoder_bias,
            learning_rate,
        })
    }

    /// Fresh network trained for `epochs` in-order passes over `window`.
    pub fn initialize<'a>(
        window: impl IntoIterator<Item = &'a [f64]> + Clone,
        width: usize,
        learning_rate: f64,
        epochs: usize,
        seed: u64,
    ) -> Result<Self> {
        if window.clone().into_iter().next().is_none() {
            bail!(State, "cannot initialise an autoencoder on an empty window");
        }
        let mut net = Self::new(width, learning_rate, seed)?;
        for _ in 0..epochs {
            for x in window.clone() {
                net.train(x)?;
            }
        }
        Ok(net)
    }

    pub fn learning_rate(&self) -> f64 {
        self.learning_rate
    }

    fn forward(&self, x: &[f64]) -> Activations {
        let d = self.width;
        let mut hidden = [0.0; HIDDEN_WIDTH];
        for (j, h) in hidden.iter_mut().enumerate() {
            let row = &self.encoder[j * d..(j + 1) * d];
            let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.encoder_bias[j];
            *h = logistic(z);
        }
        let output = (0..d)
            .map(|i| {
                let row = &self.decoder[i * HIDDEN_WIDTH..(i + 1) * HIDDEN_WIDTH];
                let z: f64 =
                    row.iter().zip(&hidden).map(|(w, h)| w * h).sum::<f64>() + self.decoder_bias[i];
                logistic(z)
            })
            .collect();
        Activations { hidden, output }
    }

    /// Network output for `x`.
    pub fn reconstruct(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dimension(self.width, x)?;
        Ok(self.forward(x).output)
    }

    /// `½‖x − reconstruction‖²`.
    pub fn reconstruction_error(&self, x: &[f64]) -> Result<f64> {
        check_dimension(self.width, x)?;
        Ok(half_squared_error(x, &self.forward(x).output))
    }

    /// All parameters in a fixed order: encoder, encoder bias, decoder, decoder bias.
    pub fn parameters(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.parameter_count());
        p.extend_from_slice(&self.encoder);
        p.extend_from_slice(&self.encoder_bias);
        p.extend_from_slice(&self.decoder);
        p.extend_from_slice(&self.decoder_bias);
        p
    }

    pub fn parameter_count(&self) -> usize {
        2 * HIDDEN_WIDTH * self.width + HIDDEN_WIDTH + self.width
    }

    /// Copy of this network with parameters replaced (same order as [`Self::parameters`]).
    pub fn with_parameters(&self, params: &[f64]) -> Result<Self> {
        if params.len() != self.parameter_count() {
            bail!(
                Contract,
                "expected {} parameters, got {}",
                self.parameter_count(),
                params.len()
            );
        }
        let d = self.width;
        let (enc, rest) = params.split_at(HIDDEN_WIDTH * d);
        let (enc_b, rest) = rest.split_at(HIDDEN_WIDTH);
        let (dec, dec_b) = rest.split_at(d * HIDDEN_WIDTH);
        let mut net = self.clone();
        net.encoder.copy_from_slice(enc);
        net.encoder_bias.copy_from_slice(enc_b);
        net.decoder.copy_from_slice(dec);
        net.decoder_bias.copy_from_slice(dec_b);
        Ok(net)
    }

    /// Gradient of the reconstruction error with respect to [`Self::parameters`].
    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_dimension(self.width, x)?;
        let d = self.width;
        let Activations { hidden, output } = self.forward(x);
        let delta_out: Vec<f64> = output
            .iter()
            .zip(x)
            .map(|(y, t)| (y - t) * y * (1.0 - y))
            .collect();
        let mut delta_hidden = [0.0; HIDDEN_WIDTH];
        for (j, dh) in delta_hidden.iter_mut().enumerate() {
            let back: f64 = (0..d)
                .map(|i| self.decoder[i * HIDDEN_WIDTH + j] * delta_out[i])
                .sum();
            *dh = back * hidden[j] * (1.0 - hidden[j]);
        }
        let mut g = Vec::with_capacity(self.parameter_count());
        for dh in &delta_hidden {
            g.extend(x.iter().map(|v| dh * v));
        }
        g.extend_from_slice(&delta_hidden);
        for dout in &delta_out {
            g.extend(hidden.iter().map(|h| dout * h));
        }
        g.extend_from_slice(&delta_out);
        Ok(g)
    }
}

fn half_squared_error(x: &[f64], y: &[f64]) -> f64 {
    0.5 * x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

impl OneClassClassifier for StreamingAutoencoder {
    fn dimension(&self) -> usize {
        self.width
    }

    fn score(&self, x: &[f64]) -> Result<AnomalyScore> {
        self.reconstruction_error(x).map(AnomalyScore::new)
    }

    fn train(&mut self, x: &[f64]) -> Result<()> {
        check_finite(x)?;
        let g = self.gradient(x)?;
        let lr = self.learning_rate;
        let d = self.width;
        let (g_enc, rest) = g.split_at(HIDDEN_WIDTH * d);
        let (g_enc_b, rest) = rest.split_at(HIDDEN_WIDTH);
        let (g_dec, g_dec_b) = rest.split_at(d * HIDDEN_WIDTH);
        let step = |p: &mut [f64], g: &[f64]| p.iter_mut().zip(g).for_each(|(w, gw)| *w -= lr * gw);
        step(&mut self.encoder, g_enc);
        step(&mut self.encoder_bias, g_enc_b);
        step(&mut self.decoder, g_dec);
        step(&mut self.decoder_bias, g_dec_b);
        Ok(())
    }
}
