use rand::Rng as _;

use crate::rng::Rng;

/// Fully connected `input -> hidden (tanh) -> outputs`. Parameters live in
/// one flat vector: W1 (hidden x input, row-major), b1, W2 (outputs x
/// hidden), b2.
#[derive(Clone, Debug, PartialEq)]
pub struct QNetwork {
    input: usize,
    hidden: usize,
    outputs: usize,
    params: Vec<f64>,
}

/// One regression sample: move q(x)[action] toward target.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample<'a> {
    pub x: &'a [f64],
    pub action: usize,
    pub target: f64,
}

impl QNetwork {
    pub fn zeros(input: usize, hidden: usize, outputs: usize) -> Self {
        let n = hidden * input + hidden + outputs * hidden + outputs;
        QNetwork {
            input,
            hidden,
            outputs,
            params: vec![0.0; n],
        }
    }

    /// Uniform in ±1/sqrt(fan_in) for every weight and bias.
    pub fn init(input: usize, hidden: usize, outputs: usize, rng: &mut Rng) -> Self {
        let mut net = Self::zeros(input, hidden, outputs);
        let b1 = 1.0 / (input.max(1) as f64).sqrt();
        let b2 = 1.0 / (hidden.max(1) as f64).sqrt();
        let split = hidden * input + hidden;
        for (i, p) in net.params.iter_mut().enumerate() {
            let bound = if i < split { b1 } else { b2 };
            *p = rng.gen_range(-bound..=bound);
        }
        net
    }

    pub fn input_dim(&self) -> usize {
        self.input
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden
    }

    pub fn output_dim(&self) -> usize {
        self.outputs
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn offsets(&self) -> (usize, usize, usize) {
        let b1 = self.hidden * self.input;
        let w2 = b1 + self.hidden;
        let b2 = w2 + self.outputs * self.hidden;
        (b1, w2, b2)
    }

    fn hidden_layer(&self, x: &[f64]) -> Vec<f64> {
        let (b1, _, _) = self.offsets();
        (0..self.hidden)
            .map(|j| {
                let row = &self.params[j * self.input..(j + 1) * self.input];
                let pre: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.params[b1 + j];
                pre.tanh()
            })
            .collect()
    }

    fn output_layer(&self, h: &[f64]) -> Vec<f64> {
        let (_, w2, b2) = self.offsets();
        (0..self.outputs)
            .map(|k| {
                let row = &self.params[w2 + k * self.hidden..w2 + (k + 1) * self.hidden];
                row.iter().zip(h).map(|(w, v)| w * v).sum::<f64>() + self.params[b2 + k]
            })
            .collect()
    }

    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.input, "input length");
        self.output_layer(&self.hidden_layer(x))
    }

    /// Mean over the batch of ½(target − q(x)[action])².
    pub fn loss(&self, batch: &[Sample<'_>]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|s| {
                let e = self.forward(s.x)[s.action] - s.target;
                0.5 * e * e
            })
            .sum();
        total / batch.len() as f64
    }

    /// Gradient of `loss` with respect to every parameter.
    pub fn gradient(&self, batch: &[Sample<'_>]) -> Vec<f64> {
        let (b1, w2, b2) = self.offsets();
        let mut g = vec![0.0; self.params.len()];
        let scale = 1.0 / batch.len() as f64;
        for s in batch {
            let h = self.hidden_layer(s.x);
            let q = self.output_layer(&h);
            let dq = (q[s.action] - s.target) * scale;
            let a = s.action;
            g[b2 + a] += dq;
            for j in 0..self.hidden {
                g[w2 + a * self.hidden + j] += dq * h[j];
                let dpre = dq * self.params[w2 + a * self.hidden + j] * (1.0 - h[j] * h[j]);
                g[b1 + j] += dpre;
                for (i, xi) in s.x.iter().enumerate() {
                    g[j * self.input + i] += dpre * xi;
                }
            }
        }
        g
    }

    /// Make `self` a bit-exact copy of `other`.
    pub fn copy_from(&mut self, other: &QNetwork) {
        self.params.copy_from_slice(&other.params);
    }
}
