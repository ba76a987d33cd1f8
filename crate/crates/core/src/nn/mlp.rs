use rand::Rng;

use crate::error::{check_finite, check_len, Error, Result};

/// Hidden-layer nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Tanh,
    Relu,
    Identity,
}

impl Activation {
    pub fn id(self) -> u8 {
        match self {
            Activation::Tanh => 0,
            Activation::Relu => 1,
            Activation::Identity => 2,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Activation::Tanh),
            1 => Some(Activation::Relu),
            2 => Some(Activation::Identity),
            _ => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    #[inline]
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the activation's output `y`.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - y * y,
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        [Activation::Tanh, Activation::Relu, Activation::Identity]
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown activation `{s}` (expected tanh, relu or identity)"))
    }
}

/// Transformation applied to the final affine layer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    Linear,
    Softmax,
}

impl Head {
    pub fn id(self) -> u8 {
        match self {
            Head::Linear => 0,
            Head::Softmax => 1,
        }
    }

    pub fn from_id(id: u8) -> Option<Self> {
        match id {
            0 => Some(Head::Linear),
            1 => Some(Head::Softmax),
            _ => None,
        }
    }
}

/// A fully connected feed-forward network with a flat parameter vector.
///
/// Parameter layout: layers are stored in order; each layer contributes its
/// weight matrix in row-major `[fan_out][fan_in]` order followed by its
/// `fan_out` biases. The total length is `sum((fan_in + 1) * fan_out)`.
///
/// The activation is applied after every affine layer except the last, whose
/// output passes through the [`Head`].
#[derive(Clone, Debug, PartialEq)]
pub struct Mlp {
    layer_sizes: Vec<usize>,
    activation: Activation,
    head: Head,
    params: Vec<f64>,
}

/// Intermediate values of a forward pass, consumed by the backward pass.
#[derive(Clone, Debug)]
pub struct Tape {
    /// `layers[0]` is the input; `layers[l]` the activated output of layer `l`.
    /// The final entry holds the pre-head logits.
    layers: Vec<Vec<f64>>,
    output: Vec<f64>,
}

impl Tape {
    pub fn output(&self) -> &[f64] {
        &self.output
    }

    pub fn logits(&self) -> &[f64] {
        self.layers.last().expect("tape has at least the input layer")
    }

    pub fn into_output(self) -> Vec<f64> {
        self.output
    }
}

pub fn param_count(layer_sizes: &[usize]) -> usize {
    layer_sizes.windows(2).map(|w| (w[0] + 1) * w[1]).sum()
}

/// Dot product with independent accumulators so the loop vectorizes.
#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0; 4];
    let (ca, cb) = (a.chunks_exact(4), b.chunks_exact(4));
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        let (x, y): (&[f64; 4], &[f64; 4]) = (x.try_into().unwrap(), y.try_into().unwrap());
        for i in 0..4 {
            acc[i] += x[i] * y[i];
        }
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

pub fn softmax_in_place(values: &mut [f64]) {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for v in values.iter_mut() {
        *v = (*v - max).exp();
        sum += *v;
    }
    for v in values.iter_mut() {
        *v /= sum;
    }
}

impl Mlp {
    /// Network with all parameters zero.
    pub fn zeros(layer_sizes: &[usize], activation: Activation, head: Head) -> Result<Self> {
        if layer_sizes.len() < 2 {
            return Err(Error::InvalidParameter {
                name: "layer_sizes",
                reason: "need at least an input and an output size".into(),
            });
        }
        if let Some(pos) = layer_sizes.iter().position(|&s| s == 0) {
            return Err(Error::InvalidParameter {
                name: "layer_sizes",
                reason: format!("layer {pos} has zero width"),
            });
        }
        Ok(Self {
            layer_sizes: layer_sizes.to_vec(),
            activation,
            head,
            params: vec![0.0; param_count(layer_sizes)],
        })
    }

    /// Weights uniform in `±sqrt(6 / (fan_in + fan_out))`, biases zero.
    pub fn init<R: Rng + ?Sized>(
        layer_sizes: &[usize],
        activation: Activation,
        head: Head,
        rng: &mut R,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, activation, head)?;
        let mut offset = 0;
        for w in layer_sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.random_range(-limit..limit);
            }
            offset += (fan_in + 1) * fan_out;
        }
        Ok(net)
    }

    pub fn from_params(
        layer_sizes: &[usize],
        activation: Activation,
        head: Head,
        params: Vec<f64>,
    ) -> Result<Self> {
        let mut net = Self::zeros(layer_sizes, activation, head)?;
        check_len("parameter vector", net.params.len(), params.len())?;
        check_finite("parameter vector", &params)?;
        net.params = params;
        Ok(net)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn activation(&self) -> Activation {
        self.activation
    }

    pub fn head(&self) -> Head {
        self.head
    }

    pub fn input_len(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_len(&self) -> usize {
        *self.layer_sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub(crate) fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Offset of the bias block of layer `layer` (0-based) in the parameter vector.
    pub fn bias_offset(&self, layer: usize) -> usize {
        let mut offset = 0;
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            if l == layer {
                return offset + w[0] * w[1];
            }
            offset += (w[0] + 1) * w[1];
        }
        panic!("layer {layer} out of range");
    }

    /// Stable 64-bit fingerprint of the parameter bits.
    pub fn fingerprint(&self) -> u64 {
        // FNV-1a over the raw little-endian bytes.
        let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
        for p in &self.params {
            for b in p.to_bits().to_le_bytes() {
                hash ^= b as u64;
                hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        hash
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.forward_tape(input)?.into_output())
    }

    pub fn forward_tape(&self, input: &[f64]) -> Result<Tape> {
        check_len("network input", self.input_len(), input.len())?;
        let n_layers = self.layer_sizes.len() - 1;
        let mut layers = Vec::with_capacity(n_layers + 1);
        layers.push(input.to_vec());
        let mut offset = 0;
        for (l, w) in self.layer_sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + (fan_in + 1) * fan_out];
            let x = &layers[l];
            let last = l + 1 == n_layers;
            let mut out = Vec::with_capacity(fan_out);
            for (row, b) in weights.chunks_exact(fan_in).zip(biases) {
                let pre = *b + dot(row, x);
                out.push(if last { pre } else { self.activation.apply(pre) });
            }
            layers.push(out);
            offset += (fan_in + 1) * fan_out;
        }
        let mut output = layers.last().unwrap().clone();
        if self.head == Head::Softmax {
            softmax_in_place(&mut output);
        }
        Ok(Tape { layers, output })
    }

    /// Backpropagates `upstream = dL/d(output)` and accumulates `dL/dparams`
    /// into `grad`. Returns `dL/d(input)`.
    pub fn backward(&self, tape: &Tape, upstream: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        check_len("upstream gradient", self.output_len(), upstream.len())?;
        let logit_grad = match self.head {
            Head::Linear => upstream.to_vec(),
            Head::Softmax => {
                let p = &tape.output;
                let dot: f64 = p.iter().zip(upstream).map(|(p, u)| p * u).sum();
                p.iter().zip(upstream).map(|(p, u)| p * (u - dot)).collect()
            }
        };
        self.backward_logits(tape, &logit_grad, grad)
    }

    /// Like [`Mlp::backward`] but with the gradient taken with respect to the
    /// pre-head logits.
    pub fn backward_logits(&self, tape: &Tape, upstream: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        check_len("upstream gradient", self.output_len(), upstream.len())?;
        check_len("gradient buffer", self.params.len(), grad.len())?;
        let n_layers = self.layer_sizes.len() - 1;
        let mut offsets = Vec::with_capacity(n_layers);
        let mut offset = 0;
        for w in self.layer_sizes.windows(2) {
            offsets.push(offset);
            offset += (w[0] + 1) * w[1];
        }

        let mut delta = upstream.to_vec();
        for l in (0..n_layers).rev() {
            let (fan_in, fan_out) = (self.layer_sizes[l], self.layer_sizes[l + 1]);
            let off = offsets[l];
            let x = &tape.layers[l];
            let weights = &self.params[off..off + fan_in * fan_out];
            {
                let (gw, gb) = grad[off..off + (fan_in + 1) * fan_out].split_at_mut(fan_in * fan_out);
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    for (g, xi) in gw[o * fan_in..(o + 1) * fan_in].iter_mut().zip(x) {
                        *g += d * xi;
                    }
                    gb[o] += d;
                }
            }
            let mut prev = vec![0.0; fan_in];
            for (row, d) in weights.chunks_exact(fan_in).zip(&delta) {
                if *d == 0.0 {
                    continue;
                }
                for (p, w) in prev.iter_mut().zip(row) {
                    *p += d * w;
                }
            }
            if l > 0 {
                for (p, y) in prev.iter_mut().zip(x) {
                    *p *= self.activation.derivative_from_output(*y);
                }
            }
            delta = prev;
        }
        Ok(delta)
    }

    /// `d(upstream · output) / d(params)` as a flat vector in parameter layout.
    pub fn grad(&self, input: &[f64], upstream: &[f64]) -> Result<Vec<f64>> {
        let tape = self.forward_tape(input)?;
        let mut grad = vec![0.0; self.params.len()];
        self.backward(&tape, upstream, &mut grad)?;
        Ok(grad)
    }
}
