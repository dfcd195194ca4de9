//! Feed-forward Q-network with hand-written backpropagation and Adam.
//!
//! The network maps an encoded state to one Q-value per action. Training uses a
//! single loss family: for each sample, a squared error on the selected action
//! plus, optionally, squared outputs of a set of actions whose target is zero:
//!
//! ```text
//! loss = sum_i [ (y_i - Q(s_i, a_i))^2 + sum_{a in mask_i} Q(s_i, a)^2 ]
//! ```
//!
//! The loss is summed, not averaged, over the batch. All arithmetic is `f64`.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu if z > 0.0 => 1.0,
            Activation::Relu => 0.0,
            Activation::Identity => 1.0,
        }
    }

    fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Identity => "identity",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "relu" => Some(Activation::Relu),
            "identity" => Some(Activation::Identity),
            _ => None,
        }
    }
}

/// Dense layer computing `act(W x + b)`; `W` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    inputs: usize,
    outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

impl Layer {
    pub fn zeros(inputs: usize, outputs: usize, activation: Activation) -> Self {
        Self { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs], activation }
    }

    pub fn new(inputs: usize, outputs: usize, weights: Vec<f64>, bias: Vec<f64>, activation: Activation) -> Result<Self> {
        if weights.len() != inputs * outputs {
            return Err(Error::DimensionMismatch { expected: inputs * outputs, actual: weights.len() });
        }
        if bias.len() != outputs {
            return Err(Error::DimensionMismatch { expected: outputs, actual: bias.len() });
        }
        Ok(Self { inputs, outputs, weights, bias, activation })
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }

    /// Pre-activations `W x + b` written into `z`.
    fn affine(&self, x: &[f64], z: &mut Vec<f64>) {
        z.clear();
        z.extend(
            self.weights
                .chunks_exact(self.inputs)
                .zip(&self.bias)
                .map(|(row, b)| dot(row, x) + b),
        );
    }
}

/// Four-lane dot product; the fixed accumulation order keeps results bit-reproducible.
#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let tail: f64 = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| x * y).sum();
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// One training sample of the masked squared-error loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub state: Vec<f64>,
    pub action: usize,
    pub target: f64,
    /// Actions whose output is regressed toward zero. Never contains `action`.
    pub zero_mask: Vec<usize>,
}

/// Parameter gradients, shaped like the network: `(weights, bias)` per layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros_like(net: &Network) -> Self {
        Self { layers: net.layers.iter().map(|l| (vec![0.0; l.weights.len()], vec![0.0; l.bias.len()])).collect() }
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.layers.iter().flat_map(|(w, b)| w.iter().chain(b))
    }

    pub fn max_abs(&self) -> f64 {
        self.iter().fold(0.0, |m, g| m.max(g.abs()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

impl Network {
    /// Rectifier hidden layers and an identity output layer with sizes
    /// `[input, hidden..., output]`, initialized uniformly in
    /// `±sqrt(6 / fan_in)` (hidden) or `±sqrt(3 / fan_in)` (output). Biases start at 0.
    pub fn new<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        for layer in &mut net.layers {
            let gain = match layer.activation {
                Activation::Relu => 6.0,
                Activation::Identity => 3.0,
            };
            let bound = (gain / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.random_range(-bound..bound);
            }
        }
        Ok(net)
    }

    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidConfig(format!("bad layer sizes {sizes:?}")));
        }
        let n = sizes.len() - 1;
        let layers = sizes
            .windows(2)
            .enumerate()
            .map(|(i, w)| Layer::zeros(w[0], w[1], if i + 1 == n { Activation::Identity } else { Activation::Relu }))
            .collect();
        Ok(Self { layers })
    }

    pub fn from_layers(layers: Vec<Layer>) -> Result<Self> {
        let last = layers.last().ok_or_else(|| Error::InvalidConfig("network needs a layer".into()))?;
        if last.activation != Activation::Identity {
            return Err(Error::InvalidConfig("output layer must be linear".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].outputs != pair[1].inputs {
                return Err(Error::DimensionMismatch { expected: pair[0].outputs, actual: pair[1].inputs });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Layer] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].inputs
    }

    pub fn output_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].outputs
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    pub fn same_architecture(&self, other: &Network) -> bool {
        self.layers.len() == other.layers.len()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.inputs == b.inputs && a.outputs == b.outputs && a.activation == b.activation)
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let mut x = input.to_vec();
        let mut z = Vec::new();
        for layer in &self.layers {
            layer.affine(&x, &mut z);
            x.clear();
            x.extend(z.iter().map(|&v| layer.activation.apply(v)));
        }
        Ok(x)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::DimensionMismatch { expected: self.input_dim(), actual: input.len() });
        }
        Ok(())
    }

    /// Summed masked squared-error loss over `batch` and its exact gradient.
    pub fn loss_and_gradient(&self, batch: &[TargetSpec]) -> Result<(f64, Gradients)> {
        if batch.is_empty() {
            return Err(Error::InvalidConfig("empty training batch".into()));
        }
        let out_dim = self.output_dim();
        let mut grads = Gradients::zeros_like(self);
        let mut loss = 0.0;
        // pre[l] / post[l]: pre-activation and activation of layer l; post[0] is the input.
        let mut pre: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len()];
        let mut post: Vec<Vec<f64>> = vec![Vec::new(); self.layers.len() + 1];
        let mut upstream = vec![0.0; out_dim];
        let mut delta = Vec::new();

        for spec in batch {
            self.check_input(&spec.state)?;
            for &a in spec.zero_mask.iter().chain(std::iter::once(&spec.action)) {
                if a >= out_dim {
                    return Err(Error::DimensionMismatch { expected: out_dim, actual: a });
                }
            }
            if spec.zero_mask.contains(&spec.action) {
                return Err(Error::InvalidConfig(format!("zero mask contains the selected action {}", spec.action)));
            }

            post[0].clear();
            post[0].extend_from_slice(&spec.state);
            for (l, layer) in self.layers.iter().enumerate() {
                let (inputs, outputs) = post.split_at_mut(l + 1);
                layer.affine(&inputs[l], &mut pre[l]);
                outputs[0].clear();
                outputs[0].extend(pre[l].iter().map(|&v| layer.activation.apply(v)));
            }
            let q = &post[self.layers.len()];

            upstream.iter_mut().for_each(|g| *g = 0.0);
            let err = q[spec.action] - spec.target;
            loss += err * err;
            upstream[spec.action] = 2.0 * err;
            for &a in &spec.zero_mask {
                loss += q[a] * q[a];
                upstream[a] = 2.0 * q[a];
            }

            for (l, layer) in self.layers.iter().enumerate().rev() {
                delta.clear();
                delta.extend(upstream.iter().zip(&pre[l]).map(|(g, &z)| g * layer.activation.derivative(z)));
                let input = &post[l];
                let (gw, gb) = &mut grads.layers[l];
                for (o, &d) in delta.iter().enumerate() {
                    if d == 0.0 {
                        continue;
                    }
                    gb[o] += d;
                    let row = &mut gw[o * layer.inputs..(o + 1) * layer.inputs];
                    for (g, &x) in row.iter_mut().zip(input) {
                        *g += d * x;
                    }
                }
                if l > 0 {
                    upstream.clear();
                    upstream.resize(layer.inputs, 0.0);
                    for (o, &d) in delta.iter().enumerate() {
                        if d == 0.0 {
                            continue;
                        }
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (u, &w) in upstream.iter_mut().zip(row) {
                            *u += d * w;
                        }
                    }
                }
            }
            upstream.clear();
            upstream.resize(out_dim, 0.0);
        }
        Ok((loss, grads))
    }

    /// Overwrites this network's parameters with those of `src`.
    pub fn copy_from(&mut self, src: &Network) -> Result<()> {
        if !self.same_architecture(src) {
            return Err(Error::ArchitectureMismatch);
        }
        for (d, s) in self.layers.iter_mut().zip(&src.layers) {
            d.weights.copy_from_slice(&s.weights);
            d.bias.copy_from_slice(&s.bias);
        }
        Ok(())
    }

    /// Writes the text checkpoint format described in the README.
    pub fn save<W: Write>(&self, mut out: W) -> Result<()> {
        let mut s = String::new();
        writeln!(s, "{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}").unwrap();
        writeln!(s, "layers {}", self.layers.len()).unwrap();
        for l in &self.layers {
            writeln!(s, "layer {} {} {}", l.inputs, l.outputs, l.activation.name()).unwrap();
            write_values(&mut s, "w", &l.weights);
            write_values(&mut s, "b", &l.bias);
        }
        out.write_all(s.as_bytes())?;
        Ok(())
    }

    pub fn load<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let mut next = move || -> Result<String> {
            lines.next().ok_or_else(|| Error::Checkpoint("unexpected end of file".into()))?.map_err(Error::from)
        };
        let header = next()?;
        if header != format!("{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}") {
            return Err(Error::Checkpoint(format!("unrecognized header {header:?}")));
        }
        let count: usize = parse_tagged(&next()?, "layers")?;
        let mut layers = Vec::with_capacity(count);
        for _ in 0..count {
            let line = next()?;
            let parts: Vec<&str> = line.split_whitespace().collect();
            let [tag, inputs, outputs, act] = parts[..] else {
                return Err(Error::Checkpoint(format!("bad layer line {line:?}")));
            };
            if tag != "layer" {
                return Err(Error::Checkpoint(format!("bad layer line {line:?}")));
            }
            let inputs: usize = inputs.parse().map_err(|_| Error::Checkpoint(format!("bad size in {line:?}")))?;
            let outputs: usize = outputs.parse().map_err(|_| Error::Checkpoint(format!("bad size in {line:?}")))?;
            let act = Activation::parse(act).ok_or_else(|| Error::Checkpoint(format!("unknown activation {act:?}")))?;
            let weights = parse_values(&next()?, "w")?;
            let bias = parse_values(&next()?, "b")?;
            layers.push(Layer::new(inputs, outputs, weights, bias, act)?);
        }
        Self::from_layers(layers)
    }
}

const CHECKPOINT_MAGIC: &str = "bufrelay-network";
const CHECKPOINT_VERSION: u32 = 1;

fn write_values(s: &mut String, tag: &str, values: &[f64]) {
    s.push_str(tag);
    for v in values {
        // `{:e}` prints the shortest representation that parses back bit-exactly.
        write!(s, " {v:e}").unwrap();
    }
    s.push('\n');
}

fn parse_values(line: &str, tag: &str) -> Result<Vec<f64>> {
    let mut it = line.split_whitespace();
    if it.next() != Some(tag) {
        return Err(Error::Checkpoint(format!("expected {tag:?} line")));
    }
    it.map(|t| t.parse::<f64>().map_err(|_| Error::Checkpoint(format!("bad number {t:?}")))).collect()
}

fn parse_tagged(line: &str, tag: &str) -> Result<usize> {
    match line.split_whitespace().collect::<Vec<_>>()[..] {
        [t, n] if t == tag => n.parse().map_err(|_| Error::Checkpoint(format!("bad count in {line:?}"))),
        _ => Err(Error::Checkpoint(format!("expected {tag:?} line, got {line:?}"))),
    }
}

/// Copies `src` parameters into `dst`; the two stay independent afterwards.
pub fn copy_into(src: &Network, dst: &mut Network) -> Result<()> {
    dst.copy_from(src)
}

/// Bias-corrected Adam moment estimates.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<(Vec<f64>, Vec<f64>)>,
    v: Vec<(Vec<f64>, Vec<f64>)>,
    step: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl AdamState {
    pub fn new(net: &Network) -> Self {
        let zeros = Gradients::zeros_like(net).layers;
        Self { m: zeros.clone(), v: zeros, step: 0, beta1: 0.9, beta2: 0.999, eps: 1e-8 }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// Applies one Adam update with base step size `lr`.
pub fn adam_step(net: &mut Network, grads: &Gradients, opt: &mut AdamState, lr: f64) -> Result<()> {
    if grads.layers.len() != net.layers.len() || opt.m.len() != net.layers.len() {
        return Err(Error::ArchitectureMismatch);
    }
    for ((l, (gw, gb)), (mw, mb)) in net.layers.iter().zip(&grads.layers).zip(&opt.m) {
        if gw.len() != l.weights.len() || gb.len() != l.bias.len() || mw.len() != l.weights.len() || mb.len() != l.bias.len() {
            return Err(Error::ArchitectureMismatch);
        }
    }
    opt.step += 1;
    let t = opt.step as i32;
    let (b1, b2, eps) = (opt.beta1, opt.beta2, opt.eps);
    let c1 = 1.0 - b1.powi(t);
    let c2 = 1.0 - b2.powi(t);
    let update = |p: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
        for (((p, &g), m), v) in p.iter_mut().zip(g).zip(m.iter_mut()).zip(v.iter_mut()) {
            *m = b1 * *m + (1.0 - b1) * g;
            *v = b2 * *v + (1.0 - b2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    };
    for (((layer, (gw, gb)), (mw, mb)), (vw, vb)) in
        net.layers.iter_mut().zip(&grads.layers).zip(opt.m.iter_mut()).zip(opt.v.iter_mut())
    {
        update(&mut layer.weights, gw, mw, vw);
        update(&mut layer.bias, gb, mb, vb);
    }
    Ok(())
}
