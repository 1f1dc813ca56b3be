use crate::bits::Bit;
use crate::error::{Error, Result};
use crate::rng::{GaussianRng, Purpose};

/// Nonlinearity of the final layer. Hidden layers always use ReLU.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Sigmoid,
    /// Identity output, for exercising backpropagation without saturation.
    Linear,
}

impl OutputActivation {
    pub fn name(&self) -> &'static str {
        match self {
            OutputActivation::Sigmoid => "sigmoid",
            OutputActivation::Linear => "linear",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sigmoid" => Ok(OutputActivation::Sigmoid),
            "linear" => Ok(OutputActivation::Linear),
            other => Err(Error::format(format!("unknown output activation `{other}`"))),
        }
    }
}

/// One fully connected layer, `out = W d + e` with `W` stored row-major
/// (`outputs x inputs`).
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl Dense {
    pub fn zeros(inputs: usize, outputs: usize) -> Self {
        Self {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            biases: vec![0.0; outputs],
        }
    }

    #[inline]
    pub fn row(&self, o: usize) -> &[f64] {
        &self.weights[o * self.inputs..(o + 1) * self.inputs]
    }

    fn same_shape(&self, other: &Dense) -> bool {
        self.inputs == other.inputs && self.outputs == other.outputs
    }

    fn is_finite(&self) -> bool {
        self.weights.iter().chain(&self.biases).all(|v| v.is_finite())
    }
}

/// Parameter-shaped gradient of the batch loss.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    pub fn zeros_like(net: &Mlp) -> Self {
        Self {
            layers: net.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect(),
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Fully connected feedforward network with ReLU hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    dims: Vec<usize>,
    output: OutputActivation,
    layers: Vec<Dense>,
    steps: u64,
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            acc[l] += x[l] * y[l];
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        tail += x * y;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

#[inline]
fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

impl Mlp {
    /// Network with every parameter zero. `dims` is `[input, hidden..., output]`.
    pub fn zeros(dims: &[usize], output: OutputActivation) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::domain(format!("invalid layer dims {dims:?}")));
        }
        Ok(Self {
            dims: dims.to_vec(),
            output,
            layers: dims.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect(),
            steps: 0,
        })
    }

    /// He-uniform weights `U(-sqrt(6/fan_in), sqrt(6/fan_in))`, zero biases,
    /// drawn from the [`Purpose::Init`] stream of `seed`.
    pub fn he_uniform(dims: &[usize], output: OutputActivation, seed: u64) -> Result<Self> {
        let mut net = Self::zeros(dims, output)?;
        let mut rng = GaussianRng::for_purpose(seed, Purpose::Init, 0, 0);
        for layer in &mut net.layers {
            let bound = (6.0 / layer.inputs as f64).sqrt();
            for w in &mut layer.weights {
                *w = rng.uniform_range(-bound, bound);
            }
        }
        Ok(net)
    }

    /// Rebuilds a network from explicit layers; consecutive shapes must chain.
    pub fn from_layers(layers: Vec<Dense>, output: OutputActivation, steps: u64) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::domain("network needs at least one layer"));
        }
        let mut dims = vec![layers[0].inputs];
        for l in &layers {
            if l.inputs != *dims.last().unwrap()
                || l.inputs == 0
                || l.outputs == 0
                || l.weights.len() != l.inputs * l.outputs
                || l.biases.len() != l.outputs
            {
                return Err(Error::domain("layer shapes do not chain"));
            }
            dims.push(l.outputs);
        }
        Ok(Self {
            dims,
            output,
            layers,
            steps,
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn hidden_dims(&self) -> &[usize] {
        &self.dims[1..self.dims.len() - 1]
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    /// Optimizer steps applied so far; zero means untrained.
    pub fn steps_trained(&self) -> u64 {
        self.steps
    }

    pub(crate) fn record_step(&mut self) {
        self.steps += 1;
    }

    pub fn param_count(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.biases.len()).sum()
    }

    /// Arithmetic operations of one forward pass, two per weight
    /// (multiply and add), matching the complexity-order expression.
    pub fn op_count(&self) -> u64 {
        self.layers.iter().map(|l| 2 * (l.inputs * l.outputs) as u64).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.layers.iter().all(Dense::is_finite)
    }

    /// Soft output in (0, 1) per bit (unbounded for the linear head).
    pub fn forward(&self, y: &[f64]) -> Result<Vec<f64>> {
        if y.len() != self.input_dim() {
            return Err(Error::domain(format!(
                "input has length {}, network expects {}",
                y.len(),
                self.input_dim()
            )));
        }
        Ok(self.forward_batch(y, 1))
    }

    /// Forward pass over `n` row-major inputs. `ys.len()` must be `n * input_dim`.
    pub fn forward_batch(&self, ys: &[f64], n: usize) -> Vec<f64> {
        let mut current = ys.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            current = self.apply_layer(i, layer, &current, n);
        }
        current
    }

    fn apply_layer(&self, index: usize, layer: &Dense, input: &[f64], n: usize) -> Vec<f64> {
        debug_assert_eq!(input.len(), n * layer.inputs);
        let last = index + 1 == self.layers.len();
        let mut out = vec![0.0; n * layer.outputs];
        for (x, z) in input
            .chunks_exact(layer.inputs)
            .zip(out.chunks_exact_mut(layer.outputs))
        {
            for (o, zo) in z.iter_mut().enumerate() {
                let pre = layer.biases[o] + dot(layer.row(o), x);
                *zo = if !last {
                    pre.max(0.0)
                } else {
                    match self.output {
                        OutputActivation::Sigmoid => sigmoid(pre),
                        OutputActivation::Linear => pre,
                    }
                };
            }
        }
        out
    }

    /// Forward then threshold: bit is 1 iff the soft output is >= 0.5.
    pub fn predict_bits(&self, y: &[f64]) -> Result<Vec<Bit>> {
        Ok(threshold_bits(&self.forward(y)?))
    }

    /// Batch loss and its exact gradient. `targets` holds `n * output_dim`
    /// values. The loss is the mean of squared errors over all samples and
    /// output components. The ReLU derivative at 0 is taken as 0.
    pub fn backward(&self, features: &[f64], targets: &[f64], n: usize) -> Result<(f64, Gradients)> {
        if n == 0 {
            return Err(Error::domain("empty batch"));
        }
        if features.len() != n * self.input_dim() || targets.len() != n * self.output_dim() {
            return Err(Error::domain("batch buffers do not match the network dims"));
        }
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(features.to_vec());
        for (i, layer) in self.layers.iter().enumerate() {
            let next = self.apply_layer(i, layer, acts.last().unwrap(), n);
            acts.push(next);
        }
        let pred = acts.last().unwrap();
        if pred.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: self.steps });
        }

        let scale = 1.0 / (n * self.output_dim()) as f64;
        let mut loss = 0.0;
        let mut delta: Vec<f64> = pred
            .iter()
            .zip(targets)
            .map(|(&p, &t)| {
                let r = p - t;
                loss += r * r;
                let d = 2.0 * r * scale;
                match self.output {
                    OutputActivation::Sigmoid => d * p * (1.0 - p),
                    OutputActivation::Linear => d,
                }
            })
            .collect();
        loss *= scale;

        let mut grads = Gradients::zeros_like(self);
        for li in (0..self.layers.len()).rev() {
            let layer = &self.layers[li];
            let input = &acts[li];
            let g = &mut grads.layers[li];
            for (x, d) in input
                .chunks_exact(layer.inputs)
                .zip(delta.chunks_exact(layer.outputs))
            {
                for (o, &dv) in d.iter().enumerate() {
                    if dv != 0.0 {
                        axpy(dv, x, &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs]);
                        g.biases[o] += dv;
                    }
                }
            }
            if li == 0 {
                break;
            }
            let mut prev = vec![0.0; n * layer.inputs];
            for ((p, d), x) in prev
                .chunks_exact_mut(layer.inputs)
                .zip(delta.chunks_exact(layer.outputs))
                .zip(input.chunks_exact(layer.inputs))
            {
                for (o, &dv) in d.iter().enumerate() {
                    if dv != 0.0 {
                        axpy(dv, layer.row(o), p);
                    }
                }
                // Input of this layer is a ReLU output: gate by its sign.
                for (pv, &xv) in p.iter_mut().zip(x) {
                    if xv <= 0.0 {
                        *pv = 0.0;
                    }
                }
            }
            delta = prev;
        }
        Ok((loss, grads))
    }

    pub(crate) fn check_same_shape(&self, grads: &[Dense]) -> Result<()> {
        if grads.len() != self.layers.len()
            || self.layers.iter().zip(grads).any(|(a, b)| !a.same_shape(b))
        {
            return Err(Error::domain("gradient shapes do not match the network"));
        }
        Ok(())
    }
}

/// Hard decisions on soft outputs; exactly 0.5 maps to 1.
pub fn threshold_bits(soft: &[f64]) -> Vec<Bit> {
    soft.iter().map(|&v| Bit::from(v >= 0.5)).collect()
}

/// Mean squared error between soft outputs and bit targets.
pub fn mse_loss(soft: &[f64], bits: &[Bit]) -> Result<f64> {
    if soft.len() != bits.len() || soft.is_empty() {
        return Err(Error::domain("soft output and bit vector lengths differ"));
    }
    Ok(soft
        .iter()
        .zip(bits)
        .map(|(&s, &b)| (f64::from(b) - s).powi(2))
        .sum::<f64>()
        / soft.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_outputs_half() {
        let net = Mlp::zeros(&[5, 7, 3], OutputActivation::Sigmoid).unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0, 0.5, 9.0]).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn identity_layer_on_zero_input() {
        let mut layer = Dense::zeros(3, 3);
        for i in 0..3 {
            layer.weights[i * 3 + i] = 1.0;
        }
        let net = Mlp::from_layers(vec![layer], OutputActivation::Sigmoid, 0).unwrap();
        assert_eq!(net.forward(&[0.0; 3]).unwrap(), vec![0.5; 3]);
    }

    #[test]
    fn forward_is_deterministic() {
        let net = Mlp::he_uniform(&[6, 16, 8, 3], OutputActivation::Sigmoid, 12).unwrap();
        let y = [0.3, -1.0, 2.0, 0.0, 0.7, -0.2];
        let a = net.forward(&y).unwrap();
        let b = net.forward(&y).unwrap();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| *v > 0.0 && *v < 1.0));
        assert!(net.forward(&y[..5]).is_err());
    }

    #[test]
    fn mse_examples() {
        assert_eq!(mse_loss(&[1.0, 0.0], &[1, 0]).unwrap(), 0.0);
        assert_eq!(mse_loss(&[0.5, 0.5], &[1, 0]).unwrap(), 0.25);
        assert_eq!(mse_loss(&[0.0], &[1]).unwrap(), 1.0);
        assert!(mse_loss(&[0.0], &[1, 0]).is_err());
    }

    #[test]
    fn thresholding() {
        assert_eq!(threshold_bits(&[0.9, 0.1]), vec![1, 0]);
        assert_eq!(threshold_bits(&[0.5, 0.5]), vec![1, 1]);
    }

    #[test]
    fn op_count_sums_layer_products() {
        let net = Mlp::zeros(&[20, 128, 64, 2], OutputActivation::Sigmoid).unwrap();
        assert_eq!(net.op_count(), 2 * (20 * 128 + 128 * 64 + 64 * 2));
        assert_eq!(net.param_count(), 20 * 128 + 128 + 128 * 64 + 64 + 64 * 2 + 2);
    }

    #[test]
    fn linear_head_with_exact_targets_has_zero_gradient() {
        let net = Mlp::he_uniform(&[3, 5, 2], OutputActivation::Linear, 4).unwrap();
        let x = [0.2, -0.4, 1.1, 0.9, 0.0, -0.3];
        let targets = net.forward_batch(&x, 2);
        let (loss, grads) = net.backward(&x, &targets, 2).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(grads.max_abs(), 0.0);
    }

    #[test]
    fn duplicating_the_batch_leaves_gradient_unchanged() {
        let net = Mlp::he_uniform(&[4, 8, 4, 2], OutputActivation::Sigmoid, 7).unwrap();
        let x = [0.1, 0.5, -0.3, 1.2, -0.7, 0.2, 0.9, 0.0];
        let t = [1.0, 0.0, 0.0, 1.0];
        let (l1, g1) = net.backward(&x, &t, 2).unwrap();
        let x2 = [&x[..], &x[..]].concat();
        let t2 = [&t[..], &t[..]].concat();
        let (l2, g2) = net.backward(&x2, &t2, 4).unwrap();
        assert!((l1 - l2).abs() < 1e-15);
        for (a, b) in g1.layers.iter().zip(&g2.layers) {
            for (u, v) in a.weights.iter().chain(&a.biases).zip(b.weights.iter().chain(&b.biases)) {
                assert!((u - v).abs() <= 1e-15 * u.abs().max(1e-300) + 1e-18);
            }
        }
    }

    #[test]
    fn non_finite_output_is_divergence() {
        let mut net = Mlp::zeros(&[1, 1], OutputActivation::Linear).unwrap();
        net.layers_mut()[0].weights[0] = f64::NAN;
        assert!(matches!(
            net.backward(&[1.0], &[0.0], 1),
            Err(Error::Divergence { .. })
        ));
    }

    #[test]
    fn from_layers_rejects_broken_chain() {
        let layers = vec![Dense::zeros(3, 4), Dense::zeros(5, 2)];
        assert!(Mlp::from_layers(layers, OutputActivation::Sigmoid, 0).is_err());
    }
}
