use super::mlp::{Dense, Gradients, Mlp};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Moment estimates mirroring the network's parameter shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    first: Vec<Dense>,
    second: Vec<Dense>,
    step: u64,
}

impl AdamState {
    pub fn new(net: &Mlp, config: AdamConfig) -> Self {
        let zeros = || {
            net.layers()
                .iter()
                .map(|l| Dense::zeros(l.inputs, l.outputs))
                .collect::<Vec<_>>()
        };
        Self {
            config,
            first: zeros(),
            second: zeros(),
            step: 0,
        }
    }

    pub fn step(&self) -> u64 {
        self.step
    }
}

fn update(param: &mut [f64], grad: &[f64], m: &mut [f64], v: &mut [f64], c: &AdamConfig, bc1: f64, bc2: f64) {
    for i in 0..param.len() {
        let g = grad[i];
        m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
        v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
        let m_hat = m[i] / bc1;
        let v_hat = v[i] / bc2;
        param[i] -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
    }
}

/// One bias-corrected Adam update of every parameter.
pub fn adam_step(net: &mut Mlp, grads: &Gradients, state: &mut AdamState) -> Result<()> {
    net.check_same_shape(&grads.layers)?;
    net.check_same_shape(&state.first)?;
    state.step += 1;
    let c = state.config;
    let t = state.step as i32;
    let bc1 = 1.0 - c.beta1.powi(t);
    let bc2 = 1.0 - c.beta2.powi(t);
    for (((layer, g), m), v) in net
        .layers_mut()
        .iter_mut()
        .zip(&grads.layers)
        .zip(&mut state.first)
        .zip(&mut state.second)
    {
        update(&mut layer.weights, &g.weights, &mut m.weights, &mut v.weights, &c, bc1, bc2);
        update(&mut layer.biases, &g.biases, &mut m.biases, &mut v.biases, &c, bc1, bc2);
    }
    net.record_step();
    Ok(())
}
