//! Independent reference implementations used by the integration tests.
#![allow(dead_code, clippy::needless_range_loop)]

use modemlab::nn::{Dense, Mlp};

/// Disc-GAM points straight from the closed form, with no phase wrapping.
pub fn gam_points(k1: u32, power: f64) -> Vec<(f64, f64)> {
    let m_total = (1u64 << k1) as f64;
    let theta = (3.0 - 5f64.sqrt()) / 2.0;
    (1..=(1u64 << k1))
        .map(|m| {
            let m = m as f64;
            let r = (2.0 * power * m / (m_total + 1.0)).sqrt();
            let phi = 2.0 * std::f64::consts::PI * theta * m;
            (r * phi.cos(), r * phi.sin())
        })
        .collect()
}

/// Index bits, most significant first.
pub fn bits_of(index: usize, k: usize) -> Vec<u8> {
    (0..k).map(|j| ((index >> (k - 1 - j)) & 1) as u8).collect()
}

/// Exhaustive minimum distance; the first minimum wins.
pub fn brute_force_nearest(y: &[f64], candidates: &[Vec<f64>]) -> usize {
    let mut best = (f64::INFINITY, 0);
    for (i, c) in candidates.iter().enumerate() {
        let d: f64 = y.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum();
        if d < best.0 {
            best = (d, i);
        }
    }
    best.1
}

/// Demod candidates: each symbol repeated over `n1` complex samples, interleaved.
pub fn demod_candidates(k1: u32, power: f64, n1: usize) -> Vec<Vec<f64>> {
    gam_points(k1, power)
        .into_iter()
        .map(|(re, im)| (0..n1).flat_map(|_| [re, im]).collect())
        .collect()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Mean squared error of a plain layer-by-layer forward pass.
pub fn naive_loss(layers: &[Dense], sigmoid_out: bool, xs: &[f64], targets: &[f64], n: usize) -> f64 {
    let d_in = layers[0].inputs;
    let d_out = layers.last().unwrap().outputs;
    let mut total = 0.0;
    for s in 0..n {
        let mut a: Vec<f64> = xs[s * d_in..(s + 1) * d_in].to_vec();
        for (li, l) in layers.iter().enumerate() {
            let mut z = vec![0.0; l.outputs];
            for o in 0..l.outputs {
                let mut acc = l.biases[o];
                for i in 0..l.inputs {
                    acc += l.weights[o * l.inputs + i] * a[i];
                }
                z[o] = if li + 1 < layers.len() {
                    acc.max(0.0)
                } else if sigmoid_out {
                    sigmoid(acc)
                } else {
                    acc
                };
            }
            a = z;
        }
        for o in 0..d_out {
            let e = a[o] - targets[s * d_out + o];
            total += e * e;
        }
    }
    total / (n * d_out) as f64
}

/// Smallest |pre-activation| over the hidden units for a batch; a finite
/// difference step across a ReLU kink is not a meaningful derivative.
pub fn min_hidden_margin(layers: &[Dense], xs: &[f64], n: usize) -> f64 {
    let d_in = layers[0].inputs;
    let mut margin = f64::INFINITY;
    for s in 0..n {
        let mut a: Vec<f64> = xs[s * d_in..(s + 1) * d_in].to_vec();
        for l in &layers[..layers.len() - 1] {
            let z: Vec<f64> = (0..l.outputs)
                .map(|o| l.biases[o] + (0..l.inputs).map(|i| l.weights[o * l.inputs + i] * a[i]).sum::<f64>())
                .collect();
            margin = z.iter().fold(margin, |m, v| m.min(v.abs()));
            a = z.into_iter().map(|v| v.max(0.0)).collect();
        }
    }
    margin
}

/// Largest relative error between `backward` and central differences of
/// [`naive_loss`] over every weight and bias.
pub fn max_gradient_error(net: &Mlp, sigmoid_out: bool, xs: &[f64], targets: &[f64], n: usize, h: f64) -> f64 {
    let (_, grads) = net.backward(xs, targets, n).unwrap();
    let mut layers: Vec<Dense> = net.layers().to_vec();
    let mut worst: f64 = 0.0;
    let mut compare = |analytic: f64, numeric: f64| {
        let denom = analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max((analytic - numeric).abs() / denom);
    };
    for li in 0..layers.len() {
        for wi in 0..layers[li].weights.len() {
            let orig = layers[li].weights[wi];
            layers[li].weights[wi] = orig + h;
            let up = naive_loss(&layers, sigmoid_out, xs, targets, n);
            layers[li].weights[wi] = orig - h;
            let down = naive_loss(&layers, sigmoid_out, xs, targets, n);
            layers[li].weights[wi] = orig;
            compare(grads.layers[li].weights[wi], (up - down) / (2.0 * h));
        }
        for bi in 0..layers[li].biases.len() {
            let orig = layers[li].biases[bi];
            layers[li].biases[bi] = orig + h;
            let up = naive_loss(&layers, sigmoid_out, xs, targets, n);
            layers[li].biases[bi] = orig - h;
            let down = naive_loss(&layers, sigmoid_out, xs, targets, n);
            layers[li].biases[bi] = orig;
            compare(grads.layers[li].biases[bi], (up - down) / (2.0 * h));
        }
    }
    worst
}
