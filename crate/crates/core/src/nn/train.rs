use super::adam::{adam_step, AdamConfig, AdamState};
use super::mlp::Mlp;
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::{GaussianRng, Purpose};

/// Shuffle streams for epochs live under this major index of [`Purpose::Shuffle`].
const EPOCH_SHUFFLE_MAJOR: u64 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub batch_size: usize,
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Seeds the per-epoch shuffles.
    pub seed: u64,
    /// Training samples generated per message index.
    pub samples_per_index: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            batch_size: 256,
            epochs: 10,
            adam: AdamConfig::default(),
            seed: 0,
            samples_per_index: 1 << 14,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    /// Mean batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
    pub steps: u64,
}

/// Mini-batch Adam on the MSE loss. Each epoch visits the rows in a fresh
/// seeded permutation; the last batch may be short.
pub fn train(net: &mut Mlp, data: &Dataset, cfg: &TrainConfig) -> Result<TrainReport> {
    if cfg.batch_size == 0 {
        return Err(Error::config("batch size must be at least 1"));
    }
    if data.input_dim != net.input_dim() || data.bits != net.output_dim() {
        return Err(Error::domain(format!(
            "dataset is {}->{}, network is {}->{}",
            data.input_dim,
            data.bits,
            net.input_dim(),
            net.output_dim()
        )));
    }
    let rows = data.rows();
    if rows == 0 {
        return Err(Error::domain("empty dataset"));
    }
    let (din, dout) = (data.input_dim, data.bits);
    let mut state = AdamState::new(net, cfg.adam);
    let mut order: Vec<usize> = (0..rows).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    let mut xb = Vec::with_capacity(cfg.batch_size * din);
    let mut tb = Vec::with_capacity(cfg.batch_size * dout);
    let mut step = 0u64;

    for epoch in 0..cfg.epochs {
        GaussianRng::for_purpose(cfg.seed, Purpose::Shuffle, EPOCH_SHUFFLE_MAJOR, epoch as u64)
            .shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_size) {
            xb.clear();
            tb.clear();
            for &r in batch {
                xb.extend_from_slice(data.feature_row(r));
                tb.extend(data.label_row(r).iter().map(|&b| f64::from(b)));
            }
            let (loss, grads) = net.backward(&xb, &tb, batch.len()).map_err(|e| match e {
                Error::Divergence { .. } => Error::Divergence { step },
                other => other,
            })?;
            if !loss.is_finite() {
                return Err(Error::Divergence { step });
            }
            adam_step(net, &grads, &mut state)?;
            if !net.all_finite() {
                return Err(Error::Divergence { step });
            }
            loss_sum += loss;
            batches += 1;
            step += 1;
        }
        epoch_losses.push(loss_sum / batches as f64);
    }
    Ok(TrainReport {
        epoch_losses,
        steps: step,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Split;
    use crate::link::Task;
    use crate::nn::OutputActivation;

    fn repeated_pair(rows: usize) -> Dataset {
        let x = [0.4, -1.2, 0.8];
        Dataset {
            task: Task::Decode,
            split: Split::Train,
            input_dim: 3,
            bits: 2,
            eb_n0_db: None,
            seed: 0,
            per_index: rows,
            features: x.repeat(rows),
            labels: [1u8, 0].repeat(rows),
        }
    }

    #[test]
    fn memorizes_a_single_pair() {
        let data = repeated_pair(64);
        let mut net = Mlp::he_uniform(&[3, 16, 2], OutputActivation::Sigmoid, 3).unwrap();
        let cfg = TrainConfig {
            batch_size: 16,
            epochs: 60,
            adam: AdamConfig {
                learning_rate: 1e-2,
                ..AdamConfig::default()
            },
            ..TrainConfig::default()
        };
        let report = train(&mut net, &data, &cfg).unwrap();
        let l = &report.epoch_losses;
        assert!(l.last().unwrap() < &1e-3, "{l:?}");
        // Downward trend: each tenth of training ends lower than it started.
        for w in l.chunks(10) {
            assert!(w.last().unwrap() <= w.first().unwrap());
        }
        assert_eq!(net.predict_bits(&[0.4, -1.2, 0.8]).unwrap(), vec![1, 0]);
    }

    #[test]
    fn zero_epochs_leave_parameters_unchanged() {
        let data = repeated_pair(8);
        let mut net = Mlp::he_uniform(&[3, 4, 2], OutputActivation::Sigmoid, 3).unwrap();
        let before = net.clone();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let report = train(&mut net, &data, &cfg).unwrap();
        assert!(report.epoch_losses.is_empty());
        assert_eq!(net, before);
    }

    #[test]
    fn identical_seeds_give_identical_parameters() {
        let data = repeated_pair(40);
        let cfg = TrainConfig {
            batch_size: 7,
            epochs: 3,
            seed: 5,
            ..TrainConfig::default()
        };
        let mut a = Mlp::he_uniform(&[3, 8, 2], OutputActivation::Sigmoid, 1).unwrap();
        let mut b = a.clone();
        train(&mut a, &data, &cfg).unwrap();
        train(&mut b, &data, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.steps_trained(), 3 * 6);
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let data = repeated_pair(4);
        let mut net = Mlp::he_uniform(&[4, 4, 2], OutputActivation::Sigmoid, 1).unwrap();
        assert!(matches!(train(&mut net, &data, &TrainConfig::default()), Err(Error::Domain(_))));
    }

    #[test]
    fn divergence_reports_step() {
        let data = repeated_pair(4);
        let mut net = Mlp::he_uniform(&[3, 4, 2], OutputActivation::Linear, 1).unwrap();
        net.layers_mut()[1].biases[0] = f64::INFINITY;
        let err = train(&mut net, &data, &TrainConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Divergence { step: 0 }), "{err:?}");
    }
}
