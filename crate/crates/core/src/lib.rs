//! Golden-angle-modulation demodulation and Gaussian-codebook decoding lab.
//!
//! Builds disc-GAM constellations and random Gaussian codebooks, passes them
//! through calibrated AWGN channels, and compares exhaustive
//! maximum-likelihood detection with a trained feedforward network on bit
//! error rate and per-query cost.

pub mod bits;
pub mod channel;
pub mod cli;
pub mod codebook;
pub mod dataset;
pub mod error;
pub mod evaluation;
pub mod gam;
pub mod link;
pub mod ml;
pub mod nn;
pub mod rng;

pub use bits::Bit;
pub use channel::SnrSpec;
pub use codebook::GaussianCodebook;
pub use dataset::{Dataset, Split};
pub use error::{Error, Result};
pub use evaluation::{BerReport, Detector, NeuralDetector, TimingReport};
pub use gam::GamConstellation;
pub use link::{Link, Task};
pub use ml::{ml_detect, CandidateSet};
pub use nn::{Mlp, TrainConfig};
