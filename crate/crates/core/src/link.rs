//! A transmit chain for one task: labels to clean real features, plus the
//! calibrated noise that the channel adds to them.

use std::fmt;

use crate::channel::{
    add_complex_noise_interleaved, add_real_noise, sigma2_for_decode, sigma2_for_demod, SnrSpec,
};
use crate::codebook::GaussianCodebook;
use crate::error::{Error, Result};
use crate::gam::GamConstellation;
use crate::ml::CandidateSet;
use crate::rng::GaussianRng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Task {
    /// GAM symbols, oversampled, over a complex AWGN channel.
    Demod,
    /// Gaussian codewords over a real AWGN channel.
    Decode,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Demod => "demod",
            Task::Decode => "decode",
        }
    }

    pub fn from_name(s: &str) -> Result<Self> {
        match s {
            "demod" => Ok(Task::Demod),
            "decode" => Ok(Task::Decode),
            other => Err(Error::config(format!("unknown task `{other}` (demod | decode)"))),
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone)]
pub struct Link {
    task: Task,
    k: usize,
    /// Channel samples per message: `n1` (complex) or `n2` (real).
    n: usize,
    power: f64,
    candidates: CandidateSet,
}

impl Link {
    pub fn demod(c: &GamConstellation, n1: usize) -> Result<Self> {
        Ok(Self {
            task: Task::Demod,
            k: c.k1() as usize,
            n: n1,
            power: c.power(),
            candidates: CandidateSet::from_constellation(c, n1)?,
        })
    }

    pub fn decode(cb: &GaussianCodebook) -> Self {
        Self {
            task: Task::Decode,
            k: cb.k2() as usize,
            n: cb.n2(),
            power: cb.power(),
            candidates: CandidateSet::from_codebook(cb),
        }
    }

    pub fn task(&self) -> Task {
        self.task
    }

    /// Information bits per message.
    pub fn k(&self) -> usize {
        self.k
    }

    /// Channel samples per message (complex for demod, real for decode).
    pub fn samples(&self) -> usize {
        self.n
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    /// Real feature length seen by the detectors.
    pub fn feature_dim(&self) -> usize {
        self.candidates.dim()
    }

    pub fn messages(&self) -> usize {
        self.candidates.len()
    }

    pub fn candidates(&self) -> &CandidateSet {
        &self.candidates
    }

    /// Noise-free features of message `index`.
    pub fn clean(&self, index: usize) -> &[f64] {
        self.candidates.candidate(index)
    }

    /// Calibrated noise variance: per complex sample for demod, per real sample for decode.
    pub fn sigma2(&self, snr: SnrSpec) -> Result<f64> {
        match self.task {
            Task::Demod => sigma2_for_demod(snr, self.k, self.n, self.power),
            Task::Decode => sigma2_for_decode(snr, self.k, self.n, self.power),
        }
    }

    pub fn calibration(&self) -> &'static str {
        match self.task {
            Task::Demod => crate::channel::DEMOD_CALIBRATION,
            Task::Decode => crate::channel::DECODE_CALIBRATION,
        }
    }

    /// Adds channel noise of variance `sigma2` to a feature vector in place.
    #[inline]
    pub fn add_noise(&self, features: &mut [f64], sigma2: f64, rng: &mut GaussianRng) {
        match self.task {
            Task::Demod => add_complex_noise_interleaved(features, sigma2, rng),
            Task::Decode => add_real_noise(features, sigma2, rng),
        }
    }
}
