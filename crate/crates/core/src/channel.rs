//! AWGN channels, rectangular oversampling and Eb/N0 calibration.
//!
//! Calibration contract:
//! - demodulation (complex samples): `Eb = n1 P1 / k1`, `N0 = sigma1^2` per
//!   complex sample, so `sigma1^2 = n1 P1 / (k1 10^(EbN0/10))`.
//! - decoding (real samples): `Eb = n2 P2 / k2`, `N0 = 2 sigma2^2`, so
//!   `sigma2^2 = n2 P2 / (2 k2 10^(EbN0/10))`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::rng::{GaussianRng, Purpose};

/// Header text describing the demodulation calibration.
pub const DEMOD_CALIBRATION: &str = "sigma1^2 = n1*P1/(k1*10^(EbN0_dB/10)) per complex sample (CSCG)";
/// Header text describing the decoding calibration.
pub const DECODE_CALIBRATION: &str = "sigma2^2 = n2*P2/(2*k2*10^(EbN0_dB/10)) per real sample";

/// Eb/N0 in dB. `+inf` is accepted and means a noise-free channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SnrSpec {
    eb_n0_db: f64,
}

impl SnrSpec {
    pub fn new(eb_n0_db: f64) -> Result<Self> {
        if eb_n0_db.is_nan() || eb_n0_db == f64::NEG_INFINITY {
            return Err(Error::domain(format!("Eb/N0 of {eb_n0_db} dB is not usable")));
        }
        Ok(Self { eb_n0_db })
    }

    pub fn noiseless() -> Self {
        Self {
            eb_n0_db: f64::INFINITY,
        }
    }

    pub fn db(&self) -> f64 {
        self.eb_n0_db
    }

    pub fn is_noiseless(&self) -> bool {
        self.eb_n0_db == f64::INFINITY
    }

    /// `10^(dB / 10)`.
    pub fn linear(&self) -> f64 {
        10f64.powf(self.eb_n0_db / 10.0)
    }
}

fn check_dims(k: usize, n: usize, power: f64) -> Result<()> {
    if k == 0 || n == 0 {
        return Err(Error::domain("bit count and sample count must be positive"));
    }
    if !(power > 0.0 && power.is_finite()) {
        return Err(Error::domain(format!("power must be positive, got {power}")));
    }
    Ok(())
}

/// Per-complex-sample noise variance for the oversampled GAM link.
pub fn sigma2_for_demod(snr: SnrSpec, k1: usize, n1: usize, power: f64) -> Result<f64> {
    check_dims(k1, n1, power)?;
    Ok(n1 as f64 * power / (k1 as f64 * snr.linear()))
}

/// Per-real-sample noise variance for the Gaussian-codebook link.
pub fn sigma2_for_decode(snr: SnrSpec, k2: usize, n2: usize, power: f64) -> Result<f64> {
    check_dims(k2, n2, power)?;
    Ok(n2 as f64 * power / (2.0 * k2 as f64 * snr.linear()))
}

/// Rectangular pulse: the symbol repeated `n1` times.
pub fn oversample(symbol: Complex64, n1: usize) -> Result<Vec<Complex64>> {
    if n1 == 0 {
        return Err(Error::domain("oversampling factor must be at least 1"));
    }
    Ok(vec![symbol; n1])
}

/// Splits complex samples into `(re, im)` pairs, the real feature layout used
/// by both detectors.
pub fn interleave(x: &[Complex64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * x.len());
    interleave_into(x, &mut out);
    out
}

pub fn interleave_into(x: &[Complex64], out: &mut Vec<f64>) {
    out.extend(x.iter().flat_map(|c| [c.re, c.im]));
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseDomain {
    /// Circularly symmetric complex Gaussian; `sigma^2` is per complex sample.
    ComplexCscg,
    RealGaussian,
}

/// A seeded noise source of fixed variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseRealization {
    pub seed: u64,
    pub sigma2: f64,
    pub domain: NoiseDomain,
}

impl NoiseRealization {
    /// A zero variance is accepted and yields a pass-through channel.
    pub fn new(seed: u64, sigma2: f64, domain: NoiseDomain) -> Result<Self> {
        if !(sigma2 >= 0.0 && sigma2.is_finite()) {
            return Err(Error::domain(format!("noise variance must be >= 0, got {sigma2}")));
        }
        Ok(Self {
            seed,
            sigma2,
            domain,
        })
    }

    fn rng(&self) -> GaussianRng {
        GaussianRng::for_purpose(self.seed, Purpose::Channel, 0, 0)
    }

    pub fn apply_complex(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if self.domain != NoiseDomain::ComplexCscg {
            return Err(Error::domain("real noise applied to complex samples"));
        }
        let mut y = x.to_vec();
        add_complex_noise(&mut y, self.sigma2, &mut self.rng());
        Ok(y)
    }

    pub fn apply_real(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.domain != NoiseDomain::RealGaussian {
            return Err(Error::domain("complex noise applied to real samples"));
        }
        let mut y = x.to_vec();
        add_real_noise(&mut y, self.sigma2, &mut self.rng());
        Ok(y)
    }
}

/// `y = x + nu`, `nu` CSCG with variance `sigma2` per complex sample.
pub fn add_awgn_complex(x: &[Complex64], sigma2: f64, seed: u64) -> Result<Vec<Complex64>> {
    NoiseRealization::new(seed, sigma2, NoiseDomain::ComplexCscg)?.apply_complex(x)
}

/// `y = x + nu`, `nu ~ N(0, sigma2 I)`.
pub fn add_awgn_real(x: &[f64], sigma2: f64, seed: u64) -> Result<Vec<f64>> {
    NoiseRealization::new(seed, sigma2, NoiseDomain::RealGaussian)?.apply_real(x)
}

/// In-place CSCG noise from a caller-owned stream. Each sample consumes one
/// Box-Muller pair, real part first.
#[inline]
pub fn add_complex_noise(x: &mut [Complex64], sigma2: f64, rng: &mut GaussianRng) {
    if sigma2 == 0.0 {
        return;
    }
    let sd = (sigma2 / 2.0).sqrt();
    for c in x {
        let (a, b) = rng.normal_pair();
        c.re += sd * a;
        c.im += sd * b;
    }
}

/// In-place CSCG noise on an interleaved `(re, im)` buffer. Consumes the
/// stream exactly like [`add_complex_noise`].
#[inline]
pub fn add_complex_noise_interleaved(x: &mut [f64], sigma2: f64, rng: &mut GaussianRng) {
    if sigma2 == 0.0 {
        return;
    }
    let sd = (sigma2 / 2.0).sqrt();
    for pair in x.chunks_exact_mut(2) {
        let (a, b) = rng.normal_pair();
        pair[0] += sd * a;
        pair[1] += sd * b;
    }
}

/// In-place real Gaussian noise from a caller-owned stream.
#[inline]
pub fn add_real_noise(x: &mut [f64], sigma2: f64, rng: &mut GaussianRng) {
    if sigma2 == 0.0 {
        return;
    }
    let sd = sigma2.sqrt();
    for v in x {
        *v += sd * rng.standard_normal();
    }
}
