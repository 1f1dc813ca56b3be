//! Bit-error-rate sweeps, per-query timing and complexity counters.

use std::hint::black_box;
use std::io::Write;
use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bits::{hamming, write_index_bits, Bit};
use crate::channel::SnrSpec;
use crate::error::{Error, Result};
use crate::link::{Link, Task};
use crate::ml::CandidateSet;
use crate::nn::{threshold_bits, Mlp};
use crate::rng::{GaussianRng, Purpose};

/// Anything that turns a received feature vector into hard bits.
pub trait Detector: Sync {
    /// `"ML"`, `"NN"`, ...
    fn tag(&self) -> &str;
    fn input_dim(&self) -> usize;
    fn bits(&self) -> usize;
    /// `y.len() == input_dim()`, `out.len() == bits()`.
    fn detect_into(&self, y: &[f64], out: &mut [Bit]);

    /// Row-major batch version of [`detect_into`](Self::detect_into).
    fn detect_batch(&self, ys: &[f64], out: &mut [Bit]) {
        for (y, o) in ys.chunks_exact(self.input_dim()).zip(out.chunks_exact_mut(self.bits())) {
            self.detect_into(y, o);
        }
    }

    /// Forward-pass operation count, for network detectors.
    fn mac_count(&self) -> Option<u64> {
        None
    }

    /// Number of distances evaluated per query, for exhaustive detectors.
    fn ml_candidates(&self) -> Option<usize> {
        None
    }
}

impl Detector for CandidateSet {
    fn tag(&self) -> &str {
        "ML"
    }

    fn input_dim(&self) -> usize {
        self.dim()
    }

    fn bits(&self) -> usize {
        self.bits_per_label()
    }

    #[inline]
    fn detect_into(&self, y: &[f64], out: &mut [Bit]) {
        out.copy_from_slice(self.label(self.nearest_unchecked(y)));
    }

    fn ml_candidates(&self) -> Option<usize> {
        Some(self.len())
    }
}

/// A trained network used as a detector.
#[derive(Debug, Clone, Copy)]
pub struct NeuralDetector<'a> {
    net: &'a Mlp,
}

impl<'a> NeuralDetector<'a> {
    /// Refuses networks that never took an optimizer step.
    pub fn new(net: &'a Mlp) -> Result<Self> {
        if net.steps_trained() == 0 {
            return Err(Error::config("network is untrained"));
        }
        Ok(Self { net })
    }

    /// Skips the trained check; for timing the forward pass only.
    pub fn unchecked(net: &'a Mlp) -> Self {
        Self { net }
    }
}

impl Detector for NeuralDetector<'_> {
    fn tag(&self) -> &str {
        "NN"
    }

    fn input_dim(&self) -> usize {
        self.net.input_dim()
    }

    fn bits(&self) -> usize {
        self.net.output_dim()
    }

    fn detect_into(&self, y: &[f64], out: &mut [Bit]) {
        let soft = self.net.forward_batch(y, 1);
        out.copy_from_slice(&threshold_bits(&soft));
    }

    fn detect_batch(&self, ys: &[f64], out: &mut [Bit]) {
        let n = ys.len() / self.net.input_dim();
        let soft = self.net.forward_batch(ys, n);
        for (o, s) in out.iter_mut().zip(soft) {
            *o = Bit::from(s >= 0.5);
        }
    }

    fn mac_count(&self) -> Option<u64> {
        Some(self.net.op_count())
    }
}

/// Outputs all-zero bits without looking at the input; times harness overhead.
#[derive(Debug, Clone, Copy)]
pub struct NoopDetector {
    pub input_dim: usize,
    pub bits: usize,
}

impl Detector for NoopDetector {
    fn tag(&self) -> &str {
        "noop"
    }

    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn bits(&self) -> usize {
        self.bits
    }

    fn detect_into(&self, y: &[f64], out: &mut [Bit]) {
        black_box(y);
        out.fill(0);
    }
}

/// Fraction of differing positions.
pub fn ber(b_hat: &[Bit], b: &[Bit]) -> Result<f64> {
    if b_hat.len() != b.len() || b.is_empty() {
        return Err(Error::domain("bit vectors must be nonempty and equally long"));
    }
    Ok(hamming(b_hat, b) as f64 / b.len() as f64)
}

/// 95% Wilson score interval for `errors` out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let z = 1.959_963_984_540_054;
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if errors == 0 { 0.0 } else { (center - half).max(0.0) };
    let hi = if errors == trials { 1.0 } else { (center + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSettings {
    /// Hard cap on queries per SNR point.
    pub max_trials: u64,
    /// A point never stops before this many queries.
    pub min_trials: u64,
    /// Stop a point once this many bit errors are seen (and `min_trials` reached).
    pub target_errors: u64,
    /// Queries per noise stream; also the early-stop granularity.
    pub chunk: usize,
}

impl Default for SweepSettings {
    fn default() -> Self {
        Self {
            max_trials: 200_000,
            min_trials: 10_000,
            target_errors: 100,
            chunk: 1024,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub eb_n0_db: f64,
    pub sigma2: f64,
    pub trials: u64,
    pub errors: u64,
    pub bits: u64,
    pub ber: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerReport {
    pub task: Task,
    pub detector: String,
    pub k: usize,
    pub points: Vec<BerPoint>,
}

const CHUNKS_PER_ROUND: usize = 8;

/// Monte Carlo BER at each SNR. Queries carry uniformly drawn messages and
/// fresh noise; chunk `c` of point `p` draws from stream `(Sweep, p, c)`, so
/// two detectors swept with the same seed see identical channel outputs.
pub fn ber_sweep(
    det: &dyn Detector,
    link: &Link,
    snrs: &[SnrSpec],
    settings: &SweepSettings,
    seed: u64,
) -> Result<BerReport> {
    if settings.max_trials == 0 || settings.chunk == 0 {
        return Err(Error::config("trials per point and chunk size must be at least 1"));
    }
    if det.input_dim() != link.feature_dim() || det.bits() != link.k() {
        return Err(Error::config(format!(
            "{} detector is {}->{}, link is {}->{}",
            det.tag(),
            det.input_dim(),
            det.bits(),
            link.feature_dim(),
            link.k()
        )));
    }
    let points = snrs
        .iter()
        .enumerate()
        .map(|(p, &snr)| sweep_point(det, link, snr, p as u64, settings, seed))
        .collect::<Result<Vec<_>>>()?;
    Ok(BerReport {
        task: link.task(),
        detector: det.tag().to_string(),
        k: link.k(),
        points,
    })
}

/// One SNR point of [`ber_sweep`]; `point` selects the noise streams, so a
/// point swept alone matches the same point of a full sweep.
pub fn sweep_point(
    det: &dyn Detector,
    link: &Link,
    snr: SnrSpec,
    point: u64,
    settings: &SweepSettings,
    seed: u64,
) -> Result<BerPoint> {
    if settings.max_trials == 0 || settings.chunk == 0 {
        return Err(Error::config("trials per point and chunk size must be at least 1"));
    }
    let chunk = settings.chunk as u64;
    let total_chunks = settings.max_trials.div_ceil(chunk);
    let sigma2 = link.sigma2(snr)?;
    let (mut trials, mut errors) = (0u64, 0u64);
    let mut next = 0u64;
    'point: while next < total_chunks {
        let round: Vec<u64> = (next..(next + CHUNKS_PER_ROUND as u64).min(total_chunks)).collect();
        let results: Vec<(u64, u64)> = round
            .par_iter()
            .map(|&c| {
                let count = chunk.min(settings.max_trials - c * chunk) as usize;
                (count as u64, run_chunk(det, link, sigma2, count, seed, point, c))
            })
            .collect();
        for (count, e) in results {
            trials += count;
            errors += e;
            next += 1;
            if errors >= settings.target_errors && trials >= settings.min_trials {
                break 'point;
            }
        }
    }
    let bits = trials * link.k() as u64;
    let (ci_lo, ci_hi) = wilson_interval(errors, bits);
    Ok(BerPoint {
        eb_n0_db: snr.db(),
        sigma2,
        trials,
        errors,
        bits,
        ber: errors as f64 / bits as f64,
        ci_lo,
        ci_hi,
    })
}

fn run_chunk(det: &dyn Detector, link: &Link, sigma2: f64, count: usize, seed: u64, point: u64, chunk: u64) -> u64 {
    let mut rng = GaussianRng::for_purpose(seed, Purpose::Sweep, point, chunk);
    let (dim, k) = (link.feature_dim(), link.k());
    let mut features = Vec::with_capacity(count * dim);
    let mut truth = vec![0; count * k];
    for t in 0..count {
        let label = rng.below(link.messages() as u64) as usize;
        write_index_bits(label, &mut truth[t * k..(t + 1) * k]);
        let start = features.len();
        features.extend_from_slice(link.clean(label));
        link.add_noise(&mut features[start..], sigma2, &mut rng);
    }
    let mut decided = vec![0; count * k];
    det.detect_batch(&features, &mut decided);
    hamming(&decided, &truth) as u64
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingReport {
    pub detector: String,
    pub k: usize,
    /// Median over repetitions of the mean single-query time.
    pub median_s: f64,
    pub repetitions: usize,
    pub queries: usize,
    pub mac_count: Option<u64>,
    pub ml_candidates: Option<usize>,
}

/// Pre-generates `count` received vectors at `snr` for timing runs.
pub fn timing_queries(link: &Link, snr: SnrSpec, count: usize, seed: u64) -> Result<Vec<f64>> {
    let sigma2 = link.sigma2(snr)?;
    let mut rng = GaussianRng::for_purpose(seed, Purpose::Timing, 0, 0);
    let mut out = Vec::with_capacity(count * link.feature_dim());
    for _ in 0..count {
        let label = rng.below(link.messages() as u64) as usize;
        let start = out.len();
        out.extend_from_slice(link.clean(label));
        link.add_noise(&mut out[start..], sigma2, &mut rng);
    }
    Ok(out)
}

/// Wall-clock cost of one detection. Each repetition runs every query once,
/// one query per call, and records the mean per-query time; the median over
/// repetitions is reported. One untimed pass warms caches first.
pub fn time_per_query(det: &dyn Detector, k: usize, queries: &[f64], repetitions: usize) -> Result<TimingReport> {
    Ok(time_interleaved(&[TimingJob { det, k, queries }], repetitions)?.remove(0))
}

/// One detector and its query block for [`time_interleaved`].
#[derive(Clone, Copy)]
pub struct TimingJob<'a> {
    pub det: &'a dyn Detector,
    pub k: usize,
    pub queries: &'a [f64],
}

/// Times several detectors with repetitions taken round-robin, so slow
/// phases of the machine hit every detector alike. Each sample is the mean
/// time of one query over the whole block, after one warm-up pass.
pub fn time_interleaved(jobs: &[TimingJob<'_>], repetitions: usize) -> Result<Vec<TimingReport>> {
    if repetitions < 5 {
        return Err(Error::config("timing needs at least 5 repetitions"));
    }
    for job in jobs {
        let dim = job.det.input_dim();
        if job.queries.is_empty() || job.queries.len() % dim != 0 {
            return Err(Error::config("query buffer is empty or not a whole number of queries"));
        }
    }
    let pass = |job: &TimingJob<'_>, out: &mut [Bit]| {
        for q in job.queries.chunks_exact(job.det.input_dim()) {
            job.det.detect_into(black_box(q), out);
            black_box(&*out);
        }
    };
    let mut outs: Vec<Vec<Bit>> = jobs.iter().map(|j| vec![0; j.det.bits()]).collect();
    for (job, out) in jobs.iter().zip(&mut outs) {
        pass(job, out);
    }
    let mut samples = vec![Vec::with_capacity(repetitions); jobs.len()];
    for _ in 0..repetitions {
        for ((job, out), s) in jobs.iter().zip(&mut outs).zip(&mut samples) {
            let count = job.queries.len() / job.det.input_dim();
            let start = Instant::now();
            pass(job, out);
            s.push(start.elapsed().max(Duration::from_nanos(1)).as_secs_f64() / count as f64);
        }
    }
    Ok(jobs
        .iter()
        .zip(samples)
        .map(|(job, mut s)| {
            s.sort_by(f64::total_cmp);
            let mid = s.len() / 2;
            let median_s = if s.len() % 2 == 1 { s[mid] } else { 0.5 * (s[mid - 1] + s[mid]) };
            TimingReport {
                detector: job.det.tag().to_string(),
                k: job.k,
                median_s,
                repetitions,
                queries: job.queries.len() / job.det.input_dim(),
                mac_count: job.det.mac_count(),
                ml_candidates: job.det.ml_candidates(),
            }
        })
        .collect())
}

/// Forward-pass operation count `2 n o_1 + 2 o_L k + sum_{i>=2} 2 c_i o_i`
/// for hidden widths `o_1..o_L`; with no hidden layer it is `2 n k`.
pub fn mac_count(hidden: &[usize], input_dim: usize, k: usize) -> Result<u64> {
    if input_dim == 0 || k == 0 || hidden.contains(&0) {
        return Err(Error::domain("layer widths must be positive"));
    }
    let (n, k) = (input_dim as u64, k as u64);
    let Some((&first, _)) = hidden.split_first() else {
        return Ok(2 * n * k);
    };
    let last = *hidden.last().unwrap() as u64;
    let inner: u64 = hidden.windows(2).map(|w| 2 * (w[0] * w[1]) as u64).sum();
    Ok(2 * n * first as u64 + 2 * last * k + inner)
}

/// Operation counts with the real network input (`2 n1` for complex GAM
/// samples) and with the sample count `n` as the input size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MacCounts {
    pub actual: u64,
    pub literal: u64,
}

pub fn mac_counts(task: Task, hidden: &[usize], samples: usize, k: usize) -> Result<MacCounts> {
    let actual_input = match task {
        Task::Demod => 2 * samples,
        Task::Decode => samples,
    };
    Ok(MacCounts {
        actual: mac_count(hidden, actual_input, k)?,
        literal: mac_count(hidden, samples, k)?,
    })
}

/// Distances evaluated by exhaustive detection, `2^k`.
pub fn ml_candidate_count(k: u32) -> u64 {
    1u64 << k
}

/// Least-squares slope of `log2(times)` against `ks`.
pub fn log2_slope(ks: &[f64], times: &[f64]) -> f64 {
    let n = ks.len() as f64;
    let ys: Vec<f64> = times.iter().map(|t| t.log2()).collect();
    let mx = ks.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = ks.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = ks.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn write_header<W: Write>(out: &mut W, header: &[String]) -> Result<()> {
    for line in header {
        writeln!(out, "# {line}")?;
    }
    Ok(())
}

/// `ber.csv`: comment header lines, then
/// `task,detector,k,eb_n0_db,errors,bits,ber,ci_lo,ci_hi`.
pub fn write_ber_csv<W: Write>(mut out: W, header: &[String], reports: &[BerReport]) -> Result<()> {
    write_header(&mut out, header)?;
    writeln!(out, "task,detector,k,eb_n0_db,errors,bits,ber,ci_lo,ci_hi")?;
    for r in reports {
        for p in &r.points {
            writeln!(
                out,
                "{},{},{},{},{},{},{:e},{:e},{:e}",
                r.task, r.detector, r.k, p.eb_n0_db, p.errors, p.bits, p.ber, p.ci_lo, p.ci_hi
            )?;
        }
    }
    Ok(())
}

/// `timing.csv`: comment header lines, then
/// `detector,k,median_s,mac_count,ml_candidates`.
pub fn write_timing_csv<W: Write>(mut out: W, header: &[String], reports: &[TimingReport]) -> Result<()> {
    write_header(&mut out, header)?;
    writeln!(out, "detector,k,median_s,mac_count,ml_candidates")?;
    let opt = |v: Option<String>| v.unwrap_or_default();
    for r in reports {
        writeln!(
            out,
            "{},{},{:e},{},{}",
            r.detector,
            r.k,
            r.median_s,
            opt(r.mac_count.map(|v| v.to_string())),
            opt(r.ml_candidates.map(|v| v.to_string()))
        )?;
    }
    Ok(())
}
