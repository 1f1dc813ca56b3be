//! Exhaustive minimum-distance (maximum-likelihood under AWGN) detection.

use num_complex::Complex64;

use crate::bits::{index_to_bits, Bit};
use crate::channel::{interleave, oversample};
use crate::codebook::GaussianCodebook;
use crate::error::{Error, Result};
use crate::gam::GamConstellation;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CandidateDomain {
    /// Complex samples stored as interleaved `(re, im)` reals.
    Complex,
    Real,
}

/// Labeled hypotheses, stored candidate-major in one contiguous buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSet {
    domain: CandidateDomain,
    dim: usize,
    bits: usize,
    labels: Vec<Bit>,
    data: Vec<f64>,
}

impl CandidateSet {
    /// `vectors` are real (interleaved for the complex domain) and must share one length;
    /// `labels` must be distinct and share one length.
    pub fn new(domain: CandidateDomain, labels: Vec<Vec<Bit>>, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if labels.is_empty() || labels.len() != vectors.len() {
            return Err(Error::domain("candidate set needs one label per nonempty candidate list"));
        }
        let dim = vectors[0].len();
        let bits = labels[0].len();
        if dim == 0 || vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::domain("candidate vectors must share one nonzero length"));
        }
        if domain == CandidateDomain::Complex && !dim.is_multiple_of(2) {
            return Err(Error::domain("complex candidates need an even interleaved length"));
        }
        if labels.iter().any(|l| l.len() != bits) {
            return Err(Error::domain("labels must share one length"));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != labels.len() {
            return Err(Error::domain("candidate labels must be distinct"));
        }
        Ok(Self {
            domain,
            dim,
            bits,
            labels: labels.concat(),
            data: vectors.concat(),
        })
    }

    /// Candidate `m` is the oversampled point `s_m` labeled with its bits.
    pub fn from_constellation(c: &GamConstellation, n1: usize) -> Result<Self> {
        let k1 = c.k1() as usize;
        let mut labels = Vec::with_capacity(c.order());
        let mut vectors = Vec::with_capacity(c.order());
        for (i, &s) in c.points().iter().enumerate() {
            labels.push(index_to_bits(i, k1));
            vectors.push(interleave(&oversample(s, n1)?));
        }
        Self::new(CandidateDomain::Complex, labels, vectors)
    }

    pub fn from_codebook(cb: &GaussianCodebook) -> Self {
        let k2 = cb.k2() as usize;
        let rows = cb.len();
        let mut labels = Vec::with_capacity(rows * k2);
        for i in 0..rows {
            labels.extend(index_to_bits(i, k2));
        }
        Self {
            domain: CandidateDomain::Real,
            dim: cb.n2(),
            bits: k2,
            labels,
            data: cb.as_flat().to_vec(),
        }
    }

    pub fn domain(&self) -> CandidateDomain {
        self.domain
    }

    /// Real length of each candidate.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bits_per_label(&self) -> usize {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn candidate(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> &[Bit] {
        &self.labels[i * self.bits..(i + 1) * self.bits]
    }

    /// Index of the closest candidate; ties go to the lowest index.
    pub fn nearest(&self, y: &[f64]) -> Result<usize> {
        if y.len() != self.dim {
            return Err(Error::domain(format!(
                "received vector has length {}, candidates have {}",
                y.len(),
                self.dim
            )));
        }
        Ok(self.nearest_unchecked(y))
    }

    /// [`nearest`](Self::nearest) without the length check. `y.len()` must equal `dim()`.
    #[inline]
    pub fn nearest_unchecked(&self, y: &[f64]) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, c) in self.data.chunks_exact(self.dim).enumerate() {
            let d = squared_distance(y, c);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn detect(&self, y: &[f64]) -> Result<Vec<Bit>> {
        Ok(self.label(self.nearest(y)?).to_vec())
    }

    pub fn detect_complex(&self, y: &[Complex64]) -> Result<Vec<Bit>> {
        if self.domain != CandidateDomain::Complex {
            return Err(Error::domain("complex query against real candidates"));
        }
        self.detect(&interleave(y))
    }
}

/// Squared Euclidean distance with four independent accumulators so the
/// reduction vectorizes.
#[inline]
pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        for l in 0..4 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0;
    for (x, y) in ra.iter().zip(rb) {
        let d = x - y;
        tail += d * d;
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}

/// Maximum-likelihood detection of `y` against `cands`.
pub fn ml_detect(y: &[f64], cands: &CandidateSet) -> Result<Vec<Bit>> {
    cands.detect(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::GaussianRng;
    use proptest::prelude::*;

    #[test]
    fn constellation_candidates_have_expected_shape() {
        let c = GamConstellation::build(2, 1.0).unwrap();
        let set = CandidateSet::from_constellation(&c, 10).unwrap();
        assert_eq!(set.len(), 4);
        assert_eq!(set.dim(), 20);
        let mut labels: Vec<Vec<u8>> = (0..4).map(|i| set.label(i).to_vec()).collect();
        labels.sort();
        assert_eq!(labels, vec![vec![0, 0], vec![0, 1], vec![1, 0], vec![1, 1]]);
        for (i, p) in c.points().iter().enumerate() {
            let e: f64 = set.candidate(i).iter().map(|x| x * x).sum();
            assert!((e - 10.0 * p.norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn codebook_candidates_invert_encode() {
        let cb = GaussianCodebook::build(4, 0.5, 1.0, 8).unwrap();
        let set = CandidateSet::from_codebook(&cb);
        assert_eq!((set.len(), set.dim()), (16, 8));
        for i in 0..16 {
            let bits = index_to_bits(i, 4);
            let x = cb.encode(&bits).unwrap();
            assert_eq!(ml_detect(&x, &set).unwrap(), bits);
        }
    }

    #[test]
    fn small_perturbation_stays_in_decision_region() {
        let c = GamConstellation::build(2, 1.0).unwrap();
        // Brute-force minimum pairwise distance between points.
        let mut dmin = f64::INFINITY;
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    dmin = dmin.min((c.points()[i] - c.points()[j]).norm());
                }
            }
        }
        let set = CandidateSet::from_constellation(&c, 1).unwrap();
        let mut rng = GaussianRng::new(1, 1);
        for _ in 0..1000 {
            let angle = rng.uniform_range(0.0, std::f64::consts::TAU);
            let r = 0.499 * dmin * rng.uniform();
            let y = c.points()[0] + Complex64::from_polar(r, angle);
            assert_eq!(set.detect_complex(&[y]).unwrap(), vec![0, 0]);
        }
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let set = CandidateSet::new(
            CandidateDomain::Real,
            vec![vec![0], vec![1]],
            vec![vec![-1.0], vec![1.0]],
        )
        .unwrap();
        assert_eq!(set.nearest(&[0.0]).unwrap(), 0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let set = CandidateSet::new(CandidateDomain::Real, vec![vec![0]], vec![vec![1.0, 2.0]]).unwrap();
        assert!(set.nearest(&[1.0]).is_err());
        assert!(CandidateSet::new(CandidateDomain::Real, vec![], vec![]).is_err());
        assert!(CandidateSet::new(
            CandidateDomain::Real,
            vec![vec![0], vec![0]],
            vec![vec![1.0], vec![2.0]]
        )
        .is_err());
        assert!(CandidateSet::new(
            CandidateDomain::Real,
            vec![vec![0], vec![1]],
            vec![vec![1.0], vec![2.0, 3.0]]
        )
        .is_err());
    }

    #[test]
    fn squared_distance_matches_naive() {
        let mut rng = GaussianRng::new(4, 4);
        for len in 1..23 {
            let a: Vec<f64> = (0..len).map(|_| rng.standard_normal()).collect();
            let b: Vec<f64> = (0..len).map(|_| rng.standard_normal()).collect();
            let naive: f64 = a.iter().zip(&b).map(|(x, y)| (x - y) * (x - y)).sum();
            assert!((squared_distance(&a, &b) - naive).abs() < 1e-12 * naive.max(1.0));
        }
    }

    proptest! {
        #[test]
        fn argmin_is_scale_and_shift_invariant(
            seed in any::<u64>(),
            alpha in 0.01f64..100.0,
            shift in -5.0f64..5.0,
        ) {
            let cb = GaussianCodebook::build(4, 0.5, 1.0, seed).unwrap();
            let set = CandidateSet::from_codebook(&cb);
            let mut rng = GaussianRng::new(seed, 1);
            let y: Vec<f64> = (0..8).map(|_| 1.5 * rng.standard_normal()).collect();
            let base = set.nearest(&y).unwrap();

            let tf = |v: &[f64]| v.iter().map(|x| alpha * (x - shift)).collect::<Vec<_>>();
            let scaled = CandidateSet::new(
                CandidateDomain::Real,
                (0..set.len()).map(|i| set.label(i).to_vec()).collect(),
                (0..set.len()).map(|i| tf(set.candidate(i))).collect(),
            ).unwrap();
            prop_assert_eq!(scaled.nearest(&tf(&y)).unwrap(), base);
            prop_assert_eq!(set.nearest(&y).unwrap(), base);
        }
    }
}
