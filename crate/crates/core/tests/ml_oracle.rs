mod common;

use modemlab::rng::{GaussianRng, Purpose};
use modemlab::{ml_detect, CandidateSet, GamConstellation, GaussianCodebook};

fn check(cands: &CandidateSet, oracle: &[Vec<f64>], k: usize, queries: usize, scale: f64, seed: u64) {
    let dim = oracle[0].len();
    let mut rng = GaussianRng::for_purpose(seed, Purpose::TestData, k as u64, 7);
    for q in 0..queries {
        let y: Vec<f64> = (0..dim).map(|_| scale * rng.standard_normal()).collect();
        let want = common::bits_of(common::brute_force_nearest(&y, oracle), k);
        assert_eq!(ml_detect(&y, cands).unwrap(), want, "query {q}");
    }
}

#[test]
fn demod_matches_brute_force() {
    for k in [2, 4, 6] {
        let c = GamConstellation::build(k, 1.0).unwrap();
        let cands = CandidateSet::from_constellation(&c, 10).unwrap();
        check(&cands, &common::demod_candidates(k, 1.0, 10), k as usize, 2000, 0.8, 11);
    }
}

#[test]
fn decode_matches_brute_force() {
    for k in [2, 4, 6] {
        let cb = GaussianCodebook::build(k, 0.5, 1.0, 5).unwrap();
        let oracle: Vec<Vec<f64>> = (0..cb.len()).map(|i| cb.row(i).to_vec()).collect();
        check(&CandidateSet::from_codebook(&cb), &oracle, k as usize, 2000, 1.0, 12);
    }
}

#[test]
fn noiseless_symbols_decode_to_their_own_label() {
    let c = GamConstellation::build(4, 2.0).unwrap();
    let cands = CandidateSet::from_constellation(&c, 3).unwrap();
    for (i, y) in common::demod_candidates(4, 2.0, 3).iter().enumerate() {
        assert_eq!(ml_detect(y, &cands).unwrap(), common::bits_of(i, 4));
    }
}
