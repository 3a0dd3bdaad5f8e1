mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use smf_core::eval::{full_proximity, r_scores, svd_oracle, svd_oracle_factors};
use smf_core::proximity::{ProximityConfig, SparseBlock};

/// Entry-by-entry loop over M̃ = WᵀC.
fn loop_oracle(m: &DMatrix<f64>, w: &DMatrix<f64>, c: &DMatrix<f64>) -> (f64, f64) {
    let (mut all, mut nz, mut norm) = (0.0, 0.0, 0.0);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let mut approx = 0.0;
            for t in 0..w.nrows() {
                approx += w[(t, i)] * c[(t, j)];
            }
            let diff = approx - m[(i, j)];
            all += diff * diff;
            if m[(i, j)] != 0.0 {
                nz += diff * diff;
            }
            norm += m[(i, j)] * m[(i, j)];
        }
    }
    (1.0 - all / norm, 1.0 - nz / norm)
}

fn random_dense(r: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| r.gen_range(-1.0..1.0))
}

#[test]
fn r_scores_match_loop_oracle_on_random_graph() {
    let g = random_graph(30, 90, true, 17);
    let m = full_proximity(&g, ProximityConfig::second()).unwrap();
    let mut r = rng(5);
    let w = random_dense(&mut r, 6, 30);
    let c = random_dense(&mut r, 6, 30);
    let rep = r_scores(&m, &w, &c).unwrap();
    let (all, nz) = loop_oracle(&m.to_dense(), &w, &c);
    assert!((rep.r_all - all).abs() < 1e-10);
    assert!((rep.r_nz - nz).abs() < 1e-10);
}

#[test]
fn oracle_residual_matches_eigen_route() {
    let g = random_graph(50, 300, false, 2);
    let m = full_proximity(&g, ProximityConfig::second()).unwrap();
    let dense = m.to_dense();
    for d in [1, 5, 20, 49] {
        let rep = svd_oracle(&m, d).unwrap();
        let want = eig_rank_residual(&dense, d);
        assert!((rep.frobenius_residual - want).abs() <= 1e-9 * want.max(1e-9), "d = {d}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn r_scores_permutation_invariant(n in 5usize..25, d in 1usize..5, seed: u64) {
        let g = random_graph(n, 3 * n, seed % 2 == 0, seed);
        let m = full_proximity(&g, ProximityConfig::second()).unwrap();
        let dense = m.to_dense();
        let mut r = rng(seed);
        let w = random_dense(&mut r, d, n);
        let c = random_dense(&mut r, d, n);
        let mut perm: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut r);
        let pm = DMatrix::from_fn(n, n, |i, j| dense[(perm[i], perm[j])]);
        let pw = DMatrix::from_fn(d, n, |t, j| w[(t, perm[j])]);
        let pc = DMatrix::from_fn(d, n, |t, j| c[(t, perm[j])]);
        let ids: Vec<usize> = (0..n).collect();
        let pblock = SparseBlock::from_dense(ids.clone(), ids, &pm).unwrap();
        let a = r_scores(&m, &w, &c).unwrap();
        let b = r_scores(&pblock, &pw, &pc).unwrap();
        prop_assert!((a.r_all - b.r_all).abs() < 1e-12);
        prop_assert!((a.r_nz - b.r_nz).abs() < 1e-12);
    }

    #[test]
    fn no_random_rank_d_reconstruction_beats_oracle(n in 5usize..25, d in 1usize..5, seed: u64) {
        let g = random_graph(n, 3 * n, true, seed);
        let m = full_proximity(&g, ProximityConfig::second()).unwrap();
        let best = svd_oracle(&m, d).unwrap();
        let (w0, c0) = svd_oracle_factors(&m, d).unwrap();
        let mut r = rng(seed ^ 9);
        for trial in 0..20 {
            // random factors, and small perturbations of the optimum
            let (w, c) = if trial % 2 == 0 {
                (random_dense(&mut r, d, n), random_dense(&mut r, d, n))
            } else {
                let dw = random_dense(&mut r, w0.nrows(), n) * 1e-3;
                let dc = random_dense(&mut r, c0.nrows(), n) * 1e-3;
                (&w0 + dw, &c0 + dc)
            };
            let rep = r_scores(&m, &w, &c).unwrap();
            prop_assert!(rep.frobenius_residual >= best.frobenius_residual - 1e-12);
        }
    }
}
