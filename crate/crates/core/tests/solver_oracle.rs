mod common;

use common::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use smf_core::proximity::{
    ComplementProducts, LandmarkProximity, ProximityBlockSet, ProximityConfig, SparseBlock,
};
use smf_core::smf::{embed_landmarks, evaluate_loss, solve_set, SetProblem, SmfConfig};

struct Instance {
    dense: DMatrix<f64>,
    landmarks: Vec<usize>,
    target: Vec<usize>,
    blocks: ProximityBlockSet,
    lm: smf_core::smf::LandmarkEmbedding,
    cfg: SmfConfig,
}

fn instance(seed: u64, lambda: f64, eta: f64) -> Instance {
    let mut r = rng(seed);
    let n = r.gen_range(15..30);
    let g = random_graph(n, n * 3, r.gen_bool(0.5), seed);
    let k = r.gen_range(2..=8);
    let n_i = r.gen_range(1..=6);
    let picked = rand::seq::index::sample(&mut r, n, k + n_i).into_vec();
    let landmarks = picked[..k].to_vec();
    let target = picked[k..].to_vec();
    let d = r.gen_range(1..=k);
    let cfg = SmfConfig {
        d,
        k,
        lambda,
        eta,
        iters: 30,
        tol: 0.0,
        proximity: ProximityConfig::second(),
    };
    let lp = LandmarkProximity::new(&g, cfg.proximity, &landmarks).unwrap();
    let lm = embed_landmarks(&lp.core_block(), d).unwrap();
    let blocks = ProximityBlockSet::build(&g, &lp, &target).unwrap();
    Instance {
        dense: dense_proximity(&g, cfg.proximity.order),
        landmarks,
        target,
        blocks,
        lm,
        cfg,
    }
}

fn random_factors(seed: u64, k: usize, n_i: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut r = rng(seed);
    let a = DMatrix::from_fn(k, n_i, |_, _| r.gen_range(-1.0..1.0));
    let b = DMatrix::from_fn(k, n_i, |_, _| r.gen_range(-1.0..1.0));
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn loss_matches_dense_objective(seed: u64, lambda in 0.0f64..5.0, eta in 0.01f64..2.0) {
        let inst = instance(seed, lambda, eta);
        let (a, b) = random_factors(seed ^ 1, inst.cfg.k, inst.target.len());
        let got = evaluate_loss(&inst.blocks, &inst.lm, &inst.cfg, &a, &b).unwrap().total;
        let want = dense_loss(
            &inst.dense, &inst.landmarks, &inst.target, &inst.lm.p_matrix, &a, &b, lambda, eta,
        );
        prop_assert!((got - want).abs() <= 1e-10 * (1.0 + want.abs()), "{} vs {}", got, want);
    }

    #[test]
    fn block_steps_zero_their_gradient(seed: u64, lambda in 0.0f64..5.0, eta in 0.01f64..2.0) {
        let inst = instance(seed, lambda, eta);
        let problem = SetProblem::new(&inst.blocks, &inst.lm, &inst.cfg).unwrap();
        let (_, b) = random_factors(seed ^ 2, inst.cfg.k, inst.target.len());
        let a = problem.step_a(&b).unwrap();
        let (ga, _) = problem.gradient(&a, &b);
        prop_assert!(ga.amax() < 1e-9 * (1.0 + problem.target_norm()));
        let b = problem.step_b(&a).unwrap();
        let (_, gb) = problem.gradient(&a, &b);
        prop_assert!(gb.amax() < 1e-9 * (1.0 + problem.target_norm()));
    }

    #[test]
    fn trace_never_increases(seed: u64, lambda in 0.0f64..5.0, eta in 0.01f64..2.0) {
        let inst = instance(seed, lambda, eta);
        let sol = solve_set(&inst.blocks, &inst.lm, &inst.cfg).unwrap();
        for w in sol.loss_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs());
        }
        prop_assert!((&sol.w_mat - &inst.lm.phi * &sol.a_mat).amax() == 0.0);
    }
}

#[test]
fn zero_factors_match_dense_objective() {
    let inst = instance(11, 0.4, 0.1);
    let k = inst.cfg.k;
    let z = DMatrix::zeros(k, inst.target.len());
    let l = evaluate_loss(&inst.blocks, &inst.lm, &inst.cfg, &z, &z).unwrap();
    let want = dense_loss(&inst.dense, &inst.landmarks, &inst.target, &inst.lm.p_matrix, &z, &z, 0.4, 0.1);
    assert!((l.total - want).abs() < 1e-12 * (1.0 + want));
    assert_eq!(l.ridge, 0.0);
    let m_ii = submatrix(&inst.dense, &inst.target, &inst.target);
    let m_0i = submatrix(&inst.dense, &inst.landmarks, &inst.target);
    let m_i0 = submatrix(&inst.dense, &inst.target, &inst.landmarks);
    assert!((l.local - 0.5 * m_ii.norm_squared()).abs() < 1e-12);
    assert!((l.landmark - 0.5 * (m_0i.norm_squared() + m_i0.norm_squared())).abs() < 1e-12);
}

#[test]
fn realizable_targets_are_recovered() {
    for seed in 0..10u64 {
        let mut r = rng(seed);
        let (k, n_i) = (6, 5);
        let m00 = DMatrix::from_fn(k, k, |_, _| r.gen_range(-1.0..1.0));
        let lm = smf_core::smf::embed_dense(m00, k).unwrap();
        let p = &lm.p_matrix;
        let a_star = DMatrix::from_fn(k, n_i, |_, _| r.gen_range(-1.0..1.0));
        let b_star = DMatrix::from_fn(k, n_i, |_, _| r.gen_range(-1.0..1.0));
        let m_ii = a_star.transpose() * p * &b_star;
        let m_0i = p * &b_star;
        let m_i0 = a_star.transpose() * p;
        let local: Vec<usize> = (0..n_i).collect();
        let lms: Vec<usize> = (n_i..n_i + k).collect();
        let blocks = ProximityBlockSet {
            m_ii: SparseBlock::from_dense(local.clone(), local.clone(), &m_ii).unwrap(),
            m_0i: SparseBlock::from_dense(lms.clone(), local.clone(), &m_0i).unwrap(),
            m_i0: SparseBlock::from_dense(local, lms, &m_i0).unwrap(),
            complement: ComplementProducts::zeros(k, n_i),
        };
        let cfg = SmfConfig {
            d: k,
            k,
            lambda: 0.0,
            eta: 1e-8,
            iters: 500,
            tol: 0.0,
            proximity: ProximityConfig::second(),
        };
        let sol = solve_set(&blocks, &lm, &cfg).unwrap();
        let targets = m_ii.norm_squared() + m_0i.norm_squared() + m_i0.norm_squared();
        assert!(sol.components.total <= 1e-6 * targets, "seed {seed}: {:e}", sol.components.total);
        let fitted = sol.a_mat.transpose() * p * &sol.b_mat;
        assert!((fitted - &m_ii).amax() < 1e-3);
    }
}
