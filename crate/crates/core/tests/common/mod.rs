#![allow(dead_code)]

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use smf_core::graph::{GraphStore, NodeId};
use smf_core::proximity::ProximityOrder;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Erdős–Rényi style graph with `m` sampled pairs (self-loops and repeats
/// are dropped by the store).
pub fn random_graph(n: usize, m: usize, directed: bool, seed: u64) -> GraphStore {
    let mut r = rng(seed);
    let mut edges = Vec::with_capacity(m + 1);
    edges.push((0, 1));
    for _ in 0..m {
        edges.push((r.gen_range(0..n), r.gen_range(0..n)));
    }
    GraphStore::from_edges(n, &edges, directed).unwrap()
}

/// Dense transition matrix straight from the adjacency lists.
pub fn dense_transition(g: &GraphStore) -> DMatrix<f64> {
    let n = g.node_count();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        let out = g.out_neighbors(i);
        for &j in out {
            a[(i, j)] += 1.0 / out.len() as f64;
        }
    }
    a
}

pub fn dense_proximity(g: &GraphStore, order: ProximityOrder) -> DMatrix<f64> {
    let a = dense_transition(g);
    let n = a.nrows();
    match order {
        ProximityOrder::First => DMatrix::identity(n, n) + a,
        ProximityOrder::Second => &a + &a * &a,
    }
}

pub fn submatrix(m: &DMatrix<f64>, rows: &[NodeId], cols: &[NodeId]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
}

pub fn complement(n: usize, landmarks: &[NodeId], target: &[NodeId]) -> Vec<NodeId> {
    (0..n).filter(|v| !landmarks.contains(v) && !target.contains(v)).collect()
}

/// The per-set objective written out term by term on dense blocks.
#[allow(clippy::too_many_arguments)]
pub fn dense_loss(
    m: &DMatrix<f64>,
    landmarks: &[NodeId],
    target: &[NodeId],
    p: &DMatrix<f64>,
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    lambda: f64,
    eta: f64,
) -> f64 {
    let rest = complement(m.nrows(), landmarks, target);
    let m_ii = submatrix(m, target, target);
    let m_0i = submatrix(m, landmarks, target);
    let m_i0 = submatrix(m, target, landmarks);
    let m_ir = submatrix(m, target, &rest);
    let m_ri = submatrix(m, &rest, target);
    let m_0r = submatrix(m, landmarks, &rest);
    let m_r0 = submatrix(m, &rest, landmarks);
    let at = a.transpose();
    let local = (&m_ii - &at * p * b).norm_squared();
    let landmark = (&m_0i - p * b).norm_squared() + (&m_i0 - &at * p).norm_squared();
    let global = (&m_ir - &at * &m_0r).norm_squared() + (&m_ri - &m_r0 * b).norm_squared();
    0.5 * (local + landmark) + 0.5 * lambda * global + 0.5 * eta * (a.norm_squared() + b.norm_squared())
}

/// Rank-d Frobenius residual from the eigenvalues of MᵀM.
pub fn eig_rank_residual(m: &DMatrix<f64>, d: usize) -> f64 {
    let mut ev: Vec<f64> = m.tr_mul(m).symmetric_eigenvalues().iter().copied().collect();
    ev.sort_by(|x, y| y.partial_cmp(x).unwrap());
    ev.iter().skip(d).map(|x| x.max(0.0)).sum::<f64>().sqrt()
}

pub fn distinct_sample(r: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<NodeId> {
    let mut v = rand::seq::index::sample(r, n, count).into_vec();
    v.sort_unstable();
    v
}
