//! R² reconstruction scores and the rank-d baselines they are compared with.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Result, SmfError};
use crate::graph::{GraphStore, NodeId};
use crate::proximity::{proximity_block, ProximityConfig, SparseBlock};
use crate::smf::{sorted_svd, EmbeddingTable};

/// Largest matrix side the dense baselines will densify.
pub const DENSE_GUARD: usize = 20_000;

const ROW_CHUNK: usize = 256;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconstructionReport {
    /// `1 − ‖M̃ − M‖²_F / ‖M‖²_F`
    pub r_all: f64,
    /// `1 − ‖(M̃ − M) ∘ 1[M ≠ 0]‖²_F / ‖M‖²_F`
    pub r_nz: f64,
    pub frobenius_residual: f64,
}

/// The whole proximity matrix as one sparse block over `0..n`.
pub fn full_proximity(g: &GraphStore, cfg: ProximityConfig) -> Result<SparseBlock> {
    let all: Vec<NodeId> = (0..g.node_count()).collect();
    proximity_block(g, cfg, &all, &all)
}

/// Scores `M̃ = WᵀC` against `M`. `w`, `c` are d × n with column j matching
/// local row/column j of `m`.
pub fn r_scores(m: &SparseBlock, w: &DMatrix<f64>, c: &DMatrix<f64>) -> Result<ReconstructionReport> {
    if w.nrows() != c.nrows() || w.ncols() != m.nrows() || c.ncols() != m.ncols() {
        return Err(SmfError::DimensionMismatch(format!(
            "M is {}x{}, W is {}x{}, C is {}x{}",
            m.nrows(),
            m.ncols(),
            w.nrows(),
            w.ncols(),
            c.nrows(),
            c.ncols()
        )));
    }
    let m_norm_sq = m.frobenius_sq();
    if m_norm_sq == 0.0 {
        return Err(SmfError::InvalidArgument("M is identically zero".into()));
    }
    let mut resid_all = 0.0;
    let mut resid_nz = 0.0;
    let n_rows = m.nrows();
    let mut start = 0;
    while start < n_rows {
        let len = ROW_CHUNK.min(n_rows - start);
        // chunk = M̃[start.., :] − M[start.., :]
        let mut chunk = w.columns(start, len).tr_mul(c);
        for r in 0..len {
            for (col, v) in m.row(start + r) {
                chunk[(r, col)] -= v;
                resid_nz += chunk[(r, col)] * chunk[(r, col)];
            }
        }
        resid_all += chunk.norm_squared();
        start += len;
    }
    Ok(ReconstructionReport {
        r_all: 1.0 - resid_all / m_norm_sq,
        r_nz: 1.0 - resid_nz / m_norm_sq,
        frobenius_residual: resid_all.sqrt(),
    })
}

/// Places the table's columns at their node ids; nodes absent from the table
/// get zero columns.
pub fn align_to_nodes(table: &EmbeddingTable, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let d = table.dim();
    let mut w = DMatrix::zeros(d, n);
    let mut c = DMatrix::zeros(d, n);
    for (j, &v) in table.nodes.iter().enumerate() {
        w.set_column(v, &table.w.column(j));
        c.set_column(v, &table.c.column(j));
    }
    (w, c)
}

fn guard(m: &SparseBlock) -> Result<()> {
    let side = m.nrows().max(m.ncols());
    if side > DENSE_GUARD {
        return Err(SmfError::InvalidArgument(format!(
            "matrix side {side} exceeds the dense limit {DENSE_GUARD}; evaluate on a sampled subgraph"
        )));
    }
    Ok(())
}

/// Best rank-d reconstruction (Eckart–Young) and its scores.
pub fn svd_oracle(m: &SparseBlock, d: usize) -> Result<ReconstructionReport> {
    guard(m)?;
    let (w, c) = svd_oracle_factors(m, d)?;
    r_scores(m, &w, &c)
}

/// `(W, C)` with `WᵀC` the best rank-d approximation of `m`.
pub fn svd_oracle_factors(m: &SparseBlock, d: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    guard(m)?;
    let (u, s, v) = sorted_svd(m.to_dense())?;
    let d = d.min(s.len());
    let mut w = DMatrix::zeros(d, m.nrows());
    let mut c = DMatrix::zeros(d, m.ncols());
    for j in 0..d {
        let root = s[j].sqrt();
        w.set_row(j, &(u.column(j).transpose() * root));
        c.set_row(j, &(v.column(j).transpose() * root));
    }
    Ok((w, c))
}

/// Landmark Nyström `M̃ = M[:,V₀] · pinv_d(M[V₀,V₀]) · M[V₀,:]`.
pub fn nystrom_baseline(m: &SparseBlock, landmarks: &[NodeId], d: usize) -> Result<ReconstructionReport> {
    guard(m)?;
    let (w, c) = nystrom_factors(m, landmarks, d)?;
    r_scores(m, &w, &c)
}

pub fn nystrom_factors(
    m: &SparseBlock,
    landmarks: &[NodeId],
    d: usize,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let k = landmarks.len();
    if d == 0 || k < d {
        return Err(SmfError::InvalidArgument(format!(
            "Nyström needs 1 ≤ d ≤ k, got d = {d}, k = {k}"
        )));
    }
    let row_pos: HashMap<NodeId, usize> = m.rows().iter().enumerate().map(|(p, &v)| (v, p)).collect();
    let col_pos: HashMap<NodeId, usize> = m.cols().iter().enumerate().map(|(p, &v)| (v, p)).collect();
    let lookup = |map: &HashMap<NodeId, usize>, v: NodeId| {
        map.get(&v)
            .copied()
            .ok_or_else(|| SmfError::InvalidArgument(format!("landmark {v} not in matrix")))
    };
    let lm_rows: Vec<usize> = landmarks.iter().map(|&v| lookup(&row_pos, v)).collect::<Result<_>>()?;
    let lm_cols: Vec<usize> = landmarks.iter().map(|&v| lookup(&col_pos, v)).collect::<Result<_>>()?;
    let col_slot: HashMap<usize, usize> = lm_cols.iter().enumerate().map(|(a, &p)| (p, a)).collect();

    // C̃ = M[:, V₀] (n × k), R = M[V₀, :] (k × n)
    let mut c_tilde = DMatrix::zeros(m.nrows(), k);
    for (r, col, v) in m.triplets() {
        if let Some(&a) = col_slot.get(&col) {
            c_tilde[(r, a)] = v;
        }
    }
    let mut rows_block = DMatrix::zeros(k, m.ncols());
    for (a, &r) in lm_rows.iter().enumerate() {
        for (col, v) in m.row(r) {
            rows_block[(a, col)] = v;
        }
    }
    let core = DMatrix::from_fn(k, k, |a, b| c_tilde[(lm_rows[a], b)]);
    let (u, s, v) = sorted_svd(core)?;
    let tol = s[0] * (k as f64) * f64::EPSILON;
    let rank = s.iter().take(d).filter(|&&x| x > tol).count();
    if rank == 0 {
        return Err(SmfError::Numerical("Nyström core block has rank 0".into()));
    }
    // Wᵀ = C̃ V_r Σ_r⁻¹, C = U_rᵀ R
    let mut v_scaled = v.columns(0, rank).into_owned();
    for j in 0..rank {
        v_scaled.column_mut(j).scale_mut(1.0 / s[j]);
    }
    let w = (c_tilde * v_scaled).transpose();
    let c = u.columns(0, rank).tr_mul(&rows_block);
    Ok((w, c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn block(dense: &DMatrix<f64>) -> SparseBlock {
        let ids: Vec<usize> = (0..dense.nrows()).collect();
        SparseBlock::from_dense(ids.clone(), ids, dense).unwrap()
    }

    fn sample() -> DMatrix<f64> {
        DMatrix::from_row_slice(
            4,
            4,
            &[1.0, 0.5, 0.0, 0.2, 0.0, 1.0, 0.3, 0.0, 0.4, 0.0, 1.0, 0.6, 0.0, 0.25, 0.0, 1.0],
        )
    }

    #[test]
    fn perfect_and_empty_reconstruction() {
        let m = sample();
        let mb = block(&m);
        let perfect = r_scores(&mb, &m.transpose(), &DMatrix::identity(4, 4)).unwrap();
        assert_eq!(perfect.r_all, 1.0);
        assert_eq!(perfect.r_nz, 1.0);
        assert_eq!(perfect.frobenius_residual, 0.0);
        let zero = r_scores(&mb, &DMatrix::zeros(2, 4), &DMatrix::zeros(2, 4)).unwrap();
        assert_eq!(zero.r_all, 0.0);
        assert_eq!(zero.r_nz, 0.0);
    }

    #[test]
    fn oracle_full_rank_and_zero_rank() {
        let mb = block(&sample());
        assert!((svd_oracle(&mb, 4).unwrap().r_all - 1.0).abs() < 1e-12);
        assert_eq!(svd_oracle(&mb, 0).unwrap().r_all, 0.0);
    }

    #[test]
    fn nystrom_all_landmarks_is_exact() {
        let mb = block(&sample());
        let rep = nystrom_baseline(&mb, &[0, 1, 2, 3], 4).unwrap();
        assert!((rep.r_all - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nystrom_exact_on_rank_deficient_matrix() {
        // rank 2 with landmarks {0, 1} spanning the row space
        let x = DMatrix::from_row_slice(5, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0, 0.5, 3.0]);
        let y = DMatrix::from_row_slice(2, 5, &[1.0, 0.2, 0.0, 1.0, 2.0, 0.3, 1.0, 1.0, 0.0, 0.5]);
        let mb = block(&(x * y));
        let rep = nystrom_baseline(&mb, &[0, 1], 2).unwrap();
        assert!((rep.r_all - 1.0).abs() < 1e-10, "{rep:?}");
    }

    #[test]
    fn nystrom_rank_zero_core() {
        let mut m = sample();
        m[(0, 0)] = 0.0;
        let mb = block(&m);
        assert!(matches!(
            nystrom_baseline(&mb, &[0], 1),
            Err(SmfError::Numerical(_))
        ));
    }

    #[test]
    fn shape_mismatch() {
        let mb = block(&sample());
        assert!(r_scores(&mb, &DMatrix::zeros(2, 3), &DMatrix::zeros(2, 4)).is_err());
    }
}
