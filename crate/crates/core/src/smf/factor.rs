use log::warn;
use nalgebra::{DMatrix, DVector};

use crate::error::{Result, SmfError};
use crate::proximity::SparseBlock;

/// Singular values at or below this fraction of the largest are treated as zero.
const NULL_SINGULAR_RTOL: f64 = 1e-12;

/// Rank-d factorization `M₀₀ ≈ ΦᵀΨ` of the landmark block.
#[derive(Clone, Debug)]
pub struct LandmarkEmbedding {
    /// Φ (d × k); column a is the representation of landmark a.
    pub phi: DMatrix<f64>,
    /// Ψ (d × k); context representations of the landmarks.
    pub psi: DMatrix<f64>,
    /// Top-d singular values, non-increasing.
    pub sigma: DVector<f64>,
    /// ΦᵀΨ (k × k)
    pub p_matrix: DMatrix<f64>,
    /// How many of the top-d singular values were zero.
    pub null_count: usize,
}

impl LandmarkEmbedding {
    pub fn d(&self) -> usize {
        self.phi.nrows()
    }

    pub fn k(&self) -> usize {
        self.phi.ncols()
    }
}

/// Thin SVD of a dense matrix with singular triples sorted by decreasing value.
pub(crate) fn sorted_svd(m: DMatrix<f64>) -> Result<(DMatrix<f64>, DVector<f64>, DMatrix<f64>)> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(SmfError::Numerical("matrix has non-finite entries".into()));
    }
    let svd = m.svd(true, true);
    let u = svd.u.ok_or_else(|| SmfError::Numerical("SVD did not return U".into()))?;
    let v_t = svd
        .v_t
        .ok_or_else(|| SmfError::Numerical("SVD did not return Vᵀ".into()))?;
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]).then(a.cmp(&b)));
    let u_sorted = DMatrix::from_fn(u.nrows(), order.len(), |r, c| u[(r, order[c])]);
    let v_sorted = DMatrix::from_fn(v_t.ncols(), order.len(), |r, c| v_t[(order[c], r)]);
    let s_sorted = DVector::from_iterator(order.len(), order.iter().map(|&i| s[i]));
    Ok((u_sorted, s_sorted, v_sorted))
}

/// SVD of `M₀₀` truncated to the top `d` triples: `Φ = (U_d √Σ_d)ᵀ`, `Ψ = (V_d √Σ_d)ᵀ`.
pub fn embed_landmarks(m00: &SparseBlock, d: usize) -> Result<LandmarkEmbedding> {
    if m00.nrows() != m00.ncols() {
        return Err(SmfError::DimensionMismatch(format!(
            "landmark block must be square, got {}x{}",
            m00.nrows(),
            m00.ncols()
        )));
    }
    embed_dense(m00.to_dense(), d)
}

pub fn embed_dense(m00: DMatrix<f64>, d: usize) -> Result<LandmarkEmbedding> {
    let k = m00.nrows();
    if m00.ncols() != k {
        return Err(SmfError::DimensionMismatch(format!(
            "landmark block must be square, got {}x{}",
            k,
            m00.ncols()
        )));
    }
    if d == 0 || k < d {
        return Err(SmfError::InvalidArgument(format!(
            "need 1 ≤ d ≤ k, got d = {d}, k = {k}"
        )));
    }
    let (u, s, v) = sorted_svd(m00)?;
    let cutoff = NULL_SINGULAR_RTOL * s[0].max(f64::MIN_POSITIVE);
    let mut sigma = DVector::zeros(d);
    let mut phi = DMatrix::zeros(d, k);
    let mut psi = DMatrix::zeros(d, k);
    let mut null_count = 0;
    for j in 0..d {
        if s[j] <= cutoff {
            null_count += 1;
            continue;
        }
        sigma[j] = s[j];
        let root = s[j].sqrt();
        for a in 0..k {
            phi[(j, a)] = u[(a, j)] * root;
            psi[(j, a)] = v[(a, j)] * root;
        }
    }
    if null_count > 0 {
        warn!("{null_count} of the top {d} singular values of M00 are zero; those landmark dimensions are null");
    }
    let p_matrix = phi.transpose() * &psi;
    Ok(LandmarkEmbedding {
        phi,
        psi,
        sigma,
        p_matrix,
        null_count,
    })
}
