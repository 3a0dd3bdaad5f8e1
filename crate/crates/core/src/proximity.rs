//! Blocks of the proximity matrix `M = I + A` or `M = A + A²`, where `A` is
//! the row-stochastic transition matrix (`A_ij = 1 / out_degree(i)` on edges).
//!
//! The full `n × n` matrix is never built. Rows of `M` are expanded from the
//! out-adjacency and columns from the in-adjacency, so every block a section
//! needs costs time proportional to the neighbourhoods it touches.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::error::{Result, SmfError};
use crate::graph::{GraphStore, NodeId};

/// Sparse vector over global node ids, sorted by id, no duplicates.
pub type SparseVec = Vec<(NodeId, f64)>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ProximityOrder {
    /// `M = I + A`
    First,
    /// `M = A + A²`
    #[default]
    Second,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct ProximityConfig {
    pub order: ProximityOrder,
}

impl ProximityConfig {
    pub fn first() -> Self {
        ProximityConfig {
            order: ProximityOrder::First,
        }
    }

    pub fn second() -> Self {
        ProximityConfig {
            order: ProximityOrder::Second,
        }
    }
}

/// Sums duplicate ids after a stable sort.
fn merge_entries(mut entries: Vec<(NodeId, f64)>) -> SparseVec {
    entries.sort_by_key(|e| e.0);
    let mut out: SparseVec = Vec::with_capacity(entries.len());
    for (j, v) in entries {
        match out.last_mut() {
            Some(last) if last.0 == j => last.1 += v,
            _ => out.push((j, v)),
        }
    }
    out
}

fn inv_out_degree(g: &GraphStore, node: NodeId) -> f64 {
    1.0 / g.out_degree(node) as f64
}

/// Row `node` of `A`. Empty for dangling nodes.
pub fn transition_row(g: &GraphStore, node: NodeId) -> Result<SparseVec> {
    g.check_node(node)?;
    Ok(transition_row_unchecked(g, node))
}

fn transition_row_unchecked(g: &GraphStore, node: NodeId) -> SparseVec {
    let nbrs = g.out_neighbors(node);
    if nbrs.is_empty() {
        return Vec::new();
    }
    let w = 1.0 / nbrs.len() as f64;
    nbrs.iter().map(|&j| (j, w)).collect()
}

/// Column `node` of `A`.
pub fn transition_col(g: &GraphStore, node: NodeId) -> Result<SparseVec> {
    g.check_node(node)?;
    Ok(transition_col_unchecked(g, node))
}

fn transition_col_unchecked(g: &GraphStore, node: NodeId) -> SparseVec {
    g.in_neighbors(node)
        .iter()
        .map(|&r| (r, inv_out_degree(g, r)))
        .collect()
}

/// Full row `node` of `M`.
pub fn proximity_row(g: &GraphStore, cfg: ProximityConfig, node: NodeId) -> Result<SparseVec> {
    g.check_node(node)?;
    Ok(proximity_row_unchecked(g, cfg, node))
}

fn proximity_row_unchecked(g: &GraphStore, cfg: ProximityConfig, node: NodeId) -> SparseVec {
    let a_row = transition_row_unchecked(g, node);
    match cfg.order {
        ProximityOrder::First => {
            let mut entries = a_row;
            entries.push((node, 1.0));
            merge_entries(entries)
        }
        ProximityOrder::Second => {
            let mut entries = a_row.clone();
            // (A²)_i = Σ_j A_ij · A_j
            for &(j, a_ij) in &a_row {
                let nbrs = g.out_neighbors(j);
                if nbrs.is_empty() {
                    continue;
                }
                let w = a_ij / nbrs.len() as f64;
                entries.extend(nbrs.iter().map(|&m| (m, w)));
            }
            merge_entries(entries)
        }
    }
}

/// Full column `node` of `M`.
pub fn proximity_col(g: &GraphStore, cfg: ProximityConfig, node: NodeId) -> Result<SparseVec> {
    g.check_node(node)?;
    Ok(proximity_col_unchecked(g, cfg, node))
}

fn proximity_col_unchecked(g: &GraphStore, cfg: ProximityConfig, node: NodeId) -> SparseVec {
    let a_col = transition_col_unchecked(g, node);
    match cfg.order {
        ProximityOrder::First => {
            let mut entries = a_col;
            entries.push((node, 1.0));
            merge_entries(entries)
        }
        ProximityOrder::Second => {
            let mut entries = a_col.clone();
            // (A²)[:, j] = Σ_m A[:, m] · A_mj
            for &(m, a_mj) in &a_col {
                entries.extend(
                    g.in_neighbors(m)
                        .iter()
                        .map(|&r| (r, inv_out_degree(g, r) * a_mj)),
                );
            }
            merge_entries(entries)
        }
    }
}

/// A sub-block of `M` in compressed-row layout with local column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseBlock {
    rows: Vec<NodeId>,
    cols: Vec<NodeId>,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl SparseBlock {
    /// Restricts full rows of `M` (one per entry of `rows`) to `cols`.
    pub fn from_full_rows<'a, I>(rows: Vec<NodeId>, cols: Vec<NodeId>, full_rows: I) -> Self
    where
        I: IntoIterator<Item = &'a SparseVec>,
    {
        let col_pos: HashMap<NodeId, usize> =
            cols.iter().enumerate().map(|(p, &c)| (c, p)).collect();
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        row_ptr.push(0);
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        let mut scratch: Vec<(usize, f64)> = Vec::new();
        for row in full_rows {
            scratch.clear();
            scratch.extend(
                row.iter()
                    .filter_map(|&(c, v)| col_pos.get(&c).map(|&p| (p, v))),
            );
            scratch.sort_by_key(|e| e.0);
            for &(p, v) in &scratch {
                col_idx.push(p);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        assert_eq!(row_ptr.len(), rows.len() + 1, "one full row per block row");
        SparseBlock {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        }
    }

    /// Builds a block from a dense matrix, keeping entries that are not exactly zero.
    pub fn from_dense(rows: Vec<NodeId>, cols: Vec<NodeId>, dense: &DMatrix<f64>) -> Result<Self> {
        if dense.nrows() != rows.len() || dense.ncols() != cols.len() {
            return Err(SmfError::DimensionMismatch(format!(
                "dense {}x{} vs {} rows / {} cols",
                dense.nrows(),
                dense.ncols(),
                rows.len(),
                cols.len()
            )));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::new();
        let mut values = Vec::new();
        for r in 0..dense.nrows() {
            for c in 0..dense.ncols() {
                let v = dense[(r, c)];
                if v != 0.0 {
                    col_idx.push(c);
                    values.push(v);
                }
            }
            row_ptr.push(col_idx.len());
        }
        Ok(SparseBlock {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    pub fn rows(&self) -> &[NodeId] {
        &self.rows
    }

    pub fn cols(&self) -> &[NodeId] {
        &self.cols
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.cols.len()
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Entries of local row `r` as `(local col, value)`.
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_ptr[r]..self.row_ptr[r + 1];
        self.col_idx[span.clone()]
            .iter()
            .copied()
            .zip(self.values[span].iter().copied())
    }

    /// All entries as `(local row, local col, value)`.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.nrows()).flat_map(move |r| self.row(r).map(move |(c, v)| (r, c, v)))
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(j, _)| j == c).map_or(0.0, |(_, v)| v)
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.nrows(), self.ncols());
        for (r, c, v) in self.triplets() {
            m[(r, c)] = v;
        }
        m
    }

    pub fn transpose(&self) -> SparseBlock {
        let mut per_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.ncols()];
        for (r, c, v) in self.triplets() {
            per_col[c].push((r, v));
        }
        let mut row_ptr = vec![0];
        let mut col_idx = Vec::with_capacity(self.nnz());
        let mut values = Vec::with_capacity(self.nnz());
        for entries in per_col {
            for (r, v) in entries {
                col_idx.push(r);
                values.push(v);
            }
            row_ptr.push(col_idx.len());
        }
        SparseBlock {
            rows: self.cols.clone(),
            cols: self.rows.clone(),
            row_ptr,
            col_idx,
            values,
        }
    }

    /// `X · Self` for dense `X` (p × nrows), producing p × ncols.
    pub fn left_mul_dense(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.ncols(), self.nrows());
        let mut out = DMatrix::zeros(x.nrows(), self.ncols());
        for (r, c, v) in self.triplets() {
            let src = x.column(r);
            out.column_mut(c).axpy(v, &src, 1.0);
        }
        out
    }

    /// `X · Selfᵀ` for dense `X` (p × ncols), producing p × nrows.
    pub fn left_mul_dense_transposed(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(x.ncols(), self.ncols());
        let mut out = DMatrix::zeros(x.nrows(), self.nrows());
        for (r, c, v) in self.triplets() {
            let src = x.column(c);
            out.column_mut(r).axpy(v, &src, 1.0);
        }
        out
    }
}

/// The `(rows × cols)` sub-block of `M`.
pub fn proximity_block(
    g: &GraphStore,
    cfg: ProximityConfig,
    rows: &[NodeId],
    cols: &[NodeId],
) -> Result<SparseBlock> {
    if rows.is_empty() || cols.is_empty() {
        return Err(SmfError::InvalidArgument(
            "proximity block needs non-empty row and column sets".into(),
        ));
    }
    for &v in rows.iter().chain(cols) {
        g.check_node(v)?;
    }
    let full: Vec<SparseVec> = rows
        .iter()
        .map(|&r| proximity_row_unchecked(g, cfg, r))
        .collect();
    Ok(SparseBlock::from_full_rows(
        rows.to_vec(),
        cols.to_vec(),
        full.iter(),
    ))
}

/// Products of `M` against the complement `ī = V ∖ (V₀ ∪ Vᵢ)`, which is all a
/// section needs to know about nodes outside its own set.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplementProducts {
    /// `M_0ī · M_0īᵀ` (k × k)
    pub gram_row: DMatrix<f64>,
    /// `M_ī0ᵀ · M_ī0` (k × k)
    pub gram_col: DMatrix<f64>,
    /// `M_0ī · M_iīᵀ` (k × nᵢ)
    pub cross_row: DMatrix<f64>,
    /// `M_ī0ᵀ · M_īi` (k × nᵢ)
    pub cross_col: DMatrix<f64>,
    /// `‖M_iī‖²_F`
    pub row_norm_sq: f64,
    /// `‖M_īi‖²_F`
    pub col_norm_sq: f64,
}

impl ComplementProducts {
    pub fn zeros(k: usize, n_i: usize) -> Self {
        ComplementProducts {
            gram_row: DMatrix::zeros(k, k),
            gram_col: DMatrix::zeros(k, k),
            cross_row: DMatrix::zeros(k, n_i),
            cross_col: DMatrix::zeros(k, n_i),
            row_norm_sq: 0.0,
            col_norm_sq: 0.0,
        }
    }
}

fn symmetrize(m: &mut DMatrix<f64>) {
    let t = m.transpose();
    *m += t;
    *m *= 0.5;
}

/// Full rows and columns of `M` for the landmark set, shared read-only by
/// every section.
#[derive(Clone, Debug)]
pub struct LandmarkProximity {
    cfg: ProximityConfig,
    landmarks: Vec<NodeId>,
    position: HashMap<NodeId, usize>,
    rows: Vec<SparseVec>,
    cols: Vec<SparseVec>,
}

impl LandmarkProximity {
    pub fn new(g: &GraphStore, cfg: ProximityConfig, landmarks: &[NodeId]) -> Result<Self> {
        if landmarks.is_empty() {
            return Err(SmfError::InvalidArgument("empty landmark set".into()));
        }
        let mut position = HashMap::with_capacity(landmarks.len());
        for (a, &l) in landmarks.iter().enumerate() {
            g.check_node(l)?;
            if position.insert(l, a).is_some() {
                return Err(SmfError::InvalidArgument(format!(
                    "landmark {l} listed twice"
                )));
            }
        }
        let rows = landmarks
            .iter()
            .map(|&l| proximity_row_unchecked(g, cfg, l))
            .collect();
        let cols = landmarks
            .iter()
            .map(|&l| proximity_col_unchecked(g, cfg, l))
            .collect();
        Ok(LandmarkProximity {
            cfg,
            landmarks: landmarks.to_vec(),
            position,
            rows,
            cols,
        })
    }

    pub fn config(&self) -> ProximityConfig {
        self.cfg
    }

    pub fn landmarks(&self) -> &[NodeId] {
        &self.landmarks
    }

    pub fn k(&self) -> usize {
        self.landmarks.len()
    }

    pub fn contains(&self, node: NodeId) -> bool {
        self.position.contains_key(&node)
    }

    /// `M₀₀`
    pub fn core_block(&self) -> SparseBlock {
        SparseBlock::from_full_rows(
            self.landmarks.clone(),
            self.landmarks.clone(),
            self.rows.iter(),
        )
    }
}

/// Everything one section reads from `M`.
#[derive(Clone, Debug)]
pub struct ProximityBlockSet {
    /// `M_ii` (nᵢ × nᵢ)
    pub m_ii: SparseBlock,
    /// `M_0i` (k × nᵢ)
    pub m_0i: SparseBlock,
    /// `M_i0` (nᵢ × k)
    pub m_i0: SparseBlock,
    pub complement: ComplementProducts,
}

impl ProximityBlockSet {
    pub fn n_i(&self) -> usize {
        self.m_ii.nrows()
    }

    pub fn k(&self) -> usize {
        self.m_0i.nrows()
    }

    /// Builds the blocks for `target` against precomputed landmark rows and columns.
    pub fn build(g: &GraphStore, lp: &LandmarkProximity, target: &[NodeId]) -> Result<Self> {
        if target.is_empty() {
            return Err(SmfError::InvalidArgument("empty target set".into()));
        }
        let mut target_pos = HashMap::with_capacity(target.len());
        for (p, &t) in target.iter().enumerate() {
            g.check_node(t)?;
            if lp.contains(t) {
                return Err(SmfError::InvalidArgument(format!(
                    "node {t} is both a landmark and a target"
                )));
            }
            if target_pos.insert(t, p).is_some() {
                return Err(SmfError::InvalidArgument(format!(
                    "target node {t} listed twice"
                )));
            }
        }
        let cfg = lp.cfg;
        let target_rows: Vec<SparseVec> = target
            .iter()
            .map(|&t| proximity_row_unchecked(g, cfg, t))
            .collect();
        let target_cols: Vec<SparseVec> = target
            .iter()
            .map(|&t| proximity_col_unchecked(g, cfg, t))
            .collect();

        let m_ii = SparseBlock::from_full_rows(target.to_vec(), target.to_vec(), target_rows.iter());
        let m_0i = SparseBlock::from_full_rows(lp.landmarks.clone(), target.to_vec(), lp.rows.iter());
        let m_i0 = SparseBlock::from_full_rows(target.to_vec(), lp.landmarks.clone(), target_rows.iter());

        let in_complement = |v: NodeId| !lp.position.contains_key(&v) && !target_pos.contains_key(&v);
        let k = lp.k();
        let n_i = target.len();
        let mut complement = ComplementProducts::zeros(k, n_i);

        // Row side: columns c ∈ ī of M_0ī and M_iī.
        let (landmark_side, target_side) = group_by_complement(&lp.rows, &target_rows, in_complement);
        accumulate(
            &landmark_side,
            &target_side,
            &mut complement.gram_row,
            &mut complement.cross_row,
            &mut complement.row_norm_sq,
        );
        // Column side: rows r ∈ ī of M_ī0 and M_īi.
        let (landmark_side, target_side) = group_by_complement(&lp.cols, &target_cols, in_complement);
        accumulate(
            &landmark_side,
            &target_side,
            &mut complement.gram_col,
            &mut complement.cross_col,
            &mut complement.col_norm_sq,
        );
        symmetrize(&mut complement.gram_row);
        symmetrize(&mut complement.gram_col);

        Ok(ProximityBlockSet {
            m_ii,
            m_0i,
            m_i0,
            complement,
        })
    }
}

type Grouped = HashMap<NodeId, Vec<(usize, f64)>>;

/// Transposes landmark/target vectors into per-complement-node entry lists.
fn group_by_complement(
    landmark_vecs: &[SparseVec],
    target_vecs: &[SparseVec],
    in_complement: impl Fn(NodeId) -> bool,
) -> (Grouped, Grouped) {
    let by_node = |vecs: &[SparseVec]| {
        let mut grouped: Grouped = HashMap::new();
        for (a, v) in vecs.iter().enumerate() {
            for &(node, x) in v {
                if in_complement(node) {
                    grouped.entry(node).or_default().push((a, x));
                }
            }
        }
        grouped
    };
    (by_node(landmark_vecs), by_node(target_vecs))
}

fn accumulate(
    landmark_side: &Grouped,
    target_side: &Grouped,
    gram: &mut DMatrix<f64>,
    cross: &mut DMatrix<f64>,
    norm_sq: &mut f64,
) {
    // Fixed node order keeps the floating-point sums reproducible.
    let mut nodes: Vec<NodeId> = landmark_side.keys().chain(target_side.keys()).copied().collect();
    nodes.sort_unstable();
    nodes.dedup();
    for node in nodes {
        let lm = landmark_side.get(&node).map_or(&[][..], |v| v.as_slice());
        let tg = target_side.get(&node).map_or(&[][..], |v| v.as_slice());
        for &(a, x) in lm {
            for &(b, y) in lm {
                gram[(a, b)] += x * y;
            }
            for &(p, y) in tg {
                cross[(a, p)] += x * y;
            }
        }
        *norm_sq += tg.iter().map(|&(_, y)| y * y).sum::<f64>();
    }
}

/// `complement_products` for one landmark/target pair without reusing landmark rows.
pub fn complement_products(
    g: &GraphStore,
    cfg: ProximityConfig,
    landmarks: &[NodeId],
    target: &[NodeId],
) -> Result<ComplementProducts> {
    if let Some(&t) = target.iter().find(|t| landmarks.contains(t)) {
        return Err(SmfError::InvalidArgument(format!(
            "landmarks and target overlap at node {t}"
        )));
    }
    let lp = LandmarkProximity::new(g, cfg, landmarks)?;
    Ok(ProximityBlockSet::build(g, &lp, target)?.complement)
}
