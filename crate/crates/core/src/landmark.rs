//! Landmark selection: degree-deterministic, degree-proportional, uniform and
//! greedy dominating set.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SmfError};
use crate::graph::{GraphStore, NodeId};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LandmarkStrategy {
    /// k highest total degrees
    Dd,
    /// sampled without replacement, weights = total degree
    Dp,
    /// uniform without replacement
    Uf,
    /// greedy dominating set over a degree heap
    Gds,
    /// read from a file
    External,
}

impl FromStr for LandmarkStrategy {
    type Err = SmfError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "dd" => Ok(Self::Dd),
            "dp" => Ok(Self::Dp),
            "uf" => Ok(Self::Uf),
            "gds" => Ok(Self::Gds),
            "external" | "file" => Ok(Self::External),
            other => Err(SmfError::InvalidArgument(format!(
                "unknown landmark strategy '{other}' (dd, dp, uf, gds)"
            ))),
        }
    }
}

impl std::fmt::Display for LandmarkStrategy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Self::Dd => "dd",
            Self::Dp => "dp",
            Self::Uf => "uf",
            Self::Gds => "gds",
            Self::External => "external",
        };
        f.write_str(s)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LandmarkSet {
    pub nodes: Vec<NodeId>,
    pub strategy: LandmarkStrategy,
    pub seed: Option<u64>,
}

impl LandmarkSet {
    pub fn k(&self) -> usize {
        self.nodes.len()
    }
}

fn check_k(g: &GraphStore, k: usize) -> Result<()> {
    if k == 0 {
        return Err(SmfError::InvalidArgument("k must be ≥ 1".into()));
    }
    if k > g.node_count() {
        return Err(SmfError::InvalidArgument(format!(
            "k = {k} exceeds node count {}",
            g.node_count()
        )));
    }
    Ok(())
}

pub fn select_dd(g: &GraphStore, k: usize) -> Result<LandmarkSet> {
    check_k(g, k)?;
    let mut nodes: Vec<NodeId> = (0..g.node_count()).collect();
    nodes.sort_by_key(|&v| (Reverse(g.total_degree(v)), v));
    nodes.truncate(k);
    Ok(LandmarkSet {
        nodes,
        strategy: LandmarkStrategy::Dd,
        seed: None,
    })
}

pub fn select_dp(g: &GraphStore, k: usize, seed: u64) -> Result<LandmarkSet> {
    check_k(g, k)?;
    let weighted: Vec<(NodeId, usize)> = (0..g.node_count())
        .map(|v| (v, g.total_degree(v)))
        .filter(|&(_, d)| d > 0)
        .collect();
    if weighted.len() < k {
        return Err(SmfError::InvalidArgument(format!(
            "only {} nodes have positive degree, cannot sample k = {k}",
            weighted.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = weighted
        .choose_multiple_weighted(&mut rng, k, |&(_, d)| d as f64)
        .map_err(|e| SmfError::Numerical(format!("weighted sampling failed: {e}")))?
        .map(|&(v, _)| v)
        .collect();
    Ok(LandmarkSet {
        nodes,
        strategy: LandmarkStrategy::Dp,
        seed: Some(seed),
    })
}

pub fn select_uf(g: &GraphStore, k: usize, seed: u64) -> Result<LandmarkSet> {
    check_k(g, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = index::sample(&mut rng, g.node_count(), k).into_vec();
    Ok(LandmarkSet {
        nodes,
        strategy: LandmarkStrategy::Uf,
        seed: Some(seed),
    })
}

/// Greedy dominating set: pop nodes by (total degree, smaller id); keep a
/// node only if neither it nor any undirected neighbour is already selected.
/// May return fewer than `k` nodes, in which case the result dominates `V`.
pub fn select_gds(g: &GraphStore, k: usize) -> Result<LandmarkSet> {
    if k == 0 {
        return Err(SmfError::InvalidArgument("k must be ≥ 1".into()));
    }
    let mut heap: BinaryHeap<(usize, Reverse<NodeId>)> = (0..g.node_count())
        .map(|v| (g.total_degree(v), Reverse(v)))
        .collect();
    let mut dominated = vec![false; g.node_count()];
    let mut nodes = Vec::with_capacity(k);
    while let Some((_, Reverse(v))) = heap.pop() {
        if nodes.len() == k {
            break;
        }
        if dominated[v] {
            continue;
        }
        nodes.push(v);
        dominated[v] = true;
        for u in g.undirected_neighbors(v) {
            dominated[u] = true;
        }
    }
    Ok(LandmarkSet {
        nodes,
        strategy: LandmarkStrategy::Gds,
        seed: None,
    })
}

/// Dispatches on strategy. `External` is rejected here; use [`load_landmarks`].
pub fn select(g: &GraphStore, strategy: LandmarkStrategy, k: usize, seed: u64) -> Result<LandmarkSet> {
    match strategy {
        LandmarkStrategy::Dd => select_dd(g, k),
        LandmarkStrategy::Dp => select_dp(g, k, seed),
        LandmarkStrategy::Uf => select_uf(g, k, seed),
        LandmarkStrategy::Gds => select_gds(g, k),
        LandmarkStrategy::External => Err(SmfError::InvalidArgument(
            "external landmarks must be loaded from a file".into(),
        )),
    }
}

/// True when `nodes` dominates every node of `g` (undirected view).
pub fn is_dominating(g: &GraphStore, nodes: &[NodeId]) -> bool {
    let mut dominated = vec![false; g.node_count()];
    for &v in nodes {
        dominated[v] = true;
        for u in g.undirected_neighbors(v) {
            dominated[u] = true;
        }
    }
    dominated.into_iter().all(|d| d)
}

/// Writes one node label per line.
pub fn save_landmarks(path: impl AsRef<Path>, g: &GraphStore, lms: &LandmarkSet) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for &v in &lms.nodes {
        writeln!(out, "{}", g.label(v)).expect("write to Vec");
    }
    fs::write(path, out).map_err(|e| SmfError::io(path, e))
}

pub fn load_landmarks(path: impl AsRef<Path>, g: &GraphStore) -> Result<LandmarkSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| SmfError::io(path, e))?;
    let labels = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'));
    let nodes = g.resolve_labels(labels)?;
    let mut seen = vec![false; g.node_count()];
    for &v in &nodes {
        if std::mem::replace(&mut seen[v], true) {
            return Err(SmfError::InvalidArgument(format!(
                "landmark '{}' listed twice in {}",
                g.label(v),
                path.display()
            )));
        }
    }
    if nodes.is_empty() {
        return Err(SmfError::InvalidArgument(format!(
            "{} lists no landmarks",
            path.display()
        )));
    }
    Ok(LandmarkSet {
        nodes,
        strategy: LandmarkStrategy::External,
        seed: None,
    })
}
