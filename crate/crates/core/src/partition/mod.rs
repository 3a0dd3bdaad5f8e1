//! Partitioning of the non-landmark nodes into independently solved sets.

pub mod louvain;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, SmfError};
use crate::graph::{GraphStore, NodeId};

use self::louvain::WeightedGraph;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PartitionMode {
    Louvain,
    Random,
    InterestedOnly,
    External,
}

impl PartitionMode {
    /// Whether the sets must cover every non-excluded node.
    pub fn covers_all(self) -> bool {
        matches!(self, PartitionMode::Louvain | PartitionMode::Random)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPlan {
    pub sets: Vec<Vec<NodeId>>,
    pub mode: PartitionMode,
    pub seed: Option<u64>,
    /// Excluded (landmark) nodes that were requested or listed and then dropped.
    pub dropped: usize,
}

impl PartitionPlan {
    pub fn set_count(&self) -> usize {
        self.sets.len()
    }

    pub fn node_count(&self) -> usize {
        self.sets.iter().map(Vec::len).sum()
    }

    /// Checks disjointness, non-emptiness, range, exclusion and (for
    /// covering modes) coverage of `V ∖ excluded`.
    pub fn validate(&self, n: usize, excluded: &[NodeId]) -> Result<()> {
        let excluded: HashSet<NodeId> = excluded.iter().copied().collect();
        let mut seen = vec![false; n];
        for (s, set) in self.sets.iter().enumerate() {
            if set.is_empty() {
                return Err(SmfError::Partition(format!("set {s} is empty")));
            }
            for &v in set {
                if v >= n {
                    return Err(SmfError::NodeOutOfRange { node: v, n });
                }
                if excluded.contains(&v) {
                    return Err(SmfError::Partition(format!(
                        "excluded node {v} appears in set {s}"
                    )));
                }
                if std::mem::replace(&mut seen[v], true) {
                    return Err(SmfError::Partition(format!("node {v} appears twice")));
                }
            }
        }
        if self.mode.covers_all() {
            let covered = seen.iter().filter(|&&b| b).count();
            if covered + excluded.len() != n {
                return Err(SmfError::Partition(format!(
                    "{} of {} non-excluded nodes covered",
                    covered,
                    n - excluded.len()
                )));
            }
        }
        Ok(())
    }
}

fn candidates(g: &GraphStore, excluded: &[NodeId]) -> Result<(Vec<NodeId>, Vec<bool>)> {
    let mut is_excluded = vec![false; g.node_count()];
    for &v in excluded {
        g.check_node(v)?;
        is_excluded[v] = true;
    }
    let nodes = (0..g.node_count()).filter(|&v| !is_excluded[v]).collect();
    Ok((nodes, is_excluded))
}

fn chunk_sorted(mut nodes: Vec<NodeId>, max_set_size: usize) -> Vec<Vec<NodeId>> {
    nodes.sort_unstable();
    nodes.chunks(max_set_size).map(<[NodeId]>::to_vec).collect()
}

fn check_max_set_size(max_set_size: usize) -> Result<()> {
    if max_set_size == 0 {
        return Err(SmfError::InvalidArgument("max_set_size must be ≥ 1".into()));
    }
    Ok(())
}

/// Seeded shuffle of `V ∖ excluded` dealt round-robin into `s` sets.
pub fn partition_random(
    g: &GraphStore,
    excluded: &[NodeId],
    s: usize,
    seed: u64,
) -> Result<PartitionPlan> {
    if s == 0 {
        return Err(SmfError::InvalidArgument("s must be ≥ 1".into()));
    }
    let (mut nodes, _) = candidates(g, excluded)?;
    if nodes.len() < s {
        return Err(SmfError::InvalidArgument(format!(
            "cannot split {} nodes into {s} non-empty sets",
            nodes.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    nodes.shuffle(&mut rng);
    let mut sets = vec![Vec::with_capacity(nodes.len() / s + 1); s];
    for (i, v) in nodes.into_iter().enumerate() {
        sets[i % s].push(v);
    }
    for set in &mut sets {
        set.sort_unstable();
    }
    Ok(PartitionPlan {
        sets,
        mode: PartitionMode::Random,
        seed: Some(seed),
        dropped: 0,
    })
}

/// Only the requested nodes, in sorted chunks of at most `max_set_size`.
/// Requested landmarks are dropped; they are served by the landmark factors.
pub fn partition_interested(
    g: &GraphStore,
    excluded: &[NodeId],
    requested: &[NodeId],
    max_set_size: usize,
) -> Result<PartitionPlan> {
    check_max_set_size(max_set_size)?;
    if requested.is_empty() {
        return Err(SmfError::InvalidArgument("no requested nodes".into()));
    }
    let (_, is_excluded) = candidates(g, excluded)?;
    let mut wanted: Vec<NodeId> = Vec::with_capacity(requested.len());
    for &v in requested {
        g.check_node(v)?;
        wanted.push(v);
    }
    wanted.sort_unstable();
    wanted.dedup();
    let before = wanted.len();
    wanted.retain(|&v| !is_excluded[v]);
    let dropped = before - wanted.len();
    if wanted.is_empty() {
        return Err(SmfError::Partition(
            "every requested node is a landmark; nothing to embed beyond landmarks".into(),
        ));
    }
    if dropped > 0 {
        warn!("{dropped} requested node(s) are landmarks and are served from the landmark factors");
    }
    Ok(PartitionPlan {
        sets: chunk_sorted(wanted, max_set_size),
        mode: PartitionMode::InterestedOnly,
        seed: None,
        dropped,
    })
}

/// Louvain communities of the undirected view restricted to `V ∖ excluded`.
/// Communities larger than `max_set_size` are chunked; isolated nodes form
/// one trailing set.
pub fn partition_louvain(
    g: &GraphStore,
    excluded: &[NodeId],
    seed: u64,
    max_set_size: usize,
) -> Result<PartitionPlan> {
    check_max_set_size(max_set_size)?;
    let (nodes, is_excluded) = candidates(g, excluded)?;
    if nodes.is_empty() {
        return Err(SmfError::Partition("no nodes left to partition".into()));
    }
    let mut local = vec![usize::MAX; g.node_count()];
    for (p, &v) in nodes.iter().enumerate() {
        local[v] = p;
    }
    let mut edges = Vec::new();
    let mut has_edge = vec![false; nodes.len()];
    for (p, &v) in nodes.iter().enumerate() {
        for u in g.undirected_neighbors(v) {
            if !is_excluded[u] && v < u {
                let q = local[u];
                edges.push((p, q));
                has_edge[p] = true;
                has_edge[q] = true;
            }
        }
    }
    let mut sets = Vec::new();
    if edges.is_empty() {
        warn!("no edges among partition candidates; placing all nodes in one set");
        sets.extend(chunk_sorted(nodes, max_set_size));
    } else {
        let wg = WeightedGraph::from_edges(nodes.len(), &edges);
        let (community, q) = louvain::louvain(&wg, seed);
        log::info!("louvain modularity {q:.4}");
        let mut groups: BTreeMap<usize, Vec<NodeId>> = BTreeMap::new();
        let mut isolated = Vec::new();
        for (p, &v) in nodes.iter().enumerate() {
            if has_edge[p] {
                groups.entry(community[p]).or_default().push(v);
            } else {
                isolated.push(v);
            }
        }
        for (_, members) in groups {
            sets.extend(chunk_sorted(members, max_set_size));
        }
        if !isolated.is_empty() {
            sets.extend(chunk_sorted(isolated, max_set_size));
        }
    }
    Ok(PartitionPlan {
        sets,
        mode: PartitionMode::Louvain,
        seed: Some(seed),
        dropped: 0,
    })
}

/// Modularity of a plan on the undirected view restricted to `V ∖ excluded`.
/// Nodes outside every set count as singletons.
pub fn plan_modularity(g: &GraphStore, excluded: &[NodeId], sets: &[Vec<NodeId>]) -> Result<f64> {
    let (nodes, is_excluded) = candidates(g, excluded)?;
    let mut local = vec![usize::MAX; g.node_count()];
    for (p, &v) in nodes.iter().enumerate() {
        local[v] = p;
    }
    let mut edges = Vec::new();
    for (p, &v) in nodes.iter().enumerate() {
        for u in g.undirected_neighbors(v) {
            if !is_excluded[u] && v < u {
                edges.push((p, local[u]));
            }
        }
    }
    let mut community = vec![usize::MAX; nodes.len()];
    for (s, set) in sets.iter().enumerate() {
        for &v in set {
            community[local[v]] = s;
        }
    }
    for (next, c) in (sets.len()..).zip(community.iter_mut().filter(|c| **c == usize::MAX)) {
        *c = next;
    }
    Ok(WeightedGraph::from_edges(nodes.len(), &edges).modularity(&community))
}

/// Reads "node_label set_index" lines. Excluded nodes are dropped and counted.
pub fn load_partition(
    path: impl AsRef<Path>,
    g: &GraphStore,
    excluded: &[NodeId],
) -> Result<PartitionPlan> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| SmfError::io(path, e))?;
    let excluded_set: HashSet<NodeId> = excluded.iter().copied().collect();
    let mut assigned: HashMap<NodeId, u64> = HashMap::new();
    let mut by_set: BTreeMap<u64, Vec<NodeId>> = BTreeMap::new();
    let mut dropped = HashSet::new();
    for (lineno, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| SmfError::io(path, e))?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| SmfError::Parse {
            path: path.to_path_buf(),
            line: lineno + 1,
            message,
        };
        let mut tokens = trimmed.split_whitespace();
        let (Some(label), Some(set), None) = (tokens.next(), tokens.next(), tokens.next()) else {
            return Err(parse_err("expected 'node_label set_index'".into()));
        };
        let set: u64 = set
            .parse()
            .map_err(|_| parse_err(format!("bad set index '{set}'")))?;
        let v = g
            .id_map()
            .id(label)
            .ok_or_else(|| SmfError::UnknownLabel(label.to_string()))?;
        if excluded_set.contains(&v) {
            dropped.insert(v);
            continue;
        }
        match assigned.get(&v) {
            Some(&prev) if prev != set => {
                return Err(SmfError::Partition(format!(
                    "node '{label}' assigned to sets {prev} and {set}"
                )));
            }
            Some(_) => continue,
            None => {
                assigned.insert(v, set);
                by_set.entry(set).or_default().push(v);
            }
        }
    }
    if !dropped.is_empty() {
        warn!("{} landmark node(s) dropped from the partition file", dropped.len());
    }
    let sets: Vec<Vec<NodeId>> = by_set
        .into_values()
        .map(|mut s| {
            s.sort_unstable();
            s
        })
        .collect();
    if sets.is_empty() {
        return Err(SmfError::Partition(format!(
            "{} assigns no non-landmark nodes",
            path.display()
        )));
    }
    let plan = PartitionPlan {
        sets,
        mode: PartitionMode::External,
        seed: None,
        dropped: dropped.len(),
    };
    plan.validate(g.node_count(), excluded)?;
    Ok(plan)
}
