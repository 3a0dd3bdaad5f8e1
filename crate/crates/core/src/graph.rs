//! Immutable sparse graph with contiguous internal ids.
//!
//! Out- and in-adjacency are both kept in compressed row form so that rows
//! and columns of the transition matrix can be produced locally.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use log::{info, warn};

use crate::error::{Result, SmfError};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DegreeMode {
    Out,
    In,
    Total,
}

/// Bijection between external labels and internal ids (first-seen order).
#[derive(Clone, Debug, Default)]
pub struct IdMap {
    labels: Vec<String>,
    index: HashMap<String, NodeId>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get_or_insert(&mut self, label: &str) -> NodeId {
        if let Some(&id) = self.index.get(label) {
            return id;
        }
        let id = self.labels.len();
        self.labels.push(label.to_string());
        self.index.insert(label.to_string(), id);
        id
    }

    pub fn id(&self, label: &str) -> Option<NodeId> {
        self.index.get(label).copied()
    }

    pub fn label(&self, id: NodeId) -> &str {
        &self.labels[id]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

/// Counts gathered while cleaning the raw edge list.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct LoadStats {
    pub raw_edges: usize,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

#[derive(Clone, Debug)]
struct Csr {
    offsets: Vec<usize>,
    targets: Vec<NodeId>,
}

impl Csr {
    /// `pairs` must be sorted and deduplicated.
    fn from_sorted_pairs(n: usize, pairs: &[(NodeId, NodeId)]) -> Self {
        let mut offsets = vec![0usize; n + 1];
        for &(s, _) in pairs {
            offsets[s + 1] += 1;
        }
        for i in 0..n {
            offsets[i + 1] += offsets[i];
        }
        let targets = pairs.iter().map(|&(_, t)| t).collect();
        Csr { offsets, targets }
    }

    fn row(&self, i: NodeId) -> &[NodeId] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }
}

#[derive(Clone, Debug)]
pub struct GraphStore {
    directed: bool,
    out_adj: Csr,
    in_adj: Csr,
    id_map: IdMap,
    stats: LoadStats,
}

impl GraphStore {
    /// Builds a graph over ids `0..n` labelled by their decimal string.
    pub fn from_edges(n: usize, edges: &[(NodeId, NodeId)], directed: bool) -> Result<Self> {
        let mut id_map = IdMap::new();
        for i in 0..n {
            id_map.get_or_insert(&i.to_string());
        }
        for &(u, v) in edges {
            for x in [u, v] {
                if x >= n {
                    return Err(SmfError::NodeOutOfRange { node: x, n });
                }
            }
        }
        Self::build(id_map, edges.to_vec(), directed)
    }

    fn build(id_map: IdMap, mut edges: Vec<(NodeId, NodeId)>, directed: bool) -> Result<Self> {
        let n = id_map.len();
        let raw_edges = edges.len();
        let before = edges.len();
        edges.retain(|&(u, v)| u != v);
        let self_loops_dropped = before - edges.len();
        if !directed {
            let mirrored: Vec<_> = edges.iter().map(|&(u, v)| (v, u)).collect();
            edges.extend(mirrored);
        }
        edges.sort_unstable();
        let before = edges.len();
        edges.dedup();
        let mut duplicates_dropped = before - edges.len();
        if !directed {
            // each undirected duplicate was counted once per stored direction
            duplicates_dropped /= 2;
        }
        if edges.is_empty() {
            return Err(SmfError::EmptyGraph);
        }
        let out_adj = Csr::from_sorted_pairs(n, &edges);
        let in_adj = if directed {
            let mut rev: Vec<_> = edges.iter().map(|&(u, v)| (v, u)).collect();
            rev.sort_unstable();
            Csr::from_sorted_pairs(n, &rev)
        } else {
            out_adj.clone()
        };
        Ok(GraphStore {
            directed,
            out_adj,
            in_adj,
            id_map,
            stats: LoadStats {
                raw_edges,
                self_loops_dropped,
                duplicates_dropped,
            },
        })
    }

    pub fn node_count(&self) -> usize {
        self.id_map.len()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Number of arcs for directed graphs, number of unordered pairs otherwise.
    pub fn edge_count(&self) -> usize {
        let stored = self.out_adj.targets.len();
        if self.directed {
            stored
        } else {
            stored / 2
        }
    }

    pub fn stats(&self) -> LoadStats {
        self.stats
    }

    pub fn id_map(&self) -> &IdMap {
        &self.id_map
    }

    pub fn label(&self, node: NodeId) -> &str {
        self.id_map.label(node)
    }

    pub fn check_node(&self, node: NodeId) -> Result<()> {
        if node < self.node_count() {
            Ok(())
        } else {
            Err(SmfError::NodeOutOfRange {
                node,
                n: self.node_count(),
            })
        }
    }

    pub fn out_neighbors(&self, node: NodeId) -> &[NodeId] {
        self.out_adj.row(node)
    }

    pub fn in_neighbors(&self, node: NodeId) -> &[NodeId] {
        self.in_adj.row(node)
    }

    pub fn out_degree(&self, node: NodeId) -> usize {
        self.out_adj.row(node).len()
    }

    pub fn in_degree(&self, node: NodeId) -> usize {
        self.in_adj.row(node).len()
    }

    /// Out + in for directed graphs; the plain degree for undirected ones.
    pub fn total_degree(&self, node: NodeId) -> usize {
        if self.directed {
            self.out_degree(node) + self.in_degree(node)
        } else {
            self.out_degree(node)
        }
    }

    pub fn degree(&self, node: NodeId, mode: DegreeMode) -> Result<usize> {
        self.check_node(node)?;
        Ok(match mode {
            DegreeMode::Out => self.out_degree(node),
            DegreeMode::In => self.in_degree(node),
            DegreeMode::Total => self.total_degree(node),
        })
    }

    /// Sorted, deduplicated neighbors ignoring edge direction.
    pub fn undirected_neighbors(&self, node: NodeId) -> Vec<NodeId> {
        let out = self.out_neighbors(node);
        if !self.directed {
            return out.to_vec();
        }
        let inn = self.in_neighbors(node);
        let mut merged = Vec::with_capacity(out.len() + inn.len());
        let (mut i, mut j) = (0, 0);
        while i < out.len() || j < inn.len() {
            let next = match (out.get(i), inn.get(j)) {
                (Some(&a), Some(&b)) if a == b => {
                    i += 1;
                    j += 1;
                    a
                }
                (Some(&a), Some(&b)) if a < b => {
                    i += 1;
                    a
                }
                (Some(_), Some(&b)) => {
                    j += 1;
                    b
                }
                (Some(&a), None) => {
                    i += 1;
                    a
                }
                (None, Some(&b)) => {
                    j += 1;
                    b
                }
                (None, None) => unreachable!(),
            };
            merged.push(next);
        }
        merged
    }

    /// Resolves external labels to internal ids.
    pub fn resolve_labels<'a, I>(&self, labels: I) -> Result<Vec<NodeId>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        labels
            .into_iter()
            .map(|l| {
                self.id_map
                    .id(l)
                    .ok_or_else(|| SmfError::UnknownLabel(l.to_string()))
            })
            .collect()
    }
}

/// Reads a whitespace-separated edge list ("src dst [1]" per line, `#` comments).
///
/// Undirected mode symmetrizes every edge.
pub fn load_edge_list(path: impl AsRef<Path>, directed: bool) -> Result<GraphStore> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| SmfError::io(path, e))?;
    let reader = BufReader::new(file);
    let mut id_map = IdMap::new();
    let mut edges = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
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
        let tokens: Vec<&str> = trimmed.split_whitespace().collect();
        match tokens.len() {
            2 => {}
            3 => {
                let w: f64 = tokens[2]
                    .parse()
                    .map_err(|_| parse_err(format!("bad edge weight '{}'", tokens[2])))?;
                if w != 1.0 {
                    return Err(SmfError::Unsupported(format!(
                        "weighted edge at {}:{} (weight {w}); only unweighted graphs are supported",
                        path.display(),
                        lineno + 1
                    )));
                }
            }
            k => return Err(parse_err(format!("expected 2 or 3 tokens, found {k}"))),
        }
        let u = id_map.get_or_insert(tokens[0]);
        let v = id_map.get_or_insert(tokens[1]);
        edges.push((u, v));
    }
    if edges.is_empty() {
        return Err(SmfError::EmptyGraph);
    }
    let g = GraphStore::build(id_map, edges, directed)?;
    let stats = g.stats();
    if stats.self_loops_dropped > 0 {
        warn!("dropped {} self-loop(s)", stats.self_loops_dropped);
    }
    info!(
        "loaded {}: n = {}, |E| = {} ({}), {} duplicate(s) removed",
        path.display(),
        g.node_count(),
        g.edge_count(),
        if directed { "directed" } else { "undirected" },
        stats.duplicates_dropped
    );
    Ok(g)
}
