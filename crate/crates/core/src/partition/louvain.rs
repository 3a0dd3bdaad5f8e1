//! Two-phase Louvain modularity maximization on a weighted undirected graph.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Minimum modularity gain for a node move to count.
pub const MIN_GAIN: f64 = 1e-7;

/// Weighted undirected graph over `0..n`. `adj[i]` holds off-diagonal
/// neighbours (each edge appears in both endpoint lists); `self_weight[i]` is
/// the diagonal entry of the adjacency matrix.
#[derive(Clone, Debug)]
pub struct WeightedGraph {
    adj: Vec<Vec<(usize, f64)>>,
    self_weight: Vec<f64>,
}

impl WeightedGraph {
    /// Unit-weight graph from undirected edges (`u != v`, each pair once).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Self {
        let mut adj = vec![Vec::new(); n];
        for &(u, v) in edges {
            debug_assert_ne!(u, v);
            adj[u].push((v, 1.0));
            adj[v].push((u, 1.0));
        }
        for row in &mut adj {
            row.sort_by_key(|e| e.0);
        }
        WeightedGraph {
            adj,
            self_weight: vec![0.0; n],
        }
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    fn strength(&self, i: usize) -> f64 {
        self.self_weight[i] + self.adj[i].iter().map(|e| e.1).sum::<f64>()
    }

    /// Sum of all adjacency entries, i.e. 2m.
    fn total_strength(&self) -> f64 {
        (0..self.node_count()).map(|i| self.strength(i)).sum()
    }

    /// Newman modularity of a community assignment.
    pub fn modularity(&self, community: &[usize]) -> f64 {
        let two_m = self.total_strength();
        if two_m == 0.0 {
            return 0.0;
        }
        let n_comm = community.iter().max().map_or(0, |&c| c + 1);
        let mut inside = vec![0.0; n_comm];
        let mut total = vec![0.0; n_comm];
        for i in 0..self.node_count() {
            let c = community[i];
            total[c] += self.strength(i);
            inside[c] += self.self_weight[i];
            for &(j, w) in &self.adj[i] {
                if community[j] == c {
                    inside[c] += w;
                }
            }
        }
        inside
            .iter()
            .zip(&total)
            .map(|(&s_in, &tot)| s_in / two_m - (tot / two_m).powi(2))
            .sum()
    }

    fn aggregate(&self, community: &[usize], n_comm: usize) -> WeightedGraph {
        let mut self_weight = vec![0.0; n_comm];
        let mut dense_rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_comm];
        for i in 0..self.node_count() {
            let ci = community[i];
            self_weight[ci] += self.self_weight[i];
            for &(j, w) in &self.adj[i] {
                let cj = community[j];
                if ci == cj {
                    self_weight[ci] += w;
                } else {
                    dense_rows[ci].push((cj, w));
                }
            }
        }
        let adj = dense_rows
            .into_iter()
            .map(|mut row| {
                row.sort_by_key(|e| e.0);
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(row.len());
                for (j, w) in row {
                    match merged.last_mut() {
                        Some(last) if last.0 == j => last.1 += w,
                        _ => merged.push((j, w)),
                    }
                }
                merged
            })
            .collect();
        WeightedGraph { adj, self_weight }
    }
}

/// Local-move phase. Returns the (contiguously renumbered) assignment and
/// whether any node changed community.
fn local_moves(g: &WeightedGraph, rng: &mut ChaCha8Rng) -> (Vec<usize>, usize, bool) {
    let n = g.node_count();
    let two_m = g.total_strength();
    let strength: Vec<f64> = (0..n).map(|i| g.strength(i)).collect();
    let mut community: Vec<usize> = (0..n).collect();
    let mut tot = strength.clone();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);

    let mut link = vec![0.0; n];
    let mut touched: Vec<usize> = Vec::new();
    let mut any_move = false;
    loop {
        let mut moved = false;
        for &i in &order {
            let ci = community[i];
            let k_i = strength[i];
            for &(j, w) in &g.adj[i] {
                let cj = community[j];
                if link[cj] == 0.0 {
                    touched.push(cj);
                }
                link[cj] += w;
            }
            tot[ci] -= k_i;
            let gain = |c: usize, link_c: f64| 2.0 * (link_c - tot[c] * k_i / two_m) / two_m;
            let stay = gain(ci, link[ci]);
            let mut best = ci;
            let mut best_gain = stay;
            touched.sort_unstable();
            for &c in &touched {
                if c == ci {
                    continue;
                }
                let gc = gain(c, link[c]);
                // ascending scan: equal gains keep the smaller community id
                if gc > best_gain {
                    best = c;
                    best_gain = gc;
                }
            }
            if best != ci && best_gain - stay <= MIN_GAIN {
                best = ci;
            }
            tot[best] += k_i;
            if best != ci {
                community[i] = best;
                moved = true;
                any_move = true;
            }
            for &c in &touched {
                link[c] = 0.0;
            }
            touched.clear();
        }
        if !moved {
            break;
        }
    }
    // Renumber by smallest member id.
    let mut relabel = vec![usize::MAX; n];
    let mut next = 0;
    for c in community.iter_mut() {
        if relabel[*c] == usize::MAX {
            relabel[*c] = next;
            next += 1;
        }
        *c = relabel[*c];
    }
    (community, next, any_move)
}

/// Runs Louvain to a fixed point. Returns a community per node (numbered by
/// smallest member id) and the final modularity.
pub fn louvain(g: &WeightedGraph, seed: u64) -> (Vec<usize>, f64) {
    let n = g.node_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut membership: Vec<usize> = (0..n).collect();
    let mut level = g.clone();
    loop {
        let (community, n_comm, moved) = local_moves(&level, &mut rng);
        if !moved {
            break;
        }
        for m in membership.iter_mut() {
            *m = community[*m];
        }
        level = level.aggregate(&community, n_comm);
        if n_comm == 1 {
            break;
        }
    }
    // Final relabel in original node order.
    let mut relabel = vec![usize::MAX; n];
    let mut next = 0;
    for m in membership.iter_mut() {
        if relabel[*m] == usize::MAX {
            relabel[*m] = next;
            next += 1;
        }
        *m = relabel[*m];
    }
    let q = g.modularity(&membership);
    (membership, q)
}
