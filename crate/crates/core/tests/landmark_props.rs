mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use smf_core::landmark::{is_dominating, select, select_dp, select_gds, select_uf, LandmarkStrategy};
use smf_core::GraphStore;

/// Pearson χ² statistic of observed counts against expected probabilities.
fn chi_square(counts: &[usize], probs: &[f64]) -> f64 {
    let total: usize = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&o, &p)| {
            let e = p * total as f64;
            (o as f64 - e).powi(2) / e
        })
        .sum()
}

fn lopsided() -> GraphStore {
    // degrees 4, 2, 2, 2, 1, 1 on an undirected graph
    GraphStore::from_edges(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (1, 2), (3, 5)], false).unwrap()
}

// χ² critical value, 5 degrees of freedom, p = 0.001
const CHI2_DF5_999: f64 = 20.515;

#[test]
fn dp_single_draw_follows_degree() {
    let g = lopsided();
    let degrees: Vec<f64> = (0..6).map(|v| g.total_degree(v) as f64).collect();
    let sum: f64 = degrees.iter().sum();
    let probs: Vec<f64> = degrees.iter().map(|d| d / sum).collect();
    let mut counts = vec![0usize; 6];
    for seed in 0..6000 {
        counts[select_dp(&g, 1, seed).unwrap().nodes[0]] += 1;
    }
    let stat = chi_square(&counts, &probs);
    assert!(stat < CHI2_DF5_999, "χ² = {stat}, counts {counts:?}");
}

#[test]
fn uf_single_draw_is_uniform() {
    let g = lopsided();
    let mut counts = vec![0usize; 6];
    for seed in 0..6000 {
        counts[select_uf(&g, 1, seed).unwrap().nodes[0]] += 1;
    }
    let stat = chi_square(&counts, &[1.0 / 6.0; 6]);
    assert!(stat < CHI2_DF5_999, "χ² = {stat}, counts {counts:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn strategies_return_distinct_in_range(n in 8usize..60, seed: u64) {
        let g = random_graph(n, 2 * n, seed % 2 == 0, seed);
        let mut r = rng(seed);
        let k = r.gen_range(1..=n / 2);
        for strategy in [LandmarkStrategy::Dd, LandmarkStrategy::Dp, LandmarkStrategy::Uf, LandmarkStrategy::Gds] {
            let Ok(set) = select(&g, strategy, k, seed) else {
                // DP refuses when fewer than k nodes have positive degree
                prop_assert_eq!(strategy, LandmarkStrategy::Dp);
                continue;
            };
            prop_assert!(set.k() <= k);
            if strategy != LandmarkStrategy::Gds {
                prop_assert_eq!(set.k(), k);
            }
            let mut sorted = set.nodes.clone();
            sorted.sort_unstable();
            sorted.dedup();
            prop_assert_eq!(sorted.len(), set.k());
            prop_assert!(sorted.iter().all(|&v| v < n));
        }
    }

    #[test]
    fn gds_trace_replay(n in 5usize..60, density in 1usize..4, seed: u64) {
        let g = random_graph(n, n * density, seed % 3 == 0, seed);
        let full = select_gds(&g, n).unwrap();
        prop_assert!(is_dominating(&g, &full.nodes));
        // replay: each pick was undominated when chosen and degrees never increase
        for (i, &v) in full.nodes.iter().enumerate() {
            for &u in &full.nodes[..i] {
                prop_assert!(u != v && !g.undirected_neighbors(u).contains(&v));
            }
            if i > 0 {
                let prev = full.nodes[i - 1];
                prop_assert!(g.total_degree(prev) >= g.total_degree(v));
            }
        }
        // a budget cut keeps the prefix
        let k = 1 + (seed as usize) % full.k();
        prop_assert_eq!(select_gds(&g, k).unwrap().nodes, full.nodes[..k].to_vec());
    }
}

// χ² critical value, 6 degrees of freedom, p = 0.01
const CHI2_DF6_99: f64 = 16.812;

#[test]
fn dp_hub_holding_all_but_one_edge() {
    // star 0–{1..6} plus the single extra edge 1–2
    let edges = [(0, 1), (0, 2), (0, 3), (0, 4), (0, 5), (0, 6), (1, 2)];
    let g = GraphStore::from_edges(7, &edges, false).unwrap();
    let degrees: Vec<f64> = (0..7).map(|v| g.total_degree(v) as f64).collect();
    let sum: f64 = degrees.iter().sum();
    let probs: Vec<f64> = degrees.iter().map(|d| d / sum).collect();
    let mut counts = vec![0usize; 7];
    for seed in 0..1000 {
        counts[select_dp(&g, 1, seed).unwrap().nodes[0]] += 1;
    }
    assert!(counts[0] > counts.iter().skip(1).max().copied().unwrap() * 2);
    let stat = chi_square(&counts, &probs);
    assert!(stat < CHI2_DF6_99, "χ² = {stat}, counts {counts:?}");
    assert_eq!(select_dp(&g, 3, 42).unwrap(), select_dp(&g, 3, 42).unwrap());
}
