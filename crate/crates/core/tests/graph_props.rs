use proptest::prelude::*;
use smf_core::graph::load_edge_list;
use smf_core::proximity::{proximity_block, transition_row, ProximityConfig};
use smf_core::GraphStore;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn out_degrees_sum_to_stored_edges(
        pairs in proptest::collection::vec((0usize..30, 0usize..30), 1..120),
        directed: bool,
    ) {
        prop_assume!(pairs.iter().any(|(u, v)| u != v));
        let g = GraphStore::from_edges(30, &pairs, directed).unwrap();
        let out: usize = (0..30).map(|v| g.out_degree(v)).sum();
        let expect = if directed { g.edge_count() } else { 2 * g.edge_count() };
        prop_assert_eq!(out, expect);
        for v in 0..30 {
            let row = transition_row(&g, v).unwrap();
            let sum: f64 = row.iter().map(|(_, w)| w).sum();
            let want = if g.out_degree(v) > 0 { 1.0 } else { 0.0 };
            prop_assert!((sum - want).abs() < 1e-12);
        }
    }

    #[test]
    fn labels_survive_write_and_reload(
        pairs in proptest::collection::vec(("[a-z]{1,4}", "[a-z]{1,4}"), 1..40),
        directed: bool,
    ) {
        // a node seen only in a dropped self-loop has no edge to write back
        let pairs: Vec<_> = pairs.into_iter().filter(|(u, v)| u != v).collect();
        prop_assume!(!pairs.is_empty());
        let dir = tempfile::tempdir().unwrap();
        let first = dir.path().join("a.edges");
        let text: String = pairs.iter().map(|(u, v)| format!("{u} {v}\n")).collect();
        std::fs::write(&first, text).unwrap();
        let g = load_edge_list(&first, directed).unwrap();

        // write edges back out by label and reload
        let mut again = String::new();
        for v in 0..g.node_count() {
            for &u in g.out_neighbors(v) {
                again.push_str(&format!("{} {}\n", g.label(v), g.label(u)));
            }
        }
        let second = dir.path().join("b.edges");
        std::fs::write(&second, again).unwrap();
        let h = load_edge_list(&second, directed).unwrap();
        prop_assert_eq!(h.node_count(), g.node_count());
        for v in 0..g.node_count() {
            let w = h.id_map().id(g.label(v)).unwrap();
            prop_assert_eq!(h.label(w), g.label(v));
            let mut a: Vec<&str> = g.out_neighbors(v).iter().map(|&u| g.label(u)).collect();
            let mut b: Vec<&str> = h.out_neighbors(w).iter().map(|&u| h.label(u)).collect();
            a.sort_unstable();
            b.sort_unstable();
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn row_chunks_assemble_the_full_block(
        pairs in proptest::collection::vec((0usize..25, 0usize..25), 1..100),
        directed: bool,
        chunk in 1usize..10,
    ) {
        prop_assume!(pairs.iter().any(|(u, v)| u != v));
        let g = GraphStore::from_edges(25, &pairs, directed).unwrap();
        let all: Vec<usize> = (0..25).collect();
        let full = proximity_block(&g, ProximityConfig::second(), &all, &all).unwrap().to_dense();
        for rows in all.chunks(chunk) {
            let part = proximity_block(&g, ProximityConfig::second(), rows, &all).unwrap().to_dense();
            for (r, &v) in rows.iter().enumerate() {
                prop_assert!((part.row(r) - full.row(v)).amax() < 1e-12);
            }
        }
    }
}
