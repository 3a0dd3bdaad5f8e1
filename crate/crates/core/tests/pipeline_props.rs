mod common;

use common::*;
use smf_core::landmark::select_dd;
use smf_core::partition::{partition_interested, partition_random, PartitionPlan};
use smf_core::smf::{run_pipeline, PipelineOptions, SmfConfig};

fn cfg(d: usize, k: usize) -> SmfConfig {
    SmfConfig {
        d,
        k,
        ..SmfConfig::default()
    }
}

#[test]
fn interested_only_yields_requested_plus_landmarks() {
    let g = random_graph(1000, 5000, false, 1);
    let lms = select_dd(&g, 30).unwrap();
    let requested: Vec<usize> = (0..1000).filter(|v| !lms.nodes.contains(v)).take(5).collect();
    let plan = partition_interested(&g, &lms.nodes, &requested, 300).unwrap();
    let out = run_pipeline(&g, &plan, &lms, &cfg(16, 30), &PipelineOptions::default()).unwrap();
    assert_eq!(out.table.len(), 5 + 30);
    assert_eq!(&out.table.nodes[30..], requested.as_slice());
    // landmarks carry Φ
    assert_eq!(out.table.w.columns(0, 30), out.landmarks.phi.columns(0, 30));
}

#[test]
fn section_order_and_workers_do_not_matter() {
    let g = random_graph(300, 1200, true, 2);
    let lms = select_dd(&g, 25).unwrap();
    let plan = partition_random(&g, &lms.nodes, 6, 9).unwrap();
    let c = cfg(12, 25);
    let serial = run_pipeline(&g, &plan, &lms, &c, &PipelineOptions { workers: 1, best_effort: false }).unwrap();
    let parallel = run_pipeline(&g, &plan, &lms, &c, &PipelineOptions { workers: 4, best_effort: false }).unwrap();
    assert_eq!(serial.table.nodes, parallel.table.nodes);
    assert_eq!(serial.table.w, parallel.table.w);
    assert_eq!(serial.table.c, parallel.table.c);

    let mut reversed_sets = plan.sets.clone();
    reversed_sets.reverse();
    let reversed = PartitionPlan {
        sets: reversed_sets,
        ..plan.clone()
    };
    let rev = run_pipeline(&g, &reversed, &lms, &c, &PipelineOptions::default()).unwrap();
    for (j, v) in serial.table.nodes.iter().enumerate() {
        let jr = rev.table.nodes.iter().position(|u| u == v).unwrap();
        assert!((serial.table.w.column(j) - rev.table.w.column(jr)).amax() <= 1e-12);
        assert!((serial.table.c.column(j) - rev.table.c.column(jr)).amax() <= 1e-12);
    }
}

#[test]
fn every_embedding_lies_in_the_landmark_span() {
    let g = random_graph(150, 600, false, 3);
    let lms = select_dd(&g, 20).unwrap();
    let plan = partition_random(&g, &lms.nodes, 3, 1).unwrap();
    let out = run_pipeline(&g, &plan, &lms, &cfg(6, 20), &PipelineOptions::default()).unwrap();
    // rank(W) ≤ d
    let sv = out.table.w.clone().svd(false, false).singular_values;
    assert!(sv.iter().skip(6).all(|&s| s < 1e-9 * sv[0]));
}
