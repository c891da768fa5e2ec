mod common;

use std::collections::BTreeSet;

use common::*;
use proptest::prelude::*;
use twmdg::graph::fit_discrete_power_law;
use twmdg::ingest::{parse_csv, write_csv, TxFilter};
use twmdg::{NodeId, Twmdg, TxRecord};

fn records_strategy() -> impl Strategy<Value = Vec<TxRecord>> {
    prop::collection::vec((0usize..12, 0usize..12, 1u32..10_000, 0u64..30), 0..60).prop_map(|rows| {
        rows.into_iter()
            .map(|(s, d, w, t)| TxRecord::new(label(s), label(d), w as f64 / 7.0, t))
            .collect()
    })
}

proptest! {
    #[test]
    fn successive_edges_match_linear_scan(recs in records_strategy(), t in 0u64..35) {
        let g = Twmdg::from_records(&recs).unwrap();
        for u in g.nodes() {
            let got: Vec<_> = g.successive_edges(u, t).to_vec();
            let set: BTreeSet<_> = got.iter().copied().collect();
            prop_assert_eq!(&set, &brute_successive(&g, u, t));
            // (timestamp, edge id) order
            let keys: Vec<_> = got.iter().map(|&e| (g.edge(e).timestamp, e)).collect();
            prop_assert!(keys.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn successive_edges_antitone(recs in records_strategy(), t1 in 0u64..35, dt in 0u64..10) {
        let g = Twmdg::from_records(&recs).unwrap();
        for u in g.nodes() {
            let early: BTreeSet<_> = g.successive_edges(u, t1).iter().copied().collect();
            let late: BTreeSet<_> = g.successive_edges(u, t1 + dt).iter().copied().collect();
            prop_assert!(late.is_subset(&early));
        }
    }

    #[test]
    fn collapse_preserves_total_weight(recs in records_strategy()) {
        let g = Twmdg::from_records(&recs).unwrap();
        let sg = g.collapse_to_static();
        let total: f64 = g.edges().iter().map(|e| e.weight).sum();
        prop_assert!((sg.total_weight() - total).abs() <= 1e-9 * total.max(1.0));
        for e in g.edges() {
            prop_assert!(sg.has_edge(e.src, e.dst));
        }
        let distinct: BTreeSet<_> = g.edges().iter().map(|e| (e.src, e.dst)).collect();
        prop_assert_eq!(sg.edge_count(), distinct.len());
    }

    #[test]
    fn csv_round_trip(recs in records_strategy()) {
        let g = Twmdg::from_records(&recs).unwrap();
        let mut buf = Vec::new();
        write_csv(&g.to_records(), &mut buf).unwrap();
        let parsed = parse_csv(&buf[..], TxFilter::default()).unwrap();
        prop_assert_eq!(parsed.rejected, 0);
        prop_assert_eq!(&parsed.records, &g.to_records());
        let again = Twmdg::from_records(&parsed.records).unwrap();
        let mut buf2 = Vec::new();
        write_csv(&again.to_records(), &mut buf2).unwrap();
        prop_assert_eq!(buf, buf2);
    }

    #[test]
    fn histogram_counts_every_node(recs in records_strategy()) {
        let g = Twmdg::from_records(&recs).unwrap();
        let h = g.degree_histogram(1);
        prop_assert_eq!(h.bins.iter().map(|b| b.1).sum::<u64>(), g.node_count() as u64);
        let total: u64 = h.bins.iter().map(|&(d, c)| d * c).sum();
        prop_assert_eq!(total, 2 * g.edge_count() as u64);
    }
}

#[test]
fn k_order_matches_relaxation_oracle() {
    let mut queries = 0;
    for graph_seed in 0..50u64 {
        let n = 20 + (graph_seed as usize * 37) % 181;
        let g = random_graph(n, 2 * n, 50, graph_seed);
        for q in 0..20u64 {
            let center = NodeId(((graph_seed * 31 + q * 17) % g.node_count() as u64) as u32);
            let (k_in, k_out) = ((q % 4) as usize, ((q / 4) % 4) as usize);
            let sub = g.k_order_subgraph(center, k_in, k_out);
            let (nodes, edges) = brute_k_order(&g, center, k_in, k_out);
            let got_nodes: BTreeSet<String> = sub.labels().iter().cloned().collect();
            assert_eq!(got_nodes, nodes, "graph {graph_seed} query {q}");
            let mut got: Vec<_> = sub.edges().iter().map(|e| edge_key(&sub, e.id)).collect();
            got.sort();
            assert_eq!(got, edges, "graph {graph_seed} query {q}");
            queries += 1;
        }
    }
    assert_eq!(queries, 1000);
}

#[test]
fn k_order_unbounded_covers_component_on_strongly_connected_graph() {
    // a directed ring plus random chords is strongly connected
    let n = 40;
    let mut recs: Vec<TxRecord> = (0..n).map(|i| TxRecord::new(label(i), label((i + 1) % n), 1.0, i as u64)).collect();
    recs.extend(random_records(n, 60, 100, 9));
    let g = Twmdg::from_records(&recs).unwrap();
    let sub = g.k_order_subgraph(NodeId(5), usize::MAX, usize::MAX);
    assert_eq!(sub.node_count(), g.node_count());
    assert_eq!(sub.edge_count(), g.edge_count());
}

#[test]
fn power_law_fit_matches_formula() {
    let degrees = [1u64, 2, 2, 3, 5, 8, 13, 21, 34, 55, 89, 144];
    let xmin = 2;
    let tail: Vec<f64> = degrees.iter().filter(|&&d| d >= xmin).map(|&d| d as f64).collect();
    let s: f64 = tail.iter().map(|d| (d / (xmin as f64 - 0.5)).ln()).sum();
    let expected = 1.0 + tail.len() as f64 / s;
    let fit = fit_discrete_power_law(&degrees, xmin).unwrap();
    assert!((fit.exponent - expected).abs() < 1e-12);
    assert_eq!(fit.tail_size, 11);
    assert!(fit_discrete_power_law(&degrees, 50).is_none());
}
