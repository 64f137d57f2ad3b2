mod common;

use proptest::prelude::*;

use netcontest::{network_values, transition_matrix, Player, ValuationVector};

use common::{dense_network_values, RandomGraph};

fn graph_and_values() -> impl Strategy<Value = (RandomGraph, Vec<f64>, usize)> {
    (any::<u64>(), 0usize..=6).prop_map(|(seed, t)| {
        let mut rng = common::rng(seed);
        let g = RandomGraph::sample(&mut rng, 12);
        let w = (0..g.n).map(|_| rand::Rng::random_range(&mut rng, 0.0..5.0)).collect();
        (g, w, t)
    })
}

proptest! {
    #[test]
    fn sparse_propagation_matches_dense_power((rg, w, t) in graph_and_values()) {
        let g = rg.build();
        let wv = ValuationVector::new(Player::Attacker, w.clone()).unwrap();
        let got = network_values(&g, &wv, t).unwrap();
        let want = dense_network_values(&rg.dense_transition(), &w, t);
        for (a, b) in got.values().iter().zip(&want) {
            prop_assert!((a - b).abs() <= 1e-12, "{a} vs {b}");
        }
        prop_assert_eq!(got.horizon(), Some(t));
        prop_assert_eq!(got.player(), Player::Attacker);
    }

    #[test]
    fn rows_are_stochastic((rg, _w, _t) in graph_and_values()) {
        let m = transition_matrix(&rg.build());
        let dense = rg.dense_transition();
        for j in 0..m.dim() {
            let (_, vals) = m.row(j);
            prop_assert!((vals.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
            for k in 0..m.dim() {
                prop_assert!((m.get(j, k) - dense[j][k]).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn propagation_is_linear((rg, w, t) in graph_and_values(), c in 0.0f64..10.0) {
        let g = rg.build();
        let base = network_values(&g, &ValuationVector::new(Player::Defender, w.clone()).unwrap(), t).unwrap();
        let scaled_w: Vec<f64> = w.iter().map(|x| x * c).collect();
        let scaled = network_values(&g, &ValuationVector::new(Player::Defender, scaled_w).unwrap(), t).unwrap();
        for (a, b) in base.values().iter().zip(scaled.values()) {
            prop_assert!((a * c - b).abs() <= 1e-12 * (1.0 + b.abs()));
        }
    }
}

#[test]
fn regular_graph_keeps_values_on_average() {
    // On a cycle every node averages its two neighbours, so constant values
    // are a fixed point and alternating values flip at even length.
    let n = 6;
    let edges: Vec<(usize, usize)> = (0..n).map(|u| (u, (u + 1) % n)).collect();
    let g = netcontest::build_graph(n, &edges, false).unwrap();
    let constant = ValuationVector::constant(Player::Defender, n, 2.5).unwrap();
    assert_eq!(network_values(&g, &constant, 7).unwrap().values(), &[2.5; 6]);
    let alt: Vec<f64> = (0..n).map(|j| if j % 2 == 0 { 1.0 } else { 0.0 }).collect();
    let v = network_values(&g, &ValuationVector::new(Player::Defender, alt).unwrap(), 1).unwrap();
    assert_eq!(v.values(), &[0.0, 1.0, 0.0, 1.0, 0.0, 1.0]);
}
