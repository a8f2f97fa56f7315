mod common;

use molprobe::graphstats::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn graph(seed: u64, max_n: usize) -> (usize, Vec<(usize, usize)>) {
    random_graph(&mut ChaCha8Rng::seed_from_u64(seed), max_n)
}

/// Walks of every length 1..=max_len from `u` ending at `v`, by DFS.
fn dfs_walks(adj: &[Vec<usize>], at: usize, v: usize, left: usize, len: usize, counts: &mut [u64]) {
    if len > 0 && at == v {
        counts[len] += 1;
    }
    if left == 0 {
        return;
    }
    for &w in &adj[at] {
        dfs_walks(adj, w, v, left - 1, len + 1, counts);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn degree_sums_to_twice_edges(seed in any::<u64>()) {
        let (n, edges) = graph(seed, 12);
        let d = node_degree(&topology(n, &edges));
        prop_assert_eq!(d.iter().sum::<usize>(), 2 * edges.len());
    }

    #[test]
    fn centrality_is_an_eigenvector(seed in any::<u64>()) {
        let (n, edges) = graph(seed, 12);
        let t = topology(n, &edges);
        let e = eigenvector_centrality(&t, DEFAULT_CENTRALITY_TOL, DEFAULT_CENTRALITY_MAX_ITER).unwrap();
        let ae: Vec<f64> = (0..n).map(|u| t.neighbors(u).iter().map(|&v| e[v]).sum()).collect();
        let ee: f64 = e.iter().map(|x| x * x).sum();
        if ee > 0.0 {
            let lambda = ae.iter().zip(&e).map(|(a, b)| a * b).sum::<f64>() / ee;
            let resid: f64 = ae.iter().zip(&e).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
            let scale = (lambda.abs() * ee.sqrt()).max(1e-12);
            prop_assert!(resid / scale < 1e-6, "residual {}", resid / scale);
            prop_assert!(e.iter().all(|&x| x >= -1e-12));
        }
    }

    #[test]
    fn pair_and_node_ranges(seed in any::<u64>()) {
        let (n, edges) = graph(seed, 10);
        let t = topology(n, &edges);
        for c in clustering_coefficient(&t) {
            prop_assert!((0.0..=1.0).contains(&c));
        }
        for u in 0..n {
            for v in u + 1..n {
                let j = jaccard(&t, u, v);
                prop_assert!((0.0..=1.0).contains(&j));
                prop_assert_eq!(j, jaccard(&t, v, u));
                prop_assert_eq!(katz_truncated(&t, u, v, n, 1.0), katz_truncated(&t, v, u, n, 1.0));
            }
        }
    }

    #[test]
    fn cycle_count_is_circuit_rank(seed in any::<u64>()) {
        let (n, edges) = graph(seed, 10);
        let rank = edges.len() + molprobe_oracles::component_count(n, &edges) - n;
        prop_assert_eq!(cycle_count(&topology(n, &edges)), rank);
    }

    #[test]
    fn connectivity_matches_cut_enumeration(seed in any::<u64>()) {
        let (n, edges) = graph(seed, 7);
        prop_assume!(n >= 2);
        let k = connectivity(&topology(n, &edges)).unwrap();
        prop_assert_eq!(k, molprobe_oracles::vertex_connectivity(n, &edges));
    }

    #[test]
    fn katz_matches_walk_enumeration(seed in any::<u64>(), len in 1usize..=4, beta in 0.05f64..1.0) {
        let (n, edges) = graph(seed, 6);
        let t = topology(n, &edges);
        let adj: Vec<Vec<usize>> = (0..n).map(|u| t.neighbors(u).to_vec()).collect();
        for u in 0..n {
            for v in u + 1..n {
                let mut counts = vec![0u64; len + 1];
                dfs_walks(&adj, u, v, len, 0, &mut counts);
                let expected: f64 = (1..=len).map(|i| beta.powi(i as i32) * counts[i] as f64).sum();
                let got = katz_truncated(&t, u, v, len, beta);
                prop_assert!((got - expected).abs() <= 1e-12 * expected.max(1.0));
            }
        }
    }
}

#[test]
fn path_diameter() {
    for n in 2..20 {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        assert_eq!(diameter(&topology(n, &edges)), n - 1);
    }
}
