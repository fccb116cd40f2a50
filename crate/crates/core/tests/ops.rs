mod common;

use common::*;
use proptest::prelude::*;
use spectral_pe::graph::{generate, petersen, Family, Graph};
use spectral_pe::ops::*;
use spectral_pe::spectral::{eigh, partition_default, EigDecomp, EigenspacePartition};
use spectral_pe::Error;

fn lap(g: &Graph) -> EigDecomp {
    eigh(&g.normalized_laplacian().unwrap()).unwrap()
}

fn adj_part(g: &Graph) -> EigenspacePartition {
    partition_default(&eigh(&g.adjacency_matrix()).unwrap())
}

fn configs() -> Vec<PEConfig> {
    vec![
        PEConfig::HeatDiag { ts: vec![0.1, 1.0, 5.0] },
        PEConfig::Rwpe { ks: vec![1, 2, 3, 8] },
        PEConfig::Diffusion { t: 0.7 },
        PEConfig::Pstep { gamma: 0.5, p: 3 },
        PEConfig::Gpr { gammas: vec![0.5, 0.25, 0.125] },
        PEConfig::Landing { k: 4 },
    ]
}

#[test]
fn pe_examples() {
    let k2 = generate(Family::Complete { n: 2 }).unwrap();
    let r = positional_encoding(&k2, &lap(&k2), &PEConfig::Rwpe { ks: vec![1, 2] }).unwrap();
    assert!(max_diff(&vec![vec![0.0, 1.0], vec![0.0, 1.0]], &r) <= 1e-12);
    let h = positional_encoding(&k2, &lap(&k2), &PEConfig::HeatDiag { ts: vec![1.0] }).unwrap();
    let want = (1.0 + (-2.0f64).exp()) / 2.0;
    assert!((h[(0, 0)] - want).abs() <= 1e-12);
}

#[test]
fn pe_matches_dense_oracles() {
    for seed in 0..20 {
        let g = random_connected_graph(3 + (seed as usize % 14), 0.3, seed);
        let e = lap(&g);
        for cfg in configs() {
            let got = positional_encoding(&g, &e, &cfg).unwrap();
            let want = pe_dense(&g, &cfg);
            let err = max_diff(&want, &got);
            assert!(err <= 1e-8, "{cfg:?} seed {seed}: {err}");
        }
    }
}

#[test]
fn pe_validation() {
    let g = generate(Family::Path { n: 3 }).unwrap();
    let e = lap(&g);
    for bad in [
        PEConfig::HeatDiag { ts: vec![] },
        PEConfig::HeatDiag { ts: vec![-1.0] },
        PEConfig::Rwpe { ks: vec![0] },
        PEConfig::Diffusion { t: 0.0 },
        PEConfig::Pstep { gamma: 0.5, p: 0 },
        PEConfig::Gpr { gammas: vec![] },
        PEConfig::Landing { k: 0 },
    ] {
        assert!(matches!(positional_encoding(&g, &e, &bad), Err(Error::BadParams(_))), "{bad:?}");
    }
    assert!(PEConfig::Pstep { gamma: 1.5, p: 2 }.pstep_unstable(&e));
    assert!(!PEConfig::Pstep { gamma: 0.5, p: 2 }.pstep_unstable(&e));
    let other = lap(&generate(Family::Path { n: 4 }).unwrap());
    assert!(matches!(positional_encoding(&g, &other, &PEConfig::Diffusion { t: 1.0 }), Err(Error::ShapeMismatch(_))));
    let json = r#"{"kind":"rwpe","ks":[1,2]}"#;
    assert_eq!(serde_json::from_str::<PEConfig>(json).unwrap(), PEConfig::Rwpe { ks: vec![1, 2] });
}

#[test]
fn spectral_conv_matches_dense_filter() {
    for seed in 0..10 {
        let g = random_connected_graph(10, 0.3, seed);
        let x = gaussian_matrix(10, 2, seed);
        let y = spectral_conv(&lap(&g), &FilterSpec::Parametric(Filter::Heat { t: 2.0 }), &x).unwrap();
        let want = mul(&expm(&scale(&normalized_laplacian(&g), -2.0)), &to_dense(&x));
        assert!(max_diff(&want, &y) <= 1e-10);
    }
    let g = generate(Family::Cycle { n: 6 }).unwrap();
    let x = gaussian_matrix(6, 3, 1);
    let id = spectral_conv(&lap(&g), &filter_bank("identity").unwrap(), &x).unwrap();
    assert!(id.max_abs_diff(&x) <= 1e-12);
}

#[test]
fn cycle_count_examples() {
    let cases = [
        (generate(Family::Complete { n: 4 }).unwrap(), (4, 3, 0)),
        (generate(Family::Complete { n: 5 }).unwrap(), (10, 15, 12)),
        (generate(Family::Cycle { n: 5 }).unwrap(), (0, 0, 1)),
        (generate(Family::Grid { h: 3, w: 3 }).unwrap(), (0, 4, 0)),
        (petersen(), (0, 0, 12)),
    ];
    for (g, (c3, c4, c5)) in cases {
        let c = cycle_counts_from_spectrum(&graph_angles(&adj_part(&g))).unwrap();
        assert_eq!((c.c3, c.c4, c.c5), (c3, c4, c5));
    }
}

#[test]
fn walks_match_dense_powers() {
    for seed in 0..10 {
        let g = random_graph(12, 0.4, seed);
        let at = graph_angles(&adj_part(&g));
        let walks = closed_walk_counts(&at, 6).unwrap();
        let a = adjacency(&g);
        for k in 1..=6u32 {
            let ak = pow(&a, k);
            for j in 0..g.n() {
                assert_eq!(walks[j][k as usize - 1] as f64, ak[j][j]);
            }
        }
        // angles square-sum to one per node
        for j in 0..g.n() {
            let s: f64 = (0..at.l()).map(|i| at.alpha[(i, j)].powi(2)).sum();
            assert!((s - 1.0).abs() <= 1e-10);
        }
    }
}

#[test]
fn connectivity_and_bipartiteness_examples() {
    let part = |g: &Graph| partition_default(&lap(g));
    let c6 = generate(Family::Cycle { n: 6 }).unwrap();
    let c5 = generate(Family::Cycle { n: 5 }).unwrap();
    let two = c6.disjoint_union(&c6);
    let mixed = c6.disjoint_union(&c5);
    assert!(is_connected_spectral(&part(&c6)) && is_bipartite_spectral(&part(&c6)));
    assert!(is_connected_spectral(&part(&c5)) && !is_bipartite_spectral(&part(&c5)));
    assert_eq!(component_count_spectral(&part(&two)), 2);
    assert!(is_bipartite_spectral(&part(&two)));
    assert!(!is_bipartite_spectral(&part(&mixed)));
    assert!(!is_connected_spectral(&part(&mixed)));
}

#[test]
fn isolated_nodes_are_rejected() {
    let g = Graph::new(3, &[(0, 1)], None).unwrap();
    assert!(matches!(g.normalized_laplacian(), Err(Error::IsolatedNode(2))));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectral_cycles_match_enumeration(n in 3usize..16, p in 0.1f64..0.9, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let spec = cycle_counts_from_spectrum(&graph_angles(&adj_part(&g))).unwrap();
        prop_assert_eq!(spec, count_cycles_bruteforce(&g).unwrap());
        let a = adjacency(&g);
        let tr3: f64 = (0..n).map(|i| pow(&a, 3)[i][i]).sum();
        prop_assert_eq!(spec.c3 as f64, tr3 / 6.0);
    }

    #[test]
    fn spectral_flags_match_bfs(n in 2usize..20, p in 0.05f64..0.5, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let part = partition_default(&lap(&g));
        prop_assert_eq!(is_connected_spectral(&part), connected_bfs(&g));
        prop_assert_eq!(is_bipartite_spectral(&part), bipartite_bfs(&g));
    }
}
