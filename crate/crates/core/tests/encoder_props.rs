mod common;

use molprobe::encoder::{init_random, EncoderConfig, Readout};
use molprobe::molgraph::{parse_smiles, Bond, Element, MolecularGraph};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::*;

fn config(seed: u64, readout: Readout) -> EncoderConfig {
    EncoderConfig {
        layers: 3,
        hidden_dim: 16,
        seed,
        readout,
    }
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn node_embeddings_are_permutation_equivariant(seed in any::<u64>()) {
        let g = &random_molecules(1, 30, seed)[0];
        let n = g.atom_count();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        let mut atoms = g.atoms().to_vec();
        for (i, a) in g.atoms().iter().enumerate() {
            atoms[perm[i]] = a.clone();
        }
        let bonds = g.bonds().iter().map(|b| Bond::new(perm[b.a], perm[b.b], b.order)).collect();
        let h = MolecularGraph::new(atoms, bonds).unwrap();
        let enc = init_random(&config(seed, Readout::Sum)).unwrap();
        let (a, b) = (enc.encode(g), enc.encode(&h));
        for t in 0..3 {
            for i in 0..n {
                for k in 0..16 {
                    prop_assert!(close(a.layers[t][[i, k]], b.layers[t][[perm[i], k]]));
                }
            }
        }
        for k in 0..16 {
            prop_assert!(close(a.graph[k], b.graph[k]));
        }
    }

    #[test]
    fn layers_only_see_their_neighbourhood(seed in any::<u64>()) {
        let g = &random_molecules(1, 40, seed)[0];
        let t = g.topology();
        let enc = init_random(&config(seed, Readout::Mean)).unwrap();
        let base = enc.encode(g);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = g.atom_count();
        let w = rng.random_range(0..n);
        let mut atoms = g.atoms().to_vec();
        atoms[w].element = if atoms[w].element == Element::from_symbol("N").unwrap() {
            Element::from_symbol("P").unwrap()
        } else {
            Element::from_symbol("N").unwrap()
        };
        let edited = MolecularGraph::new(atoms, g.bonds().to_vec()).unwrap();
        let after = enc.encode(&edited);
        let dist = t.bfs_distances(w);
        for u in 0..n {
            if dist[u] == 0 {
                continue;
            }
            // layer index t+1 has receptive field t+1
            for layer in 0..3 {
                if dist[u] > layer + 1 {
                    for k in 0..16 {
                        prop_assert_eq!(base.layers[layer][[u, k]], after.layers[layer][[u, k]]);
                    }
                }
            }
            prop_assert_eq!(base.input.row(u), after.input.row(u));
        }
    }
}

#[test]
fn input_features_depend_only_on_the_atom() {
    let enc = init_random(&config(5, Readout::Mean)).unwrap();
    let a = enc.encode(&parse_smiles("CCO").unwrap());
    let b = enc.encode(&parse_smiles("OC(N)C#N").unwrap());
    assert_eq!(a.input.row(2), b.input.row(0));
    assert_eq!(a.input.row(0), b.input.row(1));
    assert_ne!(a.input.row(0), a.input.row(2));
}

#[test]
fn readout_of_duplicated_molecule() {
    for s in ["CCO", "c1ccccc1N", "CC(=O)Nc1ccccc1"] {
        let single = parse_smiles(s).unwrap();
        let double = parse_smiles(&format!("{s}.{s}")).unwrap();
        let sum = init_random(&config(2, Readout::Sum)).unwrap();
        let (a, b) = (sum.encode(&single).graph, sum.encode(&double).graph);
        for k in 0..16 {
            assert!(close(2.0 * a[k], b[k]));
        }
        let mean = init_random(&config(2, Readout::Mean)).unwrap();
        let (a, b) = (mean.encode(&single).graph, mean.encode(&double).graph);
        for k in 0..16 {
            assert!(close(a[k], b[k]));
        }
    }
}
