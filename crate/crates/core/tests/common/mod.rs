#![allow(dead_code)]

use molprobe::molgraph::{parse_smiles, MolecularGraph, Topology};
use molprobe::pipeline::random_smiles;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random simple graph on 1..=max_n nodes with a random edge density.
pub fn random_graph(rng: &mut ChaCha8Rng, max_n: usize) -> (usize, Vec<(usize, usize)>) {
    let n = rng.random_range(1..=max_n);
    let p: f64 = rng.random_range(0.1..0.9);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.random_bool(p) {
                edges.push((u, v));
            }
        }
    }
    (n, edges)
}

pub fn topology(n: usize, edges: &[(usize, usize)]) -> Topology {
    Topology::from_edges(n, edges).unwrap()
}

pub fn edges_of(t: &Topology) -> Vec<(usize, usize)> {
    t.edges().to_vec()
}

pub const SMALL_MOLECULES: &[&str] = &[
    "C", "CC", "CCO", "CC(C)C", "CC(C)(C)C", "C1CC1", "C1CCCCC1", "c1ccccc1", "Cc1ccccc1", "c1ccncc1",
    "O=C(O)c1ccccc1", "CC(=O)Nc1ccccc1", "c1ccc2ccccc2c1", "C1CCC2CCCCC2C1", "C1CC2CCC1C2", "C12C3C4C1C5C2C3C45",
    "c1ccoc1", "c1ccsc1", "C1COCCN1", "C1CNCCN1", "OCC(O)CO", "NCC(=O)O", "CC(N)C(=O)O", "C=CC=C", "C#N",
    "CC#CC", "CN(C)C", "O=C1CCCC1", "C1=CCCC=C1", "c1cnc[nH]1", "c1cscn1", "c1nnn[nH]1", "O=C1NC(=O)C=C1",
    "CCN(CC)CC", "ClC(Cl)Cl", "FC(F)(F)c1ccccc1", "C1CC1C1CC1", "c1ccc(cc1)-c1ccccc1", "CC(C)CC(C)C",
    "OC1CCCCC1O", "C1CCC(CC1)N", "CS(=O)(=O)N", "O=C=O", "N#N", "[Na+].[Cl-]", "CCOC(=O)C", "C1CCOC1",
    "CN1CCCC1", "C1=CC=CC=C1C=O", "NC(=N)N",
];

pub fn small_molecules() -> Vec<MolecularGraph> {
    SMALL_MOLECULES.iter().map(|s| parse_smiles(s).unwrap()).collect()
}

/// Seeded molecules of at most `max_atoms` heavy atoms.
pub fn random_molecules(count: usize, max_atoms: usize, seed: u64) -> Vec<MolecularGraph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let g = parse_smiles(&random_smiles(&mut rng, 3)).unwrap();
        if g.atom_count() <= max_atoms {
            out.push(g);
        }
    }
    out
}

/// Bridges via deletion: an edge is a bridge iff removing it disconnects its
/// endpoints.
pub fn non_bridge_edges(n: usize, edges: &[(usize, usize)]) -> Vec<bool> {
    (0..edges.len())
        .map(|k| {
            let rest: Vec<_> = edges.iter().enumerate().filter(|&(i, _)| i != k).map(|(_, &e)| e).collect();
            let d = molprobe_oracles::distances(n, &rest);
            d[edges[k].0][edges[k].1].is_some()
        })
        .collect()
}
