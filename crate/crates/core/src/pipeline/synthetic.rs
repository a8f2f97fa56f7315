//! Seeded generator of small drug-like molecules with structure-derived
//! labels, for tests and demonstrations.

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::Dataset;
use crate::molgraph::{parse_smiles, write_smiles, Bond, BondOrder, MolecularGraph};
use crate::substructure::Registry;

const FRAGMENTS: &[&str] = &[
    "c1ccccc1", "c1ccccc1", "c1ccncc1", "C1CCCCC1", "C1CCNCC1", "C1COCCN1", "C1CNCCN1", "c1ccoc1", "c1ccsc1",
    "c1cscn1", "C1CC1", "C1CCOC1", "CC", "CCC", "CC(C)C", "C", "O", "N", "Cl", "F", "Br", "C(=O)N", "C(=O)O",
    "C(=O)OC", "OC", "C=C", "C#N", "S", "NC(=O)N", "N=NC", "CC=C", "NO",
];

/// Joins fragment `b` onto `a` with a single bond between atoms that still
/// carry a hydrogen. Returns `None` if either side has no such atom.
fn attach(a: &MolecularGraph, b: &MolecularGraph, rng: &mut ChaCha8Rng) -> Option<MolecularGraph> {
    let open = |g: &MolecularGraph| -> Vec<usize> {
        (0..g.atom_count())
            .filter(|&i| !g.atom(i).bracket && g.atom(i).implicit_h > 0)
            .collect()
    };
    let ia = *open(a).choose(rng)?;
    let ib = *open(b).choose(rng)?;
    let shift = a.atom_count();
    let mut atoms = a.atoms().to_vec();
    atoms.extend(b.atoms().iter().cloned());
    atoms[ia].implicit_h -= 1;
    atoms[shift + ib].implicit_h -= 1;
    let mut bonds = a.bonds().to_vec();
    bonds.extend(b.bonds().iter().map(|bd| Bond::new(bd.a + shift, bd.b + shift, bd.order)));
    bonds.push(Bond::new(ia, shift + ib, BondOrder::Single));
    MolecularGraph::new(atoms, bonds).ok()
}

/// One molecule of 1 to `max_fragments` fragments, as canonical SMILES.
pub fn random_smiles(rng: &mut ChaCha8Rng, max_fragments: usize) -> String {
    let frags: Vec<MolecularGraph> = FRAGMENTS.iter().map(|s| parse_smiles(s).unwrap()).collect();
    let k = rng.random_range(1..=max_fragments.max(1));
    let mut g = frags.choose(rng).unwrap().clone();
    for _ in 1..k {
        let f = frags.choose(rng).unwrap();
        if let Some(next) = attach(&g, f, rng) {
            g = next;
        }
    }
    write_smiles(&g)
}

pub const SYNTHETIC_TASKS: [&str; 5] = ["has_benzene", "has_amide", "many_heteroatoms", "ring_rich", "halogenated"];

/// `n` molecules with five binary tasks derived from structure, each label
/// flipped with probability `noise`; about 5% of labels are left missing.
pub fn synthetic_dataset(n: usize, seed: u64, noise: f64) -> Dataset {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let registry = Registry::builtin();
    let benzene = registry.index_of("benzene").unwrap();
    let amide = registry.index_of("amide").unwrap();
    let halogen = registry.index_of("halogen").unwrap();
    let mut rows = Vec::with_capacity(n);
    while rows.len() < n {
        let smiles = random_smiles(&mut rng, 5);
        let g = parse_smiles(&smiles).expect("generated SMILES parse");
        let counts = registry.count_all(&g);
        let hetero = g.atoms().iter().filter(|a| a.element.symbol() != "C").count();
        let truth = [
            counts[benzene] > 0,
            counts[amide] > 0,
            hetero >= 3,
            g.rings().len() >= 2,
            counts[halogen] > 0,
        ];
        let labels = truth
            .iter()
            .map(|&t| {
                if rng.random_bool(0.05) {
                    None
                } else {
                    Some(t ^ rng.random_bool(noise))
                }
            })
            .collect();
        rows.push((smiles, labels));
    }
    Dataset::from_rows(
        "synthetic",
        SYNTHETIC_TASKS.iter().map(|s| s.to_string()).collect(),
        rows,
    )
}
