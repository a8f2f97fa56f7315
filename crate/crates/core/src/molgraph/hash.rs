use super::{smallest_ring_sizes, MolecularGraph};

const SEED: u64 = 0x6d6f_6c70_726f_6265;

/// splitmix64 finaliser.
fn mix(mut x: u64) -> u64 {
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

fn combine(state: u64, value: u64) -> u64 {
    mix(state ^ value.wrapping_add(0x9e37_79b9_7f4a_7c15).wrapping_add(state << 6))
}

fn hash_seq(values: impl IntoIterator<Item = u64>) -> u64 {
    values.into_iter().fold(SEED, combine)
}

/// Per-atom labels after Weisfeiler-Lehman refinement has stabilised.
pub(crate) fn refined_labels(g: &MolecularGraph) -> Vec<u64> {
    let n = g.atom_count();
    let topo = g.topology();
    let ring_sizes = smallest_ring_sizes(&topo);
    let mut comp_size = vec![0usize; n];
    for comp in topo.components() {
        for &a in &comp {
            comp_size[a] = comp.len();
        }
    }
    let mut labels: Vec<u64> = (0..n)
        .map(|u| {
            let atom = g.atom(u);
            let mut orders: Vec<u64> = g
                .neighbors(u)
                .iter()
                .map(|&(_, b)| g.bonds()[b].order.code() as u64)
                .collect();
            orders.sort_unstable();
            hash_seq(
                [
                    atom.element.atomic_number() as u64,
                    atom.aromatic as u64,
                    atom.formal_charge as i64 as u64,
                    ring_sizes[u] as u64,
                    comp_size[u] as u64,
                    orders.len() as u64,
                ]
                .into_iter()
                .chain(orders),
            )
        })
        .collect();

    let mut classes = distinct(&labels);
    for _ in 0..n {
        let next: Vec<u64> = (0..n)
            .map(|u| {
                let mut nbrs: Vec<u64> = g
                    .neighbors(u)
                    .iter()
                    .map(|&(v, b)| combine(g.bonds()[b].order.code() as u64, labels[v]))
                    .collect();
                nbrs.sort_unstable();
                hash_seq(std::iter::once(labels[u]).chain(nbrs))
            })
            .collect();
        let next_classes = distinct(&next);
        labels = next;
        if next_classes == classes {
            break;
        }
        classes = next_classes;
    }
    labels
}

fn distinct(labels: &[u64]) -> usize {
    let mut sorted = labels.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    sorted.len()
}

/// Isomorphism-invariant 64-bit digest of a molecular graph.
///
/// Atom labels start from element, aromaticity, charge, the multiset of
/// incident bond orders, the smallest ring through the atom and the size of
/// its fragment, then are refined from neighbour labels until the partition
/// stops splitting. The digest hashes the sorted final labels.
pub fn canonical_hash(g: &MolecularGraph) -> u64 {
    let mut labels = refined_labels(g);
    labels.sort_unstable();
    hash_seq(
        [g.atom_count() as u64, g.bond_count() as u64]
            .into_iter()
            .chain(labels),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::parse_smiles;

    fn h(s: &str) -> u64 {
        canonical_hash(&parse_smiles(s).unwrap())
    }

    #[test]
    fn atom_order_does_not_matter() {
        assert_eq!(h("CCO"), h("OCC"));
        assert_eq!(h("c1ccccc1"), h("c2ccccc2"));
        assert_eq!(h("c1ccccc1"), h("c%42ccccc%42"));
        assert_eq!(h("Cc1ccccc1O"), h("Oc1ccccc1C"));
    }

    #[test]
    fn different_molecules_differ() {
        assert_ne!(h("CCO"), h("CCN"));
        assert_ne!(h("C1CCCCC1"), h("C1CC1.C1CC1"));
        assert_ne!(h("C1CCC2CCCCC2C1"), h("C1CCC(C1)C1CCCC1"));
        assert_ne!(h("C=CC"), h("CCC"));
        assert_ne!(h("[NH4+]"), h("N"));
    }

    #[test]
    fn stable_value() {
        // Digest must not depend on process state.
        assert_eq!(h("CCO"), h("CCO"));
    }
}
