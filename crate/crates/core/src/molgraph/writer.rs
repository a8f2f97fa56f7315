use super::hash::refined_labels;
use super::{Atom, BondOrder, MolecularGraph};

fn atom_text(atom: &Atom) -> String {
    let symbol = if atom.aromatic {
        atom.element.symbol().to_ascii_lowercase()
    } else {
        atom.element.symbol().to_string()
    };
    if !atom.bracket && atom.element.is_organic_subset() && atom.formal_charge == 0 {
        return symbol;
    }
    let mut s = format!("[{symbol}");
    match atom.explicit_h {
        0 => {}
        1 => s.push('H'),
        h => s.push_str(&format!("H{h}")),
    }
    match atom.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}

fn bond_text(order: BondOrder, a: &Atom, b: &Atom) -> &'static str {
    let both_aromatic = a.aromatic && b.aromatic;
    match order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
    }
}

fn ring_label(n: usize) -> String {
    if n < 10 {
        n.to_string()
    } else {
        format!("%{n:02}")
    }
}

struct Plan {
    children: Vec<Vec<usize>>,
    /// Ring-closure bonds opened at each atom, in traversal order.
    opens: Vec<Vec<usize>>,
    closes: Vec<Vec<usize>>,
}

/// Writes a SMILES string that parses back to an isomorphic graph.
///
/// Traversal starts from the lowest refined-label atom of each fragment and
/// visits neighbours in label order, so output does not depend on input atom
/// order except among symmetry-equivalent atoms.
pub fn write_smiles(g: &MolecularGraph) -> String {
    let n = g.atom_count();
    if n == 0 {
        return String::new();
    }
    let labels = refined_labels(g);
    let key = |a: usize| (labels[a], a);

    let mut plan = Plan {
        children: vec![Vec::new(); n],
        opens: vec![Vec::new(); n],
        closes: vec![Vec::new(); n],
    };
    let mut visited = vec![false; n];
    let mut on_stack = vec![false; n];
    let mut bond_used = vec![false; g.bond_count()];
    let mut roots = Vec::new();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&a| (g.degree(a) > 1, key(a)));
    for &start in &order {
        if visited[start] {
            continue;
        }
        roots.push(start);
        explore(g, start, &key, &mut plan, &mut visited, &mut on_stack, &mut bond_used);
    }

    let mut out = String::new();
    let mut free_labels: Vec<bool> = vec![true; 100];
    let mut assigned = vec![usize::MAX; g.bond_count()];
    for (i, &root) in roots.iter().enumerate() {
        if i > 0 {
            out.push('.');
        }
        emit(g, root, None, &plan, &mut free_labels, &mut assigned, &mut out);
    }
    out
}

fn explore(
    g: &MolecularGraph,
    u: usize,
    key: &impl Fn(usize) -> (u64, usize),
    plan: &mut Plan,
    visited: &mut [bool],
    on_stack: &mut [bool],
    bond_used: &mut [bool],
) {
    visited[u] = true;
    on_stack[u] = true;
    let mut nbrs: Vec<(usize, usize)> = g.neighbors(u).to_vec();
    nbrs.sort_by_key(|&(v, _)| key(v));
    // Ring closures first so they are recorded before descending.
    for &(v, b) in &nbrs {
        if !bond_used[b] && visited[v] && on_stack[v] {
            bond_used[b] = true;
            plan.opens[v].push(b);
            plan.closes[u].push(b);
        }
    }
    for &(v, b) in &nbrs {
        if bond_used[b] {
            continue;
        }
        if visited[v] {
            // Back edge from a finished descendant was already recorded.
            continue;
        }
        bond_used[b] = true;
        plan.children[u].push(v);
        explore(g, v, key, plan, visited, on_stack, bond_used);
    }
    on_stack[u] = false;
}

fn emit(
    g: &MolecularGraph,
    u: usize,
    parent: Option<usize>,
    plan: &Plan,
    free_labels: &mut [bool],
    assigned: &mut [usize],
    out: &mut String,
) {
    if let Some(p) = parent {
        let bond = g.bond_between(p, u).expect("tree edge");
        out.push_str(bond_text(bond.order, g.atom(p), g.atom(u)));
    }
    out.push_str(&atom_text(g.atom(u)));
    // Opens are numbered before this atom's closes release their numbers.
    for &b in &plan.opens[u] {
        let label = (1..free_labels.len())
            .find(|&l| free_labels[l])
            .expect("fewer than 100 simultaneously open rings");
        free_labels[label] = false;
        assigned[b] = label;
        let bond = &g.bonds()[b];
        out.push_str(bond_text(bond.order, g.atom(bond.a), g.atom(bond.b)));
        out.push_str(&ring_label(label));
    }
    for &b in &plan.closes[u] {
        out.push_str(&ring_label(assigned[b]));
    }
    for &b in &plan.closes[u] {
        free_labels[assigned[b]] = true;
    }
    let children = &plan.children[u];
    for (i, &c) in children.iter().enumerate() {
        let last = i + 1 == children.len();
        if !last {
            out.push('(');
        }
        emit(g, c, Some(u), plan, free_labels, assigned, out);
        if !last {
            out.push(')');
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::molgraph::{canonical_hash, parse_smiles};

    #[test]
    fn round_trips_preserve_structure() {
        for smi in [
            "CCO",
            "c1ccccc1",
            "Cc1ccccc1",
            "C1CC2CCC1CC2",
            "c1ccc2ccccc2c1",
            "C[N+](=O)[O-]",
            "O=C1CCN1",
            "[Na+].[Cl-]",
            "C#N",
            "c1cc[nH]c1",
            "C12C3C4C1C5C2C3C45",
            "CC(C)(C)C(=O)Nc1ccc(Cl)cc1",
        ] {
            let g = parse_smiles(smi).unwrap();
            let out = write_smiles(&g);
            let back = parse_smiles(&out).unwrap_or_else(|e| panic!("{smi} -> {out}: {e}"));
            assert_eq!(back.atom_count(), g.atom_count(), "{smi} -> {out}");
            assert_eq!(back.bond_count(), g.bond_count(), "{smi} -> {out}");
            assert_eq!(canonical_hash(&back), canonical_hash(&g), "{smi} -> {out}");
        }
    }

    #[test]
    fn output_is_independent_of_input_order() {
        let a = write_smiles(&parse_smiles("OCC").unwrap());
        let b = write_smiles(&parse_smiles("CCO").unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn aromatic_single_bond_is_explicit() {
        let g = parse_smiles("c1ccccc1-c1ccccc1").unwrap();
        let out = write_smiles(&g);
        assert!(out.contains('-'), "{out}");
    }
}
