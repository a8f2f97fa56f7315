//! Heavy-atom molecular graphs.
//!
//! Graphs come out of [`parse_smiles`] with ring perception already done and
//! are immutable afterwards. Hydrogens are never nodes; each [`Atom`] carries
//! its hydrogen count instead.

mod element;
mod hash;
mod rings;
mod smiles;
mod topology;
mod writer;

use std::fmt::{self, Write as _};

use thiserror::Error;

pub use element::Element;
pub use hash::canonical_hash;
pub use rings::{minimum_cycle_basis, smallest_ring_sizes};
pub use smiles::{parse_smiles, parse_smiles_with_warnings, ParseError, ParseErrorKind, ParseWarning};
pub use topology::Topology;
pub use writer::write_smiles;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    pub fn name(self) -> &'static str {
        match self {
            BondOrder::Single => "single",
            BondOrder::Double => "double",
            BondOrder::Triple => "triple",
            BondOrder::Aromatic => "aromatic",
        }
    }

    /// Stable small integer used in hashing and feature encoding.
    pub fn code(self) -> u8 {
        match self {
            BondOrder::Single => 0,
            BondOrder::Double => 1,
            BondOrder::Triple => 2,
            BondOrder::Aromatic => 3,
        }
    }

    /// Contribution to the valence of a non-aromatic endpoint.
    pub(crate) fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogens written explicitly inside a bracket atom.
    pub explicit_h: u8,
    /// Hydrogens implied by standard valence (organic-subset atoms only).
    pub implicit_h: u8,
    /// Whether the atom was written in brackets.
    pub bracket: bool,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Atom {
            element,
            aromatic: false,
            formal_charge: 0,
            explicit_h: 0,
            implicit_h: 0,
            bracket: false,
        }
    }

    pub fn total_h(&self) -> u8 {
        self.explicit_h + self.implicit_h
    }
}

/// An undirected bond; endpoints are stored with `a < b`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn new(u: usize, v: usize, order: BondOrder) -> Self {
        Bond {
            a: u.min(v),
            b: u.max(v),
            order,
        }
    }

    pub fn other(&self, atom: usize) -> usize {
        if atom == self.a {
            self.b
        } else {
            self.a
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("bond {0}-{1} is a self-loop")]
    SelfLoop(usize, usize),
    #[error("bond {0}-{1} references an atom index >= {2}")]
    InvalidEndpoint(usize, usize, usize),
    #[error("duplicate bond between atoms {0} and {1}")]
    DuplicateBond(usize, usize),
}

#[derive(Debug, Clone)]
pub struct MolecularGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    /// Per atom: (neighbor, bond index), sorted by neighbor.
    adjacency: Vec<Vec<(usize, usize)>>,
    rings: Vec<Vec<usize>>,
    rings_perceived: bool,
}

impl MolecularGraph {
    /// Builds a graph from atoms and bonds, validating bond endpoints. Rings
    /// are not perceived; call [`MolecularGraph::perceive_rings`].
    pub fn new(atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        let n = atoms.len();
        let mut adjacency = vec![Vec::new(); n];
        for (idx, bond) in bonds.iter().enumerate() {
            if bond.a == bond.b {
                return Err(GraphError::SelfLoop(bond.a, bond.b));
            }
            if bond.a >= n || bond.b >= n {
                return Err(GraphError::InvalidEndpoint(bond.a, bond.b, n));
            }
            if adjacency[bond.a].iter().any(|&(v, _)| v == bond.b) {
                return Err(GraphError::DuplicateBond(bond.a, bond.b));
            }
            adjacency[bond.a].push((bond.b, idx));
            adjacency[bond.b].push((bond.a, idx));
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        Ok(MolecularGraph {
            atoms,
            bonds,
            adjacency,
            rings: Vec::new(),
            rings_perceived: false,
        })
    }

    /// Fills the ring list with a minimum cycle basis. Idempotent.
    pub fn perceive_rings(mut self) -> Self {
        if !self.rings_perceived {
            self.rings = minimum_cycle_basis(&self.topology());
            self.rings_perceived = true;
        }
        self
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom(&self, idx: usize) -> &Atom {
        &self.atoms[idx]
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn rings(&self) -> &[Vec<usize>] {
        &self.rings
    }

    pub fn rings_perceived(&self) -> bool {
        self.rings_perceived
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn bond_count(&self) -> usize {
        self.bonds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    /// Neighbors of `atom` with the connecting bond index, sorted by neighbor.
    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, u: usize, v: usize) -> Option<&Bond> {
        self.adjacency[u]
            .iter()
            .find(|&&(w, _)| w == v)
            .map(|&(_, b)| &self.bonds[b])
    }

    /// Per-atom ring membership derived from the perceived rings.
    pub fn ring_atoms(&self) -> Vec<bool> {
        let mut in_ring = vec![false; self.atoms.len()];
        for ring in &self.rings {
            for &a in ring {
                in_ring[a] = true;
            }
        }
        in_ring
    }

    /// Per-bond ring membership derived from the perceived rings.
    pub fn ring_bonds(&self) -> Vec<bool> {
        let mut in_ring = vec![false; self.bonds.len()];
        for ring in &self.rings {
            for (i, &u) in ring.iter().enumerate() {
                let v = ring[(i + 1) % ring.len()];
                if let Some(&(_, b)) = self.adjacency[u].iter().find(|&&(w, _)| w == v) {
                    in_ring[b] = true;
                }
            }
        }
        in_ring
    }

    pub fn topology(&self) -> Topology {
        let edges: Vec<_> = self.bonds.iter().map(|b| (b.a, b.b)).collect();
        Topology::from_edges(self.atoms.len(), &edges).expect("bonds validated at construction")
    }

    /// Dense symmetric 0/1 adjacency matrix.
    pub fn adjacency_matrix(&self) -> Vec<Vec<u8>> {
        let n = self.atoms.len();
        let mut m = vec![vec![0u8; n]; n];
        for b in &self.bonds {
            m[b.a][b.b] = 1;
            m[b.b][b.a] = 1;
        }
        m
    }

    /// Subgraph induced by `keep` (in the given order), with rings re-perceived.
    pub fn induced_subgraph(&self, keep: &[usize]) -> MolecularGraph {
        let mut remap = vec![usize::MAX; self.atoms.len()];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        let atoms = keep.iter().map(|&i| self.atoms[i].clone()).collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| remap[b.a] != usize::MAX && remap[b.b] != usize::MAX)
            .map(|b| Bond::new(remap[b.a], remap[b.b], b.order))
            .collect();
        MolecularGraph::new(atoms, bonds)
            .expect("induced subgraph of a valid graph is valid")
            .perceive_rings()
    }

    /// Line-oriented diagnostic dump: atom list, bond list, ring list.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "atoms {}", self.atoms.len());
        for (i, a) in self.atoms.iter().enumerate() {
            let _ = writeln!(
                out,
                "atom {} {} aromatic={} charge={} hcount={}",
                i,
                a.element,
                u8::from(a.aromatic),
                a.formal_charge,
                a.total_h()
            );
        }
        let _ = writeln!(out, "bonds {}", self.bonds.len());
        for b in &self.bonds {
            let _ = writeln!(out, "bond {} {} {}", b.a, b.b, b.order.name());
        }
        let _ = writeln!(out, "rings {}", self.rings.len());
        for (i, r) in self.rings.iter().enumerate() {
            let atoms: Vec<String> = r.iter().map(|a| a.to_string()).collect();
            let _ = writeln!(out, "ring {} {}", i, atoms.join(" "));
        }
        out
    }
}

impl fmt::Display for MolecularGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&write_smiles(self))
    }
}
