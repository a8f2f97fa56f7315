use std::collections::HashSet;

use super::pattern::{AtomPredicate, BondPredicate, MatchMode, Pattern};
use crate::molgraph::{BondOrder, Element, MolecularGraph};

/// Per-molecule facts shared by every pattern tested against it.
pub struct MatchContext<'g> {
    g: &'g MolecularGraph,
    ring_atom: Vec<bool>,
    ring_bond: Vec<bool>,
    /// Elements each atom is double-bonded to.
    double_to: Vec<Vec<Element>>,
    saturated: Vec<bool>,
}

impl<'g> MatchContext<'g> {
    /// Panics if the graph has bonds but its rings were never perceived.
    pub fn new(g: &'g MolecularGraph) -> Self {
        assert!(g.rings_perceived() || g.bond_count() == 0, "rings must be perceived before matching");
        let n = g.atom_count();
        let mut double_to = vec![Vec::new(); n];
        let mut saturated = vec![true; n];
        for b in g.bonds() {
            if b.order == BondOrder::Double {
                double_to[b.a].push(g.atom(b.b).element);
                double_to[b.b].push(g.atom(b.a).element);
            }
            if b.order != BondOrder::Single {
                saturated[b.a] = false;
                saturated[b.b] = false;
            }
        }
        MatchContext {
            g,
            ring_atom: g.ring_atoms(),
            ring_bond: g.ring_bonds(),
            double_to,
            saturated,
        }
    }

    pub fn graph(&self) -> &MolecularGraph {
        self.g
    }

    pub fn atom_matches(&self, idx: usize, p: &AtomPredicate) -> bool {
        let atom = self.g.atom(idx);
        if !p.elements.is_empty() && !p.elements.contains(&atom.element) {
            return false;
        }
        if p.aromatic.is_some_and(|a| a != atom.aromatic)
            || p.in_ring.is_some_and(|r| r != self.ring_atom[idx])
            || p.h_exact.is_some_and(|h| h != atom.total_h())
            || p.h_min.is_some_and(|h| atom.total_h() < h)
            || p.degree.is_some_and(|d| d != self.g.degree(idx))
            || p.charge.is_some_and(|q| q != atom.formal_charge)
            || (p.saturated && !self.saturated[idx])
        {
            return false;
        }
        if p.double_to.iter().any(|e| !self.double_to[idx].contains(e))
            || p.no_double_to.iter().any(|e| self.double_to[idx].contains(e))
        {
            return false;
        }
        if !p.no_neighbor_double_to.is_empty() {
            for &(nbr, _) in self.g.neighbors(idx) {
                if p.no_neighbor_double_to.iter().any(|e| self.double_to[nbr].contains(e)) {
                    return false;
                }
            }
        }
        true
    }

    fn bond_matches(&self, u: usize, v: usize, p: &BondPredicate) -> bool {
        let Some(&(_, bidx)) = self.g.neighbors(u).iter().find(|&&(n, _)| n == v) else {
            return false;
        };
        let bond = &self.g.bonds()[bidx];
        (p.orders.is_empty() || p.orders.contains(&bond.order))
            && p.in_ring.is_none_or(|r| r == self.ring_bond[bidx])
    }

    /// Distinct matched atom sets (sorted) of an induced embedding search.
    pub fn match_sets(&self, p: &Pattern) -> Vec<Vec<usize>> {
        let order = search_order(p);
        let mut state = Search {
            ctx: self,
            p,
            order: &order,
            map: vec![usize::MAX; p.atom_count()],
            used: vec![false; self.g.atom_count()],
            found: HashSet::new(),
        };
        state.extend(0);
        let mut sets: Vec<Vec<usize>> = state.found.into_iter().collect();
        sets.sort();
        sets
    }

    pub fn count(&self, p: &Pattern) -> usize {
        match p.mode {
            MatchMode::CountAtoms => (0..self.g.atom_count())
                .filter(|&i| self.atom_matches(i, &p.atoms[0]))
                .count(),
            MatchMode::CountEmbeddingsDedup => self.match_sets(p).len(),
        }
    }
}

/// Pattern atoms in BFS order from atom 0, each after its anchor.
/// Entries are `(pattern atom, anchor already placed)`.
fn search_order(p: &Pattern) -> Vec<(usize, Option<usize>)> {
    let n = p.atom_count();
    let mut adj = vec![Vec::new(); n];
    for b in &p.bonds {
        adj[b.a].push(b.b);
        adj[b.b].push(b.a);
    }
    let mut seen = vec![false; n];
    let mut order = vec![(0, None)];
    seen[0] = true;
    let mut head = 0;
    while head < order.len() {
        let (u, _) = order[head];
        head += 1;
        for &v in &adj[u] {
            if !seen[v] {
                seen[v] = true;
                order.push((v, Some(u)));
            }
        }
    }
    order
}

struct Search<'a, 'g> {
    ctx: &'a MatchContext<'g>,
    p: &'a Pattern,
    order: &'a [(usize, Option<usize>)],
    map: Vec<usize>,
    used: Vec<bool>,
    found: HashSet<Vec<usize>>,
}

impl Search<'_, '_> {
    fn feasible(&self, pa: usize, t: usize, depth: usize) -> bool {
        if self.used[t] || !self.ctx.atom_matches(t, &self.p.atoms[pa]) {
            return false;
        }
        // induced: pattern bond <=> target bond, for every atom already placed
        for &(qa, _) in &self.order[..depth] {
            let tq = self.map[qa];
            match self.p.bond_between(pa, qa) {
                Some(bp) => {
                    if !self.ctx.bond_matches(t, tq, bp) {
                        return false;
                    }
                }
                None => {
                    if self.ctx.g.bond_between(t, tq).is_some() {
                        return false;
                    }
                }
            }
        }
        true
    }

    fn extend(&mut self, depth: usize) {
        if depth == self.order.len() {
            let mut set = self.map.clone();
            set.sort_unstable();
            self.found.insert(set);
            return;
        }
        let (pa, anchor) = self.order[depth];
        let candidates: Vec<usize> = match anchor {
            None => (0..self.ctx.g.atom_count()).collect(),
            Some(q) => self.ctx.g.neighbors(self.map[q]).iter().map(|&(n, _)| n).collect(),
        };
        for t in candidates {
            if self.feasible(pa, t, depth) {
                self.map[pa] = t;
                self.used[t] = true;
                self.extend(depth + 1);
                self.used[t] = false;
                self.map[pa] = usize::MAX;
            }
        }
    }
}

/// Number of distinct (by atom set) induced embeddings, or matching atoms for
/// atom-count patterns.
pub fn match_pattern(g: &MolecularGraph, p: &Pattern) -> usize {
    MatchContext::new(g).count(p)
}
