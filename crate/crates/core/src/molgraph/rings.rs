//! Minimum cycle basis by Horton's candidate set and GF(2) elimination.

use std::collections::{HashSet, VecDeque};

use super::Topology;

struct Candidate {
    atoms: Vec<usize>,
    edges: Vec<u64>,
}

fn edge_index(topo: &Topology) -> impl Fn(usize, usize) -> usize + '_ {
    move |u, v| {
        let key = (u.min(v), u.max(v));
        topo.edges()
            .iter()
            .position(|&e| e == key)
            .expect("edge exists")
    }
}

/// Shortest-path tree from `root`: parent pointers and depth.
fn bfs_tree(topo: &Topology, root: usize) -> (Vec<usize>, Vec<usize>) {
    let n = topo.node_count();
    let mut parent = vec![usize::MAX; n];
    let mut depth = vec![usize::MAX; n];
    depth[root] = 0;
    parent[root] = root;
    let mut queue = VecDeque::from([root]);
    while let Some(u) = queue.pop_front() {
        for &v in topo.neighbors(u) {
            if depth[v] == usize::MAX {
                depth[v] = depth[u] + 1;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    (parent, depth)
}

fn path_to_root(parent: &[usize], mut node: usize) -> Vec<usize> {
    let mut path = vec![node];
    while parent[node] != node {
        node = parent[node];
        path.push(node);
    }
    path
}

/// Rotates a cycle so the smallest atom comes first and the walk direction
/// visits the smaller of its two neighbours next.
fn normalize_cycle(mut atoms: Vec<usize>) -> Vec<usize> {
    let pos = atoms
        .iter()
        .enumerate()
        .min_by_key(|&(_, &a)| a)
        .map(|(i, _)| i)
        .unwrap_or(0);
    atoms.rotate_left(pos);
    if atoms.len() > 2 && atoms[atoms.len() - 1] < atoms[1] {
        atoms[1..].reverse();
    }
    atoms
}

/// Computes a minimum cycle basis. Each ring is an ordered atom cycle; rings
/// are sorted by size, then lexicographically. The basis size always equals
/// the circuit rank.
pub fn minimum_cycle_basis(topo: &Topology) -> Vec<Vec<usize>> {
    let rank = topo.circuit_rank();
    if rank == 0 {
        return Vec::new();
    }
    let m = topo.edge_count();
    let words = m.div_ceil(64);
    let index_of = edge_index(topo);

    let mut candidates = Vec::new();
    let mut seen: HashSet<Vec<u64>> = HashSet::new();
    for root in 0..topo.node_count() {
        let (parent, depth) = bfs_tree(topo, root);
        for &(x, y) in topo.edges() {
            if depth[x] == usize::MAX || depth[y] == usize::MAX {
                continue;
            }
            if parent[x] == y || parent[y] == x {
                continue;
            }
            let px = path_to_root(&parent, x);
            let py = path_to_root(&parent, y);
            // The two tree paths may only share the root.
            let branch = |p: &[usize]| if p.len() >= 2 { Some(p[p.len() - 2]) } else { None };
            if let (Some(bx), Some(by)) = (branch(&px), branch(&py)) {
                if bx == by {
                    continue;
                }
            }
            // root .. x, then y .. (excluding root)
            let mut atoms: Vec<usize> = px.iter().rev().copied().collect();
            atoms.extend(py[..py.len() - 1].iter());
            let mut bits = vec![0u64; words];
            for i in 0..atoms.len() {
                let e = index_of(atoms[i], atoms[(i + 1) % atoms.len()]);
                bits[e / 64] |= 1 << (e % 64);
            }
            if seen.insert(bits.clone()) {
                candidates.push(Candidate {
                    atoms: normalize_cycle(atoms),
                    edges: bits,
                });
            }
        }
    }
    candidates.sort_by(|a, b| {
        a.atoms
            .len()
            .cmp(&b.atoms.len())
            .then_with(|| a.atoms.cmp(&b.atoms))
    });

    // Reduced basis rows, each with its pivot bit.
    let mut basis: Vec<(usize, Vec<u64>)> = Vec::new();
    let mut chosen = Vec::with_capacity(rank);
    for cand in candidates {
        let mut v = cand.edges.clone();
        for (pivot, row) in &basis {
            if v[pivot / 64] >> (pivot % 64) & 1 == 1 {
                for (a, b) in v.iter_mut().zip(row) {
                    *a ^= b;
                }
            }
        }
        let pivot = v
            .iter()
            .enumerate()
            .find(|(_, w)| **w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize);
        if let Some(pivot) = pivot {
            basis.push((pivot, v));
            chosen.push(cand.atoms);
            if chosen.len() == rank {
                break;
            }
        }
    }
    chosen.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    chosen
}

/// Length of the shortest cycle through each node, or 0 for acyclic nodes.
pub fn smallest_ring_sizes(topo: &Topology) -> Vec<usize> {
    let n = topo.node_count();
    (0..n)
        .map(|u| {
            // BFS labelling each node with the neighbour of `u` it was reached through.
            let mut dist = vec![usize::MAX; n];
            let mut branch = vec![usize::MAX; n];
            dist[u] = 0;
            let mut queue = VecDeque::new();
            for &v in topo.neighbors(u) {
                dist[v] = 1;
                branch[v] = v;
                queue.push_back(v);
            }
            while let Some(x) = queue.pop_front() {
                for &y in topo.neighbors(x) {
                    if dist[y] == usize::MAX {
                        dist[y] = dist[x] + 1;
                        branch[y] = branch[x];
                        queue.push_back(y);
                    }
                }
            }
            let mut best = usize::MAX;
            for &(x, y) in topo.edges() {
                if x == u || y == u || dist[x] == usize::MAX || dist[y] == usize::MAX {
                    continue;
                }
                if branch[x] != branch[y] {
                    best = best.min(dist[x] + dist[y] + 1);
                }
            }
            if best == usize::MAX {
                0
            } else {
                best
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring(n: usize) -> Topology {
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Topology::from_edges(n, &edges).unwrap()
    }

    #[test]
    fn single_ring() {
        assert_eq!(minimum_cycle_basis(&ring(6)), vec![vec![0, 1, 2, 3, 4, 5]]);
        assert_eq!(smallest_ring_sizes(&ring(5)), vec![5; 5]);
    }

    #[test]
    fn acyclic_has_no_rings() {
        let t = Topology::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        assert!(minimum_cycle_basis(&t).is_empty());
        assert_eq!(smallest_ring_sizes(&t), vec![0, 0, 0]);
    }

    #[test]
    fn fused_rings_pick_small_cycles() {
        // Two 4-cycles sharing an edge: the 6-cycle around the outside is never chosen.
        let t = Topology::from_edges(6, &[(0, 1), (1, 2), (2, 3), (3, 0), (2, 4), (4, 5), (5, 3)])
            .unwrap();
        let rings = minimum_cycle_basis(&t);
        assert_eq!(rings.len(), 2);
        assert!(rings.iter().all(|r| r.len() == 4));
    }

    #[test]
    fn cube_basis() {
        // Cube graph: circuit rank 5, all basis cycles are 4-cycles.
        let edges = [
            (0, 1), (1, 2), (2, 3), (3, 0),
            (4, 5), (5, 6), (6, 7), (7, 4),
            (0, 4), (1, 5), (2, 6), (3, 7),
        ];
        let t = Topology::from_edges(8, &edges).unwrap();
        let rings = minimum_cycle_basis(&t);
        assert_eq!(rings.len(), 5);
        assert!(rings.iter().all(|r| r.len() == 4));
    }
}
