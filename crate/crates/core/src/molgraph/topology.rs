use std::collections::VecDeque;

use super::GraphError;

/// Unlabeled simple undirected graph. Statistics and ring perception operate
/// on this so they can be exercised on arbitrary graphs, not only molecules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    adj: Vec<Vec<usize>>,
    edges: Vec<(usize, usize)>,
}

impl Topology {
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let mut adj = vec![Vec::new(); n];
        let mut normalized = Vec::with_capacity(edges.len());
        for &(u, v) in edges {
            if u == v {
                return Err(GraphError::SelfLoop(u, v));
            }
            if u >= n || v >= n {
                return Err(GraphError::InvalidEndpoint(u, v, n));
            }
            if adj[u].contains(&v) {
                return Err(GraphError::DuplicateBond(u.min(v), u.max(v)));
            }
            adj[u].push(v);
            adj[v].push(u);
            normalized.push((u.min(v), u.max(v)));
        }
        for list in &mut adj {
            list.sort_unstable();
        }
        Ok(Topology {
            adj,
            edges: normalized,
        })
    }

    pub fn node_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(u, v)` with `u < v`, in insertion order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn neighbors(&self, u: usize) -> &[usize] {
        &self.adj[u]
    }

    pub fn degree(&self, u: usize) -> usize {
        self.adj[u].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adj[u].binary_search(&v).is_ok()
    }

    /// BFS distances from `source`; `usize::MAX` marks unreachable nodes.
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.adj.len()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(u) = queue.pop_front() {
            for &v in &self.adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let n = self.adj.len();
        let mut seen = vec![false; n];
        let mut out = Vec::new();
        for start in 0..n {
            if seen[start] {
                continue;
            }
            let mut comp = vec![start];
            seen[start] = true;
            let mut i = 0;
            while i < comp.len() {
                let u = comp[i];
                i += 1;
                for &v in &self.adj[u] {
                    if !seen[v] {
                        seen[v] = true;
                        comp.push(v);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn component_count(&self) -> usize {
        self.components().len()
    }

    pub fn is_connected(&self) -> bool {
        self.component_count() <= 1
    }

    /// Largest connected component; ties go to the one with the smallest member.
    pub fn largest_component(&self) -> Vec<usize> {
        let mut best: Vec<usize> = Vec::new();
        for comp in self.components() {
            if comp.len() > best.len() {
                best = comp;
            }
        }
        best
    }

    /// Circuit rank |E| - |V| + #components.
    pub fn circuit_rank(&self) -> usize {
        self.edges.len() + self.component_count() - self.adj.len()
    }

    /// Two-colouring check restricted to the nodes in `nodes`.
    pub fn is_bipartite_on(&self, nodes: &[usize]) -> bool {
        let mut colour = vec![u8::MAX; self.adj.len()];
        for &start in nodes {
            if colour[start] != u8::MAX {
                continue;
            }
            colour[start] = 0;
            let mut queue = VecDeque::from([start]);
            while let Some(u) = queue.pop_front() {
                for &v in &self.adj[u] {
                    if colour[v] == u8::MAX {
                        colour[v] = 1 - colour[u];
                        queue.push_back(v);
                    } else if colour[v] == colour[u] {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn components_and_rank() {
        let t = Topology::from_edges(6, &[(0, 1), (1, 2), (2, 0), (3, 4)]).unwrap();
        assert_eq!(t.components(), vec![vec![0, 1, 2], vec![3, 4], vec![5]]);
        assert_eq!(t.circuit_rank(), 1);
        assert_eq!(t.largest_component(), vec![0, 1, 2]);
        assert!(!t.is_connected());
        assert!(!t.is_bipartite_on(&[0, 1, 2]));
        assert!(t.is_bipartite_on(&[3, 4]));
    }

    #[test]
    fn rejects_duplicates() {
        assert!(Topology::from_edges(2, &[(0, 1), (1, 0)]).is_err());
        assert!(Topology::from_edges(2, &[(1, 1)]).is_err());
    }
}
