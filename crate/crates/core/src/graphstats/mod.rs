//! Node-, pair- and graph-level topological statistics used as probe targets.
//!
//! Everything here takes a [`Topology`], so the same code serves parsed
//! molecules and arbitrary test graphs. Disconnected inputs are handled on
//! their largest component where a global quantity would otherwise be
//! undefined (diameter, centrality).

mod batch;

use thiserror::Error;

use crate::molgraph::{minimum_cycle_basis, Topology};

pub use batch::{
    compute_batch, histogram, write_batch, BatchOutput, Histogram, MetricRow, PairRequest,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("eigenvector centrality did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },
    #[error("connectivity undefined for a graph with fewer than two nodes")]
    ConnectivityUndefined,
    #[error("pair statistic requires two distinct nodes, got {0} twice")]
    SameNode(usize),
    #[error("node {0} out of range")]
    NodeOutOfRange(usize),
}

/// Per-node statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats {
    pub degree: Vec<usize>,
    pub centrality: Vec<f64>,
    pub clustering: Vec<f64>,
}

/// Statistics for one node pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairStats {
    pub link: u8,
    pub jaccard: f64,
    pub katz: f64,
}

/// Whole-graph statistics. `assortativity` is `None` when undefined.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GraphStats {
    pub diameter: usize,
    pub cycle_count: usize,
    pub connectivity: usize,
    pub assortativity: Option<f64>,
}

pub const DEFAULT_CENTRALITY_TOL: f64 = 1e-12;
pub const DEFAULT_CENTRALITY_MAX_ITER: usize = 100_000;
pub const DEFAULT_KATZ_BETA: f64 = 1.0;

pub fn node_degree(g: &Topology) -> Vec<usize> {
    (0..g.node_count()).map(|u| g.degree(u)).collect()
}

/// Eigenvector centrality on the largest connected component.
///
/// Power iteration from the uniform vector until the max-abs change between
/// iterates drops below `tol`. Bipartite components have eigenvalues `±λ` and
/// plain iteration oscillates, so there the update mixes in the previous
/// iterate (`x <- (Ax + x) / 2`), which has the same leading eigenvector.
/// Nodes outside the component score 0; a component without edges scores 0
/// everywhere.
pub fn eigenvector_centrality(g: &Topology, tol: f64, max_iter: usize) -> Result<Vec<f64>, StatsError> {
    let n = g.node_count();
    let mut out = vec![0.0; n];
    let comp = g.largest_component();
    if comp.len() < 2 {
        return Ok(out);
    }
    let damped = g.is_bipartite_on(&comp);
    let scale = 1.0 / (comp.len() as f64).sqrt();
    let mut x = vec![0.0; n];
    for &u in &comp {
        x[u] = scale;
    }
    let mut next = vec![0.0; n];
    for _ in 0..max_iter {
        for &u in &comp {
            let s: f64 = g.neighbors(u).iter().map(|&v| x[v]).sum();
            next[u] = if damped { 0.5 * (s + x[u]) } else { s };
        }
        let norm = comp.iter().map(|&u| next[u] * next[u]).sum::<f64>().sqrt();
        let mut diff: f64 = 0.0;
        for &u in &comp {
            next[u] /= norm;
            diff = diff.max((next[u] - x[u]).abs());
        }
        std::mem::swap(&mut x, &mut next);
        if diff < tol {
            for &u in &comp {
                out[u] = x[u];
            }
            return Ok(out);
        }
    }
    Err(StatsError::NoConvergence { iterations: max_iter })
}

/// Fraction of neighbour pairs that are themselves adjacent, over C(d, 2).
pub fn clustering_coefficient(g: &Topology) -> Vec<f64> {
    (0..g.node_count())
        .map(|u| {
            let nbrs = g.neighbors(u);
            let d = nbrs.len();
            if d < 2 {
                return 0.0;
            }
            let mut links = 0usize;
            for (i, &a) in nbrs.iter().enumerate() {
                for &b in &nbrs[i + 1..] {
                    if g.has_edge(a, b) {
                        links += 1;
                    }
                }
            }
            links as f64 / (d * (d - 1) / 2) as f64
        })
        .collect()
}

pub fn node_stats(g: &Topology) -> Result<NodeStats, StatsError> {
    Ok(NodeStats {
        degree: node_degree(g),
        centrality: eigenvector_centrality(g, DEFAULT_CENTRALITY_TOL, DEFAULT_CENTRALITY_MAX_ITER)?,
        clustering: clustering_coefficient(g),
    })
}

/// Maximum eccentricity over the largest connected component.
pub fn diameter(g: &Topology) -> usize {
    g.largest_component()
        .iter()
        .map(|&u| {
            g.bfs_distances(u)
                .into_iter()
                .filter(|&d| d != usize::MAX)
                .max()
                .unwrap_or(0)
        })
        .max()
        .unwrap_or(0)
}

/// Size of a minimum cycle basis.
pub fn cycle_count(g: &Topology) -> usize {
    minimum_cycle_basis(g).len()
}

/// Number of vertex-disjoint `s`-`t` paths, via unit-capacity max flow on the
/// split graph (each node `u` becomes `u_in -> u_out` with capacity 1).
fn disjoint_paths(g: &Topology, s: usize, t: usize) -> usize {
    let n = g.node_count();
    let node_in = |u: usize| 2 * u;
    let node_out = |u: usize| 2 * u + 1;
    let size = 2 * n;
    let mut cap = vec![vec![0i32; size]; size];
    for u in 0..n {
        cap[node_in(u)][node_out(u)] = if u == s || u == t { n as i32 } else { 1 };
        for &v in g.neighbors(u) {
            cap[node_out(u)][node_in(v)] = n as i32;
        }
    }
    let source = node_out(s);
    let sink = node_in(t);
    let mut flow = 0;
    loop {
        let mut prev = vec![usize::MAX; size];
        prev[source] = source;
        let mut queue = std::collections::VecDeque::from([source]);
        while let Some(x) = queue.pop_front() {
            if x == sink {
                break;
            }
            for y in 0..size {
                if prev[y] == usize::MAX && cap[x][y] > 0 {
                    prev[y] = x;
                    queue.push_back(y);
                }
            }
        }
        if prev[sink] == usize::MAX {
            return flow;
        }
        let mut y = sink;
        while y != source {
            let x = prev[y];
            cap[x][y] -= 1;
            cap[y][x] += 1;
            y = x;
        }
        flow += 1;
    }
}

/// Vertex connectivity: 0 when disconnected, `n - 1` for complete graphs,
/// otherwise the minimum over non-adjacent pairs of vertex-disjoint paths.
pub fn connectivity(g: &Topology) -> Result<usize, StatsError> {
    let n = g.node_count();
    if n < 2 {
        return Err(StatsError::ConnectivityUndefined);
    }
    if !g.is_connected() {
        return Ok(0);
    }
    let mut best = n - 1;
    for s in 0..n {
        for t in s + 1..n {
            if !g.has_edge(s, t) {
                best = best.min(disjoint_paths(g, s, t));
            }
        }
    }
    Ok(best)
}

/// Pearson correlation of endpoint degrees over both orientations of every
/// edge. `None` when there are no edges or all endpoint degrees are equal.
pub fn assortativity(g: &Topology) -> Option<f64> {
    if g.edge_count() == 0 {
        return None;
    }
    let deg = node_degree(g);
    let mut xs = Vec::with_capacity(2 * g.edge_count());
    let mut ys = Vec::with_capacity(2 * g.edge_count());
    for &(u, v) in g.edges() {
        xs.push(deg[u] as f64);
        ys.push(deg[v] as f64);
        xs.push(deg[v] as f64);
        ys.push(deg[u] as f64);
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(&ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

pub fn graph_stats(g: &Topology) -> Result<GraphStats, StatsError> {
    Ok(GraphStats {
        diameter: diameter(g),
        cycle_count: cycle_count(g),
        connectivity: if g.node_count() < 2 { 0 } else { connectivity(g)? },
        assortativity: assortativity(g),
    })
}

fn check_pair(g: &Topology, u: usize, v: usize) -> Result<(), StatsError> {
    for x in [u, v] {
        if x >= g.node_count() {
            return Err(StatsError::NodeOutOfRange(x));
        }
    }
    if u == v {
        return Err(StatsError::SameNode(u));
    }
    Ok(())
}

pub fn link_label(g: &Topology, u: usize, v: usize) -> Result<u8, StatsError> {
    check_pair(g, u, v)?;
    Ok(u8::from(g.has_edge(u, v)))
}

/// Neighbourhood overlap |N(u) ∩ N(v)| / |N(u) ∪ N(v)|, 0 for an empty union.
pub fn jaccard(g: &Topology, u: usize, v: usize) -> f64 {
    let a = g.neighbors(u);
    let b = g.neighbors(v);
    let inter = a.iter().filter(|x| b.binary_search(x).is_ok()).count();
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

/// Truncated Katz index: sum over i = 1..=max_len of beta^i (A^i)[u, v],
/// accumulated with one sparse matrix-vector product per length.
pub fn katz_truncated(g: &Topology, u: usize, v: usize, max_len: usize, beta: f64) -> f64 {
    let n = g.node_count();
    let mut walks = vec![0.0; n];
    walks[v] = 1.0;
    let mut next = vec![0.0; n];
    let mut weight = 1.0;
    let mut total = 0.0;
    for _ in 0..max_len {
        for x in 0..n {
            next[x] = g.neighbors(x).iter().map(|&y| walks[y]).sum();
        }
        std::mem::swap(&mut walks, &mut next);
        weight *= beta;
        total += weight * walks[u];
    }
    total
}

/// Pair statistics with the default Katz truncation length |V| and beta = 1.
pub fn pair_stats(g: &Topology, u: usize, v: usize) -> Result<PairStats, StatsError> {
    Ok(PairStats {
        link: link_label(g, u, v)?,
        jaccard: jaccard(g, u, v),
        katz: katz_truncated(g, u, v, g.node_count(), DEFAULT_KATZ_BETA),
    })
}
