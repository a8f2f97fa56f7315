//! Slow, obviously-correct reference computations.
//!
//! Nothing here shares code with `molprobe`; inputs are plain adjacency data
//! so the checks stay independent of the implementation they verify.

use nalgebra::{DMatrix, SymmetricEigen};

/// Simple labelled graph: node labels and `(u, v, bond_label)` edges.
#[derive(Debug, Clone)]
pub struct LabeledGraph {
    pub labels: Vec<u64>,
    pub edges: Vec<(usize, usize, u8)>,
}

impl LabeledGraph {
    fn matrix(&self) -> Vec<Vec<Option<u8>>> {
        let n = self.labels.len();
        let mut m = vec![vec![None; n]; n];
        for &(u, v, l) in &self.edges {
            m[u][v] = Some(l);
            m[v][u] = Some(l);
        }
        m
    }
}

/// Exhaustive backtracking isomorphism test preserving node and edge labels.
pub fn is_isomorphic(a: &LabeledGraph, b: &LabeledGraph) -> bool {
    let n = a.labels.len();
    if n != b.labels.len() || a.edges.len() != b.edges.len() {
        return false;
    }
    let mut la = a.labels.clone();
    let mut lb = b.labels.clone();
    la.sort_unstable();
    lb.sort_unstable();
    if la != lb {
        return false;
    }
    let ma = a.matrix();
    let mb = b.matrix();
    let mut map = vec![usize::MAX; n];
    let mut used = vec![false; n];
    fn go(
        i: usize,
        a: &LabeledGraph,
        b: &LabeledGraph,
        ma: &[Vec<Option<u8>>],
        mb: &[Vec<Option<u8>>],
        map: &mut [usize],
        used: &mut [bool],
    ) -> bool {
        let n = map.len();
        if i == n {
            return true;
        }
        for t in 0..n {
            if used[t] || a.labels[i] != b.labels[t] {
                continue;
            }
            if (0..i).all(|j| ma[i][j] == mb[t][map[j]]) {
                map[i] = t;
                used[t] = true;
                if go(i + 1, a, b, ma, mb, map, used) {
                    return true;
                }
                used[t] = false;
            }
        }
        false
    }
    go(0, a, b, &ma, &mb, &mut map, &mut used)
}

fn adjacency(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<bool>> {
    let mut m = vec![vec![false; n]; n];
    for &(u, v) in edges {
        m[u][v] = true;
        m[v][u] = true;
    }
    m
}

fn connected_without(adj: &[Vec<bool>], removed: &[bool]) -> bool {
    let n = adj.len();
    let Some(start) = (0..n).find(|&i| !removed[i]) else {
        return true;
    };
    let mut seen = vec![false; n];
    let mut stack = vec![start];
    seen[start] = true;
    while let Some(u) = stack.pop() {
        for v in 0..n {
            if adj[u][v] && !removed[v] && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    (0..n).all(|i| removed[i] || seen[i])
}

/// Vertex connectivity by trying every vertex subset in order of size.
pub fn vertex_connectivity(n: usize, edges: &[(usize, usize)]) -> usize {
    let adj = adjacency(n, edges);
    for size in 0..n.saturating_sub(1) {
        for mask in 0u64..(1u64 << n) {
            if mask.count_ones() as usize != size {
                continue;
            }
            let removed: Vec<bool> = (0..n).map(|i| mask >> i & 1 == 1).collect();
            if !connected_without(&adj, &removed) {
                return size;
            }
        }
    }
    n - 1
}

/// All-pairs shortest path lengths by Floyd-Warshall.
pub fn distances(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<Option<usize>>> {
    let mut d = vec![vec![None; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = Some(0);
    }
    for &(u, v) in edges {
        d[u][v] = Some(1);
        d[v][u] = Some(1);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if let (Some(a), Some(b)) = (d[i][k], d[k][j]) {
                    if d[i][j].is_none_or(|c| a + b < c) {
                        d[i][j] = Some(a + b);
                    }
                }
            }
        }
    }
    d
}

/// Diameter of the largest component (ties: component with the smallest node).
pub fn diameter_largest_component(n: usize, edges: &[(usize, usize)]) -> usize {
    let d = distances(n, edges);
    let mut best: Vec<usize> = Vec::new();
    let mut seen = vec![false; n];
    for i in 0..n {
        if seen[i] {
            continue;
        }
        let comp: Vec<usize> = (0..n).filter(|&j| d[i][j].is_some()).collect();
        for &j in &comp {
            seen[j] = true;
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    let mut diam = 0;
    for &i in &best {
        for &j in &best {
            diam = diam.max(d[i][j].unwrap());
        }
    }
    diam
}

pub fn component_count(n: usize, edges: &[(usize, usize)]) -> usize {
    let d = distances(n, edges);
    let mut seen = vec![false; n];
    let mut count = 0;
    for i in 0..n {
        if !seen[i] {
            count += 1;
            for j in 0..n {
                if d[i][j].is_some() {
                    seen[j] = true;
                }
            }
        }
    }
    count
}

/// Clustering coefficient by counting triangles through each node.
pub fn clustering(n: usize, edges: &[(usize, usize)]) -> Vec<f64> {
    let adj = adjacency(n, edges);
    (0..n)
        .map(|u| {
            let nbrs: Vec<usize> = (0..n).filter(|&v| adj[u][v]).collect();
            let k = nbrs.len();
            if k < 2 {
                return 0.0;
            }
            let mut closed = 0;
            for i in 0..k {
                for j in i + 1..k {
                    if adj[nbrs[i]][nbrs[j]] {
                        closed += 1;
                    }
                }
            }
            closed as f64 / (k * (k - 1) / 2) as f64
        })
        .collect()
}

/// Number of walks of each length 1..=max_len from `u` to `v`, by DFS.
pub fn walk_counts(n: usize, edges: &[(usize, usize)], u: usize, v: usize, max_len: usize) -> Vec<u64> {
    let adj = adjacency(n, edges);
    let mut counts = vec![0u64; max_len + 1];
    fn dfs(adj: &[Vec<bool>], at: usize, target: usize, len: usize, max_len: usize, counts: &mut [u64]) {
        if len > 0 && at == target {
            counts[len] += 1;
        }
        if len == max_len {
            return;
        }
        for next in 0..adj.len() {
            if adj[at][next] {
                dfs(adj, next, target, len + 1, max_len, counts);
            }
        }
    }
    dfs(&adj, u, v, 0, max_len, &mut counts);
    counts
}

/// Katz score from walk enumeration: sum_{i=1..L} beta^i * walks_i(u, v).
pub fn katz_by_walks(n: usize, edges: &[(usize, usize)], u: usize, v: usize, max_len: usize, beta: f64) -> f64 {
    walk_counts(n, edges, u, v, max_len)
        .iter()
        .enumerate()
        .skip(1)
        .map(|(i, &c)| beta.powi(i as i32) * c as f64)
        .sum()
}

/// Katz score from explicit dense matrix powers.
pub fn katz_by_matrix_powers(n: usize, edges: &[(usize, usize)], u: usize, v: usize, max_len: usize, beta: f64) -> f64 {
    let mut a = DMatrix::<f64>::zeros(n, n);
    for &(x, y) in edges {
        a[(x, y)] = 1.0;
        a[(y, x)] = 1.0;
    }
    let mut power = DMatrix::<f64>::identity(n, n);
    let mut total = 0.0;
    for i in 1..=max_len {
        power = &power * &a;
        total += beta.powi(i as i32) * power[(u, v)];
    }
    total
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx == 0.0 || syy == 0.0 {
        None
    } else {
        Some(sxy / (sxx * syy).sqrt())
    }
}

/// Degree assortativity: Pearson over both orientations of every edge.
pub fn assortativity(n: usize, edges: &[(usize, usize)]) -> Option<f64> {
    let mut deg = vec![0.0; n];
    for &(u, v) in edges {
        deg[u] += 1.0;
        deg[v] += 1.0;
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(u, v) in edges {
        xs.push(deg[u]);
        ys.push(deg[v]);
        xs.push(deg[v]);
        ys.push(deg[u]);
    }
    if xs.is_empty() {
        return None;
    }
    pearson(&xs, &ys)
}

/// Leading eigenvector of the adjacency matrix restricted to `nodes`, from a
/// dense symmetric eigendecomposition. Returned over all `n` nodes (zero
/// outside `nodes`), nonnegative, unit norm.
pub fn leading_eigenvector(n: usize, edges: &[(usize, usize)], nodes: &[usize]) -> (f64, Vec<f64>) {
    let k = nodes.len();
    let mut pos = vec![usize::MAX; n];
    for (i, &u) in nodes.iter().enumerate() {
        pos[u] = i;
    }
    let mut a = DMatrix::<f64>::zeros(k, k);
    for &(u, v) in edges {
        if pos[u] != usize::MAX && pos[v] != usize::MAX {
            a[(pos[u], pos[v])] = 1.0;
            a[(pos[v], pos[u])] = 1.0;
        }
    }
    let eig = SymmetricEigen::new(a);
    let (idx, &lambda) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    let col = eig.eigenvectors.column(idx);
    let sign = if col.sum() < 0.0 { -1.0 } else { 1.0 };
    let mut out = vec![0.0; n];
    for (i, &u) in nodes.iter().enumerate() {
        out[u] = sign * col[i];
    }
    (lambda, out)
}

/// Singular values of a row-major `rows x cols` matrix from the eigenvalues of
/// its Gram matrix, sorted descending. Count is `min(rows, cols)`.
pub fn singular_values_via_gram(values: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let z = DMatrix::from_row_slice(rows, cols, values);
    let gram = if rows >= cols {
        z.transpose() * &z
    } else {
        &z * z.transpose()
    };
    let eig = SymmetricEigen::new(gram);
    let mut s: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    s.sort_by(|a, b| b.partial_cmp(a).unwrap());
    s
}

/// Every simple cycle as an edge set (indices into `edges`), by DFS from each
/// cycle's smallest node.
pub fn simple_cycles(n: usize, edges: &[(usize, usize)]) -> Vec<Vec<usize>> {
    let adj = adjacency(n, edges);
    let edge_id = |a: usize, b: usize| {
        edges
            .iter()
            .position(|&(x, y)| (x == a && y == b) || (x == b && y == a))
            .unwrap()
    };
    let mut out: Vec<Vec<usize>> = Vec::new();
    for start in 0..n {
        let mut path = vec![start];
        let mut on_path = vec![false; n];
        on_path[start] = true;
        fn dfs(
            adj: &[Vec<bool>],
            start: usize,
            path: &mut Vec<usize>,
            on_path: &mut [bool],
            found: &mut Vec<Vec<usize>>,
        ) {
            let at = *path.last().unwrap();
            for next in 0..adj.len() {
                if !adj[at][next] {
                    continue;
                }
                if next == start && path.len() >= 3 {
                    found.push(path.clone());
                } else if next > start && !on_path[next] {
                    on_path[next] = true;
                    path.push(next);
                    dfs(adj, start, path, on_path, found);
                    path.pop();
                    on_path[next] = false;
                }
            }
        }
        let mut found = Vec::new();
        dfs(&adj, start, &mut path, &mut on_path, &mut found);
        for cyc in found {
            // each cycle is found twice (two directions); keep one
            if cyc[1] > cyc[cyc.len() - 1] {
                continue;
            }
            let mut ids: Vec<usize> = (0..cyc.len())
                .map(|i| edge_id(cyc[i], cyc[(i + 1) % cyc.len()]))
                .collect();
            ids.sort_unstable();
            out.push(ids);
        }
    }
    out
}

/// Total length of a minimum cycle basis, by matroid-greedy selection over
/// every simple cycle.
pub fn minimum_cycle_basis_weight(n: usize, edges: &[(usize, usize)]) -> (usize, usize) {
    let mut cycles = simple_cycles(n, edges);
    cycles.sort_by_key(|c| c.len());
    let m = edges.len();
    let mut rows: Vec<Vec<bool>> = Vec::new();
    let mut weight = 0;
    for c in cycles {
        let mut v = vec![false; m];
        for &e in &c {
            v[e] = true;
        }
        let mut candidate = rows.clone();
        candidate.push(v);
        if gf2_rank(&candidate) == candidate.len() {
            rows = candidate;
            weight += c.len();
        }
    }
    (rows.len(), weight)
}

fn gf2_rank(rows: &[Vec<bool>]) -> usize {
    let mut m: Vec<Vec<bool>> = rows.to_vec();
    let cols = m.first().map_or(0, Vec::len);
    let mut rank = 0;
    for c in 0..cols {
        let Some(p) = (rank..m.len()).find(|&r| m[r][c]) else {
            continue;
        };
        m.swap(rank, p);
        for r in 0..m.len() {
            if r != rank && m[r][c] {
                let pivot = m[rank].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot) {
                    *x ^= *y;
                }
            }
        }
        rank += 1;
    }
    rank
}

/// Number of distinct node sets onto which `pattern` maps as an induced
/// subgraph. Every node subset of the right size is tried under every
/// ordering.
pub fn induced_match_sets(
    target_n: usize,
    target_bond: &dyn Fn(usize, usize) -> Option<u8>,
    pattern_n: usize,
    pattern_bond: &dyn Fn(usize, usize) -> Option<u8>,
    atom_ok: &dyn Fn(usize, usize) -> bool,
    bond_ok: &dyn Fn(usize, usize, u8) -> bool,
) -> usize {
    if pattern_n == 0 || pattern_n > target_n {
        return 0;
    }
    let pattern_edges = (0..pattern_n)
        .flat_map(|i| (i + 1..pattern_n).map(move |j| (i, j)))
        .filter(|&(i, j)| pattern_bond(i, j).is_some())
        .count();
    let mut count = 0;
    let mut subset: Vec<usize> = (0..pattern_n).collect();
    loop {
        let edges_in_subset = (0..pattern_n)
            .flat_map(|i| (i + 1..pattern_n).map(move |j| (i, j)))
            .filter(|&(i, j)| target_bond(subset[i], subset[j]).is_some())
            .count();
        if edges_in_subset == pattern_edges && any_ordering_matches(&subset, pattern_n, target_bond, pattern_bond, atom_ok, bond_ok) {
            count += 1;
        }
        // next combination
        let mut i = pattern_n;
        loop {
            if i == 0 {
                return count;
            }
            i -= 1;
            if subset[i] != i + target_n - pattern_n {
                break;
            }
            if i == 0 && subset[0] == target_n - pattern_n {
                return count;
            }
        }
        subset[i] += 1;
        for j in i + 1..pattern_n {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

fn any_ordering_matches(
    subset: &[usize],
    pattern_n: usize,
    target_bond: &dyn Fn(usize, usize) -> Option<u8>,
    pattern_bond: &dyn Fn(usize, usize) -> Option<u8>,
    atom_ok: &dyn Fn(usize, usize) -> bool,
    bond_ok: &dyn Fn(usize, usize, u8) -> bool,
) -> bool {
    let mut perm: Vec<usize> = Vec::with_capacity(pattern_n);
    let mut used = vec![false; subset.len()];
    fn go(
        perm: &mut Vec<usize>,
        used: &mut [bool],
        subset: &[usize],
        pattern_n: usize,
        target_bond: &dyn Fn(usize, usize) -> Option<u8>,
        pattern_bond: &dyn Fn(usize, usize) -> Option<u8>,
        atom_ok: &dyn Fn(usize, usize) -> bool,
        bond_ok: &dyn Fn(usize, usize, u8) -> bool,
    ) -> bool {
        let p = perm.len();
        if p == pattern_n {
            for i in 0..pattern_n {
                for j in i + 1..pattern_n {
                    match (pattern_bond(i, j), target_bond(perm[i], perm[j])) {
                        (Some(_), Some(t)) => {
                            if !bond_ok(i, j, t) {
                                return false;
                            }
                        }
                        (None, None) => {}
                        _ => return false,
                    }
                }
            }
            return true;
        }
        for k in 0..subset.len() {
            if used[k] || !atom_ok(p, subset[k]) {
                continue;
            }
            used[k] = true;
            perm.push(subset[k]);
            let ok = go(perm, used, subset, pattern_n, target_bond, pattern_bond, atom_ok, bond_ok);
            perm.pop();
            used[k] = false;
            if ok {
                return true;
            }
        }
        false
    }
    go(&mut perm, &mut used, subset, pattern_n, target_bond, pattern_bond, atom_ok, bond_ok)
}

/// ROC-AUC by comparing every positive/negative pair.
pub fn roc_auc_pairwise(scores: &[f64], labels: &[bool]) -> Option<f64> {
    let mut wins = 0.0;
    let mut total = 0.0;
    for (i, &si) in scores.iter().enumerate() {
        if !labels[i] {
            continue;
        }
        for (j, &sj) in scores.iter().enumerate() {
            if labels[j] {
                continue;
            }
            total += 1.0;
            if si > sj {
                wins += 1.0;
            } else if si == sj {
                wins += 0.5;
            }
        }
    }
    (total > 0.0).then(|| wins / total)
}

/// Spearman correlation by 1 - 6 sum d^2 / (n (n^2 - 1)); valid without ties.
pub fn spearman_no_ties(a: &[f64], b: &[f64]) -> f64 {
    let rank = |xs: &[f64]| {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&i, &j| xs[i].partial_cmp(&xs[j]).unwrap());
        let mut r = vec![0.0; xs.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64 + 1.0;
        }
        r
    };
    let ra = rank(a);
    let rb = rank(b);
    let n = a.len() as f64;
    let d2: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum();
    1.0 - 6.0 * d2 / (n * (n * n - 1.0))
}

/// Ordinary least squares fit of `y = w * x + b`.
pub fn least_squares_line(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let w = sxy / sxx;
    (w, my - w * mx)
}

/// Chi-squared statistic for a contingency table, straight from the formula.
pub fn chi_squared(table: &[Vec<f64>]) -> f64 {
    let n: f64 = table.iter().flatten().sum();
    let rows: Vec<f64> = table.iter().map(|r| r.iter().sum()).collect();
    let cols: Vec<f64> = (0..table[0].len())
        .map(|j| table.iter().map(|r| r[j]).sum())
        .collect();
    let mut chi = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &obs) in row.iter().enumerate() {
            let expected = rows[i] * cols[j] / n;
            if expected > 0.0 {
                chi += (obs - expected).powi(2) / expected;
            }
        }
    }
    chi
}
