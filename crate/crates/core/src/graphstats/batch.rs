use std::collections::BTreeMap;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use super::*;

/// One value of one metric. Node metrics set `node`, pair metrics set `pair`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub molecule: usize,
    pub node: Option<usize>,
    pub pair: Option<(usize, usize)>,
    pub value: f64,
}

#[derive(Debug, Clone)]
pub enum PairRequest {
    /// Every unordered atom pair of every molecule.
    All,
    /// Explicit `(molecule, u, v)` triples.
    List(Vec<(usize, usize, usize)>),
}

pub const NODE_METRICS: [&str; 3] = ["degree", "centrality", "clustering"];
pub const PAIR_METRICS: [&str; 3] = ["link", "jaccard", "katz"];
pub const GRAPH_METRICS: [&str; 4] = ["diameter", "cycle", "connectivity", "assortativity"];

#[derive(Debug, Clone, Default)]
pub struct BatchOutput {
    pub metrics: BTreeMap<&'static str, Vec<MetricRow>>,
    /// Per metric, how many values were undefined and left out.
    pub skipped: BTreeMap<&'static str, usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub metric: String,
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

fn is_integer_metric(name: &str) -> bool {
    matches!(name, "degree" | "link" | "diameter" | "cycle" | "connectivity")
}

/// Unit-width bins centred on integers for count metrics, 20 equal bins
/// between the observed extremes otherwise.
pub fn histogram(metric: &str, values: &[f64]) -> Histogram {
    if values.is_empty() {
        return Histogram {
            metric: metric.to_string(),
            edges: Vec::new(),
            counts: Vec::new(),
        };
    }
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let edges: Vec<f64> = if is_integer_metric(metric) {
        let (lo, hi) = (lo.round() as i64, hi.round() as i64);
        (lo..=hi + 1).map(|k| k as f64 - 0.5).collect()
    } else if hi > lo {
        (0..=20).map(|k| lo + (hi - lo) * k as f64 / 20.0).collect()
    } else {
        vec![lo - 0.5, lo + 0.5]
    };
    let bins = edges.len() - 1;
    let mut counts = vec![0u64; bins];
    let width = (edges[bins] - edges[0]) / bins as f64;
    for &v in values {
        let k = (((v - edges[0]) / width).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram {
        metric: metric.to_string(),
        edges,
        counts,
    }
}

struct MoleculeRows {
    rows: Vec<(&'static str, MetricRow)>,
    skipped: Vec<&'static str>,
}

fn molecule_rows(idx: usize, g: &Topology, pairs: &[(usize, usize)]) -> MoleculeRows {
    let mut rows = Vec::new();
    let mut skipped = Vec::new();
    let node = |node, value| MetricRow {
        molecule: idx,
        node: Some(node),
        pair: None,
        value,
    };
    for (u, d) in node_degree(g).into_iter().enumerate() {
        rows.push(("degree", node(u, d as f64)));
    }
    match eigenvector_centrality(g, DEFAULT_CENTRALITY_TOL, DEFAULT_CENTRALITY_MAX_ITER) {
        Ok(c) => rows.extend(c.into_iter().enumerate().map(|(u, x)| ("centrality", node(u, x)))),
        Err(e) => {
            log::warn!("molecule {idx}: {e}");
            skipped.push("centrality");
        }
    }
    for (u, c) in clustering_coefficient(g).into_iter().enumerate() {
        rows.push(("clustering", node(u, c)));
    }
    for &(u, v) in pairs {
        let pair = |value| MetricRow {
            molecule: idx,
            node: None,
            pair: Some((u, v)),
            value,
        };
        match pair_stats(g, u, v) {
            Ok(s) => {
                rows.push(("link", pair(s.link as f64)));
                rows.push(("jaccard", pair(s.jaccard)));
                rows.push(("katz", pair(s.katz)));
            }
            Err(e) => {
                log::warn!("molecule {idx}: {e}");
                skipped.extend(PAIR_METRICS);
            }
        }
    }
    let graph = |value| MetricRow {
        molecule: idx,
        node: None,
        pair: None,
        value,
    };
    rows.push(("diameter", graph(diameter(g) as f64)));
    rows.push(("cycle", graph(cycle_count(g) as f64)));
    match connectivity(g) {
        Ok(k) => rows.push(("connectivity", graph(k as f64))),
        Err(_) => skipped.push("connectivity"),
    }
    match assortativity(g) {
        Some(r) => rows.push(("assortativity", graph(r))),
        None => skipped.push("assortativity"),
    }
    MoleculeRows { rows, skipped }
}

/// Computes every metric for every molecule. Output rows are ordered by
/// molecule index regardless of how the work was scheduled.
pub fn compute_batch(graphs: &[Topology], pairs: &PairRequest) -> BatchOutput {
    let mut per_molecule: Vec<Vec<(usize, usize)>> = vec![Vec::new(); graphs.len()];
    match pairs {
        PairRequest::All => {
            for (i, g) in graphs.iter().enumerate() {
                let n = g.node_count();
                per_molecule[i] = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u, v))).collect();
            }
        }
        PairRequest::List(list) => {
            for &(m, u, v) in list {
                if m < graphs.len() {
                    per_molecule[m].push((u, v));
                }
            }
        }
    }
    let results: Vec<MoleculeRows> = graphs
        .par_iter()
        .enumerate()
        .map(|(i, g)| molecule_rows(i, g, &per_molecule[i]))
        .collect();
    let mut out = BatchOutput::default();
    for name in NODE_METRICS.iter().chain(&PAIR_METRICS).chain(&GRAPH_METRICS) {
        out.metrics.insert(name, Vec::new());
        out.skipped.insert(name, 0);
    }
    for r in results {
        for (name, row) in r.rows {
            out.metrics.get_mut(name).expect("known metric").push(row);
        }
        for name in r.skipped {
            *out.skipped.get_mut(name).expect("known metric") += 1;
        }
    }
    out
}

fn write_csv(path: &Path, name: &str, rows: &[MetricRow]) -> io::Result<()> {
    let mut f = io::BufWriter::new(fs::File::create(path)?);
    if NODE_METRICS.contains(&name) {
        writeln!(f, "molecule_index,node_index,value")?;
        for r in rows {
            writeln!(f, "{},{},{}", r.molecule, r.node.unwrap_or(0), r.value)?;
        }
    } else if PAIR_METRICS.contains(&name) {
        writeln!(f, "molecule_index,node_u,node_v,value")?;
        for r in rows {
            let (u, v) = r.pair.unwrap_or((0, 0));
            writeln!(f, "{},{},{},{}", r.molecule, u, v, r.value)?;
        }
    } else {
        writeln!(f, "molecule_index,value")?;
        for r in rows {
            writeln!(f, "{},{}", r.molecule, r.value)?;
        }
    }
    f.flush()
}

/// Writes `<metric>.csv` for every metric and `histograms.json` into `dir`.
pub fn write_batch(batch: &BatchOutput, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut hists = Vec::new();
    for (name, rows) in &batch.metrics {
        write_csv(&dir.join(format!("{name}.csv")), name, rows)?;
        let values: Vec<f64> = rows.iter().map(|r| r.value).collect();
        hists.push(histogram(name, &values));
    }
    #[derive(Serialize)]
    struct HistFile<'a> {
        histograms: &'a [Histogram],
        skipped: &'a BTreeMap<&'static str, usize>,
    }
    let json = serde_json::to_string_pretty(&HistFile {
        histograms: &hists,
        skipped: &batch.skipped,
    })
    .map_err(io::Error::other)?;
    fs::write(dir.join("histograms.json"), json)
}
