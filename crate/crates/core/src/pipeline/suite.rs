use std::collections::HashMap;

use ndarray::{Array2, ArrayView2, Axis};
use rayon::prelude::*;
use serde::Serialize;

use super::config::{DatasetSpec, LayerChoice, SourceSpec, SuiteConfig, TOPOLOGY_TASKS};
use super::dataset::{load_dataset, Dataset};
use super::split::{sample_node_pairs, scaffold_split, SplitAssignment, SplitTag};
use super::synthetic::synthetic_dataset;
use crate::embedspace::{self, AlignmentReport, SpectrumReport, Uniformity};
use crate::encoder::{init_random, load_embeddings, EmbeddingMatrix, RowKey};
use crate::graphstats::{
    assortativity, clustering_coefficient, connectivity, cycle_count, diameter, eigenvector_centrality,
    jaccard, katz_truncated, node_degree, DEFAULT_CENTRALITY_MAX_ITER, DEFAULT_CENTRALITY_TOL, DEFAULT_KATZ_BETA,
};
use crate::metrics::{self, Aggregate};
use crate::molgraph::Topology;
use crate::probe::{build_probe, evaluate_probe, train_probe, ProbeConfig, ProbeData, TaskKind, Targets};
use crate::substructure::Registry;

/// Degrees at or above this share the top class.
pub const DEGREE_CLASSES: usize = 7;
/// Uniformity is computed on at most this many rows.
const UNIFORMITY_ROW_CAP: usize = 5000;
pub const BASELINE_SOURCE: &str = "substructure_counts";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskLevel {
    Node,
    Pair,
    Graph,
}

/// A resolved probe task on one dataset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TaskTarget {
    Topology(&'static str),
    Substructure(usize),
    Property(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProbeTask {
    pub name: String,
    pub target: TaskTarget,
    pub level: TaskLevel,
    pub kind: TaskKind,
}

impl ProbeTask {
    pub fn topology(metric: &str) -> Option<ProbeTask> {
        let name = *TOPOLOGY_TASKS.iter().find(|&&m| m == metric)?;
        let (level, kind) = match name {
            "degree" => (TaskLevel::Node, TaskKind::Multiclass(DEGREE_CLASSES)),
            "centrality" | "clustering" => (TaskLevel::Node, TaskKind::Regression),
            "link" => (TaskLevel::Pair, TaskKind::BinaryClassification),
            "jaccard" | "katz" => (TaskLevel::Pair, TaskKind::Regression),
            _ => (TaskLevel::Graph, TaskKind::Regression),
        };
        Some(ProbeTask {
            name: name.to_string(),
            target: TaskTarget::Topology(name),
            level,
            kind,
        })
    }

    /// Property tasks are scored by ROC-AUC, everything else by loss.
    pub fn higher_is_better(&self) -> bool {
        matches!(self.target, TaskTarget::Property(_))
    }
}

/// Expands the configured task list against one dataset. Unknown
/// substructure or property names come back as errors for the report.
pub fn resolve_tasks(
    names: &[String],
    dataset: &Dataset,
    registry: &Registry,
) -> Vec<Result<ProbeTask, (String, String)>> {
    let mut out = Vec::new();
    let graph = |name: String, target, kind| ProbeTask {
        name,
        target,
        level: TaskLevel::Graph,
        kind,
    };
    for n in names {
        if let Some(t) = ProbeTask::topology(n) {
            out.push(Ok(t));
        } else if n == "substructures" {
            for (i, name) in registry.names().iter().enumerate() {
                out.push(Ok(graph(format!("substructure:{name}"), TaskTarget::Substructure(i), TaskKind::Regression)));
            }
        } else if n == "properties" {
            for (i, name) in dataset.task_names.iter().enumerate() {
                out.push(Ok(graph(format!("property:{name}"), TaskTarget::Property(i), TaskKind::BinaryClassification)));
            }
        } else if let Some(s) = n.strip_prefix("substructure:") {
            out.push(match registry.index_of(s) {
                Some(i) => Ok(graph(n.clone(), TaskTarget::Substructure(i), TaskKind::Regression)),
                None => Err((n.clone(), format!("unknown substructure '{s}'"))),
            });
        } else if let Some(p) = n.strip_prefix("property:") {
            out.push(match dataset.task_index(p) {
                Some(i) => Ok(graph(n.clone(), TaskTarget::Property(i), TaskKind::BinaryClassification)),
                None => Err((n.clone(), format!("dataset has no label column '{p}'"))),
            });
        } else {
            out.push(Err((n.clone(), "unknown task".to_string())));
        }
    }
    out
}

/// Targets computed once per dataset from the raw graphs.
pub struct DatasetContext {
    pub dataset: Dataset,
    pub split: SplitAssignment,
    pub topologies: Vec<Topology>,
    pub counts: Vec<Vec<usize>>,
    node_targets: HashMap<&'static str, Vec<Vec<Option<f64>>>>,
    graph_targets: HashMap<&'static str, Vec<Option<f64>>>,
}

impl DatasetContext {
    pub fn new(dataset: Dataset, registry: &Registry, split_fractions: [f64; 3], seed: u64) -> DatasetContext {
        let split = scaffold_split(&dataset.molecules, split_fractions, seed);
        let topologies: Vec<Topology> = dataset.molecules.iter().map(|g| g.topology()).collect();
        let counts = dataset.molecules.par_iter().map(|g| registry.count_all(g)).collect();
        let per_mol: Vec<_> = topologies
            .par_iter()
            .map(|t| {
                let deg: Vec<Option<f64>> = node_degree(t).into_iter().map(|d| Some(d as f64)).collect();
                let cent: Vec<Option<f64>> = match eigenvector_centrality(t, DEFAULT_CENTRALITY_TOL, DEFAULT_CENTRALITY_MAX_ITER) {
                    Ok(c) => c.into_iter().map(Some).collect(),
                    Err(_) => vec![None; t.node_count()],
                };
                let clus: Vec<Option<f64>> = clustering_coefficient(t).into_iter().map(Some).collect();
                let graph = [
                    Some(diameter(t) as f64),
                    Some(cycle_count(t) as f64),
                    connectivity(t).ok().map(|k| k as f64),
                    assortativity(t),
                ];
                (deg, cent, clus, graph)
            })
            .collect();
        let mut node_targets: HashMap<&'static str, Vec<Vec<Option<f64>>>> = HashMap::new();
        let mut graph_targets: HashMap<&'static str, Vec<Option<f64>>> = HashMap::new();
        for (deg, cent, clus, graph) in per_mol {
            node_targets.entry("degree").or_default().push(deg);
            node_targets.entry("centrality").or_default().push(cent);
            node_targets.entry("clustering").or_default().push(clus);
            for (name, v) in ["diameter", "cycle", "connectivity", "assortativity"].into_iter().zip(graph) {
                graph_targets.entry(name).or_default().push(v);
            }
        }
        DatasetContext {
            dataset,
            split,
            topologies,
            counts,
            node_targets,
            graph_targets,
        }
    }

    fn pair_target(&self, metric: &str, m: usize, u: usize, v: usize) -> f64 {
        let t = &self.topologies[m];
        match metric {
            "link" => t.has_edge(u, v) as u8 as f64,
            "jaccard" => jaccard(t, u, v),
            // walk counts grow geometrically with length; probe their log
            _ => katz_truncated(t, u, v, t.node_count(), DEFAULT_KATZ_BETA).ln_1p(),
        }
    }

    fn graph_target(&self, task: &ProbeTask, m: usize) -> Option<f64> {
        match &task.target {
            TaskTarget::Topology(name) => self.graph_targets[name][m],
            TaskTarget::Substructure(s) => Some(self.counts[m][*s] as f64),
            TaskTarget::Property(p) => self.dataset.labels[m][*p].map(|b| b as u8 as f64),
        }
    }
}

/// One embedding source resolved against one dataset: row lookups for every
/// molecule and atom.
pub struct SourceEmbeddings {
    pub name: String,
    pub node: Option<EmbeddingMatrix>,
    pub graph: Option<EmbeddingMatrix>,
    node_rows: HashMap<(usize, usize), usize>,
    graph_rows: HashMap<usize, usize>,
}

impl SourceEmbeddings {
    pub fn new(name: &str, node: Option<EmbeddingMatrix>, graph: Option<EmbeddingMatrix>) -> SourceEmbeddings {
        let mut node_rows = HashMap::new();
        if let Some(m) = &node {
            for (r, key) in m.index.iter().enumerate() {
                if let RowKey::Atom { molecule, atom } = *key {
                    node_rows.insert((molecule, atom), r);
                }
            }
        }
        let mut graph_rows = HashMap::new();
        if let Some(m) = &graph {
            for (r, key) in m.index.iter().enumerate() {
                if let RowKey::Molecule(mol) = *key {
                    graph_rows.insert(mol, r);
                }
            }
        }
        SourceEmbeddings {
            name: name.to_string(),
            node,
            graph,
            node_rows,
            graph_rows,
        }
    }
}

fn layer_index(choice: LayerChoice, layers: usize) -> usize {
    match choice {
        LayerChoice::First => 1,
        LayerChoice::Last => layers,
        LayerChoice::Index(i) => i.min(layers),
    }
}

/// Probe scores of one (dataset, source, task, seed) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CellScores {
    pub loss: f64,
    /// Loss divided by that of predicting the test targets' mean (regression)
    /// or class frequencies (classification).
    pub normalized_loss: Option<f64>,
    pub auc: Option<f64>,
    pub train_examples: usize,
    pub test_examples: usize,
    pub best_epoch: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellResult {
    pub dataset: String,
    pub source: String,
    pub task: String,
    pub level: Option<TaskLevel>,
    pub seed: u64,
    pub outcome: Result<CellScores, String>,
}

fn standardize_columns(train: &mut Array2<f64>, others: &mut [&mut Array2<f64>]) {
    let mean = train.mean_axis(Axis(0)).expect("train split is non-empty");
    let std = train.std_axis(Axis(0), 0.0).mapv(|s| if s > 0.0 { s } else { 1.0 });
    for m in std::iter::once(train).chain(others.iter_mut().map(|m| &mut **m)) {
        *m -= &mean;
        *m /= &std;
    }
}

/// Baseline loss of the best constant predictor on `y`.
fn null_loss(y: &Targets, kind: TaskKind) -> Option<f64> {
    let n = y.len() as f64;
    let entropy = |counts: &[f64]| -> f64 {
        counts.iter().filter(|&&c| c > 0.0).map(|&c| -(c / n) * (c / n).ln()).sum()
    };
    let v = match (y, kind) {
        (Targets::Real(t), _) => {
            let mean = t.iter().sum::<f64>() / n;
            t.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n
        }
        (Targets::Binary(t), _) => {
            let pos = t.iter().filter(|&&b| b).count() as f64;
            entropy(&[pos, n - pos])
        }
        (Targets::Class(t), TaskKind::Multiclass(k)) => {
            let mut c = vec![0.0; k];
            for &l in t {
                c[l] += 1.0;
            }
            entropy(&c)
        }
        _ => return None,
    };
    (v > 0.0).then_some(v)
}

struct Split3 {
    train: (Vec<Vec<f64>>, Vec<f64>),
    valid: (Vec<Vec<f64>>, Vec<f64>),
    test: (Vec<Vec<f64>>, Vec<f64>),
}

fn to_matrix(rows: &[Vec<f64>], dim: usize) -> Array2<f64> {
    let mut m = Array2::zeros((rows.len(), dim));
    for (i, r) in rows.iter().enumerate() {
        m.row_mut(i).assign(&ndarray::ArrayView1::from(r.as_slice()));
    }
    m
}

/// Gathers features and raw targets for every split.
fn gather(
    ctx: &DatasetContext,
    emb: &SourceEmbeddings,
    task: &ProbeTask,
    pairs: usize,
    seed: u64,
) -> Result<(Split3, usize), String> {
    let mut out = Split3 {
        train: (Vec::new(), Vec::new()),
        valid: (Vec::new(), Vec::new()),
        test: (Vec::new(), Vec::new()),
    };
    let ids = &ctx.dataset.row_ids;
    let dim;
    for (k, tag) in [SplitTag::Train, SplitTag::Valid, SplitTag::Test].into_iter().enumerate() {
        let pool = ctx.split.indices(tag);
        let dest = match tag {
            SplitTag::Train => &mut out.train,
            SplitTag::Valid => &mut out.valid,
            SplitTag::Test => &mut out.test,
        };
        match task.level {
            TaskLevel::Node => {
                let m = emb.node.as_ref().ok_or("source has no node embeddings")?;
                let TaskTarget::Topology(name) = task.target else { unreachable!() };
                for &mol in &pool {
                    for (atom, y) in ctx.node_targets[name][mol].iter().enumerate() {
                        if let (Some(y), Some(&r)) = (y, emb.node_rows.get(&(ids[mol], atom))) {
                            dest.0.push(m.values.row(r).to_vec());
                            dest.1.push(*y);
                        }
                    }
                }
            }
            TaskLevel::Pair => {
                let m = emb.node.as_ref().ok_or("source has no node embeddings")?;
                let TaskTarget::Topology(name) = task.target else { unreachable!() };
                let count = ((pairs as f64) * ctx.split.fractions[k]).round().max(1.0) as usize;
                let sampled = match sample_node_pairs(&ctx.dataset.molecules, &pool, count, seed.wrapping_add(k as u64 * 7919)) {
                    Ok(p) => p,
                    Err(e) if tag == SplitTag::Train => return Err(e.to_string()),
                    Err(_) => Vec::new(),
                };
                for (mol, u, v) in sampled {
                    let (Some(&ru), Some(&rv)) = (emb.node_rows.get(&(ids[mol], u)), emb.node_rows.get(&(ids[mol], v))) else {
                        continue;
                    };
                    let (zu, zv) = (m.values.row(ru), m.values.row(rv));
                    let mut f = zu.to_vec();
                    f.extend(zv.iter());
                    f.extend(zu.iter().zip(zv.iter()).map(|(a, b)| a * b));
                    dest.0.push(f);
                    dest.1.push(ctx.pair_target(name, mol, u, v));
                }
            }
            TaskLevel::Graph => {
                let m = emb.graph.as_ref().ok_or("source has no graph embeddings")?;
                for &mol in &pool {
                    if let (Some(y), Some(&r)) = (ctx.graph_target(task, mol), emb.graph_rows.get(&ids[mol])) {
                        dest.0.push(m.values.row(r).to_vec());
                        dest.1.push(y);
                    }
                }
            }
        }
    }
    dim = [&out.train, &out.valid, &out.test]
        .iter()
        .find_map(|s| s.0.first().map(|r| r.len()))
        .unwrap_or(0);
    Ok((out, dim))
}

fn targets(raw: &[f64], kind: TaskKind) -> Targets {
    match kind {
        TaskKind::Regression => Targets::Real(raw.to_vec()),
        TaskKind::BinaryClassification => Targets::Binary(raw.iter().map(|&y| y > 0.5).collect()),
        TaskKind::Multiclass(k) => Targets::Class(raw.iter().map(|&y| (y as usize).min(k - 1)).collect()),
    }
}

/// Trains and scores one probe on pre-gathered rows.
pub fn probe_cell(
    train: (Array2<f64>, Vec<f64>),
    valid: (Array2<f64>, Vec<f64>),
    test: (Array2<f64>, Vec<f64>),
    kind: TaskKind,
    probe: &ProbeConfig,
    standardize: bool,
    seed: u64,
) -> Result<CellScores, String> {
    let (mut xtr, mut ytr) = train;
    let (mut xva, mut yva) = valid;
    let (mut xte, mut yte) = test;
    if xtr.nrows() == 0 {
        return Err("train split is empty".into());
    }
    if xte.nrows() == 0 {
        return Err("test split is empty".into());
    }
    if xva.nrows() == 0 {
        // fall back to selecting on the training data
        xva = xtr.clone();
        yva = ytr.clone();
    }
    if standardize {
        standardize_columns(&mut xtr, &mut [&mut xva, &mut xte]);
    }
    if kind == TaskKind::Regression {
        let n = ytr.len() as f64;
        let mean = ytr.iter().sum::<f64>() / n;
        let sd = (ytr.iter().map(|y| (y - mean) * (y - mean)).sum::<f64>() / n).sqrt();
        let sd = if sd > 0.0 { sd } else { 1.0 };
        for y in ytr.iter_mut().chain(yva.iter_mut()).chain(yte.iter_mut()) {
            *y = (*y - mean) / sd;
        }
    }
    let cfg = ProbeConfig {
        seed,
        task_kind: kind,
        ..probe.clone()
    };
    let err = |e: crate::probe::ProbeError| e.to_string();
    let train = ProbeData::new(xtr, targets(&ytr, kind)).map_err(err)?;
    let valid = ProbeData::new(xva, targets(&yva, kind)).map_err(err)?;
    let test = ProbeData::new(xte, targets(&yte, kind)).map_err(err)?;
    let model = build_probe(&cfg, train.x.ncols(), kind.output_dim()).map_err(err)?;
    let outcome = train_probe(model, &train, &valid, &cfg).map_err(err)?;
    let scores = evaluate_probe(&outcome.model, &test).map_err(err)?;
    Ok(CellScores {
        loss: scores.loss,
        normalized_loss: null_loss(&test.y, kind).map(|b| scores.loss / b),
        auc: scores.auc,
        train_examples: train.len(),
        test_examples: test.len(),
        best_epoch: outcome.best_epoch,
    })
}

/// Gathers the rows for `task` from `emb` and runs one probe.
pub fn run_probe_task(
    ctx: &DatasetContext,
    emb: &SourceEmbeddings,
    task: &ProbeTask,
    config: &SuiteConfig,
    seed: u64,
) -> Result<CellScores, String> {
    let (rows, dim) = gather(ctx, emb, task, config.pairs, seed)?;
    if dim == 0 {
        return Err("no examples with both an embedding and a target".into());
    }
    let pack = |(x, y): (Vec<Vec<f64>>, Vec<f64>)| (to_matrix(&x, dim), y);
    probe_cell(
        pack(rows.train),
        pack(rows.valid),
        pack(rows.test),
        task.kind,
        &config.probe,
        config.standardize,
        seed,
    )
}

/// Logistic regression on the substructure-count vector for a property task.
fn baseline_cell(ctx: &DatasetContext, task: &ProbeTask, config: &SuiteConfig, seed: u64) -> Result<CellScores, String> {
    let TaskTarget::Property(p) = task.target else {
        return Err("baseline applies to property tasks".into());
    };
    let split = |tag| {
        let pool = ctx.split.indices(tag);
        let keep: Vec<usize> = pool.into_iter().filter(|&m| ctx.dataset.labels[m][p].is_some()).collect();
        let mut x = Array2::zeros((keep.len(), ctx.counts.first().map_or(0, |c| c.len())));
        for (i, &m) in keep.iter().enumerate() {
            for (j, &c) in ctx.counts[m].iter().enumerate() {
                x[[i, j]] = c as f64;
            }
        }
        let y = keep.iter().map(|&m| ctx.dataset.labels[m][p].unwrap() as u8 as f64).collect();
        (x, y)
    };
    let probe = ProbeConfig {
        hidden_layers: 0,
        ..config.probe.clone()
    };
    probe_cell(
        split(SplitTag::Train),
        split(SplitTag::Valid),
        split(SplitTag::Test),
        TaskKind::BinaryClassification,
        &probe,
        true,
        seed,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpaceResult {
    pub dataset: String,
    pub source: String,
    pub layer: usize,
    pub uniformity: Uniformity,
    pub spectrum: SpectrumReport,
    pub alignment: AlignmentReport,
    pub positive_pairs: usize,
    pub negative_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TaskAggregate {
    pub dataset: String,
    pub source: String,
    pub task: String,
    /// "auc" or "loss"
    pub metric: &'static str,
    pub higher_is_better: bool,
    pub score: Option<Aggregate>,
    pub normalized_loss: Option<Aggregate>,
    pub per_seed: Vec<Option<f64>>,
    pub failures: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankRow {
    pub dataset: String,
    pub task: String,
    /// Per source in `ProbeReport::sources` order; 1 is best, ties share the mean rank.
    pub ranks: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Failure {
    pub stage: String,
    pub dataset: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub schema: &'static str,
    pub toolkit_version: &'static str,
    pub config_hash: String,
    pub config: String,
    pub seeds: Vec<u64>,
    pub datasets: Vec<String>,
    pub sources: Vec<String>,
    pub cells: Vec<CellResult>,
    pub aggregates: Vec<TaskAggregate>,
    pub ranks: Vec<RankRow>,
    pub average_ranks: Vec<Option<f64>>,
    /// Spearman correlation of the average ranks with the reference ranking.
    pub rank_correlation: Option<f64>,
    pub space: Vec<SpaceResult>,
    pub failures: Vec<Failure>,
}

pub const REPORT_SCHEMA: &str = "molprobe-report/1";

impl ProbeReport {
    pub fn empty(config: &SuiteConfig) -> ProbeReport {
        ProbeReport {
            schema: REPORT_SCHEMA,
            toolkit_version: env!("CARGO_PKG_VERSION"),
            config_hash: config.hash.clone(),
            config: config.canonical.clone(),
            seeds: (0..config.seeds as u64).map(|i| config.seed + i).collect(),
            datasets: Vec::new(),
            sources: config.sources.iter().map(|s| s.name.clone()).collect(),
            cells: Vec::new(),
            aggregates: Vec::new(),
            ranks: Vec::new(),
            average_ranks: Vec::new(),
            rank_correlation: None,
            space: Vec::new(),
            failures: Vec::new(),
        }
    }

    /// Failed cells plus dataset/source-level failures.
    pub fn failure_count(&self) -> usize {
        self.failures.len() + self.cells.iter().filter(|c| c.outcome.is_err()).count()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty() && self.space.is_empty()
    }
}

fn load(spec: &DatasetSpec, max: Option<usize>) -> Result<Dataset, String> {
    let mut ds = match spec {
        DatasetSpec::Csv(p) => load_dataset(p).map_err(|e| e.to_string())?,
        DatasetSpec::Synthetic { count, seed } => synthetic_dataset(*count, *seed, 0.1),
    };
    if let Some(m) = max {
        if ds.len() > m {
            ds.molecules.truncate(m);
            ds.smiles.truncate(m);
            ds.row_ids.truncate(m);
            ds.labels.truncate(m);
        }
    }
    if ds.is_empty() {
        return Err(format!("{}: no parseable molecules", ds.name));
    }
    Ok(ds)
}

fn resolve_source(
    ctx: &DatasetContext,
    name: &str,
    spec: &SourceSpec,
    layer: LayerChoice,
) -> Result<(SourceEmbeddings, usize), String> {
    match spec {
        SourceSpec::Random(cfg) => {
            let enc = init_random(cfg).map_err(|e| e.to_string())?;
            let t = layer_index(layer, cfg.layers);
            let graphs: Vec<_> = ctx.dataset.molecules.iter().collect();
            let (node, graph) = enc.encode_layer(&graphs, &ctx.dataset.row_ids, t);
            Ok((SourceEmbeddings::new(name, Some(node), Some(graph)), t))
        }
        SourceSpec::Files { node, graph } => {
            let read = |p: &Option<std::path::PathBuf>| -> Result<Option<EmbeddingMatrix>, String> {
                p.as_ref()
                    .map(|p| load_embeddings(p).map_err(|e| format!("{}: {e}", p.display())))
                    .transpose()
            };
            let (node, graph) = (read(node)?, read(graph)?);
            let t = graph.as_ref().or(node.as_ref()).map_or(0, |m| m.layer_index as usize);
            Ok((SourceEmbeddings::new(name, node, graph), t))
        }
    }
}

fn space_result(ctx: &DatasetContext, emb: &SourceEmbeddings, layer: usize, config: &SuiteConfig) -> Option<SpaceResult> {
    let g = emb.graph.as_ref()?;
    // rows in dataset order, skipping molecules without an embedding
    let rows: Vec<(usize, usize)> = ctx
        .dataset
        .row_ids
        .iter()
        .enumerate()
        .filter_map(|(pos, id)| emb.graph_rows.get(id).map(|&r| (pos, r)))
        .collect();
    let idx: Vec<usize> = rows.iter().map(|&(_, r)| r).collect();
    let z = g.values.select(Axis(0), &idx);
    let capped: ArrayView2<f64> = z.slice(ndarray::s![..z.nrows().min(UNIFORMITY_ROW_CAP), ..]);
    let labels: Vec<Vec<Option<bool>>> = rows.iter().map(|&(pos, _)| ctx.dataset.labels[pos].clone()).collect();
    let pairs = embedspace::build_pairs(&labels, config.space_pairs, config.seed);
    Some(SpaceResult {
        dataset: ctx.dataset.name.clone(),
        source: emb.name.clone(),
        layer,
        uniformity: embedspace::uniformity(capped, embedspace::DEFAULT_UNIFORMITY_T),
        spectrum: embedspace::spectrum(z.view(), embedspace::DEFAULT_COLLAPSE_TAU, false),
        alignment: embedspace::alignment(z.view(), &pairs, embedspace::DEFAULT_ALIGNMENT_BINS),
        positive_pairs: pairs.positive.len(),
        negative_pairs: pairs.negative.len(),
    })
}

/// Ranks (1 = best) with ties sharing the mean rank; `None` stays unranked.
fn rank(values: &[Option<f64>], higher_is_better: bool) -> Vec<Option<f64>> {
    let present: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|x| (i, if higher_is_better { -x } else { x })))
        .collect();
    let ranks = metrics::mid_ranks(&present.iter().map(|p| p.1).collect::<Vec<_>>());
    let mut out = vec![None; values.len()];
    for ((i, _), r) in present.iter().zip(ranks) {
        out[*i] = Some(r);
    }
    out
}

/// Runs every (dataset, source, task, seed) cell and the embedding-space
/// diagnostics. Cells run in parallel; the report is assembled in a fixed order.
pub fn run_suite(config: &SuiteConfig) -> ProbeReport {
    let registry = Registry::builtin();
    let mut report = ProbeReport::empty(config);
    let seeds = report.seeds.clone();
    for spec in &config.datasets {
        let ds = match load(spec, config.max_molecules) {
            Ok(ds) => ds,
            Err(message) => {
                report.failures.push(Failure {
                    stage: "load".into(),
                    dataset: format!("{spec:?}"),
                    message,
                });
                continue;
            }
        };
        log::info!("{}: {} molecules ({} skipped)", ds.name, ds.len(), ds.skipped);
        let tasks = resolve_tasks(&config.tasks, &ds, &registry);
        let ctx = DatasetContext::new(ds, &registry, config.split, config.seed);
        let name = ctx.dataset.name.clone();
        report.datasets.push(name.clone());
        let mut sources = Vec::new();
        for s in &config.sources {
            match resolve_source(&ctx, &s.name, &s.spec, config.layer) {
                Ok(pair) => sources.push(Some(pair)),
                Err(message) => {
                    report.failures.push(Failure {
                        stage: format!("source {}", s.name),
                        dataset: name.clone(),
                        message,
                    });
                    sources.push(None);
                }
            }
        }
        // cell list in report order: task, source, seed
        let mut cells: Vec<(usize, Option<usize>, u64)> = Vec::new();
        for (ti, t) in tasks.iter().enumerate() {
            for si in 0..config.sources.len() {
                for &seed in &seeds {
                    cells.push((ti, Some(si), seed));
                }
            }
            if config.baseline && matches!(t, Ok(ProbeTask { target: TaskTarget::Property(_), .. })) {
                for &seed in &seeds {
                    cells.push((ti, None, seed));
                }
            }
        }
        let results: Vec<CellResult> = cells
            .par_iter()
            .map(|&(ti, si, seed)| {
                let (task_name, level, outcome) = match &tasks[ti] {
                    Err((n, msg)) => (n.clone(), None, Err(msg.clone())),
                    Ok(task) => {
                        let outcome = match si {
                            None => baseline_cell(&ctx, task, config, seed),
                            Some(si) => match &sources[si] {
                                None => Err("embedding source unavailable".to_string()),
                                Some((emb, _)) => run_probe_task(&ctx, emb, task, config, seed),
                            },
                        };
                        (task.name.clone(), Some(task.level), outcome)
                    }
                };
                CellResult {
                    dataset: name.clone(),
                    source: si.map_or(BASELINE_SOURCE.to_string(), |i| config.sources[i].name.clone()),
                    task: task_name,
                    level,
                    seed,
                    outcome,
                }
            })
            .collect();
        report.cells.extend(results);
        if config.space {
            for (emb, layer) in sources.iter().flatten() {
                if let Some(r) = space_result(&ctx, emb, *layer, config) {
                    report.space.push(r);
                }
            }
        }
    }
    aggregate_report(&mut report, &config.reference_ranking);
    report
}

/// Fills aggregates, rank tables and the rank correlation from the cells.
pub fn aggregate_report(report: &mut ProbeReport, reference: &[String]) {
    let mut groups: Vec<((String, String, String), Vec<&CellResult>)> = Vec::new();
    for c in &report.cells {
        let key = (c.dataset.clone(), c.task.clone(), c.source.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(c),
            None => groups.push((key, vec![c])),
        }
    }
    report.aggregates = groups
        .iter()
        .map(|((dataset, task, source), cells)| {
            let higher = task.starts_with("property:");
            let per_seed: Vec<Option<f64>> = cells
                .iter()
                .map(|c| c.outcome.as_ref().ok().and_then(|s| if higher { s.auc } else { Some(s.loss) }))
                .collect();
            let defined: Vec<f64> = per_seed.iter().flatten().copied().collect();
            if defined.len() < per_seed.len() {
                log::info!("{dataset}/{task}/{source}: {} seeds without a score", per_seed.len() - defined.len());
            }
            let norm: Vec<f64> = cells
                .iter()
                .filter_map(|c| c.outcome.as_ref().ok().and_then(|s| s.normalized_loss))
                .collect();
            TaskAggregate {
                dataset: dataset.clone(),
                source: source.clone(),
                task: task.clone(),
                metric: if higher { "auc" } else { "loss" },
                higher_is_better: higher,
                score: metrics::aggregate(&defined),
                normalized_loss: metrics::aggregate(&norm),
                per_seed,
                failures: cells.iter().filter(|c| c.outcome.is_err()).count(),
            }
        })
        .collect();
    let sources = report.sources.clone();
    let mut rows: Vec<RankRow> = Vec::new();
    let mut seen: Vec<(String, String)> = Vec::new();
    for a in &report.aggregates {
        let key = (a.dataset.clone(), a.task.clone());
        if seen.contains(&key) {
            continue;
        }
        seen.push(key.clone());
        let values: Vec<Option<f64>> = sources
            .iter()
            .map(|s| {
                report
                    .aggregates
                    .iter()
                    .find(|b| b.dataset == key.0 && b.task == key.1 && &b.source == s)
                    .and_then(|b| b.score.map(|x| x.mean))
            })
            .collect();
        rows.push(RankRow {
            dataset: key.0,
            task: key.1,
            ranks: rank(&values, a.higher_is_better),
        });
    }
    report.average_ranks = (0..sources.len())
        .map(|i| {
            let r: Vec<f64> = rows.iter().filter_map(|row| row.ranks[i]).collect();
            (!r.is_empty()).then(|| r.iter().sum::<f64>() / r.len() as f64)
        })
        .collect();
    report.ranks = rows;
    report.rank_correlation = None;
    if !reference.is_empty() {
        let mut ours = Vec::new();
        let mut theirs = Vec::new();
        for (pos, name) in reference.iter().enumerate() {
            if let Some(i) = sources.iter().position(|s| s == name) {
                if let Some(r) = report.average_ranks[i] {
                    ours.push(r);
                    theirs.push(pos as f64 + 1.0);
                }
            }
        }
        report.rank_correlation = metrics::spearman(&ours, &theirs).ok().flatten();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(extra: &str) -> SuiteConfig {
        let text = format!(
            "synthetic=60\nsynthetic.seed=3\nsource.rand.kind=random\nsource.rand.layers=2\nsource.rand.hidden_dim=16\n\
             probe.epochs=5\nprobe.hidden_layers=0\nseeds=1\nspace=false\nbaseline=false\n{extra}"
        );
        SuiteConfig::parse(&text).unwrap()
    }

    #[test]
    fn one_task_one_seed_one_score() {
        let r = run_suite(&tiny_config("tasks=degree\n"));
        assert_eq!(r.cells.len(), 1);
        assert!(r.cells[0].outcome.is_ok(), "{:?}", r.cells[0].outcome);
        assert_eq!(r.aggregates.len(), 1);
        assert_eq!(r.failure_count(), 0);
    }

    #[test]
    fn two_sources_rank_and_correlation() {
        let cfg = tiny_config(
            "tasks=degree,diameter\nsource.other.kind=random\nsource.other.layers=1\nsource.other.hidden_dim=8\n\
             reference_ranking=rand,other\n",
        );
        let r = run_suite(&cfg);
        assert_eq!(r.ranks.len(), 2);
        assert!(r.ranks.iter().all(|row| row.ranks.len() == 2));
        assert_eq!(r.average_ranks.len(), 2);
    }

    #[test]
    fn unknown_task_recorded_not_fatal() {
        let r = run_suite(&tiny_config("tasks=degree,substructure:nope\n"));
        assert_eq!(r.cells.len(), 2);
        assert!(r.cells[1].outcome.is_err());
        assert_eq!(r.failure_count(), 1);
    }

    #[test]
    fn ranks_share_ties() {
        assert_eq!(rank(&[Some(0.2), Some(0.1), None], false), vec![Some(2.0), Some(1.0), None]);
        assert_eq!(rank(&[Some(0.5), Some(0.5)], true), vec![Some(1.5), Some(1.5)]);
        assert_eq!(rank(&[Some(0.9), Some(0.7)], true), vec![Some(1.0), Some(2.0)]);
    }
}
