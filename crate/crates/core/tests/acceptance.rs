//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::time::{Duration, Instant};

use ndarray::{array, Array2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use molprobe::embedspace::{spectrum, uniformity, DEFAULT_COLLAPSE_TAU};
use molprobe::encoder::{init_random, EmbeddingMatrix, EncoderConfig, Readout, RowKey};
use molprobe::graphstats::*;
use molprobe::metrics::roc_auc;
use molprobe::molgraph::{parse_smiles, MolecularGraph};
use molprobe::pipeline::*;
use molprobe::probe::{build_probe, gradient_check, ProbeConfig, TaskKind, Targets};
use molprobe::substructure::*;
use molprobe_oracles as oracle;

use common::*;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn within(elapsed: Duration, limit_s: u64) -> Result<(), String> {
    ensure(
        elapsed < Duration::from_secs(limit_s),
        format!("took {:.1}s, limit {limit_s}s", elapsed.as_secs_f64()),
    )
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

/// Nodes of the largest component, ties going to the component holding the
/// smallest node.
fn largest_component(n: usize, edges: &[(usize, usize)]) -> Vec<usize> {
    let d = oracle::distances(n, edges);
    let mut best: Vec<usize> = Vec::new();
    for i in 0..n {
        let comp: Vec<usize> = (0..n).filter(|&j| d[i][j].is_some()).collect();
        if comp[0] == i && comp.len() > best.len() {
            best = comp;
        }
    }
    best
}

fn check_topology(n: usize, edges: &[(usize, usize)]) -> Result<(), String> {
    let g = topology(n, edges);
    let ctx = format!("n={n} edges={edges:?}");
    let deg: Vec<usize> = (0..n).map(|u| edges.iter().filter(|&&(a, b)| a == u || b == u).count()).collect();
    ensure(node_degree(&g) == deg, format!("degree {ctx}"))?;

    let comp = largest_component(n, edges);
    let cent = eigenvector_centrality(&g, DEFAULT_CENTRALITY_TOL, DEFAULT_CENTRALITY_MAX_ITER)
        .map_err(|e| format!("centrality {ctx}: {e}"))?;
    let has_edges = edges.iter().any(|&(a, _)| comp.contains(&a));
    let expected = if comp.len() >= 2 && has_edges {
        oracle::leading_eigenvector(n, edges, &comp).1
    } else {
        vec![0.0; n]
    };
    for u in 0..n {
        ensure(close(cent[u], expected[u], 1e-8), format!("centrality {ctx}: {cent:?} vs {expected:?}"))?;
    }

    let clus = clustering_coefficient(&g);
    for (a, b) in clus.iter().zip(oracle::clustering(n, edges)) {
        ensure(close(*a, b, 1e-8), format!("clustering {ctx}"))?;
    }
    ensure(diameter(&g) == oracle::diameter_largest_component(n, edges), format!("diameter {ctx}"))?;
    let rank = edges.len() + oracle::component_count(n, edges) - n;
    ensure(cycle_count(&g) == rank, format!("cycle count {ctx}"))?;
    if n >= 2 {
        ensure(
            connectivity(&g).ok() == Some(oracle::vertex_connectivity(n, edges)),
            format!("connectivity {ctx}"),
        )?;
    }
    match (assortativity(&g), oracle::assortativity(n, edges)) {
        (None, None) => {}
        (Some(a), Some(b)) if close(a, b, 1e-8) => {}
        (a, b) => return Err(format!("assortativity {ctx}: {a:?} vs {b:?}")),
    }
    for u in 0..n {
        for v in u + 1..n {
            let s = pair_stats(&g, u, v).map_err(|e| e.to_string())?;
            let adjacent = edges.contains(&(u, v)) || edges.contains(&(v, u));
            ensure(s.link == adjacent as u8, format!("link {ctx}"))?;
            let nu: Vec<usize> = (0..n).filter(|&w| edges.contains(&(u.min(w), u.max(w)))).collect();
            let nv: Vec<usize> = (0..n).filter(|&w| edges.contains(&(v.min(w), v.max(w)))).collect();
            let inter = nu.iter().filter(|w| nv.contains(w)).count();
            let union = nu.len() + nv.len() - inter;
            let jac = if union == 0 { 0.0 } else { inter as f64 / union as f64 };
            ensure(close(s.jaccard, jac, 1e-12), format!("jaccard {ctx}"))?;
            let katz = oracle::katz_by_walks(n, edges, u, v, n, 1.0);
            ensure(close(s.katz, katz, 1e-8 * katz.max(1.0)), format!("katz {ctx}"))?;
        }
    }
    Ok(())
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..200 {
        let (n, edges) = random_graph(&mut rng, 7);
        check_topology(n, &edges)?;
    }
    let mols = small_molecules();
    for g in &mols {
        let t = g.topology();
        check_topology(t.node_count(), &edges_of(&t))?;
    }
    within(start.elapsed(), 30)?;
    Ok(format!("200 random graphs + {} molecules in {:.1}s", mols.len(), start.elapsed().as_secs_f64()))
}

fn oracle_count(g: &MolecularGraph, p: &Pattern) -> usize {
    let ctx = MatchContext::new(g);
    if p.mode == MatchMode::CountAtoms {
        return (0..g.atom_count()).filter(|&i| ctx.atom_matches(i, &p.atoms[0])).count();
    }
    let t = g.topology();
    let edges = edges_of(&t);
    let cyclic = non_bridge_edges(g.atom_count(), &edges);
    let bond_index = |u: usize, v: usize| edges.iter().position(|&e| e == (u.min(v), u.max(v)));
    let target_bond = |u: usize, v: usize| bond_index(u, v).map(|k| k as u8);
    let pattern_bond = |i: usize, j: usize| p.bond_between(i, j).map(|_| 0u8);
    let atom_ok = |i: usize, t: usize| ctx.atom_matches(t, &p.atoms[i]);
    let bond_ok = |i: usize, j: usize, k: u8| {
        let bp = p.bond_between(i, j).unwrap();
        let (a, b) = edges[k as usize];
        let order = g.bond_between(a, b).unwrap().order;
        (bp.orders.is_empty() || bp.orders.contains(&order)) && bp.in_ring.is_none_or(|r| r == cyclic[k as usize])
    };
    oracle::induced_match_sets(g.atom_count(), &target_bond, p.atom_count(), &pattern_bond, &atom_ok, &bond_ok)
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let registry = Registry::builtin();
    let mols = random_molecules(100, 12, 202);
    let mut nonzero = 0;
    for g in &mols {
        let counts = registry.count_all(g);
        for (k, entry) in registry.entries().iter().enumerate() {
            let p = registry.get(entry.name()).unwrap();
            let expected = oracle_count(g, p);
            ensure(
                counts[k] == expected,
                format!("{} on {}: {} vs oracle {}", entry.name(), molprobe::molgraph::write_smiles(g), counts[k], expected),
            )?;
            nonzero += (expected > 0) as usize;
        }
    }
    ensure(nonzero > 100, format!("corpus too sparse: {nonzero} nonzero counts"))?;
    for check in registry.check_references() {
        ensure(check.passed(), format!("reference check failed: {check:?}"))?;
    }
    within(start.elapsed(), 60)?;
    Ok(format!("100 molecules x {} patterns, references ok, {:.1}s", registry.len(), start.elapsed().as_secs_f64()))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let x = Array2::from_shape_fn((8, 5), |_| rng.random_range(-1.0..1.0));
    let cases = [
        (TaskKind::Regression, Targets::Real((0..8).map(|i| i as f64 * 0.3 - 1.0).collect())),
        (TaskKind::BinaryClassification, Targets::Binary((0..8).map(|i| i % 3 == 0).collect())),
        (TaskKind::Multiclass(4), Targets::Class((0..8).map(|i| i % 4).collect())),
    ];
    let mut worst: f64 = 0.0;
    for depth in 0..=3 {
        for (kind, y) in &cases {
            let cfg = ProbeConfig {
                hidden_layers: depth,
                width: 100,
                task_kind: *kind,
                seed: depth as u64,
                ..Default::default()
            };
            let model = build_probe(&cfg, 5, kind.output_dim()).map_err(|e| e.to_string())?;
            let r = gradient_check(&model, x.view(), y, 1e-5, 30, 7);
            ensure(r.checked > 0, format!("depth {depth} {kind:?}: nothing checked"))?;
            ensure(
                r.max_relative_error < 1e-5,
                format!("depth {depth} {kind:?}: {:.2e} in {}", r.max_relative_error, r.worst_block),
            )?;
            worst = worst.max(r.max_relative_error);
        }
    }
    Ok(format!("depths 0-3, MSE/BCE/CE, max relative error {worst:.2e}"))
}

fn probe_settings() -> SuiteConfig {
    SuiteConfig::parse("synthetic=1\n").unwrap()
}

fn layer_embeddings(ctx: &DatasetContext, config: &EncoderConfig, layer: usize) -> SourceEmbeddings {
    let enc = init_random(config).unwrap();
    let graphs: Vec<&MolecularGraph> = ctx.dataset.molecules.iter().collect();
    let (node, graph) = enc.encode_layer(&graphs, &ctx.dataset.row_ids, layer);
    SourceEmbeddings::new("random", Some(node), Some(graph))
}

fn score(ctx: &DatasetContext, emb: &SourceEmbeddings, task: &str, settings: &SuiteConfig, seed: u64) -> Result<CellScores, String> {
    run_probe_task(ctx, emb, &ProbeTask::topology(task).unwrap(), settings, seed)
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let registry = Registry::builtin();
    let ctx = DatasetContext::new(synthetic_dataset(1000, 4, 0.1), &registry, [0.8, 0.1, 0.1], 0);
    let config = EncoderConfig {
        layers: 5,
        seed: 4,
        ..Default::default()
    };
    let emb = layer_embeddings(&ctx, &config, 5);
    let settings = probe_settings();
    let degree = score(&ctx, &emb, "degree", &settings, 0)?;
    let diam = score(&ctx, &emb, "diameter", &settings, 0)?;
    let (dn, gn) = (degree.normalized_loss.unwrap(), diam.normalized_loss.unwrap());
    ensure(degree.loss < 0.1, format!("degree cross-entropy {:.4}", degree.loss))?;
    ensure(dn < gn, format!("degree normalized {dn:.4} not below diameter {gn:.4}"))?;
    within(start.elapsed(), 600)?;
    Ok(format!(
        "degree CE {:.4} (normalized {dn:.4}) vs diameter normalized {gn:.4}, {:.0}s",
        degree.loss,
        start.elapsed().as_secs_f64()
    ))
}

/// Node rows of one split with a per-atom target.
fn node_rows(
    ctx: &DatasetContext,
    node: &EmbeddingMatrix,
    tag: SplitTag,
    target: &dyn Fn(usize, usize) -> f64,
) -> (Array2<f64>, Vec<f64>) {
    let keep = ctx.split.indices(tag);
    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (r, key) in node.index.iter().enumerate() {
        if let RowKey::Atom { molecule, atom } = *key {
            if keep.binary_search(&molecule).is_ok() {
                rows.push(r);
                y.push(target(molecule, atom));
            }
        }
    }
    (node.values.select(Axis(0), &rows), y)
}

fn criterion_5() -> Outcome {
    let registry = Registry::builtin();
    let ctx = DatasetContext::new(synthetic_dataset(1000, 5, 0.1), &registry, [0.8, 0.1, 0.1], 0);
    let settings = probe_settings();
    let mols = &ctx.dataset.molecules;
    // heteroatoms among an atom's direct neighbours
    let hetero = |m: usize, a: usize| {
        mols[m].neighbors(a).iter().filter(|&&(v, _)| mols[m].atom(v).element.symbol() != "C").count() as f64
    };
    let mut lines = Vec::new();
    for seed in 0..3u64 {
        let config = EncoderConfig {
            layers: 5,
            seed,
            readout: Readout::Sum,
            ..Default::default()
        };
        let first = layer_embeddings(&ctx, &config, 1);
        let last = layer_embeddings(&ctx, &config, 5);
        let local = |emb: &SourceEmbeddings| -> Result<f64, String> {
            let node = emb.node.as_ref().unwrap();
            let split = |tag| node_rows(&ctx, node, tag, &hetero);
            let s = probe_cell(
                split(SplitTag::Train),
                split(SplitTag::Valid),
                split(SplitTag::Test),
                TaskKind::Regression,
                &settings.probe,
                true,
                seed,
            )?;
            Ok(s.normalized_loss.unwrap())
        };
        let global = |emb: &SourceEmbeddings| score(&ctx, emb, "diameter", &settings, seed).map(|s| s.normalized_loss.unwrap());
        let (l1, l5) = (local(&first)?, local(&last)?);
        let (g1, g5) = (global(&first)?, global(&last)?);
        ensure(l1 < l5, format!("seed {seed}: 1-hop target first {l1:.4} vs last {l5:.4}"))?;
        ensure(g5 < g1, format!("seed {seed}: diameter last {g5:.4} vs first {g1:.4}"))?;
        lines.push(format!("seed {seed}: 1-hop {l1:.3}<{l5:.3}, diameter {g5:.3}<{g1:.3}"));
    }
    Ok(lines.join("; "))
}

fn criterion_6() -> Outcome {
    let same = Array2::from_shape_fn((4, 3), |(_, j)| [1.0, 2.0, -1.0][j]);
    let u = uniformity(same.view(), 2.0).value.unwrap();
    ensure(u == 0.0, format!("identical rows uniformity {u}"))?;
    let ortho = array![[1.0, 0.0], [0.0, 1.0]];
    let u = uniformity(ortho.view(), 2.0).value.unwrap();
    ensure(close(u, -4.0, 1e-9), format!("orthogonal rows uniformity {u}"))?;
    let rank1 = Array2::from_shape_fn((6, 4), |(i, j)| (i as f64 + 1.0) * [1.0, -2.0, 0.5, 3.0][j]);
    let s = spectrum(rank1.view(), DEFAULT_COLLAPSE_TAU, false);
    ensure(s.collapsed && s.above_threshold == 1, format!("rank-1 spectrum {s:?}"))?;
    let auc = roc_auc(&[0.3; 4], &[true, false, true, false]).unwrap();
    ensure(auc == Some(0.5), format!("tied AUC {auc:?}"))?;
    Ok("uniformity 0 and -4, rank-1 collapse, tied AUC 0.5".into())
}

fn criterion_7() -> Outcome {
    let v = cramers_v(&ContingencyTable::new(vec![vec![5, 0], vec![0, 5]]).unwrap()).unwrap();
    ensure(close(v, 1.0, 1e-12), format!("diagonal table V = {v}"))?;
    let v = cramers_v(&ContingencyTable::new(vec![vec![2, 2], vec![2, 2]]).unwrap()).unwrap();
    ensure(close(v, 0.0, 1e-12), format!("uniform table V = {v}"))?;
    let registry = Registry::builtin();
    let benzene = registry.index_of("benzene").unwrap();
    let mols = random_molecules(300, 40, 707);
    let counts: Vec<_> = mols.iter().map(|g| registry.count_all(g)).collect();
    let labels = counts.iter().map(|c| vec![Some(c[benzene] > 0)]).collect();
    let data = LabeledCounts {
        dataset: "synthetic".into(),
        counts,
        labels,
    };
    let ranked = rank_substructures(&registry.names(), &[data]);
    ensure(ranked[0].name == "benzene", format!("top substructure {}", ranked[0].name))?;
    Ok(format!("V = 1 and 0; benzene ranks first (V = {:.3})", ranked[0].avg_task.unwrap()))
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    for case in 0..500 {
        let n = rng.random_range(5..60);
        let mols = random_molecules(n, 40, rng.random());
        let seed = rng.random();
        let split = scaffold_split(&mols, [0.8, 0.1, 0.1], seed);
        for i in 0..n {
            for j in 0..n {
                if split.scaffolds[i] == split.scaffolds[j] {
                    ensure(split.tags[i] == split.tags[j], format!("case {case}: scaffold spans splits"))?;
                }
            }
        }
        let bound = split.largest_group as f64 / n as f64 + 1e-12;
        for (got, want) in split.fractions.iter().zip([0.8, 0.1, 0.1]) {
            ensure((got - want).abs() <= bound, format!("case {case}: fractions {:?} bound {bound}", split.fractions))?;
        }
        let again = scaffold_split(&mols, [0.8, 0.1, 0.1], seed);
        ensure(split.to_csv() == again.to_csv(), format!("case {case}: split not reproducible"))?;
    }
    Ok("500 datasets: no scaffold leakage, fractions within bound, reproducible".into())
}

fn read_csvs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in std::fs::read_dir(&d).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else if path.extension().is_some_and(|e| e == "csv") {
                let rel = path.strip_prefix(dir).unwrap().display().to_string();
                out.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn criterion_9() -> Outcome {
    let text = "synthetic=1000\nsynthetic.seed=9\n\
                tasks=degree,link,diameter,property:has_benzene,substructure:amide\n\
                seeds=3\nseed=11\n";
    let config = SuiteConfig::parse(text).map_err(|e| e.to_string())?;
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let mut slowest = Duration::ZERO;
    for dir in &dirs {
        let start = Instant::now();
        let report = run_suite(&config);
        emit_report(&report, dir.path()).map_err(|e| e.to_string())?;
        slowest = slowest.max(start.elapsed());
        ensure(report.failure_count() == 0, format!("suite recorded {} failures", report.failure_count()))?;
        ensure(report.cells.len() == 5 * 3 + 3, format!("{} cells", report.cells.len()))?;
    }
    let (a, b) = (read_csvs(dirs[0].path()), read_csvs(dirs[1].path()));
    ensure(!a.is_empty(), "no CSV written")?;
    ensure(a == b, "report CSVs differ between runs")?;
    within(slowest, 900)?;
    Ok(format!("{} CSV files identical across runs, slowest run {:.0}s", a.len(), slowest.as_secs_f64()))
}

#[test]
fn acceptance() {
    let criteria: [(&str, fn() -> Outcome); 9] = [
        ("topology statistics match oracles", criterion_1),
        ("substructure counts match oracles", criterion_2),
        ("probe gradients match finite differences", criterion_3),
        ("random-encoder probe sanity", criterion_4),
        ("layer localization", criterion_5),
        ("embedding-space identities", criterion_6),
        ("Cramer's V and substructure ranking", criterion_7),
        ("scaffold split integrity", criterion_8),
        ("end-to-end determinism", criterion_9),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match result {
            Ok(detail) => println!("criterion {}: PASS {name}: {detail}", i + 1),
            Err(why) => {
                println!("criterion {}: FAIL {name}: {why}", i + 1);
                failed.push(i + 1);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn reference_smiles_parse() {
    for s in SMALL_MOLECULES {
        assert!(parse_smiles(s).is_ok(), "{s}");
    }
}
