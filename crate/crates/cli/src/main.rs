use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use molprobe::embedspace;
use molprobe::encoder::{init_random, load_embeddings, save_embeddings, write_embeddings_csv, EmbeddingMatrix, RowKey};
use molprobe::graphstats::{compute_batch, write_batch, PairRequest};
use molprobe::molgraph::{parse_smiles, write_smiles};
use molprobe::pipeline::{
    encoder_config, emit_report, load_dataset, run_suite, scaffold_split, Dataset, KeyValues, SuiteConfig,
};
use molprobe::substructure::{rank_substructures, write_association_csv, write_counts_csv, LabeledCounts, Registry};

#[derive(Parser)]
#[command(name = "molprobe", version, about = "Probe-task evaluation of molecular graph embeddings")]
struct Cli {
    /// Base random seed; overrides `seed` in the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; overrides `out` in the config file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Line-oriented key=value settings.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Parse SMILES and print canonical forms. Inputs are SMILES strings, or
    /// files (.smi/.csv) when they name an existing path.
    Parse {
        #[command(flatten)]
        common: Common,
        inputs: Vec<String>,
    },
    /// Topological statistics for every molecule of an input file.
    Stats {
        #[command(flatten)]
        common: Common,
        input: PathBuf,
    },
    /// Substructure counts for every molecule of an input file.
    Substructure {
        #[command(flatten)]
        common: Common,
        input: PathBuf,
    },
    /// Scaffold split of a dataset.
    Split {
        #[command(flatten)]
        common: Common,
        input: PathBuf,
    },
    /// Random-encoder embeddings of every molecule of an input file.
    Embed {
        #[command(flatten)]
        common: Common,
        input: PathBuf,
    },
    /// Probe pre-computed embeddings against targets derived from a dataset.
    Probe {
        #[command(flatten)]
        common: Common,
        dataset: PathBuf,
        embeddings: Vec<PathBuf>,
    },
    /// Uniformity, spectrum and alignment of a graph-level embedding file.
    Space {
        #[command(flatten)]
        common: Common,
        embeddings: PathBuf,
        /// Labelled dataset whose rows match the embedding molecule ids.
        dataset: Option<PathBuf>,
    },
    /// Rank substructures by Cramér's V against dataset labels.
    Cramers {
        #[command(flatten)]
        common: Common,
        datasets: Vec<PathBuf>,
    },
    /// Full probe suite described by the config file.
    Suite {
        #[command(flatten)]
        common: Common,
        datasets: Vec<PathBuf>,
    },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Config(String),
    Partial(String),
}

impl Failure {
    fn config(e: impl std::fmt::Display) -> Failure {
        Failure::Config(e.to_string())
    }
}

fn io_err(path: &Path) -> impl Fn(io::Error) -> Failure + '_ {
    move |e| Failure::Config(format!("{}: {e}", path.display()))
}

type Run = Result<(), Failure>;

struct Context {
    kv: KeyValues,
    out: PathBuf,
    seed: u64,
}

fn context(cli: &Cli, common: &Common, known: &[&str]) -> Result<Context, Failure> {
    let mut kv = match &common.config {
        Some(p) => KeyValues::load(p).map_err(Failure::config)?,
        None => KeyValues::default(),
    };
    if let Some(seed) = cli.seed {
        kv.set("seed", &seed.to_string());
    }
    if let Some(out) = &cli.out {
        kv.set("out", &out.display().to_string());
    }
    kv.check_keys(|k| k == "seed" || k == "out" || known.contains(&k) || known.iter().any(|p| p.ends_with('.') && k.starts_with(p)))
        .map_err(Failure::config)?;
    let seed = kv.parsed("seed").map_err(Failure::config)?.unwrap_or(0);
    let out = kv.get("out").map_err(Failure::config)?.unwrap_or("molprobe-out").into();
    Ok(Context { kv, out, seed })
}

/// A `.csv` dataset, or one SMILES per line (first whitespace-separated
/// token) for anything else.
fn read_molecules(path: &Path) -> Result<Dataset, Failure> {
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
        return load_dataset(path).map_err(Failure::config);
    }
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let rows = text
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| (l.split_whitespace().next().unwrap_or("").to_string(), Vec::new()))
        .collect();
    let name = path.file_stem().map_or("input".into(), |s| s.to_string_lossy().into_owned());
    Ok(Dataset::from_rows(&name, Vec::new(), rows))
}

fn create(path: &Path) -> Result<BufWriter<fs::File>, Failure> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(parent))?;
    }
    Ok(BufWriter::new(fs::File::create(path).map_err(io_err(path))?))
}

fn skipped(ds: &Dataset) -> Run {
    if ds.skipped > 0 {
        Err(Failure::Partial(format!("{}: {} rows skipped", ds.name, ds.skipped)))
    } else {
        Ok(())
    }
}

fn cmd_parse(inputs: &[String]) -> Run {
    let mut failed = 0;
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let mut emit = |s: &str| -> io::Result<()> {
        match parse_smiles(s) {
            Ok(g) => writeln!(out, "{}\t{}\t{}\t{}", write_smiles(&g), g.atom_count(), g.bond_count(), g.rings().len()),
            Err(e) => {
                failed += 1;
                eprintln!("{s}: {e}");
                Ok(())
            }
        }
    };
    let to_failure = |e: io::Error| Failure::Config(e.to_string());
    let mut skipped_rows = 0;
    for input in inputs {
        let path = Path::new(input);
        if path.is_file() {
            let ds = read_molecules(path)?;
            for s in &ds.smiles {
                emit(s).map_err(to_failure)?;
            }
            skipped_rows += ds.skipped;
        } else {
            emit(input).map_err(to_failure)?;
        }
    }
    drop(emit);
    let failed = failed + skipped_rows;
    if failed > 0 {
        return Err(Failure::Partial(format!("{failed} inputs failed to parse")));
    }
    Ok(())
}

fn cmd_stats(ctx: &Context, input: &Path) -> Run {
    let ds = read_molecules(input)?;
    let graphs: Vec<_> = ds.molecules.iter().map(|g| g.topology()).collect();
    let pairs = match ctx.kv.get("pairs").map_err(Failure::config)?.unwrap_or("all") {
        "all" => PairRequest::All,
        "none" => PairRequest::List(Vec::new()),
        v => return Err(Failure::Config(format!("key 'pairs': expected all or none, got '{v}'"))),
    };
    let batch = compute_batch(&graphs, &pairs);
    write_batch(&batch, &ctx.out).map_err(io_err(&ctx.out))?;
    skipped(&ds)
}

fn registry(ctx: &Context) -> Result<Registry, Failure> {
    match ctx.kv.get("registry").map_err(Failure::config)? {
        Some(p) => Registry::load(Path::new(p)).map_err(Failure::config),
        None => Ok(Registry::builtin()),
    }
}

fn cmd_substructure(ctx: &Context, input: &Path) -> Run {
    let registry = registry(ctx)?;
    let ds = read_molecules(input)?;
    let counts: Vec<_> = ds.row_ids.iter().zip(&ds.molecules).map(|(&id, g)| (id, registry.count_all(g))).collect();
    let path = ctx.out.join("substructures.csv");
    let mut f = create(&path)?;
    write_counts_csv(&registry, &counts, &mut f).and_then(|_| f.flush()).map_err(io_err(&path))?;
    let failures: Vec<_> = registry.check_references().into_iter().filter(|c| !c.passed()).collect();
    for c in &failures {
        eprintln!("reference check failed: {c:?}");
    }
    skipped(&ds)?;
    if !failures.is_empty() {
        return Err(Failure::Partial(format!("{} registry entries fail their references", failures.len())));
    }
    Ok(())
}

fn split_fractions(kv: &KeyValues) -> Result<[f64; 3], Failure> {
    // reuse the suite's validation of the `split` key
    let mut probe = KeyValues::default();
    probe.set("synthetic", "1");
    if let Some(v) = kv.get("split").map_err(Failure::config)? {
        probe.set("split", v);
    }
    Ok(SuiteConfig::from_key_values(&probe).map_err(Failure::config)?.split)
}

fn cmd_split(ctx: &Context, input: &Path) -> Run {
    let ds = read_molecules(input)?;
    let fractions = split_fractions(&ctx.kv)?;
    let split = scaffold_split(&ds.molecules, fractions, ctx.seed);
    let path = ctx.out.join("split.csv");
    let mut f = create(&path)?;
    let mut text = String::from("row,smiles,scaffold,split\n");
    for (i, tag) in split.tags.iter().enumerate() {
        text.push_str(&format!("{},{},{:016x},{}\n", ds.row_ids[i], ds.smiles[i], split.scaffolds[i], tag.name()));
    }
    f.write_all(text.as_bytes()).and_then(|_| f.flush()).map_err(io_err(&path))?;
    println!("train/valid/test fractions: {:.4} {:.4} {:.4}", split.fractions[0], split.fractions[1], split.fractions[2]);
    skipped(&ds)
}

fn cmd_embed(ctx: &Context, input: &Path) -> Run {
    let ds = read_molecules(input)?;
    let base = molprobe::encoder::EncoderConfig {
        seed: ctx.seed,
        ..Default::default()
    };
    let config = encoder_config(&ctx.kv, "encoder", base).map_err(Failure::config)?;
    let encoder = init_random(&config).map_err(Failure::config)?;
    let graphs: Vec<_> = ds.molecules.iter().collect();
    let layers: Vec<usize> = match ctx.kv.get("layer").map_err(Failure::config)?.unwrap_or("all") {
        "all" => (0..=config.layers).collect(),
        "first" => vec![1],
        "last" => vec![config.layers],
        v => match v.parse::<usize>() {
            Ok(t) if t <= config.layers => vec![t],
            _ => return Err(Failure::Config(format!("key 'layer': invalid value '{v}'"))),
        },
    };
    let csv = ctx.kv.get("csv").map_err(Failure::config)? == Some("true");
    fs::create_dir_all(&ctx.out).map_err(io_err(&ctx.out))?;
    for t in layers {
        let (node, graph) = encoder.encode_layer(&graphs, &ds.row_ids, t);
        for (m, level) in [(&node, "node"), (&graph, "graph")] {
            let path = ctx.out.join(format!("layer{t}.{level}.bin"));
            save_embeddings(m, &path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            if csv {
                let path = ctx.out.join(format!("layer{t}.{level}.csv"));
                let mut f = create(&path)?;
                write_embeddings_csv(m, &mut f).and_then(|_| f.flush()).map_err(io_err(&path))?;
            }
        }
    }
    println!("encoder checksum {:016x}", encoder.checksum());
    skipped(&ds)
}

fn suite_from(mut kv: KeyValues, datasets: &[PathBuf]) -> Result<SuiteConfig, Failure> {
    for d in datasets {
        kv.push("dataset", &d.display().to_string());
    }
    SuiteConfig::from_key_values(&kv).map_err(Failure::config)
}

fn finish_report(config: &SuiteConfig) -> Run {
    let report = run_suite(config);
    let files = emit_report(&report, &config.out).map_err(Failure::config)?;
    println!("wrote {} files to {}", files.len(), config.out.display());
    if let Some(r) = report.rank_correlation {
        println!("rank correlation with reference: {r:.4}");
    }
    match report.failure_count() {
        0 => Ok(()),
        n => Err(Failure::Partial(format!("{n} failures recorded in the report"))),
    }
}

fn cmd_probe(ctx: &Context, dataset: &Path, embeddings: &[PathBuf]) -> Run {
    let mut kv = ctx.kv.clone();
    for p in embeddings {
        let m = load_embeddings(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
        let level = match m.index.first() {
            Some(RowKey::Atom { .. }) => "node",
            _ => "graph",
        };
        kv.set(&format!("source.embeddings.{level}"), &p.display().to_string());
    }
    kv.set("source.embeddings.kind", "files");
    if kv.get("space").map_err(Failure::config)?.is_none() {
        kv.set("space", "false");
    }
    let config = suite_from(kv, &[dataset.to_path_buf()])?;
    finish_report(&config)
}

fn graph_rows(m: &EmbeddingMatrix) -> Vec<usize> {
    m.index.iter().filter_map(|k| if let RowKey::Molecule(i) = k { Some(*i) } else { None }).collect()
}

fn cmd_space(ctx: &Context, embeddings: &Path, dataset: Option<&Path>) -> Run {
    let m = load_embeddings(embeddings).map_err(|e| Failure::Config(format!("{}: {e}", embeddings.display())))?;
    let t: f64 = ctx.kv.parsed("t").map_err(Failure::config)?.unwrap_or(embedspace::DEFAULT_UNIFORMITY_T);
    let tau: f64 = ctx.kv.parsed("tau").map_err(Failure::config)?.unwrap_or(embedspace::DEFAULT_COLLAPSE_TAU);
    let center = ctx.kv.get("center").map_err(Failure::config)? == Some("true");
    let pairs: usize = ctx.kv.parsed("pairs").map_err(Failure::config)?.unwrap_or(10_000);
    fs::create_dir_all(&ctx.out).map_err(io_err(&ctx.out))?;

    let u = embedspace::uniformity(m.values.view(), t);
    let name = embeddings.file_stem().map_or("embeddings".into(), |s| s.to_string_lossy().into_owned());
    let path = ctx.out.join("uniformity.csv");
    let mut f = create(&path)?;
    embedspace::write_uniformity_table(&[("input".into(), name, u.value)], &mut f)
        .and_then(|_| f.flush())
        .map_err(io_err(&path))?;

    let s = embedspace::spectrum(m.values.view(), tau, center);
    let path = ctx.out.join("spectrum.csv");
    let mut f = create(&path)?;
    embedspace::write_spectrum_csv(&s, &mut f).and_then(|_| f.flush()).map_err(io_err(&path))?;
    println!(
        "uniformity {}; {} of {} singular values above threshold{}",
        u.value.map_or("NA".into(), |v| format!("{v:.4}")),
        s.above_threshold,
        s.singular_values.len(),
        if s.collapsed { " (collapsed)" } else { "" }
    );

    if let Some(dataset) = dataset {
        let ds = load_dataset(dataset).map_err(Failure::config)?;
        let by_id: std::collections::HashMap<usize, usize> = ds.row_ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
        let labels: Vec<Vec<Option<bool>>> = graph_rows(&m)
            .iter()
            .map(|id| by_id.get(id).map_or_else(|| vec![None; ds.task_count()], |&i| ds.labels[i].clone()))
            .collect();
        if labels.len() != m.values.nrows() {
            return Err(Failure::Config("alignment needs a graph-level embedding file".into()));
        }
        let pairs = embedspace::build_pairs(&labels, pairs, ctx.seed);
        let report = embedspace::alignment(m.values.view(), &pairs, embedspace::DEFAULT_ALIGNMENT_BINS);
        let path = ctx.out.join("alignment.json");
        fs::write(&path, embedspace::alignment_json(&report) + "\n").map_err(io_err(&path))?;
    }
    Ok(())
}

fn cmd_cramers(ctx: &Context, datasets: &[PathBuf]) -> Run {
    if datasets.is_empty() {
        return Err(Failure::Config("cramers needs at least one dataset".into()));
    }
    let registry = registry(ctx)?;
    let mut data = Vec::new();
    let mut skipped_rows = 0;
    for p in datasets {
        let ds = load_dataset(p).map_err(Failure::config)?;
        skipped_rows += ds.skipped;
        data.push(LabeledCounts {
            dataset: ds.name.clone(),
            counts: ds.molecules.iter().map(|g| registry.count_all(g)).collect(),
            labels: ds.labels,
        });
    }
    let ranked = rank_substructures(&registry.names(), &data);
    let names: Vec<&str> = data.iter().map(|d| d.dataset.as_str()).collect();
    let path = ctx.out.join("cramers.csv");
    let mut f = create(&path)?;
    write_association_csv(&names, &ranked, &mut f).and_then(|_| f.flush()).map_err(io_err(&path))?;
    if skipped_rows > 0 {
        return Err(Failure::Partial(format!("{skipped_rows} rows skipped")));
    }
    Ok(())
}

const ENCODER_KEYS: &[&str] = &["encoder.layers", "encoder.hidden_dim", "encoder.seed", "encoder.readout"];

fn run(cli: &Cli) -> Run {
    match &cli.command {
        Command::Parse { common, inputs } => {
            context(cli, common, &[])?;
            cmd_parse(inputs)
        }
        Command::Stats { common, input } => cmd_stats(&context(cli, common, &["pairs"])?, input),
        Command::Substructure { common, input } => cmd_substructure(&context(cli, common, &["registry"])?, input),
        Command::Split { common, input } => cmd_split(&context(cli, common, &["split"])?, input),
        Command::Embed { common, input } => {
            let mut known = vec!["layer", "csv"];
            known.extend(ENCODER_KEYS);
            cmd_embed(&context(cli, common, &known)?, input)
        }
        Command::Probe { common, dataset, embeddings } => {
            if embeddings.is_empty() {
                return Err(Failure::Config("probe needs at least one embedding file".into()));
            }
            let known = ["tasks", "pairs", "seeds", "split", "standardize", "space", "baseline", "probe.", "space.pairs", "max_molecules"];
            cmd_probe(&context(cli, common, &known)?, dataset, embeddings)
        }
        Command::Space { common, embeddings, dataset } => {
            cmd_space(&context(cli, common, &["t", "tau", "center", "pairs"])?, embeddings, dataset.as_deref())
        }
        Command::Cramers { common, datasets } => cmd_cramers(&context(cli, common, &["registry"])?, datasets),
        Command::Suite { common, datasets } => {
            let ctx = context(cli, common, &["dataset", "synthetic", "synthetic.", "tasks", "layer", "pairs", "seeds", "split", "standardize", "space", "space.", "baseline", "reference_ranking", "max_molecules", "jobs", "encoder.", "probe.", "source."])?;
            if cli.jobs.is_none() {
                if let Some(jobs) = ctx.kv.parsed::<usize>("jobs").map_err(Failure::config)? {
                    set_jobs(jobs)?;
                }
            }
            let config = suite_from(ctx.kv, datasets)?;
            finish_report(&config)
        }
    }
}

fn set_jobs(jobs: usize) -> Run {
    if jobs == 0 {
        return Err(Failure::Config("jobs must be at least 1".into()));
    }
    if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global() {
        log::warn!("could not size the worker pool: {e}");
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.jobs {
        Some(jobs) => set_jobs(jobs).and_then(|_| run(&cli)),
        None => run(&cli),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Partial(msg)) => {
            eprintln!("warning: {msg}");
            ExitCode::from(2)
        }
    }
}
