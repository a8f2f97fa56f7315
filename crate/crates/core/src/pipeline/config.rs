use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::encoder::{EncoderConfig, Readout};
use crate::probe::ProbeConfig;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConfigError {
    #[error("line {0}: expected key = value")]
    Syntax(usize),
    #[error("cannot read config {path}: {message}")]
    Read { path: String, message: String },
    #[error("unknown key '{0}'")]
    UnknownKey(String),
    #[error("key '{key}': invalid value '{value}'")]
    Invalid { key: String, value: String },
    #[error("key '{0}' given more than once")]
    Repeated(String),
    #[error("{0}")]
    Inconsistent(String),
}

/// Ordered `key = value` lines. `#` starts a comment line; repeated keys
/// are kept in order and rejected by readers that expect a single value.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct KeyValues {
    entries: Vec<(String, String)>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<KeyValues, ConfigError> {
        let mut entries = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or(ConfigError::Syntax(i + 1))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(ConfigError::Syntax(i + 1));
            }
            entries.push((k.to_string(), v.trim().to_string()));
        }
        Ok(KeyValues { entries })
    }

    pub fn load(path: &Path) -> Result<KeyValues, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        KeyValues::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) {
        self.entries.retain(|(k, _)| k != key);
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Appends an entry, keeping earlier ones with the same key.
    pub fn push(&mut self, key: &str, value: &str) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    pub fn all(&self, key: &str) -> Vec<&str> {
        self.entries.iter().filter(|(k, _)| k == key).map(|(_, v)| v.as_str()).collect()
    }

    pub fn get(&self, key: &str) -> Result<Option<&str>, ConfigError> {
        match self.all(key).as_slice() {
            [] => Ok(None),
            [v] => Ok(Some(v)),
            _ => Err(ConfigError::Repeated(key.to_string())),
        }
    }

    pub fn parsed<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.get(key)? {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| ConfigError::Invalid {
                key: key.to_string(),
                value: v.to_string(),
            }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(k, _)| k.as_str())
    }

    /// Canonical text: entries sorted by key, then value.
    pub fn canonical(&self) -> String {
        let mut sorted = self.entries.clone();
        sorted.sort();
        sorted.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }

    pub fn sha256(&self) -> String {
        let digest = Sha256::digest(self.canonical().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    /// Fails on the first key not accepted by `known`.
    pub fn check_keys(&self, known: impl Fn(&str) -> bool) -> Result<(), ConfigError> {
        match self.keys().find(|k| !known(k)) {
            Some(k) => Err(ConfigError::UnknownKey(k.to_string())),
            None => Ok(()),
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" => Ok(true),
        "false" | "0" | "no" => Ok(false),
        _ => Err(ConfigError::Invalid {
            key: key.to_string(),
            value: v.to_string(),
        }),
    }
}

pub(crate) fn get_bool(kv: &KeyValues, key: &str) -> Result<Option<bool>, ConfigError> {
    kv.get(key)?.map(|v| parse_bool(key, v)).transpose()
}

fn invalid(key: &str, value: &str) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        value: value.to_string(),
    }
}

/// Reads `prefix.layers`, `prefix.hidden_dim`, `prefix.seed`, `prefix.readout`
/// over `base`.
pub fn encoder_config(kv: &KeyValues, prefix: &str, base: EncoderConfig) -> Result<EncoderConfig, ConfigError> {
    let key = |f: &str| format!("{prefix}.{f}");
    let mut c = base;
    if let Some(v) = kv.parsed(&key("layers"))? {
        c.layers = v;
    }
    if let Some(v) = kv.parsed(&key("hidden_dim"))? {
        c.hidden_dim = v;
    }
    if let Some(v) = kv.parsed(&key("seed"))? {
        c.seed = v;
    }
    if let Some(v) = kv.get(&key("readout"))? {
        c.readout = match v {
            "mean" => Readout::Mean,
            "sum" => Readout::Sum,
            _ => return Err(invalid(&key("readout"), v)),
        };
    }
    c.validate()
        .map_err(|e| ConfigError::Inconsistent(format!("{prefix}: {e}")))?;
    Ok(c)
}

/// Reads the `probe.*` keys over the defaults.
pub fn probe_config(kv: &KeyValues) -> Result<ProbeConfig, ConfigError> {
    let mut c = ProbeConfig::default();
    if let Some(v) = kv.parsed("probe.hidden_layers")? {
        c.hidden_layers = v;
    }
    if let Some(v) = kv.parsed("probe.width")? {
        c.width = v;
    }
    if let Some(v) = kv.parsed("probe.epochs")? {
        c.epochs = v;
    }
    if let Some(v) = kv.parsed("probe.learning_rate")? {
        c.learning_rate = v;
    }
    if let Some(v) = kv.parsed("probe.batch_size")? {
        c.batch_size = v;
    }
    c.validate().map_err(|e| ConfigError::Inconsistent(format!("probe: {e}")))?;
    Ok(c)
}

/// Where a suite's embeddings come from.
#[derive(Debug, Clone, PartialEq)]
pub enum SourceSpec {
    Random(EncoderConfig),
    /// Pre-computed embedding files: one node-level and one graph-level file.
    Files { node: Option<PathBuf>, graph: Option<PathBuf> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Source {
    pub name: String,
    pub spec: SourceSpec,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetSpec {
    Csv(PathBuf),
    /// Generated molecules: count, seed.
    Synthetic { count: usize, seed: u64 },
}

/// Which encoder layer's embeddings are probed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerChoice {
    First,
    Last,
    Index(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub datasets: Vec<DatasetSpec>,
    pub sources: Vec<Source>,
    pub tasks: Vec<String>,
    pub layer: LayerChoice,
    pub pairs: usize,
    pub seeds: usize,
    pub seed: u64,
    pub probe: ProbeConfig,
    pub split: [f64; 3],
    pub standardize: bool,
    pub space: bool,
    pub space_pairs: usize,
    pub baseline: bool,
    pub reference_ranking: Vec<String>,
    pub max_molecules: Option<usize>,
    pub out: PathBuf,
    /// Canonical key/value text the suite was built from.
    pub canonical: String,
    pub hash: String,
}

pub const SUITE_KEYS: &[&str] = &[
    "dataset",
    "synthetic",
    "synthetic.seed",
    "tasks",
    "layer",
    "pairs",
    "seeds",
    "seed",
    "split",
    "standardize",
    "space",
    "space.pairs",
    "baseline",
    "reference_ranking",
    "max_molecules",
    "out",
    "jobs",
    "encoder.layers",
    "encoder.hidden_dim",
    "encoder.seed",
    "encoder.readout",
    "probe.hidden_layers",
    "probe.width",
    "probe.epochs",
    "probe.learning_rate",
    "probe.batch_size",
];

const SOURCE_FIELDS: &[&str] = &["kind", "layers", "hidden_dim", "seed", "readout", "node", "graph"];

fn is_suite_key(k: &str) -> bool {
    if SUITE_KEYS.contains(&k) {
        return true;
    }
    match k.strip_prefix("source.").and_then(|r| r.rsplit_once('.')) {
        Some((name, field)) => !name.is_empty() && SOURCE_FIELDS.contains(&field),
        None => false,
    }
}

/// Task names accepted by the suite, besides `substructure:<name>` and
/// `property:<name>`.
pub const TOPOLOGY_TASKS: &[&str] = &[
    "degree",
    "centrality",
    "clustering",
    "link",
    "jaccard",
    "katz",
    "diameter",
    "cycle",
    "connectivity",
    "assortativity",
];

fn valid_task(t: &str) -> bool {
    TOPOLOGY_TASKS.contains(&t)
        || t == "substructures"
        || t == "properties"
        || t.strip_prefix("substructure:").is_some_and(|n| !n.is_empty())
        || t.strip_prefix("property:").is_some_and(|n| !n.is_empty())
}

fn list(v: &str) -> Vec<String> {
    v.split(',').map(|s| s.trim()).filter(|s| !s.is_empty()).map(String::from).collect()
}

impl SuiteConfig {
    pub fn from_key_values(kv: &KeyValues) -> Result<SuiteConfig, ConfigError> {
        kv.check_keys(is_suite_key)?;
        let mut datasets: Vec<DatasetSpec> = kv.all("dataset").into_iter().map(|p| DatasetSpec::Csv(p.into())).collect();
        if let Some(count) = kv.parsed::<usize>("synthetic")? {
            datasets.push(DatasetSpec::Synthetic {
                count,
                seed: kv.parsed("synthetic.seed")?.unwrap_or(0),
            });
        }
        if datasets.is_empty() {
            return Err(ConfigError::Inconsistent("no dataset given".into()));
        }
        let tasks = list(kv.get("tasks")?.unwrap_or("degree"));
        if tasks.is_empty() {
            return Err(ConfigError::Inconsistent("no task selected".into()));
        }
        if let Some(t) = tasks.iter().find(|t| !valid_task(t)) {
            return Err(invalid("tasks", t));
        }
        let layer = match kv.get("layer")?.unwrap_or("last") {
            "last" => LayerChoice::Last,
            "first" => LayerChoice::First,
            v => LayerChoice::Index(v.parse().map_err(|_| invalid("layer", v))?),
        };
        let seeds: usize = kv.parsed("seeds")?.unwrap_or(3);
        if seeds == 0 {
            return Err(ConfigError::Inconsistent("seeds must be at least 1".into()));
        }
        let split = match kv.get("split")? {
            None => [0.8, 0.1, 0.1],
            Some(v) => {
                let parts: Vec<f64> = v
                    .split(',')
                    .map(|p| p.trim().parse::<f64>())
                    .collect::<Result<_, _>>()
                    .map_err(|_| invalid("split", v))?;
                if parts.len() != 3 || parts.iter().any(|&p| !(0.0..=1.0).contains(&p)) || (parts.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
                    return Err(invalid("split", v));
                }
                [parts[0], parts[1], parts[2]]
            }
        };
        let base_encoder = encoder_config(kv, "encoder", EncoderConfig::default())?;
        let mut names: Vec<String> = Vec::new();
        for k in kv.keys() {
            if let Some((name, _)) = k.strip_prefix("source.").and_then(|r| r.rsplit_once('.')) {
                if !names.iter().any(|n| n == name) {
                    names.push(name.to_string());
                }
            }
        }
        names.sort();
        let mut sources = Vec::new();
        for name in names {
            let prefix = format!("source.{name}");
            let kind = kv.get(&format!("{prefix}.kind"))?.unwrap_or("random");
            let spec = match kind {
                "random" => SourceSpec::Random(encoder_config(kv, &prefix, base_encoder.clone())?),
                "files" => SourceSpec::Files {
                    node: kv.get(&format!("{prefix}.node"))?.map(PathBuf::from),
                    graph: kv.get(&format!("{prefix}.graph"))?.map(PathBuf::from),
                },
                other => return Err(invalid(&format!("{prefix}.kind"), other)),
            };
            sources.push(Source { name, spec });
        }
        if sources.is_empty() {
            sources.push(Source {
                name: "random".into(),
                spec: SourceSpec::Random(base_encoder),
            });
        }
        let uses_files = sources.iter().any(|s| matches!(s.spec, SourceSpec::Files { .. }));
        if uses_files && datasets.len() > 1 {
            return Err(ConfigError::Inconsistent(
                "embedding-file sources need exactly one dataset".into(),
            ));
        }
        Ok(SuiteConfig {
            datasets,
            sources,
            tasks,
            layer,
            pairs: kv.parsed("pairs")?.unwrap_or(10_000),
            seeds,
            seed: kv.parsed("seed")?.unwrap_or(0),
            probe: probe_config(kv)?,
            split,
            standardize: get_bool(kv, "standardize")?.unwrap_or(true),
            space: get_bool(kv, "space")?.unwrap_or(true),
            space_pairs: kv.parsed("space.pairs")?.unwrap_or(10_000),
            baseline: get_bool(kv, "baseline")?.unwrap_or(true),
            reference_ranking: kv.get("reference_ranking")?.map(list).unwrap_or_default(),
            max_molecules: kv.parsed("max_molecules")?,
            out: kv.get("out")?.unwrap_or("molprobe-out").into(),
            canonical: kv.canonical(),
            hash: kv.sha256(),
        })
    }

    pub fn parse(text: &str) -> Result<SuiteConfig, ConfigError> {
        SuiteConfig::from_key_values(&KeyValues::parse(text)?)
    }
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn key_values() {
        let kv = KeyValues::parse("# c\na = 1\n\nb=two words\na=3\n").unwrap();
        assert_eq!(kv.all("a"), vec!["1", "3"]);
        assert_eq!(kv.get("b").unwrap(), Some("two words"));
        assert!(kv.get("a").is_err());
        assert_eq!(KeyValues::parse("novalue"), Err(ConfigError::Syntax(1)));
        let x = KeyValues::parse("b=1\na=2").unwrap();
        let y = KeyValues::parse("a=2\n\nb=1").unwrap();
        assert_eq!(x.sha256(), y.sha256());
    }

    #[test]
    fn suite_defaults_and_errors() {
        let c = SuiteConfig::parse("synthetic = 20\n").unwrap();
        assert_eq!(c.tasks, vec!["degree"]);
        assert_eq!(c.seeds, 3);
        assert_eq!(c.pairs, 10_000);
        assert_eq!(c.probe, ProbeConfig::default());
        assert_eq!(c.sources.len(), 1);
        assert!(matches!(SuiteConfig::parse("synthetic=5\nbogus=1"), Err(ConfigError::UnknownKey(_))));
        assert!(SuiteConfig::parse("tasks=degree").is_err());
        assert!(SuiteConfig::parse("synthetic=5\ntasks=nope").is_err());
        assert!(SuiteConfig::parse("synthetic=5\nseeds=0").is_err());
        assert!(SuiteConfig::parse("synthetic=5\nencoder.hidden_dim=0").is_err());
        assert!(SuiteConfig::parse("synthetic=5\nprobe.hidden_layers=4").is_err());
        assert!(SuiteConfig::parse("synthetic=5\nsplit=0.5,0.5,0.5").is_err());
    }

    #[test]
    fn named_sources() {
        let c = SuiteConfig::parse(
            "synthetic=5\nencoder.hidden_dim=32\nsource.b.seed=2\nsource.a.layers=2\nsource.ext.kind=files\nsource.ext.graph=g.emb",
        )
        .unwrap();
        let names: Vec<_> = c.sources.iter().map(|s| s.name.as_str()).collect();
        assert_eq!(names, vec!["a", "b", "ext"]);
        match &c.sources[0].spec {
            SourceSpec::Random(e) => assert_eq!((e.layers, e.hidden_dim), (2, 32)),
            _ => panic!(),
        }
    }
}
