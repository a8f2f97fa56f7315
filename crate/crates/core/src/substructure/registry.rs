use std::fs;
use std::path::Path;

use thiserror::Error;

use super::matcher::MatchContext;
use super::pattern::{MatchMode, Pattern, PatternError};
use crate::molgraph::{parse_smiles, MolecularGraph};

const BUILTIN: &str = include_str!("../../data/substructures.tsv");

#[derive(Debug, Error)]
pub enum RegistryError {
    #[error("line {line}: expected 7 tab-separated fields, found {found}")]
    FieldCount { line: usize, found: usize },
    #[error("line {line}: {source}")]
    Pattern { line: usize, source: PatternError },
    #[error("duplicate substructure name '{0}'")]
    DuplicateName(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RegistryEntry {
    pub pattern: Pattern,
    /// ring, functional or redox
    pub group: String,
    pub positive: String,
    pub negative: String,
    pub interpretation: String,
}

impl RegistryEntry {
    pub fn name(&self) -> &str {
        &self.pattern.name
    }
}

/// Ordered, immutable list of named patterns.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Registry {
    entries: Vec<RegistryEntry>,
}

/// Per-molecule counts in registry order.
pub type SubstructureCounts = Vec<usize>;

/// Outcome of checking one entry against its reference molecules.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReferenceCheck {
    pub name: String,
    pub positive_count: usize,
    pub negative_count: usize,
}

impl ReferenceCheck {
    pub fn passed(&self) -> bool {
        self.positive_count > 0 && self.negative_count == 0
    }
}

impl Registry {
    /// The 24 substructures shipped with the crate.
    pub fn builtin() -> Registry {
        Registry::parse(BUILTIN).expect("builtin registry is valid")
    }

    pub fn load(path: &Path) -> Result<Registry, RegistryError> {
        Registry::parse(&fs::read_to_string(path)?)
    }

    pub fn parse(text: &str) -> Result<Registry, RegistryError> {
        let mut entries: Vec<RegistryEntry> = Vec::new();
        let mut header_seen = false;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 7 {
                return Err(RegistryError::FieldCount {
                    line: line_no,
                    found: fields.len(),
                });
            }
            if !header_seen && fields[0] == "name" {
                header_seen = true;
                continue;
            }
            let err = |source| RegistryError::Pattern { line: line_no, source };
            let mode: MatchMode = fields[2].parse().map_err(err)?;
            let pattern = Pattern::parse(fields[0], mode, fields[3]).map_err(err)?;
            if entries.iter().any(|e| e.name() == fields[0]) {
                return Err(RegistryError::DuplicateName(fields[0].to_string()));
            }
            entries.push(RegistryEntry {
                pattern,
                group: fields[1].to_string(),
                positive: fields[4].to_string(),
                negative: fields[5].to_string(),
                interpretation: fields[6].to_string(),
            });
        }
        Ok(Registry { entries })
    }

    pub fn entries(&self) -> &[RegistryEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.entries.iter().map(|e| e.name()).collect()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.entries.iter().position(|e| e.name() == name)
    }

    pub fn get(&self, name: &str) -> Option<&Pattern> {
        self.index_of(name).map(|i| &self.entries[i].pattern)
    }

    pub fn count_all(&self, g: &MolecularGraph) -> SubstructureCounts {
        let ctx = MatchContext::new(g);
        self.entries.iter().map(|e| ctx.count(&e.pattern)).collect()
    }

    /// Counts each entry in its own reference-positive and reference-negative
    /// molecule.
    pub fn check_references(&self) -> Vec<ReferenceCheck> {
        self.entries
            .iter()
            .map(|e| {
                let count = |smiles: &str| match parse_smiles(smiles) {
                    Ok(g) => MatchContext::new(&g).count(&e.pattern),
                    Err(_) => 0,
                };
                ReferenceCheck {
                    name: e.name().to_string(),
                    positive_count: count(&e.positive),
                    negative_count: count(&e.negative),
                }
            })
            .collect()
    }
}

/// Writes `molecule_index,<name>,...` rows.
pub fn write_counts_csv<W: std::io::Write>(
    registry: &Registry,
    counts: &[(usize, SubstructureCounts)],
    mut out: W,
) -> std::io::Result<()> {
    writeln!(out, "molecule_index,{}", registry.names().join(","))?;
    for (idx, row) in counts {
        let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
        writeln!(out, "{idx},{}", cells.join(","))?;
    }
    Ok(())
}
