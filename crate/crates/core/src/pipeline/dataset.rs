use std::path::Path;

use thiserror::Error;

use crate::molgraph::{parse_smiles, MolecularGraph};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: String, source: csv::Error },
    #[error("{0}: file is empty")]
    Empty(String),
    #[error("{0}: no SMILES column in header")]
    MissingSmilesColumn(String),
    #[error("{0}: no binary label column")]
    NoLabelColumns(String),
}

/// Parsed molecules with a molecule-by-task label matrix (`None` = missing).
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub smiles: Vec<String>,
    pub molecules: Vec<MolecularGraph>,
    /// Zero-based data-row number each molecule came from; used as the
    /// molecule id in embedding files and reports.
    pub row_ids: Vec<usize>,
    pub task_names: Vec<String>,
    pub labels: Vec<Vec<Option<bool>>>,
    /// Rows whose SMILES failed to parse.
    pub skipped: usize,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.molecules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.molecules.is_empty()
    }

    pub fn task_count(&self) -> usize {
        self.task_names.len()
    }

    pub fn task_index(&self, name: &str) -> Option<usize> {
        self.task_names.iter().position(|t| t == name)
    }

    /// Builds a dataset from in-memory rows, skipping unparseable SMILES.
    pub fn from_rows(name: &str, task_names: Vec<String>, rows: Vec<(String, Vec<Option<bool>>)>) -> Dataset {
        let mut ds = Dataset {
            name: name.to_string(),
            smiles: Vec::new(),
            molecules: Vec::new(),
            row_ids: Vec::new(),
            task_names,
            labels: Vec::new(),
            skipped: 0,
        };
        for (row, (smiles, labels)) in rows.into_iter().enumerate() {
            match parse_smiles(&smiles) {
                Ok(g) if !g.is_empty() => {
                    ds.smiles.push(smiles);
                    ds.molecules.push(g);
                    ds.row_ids.push(row);
                    ds.labels.push(labels);
                }
                Ok(_) => {
                    log::warn!("{name}: row {row}: empty SMILES");
                    ds.skipped += 1;
                }
                Err(e) => {
                    log::warn!("{name}: row {row}: {e}");
                    ds.skipped += 1;
                }
            }
        }
        ds
    }

    /// MoleculeNet-style CSV text: `smiles,label,...` header row.
    pub fn to_csv(&self) -> String {
        let mut out = format!("smiles,{}\n", self.task_names.join(","));
        for (s, labels) in self.smiles.iter().zip(&self.labels) {
            let cells: Vec<&str> = labels
                .iter()
                .map(|l| match l {
                    Some(true) => "1",
                    Some(false) => "0",
                    None => "",
                })
                .collect();
            out.push_str(&format!("{s},{}\n", cells.join(",")));
        }
        out
    }
}

fn parse_label(cell: &str) -> Result<Option<bool>, ()> {
    match cell.trim() {
        "" => Ok(None),
        "1" | "1.0" => Ok(Some(true)),
        "0" | "0.0" => Ok(Some(false)),
        _ => Err(()),
    }
}

/// Reads a CSV with a header row. The SMILES column is found by name
/// (case-insensitive); every other column whose non-blank cells are all 0/1
/// becomes a task.
pub fn load_dataset(path: &Path) -> Result<Dataset, DatasetError> {
    let display = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: display.clone(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| display.clone());
    parse_dataset(&name, &text).map_err(|e| match e {
        DatasetError::Empty(_) => DatasetError::Empty(display.clone()),
        DatasetError::MissingSmilesColumn(_) => DatasetError::MissingSmilesColumn(display.clone()),
        DatasetError::NoLabelColumns(_) => DatasetError::NoLabelColumns(display.clone()),
        DatasetError::Csv { source, .. } => DatasetError::Csv {
            path: display.clone(),
            source,
        },
        other => other,
    })
}

pub fn parse_dataset(name: &str, text: &str) -> Result<Dataset, DatasetError> {
    if text.trim().is_empty() {
        return Err(DatasetError::Empty(name.to_string()));
    }
    let csv_err = |source| DatasetError::Csv {
        path: name.to_string(),
        source,
    };
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(text.as_bytes());
    let header: Vec<String> = reader.headers().map_err(csv_err)?.iter().map(|h| h.trim().to_string()).collect();
    let smiles_col = header
        .iter()
        .position(|h| h.eq_ignore_ascii_case("smiles"))
        .ok_or_else(|| DatasetError::MissingSmilesColumn(name.to_string()))?;
    let records: Vec<csv::StringRecord> = reader.records().collect::<Result<_, _>>().map_err(csv_err)?;
    let cell = |r: &csv::StringRecord, j: usize| r.get(j).unwrap_or("").to_string();
    let label_cols: Vec<usize> = (0..header.len())
        .filter(|&j| j != smiles_col)
        .filter(|&j| records.iter().all(|r| parse_label(&cell(r, j)).is_ok()))
        .collect();
    if label_cols.is_empty() {
        return Err(DatasetError::NoLabelColumns(name.to_string()));
    }
    let rows = records
        .iter()
        .map(|r| {
            let labels = label_cols.iter().map(|&j| parse_label(&cell(r, j)).unwrap()).collect();
            (cell(r, smiles_col), labels)
        })
        .collect();
    let task_names = label_cols.iter().map(|&j| header[j].clone()).collect();
    Ok(Dataset::from_rows(name, task_names, rows))
}
