use std::io::{self, Write};

use thiserror::Error;

use super::registry::SubstructureCounts;

/// Counts at or above this value share one category.
pub const COUNT_CAP: usize = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("table rows have unequal lengths")]
    Ragged,
}

/// Rows are count categories, columns are outcomes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    cells: Vec<Vec<u64>>,
}

impl ContingencyTable {
    pub fn new(cells: Vec<Vec<u64>>) -> Result<Self, TableError> {
        if let Some(first) = cells.first() {
            if cells.iter().any(|r| r.len() != first.len()) {
                return Err(TableError::Ragged);
            }
        }
        Ok(ContingencyTable { cells })
    }

    /// Builds a `(COUNT_CAP + 1) x 2` table from raw counts and binary outcomes.
    pub fn from_counts(counts: &[usize], outcomes: &[bool]) -> Self {
        let mut cells = vec![vec![0u64; 2]; COUNT_CAP + 1];
        for (&c, &y) in counts.iter().zip(outcomes) {
            cells[c.min(COUNT_CAP)][y as usize] += 1;
        }
        ContingencyTable { cells }
    }

    pub fn cells(&self) -> &[Vec<u64>] {
        &self.cells
    }

    pub fn row_totals(&self) -> Vec<u64> {
        self.cells.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_totals(&self) -> Vec<u64> {
        let cols = self.cells.first().map_or(0, |r| r.len());
        (0..cols).map(|j| self.cells.iter().map(|r| r[j]).sum()).collect()
    }

    pub fn total(&self) -> u64 {
        self.row_totals().iter().sum()
    }

    /// The table with all-zero rows and columns removed.
    pub fn compact(&self) -> ContingencyTable {
        let cols = self.col_totals();
        let keep: Vec<usize> = (0..cols.len()).filter(|&j| cols[j] > 0).collect();
        let cells = self
            .cells
            .iter()
            .filter(|r| r.iter().any(|&c| c > 0))
            .map(|r| keep.iter().map(|&j| r[j]).collect())
            .collect();
        ContingencyTable { cells }
    }

    pub fn chi_squared(&self) -> f64 {
        let rows = self.row_totals();
        let cols = self.col_totals();
        let n = self.total() as f64;
        let mut chi = 0.0;
        for (i, r) in self.cells.iter().enumerate() {
            for (j, &obs) in r.iter().enumerate() {
                let expected = rows[i] as f64 * cols[j] as f64 / n;
                if expected > 0.0 {
                    let d = obs as f64 - expected;
                    chi += d * d / expected;
                }
            }
        }
        chi
    }
}

/// `sqrt(chi2 / (n * min(k-1, r-1)))` after dropping empty rows and columns;
/// `None` when fewer than two rows or two columns remain.
pub fn cramers_v(t: &ContingencyTable) -> Option<f64> {
    let t = t.compact();
    let k = t.cells.len();
    let r = t.cells.first().map_or(0, |row| row.len());
    if k < 2 || r < 2 {
        return None;
    }
    let n = t.total() as f64;
    let v = (t.chi_squared() / (n * (k.min(r) - 1) as f64)).sqrt();
    Some(v.clamp(0.0, 1.0))
}

/// The two-outcome shortcut `sqrt(chi2 / n)`, valid when the smaller side of
/// the compacted table has exactly two levels.
pub fn cramers_v_binary(t: &ContingencyTable) -> Option<f64> {
    let t = t.compact();
    let k = t.cells.len();
    let r = t.cells.first().map_or(0, |row| row.len());
    if k.min(r) != 2 {
        return None;
    }
    Some((t.chi_squared() / t.total() as f64).sqrt().clamp(0.0, 1.0))
}

/// One dataset's counts and label matrix (molecule x task, `None` = missing).
#[derive(Debug, Clone)]
pub struct LabeledCounts {
    pub dataset: String,
    pub counts: Vec<SubstructureCounts>,
    pub labels: Vec<Vec<Option<bool>>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubstructureAssociation {
    pub name: String,
    /// Mean V over the dataset's tasks, per dataset.
    pub per_dataset: Vec<Option<f64>>,
    /// Mean over every (dataset, task) with a defined V.
    pub avg_task: Option<f64>,
    /// Mean of the per-dataset means.
    pub avg_data: Option<f64>,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// V for substructure `s` against every task of a dataset; missing labels are
/// dropped per task and tasks without any label give `None`.
pub fn task_associations(data: &LabeledCounts, s: usize) -> Vec<Option<f64>> {
    let tasks = data.labels.first().map_or(0, |r| r.len());
    (0..tasks)
        .map(|t| {
            let mut counts = Vec::new();
            let mut outcomes = Vec::new();
            for (row, labels) in data.counts.iter().zip(&data.labels) {
                if let Some(y) = labels[t] {
                    counts.push(row[s]);
                    outcomes.push(y);
                }
            }
            if counts.is_empty() {
                return None;
            }
            cramers_v(&ContingencyTable::from_counts(&counts, &outcomes))
        })
        .collect()
}

/// Associations for every substructure, sorted by `avg_task` descending
/// (undefined last, registry order among ties).
pub fn rank_substructures(names: &[&str], datasets: &[LabeledCounts]) -> Vec<SubstructureAssociation> {
    let mut out: Vec<SubstructureAssociation> = names
        .iter()
        .enumerate()
        .map(|(s, name)| {
            let mut all = Vec::new();
            let mut per_dataset = Vec::new();
            for d in datasets {
                let vs: Vec<f64> = task_associations(d, s).into_iter().flatten().collect();
                all.extend(&vs);
                per_dataset.push(mean(&vs));
            }
            let defined: Vec<f64> = per_dataset.iter().flatten().copied().collect();
            SubstructureAssociation {
                name: name.to_string(),
                per_dataset,
                avg_task: mean(&all),
                avg_data: mean(&defined),
            }
        })
        .collect();
    out.sort_by(|a, b| match (a.avg_task, b.avg_task) {
        (Some(x), Some(y)) => y.total_cmp(&x),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => std::cmp::Ordering::Equal,
    });
    out
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| format!("{x:.4}"))
}

/// One row per substructure, one column per dataset, then both averages.
pub fn write_association_csv<W: Write>(
    datasets: &[&str],
    ranked: &[SubstructureAssociation],
    mut out: W,
) -> io::Result<()> {
    writeln!(out, "substructure,{},avg_task,avg_data", datasets.join(","))?;
    for a in ranked {
        let cols: Vec<String> = a.per_dataset.iter().map(|&v| cell(v)).collect();
        writeln!(out, "{},{},{},{}", a.name, cols.join(","), cell(a.avg_task), cell(a.avg_data))?;
    }
    Ok(())
}
