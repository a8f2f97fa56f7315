use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use thiserror::Error;

use super::suite::{ProbeReport, BASELINE_SOURCE};
use crate::embedspace::{alignment_json, write_spectrum_csv, write_uniformity_table};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
}

fn at(path: &Path) -> impl FnOnce(io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path) -> impl Fn(csv::Error) -> ReportError + '_ {
    move |e| ReportError::Io {
        path: path.to_path_buf(),
        source: io::Error::other(e),
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    schema: &'a str,
    toolkit_version: &'a str,
    config_hash: &'a str,
    seeds: &'a [u64],
    files: Vec<String>,
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".to_string(), |x| x.to_string())
}

fn file_stem(parts: &[&str]) -> String {
    parts
        .iter()
        .map(|p| p.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect::<String>())
        .collect::<Vec<_>>()
        .join(".")
}

struct Emitter<'a> {
    dir: &'a Path,
    files: Vec<String>,
}

impl Emitter<'_> {
    fn csv(&mut self, name: &str, rows: Vec<Vec<String>>) -> Result<(), ReportError> {
        let path = self.dir.join(name);
        let mut w = csv::Writer::from_path(&path).map_err(csv_err(&path))?;
        for r in rows {
            w.write_record(&r).map_err(csv_err(&path))?;
        }
        w.flush().map_err(at(&path))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn raw(&mut self, name: &str, write: impl FnOnce(&mut dyn Write) -> io::Result<()>) -> Result<(), ReportError> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(at(parent))?;
        }
        let mut f = io::BufWriter::new(fs::File::create(&path).map_err(at(&path))?);
        write(&mut f).and_then(|_| f.flush()).map_err(at(&path))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

/// Writes the report into `dir`: `report.json`, per-seed and aggregated CSV
/// tables, space diagnostics and a `manifest.json` listing everything. An
/// empty report produces the manifest alone.
pub fn emit_report(report: &ProbeReport, dir: &Path) -> Result<Vec<String>, ReportError> {
    fs::create_dir_all(dir).map_err(at(dir))?;
    let mut e = Emitter { dir, files: Vec::new() };
    if !report.is_empty() || !report.failures.is_empty() {
        write_tables(report, &mut e)?;
    }
    let manifest = Manifest {
        schema: report.schema,
        toolkit_version: report.toolkit_version,
        config_hash: &report.config_hash,
        seeds: &report.seeds,
        files: e.files.clone(),
    };
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    fs::write(&path, json + "\n").map_err(at(&path))?;
    let mut files = e.files;
    files.push("manifest.json".into());
    Ok(files)
}

fn write_tables(report: &ProbeReport, e: &mut Emitter) -> Result<(), ReportError> {
    e.raw("report.json", |w| {
        serde_json::to_writer_pretty(&mut *w, report).map_err(io::Error::other)?;
        writeln!(w)
    })?;

    let mut rows = vec![[
        "dataset", "source", "task", "level", "seed", "status", "loss", "normalized_loss", "auc", "train_examples",
        "test_examples", "best_epoch", "error",
    ]
    .map(String::from)
    .to_vec()];
    for c in &report.cells {
        let level = c.level.map_or(String::new(), |l| format!("{l:?}").to_lowercase());
        let mut row = vec![c.dataset.clone(), c.source.clone(), c.task.clone(), level, c.seed.to_string()];
        match &c.outcome {
            Ok(s) => row.extend([
                "ok".into(),
                s.loss.to_string(),
                opt(s.normalized_loss),
                opt(s.auc),
                s.train_examples.to_string(),
                s.test_examples.to_string(),
                s.best_epoch.to_string(),
                String::new(),
            ]),
            Err(msg) => {
                row.push("failed".into());
                row.extend(std::iter::repeat_n("NA".to_string(), 6));
                row.push(msg.clone());
            }
        }
        rows.push(row);
    }
    e.csv("scores.csv", rows)?;

    // std is the population standard deviation over seeds
    let mut rows = vec![[
        "dataset", "source", "task", "metric", "mean", "std", "n", "normalized_loss_mean", "normalized_loss_std", "failures",
    ]
    .map(String::from)
    .to_vec()];
    for a in &report.aggregates {
        rows.push(vec![
            a.dataset.clone(),
            a.source.clone(),
            a.task.clone(),
            a.metric.to_string(),
            opt(a.score.map(|s| s.mean)),
            opt(a.score.map(|s| s.std)),
            a.score.map_or(0, |s| s.n).to_string(),
            opt(a.normalized_loss.map(|s| s.mean)),
            opt(a.normalized_loss.map(|s| s.std)),
            a.failures.to_string(),
        ]);
    }
    e.csv("summary.csv", rows)?;

    // task x source layout with mean ± std cells
    let mut sources = report.sources.clone();
    if report.aggregates.iter().any(|a| a.source == BASELINE_SOURCE) {
        sources.push(BASELINE_SOURCE.to_string());
    }
    let mut header = vec!["dataset".to_string(), "task".to_string(), "metric".to_string()];
    header.extend(sources.iter().cloned());
    let mut rows = vec![header];
    for r in &report.ranks {
        let metric = report
            .aggregates
            .iter()
            .find(|a| a.dataset == r.dataset && a.task == r.task)
            .map_or("", |a| a.metric);
        let mut row = vec![r.dataset.clone(), r.task.clone(), metric.to_string()];
        for s in &sources {
            let cell = report
                .aggregates
                .iter()
                .find(|a| a.dataset == r.dataset && a.task == r.task && &a.source == s)
                .and_then(|a| a.score)
                .map_or_else(|| "NA".to_string(), |x| format!("{:.4} ± {:.4}", x.mean, x.std));
            row.push(cell);
        }
        rows.push(row);
    }
    e.csv("table.csv", rows)?;

    let mut header = vec!["dataset".to_string(), "task".to_string()];
    header.extend(report.sources.iter().cloned());
    let mut rows = vec![header];
    for r in &report.ranks {
        let mut row = vec![r.dataset.clone(), r.task.clone()];
        row.extend(r.ranks.iter().map(|&x| opt(x)));
        rows.push(row);
    }
    let mut avg = vec![String::new(), "Avg. Rank".to_string()];
    avg.extend(report.average_ranks.iter().map(|&x| opt(x)));
    rows.push(avg);
    if report.rank_correlation.is_some() || !report.ranks.is_empty() {
        let mut corr = vec![String::new(), "Rank Corr.".to_string(), opt(report.rank_correlation)];
        corr.extend(std::iter::repeat_n(String::new(), report.sources.len().saturating_sub(1)));
        rows.push(corr);
    }
    e.csv("ranks.csv", rows)?;

    if !report.space.is_empty() {
        let cells: Vec<_> = report
            .space
            .iter()
            .map(|s| (s.dataset.clone(), s.source.clone(), s.uniformity.value))
            .collect();
        e.raw("uniformity.csv", |w| write_uniformity_table(&cells, w))?;
        let mut rows = vec![[
            "dataset", "source", "layer", "uniformity", "effective_rank", "above_threshold", "collapsed", "separation",
            "positive_pairs", "negative_pairs",
        ]
        .map(String::from)
        .to_vec()];
        for s in &report.space {
            rows.push(vec![
                s.dataset.clone(),
                s.source.clone(),
                s.layer.to_string(),
                opt(s.uniformity.value),
                s.spectrum.effective_rank.to_string(),
                s.spectrum.above_threshold.to_string(),
                s.spectrum.collapsed.to_string(),
                opt(s.alignment.separation),
                s.positive_pairs.to_string(),
                s.negative_pairs.to_string(),
            ]);
            let stem = file_stem(&[&s.dataset, &s.source]);
            e.raw(&format!("spectrum/{stem}.csv"), |w| write_spectrum_csv(&s.spectrum, w))?;
            e.raw(&format!("alignment/{stem}.json"), |w| writeln!(w, "{}", alignment_json(&s.alignment)))?;
        }
        e.csv("space.csv", rows)?;
    }

    if !report.failures.is_empty() || report.cells.iter().any(|c| c.outcome.is_err()) {
        let mut rows = vec![["stage", "dataset", "source", "task", "seed", "message"].map(String::from).to_vec()];
        for f in &report.failures {
            rows.push(vec![f.stage.clone(), f.dataset.clone(), String::new(), String::new(), String::new(), f.message.clone()]);
        }
        for c in &report.cells {
            if let Err(msg) = &c.outcome {
                rows.push(vec![
                    "probe".into(),
                    c.dataset.clone(),
                    c.source.clone(),
                    c.task.clone(),
                    c.seed.to_string(),
                    msg.clone(),
                ]);
            }
        }
        e.csv("failures.csv", rows)?;
    }
    Ok(())
}
