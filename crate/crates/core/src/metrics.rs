//! Scores and rank correlations.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
}

/// Fractional ranks (1-based); tied values share the mean of their positions.
pub fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Area under the ROC curve via the Mann-Whitney U statistic: the probability
/// that a positive outscores a negative, ties counting half. `None` when only
/// one class is present.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<Option<f64>, MetricError> {
    if scores.len() != labels.len() {
        return Err(MetricError::LengthMismatch(scores.len(), labels.len()));
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Ok(None);
    }
    let ranks = mid_ranks(scores);
    let rank_sum: f64 = ranks.iter().zip(labels).filter(|(_, &l)| l).map(|(r, _)| r).sum();
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(Some(u / (n_pos as f64 * n_neg as f64)))
}

pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return None;
    }
    Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Spearman rank correlation: Pearson correlation of mid-ranks. `None` when
/// either input has no rank variance.
pub fn spearman(a: &[f64], b: &[f64]) -> Result<Option<f64>, MetricError> {
    if a.len() != b.len() {
        return Err(MetricError::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Ok(None);
    }
    Ok(pearson(&mid_ranks(a), &mid_ranks(b)))
}

pub fn mse(pred: &[f64], target: &[f64]) -> Result<f64, MetricError> {
    if pred.len() != target.len() {
        return Err(MetricError::LengthMismatch(pred.len(), target.len()));
    }
    if pred.is_empty() {
        return Err(MetricError::Empty);
    }
    Ok(pred.iter().zip(target).map(|(p, t)| (p - t) * (p - t)).sum::<f64>() / pred.len() as f64)
}

fn log_sum_exp(row: &[f64]) -> f64 {
    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + row.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

/// Mean categorical cross-entropy from unnormalised logits (one row per
/// example).
pub fn cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> Result<f64, MetricError> {
    if logits.len() != labels.len() {
        return Err(MetricError::LengthMismatch(logits.len(), labels.len()));
    }
    if logits.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut total = 0.0;
    for (row, &label) in logits.iter().zip(labels) {
        if label >= row.len() {
            return Err(MetricError::LabelOutOfRange {
                label,
                classes: row.len(),
            });
        }
        total += log_sum_exp(row) - row[label];
    }
    Ok(total / logits.len() as f64)
}

/// Mean binary cross-entropy from single logits, computed without overflow.
pub fn binary_cross_entropy(logits: &[f64], labels: &[bool]) -> Result<f64, MetricError> {
    if logits.len() != labels.len() {
        return Err(MetricError::LengthMismatch(logits.len(), labels.len()));
    }
    if logits.is_empty() {
        return Err(MetricError::Empty);
    }
    let total: f64 = logits
        .iter()
        .zip(labels)
        .map(|(&z, &y)| {
            // log(1 + e^z) - y z
            let softplus = z.max(0.0) + (-z.abs()).exp().ln_1p();
            softplus - if y { z } else { 0.0 }
        })
        .sum();
    Ok(total / logits.len() as f64)
}

/// Mean and standard deviation of per-seed scores.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

/// Population (ddof = 0) standard deviation, so three seeds of 0.6, 0.7, 0.8
/// give 0.0816.
pub fn aggregate(scores: &[f64]) -> Option<Aggregate> {
    if scores.is_empty() {
        return None;
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    Some(Aggregate {
        mean,
        std: var.sqrt(),
        n: scores.len(),
    })
}
