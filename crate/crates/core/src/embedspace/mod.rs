//! Alignment, uniformity and singular-value diagnostics of embedding spaces.

mod svd;

pub use svd::singular_values;

use std::collections::HashSet;
use std::io::{self, Write};

use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

pub const DEFAULT_UNIFORMITY_T: f64 = 2.0;
pub const DEFAULT_COLLAPSE_TAU: f64 = 1e-6;
pub const DEFAULT_ALIGNMENT_BINS: usize = 20;

/// Up to this many molecule pairs are enumerated exhaustively; beyond it
/// pairs are drawn at random.
const EXHAUSTIVE_PAIR_LIMIT: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PairSet {
    pub positive: Vec<(usize, usize)>,
    pub negative: Vec<(usize, usize)>,
    pub rule: String,
    /// How many requested pairs of each kind could not be realised.
    pub positive_shortfall: usize,
    pub negative_shortfall: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum PairKind {
    Positive,
    Negative,
}

/// Labels are compared only where both molecules have a value.
fn classify(a: &[Option<bool>], b: &[Option<bool>]) -> PairKind {
    let differs = a
        .iter()
        .zip(b)
        .any(|(x, y)| matches!((x, y), (Some(p), Some(q)) if p != q));
    if differs {
        PairKind::Negative
    } else {
        PairKind::Positive
    }
}

/// Seeded sample of `count` positive pairs (label vectors agree wherever both
/// are known) and `count` negative pairs (disagree on at least one task).
pub fn build_pairs(labels: &[Vec<Option<bool>>], count: usize, seed: u64) -> PairSet {
    let n = labels.len();
    let total = n * n.saturating_sub(1) / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut positive, mut negative) = (Vec::new(), Vec::new());
    if total <= EXHAUSTIVE_PAIR_LIMIT {
        let (mut pos_all, mut neg_all) = (Vec::new(), Vec::new());
        for i in 0..n {
            for j in i + 1..n {
                match classify(&labels[i], &labels[j]) {
                    PairKind::Positive => pos_all.push((i, j)),
                    PairKind::Negative => neg_all.push((i, j)),
                }
            }
        }
        let mut pick = |all: Vec<(usize, usize)>| -> Vec<(usize, usize)> {
            if all.len() <= count {
                return all;
            }
            let mut idx = sample(&mut rng, all.len(), count).into_vec();
            idx.sort_unstable();
            idx.into_iter().map(|k| all[k]).collect()
        };
        positive = pick(pos_all);
        negative = pick(neg_all);
    } else {
        let mut seen = HashSet::new();
        let budget = 50 * count.max(1) + 10_000;
        for _ in 0..budget {
            if positive.len() >= count && negative.len() >= count {
                break;
            }
            let i = rng.random_range(0..n);
            let j = rng.random_range(0..n);
            if i == j || !seen.insert((i.min(j), i.max(j))) {
                continue;
            }
            let pair = (i.min(j), i.max(j));
            match classify(&labels[i], &labels[j]) {
                PairKind::Positive if positive.len() < count => positive.push(pair),
                PairKind::Negative if negative.len() < count => negative.push(pair),
                _ => {}
            }
        }
    }
    let positive_shortfall = count - positive.len();
    let negative_shortfall = count - negative.len();
    if positive_shortfall > 0 || negative_shortfall > 0 {
        log::warn!(
            "pair sampling short by {positive_shortfall} positive and {negative_shortfall} negative pairs"
        );
    }
    PairSet {
        positive,
        negative,
        rule: "positive: labels agree on every task known for both; negative: differ on at least one".into(),
        positive_shortfall,
        negative_shortfall,
    }
}

fn norm(v: ArrayView1<f64>) -> f64 {
    v.dot(&v).sqrt()
}

/// `1 - cos(a, b)`, or `None` if either vector is zero.
pub fn cosine_distance(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Option<f64> {
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return None;
    }
    Some((1.0 - a.dot(&b) / (na * nb)).clamp(0.0, 2.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistanceHistogram {
    pub edges: Vec<f64>,
    pub counts: Vec<u64>,
}

fn distance_histogram(values: &[f64], bins: usize) -> DistanceHistogram {
    let edges: Vec<f64> = (0..=bins).map(|k| 2.0 * k as f64 / bins as f64).collect();
    let mut counts = vec![0u64; bins];
    for &v in values {
        let k = ((v / 2.0 * bins as f64).floor() as usize).min(bins - 1);
        counts[k] += 1;
    }
    DistanceHistogram { edges, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlignmentReport {
    pub positive: DistanceHistogram,
    pub negative: DistanceHistogram,
    /// Mean negative distance minus mean positive distance.
    pub separation: Option<f64>,
    pub positive_mean: Option<f64>,
    pub negative_mean: Option<f64>,
    /// Pairs dropped because an embedding had zero norm.
    pub skipped: usize,
}

fn mean(xs: &[f64]) -> Option<f64> {
    (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64)
}

/// Cosine distances of both pair sets, binned over `[0, 2]`.
pub fn alignment(embeddings: ArrayView2<f64>, pairs: &PairSet, bins: usize) -> AlignmentReport {
    let mut skipped = 0;
    let mut dist = |list: &[(usize, usize)]| -> Vec<f64> {
        list.iter()
            .filter_map(|&(i, j)| {
                let d = cosine_distance(embeddings.row(i), embeddings.row(j));
                if d.is_none() {
                    skipped += 1;
                }
                d
            })
            .collect()
    };
    let pos = dist(&pairs.positive);
    let neg = dist(&pairs.negative);
    let (pm, nm) = (mean(&pos), mean(&neg));
    AlignmentReport {
        positive: distance_histogram(&pos, bins.max(1)),
        negative: distance_histogram(&neg, bins.max(1)),
        separation: pm.zip(nm).map(|(p, n)| n - p),
        positive_mean: pm,
        negative_mean: nm,
        skipped,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Uniformity {
    /// `None` when fewer than two usable rows remain.
    pub value: Option<f64>,
    pub skipped_zero_rows: usize,
}

/// `log(mean_{i<j} exp(-t |z_i - z_j|^2))` over unit-normalised rows.
pub fn uniformity(embeddings: ArrayView2<f64>, t: f64) -> Uniformity {
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(embeddings.nrows());
    let mut skipped = 0;
    for r in embeddings.rows() {
        let n = norm(r);
        if n == 0.0 {
            skipped += 1;
            continue;
        }
        rows.push(r.iter().map(|x| x / n).collect());
    }
    if skipped > 0 {
        log::warn!("uniformity: skipped {skipped} zero-norm rows");
    }
    let m = rows.len();
    if m < 2 {
        return Uniformity {
            value: None,
            skipped_zero_rows: skipped,
        };
    }
    // per-row partial sums, then an ordered reduction
    let partial: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|i| {
            (i + 1..m)
                .map(|j| {
                    let d2: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| (a - b) * (a - b)).sum();
                    (-t * d2).exp()
                })
                .sum::<f64>()
        })
        .collect();
    let pairs = (m * (m - 1) / 2) as f64;
    Uniformity {
        value: Some((partial.iter().sum::<f64>() / pairs).ln()),
        skipped_zero_rows: skipped,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// Descending; `min(N, d)` entries.
    pub singular_values: Vec<f64>,
    /// Natural log of each singular value (`-inf` for exact zeros).
    pub log_singular_values: Vec<f64>,
    /// `exp` of the entropy of the normalised singular values.
    pub effective_rank: f64,
    pub threshold: f64,
    pub above_threshold: usize,
    pub collapsed: bool,
    pub centered: bool,
}

/// Singular-value spectrum; collapse is flagged when fewer than `d / 2`
/// values exceed `tau * sigma_max`.
pub fn spectrum(embeddings: ArrayView2<f64>, tau: f64, center: bool) -> SpectrumReport {
    let d = embeddings.ncols();
    let sv = if center && embeddings.nrows() > 0 {
        let mean = embeddings.mean_axis(Axis(0)).expect("non-empty");
        let centered: Array2<f64> = &embeddings - &mean;
        singular_values(centered.view())
    } else {
        singular_values(embeddings)
    };
    let max = sv.first().copied().unwrap_or(0.0);
    let threshold = tau * max;
    let above = sv.iter().filter(|&&s| s > threshold).count();
    let total: f64 = sv.iter().sum();
    let effective_rank = if total > 0.0 {
        let h: f64 = sv
            .iter()
            .filter(|&&s| s > 0.0)
            .map(|&s| {
                let p = s / total;
                -p * p.ln()
            })
            .sum();
        h.exp()
    } else {
        0.0
    };
    SpectrumReport {
        log_singular_values: sv.iter().map(|s| s.ln()).collect(),
        singular_values: sv,
        effective_rank,
        threshold,
        above_threshold: above,
        collapsed: (above as f64) < d as f64 / 2.0,
        centered: center,
    }
}

/// `index,sigma,log_sigma`
pub fn write_spectrum_csv<W: Write>(report: &SpectrumReport, mut out: W) -> io::Result<()> {
    writeln!(out, "index,sigma,log_sigma")?;
    for (i, (s, l)) in report.singular_values.iter().zip(&report.log_singular_values).enumerate() {
        writeln!(out, "{i},{s:e},{l}")?;
    }
    Ok(())
}

pub fn alignment_json(report: &AlignmentReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

/// Uniformity table with one row per dataset and one column per method;
/// `cells` holds `(dataset, method, value)`.
pub fn write_uniformity_table<W: Write>(cells: &[(String, String, Option<f64>)], mut out: W) -> io::Result<()> {
    let mut datasets: Vec<&str> = Vec::new();
    let mut methods: Vec<&str> = Vec::new();
    for (d, m, _) in cells {
        if !datasets.contains(&d.as_str()) {
            datasets.push(d);
        }
        if !methods.contains(&m.as_str()) {
            methods.push(m);
        }
    }
    writeln!(out, "dataset,{}", methods.join(","))?;
    for d in &datasets {
        let row: Vec<String> = methods
            .iter()
            .map(|m| {
                cells
                    .iter()
                    .find(|(cd, cm, _)| cd == d && cm == m)
                    .and_then(|c| c.2)
                    .map_or_else(|| "NA".to_string(), |v| format!("{v:.4}"))
            })
            .collect();
        writeln!(out, "{d},{}", row.join(","))?;
    }
    writeln!(
        out,
        "# t=2 uniformity ranges over [-8, 0]; antipodal pairs reach -8"
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    #[test]
    fn uniformity_examples() {
        let same = array![[1.0, 2.0], [1.0, 2.0], [2.0, 4.0]];
        assert_eq!(uniformity(same.view(), 2.0).value, Some(0.0));
        let ortho = array![[1.0, 0.0], [0.0, 1.0]];
        assert!((uniformity(ortho.view(), 2.0).value.unwrap() + 4.0).abs() < 1e-9);
        let anti = array![[1.0, 0.0], [-1.0, 0.0]];
        assert!((uniformity(anti.view(), 2.0).value.unwrap() + 8.0).abs() < 1e-9);
        let zero = array![[0.0, 0.0], [1.0, 0.0]];
        let u = uniformity(zero.view(), 2.0);
        assert_eq!((u.value, u.skipped_zero_rows), (None, 1));
    }

    #[test]
    fn spectrum_examples() {
        let rank1 = Array2::from_shape_fn((6, 4), |(_, j)| j as f64 + 1.0);
        let s = spectrum(rank1.view(), DEFAULT_COLLAPSE_TAU, false);
        assert_eq!(s.singular_values.len(), 4);
        assert_eq!(s.above_threshold, 1);
        assert!(s.collapsed);
        let basis = Array2::from_diag(&ndarray::Array1::from_elem(5, 3.0));
        let s = spectrum(basis.view(), DEFAULT_COLLAPSE_TAU, false);
        assert!(s.singular_values.iter().all(|&x| (x - 3.0).abs() < 1e-12));
        assert!(!s.collapsed);
        assert!((s.effective_rank - 5.0).abs() < 1e-9);
        // centring removes the shared offset entirely
        let c = spectrum(rank1.view(), DEFAULT_COLLAPSE_TAU, true);
        assert_eq!(c.singular_values[0], 0.0);
        let mut csv = Vec::new();
        write_spectrum_csv(&c, &mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().contains("0,0e0,-inf"));
    }

    #[test]
    fn alignment_examples() {
        let z = array![[1.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 0.0]];
        let pairs = PairSet {
            positive: vec![(0, 1)],
            negative: vec![(0, 2), (0, 3)],
            rule: String::new(),
            positive_shortfall: 0,
            negative_shortfall: 0,
        };
        let r = alignment(z.view(), &pairs, 4);
        assert_eq!(r.positive_mean, Some(0.0));
        assert_eq!(r.negative_mean, Some(2.0));
        assert_eq!(r.separation, Some(2.0));
        assert_eq!(r.skipped, 1);
        assert_eq!(r.negative.counts, vec![0, 0, 0, 1]);
        let flat = array![[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [1.0, 1.0]];
        assert_eq!(alignment(flat.view(), &pairs, 4).separation, Some(0.0));
        assert!(alignment_json(&r).contains("\"separation\": 2.0"));
    }

    #[test]
    fn pair_examples() {
        let two = vec![vec![Some(true), None], vec![Some(true), Some(false)]];
        let p = build_pairs(&two, 5, 0);
        assert_eq!((p.positive.len(), p.negative.len()), (1, 0));
        let distinct = vec![vec![Some(true)], vec![Some(false)]];
        let p = build_pairs(&distinct, 3, 0);
        assert_eq!(p.positive.len(), 0);
        assert_eq!(p.positive_shortfall, 3);
        let many: Vec<_> = (0..40).map(|i| vec![Some(i % 3 == 0), Some(i % 2 == 0)]).collect();
        let a = build_pairs(&many, 10, 9);
        assert_eq!(a, build_pairs(&many, 10, 9));
        assert_eq!(a.positive.len(), 10);
        for &(i, j) in &a.positive {
            assert_eq!(many[i], many[j]);
        }
        for &(i, j) in &a.negative {
            assert_ne!(many[i], many[j]);
        }
    }
}
