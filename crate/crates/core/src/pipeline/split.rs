use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::molgraph::{canonical_hash, MolecularGraph};

/// Ring systems plus the linkers joining them: degree-1 atoms outside rings
/// are removed until none remain. Acyclic molecules give an empty graph.
pub fn bemis_murcko_scaffold(g: &MolecularGraph) -> MolecularGraph {
    let ring = g.ring_atoms();
    let n = g.atom_count();
    let mut alive = vec![true; n];
    let mut degree: Vec<usize> = (0..n).map(|i| g.degree(i)).collect();
    let mut stack: Vec<usize> = (0..n).filter(|&i| !ring[i] && degree[i] <= 1).collect();
    while let Some(i) = stack.pop() {
        if !alive[i] {
            continue;
        }
        alive[i] = false;
        for &(nb, _) in g.neighbors(i) {
            if alive[nb] {
                degree[nb] -= 1;
                if !ring[nb] && degree[nb] <= 1 {
                    stack.push(nb);
                }
            }
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| alive[i]).collect();
    g.induced_subgraph(&keep)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitTag {
    Train,
    Valid,
    Test,
}

impl SplitTag {
    pub fn name(self) -> &'static str {
        match self {
            SplitTag::Train => "train",
            SplitTag::Valid => "valid",
            SplitTag::Test => "test",
        }
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SplitAssignment {
    pub tags: Vec<SplitTag>,
    /// Canonical hash of each molecule's scaffold.
    pub scaffolds: Vec<u64>,
    /// Achieved train/valid/test fractions.
    pub fractions: [f64; 3],
    pub largest_group: usize,
}

impl SplitAssignment {
    pub fn indices(&self, tag: SplitTag) -> Vec<usize> {
        (0..self.tags.len()).filter(|&i| self.tags[i] == tag).collect()
    }

    /// `index,scaffold,split` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,scaffold,split\n");
        for (i, (t, s)) in self.tags.iter().zip(&self.scaffolds).enumerate() {
            out.push_str(&format!("{i},{s:016x},{}\n", t.name()));
        }
        out
    }
}

fn mix(seed: u64, h: u64) -> u64 {
    let mut z = seed ^ h.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Groups molecules by scaffold hash, orders groups by size (largest first;
/// equal sizes by the hash mixed with `seed`), then fills train until it
/// reaches its fraction, then valid, and puts the rest in test.
pub fn scaffold_split(molecules: &[MolecularGraph], fractions: [f64; 3], seed: u64) -> SplitAssignment {
    let scaffolds: Vec<u64> = molecules
        .iter()
        .map(|g| canonical_hash(&bemis_murcko_scaffold(g)))
        .collect();
    split_by_groups(&scaffolds, fractions, seed)
}

/// The split rule applied to precomputed group keys.
pub fn split_by_groups(keys: &[u64], fractions: [f64; 3], seed: u64) -> SplitAssignment {
    let n = keys.len();
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &k) in keys.iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    let mut ordered: Vec<(u64, Vec<usize>)> = groups.into_iter().collect();
    ordered.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(mix(seed, a.0).cmp(&mix(seed, b.0))));
    let largest_group = ordered.first().map_or(0, |g| g.1.len());
    let train_cut = fractions[0] * n as f64 - 1e-9;
    let valid_cut = (fractions[0] + fractions[1]) * n as f64 - 1e-9;
    let mut tags = vec![SplitTag::Test; n];
    let mut filled = 0usize;
    for (_, members) in &ordered {
        let tag = if (filled as f64) < train_cut {
            SplitTag::Train
        } else if (filled as f64) < valid_cut {
            SplitTag::Valid
        } else {
            SplitTag::Test
        };
        for &i in members {
            tags[i] = tag;
        }
        filled += members.len();
    }
    let count = |t| tags.iter().filter(|&&x| x == t).count() as f64 / n.max(1) as f64;
    let fractions = [count(SplitTag::Train), count(SplitTag::Valid), count(SplitTag::Test)];
    if n > 0 && (fractions[1] == 0.0 || fractions[2] == 0.0) {
        log::warn!("scaffold split left an empty split: {fractions:?}");
    }
    SplitAssignment {
        tags,
        scaffolds: keys.to_vec(),
        fractions,
        largest_group,
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PairSampleError {
    #[error("no molecule with at least two atoms to sample pairs from")]
    NoPairs,
}

/// `count` draws, with replacement, uniform over all `(molecule, u, v)` with
/// `u < v` among the given molecules.
pub fn sample_node_pairs(
    molecules: &[MolecularGraph],
    pool: &[usize],
    count: usize,
    seed: u64,
) -> Result<Vec<(usize, usize, usize)>, PairSampleError> {
    let mut cumulative = Vec::with_capacity(pool.len());
    let mut total = 0u64;
    for &m in pool {
        let a = molecules[m].atom_count() as u64;
        total += a * a.saturating_sub(1) / 2;
        cumulative.push(total);
    }
    if total == 0 {
        return Err(PairSampleError::NoPairs);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let r = rng.random_range(0..total);
        let k = cumulative.partition_point(|&c| c <= r);
        let m = pool[k];
        let a = molecules[m].atom_count();
        let u = rng.random_range(0..a);
        let mut v = rng.random_range(0..a - 1);
        if v >= u {
            v += 1;
        }
        out.push((m, u.min(v), u.max(v)));
    }
    Ok(out)
}
