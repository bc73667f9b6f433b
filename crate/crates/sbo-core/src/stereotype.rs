//! Item group inclination, item stereotypicality, user stereotypicality
//! and the selection threshold.
//!
//! Inclination of item `v` towards group `g` is the fraction of group-`g`
//! users that interacted with `v`. The signed per-item score for the
//! ordered pair (g, g') is their difference normalized by the larger of
//! the two, zero when neither group consumed the item. The per-user score
//! aggregates the group-signed item scores over the user's profile, and
//! the threshold is the mean of all users' scores.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataset::{GroupPartition, InteractionDataset};
use crate::error::{Error, Result};

/// How a user's profile scores are aggregated into a single score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Aggregator {
    #[default]
    Mean,
    Median,
}

impl fmt::Display for Aggregator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Aggregator::Mean => write!(f, "mean"),
            Aggregator::Median => write!(f, "median"),
        }
    }
}

impl std::str::FromStr for Aggregator {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mean" => Ok(Aggregator::Mean),
            "median" => Ok(Aggregator::Median),
            other => Err(Error::Config(format!("unknown aggregator '{other}'"))),
        }
    }
}

/// Per-item inclination and signed stereotypicality scores for a fixed,
/// ordered group pair (group 0, group 1 of the partition's label order).
#[derive(Debug, Clone, PartialEq)]
pub struct StereotypeTable {
    labels: [String; 2],
    igi: Vec<[f64; 2]>,
    ister: Vec<f64>,
}

impl StereotypeTable {
    /// Computes inclination and signed scores for every item of `dataset`.
    pub fn compute(dataset: &InteractionDataset, partition: &GroupPartition) -> Result<Self> {
        let igi = compute_igi(dataset, partition)?;
        let ister = compute_ister(&igi, 0, 1);
        Ok(Self {
            labels: partition.labels().clone(),
            igi,
            ister,
        })
    }

    pub fn labels(&self) -> &[String; 2] {
        &self.labels
    }

    pub fn num_items(&self) -> usize {
        self.ister.len()
    }

    pub fn igi(&self, item: u32, group: u8) -> f64 {
        self.igi[item as usize][group as usize]
    }

    /// Signed score of `item` for the canonical pair (group 0, group 1).
    pub fn ister(&self, item: u32) -> f64 {
        self.ister[item as usize]
    }

    pub fn ister_all(&self) -> &[f64] {
        &self.ister
    }
}

/// Fraction of each group's users that interacted with each item.
pub fn compute_igi(
    dataset: &InteractionDataset,
    partition: &GroupPartition,
) -> Result<Vec<[f64; 2]>> {
    let sizes = [partition.group_size(0), partition.group_size(1)];
    for g in 0..2 {
        if sizes[g] == 0 {
            return Err(Error::EmptyGroup {
                label: partition.labels()[g].clone(),
            });
        }
    }
    let mut counts = vec![[0usize; 2]; dataset.num_items()];
    for u in 0..dataset.num_users() as u32 {
        let g = partition.group_of(u) as usize;
        for &v in dataset.profile(u) {
            counts[v as usize][g] += 1;
        }
    }
    Ok(counts
        .into_iter()
        .map(|c| [c[0] as f64 / sizes[0] as f64, c[1] as f64 / sizes[1] as f64])
        .collect())
}

/// Signed per-item score for the ordered group pair (g, g'): the
/// difference of inclinations normalized by the larger one; zero for
/// items consumed by neither group. Swapping the pair negates the score
/// exactly.
pub fn compute_ister(igi: &[[f64; 2]], g: usize, g_prime: usize) -> Vec<f64> {
    igi.iter()
        .map(|row| {
            let a = row[g];
            let b = row[g_prime];
            let max = a.max(b);
            if max > 0.0 {
                (a - b) / max
            } else {
                0.0
            }
        })
        .collect()
}

/// Mean or median of the group-signed item scores over a user profile.
///
/// The median of an even-sized list is the average of the two middle
/// values.
pub fn user_score(
    profile: &BTreeSet<u32>,
    signed_scores: &[f64],
    aggregator: Aggregator,
) -> Result<f64> {
    if profile.is_empty() {
        return Err(Error::EmptyProfile);
    }
    let values: Vec<f64> = profile.iter().map(|&v| signed_scores[v as usize]).collect();
    Ok(match aggregator {
        Aggregator::Mean => values.iter().sum::<f64>() / values.len() as f64,
        Aggregator::Median => {
            let mut sorted = values;
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let n = sorted.len();
            if n % 2 == 1 {
                sorted[n / 2]
            } else {
                (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
            }
        }
    })
}

/// Threshold: the arithmetic mean of all users' scores. Users whose score
/// is at or above the threshold are treated as highly stereotypical.
pub fn compute_gamma(all_scores: &[f64]) -> Result<f64> {
    if all_scores.is_empty() {
        return Err(Error::EmptyScores);
    }
    Ok(all_scores.iter().sum::<f64>() / all_scores.len() as f64)
}

/// Bin counts of the signed item scores over [-1, 1]. Bins are
/// left-closed, right-open, except the last bin which includes 1.
pub fn ister_histogram(scores: &[f64], bins: usize) -> Vec<usize> {
    assert!(bins >= 1);
    let width = 2.0 / bins as f64;
    let mut counts = vec![0usize; bins];
    for &s in scores {
        let idx = (((s + 1.0) / width).floor() as isize).clamp(0, bins as isize - 1);
        counts[idx as usize] += 1;
    }
    counts
}

/// Writes the item-score histogram, the descending-sorted user score
/// series and the threshold value as delimited text under `dir`.
pub fn emit_distributions<P: AsRef<Path>>(
    table: &StereotypeTable,
    scores: &[f64],
    gamma: f64,
    bins: usize,
    dir: P,
) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;

    let counts = ister_histogram(table.ister_all(), bins);
    let width = 2.0 / bins as f64;
    let mut hist = String::from("bin_low,bin_high,count\n");
    for (i, c) in counts.iter().enumerate() {
        let lo = -1.0 + i as f64 * width;
        let hi = lo + width;
        hist.push_str(&format!("{lo},{hi},{c}\n"));
    }
    fs::write(dir.join("ister_histogram.csv"), hist)?;

    let mut sorted = scores.to_vec();
    sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut series = String::from("rank,score\n");
    for (rank, s) in sorted.iter().enumerate() {
        series.push_str(&format!("{rank},{s}\n"));
    }
    fs::write(dir.join("user_scores.csv"), series)?;

    fs::write(dir.join("gamma.csv"), format!("gamma\n{gamma}\n"))?;
    Ok(())
}
