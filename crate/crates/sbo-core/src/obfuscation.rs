//! Stereotypicality-based obfuscation of user profiles.
//!
//! For each user whose stereotypicality score reaches the threshold, a
//! budget of at most ⌊ρ·|X_u|⌋ candidate items is ranked from the
//! strategy's sampling pool (the profile for removal, its complement for
//! imputation), a sampler picks the items to obfuscate, and the profile
//! is rewritten. Users below the threshold are copied unchanged.
//!
//! Per-user work draws from dedicated RNG streams derived from the
//! config seed and the user index, so parallel and sequential execution
//! produce identical output.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroupPartition, InteractionDataset};
use crate::error::{Error, Result};
use crate::rng;
use crate::stereotype::{compute_gamma, user_score, Aggregator, StereotypeTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Strategy {
    Imputation,
    Removal,
    Weighted,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Strategy::Imputation => write!(f, "imputation"),
            Strategy::Removal => write!(f, "removal"),
            Strategy::Weighted => write!(f, "weighted"),
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "imputation" | "imputate" => Ok(Strategy::Imputation),
            "removal" | "remove" => Ok(Strategy::Removal),
            "weighted" => Ok(Strategy::Weighted),
            other => Err(Error::Config(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SamplerKind {
    SbSampling,
    TopStereo,
    Random,
}

impl fmt::Display for SamplerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SamplerKind::SbSampling => write!(f, "sbsampling"),
            SamplerKind::TopStereo => write!(f, "topstereo"),
            SamplerKind::Random => write!(f, "random"),
        }
    }
}

impl std::str::FromStr for SamplerKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "sbsampling" => Ok(SamplerKind::SbSampling),
            "topstereo" => Ok(SamplerKind::TopStereo),
            "random" => Ok(SamplerKind::Random),
            other => Err(Error::Config(format!("unknown sampler '{other}'"))),
        }
    }
}

/// The operation a chosen candidate item undergoes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Remove,
}

/// A candidate item tagged with its obfuscation operation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Candidate {
    pub item: u32,
    pub op: Op,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObfuscationConfig {
    pub strategy: Strategy,
    pub sampler: SamplerKind,
    /// Obfuscation ratio ρ: per-user cap on obfuscated items as a
    /// fraction of the profile size.
    pub rho: f64,
    /// Fraction of the budget spent on imputation in the weighted
    /// strategy; ignored otherwise.
    pub omega: f64,
    pub aggregator: Aggregator,
    pub seed: u64,
}

impl ObfuscationConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::Config(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        if !(0.0..=1.0).contains(&self.omega) {
            return Err(Error::Config(format!(
                "omega must lie in [0, 1], got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// Per-user audit record of one obfuscation run.
#[derive(Debug, Clone, PartialEq)]
pub struct UserAudit {
    pub user: u32,
    pub score: f64,
    pub selected: bool,
    pub candidates: usize,
    pub added: Vec<u32>,
    pub removed: Vec<u32>,
    /// Removals skipped to keep the profile non-empty.
    pub removals_skipped: usize,
}

/// The rewritten dataset together with the full per-user audit trail.
#[derive(Debug, Clone, PartialEq)]
pub struct ObfuscationOutcome {
    pub dataset: InteractionDataset,
    pub gamma: f64,
    pub scores: Vec<f64>,
    pub audits: Vec<UserAudit>,
}

impl ObfuscationOutcome {
    /// Writes one audit row per user as delimited text.
    pub fn write_audit<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut f = fs::File::create(path)?;
        writeln!(
            f,
            "user_id,score,selected,candidates,added,removed,removals_skipped"
        )?;
        for a in &self.audits {
            let join = |items: &[u32]| {
                items
                    .iter()
                    .map(|&v| self.dataset.item_id(v).to_string())
                    .collect::<Vec<_>>()
                    .join(";")
            };
            writeln!(
                f,
                "{},{},{},{},{},{},{}",
                self.dataset.user_id(a.user),
                a.score,
                a.selected,
                a.candidates,
                join(&a.added),
                join(&a.removed),
                a.removals_skipped
            )?;
        }
        Ok(())
    }
}

/// Per-item signed scores oriented so that positive means stereotypical
/// for the given user group: group 0 sees the table's scores as stored,
/// group 1 sees their elementwise negation.
pub fn build_mu(table: &StereotypeTable, group: u8) -> Result<Vec<f64>> {
    match group {
        0 => Ok(table.ister_all().to_vec()),
        1 => Ok(table.ister_all().iter().map(|s| -s).collect()),
        other => Err(Error::UnknownGroup {
            label: other.to_string(),
        }),
    }
}

fn budget(profile_len: usize, rho: f64) -> usize {
    (rho * profile_len as f64).floor() as usize
}

/// Splits the budget between imputation and removal for the weighted
/// strategy: ⌈ω·n⌉ imputation candidates, the rest removal.
fn weighted_split(n: usize, omega: f64) -> (usize, usize) {
    let n_imp = (omega * n as f64).ceil() as usize;
    (n_imp.min(n), n - n_imp.min(n))
}

/// Most stereotypical profile items first: descending score, ties by
/// ascending item index.
fn ranked_removal_pool(profile: &BTreeSet<u32>, mu: &[f64]) -> Vec<u32> {
    let mut pool: Vec<u32> = profile.iter().copied().collect();
    pool.sort_by(|&a, &b| {
        mu[b as usize]
            .partial_cmp(&mu[a as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    pool
}

/// Most counter-stereotypical unseen items first: ascending score, ties
/// by ascending item index.
fn ranked_imputation_pool(num_items: usize, profile: &BTreeSet<u32>, mu: &[f64]) -> Vec<u32> {
    let mut pool: Vec<u32> = (0..num_items as u32).filter(|v| !profile.contains(v)).collect();
    pool.sort_by(|&a, &b| {
        mu[a as usize]
            .partial_cmp(&mu[b as usize])
            .unwrap()
            .then(a.cmp(&b))
    });
    pool
}

/// Ranked candidate selection: the n = ⌊ρ·|X_u|⌋ most extreme items of
/// the strategy's pool. Imputation candidates are listed before removal
/// candidates in the weighted strategy.
pub fn subsample(
    num_items: usize,
    profile: &BTreeSet<u32>,
    rho: f64,
    strategy: Strategy,
    mu: &[f64],
    omega: f64,
) -> Vec<Candidate> {
    let n = budget(profile.len(), rho);
    if n == 0 {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(n);
    let (n_imp, n_rem) = match strategy {
        Strategy::Imputation => (n, 0),
        Strategy::Removal => (0, n),
        Strategy::Weighted => weighted_split(n, omega),
    };
    if n_imp > 0 {
        for v in ranked_imputation_pool(num_items, profile, mu).into_iter().take(n_imp) {
            out.push(Candidate { item: v, op: Op::Add });
        }
    }
    if n_rem > 0 {
        for v in ranked_removal_pool(profile, mu).into_iter().take(n_rem) {
            out.push(Candidate { item: v, op: Op::Remove });
        }
    }
    out
}

/// Independent Bernoulli trial per candidate with success probability
/// |score|; one draw is consumed per candidate, in candidate order.
pub fn bernoulli_select(
    candidates: &[Candidate],
    mu: &[f64],
    rng: &mut ChaCha8Rng,
) -> Vec<Candidate> {
    candidates
        .iter()
        .filter(|c| {
            let p = mu[c.item as usize].abs();
            rng.random::<f64>() < p
        })
        .copied()
        .collect()
}

/// Deterministic sampler: every ranked candidate is chosen.
pub fn topstereo_select(candidates: &[Candidate]) -> Vec<Candidate> {
    candidates.to_vec()
}

/// Uniform sampling without replacement from the strategy's pools,
/// bypassing stereotypicality ranking and Bernoulli trials entirely.
pub fn random_select(
    num_items: usize,
    profile: &BTreeSet<u32>,
    rho: f64,
    strategy: Strategy,
    omega: f64,
    rng: &mut ChaCha8Rng,
) -> Vec<Candidate> {
    let n = budget(profile.len(), rho);
    if n == 0 {
        return Vec::new();
    }
    let (n_imp, n_rem) = match strategy {
        Strategy::Imputation => (n, 0),
        Strategy::Removal => (0, n),
        Strategy::Weighted => weighted_split(n, omega),
    };
    let mut out = Vec::with_capacity(n);
    if n_imp > 0 {
        let pool: Vec<u32> = (0..num_items as u32).filter(|v| !profile.contains(v)).collect();
        let take = n_imp.min(pool.len());
        if take > 0 {
            for i in index::sample(rng, pool.len(), take) {
                out.push(Candidate { item: pool[i], op: Op::Add });
            }
        }
    }
    if n_rem > 0 {
        let pool: Vec<u32> = profile.iter().copied().collect();
        let take = n_rem.min(pool.len());
        if take > 0 {
            for i in index::sample(rng, pool.len(), take) {
                out.push(Candidate { item: pool[i], op: Op::Remove });
            }
        }
    }
    out
}

/// Applies the chosen operations to a profile. Removals are applied
/// first, in candidate order, skipping any removal that would empty the
/// profile; additions follow. Returns the rewritten profile and the
/// number of skipped removals.
pub fn obfuscate_profile(profile: &BTreeSet<u32>, chosen: &[Candidate]) -> (BTreeSet<u32>, usize) {
    let mut out = profile.clone();
    let mut skipped = 0;
    for c in chosen.iter().filter(|c| c.op == Op::Remove) {
        debug_assert!(profile.contains(&c.item));
        if out.len() <= 1 {
            skipped += 1;
            continue;
        }
        out.remove(&c.item);
    }
    for c in chosen.iter().filter(|c| c.op == Op::Add) {
        debug_assert!(!profile.contains(&c.item));
        out.insert(c.item);
    }
    (out, skipped)
}

fn obfuscate_user(
    user: u32,
    dataset: &InteractionDataset,
    mu: &[f64],
    score: f64,
    gamma: f64,
    config: &ObfuscationConfig,
) -> (BTreeSet<u32>, UserAudit) {
    let profile = dataset.profile(user);
    if score < gamma {
        return (
            profile.clone(),
            UserAudit {
                user,
                score,
                selected: false,
                candidates: 0,
                added: Vec::new(),
                removed: Vec::new(),
                removals_skipped: 0,
            },
        );
    }
    let num_items = dataset.num_items();
    let (candidates, chosen) = match config.sampler {
        SamplerKind::SbSampling => {
            let cands = subsample(num_items, profile, config.rho, config.strategy, mu, config.omega);
            let mut rng = rng::user_stream(config.seed, user);
            let chosen = bernoulli_select(&cands, mu, &mut rng);
            (cands.len(), chosen)
        }
        SamplerKind::TopStereo => {
            let cands = subsample(num_items, profile, config.rho, config.strategy, mu, config.omega);
            let chosen = topstereo_select(&cands);
            (cands.len(), chosen)
        }
        SamplerKind::Random => {
            let mut rng = rng::user_stream(config.seed, user);
            let chosen = random_select(
                num_items,
                profile,
                config.rho,
                config.strategy,
                config.omega,
                &mut rng,
            );
            (chosen.len(), chosen)
        }
    };
    let (rewritten, skipped) = obfuscate_profile(profile, &chosen);
    let mut added: Vec<u32> = rewritten.difference(profile).copied().collect();
    let mut removed: Vec<u32> = profile.difference(&rewritten).copied().collect();
    added.sort_unstable();
    removed.sort_unstable();
    (
        rewritten,
        UserAudit {
            user,
            score,
            selected: true,
            candidates,
            added,
            removed,
            removals_skipped: skipped,
        },
    )
}

fn run(
    dataset: &InteractionDataset,
    partition: &GroupPartition,
    table: &StereotypeTable,
    config: &ObfuscationConfig,
    parallel: bool,
) -> Result<ObfuscationOutcome> {
    config.validate()?;
    let mu = [build_mu(table, 0)?, build_mu(table, 1)?];
    let mut scores = Vec::with_capacity(dataset.num_users());
    for u in 0..dataset.num_users() as u32 {
        let m = &mu[partition.group_of(u) as usize];
        scores.push(user_score(dataset.profile(u), m, config.aggregator)?);
    }
    let gamma = compute_gamma(&scores)?;

    let work = |u: u32| {
        let m = &mu[partition.group_of(u) as usize];
        obfuscate_user(u, dataset, m, scores[u as usize], gamma, config)
    };
    let results: Vec<(BTreeSet<u32>, UserAudit)> = if parallel {
        (0..dataset.num_users() as u32).into_par_iter().map(work).collect()
    } else {
        (0..dataset.num_users() as u32).map(work).collect()
    };

    let mut profiles = Vec::with_capacity(results.len());
    let mut audits = Vec::with_capacity(results.len());
    for (p, a) in results {
        profiles.push(p);
        audits.push(a);
    }
    Ok(ObfuscationOutcome {
        dataset: dataset.replace_profiles(profiles),
        gamma,
        scores,
        audits,
    })
}

/// Runs the full obfuscation pass over every user, in parallel. Output is
/// deterministic given (dataset, partition, table, config).
pub fn obfuscate_dataset(
    dataset: &InteractionDataset,
    partition: &GroupPartition,
    table: &StereotypeTable,
    config: &ObfuscationConfig,
) -> Result<ObfuscationOutcome> {
    run(dataset, partition, table, config, true)
}

/// Single-threaded reference path; produces output identical to
/// [`obfuscate_dataset`].
pub fn obfuscate_dataset_serial(
    dataset: &InteractionDataset,
    partition: &GroupPartition,
    table: &StereotypeTable,
    config: &ObfuscationConfig,
) -> Result<ObfuscationOutcome> {
    run(dataset, partition, table, config, false)
}
