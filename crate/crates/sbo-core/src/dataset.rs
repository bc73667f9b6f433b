//! Implicit-feedback interaction data: loading, validation, k-core
//! filtering, per-user holdout splits, user cross-validation folds and
//! preference-vector export.
//!
//! External ids are remapped to dense 0-based indices at load time, in
//! order of first appearance. All types are immutable after construction.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::{index, SliceRandom};

use crate::error::{Error, Result};
use crate::rng;

/// Delimiter handling for interaction and attribute files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    #[default]
    Auto,
    Comma,
    Tab,
}

impl Delimiter {
    fn resolve(self, header: &str) -> char {
        match self {
            Delimiter::Comma => ',',
            Delimiter::Tab => '\t',
            Delimiter::Auto => {
                if header.contains('\t') {
                    '\t'
                } else {
                    ','
                }
            }
        }
    }
}

/// A set of observed (user, item) interactions over dense catalogs.
///
/// Profiles are per-user sets of item indices. Derived datasets (splits,
/// obfuscated copies) share the catalogs of their source and may contain
/// users or items without interactions; freshly loaded datasets never do.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InteractionDataset {
    users: Vec<String>,
    items: Vec<String>,
    profiles: Vec<BTreeSet<u32>>,
}

impl InteractionDataset {
    /// Builds a dataset from raw (user, item) id pairs, de-duplicating and
    /// assigning dense indices in order of first appearance.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String)>,
    {
        let mut user_index: HashMap<String, u32> = HashMap::new();
        let mut item_index: HashMap<String, u32> = HashMap::new();
        let mut users = Vec::new();
        let mut items = Vec::new();
        let mut profiles: Vec<BTreeSet<u32>> = Vec::new();

        for (user, item) in pairs {
            let u = *user_index.entry(user.clone()).or_insert_with(|| {
                users.push(user);
                profiles.push(BTreeSet::new());
                (users.len() - 1) as u32
            });
            let v = *item_index.entry(item.clone()).or_insert_with(|| {
                items.push(item);
                (items.len() - 1) as u32
            });
            profiles[u as usize].insert(v);
        }

        if users.is_empty() {
            return Err(Error::EmptyInput);
        }
        Ok(Self { users, items, profiles })
    }

    /// Derived dataset sharing the given catalogs.
    pub(crate) fn with_profiles(
        users: Vec<String>,
        items: Vec<String>,
        profiles: Vec<BTreeSet<u32>>,
    ) -> Self {
        debug_assert_eq!(users.len(), profiles.len());
        Self { users, items, profiles }
    }

    /// Copy of this dataset with the given per-user profiles, same catalogs.
    pub(crate) fn replace_profiles(&self, profiles: Vec<BTreeSet<u32>>) -> Self {
        Self::with_profiles(self.users.clone(), self.items.clone(), profiles)
    }

    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn num_interactions(&self) -> usize {
        self.profiles.iter().map(|p| p.len()).sum()
    }

    pub fn user_id(&self, u: u32) -> &str {
        &self.users[u as usize]
    }

    pub fn item_id(&self, v: u32) -> &str {
        &self.items[v as usize]
    }

    pub fn user_ids(&self) -> &[String] {
        &self.users
    }

    pub fn item_ids(&self) -> &[String] {
        &self.items
    }

    /// The set of item indices user `u` interacted with (X_u).
    pub fn profile(&self, u: u32) -> &BTreeSet<u32> {
        &self.profiles[u as usize]
    }

    pub fn profiles(&self) -> &[BTreeSet<u32>] {
        &self.profiles
    }

    /// Iterates all (user, item) index pairs in user order, items ascending.
    pub fn pairs(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.profiles
            .iter()
            .enumerate()
            .flat_map(|(u, p)| p.iter().map(move |&v| (u as u32, v)))
    }

    /// Union of interactions of two datasets over identical catalogs.
    pub fn union(&self, other: &Self) -> Result<Self> {
        if self.users != other.users || self.items != other.items {
            return Err(Error::Config(
                "cannot union datasets with different catalogs".into(),
            ));
        }
        let profiles = self
            .profiles
            .iter()
            .zip(&other.profiles)
            .map(|(a, b)| a.union(b).copied().collect())
            .collect();
        Ok(self.replace_profiles(profiles))
    }

    /// Writes the dataset as delimited text with a `user_id,item_id` header.
    pub fn write_interactions<P: AsRef<Path>>(&self, path: P, delimiter: char) -> Result<()> {
        let mut out = String::new();
        out.push_str(&format!("user_id{delimiter}item_id\n"));
        for (u, v) in self.pairs() {
            out.push_str(self.user_id(u));
            out.push(delimiter);
            out.push_str(self.item_id(v));
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    /// Writes `internal_index,external_id` maps for both catalogs.
    pub fn write_id_maps<P: AsRef<Path>>(&self, user_map: P, item_map: P) -> Result<()> {
        for (path, catalog) in [(user_map, &self.users), (item_map, &self.items)] {
            let mut f = fs::File::create(path)?;
            writeln!(f, "internal_index,external_id")?;
            for (i, id) in catalog.iter().enumerate() {
                writeln!(f, "{i},{id}")?;
            }
        }
        Ok(())
    }
}

/// Assignment of every dataset user to one of exactly two groups.
///
/// The label order is canonical: fixed at load time by first appearance
/// in the attribute file. Group 0 is the first label of that order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    labels: [String; 2],
    assignment: Vec<u8>,
}

impl GroupPartition {
    pub fn new(labels: [String; 2], assignment: Vec<u8>) -> Result<Self> {
        if labels[0] == labels[1] {
            return Err(Error::Config("group labels must differ".into()));
        }
        for g in 0..2u8 {
            if !assignment.iter().any(|&a| a == g) {
                return Err(Error::EmptyGroup {
                    label: labels[g as usize].clone(),
                });
            }
        }
        if assignment.iter().any(|&a| a > 1) {
            return Err(Error::Config("group tags must be 0 or 1".into()));
        }
        Ok(Self { labels, assignment })
    }

    pub fn labels(&self) -> &[String; 2] {
        &self.labels
    }

    /// Group tag (0 or 1) of user `u`.
    pub fn group_of(&self, u: u32) -> u8 {
        self.assignment[u as usize]
    }

    pub fn assignment(&self) -> &[u8] {
        &self.assignment
    }

    pub fn group_size(&self, g: u8) -> usize {
        self.assignment.iter().filter(|&&a| a == g).count()
    }

    pub fn num_users(&self) -> usize {
        self.assignment.len()
    }

    /// Writes `user_id,label` rows for the users of `dataset`.
    pub fn write_attributes<P: AsRef<Path>>(
        &self,
        dataset: &InteractionDataset,
        path: P,
    ) -> Result<()> {
        let mut out = String::from("user_id,label\n");
        for u in 0..self.assignment.len() {
            out.push_str(dataset.user_id(u as u32));
            out.push(',');
            out.push_str(&self.labels[self.assignment[u] as usize]);
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }
}

/// Per-user holdout split parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub fraction: f64,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(fraction: f64, seed: u64) -> Result<Self> {
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(Error::Config(format!(
                "holdout fraction must lie in (0, 1), got {fraction}"
            )));
        }
        Ok(Self { fraction, seed })
    }
}

fn read_rows(path: &Path, delimiter: Delimiter) -> Result<(char, Vec<(usize, Vec<String>)>)> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
    let delim = delimiter.resolve(header);
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        rows.push((i + 1, line.split(delim).map(|s| s.trim().to_string()).collect()));
    }
    Ok((delim, rows))
}

/// Loads delimited interaction data. Extra columns (ratings, timestamps)
/// are ignored; all retained rows count as positive implicit feedback.
pub fn load_interactions<P: AsRef<Path>>(
    path: P,
    delimiter: Delimiter,
) -> Result<InteractionDataset> {
    let (_, rows) = read_rows(path.as_ref(), delimiter)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut pairs = Vec::with_capacity(rows.len());
    for (line, fields) in rows {
        if fields.len() < 2 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("expected at least 2 fields, got {}", fields.len()),
            });
        }
        pairs.push((fields[0].clone(), fields[1].clone()));
    }
    InteractionDataset::from_pairs(pairs)
}

/// Loads user attribute labels and aligns them with the dataset catalog.
///
/// Returns the partition and the number of attribute rows that referenced
/// users absent from the dataset (ignored).
pub fn load_user_attributes<P: AsRef<Path>>(
    path: P,
    dataset: &InteractionDataset,
) -> Result<(GroupPartition, usize)> {
    let (_, rows) = read_rows(path.as_ref(), Delimiter::Auto)?;
    let mut label_order: Vec<String> = Vec::new();
    let mut by_user: HashMap<String, u8> = HashMap::new();
    for (line, fields) in rows {
        if fields.len() < 2 || fields[0].is_empty() || fields[1].is_empty() {
            return Err(Error::Parse {
                line,
                message: format!("expected 2 fields, got {}", fields.len()),
            });
        }
        let label = &fields[1];
        let tag = match label_order.iter().position(|l| l == label) {
            Some(i) => i,
            None => {
                label_order.push(label.clone());
                label_order.len() - 1
            }
        };
        if tag > 1 {
            return Err(Error::LabelCardinality {
                found: label_order.len(),
            });
        }
        by_user.insert(fields[0].clone(), tag as u8);
    }
    if label_order.len() < 2 {
        return Err(Error::LabelCardinality {
            found: label_order.len(),
        });
    }

    let mut assignment = Vec::with_capacity(dataset.num_users());
    let mut missing: Vec<&str> = Vec::new();
    for u in 0..dataset.num_users() {
        match by_user.get(dataset.user_id(u as u32)) {
            Some(&g) => assignment.push(g),
            None => missing.push(dataset.user_id(u as u32)),
        }
    }
    if let Some(first) = missing.first() {
        return Err(Error::AttributeCoverage {
            count: missing.len(),
            first: (*first).to_string(),
        });
    }
    let ignored = by_user
        .keys()
        .filter(|id| !dataset.user_ids().contains(id))
        .count();
    let labels = [label_order[0].clone(), label_order[1].clone()];
    Ok((GroupPartition::new(labels, assignment)?, ignored))
}

/// Maximal k-core: iteratively removes users and items with fewer than `k`
/// interactions until a fixed point. Catalogs are compacted, preserving
/// original order.
pub fn k_core_filter(dataset: &InteractionDataset, k: u32) -> Result<InteractionDataset> {
    let n = dataset.num_users();
    let m = dataset.num_items();
    let mut alive_u = vec![true; n];
    let mut alive_v = vec![true; m];

    loop {
        let mut item_deg = vec![0u32; m];
        for u in 0..n {
            if !alive_u[u] {
                continue;
            }
            for &v in dataset.profile(u as u32) {
                if alive_v[v as usize] {
                    item_deg[v as usize] += 1;
                }
            }
        }
        let mut changed = false;
        for v in 0..m {
            if alive_v[v] && item_deg[v] < k {
                alive_v[v] = false;
                changed = true;
            }
        }
        for u in 0..n {
            if !alive_u[u] {
                continue;
            }
            let deg = dataset
                .profile(u as u32)
                .iter()
                .filter(|&&v| alive_v[v as usize])
                .count() as u32;
            if deg < k {
                alive_u[u] = false;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }

    let mut item_remap = vec![u32::MAX; m];
    let mut items = Vec::new();
    for v in 0..m {
        if alive_v[v] {
            item_remap[v] = items.len() as u32;
            items.push(dataset.item_id(v as u32).to_string());
        }
    }
    let mut users = Vec::new();
    let mut profiles = Vec::new();
    for u in 0..n {
        if !alive_u[u] {
            continue;
        }
        users.push(dataset.user_id(u as u32).to_string());
        profiles.push(
            dataset
                .profile(u as u32)
                .iter()
                .filter(|&&v| alive_v[v as usize])
                .map(|&v| item_remap[v as usize])
                .collect(),
        );
    }
    if users.is_empty() || items.is_empty() {
        return Err(Error::EmptyCore { k });
    }
    Ok(InteractionDataset::with_profiles(users, items, profiles))
}

fn holdout_size(profile_len: usize, fraction: f64) -> usize {
    ((fraction * profile_len as f64).floor() as usize).max(1)
}

/// Per-user holdout: samples ⌊fraction·|X_u|⌋ items (at least 1) into the
/// holdout without replacement, using a dedicated per-user stream of
/// `spec.seed`. Errors on single-interaction users.
pub fn split_per_user(
    dataset: &InteractionDataset,
    spec: &SplitSpec,
) -> Result<(InteractionDataset, InteractionDataset)> {
    split_per_user_inner(dataset, spec, false)
}

/// Like [`split_per_user`], but users with fewer than 2 interactions are
/// retained whole instead of raising an error. Used when re-slicing
/// obfuscated data, where removal may shrink a profile to one item.
pub fn split_per_user_lenient(
    dataset: &InteractionDataset,
    spec: &SplitSpec,
) -> Result<(InteractionDataset, InteractionDataset)> {
    split_per_user_inner(dataset, spec, true)
}

fn split_per_user_inner(
    dataset: &InteractionDataset,
    spec: &SplitSpec,
    lenient: bool,
) -> Result<(InteractionDataset, InteractionDataset)> {
    SplitSpec::new(spec.fraction, spec.seed)?;
    let mut retained = Vec::with_capacity(dataset.num_users());
    let mut holdout = Vec::with_capacity(dataset.num_users());
    for u in 0..dataset.num_users() as u32 {
        let items: Vec<u32> = dataset.profile(u).iter().copied().collect();
        if items.len() < 2 {
            if lenient {
                retained.push(items.into_iter().collect());
                holdout.push(BTreeSet::new());
                continue;
            }
            return Err(Error::SplitInfeasible {
                user: dataset.user_id(u).to_string(),
            });
        }
        let n_hold = holdout_size(items.len(), spec.fraction);
        let mut rng = rng::user_stream(spec.seed, u);
        let picked: BTreeSet<usize> = index::sample(&mut rng, items.len(), n_hold)
            .into_iter()
            .collect();
        let mut ret = BTreeSet::new();
        let mut hold = BTreeSet::new();
        for (i, &v) in items.iter().enumerate() {
            if picked.contains(&i) {
                hold.insert(v);
            } else {
                ret.insert(v);
            }
        }
        retained.push(ret);
        holdout.push(hold);
    }
    Ok((
        dataset.replace_profiles(retained),
        dataset.replace_profiles(holdout),
    ))
}

/// Shuffles users by seed and partitions them into `folds` near-equal test
/// sets; each fold's train set is the complement. Both sides are returned
/// sorted ascending.
pub fn kfold_user_split(
    users: &[u32],
    folds: usize,
    seed: u64,
) -> Result<Vec<(Vec<u32>, Vec<u32>)>> {
    if folds < 2 || folds > users.len() {
        return Err(Error::FoldInfeasible {
            folds,
            users: users.len(),
        });
    }
    let mut shuffled = users.to_vec();
    let mut rng = rng::stream(seed);
    shuffled.shuffle(&mut rng);

    let base = users.len() / folds;
    let extra = users.len() % folds;
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for f in 0..folds {
        let size = base + usize::from(f < extra);
        let mut test: Vec<u32> = shuffled[start..start + size].to_vec();
        let mut train: Vec<u32> = shuffled[..start]
            .iter()
            .chain(&shuffled[start + size..])
            .copied()
            .collect();
        test.sort_unstable();
        train.sort_unstable();
        out.push((train, test));
        start += size;
    }
    Ok(out)
}

/// Binary multi-hot preference vectors over a fixed item universe.
///
/// The universe size is pinned to the original catalog so obfuscated
/// datasets export identically shaped vectors.
pub fn to_preference_vectors(
    dataset: &InteractionDataset,
    universe: usize,
) -> Result<Vec<Vec<f64>>> {
    let mut rows = Vec::with_capacity(dataset.num_users());
    for u in 0..dataset.num_users() as u32 {
        let mut row = vec![0.0; universe];
        for &v in dataset.profile(u) {
            if v as usize >= universe {
                return Err(Error::ItemOutOfRange { index: v, universe });
            }
            row[v as usize] = 1.0;
        }
        rows.push(row);
    }
    Ok(rows)
}
