//! Planted-stereotype synthetic data generator.
//!
//! Users come in cross-group twin pairs. Each pair draws one set of
//! shared-pool items consumed identically by both twins, plus a set of
//! marker indices resolved against each twin's own group-exclusive
//! marker pool. Mirroring makes every shared item's consumption exactly
//! balanced across groups, so the only population-level group signal is
//! the marker tier, whose strength is controlled by `marker_draws`.
//! Shared items still pick up small sample-level imbalances from any
//! later subsetting (e.g. holdout splits), but carry no planted signal.

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::dataset::{GroupPartition, InteractionDataset};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub users_per_group: usize,
    /// Size of each group's exclusive marker pool.
    pub marker_items_per_group: usize,
    /// Size of the shared, group-neutral pool.
    pub shared_items: usize,
    /// Marker interactions per user; the planted signal strength.
    pub marker_draws: usize,
    /// Shared interactions per user, identical within a twin pair.
    pub shared_draws: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            users_per_group: 150,
            marker_items_per_group: 20,
            shared_items: 560,
            marker_draws: 6,
            shared_draws: 74,
            seed: 42,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users_per_group == 0 {
            return Err(Error::Config("users_per_group must be >= 1".into()));
        }
        if self.marker_draws > self.marker_items_per_group {
            return Err(Error::Config("marker_draws exceeds the marker pool".into()));
        }
        if self.shared_draws > self.shared_items {
            return Err(Error::Config("shared_draws exceeds the shared pool".into()));
        }
        if self.marker_draws + self.shared_draws == 0 {
            return Err(Error::Config("users need at least one draw".into()));
        }
        Ok(())
    }

    pub fn num_items(&self) -> usize {
        2 * self.marker_items_per_group + self.shared_items
    }

    pub fn draws_per_user(&self) -> usize {
        self.marker_draws + self.shared_draws
    }
}

/// Generates the planted-stereotype dataset and its group partition.
/// Item layout: [markers g0][markers g1][shared]. Deterministic given
/// the config; each twin pair draws from a dedicated stream.
pub fn generate(cfg: &SynthConfig) -> Result<(InteractionDataset, GroupPartition)> {
    cfg.validate()?;
    let m = cfg.marker_items_per_group as u32;
    let mut pairs: Vec<(String, String)> = Vec::new();

    for i in 0..cfg.users_per_group as u32 {
        let mut r = rng::user_stream(cfg.seed, i);
        let marker_idx = index::sample(&mut r, cfg.marker_items_per_group, cfg.marker_draws);
        let shared_idx = index::sample(&mut r, cfg.shared_items, cfg.shared_draws);

        let twins = [i, i + cfg.users_per_group as u32];
        for (g, &u) in twins.iter().enumerate() {
            let user = format!("u{u:04}");
            for k in marker_idx.iter() {
                let v = g as u32 * m + k as u32;
                pairs.push((user.clone(), format!("v{v:04}")));
            }
            for k in shared_idx.iter() {
                let v = 2 * m + k as u32;
                pairs.push((user.clone(), format!("v{v:04}")));
            }
        }
    }

    let dataset = InteractionDataset::from_pairs(pairs)?;
    let assignment: Vec<u8> = (0..dataset.num_users())
        .map(|i| {
            let raw: usize = dataset.user_id(i as u32)[1..].parse().unwrap();
            u8::from(raw >= cfg.users_per_group)
        })
        .collect();
    let partition = GroupPartition::new(["g0".into(), "g1".into()], assignment)?;
    Ok((dataset, partition))
}
