//! BPR-MF: matrix factorization trained with a pairwise ranking
//! objective, plus top-k ranking evaluation with NDCG.
//!
//! Training maximizes ln σ(score(u, v⁺) − score(u, v⁻)) over sampled
//! triples with L2 regularization, using adaptive-moment updates applied
//! lazily to the embedding rows touched by each mini-batch. Early
//! stopping monitors validation NDCG@10 and returns the best checkpoint.
//! Training is single-threaded so a fixed seed reproduces the model
//! exactly.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::InteractionDataset;
use crate::error::{Error, Result};
use crate::rng;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const INIT_STD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub patience: usize,
    pub seed: u64,
    pub dim: usize,
    pub l2: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 0.001,
            batch_size: 512,
            patience: 10,
            seed: 42,
            dim: 64,
            l2: 1e-4,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.patience < 1 {
            return Err(Error::Config("patience must be >= 1".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.batch_size < 1 || self.dim < 1 {
            return Err(Error::Config("batch size and dim must be >= 1".into()));
        }
        Ok(())
    }
}

/// Learned user and item embeddings; score(u, v) is their dot product.
#[derive(Debug, Clone, PartialEq)]
pub struct BprModel {
    pub dim: usize,
    user_factors: Vec<f64>,
    item_factors: Vec<f64>,
    num_users: usize,
    num_items: usize,
}

impl BprModel {
    pub fn num_users(&self) -> usize {
        self.num_users
    }

    pub fn num_items(&self) -> usize {
        self.num_items
    }

    pub fn user_factors(&self, u: u32) -> &[f64] {
        let s = u as usize * self.dim;
        &self.user_factors[s..s + self.dim]
    }

    pub fn item_factors(&self, v: u32) -> &[f64] {
        let s = v as usize * self.dim;
        &self.item_factors[s..s + self.dim]
    }

    pub fn score(&self, u: u32, v: u32) -> f64 {
        dot(self.user_factors(u), self.item_factors(v))
    }

    /// Writes the model as a text checkpoint: a header line recording
    /// `dim num_users num_items seed`, then one factor row per user and
    /// per item.
    pub fn save<P: AsRef<Path>>(&self, path: P, seed: u64) -> Result<()> {
        let mut out = format!("bpr {} {} {} {}\n", self.dim, self.num_users, self.num_items, seed);
        for row in self.user_factors.chunks(self.dim).chain(self.item_factors.chunks(self.dim)) {
            let line: Vec<String> = row.iter().map(|x| format!("{x:.17e}")).collect();
            out.push_str(&line.join(" "));
            out.push('\n');
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load<P: AsRef<Path>>(path: P) -> Result<(Self, u64)> {
        let text = fs::read_to_string(path)?;
        let mut lines = text.lines();
        let header = lines.next().ok_or(Error::EmptyInput)?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "bpr" {
            return Err(Error::Parse {
                line: 1,
                message: "bad checkpoint header".into(),
            });
        }
        let parse = |s: &str| {
            s.parse::<usize>().map_err(|e| Error::Parse {
                line: 1,
                message: e.to_string(),
            })
        };
        let dim = parse(parts[1])?;
        let num_users = parse(parts[2])?;
        let num_items = parse(parts[3])?;
        let seed = parts[4].parse::<u64>().map_err(|e| Error::Parse {
            line: 1,
            message: e.to_string(),
        })?;
        let mut values = Vec::with_capacity((num_users + num_items) * dim);
        for (i, line) in lines.enumerate() {
            for tok in line.split_whitespace() {
                values.push(tok.parse::<f64>().map_err(|e| Error::Parse {
                    line: i + 2,
                    message: e.to_string(),
                })?);
            }
        }
        if values.len() != (num_users + num_items) * dim {
            return Err(Error::Parse {
                line: 1,
                message: "checkpoint size mismatch".into(),
            });
        }
        let item_factors = values.split_off(num_users * dim);
        Ok((
            Self {
                dim,
                user_factors: values,
                item_factors,
                num_users,
                num_items,
            },
            seed,
        ))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Pairwise loss for one (user, positive, negative) triple:
/// −ln σ(x_uij) + λ(‖p_u‖² + ‖q_i‖² + ‖q_j‖²).
pub fn bpr_triple_loss(pu: &[f64], qi: &[f64], qj: &[f64], l2: f64) -> f64 {
    let x = dot(pu, qi) - dot(pu, qj);
    let reg: f64 = pu.iter().chain(qi).chain(qj).map(|v| v * v).sum();
    // ln(1 + e^{-x}) computed stably
    let nll = if x > 0.0 {
        (-x).exp().ln_1p()
    } else {
        -x + x.exp().ln_1p()
    };
    nll + l2 * reg
}

/// Analytic gradients of [`bpr_triple_loss`] with respect to the three
/// embedding rows.
pub fn bpr_triple_grads(
    pu: &[f64],
    qi: &[f64],
    qj: &[f64],
    l2: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let x = dot(pu, qi) - dot(pu, qj);
    let coeff = sigmoid(x) - 1.0; // d(−ln σ(x))/dx
    let gp: Vec<f64> = pu
        .iter()
        .zip(qi.iter().zip(qj))
        .map(|(&p, (&i, &j))| coeff * (i - j) + 2.0 * l2 * p)
        .collect();
    let gi: Vec<f64> = qi.iter().zip(pu).map(|(&i, &p)| coeff * p + 2.0 * l2 * i).collect();
    let gj: Vec<f64> = qj.iter().zip(pu).map(|(&j, &p)| -coeff * p + 2.0 * l2 * j).collect();
    (gp, gi, gj)
}

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(len: usize) -> Self {
        Self { m: vec![0.0; len], v: vec![0.0; len] }
    }

    fn update_row(&mut self, params: &mut [f64], start: usize, grad: &[f64], lr: f64, t: i32) {
        let bc1 = 1.0 - ADAM_BETA1.powi(t);
        let bc2 = 1.0 - ADAM_BETA2.powi(t);
        for (k, &g) in grad.iter().enumerate() {
            let idx = start + k;
            self.m[idx] = ADAM_BETA1 * self.m[idx] + (1.0 - ADAM_BETA1) * g;
            self.v[idx] = ADAM_BETA2 * self.v[idx] + (1.0 - ADAM_BETA2) * g * g;
            let mhat = self.m[idx] / bc1;
            let vhat = self.v[idx] / bc2;
            params[idx] -= lr * mhat / (vhat.sqrt() + ADAM_EPS);
        }
    }
}

/// Trains BPR-MF on `train`, early-stopping on validation NDCG@10 with
/// the configured patience, and returns the best checkpoint.
pub fn train_bpr(
    train: &InteractionDataset,
    validation: &InteractionDataset,
    cfg: &TrainConfig,
) -> Result<BprModel> {
    cfg.validate()?;
    let interactions: Vec<(u32, u32)> = train.pairs().collect();
    if interactions.is_empty() {
        return Err(Error::EmptyInput);
    }
    for u in 0..validation.num_users() as u32 {
        if !validation.profile(u).is_empty() && train.profile(u).is_empty() {
            return Err(Error::Config(format!(
                "validation user '{}' has no training interactions",
                validation.user_id(u)
            )));
        }
    }

    let n_users = train.num_users();
    let n_items = train.num_items();
    let dim = cfg.dim;
    let mut rng = rng::stream(cfg.seed);
    let normal = Normal::new(0.0, INIT_STD).unwrap();
    let mut user_factors: Vec<f64> = (0..n_users * dim).map(|_| normal.sample(&mut rng)).collect();
    let mut item_factors: Vec<f64> = (0..n_items * dim).map(|_| normal.sample(&mut rng)).collect();

    let mut user_adam = Adam::new(user_factors.len());
    let mut item_adam = Adam::new(item_factors.len());

    let steps_per_epoch = interactions.len().div_ceil(cfg.batch_size);
    let mut t = 0i32;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut epochs_without_improvement = 0;

    for epoch in 1..=cfg.epochs {
        let mut epoch_loss = 0.0;
        for _ in 0..steps_per_epoch {
            let mut ugrads: HashMap<u32, Vec<f64>> = HashMap::new();
            let mut igrads: HashMap<u32, Vec<f64>> = HashMap::new();
            for _ in 0..cfg.batch_size {
                let &(u, i) = &interactions[rng.random_range(0..interactions.len())];
                let profile = train.profile(u);
                if profile.len() >= n_items {
                    continue; // no negative item exists for this user
                }
                let j = loop {
                    let j = rng.random_range(0..n_items as u32);
                    if !profile.contains(&j) {
                        break j;
                    }
                };
                let pu = &user_factors[u as usize * dim..(u as usize + 1) * dim];
                let qi = &item_factors[i as usize * dim..(i as usize + 1) * dim];
                let qj = &item_factors[j as usize * dim..(j as usize + 1) * dim];
                epoch_loss += bpr_triple_loss(pu, qi, qj, cfg.l2);
                let (gp, gi, gj) = bpr_triple_grads(pu, qi, qj, cfg.l2);
                add_into(ugrads.entry(u).or_insert_with(|| vec![0.0; dim]), &gp);
                add_into(igrads.entry(i).or_insert_with(|| vec![0.0; dim]), &gi);
                add_into(igrads.entry(j).or_insert_with(|| vec![0.0; dim]), &gj);
            }
            t += 1;
            let scale = 1.0 / cfg.batch_size as f64;
            let mut urows: Vec<u32> = ugrads.keys().copied().collect();
            urows.sort_unstable();
            for u in urows {
                let mut g = ugrads.remove(&u).unwrap();
                g.iter_mut().for_each(|x| *x *= scale);
                user_adam.update_row(&mut user_factors, u as usize * dim, &g, cfg.learning_rate, t);
            }
            let mut irows: Vec<u32> = igrads.keys().copied().collect();
            irows.sort_unstable();
            for v in irows {
                let mut g = igrads.remove(&v).unwrap();
                g.iter_mut().for_each(|x| *x *= scale);
                item_adam.update_row(&mut item_factors, v as usize * dim, &g, cfg.learning_rate, t);
            }
        }
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }

        let model = BprModel {
            dim,
            user_factors: user_factors.clone(),
            item_factors: item_factors.clone(),
            num_users: n_users,
            num_items: n_items,
        };
        let val_ndcg = evaluate_model(&model, validation, train.profiles(), 10);
        let improved = best.as_ref().map_or(true, |(b, _, _)| val_ndcg > *b);
        if improved {
            best = Some((val_ndcg, user_factors.clone(), item_factors.clone()));
            epochs_without_improvement = 0;
        } else {
            epochs_without_improvement += 1;
            if epochs_without_improvement >= cfg.patience {
                break;
            }
        }
    }

    let (_, user_factors, item_factors) = best.unwrap();
    Ok(BprModel {
        dim,
        user_factors,
        item_factors,
        num_users: n_users,
        num_items: n_items,
    })
}

fn add_into(acc: &mut [f64], g: &[f64]) {
    for (a, &b) in acc.iter_mut().zip(g) {
        *a += b;
    }
}

/// The k highest-scoring items for `user` outside `exclude`, descending
/// score, ties broken by ascending item index.
pub fn recommend_topk(model: &BprModel, user: u32, k: usize, exclude: &BTreeSet<u32>) -> Vec<u32> {
    let mut scored: Vec<(f64, u32)> = (0..model.num_items() as u32)
        .filter(|v| !exclude.contains(v))
        .map(|v| (model.score(user, v), v))
        .collect();
    scored.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
    scored.into_iter().take(k).map(|(_, v)| v).collect()
}

/// NDCG with binary relevance over the top k ranks; the ideal DCG places
/// min(|relevant|, k) hits at the leading ranks. Zero when `relevant` is
/// empty.
pub fn ndcg_at_k(ranked: &[u32], relevant: &BTreeSet<u32>, k: usize) -> f64 {
    if relevant.is_empty() {
        return 0.0;
    }
    let dcg: f64 = ranked
        .iter()
        .take(k)
        .enumerate()
        .filter(|(_, v)| relevant.contains(v))
        .map(|(i, _)| 1.0 / ((i + 2) as f64).log2())
        .sum();
    let idcg: f64 = (0..relevant.len().min(k))
        .map(|i| 1.0 / ((i + 2) as f64).log2())
        .sum();
    dcg / idcg
}

/// Mean NDCG@k over users with non-empty test profiles, excluding each
/// user's seen items from the ranking. Returns 0 when no user has test
/// interactions.
pub fn evaluate_model(
    model: &BprModel,
    test: &InteractionDataset,
    seen: &[BTreeSet<u32>],
    k: usize,
) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    for u in 0..test.num_users() as u32 {
        let relevant = test.profile(u);
        if relevant.is_empty() {
            continue;
        }
        let ranked = recommend_topk(model, u, k, &seen[u as usize]);
        total += ndcg_at_k(&ranked, relevant, k);
        count += 1;
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}
