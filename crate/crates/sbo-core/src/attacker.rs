//! Attribute-inference attacker: a feed-forward classifier with one
//! rectified hidden layer trained on binary user preference vectors to
//! predict the user's group, evaluated with balanced accuracy under
//! user-level cross-validation.
//!
//! The cross-entropy objective is class-weighted with w_g = N / (2·N_g)
//! to offset group imbalance. No early stopping: the fixed number of
//! epochs is trained and the final model returned.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{kfold_user_split, to_preference_vectors, GroupPartition, InteractionDataset};
use crate::error::{Error, Result};
use crate::rng;

const ADAM_BETA1: f64 = 0.9;
const ADAM_BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;
const INIT_STD: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AttackConfig {
    pub hidden: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for AttackConfig {
    fn default() -> Self {
        Self {
            hidden: 128,
            epochs: 50,
            batch_size: 64,
            learning_rate: 0.001,
            seed: 42,
        }
    }
}

impl AttackConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden < 1 {
            return Err(Error::Config("hidden size must be >= 1".into()));
        }
        if self.epochs < 1 || self.batch_size < 1 {
            return Err(Error::Config("epochs and batch size must be >= 1".into()));
        }
        if self.learning_rate <= 0.0 {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        Ok(())
    }
}

/// Two-layer network [input, hidden, 2] with rectifier activation.
/// Weights are stored row-major: `w1[h * input + j]`, `w2[c * hidden + h]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackerModel {
    pub input: usize,
    pub hidden: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
}

/// Flat gradient of all attacker parameters, in (w1, b1, w2, b2) order.
#[derive(Debug, Clone)]
pub struct AttackerGrads(pub Vec<f64>);

impl AttackerModel {
    pub fn init(input: usize, hidden: usize, seed: u64) -> Self {
        let mut rng = rng::stream(seed);
        let normal = Normal::new(0.0, INIT_STD).unwrap();
        Self {
            input,
            hidden,
            w1: (0..hidden * input).map(|_| normal.sample(&mut rng)).collect(),
            b1: vec![0.0; hidden],
            w2: (0..2 * hidden).map(|_| normal.sample(&mut rng)).collect(),
            b2: vec![0.0; 2],
        }
    }

    pub fn num_params(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Mutable view over all parameters, in (w1, b1, w2, b2) order; the
    /// same order `AttackerGrads` uses.
    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    /// Hidden activations and output logits for one input vector.
    fn forward(&self, x: &[f64]) -> (Vec<f64>, [f64; 2]) {
        let mut h = self.b1.clone();
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for k in 0..self.hidden {
                h[k] += self.w1[k * self.input + j] * xj;
            }
        }
        for v in h.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let mut z = [self.b2[0], self.b2[1]];
        for c in 0..2 {
            for k in 0..self.hidden {
                z[c] += self.w2[c * self.hidden + k] * h[k];
            }
        }
        (h, z)
    }

    /// Class probabilities (normalized exponential over the two logits)
    /// and the argmax label, ties resolved to class 0.
    pub fn predict(&self, x: &[f64]) -> Result<(u8, [f64; 2])> {
        if x.len() != self.input {
            return Err(Error::DimensionMismatch {
                expected: self.input,
                found: x.len(),
            });
        }
        let (_, z) = self.forward(x);
        let probs = softmax2(z);
        let label = u8::from(probs[1] > probs[0]);
        Ok((label, probs))
    }

    /// Mean class-weighted cross-entropy over a batch.
    pub fn weighted_ce_loss(&self, xs: &[&[f64]], ys: &[u8], weights: [f64; 2]) -> f64 {
        let mut total = 0.0;
        for (x, &y) in xs.iter().zip(ys) {
            let (_, z) = self.forward(x);
            let lse = log_sum_exp2(z);
            total += weights[y as usize] * (lse - z[y as usize]);
        }
        total / xs.len() as f64
    }

    /// Analytic gradient of [`Self::weighted_ce_loss`] via backpropagation.
    pub fn weighted_ce_grads(&self, xs: &[&[f64]], ys: &[u8], weights: [f64; 2]) -> AttackerGrads {
        let mut gw1 = vec![0.0; self.w1.len()];
        let mut gb1 = vec![0.0; self.b1.len()];
        let mut gw2 = vec![0.0; self.w2.len()];
        let mut gb2 = vec![0.0; self.b2.len()];
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let (h, z) = self.forward(x);
            let p = softmax2(z);
            let w = weights[y as usize];
            let mut dz = [p[0] * w * scale, p[1] * w * scale];
            dz[y as usize] -= w * scale;
            let mut dh = vec![0.0; self.hidden];
            for c in 0..2 {
                gb2[c] += dz[c];
                for k in 0..self.hidden {
                    gw2[c * self.hidden + k] += dz[c] * h[k];
                    dh[k] += self.w2[c * self.hidden + k] * dz[c];
                }
            }
            for k in 0..self.hidden {
                if h[k] <= 0.0 {
                    continue; // rectifier gate
                }
                gb1[k] += dh[k];
                for (j, &xj) in x.iter().enumerate() {
                    if xj != 0.0 {
                        gw1[k * self.input + j] += dh[k] * xj;
                    }
                }
            }
        }
        let mut flat = gw1;
        flat.extend(gb1);
        flat.extend(gw2);
        flat.extend(gb2);
        AttackerGrads(flat)
    }
}

fn softmax2(z: [f64; 2]) -> [f64; 2] {
    let m = z[0].max(z[1]);
    let e = [(z[0] - m).exp(), (z[1] - m).exp()];
    let s = e[0] + e[1];
    [e[0] / s, e[1] / s]
}

fn log_sum_exp2(z: [f64; 2]) -> f64 {
    let m = z[0].max(z[1]);
    m + ((z[0] - m).exp() + (z[1] - m).exp()).ln()
}

/// Inverse-frequency class weights w_g = N / (2·N_g).
pub fn class_weights(labels: &[u8]) -> Result<[f64; 2]> {
    let n1 = labels.iter().filter(|&&y| y == 1).count();
    let n0 = labels.len() - n1;
    if n0 == 0 || n1 == 0 {
        return Err(Error::DegenerateLabels);
    }
    let n = labels.len() as f64;
    Ok([n / (2.0 * n0 as f64), n / (2.0 * n1 as f64)])
}

/// Trains the attacker for the fixed number of epochs with seeded
/// mini-batch order and returns the final-epoch model.
pub fn train_attacker(
    vectors: &[Vec<f64>],
    labels: &[u8],
    cfg: &AttackConfig,
) -> Result<AttackerModel> {
    cfg.validate()?;
    if vectors.is_empty() || vectors.len() != labels.len() {
        return Err(Error::Config("vectors and labels must align and be non-empty".into()));
    }
    let input = vectors[0].len();
    let weights = class_weights(labels)?;
    let mut model = AttackerModel::init(input, cfg.hidden, cfg.seed);
    let mut adam_m = vec![0.0; model.num_params()];
    let mut adam_v = vec![0.0; model.num_params()];
    let mut rng = rng::stream(rng::derive(cfg.seed, 1));
    let mut order: Vec<usize> = (0..vectors.len()).collect();
    let mut t = 0i32;

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xs: Vec<&[f64]> = batch.iter().map(|&i| vectors[i].as_slice()).collect();
            let ys: Vec<u8> = batch.iter().map(|&i| labels[i]).collect();
            epoch_loss += model.weighted_ce_loss(&xs, &ys, weights);
            let AttackerGrads(g) = model.weighted_ce_grads(&xs, &ys, weights);
            t += 1;
            let bc1 = 1.0 - ADAM_BETA1.powi(t);
            let bc2 = 1.0 - ADAM_BETA2.powi(t);
            for (idx, p) in model.params_mut().enumerate() {
                let grad = g[idx];
                adam_m[idx] = ADAM_BETA1 * adam_m[idx] + (1.0 - ADAM_BETA1) * grad;
                adam_v[idx] = ADAM_BETA2 * adam_v[idx] + (1.0 - ADAM_BETA2) * grad * grad;
                *p -= cfg.learning_rate * (adam_m[idx] / bc1) / ((adam_v[idx] / bc2).sqrt() + ADAM_EPS);
            }
        }
        if !epoch_loss.is_finite() {
            return Err(Error::Divergence { epoch });
        }
    }
    Ok(model)
}

/// Mean of per-class recalls. Requires both classes present in `labels`.
pub fn balanced_accuracy(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    let mut hit = [0usize; 2];
    let mut total = [0usize; 2];
    for (&p, &y) in predictions.iter().zip(labels) {
        total[y as usize] += 1;
        if p == y {
            hit[y as usize] += 1;
        }
    }
    if total[0] == 0 || total[1] == 0 {
        return Err(Error::DegenerateLabels);
    }
    Ok((hit[0] as f64 / total[0] as f64 + hit[1] as f64 / total[1] as f64) / 2.0)
}

/// Result of a cross-validated attack.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackOutcome {
    pub fold_baccs: Vec<f64>,
    pub mean_bacc: f64,
    pub skipped_folds: usize,
}

/// User-level k-fold attack: per fold, train on the train-users'
/// preference vectors and report balanced accuracy on the test users.
/// Folds missing a class on either side are skipped; it is an error if
/// every fold skips.
pub fn run_attack_cv(
    dataset: &InteractionDataset,
    partition: &GroupPartition,
    cfg: &AttackConfig,
    folds: usize,
    seed: u64,
) -> Result<AttackOutcome> {
    let vectors = to_preference_vectors(dataset, dataset.num_items())?;
    let users: Vec<u32> = (0..dataset.num_users() as u32).collect();
    let mut fold_baccs = Vec::new();
    let mut skipped = 0;
    for (f, (train_users, test_users)) in kfold_user_split(&users, folds, seed)?.into_iter().enumerate() {
        let has_both = |us: &[u32]| {
            us.iter().any(|&u| partition.group_of(u) == 0)
                && us.iter().any(|&u| partition.group_of(u) == 1)
        };
        if !has_both(&train_users) || !has_both(&test_users) {
            skipped += 1;
            continue;
        }
        let train_x: Vec<Vec<f64>> = train_users.iter().map(|&u| vectors[u as usize].clone()).collect();
        let train_y: Vec<u8> = train_users.iter().map(|&u| partition.group_of(u)).collect();
        let fold_cfg = AttackConfig {
            seed: rng::derive(cfg.seed, f as u64),
            ..cfg.clone()
        };
        let model = train_attacker(&train_x, &train_y, &fold_cfg)?;
        let mut preds = Vec::with_capacity(test_users.len());
        let mut truth = Vec::with_capacity(test_users.len());
        for &u in &test_users {
            let (label, _) = model.predict(&vectors[u as usize])?;
            preds.push(label);
            truth.push(partition.group_of(u));
        }
        fold_baccs.push(balanced_accuracy(&preds, &truth)?);
    }
    if fold_baccs.is_empty() {
        return Err(Error::AllFoldsSkipped);
    }
    let mean_bacc = fold_baccs.iter().sum::<f64>() / fold_baccs.len() as f64;
    Ok(AttackOutcome {
        fold_baccs,
        mean_bacc,
        skipped_folds: skipped,
    })
}
