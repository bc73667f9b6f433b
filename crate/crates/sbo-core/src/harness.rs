//! End-to-end experiment orchestration: filter, split, score, obfuscate,
//! re-split, train the recommender, attack, and emit trade-off reports.
//!
//! The test set is carved from the filtered dataset before any
//! obfuscation and never modified afterwards. Obfuscation operates on
//! the train+validation concatenation, which is then re-sliced with a
//! dedicated seed (imputation changes profile sizes, so the original
//! index-based split cannot be reused). Recommendation accuracy is
//! always measured against the untouched original test interactions.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::attacker::{run_attack_cv, AttackConfig};
use crate::dataset::{
    k_core_filter, load_interactions, load_user_attributes, split_per_user,
    split_per_user_lenient, Delimiter, GroupPartition, InteractionDataset, SplitSpec,
};
use crate::error::{Error, Result};
use crate::obfuscation::{obfuscate_dataset, ObfuscationConfig, SamplerKind, Strategy};
use crate::recommender::{evaluate_model, train_bpr, TrainConfig};
use crate::stereotype::{Aggregator, StereotypeTable};

fn default_core_k() -> u32 {
    5
}
fn default_fraction() -> f64 {
    0.2
}
fn default_folds() -> usize {
    5
}
fn default_omega() -> f64 {
    0.5
}

/// Full experiment description, loadable from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub interactions: PathBuf,
    pub attributes: PathBuf,
    #[serde(default = "default_core_k")]
    pub core_k: u32,
    #[serde(default = "default_fraction")]
    pub holdout_fraction: f64,
    #[serde(default)]
    pub test_seed: u64,
    #[serde(default)]
    pub val_seed: u64,
    /// Seed for re-slicing the obfuscated train+validation data.
    #[serde(default)]
    pub reslice_seed: u64,
    #[serde(default)]
    pub obfuscation_seed: u64,
    #[serde(default)]
    pub attack_fold_seed: u64,
    pub strategies: Vec<Strategy>,
    pub samplers: Vec<SamplerKind>,
    pub rhos: Vec<f64>,
    pub aggregators: Vec<Aggregator>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    #[serde(default)]
    pub recommender: TrainConfig,
    #[serde(default)]
    pub attacker: AttackConfig,
    #[serde(default = "default_folds")]
    pub attack_folds: usize,
}

impl ExperimentConfig {
    pub fn from_toml_file<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.strategies.is_empty()
            || self.samplers.is_empty()
            || self.rhos.is_empty()
            || self.aggregators.is_empty()
        {
            return Err(Error::Config("experiment grid is empty".into()));
        }
        self.recommender.validate()?;
        self.attacker.validate()?;
        Ok(())
    }

    /// Grid cells in definition order: strategy, sampler, rho, aggregator.
    pub fn grid(&self) -> Vec<GridCell> {
        let mut cells = Vec::new();
        for &strategy in &self.strategies {
            for &sampler in &self.samplers {
                for &rho in &self.rhos {
                    for &aggregator in &self.aggregators {
                        cells.push(GridCell { strategy, sampler, rho, aggregator });
                    }
                }
            }
        }
        cells
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridCell {
    pub strategy: Strategy,
    pub sampler: SamplerKind,
    pub rho: f64,
    pub aggregator: Aggregator,
}

impl GridCell {
    pub fn label(&self) -> String {
        format!("{}_{}_{}_{}", self.strategy, self.sampler, self.rho, self.aggregator)
    }
}

/// Prepared splits and frozen stereotype table for one dataset.
#[derive(Debug, Clone)]
pub struct PipelineData {
    pub dataset: InteractionDataset,
    pub partition: GroupPartition,
    pub train: InteractionDataset,
    pub validation: InteractionDataset,
    pub test: InteractionDataset,
    /// Concatenation of train and validation; obfuscation input.
    pub trainval: InteractionDataset,
    pub table: StereotypeTable,
}

/// Filters, splits and scores a dataset. The stereotype table is
/// computed once on the pre-obfuscation train+validation data and
/// frozen; obfuscation never triggers recomputation.
pub fn prepare(
    dataset: &InteractionDataset,
    partition: &GroupPartition,
    holdout_fraction: f64,
    test_seed: u64,
    val_seed: u64,
) -> Result<PipelineData> {
    let (trainval, test) = split_per_user(dataset, &SplitSpec::new(holdout_fraction, test_seed)?)?;
    let (train, validation) =
        split_per_user(&trainval, &SplitSpec::new(holdout_fraction, val_seed)?)?;
    let table = StereotypeTable::compute(&trainval, partition)?;
    Ok(PipelineData {
        dataset: dataset.clone(),
        partition: partition.clone(),
        train,
        validation,
        test,
        trainval,
        table,
    })
}

/// Metrics of one configuration (or of the unobfuscated baseline).
#[derive(Debug, Clone, PartialEq)]
pub struct CellMetrics {
    pub bacc_mean: f64,
    pub bacc_folds: Vec<f64>,
    pub ndcg: f64,
}

/// Seeds shared by every cell of an experiment.
#[derive(Debug, Clone, Copy)]
pub struct CellSeeds {
    pub reslice_seed: u64,
    pub obfuscation_seed: u64,
    pub attack_fold_seed: u64,
}

/// Trains and attacks the unobfuscated data.
pub fn run_original(
    data: &PipelineData,
    rec_cfg: &TrainConfig,
    atk_cfg: &AttackConfig,
    folds: usize,
    attack_fold_seed: u64,
    holdout_fraction: f64,
) -> Result<CellMetrics> {
    let _ = holdout_fraction;
    let model = train_bpr(&data.train, &data.validation, rec_cfg)?;
    let ndcg = evaluate_model(&model, &data.test, data.trainval.profiles(), 10);
    let attack = run_attack_cv(&data.trainval, &data.partition, atk_cfg, folds, attack_fold_seed)?;
    Ok(CellMetrics {
        bacc_mean: attack.mean_bacc,
        bacc_folds: attack.fold_baccs,
        ndcg,
    })
}

/// Result of one obfuscated cell: metrics plus the obfuscated dataset
/// and its audit trail for artifact emission.
pub struct CellOutput {
    pub metrics: CellMetrics,
    pub outcome: crate::obfuscation::ObfuscationOutcome,
}

/// Runs one grid cell: obfuscate the train+validation concatenation,
/// re-slice it, train BPR-MF, evaluate NDCG@10 on the original test
/// set, and attack the obfuscated data.
pub fn run_cell(
    data: &PipelineData,
    cell: &GridCell,
    omega: f64,
    seeds: &CellSeeds,
    rec_cfg: &TrainConfig,
    atk_cfg: &AttackConfig,
    folds: usize,
    holdout_fraction: f64,
) -> Result<CellOutput> {
    let obf_cfg = ObfuscationConfig {
        strategy: cell.strategy,
        sampler: cell.sampler,
        rho: cell.rho,
        omega,
        aggregator: cell.aggregator,
        seed: seeds.obfuscation_seed,
    };
    let outcome = obfuscate_dataset(&data.trainval, &data.partition, &data.table, &obf_cfg)?;
    let (train, validation) = split_per_user_lenient(
        &outcome.dataset,
        &SplitSpec::new(holdout_fraction, seeds.reslice_seed)?,
    )?;
    let model = train_bpr(&train, &validation, rec_cfg)?;
    // exclusion covers what the model saw, not the original profiles
    let ndcg = evaluate_model(&model, &data.test, outcome.dataset.profiles(), 10);
    let attack = run_attack_cv(
        &outcome.dataset,
        &data.partition,
        atk_cfg,
        folds,
        seeds.attack_fold_seed,
    )?;
    Ok(CellOutput {
        metrics: CellMetrics {
            bacc_mean: attack.mean_bacc,
            bacc_folds: attack.fold_baccs,
            ndcg,
        },
        outcome,
    })
}

/// One row of the experiment report. The `original` row carries no
/// strategy or sampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub strategy: String,
    pub sampler: String,
    pub rho: f64,
    pub aggregator: String,
    pub metrics: Option<CellMetrics>,
    pub error: Option<String>,
    pub wall_clock_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub rows: Vec<ReportRow>,
    pub seed_note: String,
}

impl ExperimentReport {
    pub fn num_failures(&self) -> usize {
        self.rows.iter().filter(|r| r.error.is_some()).count()
    }

    /// Deterministic metrics table. Wall-clock goes to a separate
    /// timings file so reruns of the same config are byte-identical.
    pub fn write<P: AsRef<Path>>(&self, dir: P) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let mut report =
            String::from("strategy,sampler,rho,aggregator,bacc_mean,bacc_folds,ndcg10,status\n");
        let mut timings = String::from("strategy,sampler,rho,aggregator,wall_clock_s\n");
        for r in &self.rows {
            let (bacc, folds, ndcg, status) = match (&r.metrics, &r.error) {
                (Some(m), _) => (
                    format!("{}", m.bacc_mean),
                    m.bacc_folds
                        .iter()
                        .map(|b| format!("{b}"))
                        .collect::<Vec<_>>()
                        .join(";"),
                    format!("{}", m.ndcg),
                    "ok".to_string(),
                ),
                (None, Some(e)) => (String::new(), String::new(), String::new(), format!("failed: {e}")),
                (None, None) => (String::new(), String::new(), String::new(), "failed".into()),
            };
            writeln!(
                report,
                "{},{},{},{},{},{},{},{}",
                r.strategy, r.sampler, r.rho, r.aggregator, bacc, folds, ndcg, status
            )
            .unwrap();
            writeln!(
                timings,
                "{},{},{},{},{:.3}",
                r.strategy, r.sampler, r.rho, r.aggregator, r.wall_clock_s
            )
            .unwrap();
        }
        fs::write(dir.join("report.csv"), report)?;
        fs::write(dir.join("timings.csv"), timings)?;
        Ok(())
    }
}

/// Writes one (NDCG, BAcc, label) series per strategy plus the
/// original-baseline reference point.
pub fn emit_tradeoff<P: AsRef<Path>>(report: &ExperimentReport, dir: P) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut strategies: Vec<&str> = Vec::new();
    for r in &report.rows {
        if r.strategy != "original" && r.metrics.is_some() && !strategies.contains(&r.strategy.as_str())
        {
            strategies.push(&r.strategy);
        }
    }
    for strategy in strategies {
        let mut out = String::from("ndcg,bacc,label\n");
        for r in report.rows.iter().filter(|r| r.strategy == strategy) {
            if let Some(m) = &r.metrics {
                writeln!(
                    out,
                    "{},{},{}_{}_{}",
                    m.ndcg, m.bacc_mean, r.sampler, r.rho, r.aggregator
                )
                .unwrap();
            }
        }
        fs::write(dir.join(format!("tradeoff_{strategy}.csv")), out)?;
    }
    let mut base = String::from("ndcg,bacc,label\n");
    for r in report.rows.iter().filter(|r| r.strategy == "original") {
        if let Some(m) = &r.metrics {
            writeln!(base, "{},{},original", m.ndcg, m.bacc_mean).unwrap();
        }
    }
    fs::write(dir.join("tradeoff_baseline.csv"), base)?;
    Ok(())
}

/// Executes the full experiment described by `cfg`, writing the report,
/// trade-off series and per-cell artifacts under `out_dir`. Cell
/// failures are recorded in the report; the run continues.
pub fn run_experiment<P: AsRef<Path>>(cfg: &ExperimentConfig, out_dir: P) -> Result<ExperimentReport> {
    cfg.validate()?;
    let out_dir = out_dir.as_ref();
    fs::create_dir_all(out_dir)?;

    let raw = load_interactions(&cfg.interactions, Delimiter::Auto)?;
    let filtered = k_core_filter(&raw, cfg.core_k)?;
    let (partition, _ignored) = load_user_attributes(&cfg.attributes, &filtered)?;
    let data = prepare(
        &filtered,
        &partition,
        cfg.holdout_fraction,
        cfg.test_seed,
        cfg.val_seed,
    )?;
    filtered.write_id_maps(out_dir.join("id_map_users.csv"), out_dir.join("id_map_items.csv"))?;

    let seeds = CellSeeds {
        reslice_seed: cfg.reslice_seed,
        obfuscation_seed: cfg.obfuscation_seed,
        attack_fold_seed: cfg.attack_fold_seed,
    };

    let mut rows = Vec::new();
    let started = Instant::now();
    let original = run_original(
        &data,
        &cfg.recommender,
        &cfg.attacker,
        cfg.attack_folds,
        cfg.attack_fold_seed,
        cfg.holdout_fraction,
    );
    let elapsed = started.elapsed().as_secs_f64();
    match original {
        Ok(metrics) => rows.push(ReportRow {
            strategy: "original".into(),
            sampler: "original".into(),
            rho: 0.0,
            aggregator: String::new(),
            metrics: Some(metrics),
            error: None,
            wall_clock_s: elapsed,
        }),
        Err(e) => rows.push(ReportRow {
            strategy: "original".into(),
            sampler: "original".into(),
            rho: 0.0,
            aggregator: String::new(),
            metrics: None,
            error: Some(e.to_string()),
            wall_clock_s: elapsed,
        }),
    }

    for cell in cfg.grid() {
        let started = Instant::now();
        let result = run_cell(
            &data,
            &cell,
            cfg.omega,
            &seeds,
            &cfg.recommender,
            &cfg.attacker,
            cfg.attack_folds,
            cfg.holdout_fraction,
        );
        let wall_clock_s = started.elapsed().as_secs_f64();
        let row = match result {
            Ok(out) => {
                let cell_dir = out_dir.join("cells").join(cell.label());
                fs::create_dir_all(&cell_dir)?;
                out.outcome
                    .dataset
                    .write_interactions(cell_dir.join("obfuscated.csv"), ',')?;
                out.outcome.write_audit(cell_dir.join("audit.csv"))?;
                ReportRow {
                    strategy: cell.strategy.to_string(),
                    sampler: cell.sampler.to_string(),
                    rho: cell.rho,
                    aggregator: cell.aggregator.to_string(),
                    metrics: Some(out.metrics),
                    error: None,
                    wall_clock_s,
                }
            }
            Err(e) => ReportRow {
                strategy: cell.strategy.to_string(),
                sampler: cell.sampler.to_string(),
                rho: cell.rho,
                aggregator: cell.aggregator.to_string(),
                metrics: None,
                error: Some(e.to_string()),
                wall_clock_s,
            },
        };
        rows.push(row);
    }

    let report = ExperimentReport {
        rows,
        seed_note: format!(
            "test_seed={} val_seed={} reslice_seed={} obfuscation_seed={} attack_fold_seed={}",
            cfg.test_seed, cfg.val_seed, cfg.reslice_seed, cfg.obfuscation_seed, cfg.attack_fold_seed
        ),
    };
    report.write(out_dir)?;
    emit_tradeoff(&report, out_dir)?;
    Ok(report)
}
