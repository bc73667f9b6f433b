use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use sbo_core::attacker::{run_attack_cv, AttackConfig};
use sbo_core::dataset::{
    k_core_filter, load_interactions, load_user_attributes, split_per_user, Delimiter, SplitSpec,
};
use sbo_core::harness::{run_experiment, ExperimentConfig};
use sbo_core::obfuscation::{obfuscate_dataset, ObfuscationConfig, SamplerKind, Strategy};
use sbo_core::recommender::{evaluate_model, train_bpr, TrainConfig};
use sbo_core::stereotype::{compute_gamma, emit_distributions, user_score, Aggregator, StereotypeTable};
use sbo_core::synth::{generate, SynthConfig};

#[derive(Parser)]
#[command(name = "sbo", version, about = "Stereotypicality-based obfuscation of implicit feedback")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Interaction file (header `user_id,item_id`, comma or tab separated)
    #[arg(long)]
    interactions: PathBuf,
    /// Delimiter: auto, comma or tab
    #[arg(long, default_value = "auto")]
    delimiter: String,
    /// k-core filtering threshold; 0 disables filtering
    #[arg(long, default_value_t = 0)]
    core: u32,
}

impl InputArgs {
    fn load(&self) -> Result<sbo_core::dataset::InteractionDataset> {
        let delim = match self.delimiter.as_str() {
            "auto" => Delimiter::Auto,
            "comma" => Delimiter::Comma,
            "tab" => Delimiter::Tab,
            other => bail!("unknown delimiter {other:?} (use auto, comma or tab)"),
        };
        let d = load_interactions(&self.interactions, delim)
            .with_context(|| format!("reading {}", self.interactions.display()))?;
        if self.core > 0 {
            Ok(k_core_filter(&d, self.core)?)
        } else {
            Ok(d)
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Dataset statistics; with attributes also the stereotype distributions
    Stats {
        #[command(flatten)]
        input: InputArgs,
        /// Attribute file (header `user_id,label`, two labels)
        #[arg(long)]
        attributes: Option<PathBuf>,
        /// Aggregator for user scores: mean or median
        #[arg(long, default_value = "mean")]
        aggregator: Aggregator,
        /// Directory for distribution files (requires --attributes)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rewrite user profiles with the stereotype-based obfuscation pass
    Obfuscate {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        attributes: PathBuf,
        /// removal, imputation or weighted
        #[arg(long)]
        strategy: Strategy,
        /// sbsampling, topstereo or random
        #[arg(long, default_value = "sbsampling")]
        sampler: SamplerKind,
        /// Obfuscation ratio in (0, 1]
        #[arg(long)]
        rho: f64,
        /// Imputation share of the weighted budget
        #[arg(long, default_value_t = 0.5)]
        omega: f64,
        #[arg(long, default_value = "mean")]
        aggregator: Aggregator,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory (obfuscated.csv, audit.csv, id maps)
        #[arg(long)]
        out: PathBuf,
    },
    /// Train the BPR matrix-factorization recommender
    TrainRec {
        #[command(flatten)]
        input: InputArgs,
        /// Validation holdout fraction per user
        #[arg(long, default_value_t = 0.2)]
        holdout: f64,
        #[arg(long, default_value_t = 42)]
        split_seed: u64,
        #[arg(long, default_value_t = 100)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        dim: usize,
        #[arg(long, default_value_t = 0.001)]
        learning_rate: f64,
        #[arg(long, default_value_t = 512)]
        batch_size: usize,
        #[arg(long, default_value_t = 10)]
        patience: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Checkpoint output path
        #[arg(long)]
        checkpoint: PathBuf,
    },
    /// Infer the protected attribute with the cross-validated attacker
    Attack {
        #[command(flatten)]
        input: InputArgs,
        #[arg(long)]
        attributes: PathBuf,
        #[arg(long, default_value_t = 5)]
        folds: usize,
        #[arg(long, default_value_t = 128)]
        hidden: usize,
        #[arg(long, default_value_t = 50)]
        epochs: usize,
        #[arg(long, default_value_t = 64)]
        batch_size: usize,
        #[arg(long, default_value_t = 0.001)]
        learning_rate: f64,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Run a full accuracy-privacy grid experiment from a TOML config
    Experiment {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for report, trade-off series and artifacts
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate the planted-stereotype synthetic dataset
    Synth {
        #[arg(long, default_value_t = 150)]
        users_per_group: usize,
        #[arg(long, default_value_t = 20)]
        marker_items: usize,
        #[arg(long, default_value_t = 560)]
        shared_items: usize,
        #[arg(long, default_value_t = 6)]
        marker_draws: usize,
        #[arg(long, default_value_t = 74)]
        shared_draws: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output directory (interactions.csv, attributes.csv)
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Stats { input, attributes, aggregator, out } => {
            let d = input.load()?;
            println!("users: {}", d.num_users());
            println!("items: {}", d.num_items());
            println!("interactions: {}", d.num_interactions());
            let density = d.num_interactions() as f64 / (d.num_users() * d.num_items()) as f64;
            println!("density: {density:.6}");
            if let Some(attrs) = attributes {
                let (partition, ignored) = load_user_attributes(&attrs, &d)?;
                if ignored > 0 {
                    eprintln!("note: {ignored} attribute rows had no matching user");
                }
                println!(
                    "groups: {} = {}, {} = {}",
                    partition.labels()[0],
                    partition.group_size(0),
                    partition.labels()[1],
                    partition.group_size(1)
                );
                let table = StereotypeTable::compute(&d, &partition)?;
                let mut scores = Vec::new();
                for u in 0..d.num_users() as u32 {
                    let mu: Vec<f64> = if partition.group_of(u) == 0 {
                        table.ister_all().to_vec()
                    } else {
                        table.ister_all().iter().map(|s| -s).collect()
                    };
                    scores.push(user_score(d.profile(u), &mu, aggregator)?);
                }
                let gamma = compute_gamma(&scores)?;
                let above = scores.iter().filter(|&&s| s >= gamma).count();
                println!("gamma: {gamma:.6}");
                println!("users at or above gamma: {above}");
                if let Some(dir) = out {
                    emit_distributions(&table, &scores, gamma, 40, &dir)?;
                    println!("distributions written to {}", dir.display());
                }
            } else if out.is_some() {
                bail!("--out requires --attributes");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Obfuscate {
            input,
            attributes,
            strategy,
            sampler,
            rho,
            omega,
            aggregator,
            seed,
            out,
        } => {
            let d = input.load()?;
            let (partition, _) = load_user_attributes(&attributes, &d)?;
            let table = StereotypeTable::compute(&d, &partition)?;
            let cfg = ObfuscationConfig { strategy, sampler, rho, omega, aggregator, seed };
            let outcome = obfuscate_dataset(&d, &partition, &table, &cfg)?;
            fs::create_dir_all(&out)?;
            outcome.dataset.write_interactions(out.join("obfuscated.csv"), ',')?;
            outcome.write_audit(out.join("audit.csv"))?;
            d.write_id_maps(out.join("id_map_users.csv"), out.join("id_map_items.csv"))?;
            let selected = outcome.audits.iter().filter(|a| a.selected).count();
            let added: usize = outcome.audits.iter().map(|a| a.added.len()).sum();
            let removed: usize = outcome.audits.iter().map(|a| a.removed.len()).sum();
            println!("gamma: {:.6}", outcome.gamma);
            println!("selected users: {selected}/{}", d.num_users());
            println!("interactions added: {added}, removed: {removed}");
            println!("written to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::TrainRec {
            input,
            holdout,
            split_seed,
            epochs,
            dim,
            learning_rate,
            batch_size,
            patience,
            seed,
            checkpoint,
        } => {
            let d = input.load()?;
            let (train, val) = split_per_user(&d, &SplitSpec::new(holdout, split_seed)?)?;
            let cfg = TrainConfig {
                epochs,
                dim,
                learning_rate,
                batch_size,
                patience,
                seed,
                ..TrainConfig::default()
            };
            let model = train_bpr(&train, &val, &cfg)?;
            let ndcg = evaluate_model(&model, &val, train.profiles(), 10);
            println!("validation NDCG@10: {ndcg:.4}");
            model.save(&checkpoint, seed)?;
            println!("checkpoint written to {}", checkpoint.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::Attack {
            input,
            attributes,
            folds,
            hidden,
            epochs,
            batch_size,
            learning_rate,
            seed,
        } => {
            let d = input.load()?;
            let (partition, _) = load_user_attributes(&attributes, &d)?;
            let cfg = AttackConfig { hidden, epochs, batch_size, learning_rate, seed };
            let outcome = run_attack_cv(&d, &partition, &cfg, folds, seed)?;
            for (i, b) in outcome.fold_baccs.iter().enumerate() {
                println!("fold {}: BAcc {b:.4}", i + 1);
            }
            if outcome.skipped_folds > 0 {
                eprintln!("note: {} folds skipped (single-class)", outcome.skipped_folds);
            }
            println!("mean BAcc: {:.4}", outcome.mean_bacc);
            Ok(ExitCode::SUCCESS)
        }
        Command::Experiment { config, out } => {
            let cfg = ExperimentConfig::from_toml_file(&config)
                .with_context(|| format!("reading {}", config.display()))?;
            let report = run_experiment(&cfg, &out)?;
            for row in &report.rows {
                match (&row.metrics, &row.error) {
                    (Some(m), _) => println!(
                        "{} {} rho={} {}: BAcc {:.4}, NDCG@10 {:.4} ({:.1}s)",
                        row.strategy,
                        row.sampler,
                        row.rho,
                        row.aggregator,
                        m.bacc_mean,
                        m.ndcg,
                        row.wall_clock_s
                    ),
                    (None, Some(e)) => {
                        println!("{} {} rho={}: FAILED: {e}", row.strategy, row.sampler, row.rho)
                    }
                    (None, None) => {
                        println!("{} {} rho={}: FAILED", row.strategy, row.sampler, row.rho)
                    }
                }
            }
            println!("report written to {}", out.display());
            if report.num_failures() > 0 {
                eprintln!("{} cells failed", report.num_failures());
                return Ok(ExitCode::from(2));
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Synth {
            users_per_group,
            marker_items,
            shared_items,
            marker_draws,
            shared_draws,
            seed,
            out,
        } => {
            let cfg = SynthConfig {
                users_per_group,
                marker_items_per_group: marker_items,
                shared_items,
                marker_draws,
                shared_draws,
                seed,
            };
            let (d, p) = generate(&cfg)?;
            fs::create_dir_all(&out)?;
            d.write_interactions(out.join("interactions.csv"), ',')?;
            p.write_attributes(&d, out.join("attributes.csv"))?;
            println!(
                "wrote {} users, {} items, {} interactions to {}",
                d.num_users(),
                d.num_items(),
                d.num_interactions(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
