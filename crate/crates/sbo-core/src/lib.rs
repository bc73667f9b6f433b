//! Stereotypicality-based obfuscation of implicit-feedback interaction
//! data, with a built-in evaluation harness: a BPR matrix-factorization
//! recommender and a feed-forward attribute-inference attacker measure
//! the accuracy–privacy trade-off of each obfuscation configuration.

pub mod attacker;
pub mod dataset;
pub mod error;
pub mod harness;
pub mod obfuscation;
pub mod recommender;
pub mod rng;
pub mod stereotype;
pub mod synth;

pub use error::{Error, Result};
