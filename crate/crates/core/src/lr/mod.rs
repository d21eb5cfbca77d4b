//! Logistic-regression training on encrypted data with a cleartext shadow.

mod data;
mod encrypted;
mod model;

pub use data::{avg_pool2, synthetic_digits, Dataset, FEATURES};
pub use encrypted::{rotation_steps, EncryptedTrainer, IterationLog, LrReport, LEVELS_PER_ITERATION};
pub use model::*;
