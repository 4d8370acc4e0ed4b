//! Federated-averaging maths and the bundled softmax logistic-regression learner.

mod data;
mod fedavg;
pub mod idx;
mod logistic;

pub use data::{partition_dataset, synthetic_pool, synthetic_pool_with, Dataset, LabelGroup, PartitionScheme, SyntheticSpec};
pub use fedavg::{centralized_fedavg, global_aggregate, partial_aggregate};
pub use logistic::{compute_time, evaluate, local_gd, local_gradient, local_loss, Evaluation, LearnerConfig};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearningError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite parameters after local iteration {iteration}")]
    NumericDivergence { iteration: usize },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("total sample count must be positive")]
    ZeroTotalSamples,
    #[error("partition error: {0}")]
    Partition(String),
    #[error("invalid learner configuration: {0}")]
    InvalidConfig(String),
    #[error("label {label} outside [0, {num_classes})")]
    LabelOutOfRange { label: usize, num_classes: usize },
}

/// Dense model parameter vector. Dimension is fixed for a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    values: Vec<f64>,
}

impl ModelParams {
    pub fn new(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn zeros(dimension: usize) -> Self {
        Self { values: vec![0.0; dimension] }
    }

    /// Seeded N(0, std²) initialisation.
    pub fn random(dimension: usize, std: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, std).expect("std must be finite and non-negative");
        Self { values: (0..dimension).map(|_| normal.sample(&mut rng)).collect() }
    }

    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn scaled(&self, k: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * k).collect() }
    }

    pub fn add_assign(&mut self, other: &ModelParams) -> Result<(), LearningError> {
        self.check_dim(other.dimension())?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += b;
        }
        Ok(())
    }

    pub(crate) fn check_dim(&self, found: usize) -> Result<(), LearningError> {
        if self.dimension() != found {
            return Err(LearningError::DimensionMismatch { expected: self.dimension(), found });
        }
        Ok(())
    }

    /// Largest element-wise difference relative to the larger infinity norm.
    pub fn max_relative_diff(&self, other: &ModelParams) -> f64 {
        let scale = self
            .values
            .iter()
            .chain(&other.values)
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(f64::MIN_POSITIVE);
        self.values.iter().zip(&other.values).fold(0.0f64, |m, (a, b)| m.max((a - b).abs())) / scale
    }
}

/// Model dimension of the softmax learner: one weight row plus bias per class.
pub fn model_dimension(num_features: usize, num_classes: usize) -> usize {
    (num_features + 1) * num_classes
}
