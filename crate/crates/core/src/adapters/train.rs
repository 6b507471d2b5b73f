//! Toy adapter training: fit `W_base + (alpha/r)·B·A` to a target matrix by
//! plain gradient descent on `½‖W_base + (alpha/r)·B·A − W_target‖²`,
//! with `W_base` frozen.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::lora::{lora_init, LoraAdapter, LoraGrads, Matrix};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub rank: usize,
    pub alpha: f64,
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            rank: 2,
            alpha: 2.0,
            steps: 500,
            learning_rate: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainTrace {
    /// Loss of the freshly initialized adapter.
    pub initial_loss: f64,
    /// `losses[i]` is the loss after update `i + 1`.
    pub losses: Vec<f64>,
    pub final_adapter: LoraAdapter,
    pub config: TrainConfig,
}

impl TrainTrace {
    pub fn final_loss(&self) -> f64 {
        *self.losses.last().expect("at least one step")
    }
}

fn residual(base: &Matrix, target: &Matrix, adapter: &LoraAdapter) -> Matrix {
    base + adapter.delta() - target
}

fn half_sq_norm(m: &Matrix) -> f64 {
    0.5 * m.iter().map(|v| v * v).sum::<f64>()
}

/// Gradient of `½‖W_base + ΔW − W_target‖²` for the adapter factors.
///
/// Equals the sum over basis inputs `e_j` of [`super::lora_grads`] with
/// upstream `R·e_j`, where `R` is the residual.
pub fn matrix_loss_grads(base: &Matrix, target: &Matrix, adapter: &LoraAdapter) -> LoraGrads {
    let r = residual(base, target, adapter);
    let s = adapter.scale();
    LoraGrads {
        da: (adapter.b().transpose() * &r) * s,
        db: (&r * adapter.a().transpose()) * s,
    }
}

pub fn train_lora_toy(base: &Matrix, target: &Matrix, config: &TrainConfig) -> Result<TrainTrace> {
    if base.shape() != target.shape() {
        return Err(Error::InvalidArgument(format!(
            "base is {:?} but target is {:?}",
            base.shape(),
            target.shape()
        )));
    }
    if config.steps == 0 {
        return Err(Error::InvalidArgument("steps must be positive".into()));
    }
    if !(config.learning_rate.is_finite() && config.learning_rate > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "learning rate must be positive, got {}",
            config.learning_rate
        )));
    }
    let (d, k) = base.shape();
    let mut adapter = lora_init(d, k, config.rank, config.alpha, config.seed)?;
    let initial_loss = half_sq_norm(&residual(base, target, &adapter));

    let mut losses = Vec::with_capacity(config.steps);
    for _ in 0..config.steps {
        let grads = matrix_loss_grads(base, target, &adapter);
        adapter.step(&grads, config.learning_rate);
        losses.push(half_sq_norm(&residual(base, target, &adapter)));
    }
    Ok(TrainTrace {
        initial_loss,
        losses,
        final_adapter: adapter,
        config: *config,
    })
}

fn normal_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Seeded standard-normal base matrix and a target differing from it by a
/// rank-one term `u·vᵀ`.
pub fn rank_one_problem(d: usize, k: usize, seed: u64) -> (Matrix, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = normal_matrix(d, k, &mut rng);
    let u = normal_matrix(d, 1, &mut rng);
    let v = normal_matrix(k, 1, &mut rng);
    let target = &base + u * v.transpose();
    (base, target)
}

/// Seeded base matrix and a target differing from it by a dense
/// standard-normal matrix (full rank almost surely).
pub fn full_rank_problem(d: usize, k: usize, seed: u64) -> (Matrix, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = normal_matrix(d, k, &mut rng);
    let target = &base + normal_matrix(d, k, &mut rng);
    (base, target)
}
