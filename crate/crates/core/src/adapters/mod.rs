//! Fine-tuning numerics at desk scale: low-rank adapters over a frozen base
//! matrix, blockwise 4-bit quantization, and a small training loop tying
//! them together.

pub mod lora;
pub mod quant;
pub mod train;

pub use lora::{
    lora_forward, lora_grads, lora_init, lora_merge, lora_param_stats, LoraAdapter, LoraGrads, Matrix, ParamStats,
    Vector,
};
pub use quant::{dequantize, quantize_blockwise, QuantScheme, QuantStats, QuantizedTensor, NF4_CODEBOOK};
pub use train::{full_rank_problem, matrix_loss_grads, rank_one_problem, train_lora_toy, TrainConfig, TrainTrace};
