//! Dense layers with explicit backward passes, AdamW and learning-rate
//! schedules.

mod layers;
mod optim;

pub use layers::{gelu, gelu_grad, normal_cdf, Dense, Mlp2, MlpCache, Parameters};
pub use optim::{cosine, AdamW, AdamWConfig, LrSchedule};
