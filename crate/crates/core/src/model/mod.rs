//! The GNRK surrogate: feature encoders, GN modules and a decoder forming
//! `f_θ`, wrapped in an explicit Runge-Kutta recurrence.
//!
//! `f_θ` never sees the step size; `Δt` and the Butcher coefficients only
//! enter the residual combinations between substeps, so one trained network
//! can be evaluated at any RK order.

mod batch;
mod checkpoint;
pub(crate) mod config;
mod gnrk;
mod network;
mod params;
mod train;

pub use batch::GraphBatch;
pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointHeader, CHECKPOINT_FORMAT, HEADER_FILE, PARAMS_FILE};
pub use config::{parse_settings, InputSource, SystemModelConfig, TrainConfig};
pub use gnrk::{
    build_model, count_params, loss_and_grad, loss_only, mse, step_backward, step_recorded, BoundModel, GnrkModel,
    StepRecord,
};
pub use network::{EvalRecord, Network, StaticGrads};
pub use params::{GnModuleParams, GnrkParams};
pub use train::{train, train_dataset, EpochStats, PairBatch, TrainReport, TrainSample};
