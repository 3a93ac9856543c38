use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::{SystemModelConfig, TrainConfig};
use super::gnrk::GnrkModel;
use super::params::GnrkParams;
use crate::error::{Error, Result};
use crate::io::{create_dir_all, read_f64_file, read_json, write_f64_file, write_json};
use crate::nn::Parameters;

pub const CHECKPOINT_FORMAT: &str = "gnrk-checkpoint-1";
pub const HEADER_FILE: &str = "checkpoint.json";
pub const PARAMS_FILE: &str = "params.bin";

/// `checkpoint.json`: architecture, training state and a digest of
/// `params.bin`, which holds the flat parameters in declaration order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckpointHeader {
    pub format: String,
    pub config: SystemModelConfig,
    pub num_params: usize,
    /// Completed epochs.
    pub epoch: usize,
    #[serde(default)]
    pub train: Option<TrainConfig>,
    /// Learning rate the schedule would give the next epoch.
    #[serde(default)]
    pub next_lr: Option<f64>,
    pub params_sha256: String,
}

pub fn save_checkpoint(
    dir: &Path,
    model: &GnrkModel,
    epoch: usize,
    train: Option<&TrainConfig>,
) -> Result<CheckpointHeader> {
    create_dir_all(dir)?;
    let flat = model.params.to_flat();
    let params_sha256 = write_f64_file(&dir.join(PARAMS_FILE), &flat)?;
    let header = CheckpointHeader {
        format: CHECKPOINT_FORMAT.into(),
        config: model.config.clone(),
        num_params: flat.len(),
        epoch,
        train: train.cloned(),
        next_lr: train.map(|t| t.schedule.lr_at(epoch)),
        params_sha256,
    };
    write_json(&dir.join(HEADER_FILE), &header)?;
    Ok(header)
}

pub fn load_checkpoint(dir: &Path) -> Result<(GnrkModel, CheckpointHeader)> {
    let header_path = dir.join(HEADER_FILE);
    let header: CheckpointHeader = read_json(&header_path)?;
    let corrupt = |reason: String| Error::Corrupt {
        path: header_path.clone(),
        reason,
    };
    if header.format != CHECKPOINT_FORMAT {
        return Err(corrupt(format!("unknown format {:?}", header.format)));
    }
    header.config.validate()?;
    let mut params = GnrkParams::zeros(&header.config);
    if params.num_params() != header.num_params {
        return Err(corrupt(format!(
            "architecture has {} parameters, header declares {}",
            params.num_params(),
            header.num_params
        )));
    }
    let flat = read_f64_file(&dir.join(PARAMS_FILE), header.num_params, Some(&header.params_sha256))?;
    params.load_flat(&flat);
    Ok((
        GnrkModel {
            config: header.config.clone(),
            params,
        },
        header,
    ))
}
