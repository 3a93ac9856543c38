//! Ground-truth datasets: generation, on-disk layout and loading.
//!
//! A dataset directory holds `manifest.json` plus one directory per sample,
//! `samples/<idx>/{domain.json, traj.bin, dts.bin, meta.json}`. Binaries are
//! flat little-endian f64; `traj.bin` is `(M + 1) x nodes x channels`,
//! row-major.

mod generate;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use ndarray::{Array3, ArrayView2};
use serde::{Deserialize, Serialize};

pub use generate::{
    generate_burgers, generate_coupled, BurgersConfig, BurgersVariant, CoupledConfig, TEST_STREAM, TRAIN_STREAM,
};

use crate::domain::{Domain, Topology};
use crate::error::{Error, Result};
use crate::io::{read_f64_file, read_json};
use crate::solver::{TimeGrid, Trajectory};
use crate::systems::{Coefficients, IcRecord, Instance, SystemKind};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(Error::config(format!("unknown split {other:?}"))),
        }
    }
}

/// One sample as recorded in the manifest. Paths are relative to the
/// dataset directory.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub index: usize,
    pub split: Split,
    pub seed: u64,
    pub domain_file: String,
    pub trajectory_file: String,
    pub time_grid_file: String,
    pub meta_file: String,
    pub order: usize,
    pub steps: usize,
    pub num_nodes: usize,
    pub d_state: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub topology: Option<Topology>,
    pub coefficients: Coefficients,
    pub ic: IcRecord,
    pub trajectory_sha256: String,
    pub time_grid_sha256: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub system: SystemKind,
    pub variant: String,
    pub seed: u64,
    pub samples: Vec<SampleEntry>,
}

impl DatasetManifest {
    pub fn count(&self, split: Split) -> usize {
        self.samples.iter().filter(|s| s.split == split).count()
    }
}

/// Per-sample trajectory header stored next to the binaries.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleMeta {
    pub system: SystemKind,
    pub coefficients: Coefficients,
    #[serde(rename = "M")]
    pub steps: usize,
    pub d_state: usize,
    pub num_nodes: usize,
    pub order: usize,
    pub seed: u64,
}

#[derive(Clone, Debug)]
pub struct Sample {
    pub entry: SampleEntry,
    pub instance: Instance,
    pub trajectory: Trajectory,
}

/// One supervised transition `(s(t_k), Δt_k, s(t_{k+1}))`.
#[derive(Clone, Copy, Debug)]
pub struct OneStepPair<'a> {
    pub sample: usize,
    pub step: usize,
    pub dt: f64,
    pub input: ArrayView2<'a, f64>,
    pub target: ArrayView2<'a, f64>,
}

#[derive(Clone, Debug)]
pub struct Dataset {
    pub root: PathBuf,
    pub manifest: DatasetManifest,
    pub samples: Vec<Sample>,
}

impl Dataset {
    pub fn system(&self) -> SystemKind {
        self.manifest.system
    }

    pub fn split(&self, split: Split) -> impl Iterator<Item = &Sample> {
        self.samples.iter().filter(move |s| s.entry.split == split)
    }

    /// `(sample position, step)` for every one-step pair in `split`.
    pub fn pair_ids(&self, split: Split) -> Vec<(usize, usize)> {
        self.samples
            .iter()
            .enumerate()
            .filter(|(_, s)| s.entry.split == split)
            .flat_map(|(i, s)| (0..s.trajectory.num_steps()).map(move |k| (i, k)))
            .collect()
    }

    pub fn pairs(&self, split: Split) -> impl Iterator<Item = OneStepPair<'_>> {
        self.samples
            .iter()
            .enumerate()
            .filter(move |(_, s)| s.entry.split == split)
            .flat_map(|(i, s)| (0..s.trajectory.num_steps()).map(move |k| s.pair(i, k)))
    }
}

impl Sample {
    pub fn pair(&self, position: usize, step: usize) -> OneStepPair<'_> {
        OneStepPair {
            sample: position,
            step,
            dt: self.trajectory.time_grid.dts()[step],
            input: self.trajectory.state(step),
            target: self.trajectory.state(step + 1),
        }
    }
}

/// Loads a dataset directory (or its `manifest.json`), validating shapes and
/// checksums of every referenced file.
pub fn load_dataset(path: &Path) -> Result<Dataset> {
    let (root, manifest_path) = if path.is_dir() {
        (path.to_path_buf(), path.join(MANIFEST_FILE))
    } else {
        let root = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        (root, path.to_path_buf())
    };
    let manifest: DatasetManifest = read_json(&manifest_path)?;
    let samples = manifest
        .samples
        .iter()
        .map(|entry| load_sample(&root, manifest.system, entry))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        root,
        manifest,
        samples,
    })
}

pub fn load_sample(root: &Path, system: SystemKind, entry: &SampleEntry) -> Result<Sample> {
    let corrupt = |path: &Path, reason: String| Error::Corrupt {
        path: path.into(),
        reason,
    };
    let domain_path = root.join(&entry.domain_file);
    let domain: Domain = read_json(&domain_path)?;
    if entry.coefficients.system() != system {
        return Err(corrupt(
            &root.join(MANIFEST_FILE),
            format!(
                "sample {} has {} coefficients",
                entry.index,
                entry.coefficients.system()
            ),
        ));
    }
    let instance = Instance::new(domain, entry.coefficients.clone())?;
    if instance.graph.num_nodes() != entry.num_nodes || system.d_state() != entry.d_state {
        return Err(corrupt(
            &domain_path,
            format!(
                "domain has {} nodes, manifest declares {}",
                instance.graph.num_nodes(),
                entry.num_nodes
            ),
        ));
    }
    let dts_path = root.join(&entry.time_grid_file);
    let dts = read_f64_file(&dts_path, entry.steps, Some(&entry.time_grid_sha256))?;
    let time_grid = TimeGrid::new(dts).map_err(|e| corrupt(&dts_path, e.to_string()))?;
    let traj_path = root.join(&entry.trajectory_file);
    let len = (entry.steps + 1) * entry.num_nodes * entry.d_state;
    let flat = read_f64_file(&traj_path, len, Some(&entry.trajectory_sha256))?;
    let states = Array3::from_shape_vec((entry.steps + 1, entry.num_nodes, entry.d_state), flat)
        .map_err(|e| corrupt(&traj_path, e.to_string()))?;
    Ok(Sample {
        entry: entry.clone(),
        instance,
        trajectory: Trajectory::new(time_grid, states)?,
    })
}
