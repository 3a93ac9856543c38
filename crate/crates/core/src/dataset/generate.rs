use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{DatasetManifest, SampleEntry, SampleMeta, Split, MANIFEST_FILE};
use crate::domain::{
    build_nonuniform_grid, gen_barabasi_albert, gen_erdos_renyi, gen_random_regular, Domain, Graph, GridSpec, Topology,
    MAX_ATTEMPTS,
};
use crate::error::{Error, Result};
use crate::io::{create_dir_all, write_f64_file, write_json};
use crate::model::config::parse;
use crate::rng::{derive_seed, rng_from_seed};
use crate::solver::{butcher, integrate, TimeGrid, Trajectory};
use crate::systems::{
    sample_burgers_ic, sample_coeffs, sample_graph_ic, BurgersCoeffs, BurgersIcVariant, Coefficients, IcRecord,
    Instance, SystemKind, DEFAULT_NU, NU_RANGE,
};

/// Seed stream for training samples; test samples use [`TEST_STREAM`].
pub const TRAIN_STREAM: u64 = 1;
pub const TEST_STREAM: u64 = 2;

// Sub-streams within one sample seed.
const GRAPH: u64 = 1;
const COEFF: u64 = 2;
const IC: u64 = 3;
const DT: u64 = 4;
const SHAPE: u64 = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum BurgersVariant {
    /// Random initial conditions.
    I,
    /// Random viscosity.
    II,
    /// Random nonuniform grids.
    III,
    /// Nonuniform time steps; first-order training data.
    IV,
}

impl fmt::Display for BurgersVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for BurgersVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "I" | "1" => Ok(BurgersVariant::I),
            "II" | "2" => Ok(BurgersVariant::II),
            "III" | "3" => Ok(BurgersVariant::III),
            "IV" | "4" => Ok(BurgersVariant::IV),
            other => Err(Error::config(format!("unknown Burgers variant {other:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BurgersConfig {
    pub variant: BurgersVariant,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Nodes per axis on the default grid.
    pub grid_size: usize,
    /// Inclusive per-axis node range for variant III.
    pub grid_size_range: (usize, usize),
    pub spacing_jitter: f64,
    pub total_time: f64,
    pub steps: usize,
    pub dt_jitter: f64,
    pub nu: f64,
    /// Reuse one random draw for both velocity components.
    pub shared_ic: bool,
    pub train_order: usize,
    pub test_order: usize,
}

impl BurgersConfig {
    pub fn new(variant: BurgersVariant, n_train: usize, n_test: usize, seed: u64) -> Self {
        let train_order = if variant == BurgersVariant::IV { 1 } else { 4 };
        BurgersConfig {
            variant,
            n_train,
            n_test,
            seed,
            grid_size: 100,
            grid_size_range: (50, 150),
            spacing_jitter: 0.1,
            total_time: 1.0,
            steps: 1000,
            dt_jitter: 0.1,
            nu: DEFAULT_NU,
            shared_ic: false,
            train_order,
            test_order: 4,
        }
    }

    /// Applies one `key=value` setting; returns false for keys it does not own.
    pub fn apply_setting(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "grid_size" => self.grid_size = parse(key, value)?,
            "grid_min" => self.grid_size_range.0 = parse(key, value)?,
            "grid_max" => self.grid_size_range.1 = parse(key, value)?,
            "spacing_jitter" => self.spacing_jitter = parse(key, value)?,
            "total_time" => self.total_time = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "dt_jitter" => self.dt_jitter = parse(key, value)?,
            "nu" => self.nu = parse(key, value)?,
            "shared_ic" => self.shared_ic = parse(key, value)?,
            "train_order" => self.train_order = parse(key, value)?,
            "test_order" => self.test_order = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.grid_size_range;
        if self.grid_size < 3 || lo < 3 || lo > hi || self.steps == 0 || !(self.total_time > 0.0) {
            return Err(Error::config(format!("invalid Burgers dataset config {self:?}")));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoupledConfig {
    pub system: SystemKind,
    pub n_train: usize,
    pub n_test: usize,
    pub seed: u64,
    /// Inclusive node-count range.
    pub node_range: (usize, usize),
    pub degree_range: (f64, f64),
    /// Each sample draws its topology uniformly from this list.
    pub topologies: Vec<Topology>,
    pub total_time: f64,
    pub steps: usize,
    pub dt_jitter: f64,
    pub train_order: usize,
    pub test_order: usize,
}

impl CoupledConfig {
    /// Per-system defaults: heat 2 s over 100 steps, Kuramoto 10 s over 500,
    /// Rössler 40 s over 2000.
    pub fn new(system: SystemKind, n_train: usize, n_test: usize, seed: u64) -> Result<Self> {
        let (total_time, steps) = match system {
            SystemKind::Heat => (2.0, 100),
            SystemKind::Kuramoto => (10.0, 500),
            SystemKind::Rossler => (40.0, 2000),
            SystemKind::Burgers => return Err(Error::config("Burgers datasets use BurgersConfig")),
        };
        Ok(CoupledConfig {
            system,
            n_train,
            n_test,
            seed,
            node_range: (50, 150),
            degree_range: (2.0, 6.0),
            topologies: Topology::ALL.to_vec(),
            total_time,
            steps,
            dt_jitter: 0.1,
            train_order: 1,
            test_order: 4,
        })
    }

    /// Applies one `key=value` setting; returns false for keys it does not own.
    /// `topologies` takes a comma-separated list such as `RR,BA`.
    pub fn apply_setting(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "nodes_min" => self.node_range.0 = parse(key, value)?,
            "nodes_max" => self.node_range.1 = parse(key, value)?,
            "degree_min" => self.degree_range.0 = parse(key, value)?,
            "degree_max" => self.degree_range.1 = parse(key, value)?,
            "topologies" => self.topologies = value.split(',').map(|t| t.trim().parse()).collect::<Result<_>>()?,
            "total_time" => self.total_time = parse(key, value)?,
            "steps" => self.steps = parse(key, value)?,
            "dt_jitter" => self.dt_jitter = parse(key, value)?,
            "train_order" => self.train_order = parse(key, value)?,
            "test_order" => self.test_order = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.node_range;
        let (klo, khi) = self.degree_range;
        if self.system == SystemKind::Burgers
            || lo < 3
            || lo > hi
            || !(klo > 0.0 && klo <= khi)
            || self.topologies.is_empty()
            || self.steps == 0
            || !(self.total_time > 0.0)
        {
            return Err(Error::config(format!("invalid coupled dataset config {self:?}")));
        }
        Ok(())
    }
}

struct Generated {
    instance: Instance,
    trajectory: Trajectory,
    ic: IcRecord,
    topology: Option<Topology>,
    order: usize,
}

fn sample_seeds(seed: u64, n_train: usize, n_test: usize) -> Vec<(Split, u64)> {
    let train = (0..n_train).map(|i| (Split::Train, derive_seed(seed, TRAIN_STREAM, i as u64)));
    let test = (0..n_test).map(|i| (Split::Test, derive_seed(seed, TEST_STREAM, i as u64)));
    train.chain(test).collect()
}

/// Generates a Burgers dataset into `out` and returns its manifest.
///
/// Only the variant's target attribute is randomized; everything else stays
/// at the configured defaults.
pub fn generate_burgers(cfg: &BurgersConfig, out: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    write_dataset(
        out,
        SystemKind::Burgers,
        cfg.variant.to_string(),
        cfg.seed,
        sample_seeds(cfg.seed, cfg.n_train, cfg.n_test),
        |split, seed| burgers_sample(cfg, split, seed),
    )
}

/// Generates a heat, Kuramoto or Rössler dataset into `out`.
pub fn generate_coupled(cfg: &CoupledConfig, out: &Path) -> Result<DatasetManifest> {
    cfg.validate()?;
    write_dataset(
        out,
        cfg.system,
        "coupled".into(),
        cfg.seed,
        sample_seeds(cfg.seed, cfg.n_train, cfg.n_test),
        |split, seed| coupled_sample(cfg, split, seed),
    )
}

fn write_dataset(
    out: &Path,
    system: SystemKind,
    variant: String,
    seed: u64,
    seeds: Vec<(Split, u64)>,
    mut make: impl FnMut(Split, u64) -> Result<Generated>,
) -> Result<DatasetManifest> {
    create_dir_all(out)?;
    let mut samples = Vec::with_capacity(seeds.len());
    for (index, (split, sample_seed)) in seeds.into_iter().enumerate() {
        let generated = make(split, sample_seed).map_err(|e| Error::Sample {
            seed: sample_seed,
            source: Box::new(e),
        })?;
        samples.push(write_sample(out, system, index, split, sample_seed, generated)?);
    }
    let manifest = DatasetManifest {
        system,
        variant,
        seed,
        samples,
    };
    write_json(&out.join(MANIFEST_FILE), &manifest)?;
    Ok(manifest)
}

fn write_sample(
    out: &Path,
    system: SystemKind,
    index: usize,
    split: Split,
    seed: u64,
    g: Generated,
) -> Result<SampleEntry> {
    let rel = format!("samples/{index}");
    let dir = out.join(&rel);
    create_dir_all(&dir)?;
    let file = |name: &str| format!("{rel}/{name}");
    write_json(&dir.join("domain.json"), &g.instance.domain)?;
    let flat: Vec<f64> = g.trajectory.states.iter().copied().collect();
    let trajectory_sha256 = write_f64_file(&dir.join("traj.bin"), &flat)?;
    let time_grid_sha256 = write_f64_file(&dir.join("dts.bin"), g.trajectory.time_grid.dts())?;
    let meta = SampleMeta {
        system,
        coefficients: g.instance.coeffs.clone(),
        steps: g.trajectory.num_steps(),
        d_state: g.trajectory.d_state(),
        num_nodes: g.trajectory.num_nodes(),
        order: g.order,
        seed,
    };
    write_json(&dir.join("meta.json"), &meta)?;
    Ok(SampleEntry {
        index,
        split,
        seed,
        domain_file: file("domain.json"),
        trajectory_file: file("traj.bin"),
        time_grid_file: file("dts.bin"),
        meta_file: file("meta.json"),
        order: g.order,
        steps: meta.steps,
        num_nodes: meta.num_nodes,
        d_state: meta.d_state,
        topology: g.topology,
        coefficients: meta.coefficients,
        ic: g.ic,
        trajectory_sha256,
        time_grid_sha256,
    })
}

fn burgers_sample(cfg: &BurgersConfig, split: Split, seed: u64) -> Result<Generated> {
    let sub = |stream| derive_seed(seed, stream, 0);
    let grid = if cfg.variant == BurgersVariant::III {
        let mut rng = rng_from_seed(sub(SHAPE));
        let (lo, hi) = cfg.grid_size_range;
        let nx = rng.random_range(lo..=hi);
        let ny = rng.random_range(lo..=hi);
        build_nonuniform_grid(nx, ny, cfg.spacing_jitter, true, sub(GRAPH))?
    } else {
        GridSpec::uniform(cfg.grid_size, cfg.grid_size, true)?
    };
    let nu = if cfg.variant == BurgersVariant::II {
        rng_from_seed(sub(COEFF)).random_range(NU_RANGE.0..=NU_RANGE.1)
    } else {
        cfg.nu
    };
    let ic_variant = if cfg.variant == BurgersVariant::I {
        BurgersIcVariant::Random
    } else {
        BurgersIcVariant::Default
    };
    let (s0, [u, v]) = sample_burgers_ic(&grid, ic_variant, cfg.shared_ic, sub(IC));
    let time_grid = if cfg.variant == BurgersVariant::IV {
        TimeGrid::jittered(cfg.total_time, cfg.steps, cfg.dt_jitter, sub(DT))?
    } else {
        TimeGrid::uniform(cfg.total_time, cfg.steps)?
    };
    let order = match split {
        Split::Train => cfg.train_order,
        Split::Test => cfg.test_order,
    };
    let instance = Instance::new(Domain::Grid(grid), Coefficients::Burgers(BurgersCoeffs { nu }))?;
    let trajectory = integrate(&*instance.rhs()?, s0.view(), &time_grid, &butcher(order)?)?;
    Ok(Generated {
        instance,
        trajectory,
        ic: IcRecord::Burgers { u, v },
        topology: None,
        order,
    })
}

/// Draws a topology, then `(n, k)` pairs until the generator yields a
/// connected graph. Regular graphs use degree `round(k)`; Barabási–Albert
/// attaches `max(1, round(k / 2))` edges per new node.
fn draw_graph(cfg: &CoupledConfig, seed: u64) -> Result<(Graph, Topology)> {
    let mut rng = rng_from_seed(derive_seed(seed, GRAPH, 0));
    let topology = cfg.topologies[rng.random_range(0..cfg.topologies.len())];
    let (lo, hi) = cfg.node_range;
    let (klo, khi) = cfg.degree_range;
    for attempt in 1..=MAX_ATTEMPTS as u64 {
        let n = rng.random_range(lo..=hi);
        let k: f64 = rng.random_range(klo..=khi);
        let graph_seed = derive_seed(seed, GRAPH, attempt);
        let result = match topology {
            Topology::RandomRegular => {
                let degree = k.round() as usize;
                if degree == 0 || degree >= n || !(n * degree).is_multiple_of(2) {
                    continue;
                }
                gen_random_regular(n, degree, graph_seed)
            }
            Topology::ErdosRenyi => gen_erdos_renyi(n, k.min((n - 1) as f64), graph_seed),
            Topology::BarabasiAlbert => {
                let attach = ((k / 2.0).round() as usize).clamp(1, n - 1);
                gen_barabasi_albert(n, attach, graph_seed)
            }
        };
        match result {
            Ok(graph) => return Ok((graph, topology)),
            Err(Error::Generation(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::Generation(format!(
        "no connected {topology} graph after {MAX_ATTEMPTS} size/degree draws"
    )))
}

fn coupled_sample(cfg: &CoupledConfig, split: Split, seed: u64) -> Result<Generated> {
    let sub = |stream| derive_seed(seed, stream, 0);
    let (graph, topology) = draw_graph(cfg, seed)?;
    let coeffs = sample_coeffs(cfg.system, &graph, sub(COEFF));
    let (s0, ic) = sample_graph_ic(cfg.system, &graph, sub(IC))?;
    let time_grid = if cfg.dt_jitter > 0.0 {
        TimeGrid::jittered(cfg.total_time, cfg.steps, cfg.dt_jitter, sub(DT))?
    } else {
        TimeGrid::uniform(cfg.total_time, cfg.steps)?
    };
    let order = match split {
        Split::Train => cfg.train_order,
        Split::Test => cfg.test_order,
    };
    let instance = Instance::new(Domain::Graph(graph), coeffs)?;
    let trajectory = integrate(&*instance.rhs()?, s0.view(), &time_grid, &butcher(order)?)?;
    Ok(Generated {
        instance,
        trajectory,
        ic,
        topology: Some(topology),
        order,
    })
}
