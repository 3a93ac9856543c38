use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use gnrk::dataset::{
    generate_burgers, generate_coupled, load_dataset, BurgersConfig, BurgersVariant, CoupledConfig, DatasetManifest,
    Split, MANIFEST_FILE,
};
use gnrk::eval::{evaluate, GroupKey};
use gnrk::io::{create_dir_all, read_json, write_f64_file, write_json};
use gnrk::model::{
    build_model, load_checkpoint, parse_settings, save_checkpoint, train_dataset, CheckpointHeader, SystemModelConfig,
    TrainConfig, HEADER_FILE,
};
use gnrk::systems::SystemKind;
use gnrk::{Error, Result};
use serde::Serialize;

const LOSS_FILE: &str = "loss.csv";
const ROLLOUT_INDEX: &str = "rollouts.json";

#[derive(Parser)]
#[command(name = "gnrk", version, about = "Graph neural Runge-Kutta surrogates")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SystemArg {
    Burgers,
    Heat,
    Kuramoto,
    Rossler,
}

impl From<SystemArg> for SystemKind {
    fn from(s: SystemArg) -> Self {
        match s {
            SystemArg::Burgers => SystemKind::Burgers,
            SystemArg::Heat => SystemKind::Heat,
            SystemArg::Kuramoto => SystemKind::Kuramoto,
            SystemArg::Rossler => SystemKind::Rossler,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate ground-truth trajectories into a dataset directory.
    Generate {
        #[arg(long, value_enum)]
        system: SystemArg,
        /// Burgers dataset variant (I, II, III or IV).
        #[arg(long, default_value = "I")]
        variant: BurgersVariant,
        #[arg(long)]
        n_train: usize,
        #[arg(long)]
        n_test: usize,
        #[arg(long)]
        seed: u64,
        /// key=value overrides of the dataset defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model on the train split; writes a checkpoint and loss.csv.
    Train {
        #[arg(long)]
        dataset: PathBuf,
        /// key=value overrides of the model and training presets.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Predict trajectories from the initial states of dataset samples.
    Rollout {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        #[arg(long, default_value_t = 4)]
        order: usize,
        #[arg(long, default_value = "test")]
        split: Split,
        /// Sample indices; every sample of the split when omitted.
        #[arg(long, value_delimiter = ',')]
        samples: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Roll out every test sample and write report.json and mae_over_time.csv.
    Eval {
        #[arg(long)]
        ckpt: PathBuf,
        #[arg(long)]
        dataset: PathBuf,
        /// Inference orders; repeat or separate with commas.
        #[arg(long, value_delimiter = ',', default_value = "4")]
        order: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_value = "order,topology")]
        group_by: Vec<GroupKey>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Summarize a dataset directory or a checkpoint directory.
    Inspect { path: PathBuf },
}

fn read_settings(path: Option<&Path>) -> Result<Vec<(String, String)>> {
    let Some(path) = path else {
        return Ok(Vec::new());
    };
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_settings(&text)
}

fn unknown_key(key: &str) -> Error {
    Error::Config(format!("unknown setting {key:?}"))
}

fn generate(
    system: SystemKind,
    variant: BurgersVariant,
    n_train: usize,
    n_test: usize,
    seed: u64,
    config: Option<&Path>,
    out: &Path,
) -> Result<()> {
    let settings = read_settings(config)?;
    let manifest = if system == SystemKind::Burgers {
        let mut cfg = BurgersConfig::new(variant, n_train, n_test, seed);
        for (k, v) in &settings {
            if !cfg.apply_setting(k, v)? {
                return Err(unknown_key(k));
            }
        }
        generate_burgers(&cfg, out)?
    } else {
        let mut cfg = CoupledConfig::new(system, n_train, n_test, seed)?;
        for (k, v) in &settings {
            if !cfg.apply_setting(k, v)? {
                return Err(unknown_key(k));
            }
        }
        generate_coupled(&cfg, out)?
    };
    println!(
        "wrote {} {} samples ({} train, {} test) to {}",
        manifest.samples.len(),
        manifest.system,
        manifest.count(Split::Train),
        manifest.count(Split::Test),
        out.display()
    );
    Ok(())
}

fn train(dataset: &Path, config: Option<&Path>, seed: u64, out: &Path) -> Result<()> {
    let data = load_dataset(dataset)?;
    let system = data.system();
    let mut model_cfg = SystemModelConfig::preset(system);
    let mut train_cfg = TrainConfig::preset(system);
    for (k, v) in read_settings(config)? {
        if !model_cfg.apply_setting(&k, &v)? && !train_cfg.apply_setting(&k, &v)? {
            return Err(unknown_key(&k));
        }
    }
    train_cfg.seed = seed;
    let mut model = build_model(&model_cfg, seed)?;
    eprintln!("training {system} model with {} parameters", model.num_params());
    let report = train_dataset(&mut model, &data, &train_cfg, |s| {
        eprintln!("epoch {:>5}  lr {:.3e}  train_mse {:.4e}", s.epoch, s.lr, s.train_mse)
    })?;
    let header = save_checkpoint(out, &model, train_cfg.epochs, Some(&train_cfg))?;
    let path = out.join(LOSS_FILE);
    fs::write(&path, report.to_csv()).map_err(|source| Error::Io { path, source })?;
    println!(
        "wrote checkpoint {} ({} parameters) to {}",
        header.params_sha256,
        header.num_params,
        out.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RolloutEntry {
    sample: usize,
    order: usize,
    steps: usize,
    num_nodes: usize,
    d_state: usize,
    trajectory_file: String,
    trajectory_sha256: String,
}

fn rollout(ckpt: &Path, dataset: &Path, order: usize, split: Split, picks: &[usize], out: &Path) -> Result<()> {
    let (model, _) = load_checkpoint(ckpt)?;
    let data = load_dataset(dataset)?;
    if data.system() != model.config.system {
        return Err(Error::Config(format!(
            "model is for {}, dataset holds {}",
            model.config.system,
            data.system()
        )));
    }
    let chosen: Vec<_> = if picks.is_empty() {
        data.split(split).collect()
    } else {
        picks
            .iter()
            .map(|i| {
                data.samples
                    .iter()
                    .find(|s| s.entry.index == *i)
                    .ok_or_else(|| Error::Usage(format!("no sample with index {i}")))
            })
            .collect::<Result<_>>()?
    };
    create_dir_all(out)?;
    let mut index = Vec::new();
    for s in chosen {
        let truth = &s.trajectory;
        let pred = model.rollout(&s.instance, truth.state(0), &truth.time_grid, order)?;
        let name = format!("{}.traj.bin", s.entry.index);
        let sha = write_f64_file(&out.join(&name), pred.states.as_slice().expect("standard layout"))?;
        index.push(RolloutEntry {
            sample: s.entry.index,
            order,
            steps: pred.num_steps(),
            num_nodes: pred.num_nodes(),
            d_state: pred.d_state(),
            trajectory_file: name,
            trajectory_sha256: sha,
        });
    }
    write_json(&out.join(ROLLOUT_INDEX), &index)?;
    println!("wrote {} rollouts to {}", index.len(), out.display());
    Ok(())
}

fn eval(ckpt: &Path, dataset: &Path, orders: &[usize], group_by: &[GroupKey], out: &Path) -> Result<()> {
    let (model, _) = load_checkpoint(ckpt)?;
    let data = load_dataset(dataset)?;
    let report = evaluate(&model, &data, orders, group_by)?;
    report.write(out)?;
    for row in report.rows.iter().chain(std::iter::once(&report.total)) {
        let order = row.order.map_or("all".to_string(), |o| format!("RK{o}"));
        let topology = row.topology.map_or("all".to_string(), |t| t.to_string());
        println!(
            "{order:>4} {topology:>4}  n={:<3} mean MAE {:.4e}  max {:.4e}  final {:.4e}",
            row.count, row.mean_mae, row.max_mae, row.mean_final_mae
        );
    }
    Ok(())
}

fn inspect(path: &Path) -> Result<()> {
    if path.join(MANIFEST_FILE).is_file() || path.file_name().is_some_and(|n| n == MANIFEST_FILE) {
        let file = if path.is_dir() {
            path.join(MANIFEST_FILE)
        } else {
            path.to_path_buf()
        };
        let m: DatasetManifest = read_json(&file)?;
        println!("dataset {}", path.display());
        println!("  system   {}", m.system);
        println!("  variant  {}", m.variant);
        println!("  seed     {}", m.seed);
        println!(
            "  samples  {} train, {} test",
            m.count(Split::Train),
            m.count(Split::Test)
        );
        for s in &m.samples {
            let topology = s.topology.map_or(String::new(), |t| format!(" {t}"));
            println!(
                "  #{:<4} {:<5} nodes {:<5} steps {:<5} order {}{topology}",
                s.index, s.split, s.num_nodes, s.steps, s.order
            );
        }
        return Ok(());
    }
    if path.join(HEADER_FILE).is_file() {
        let h: CheckpointHeader = read_json(&path.join(HEADER_FILE))?;
        let c = &h.config;
        println!("checkpoint {}", path.display());
        println!("  format      {}", h.format);
        println!("  system      {}", c.system);
        println!("  parameters  {}", h.num_params);
        println!("  epochs      {}", h.epoch);
        println!(
            "  widths      embed {} encoder {} gn {} message {} node {} decoder {} modules {}",
            c.embed_dim, c.encoder_hidden, c.gn_hidden, c.message_dim, c.node_dim, c.decoder_hidden, c.num_modules
        );
        let inputs = |xs: &[gnrk::model::InputSource]| xs.iter().map(|x| x.label()).collect::<Vec<_>>().join(", ");
        println!("  node in     {}", inputs(&c.node_inputs));
        println!("  edge in     {}", inputs(&c.edge_inputs));
        println!("  global in   {}", inputs(&c.global_inputs));
        if let Some(t) = &h.train {
            println!("  train       order {} batch {} seed {}", t.order, t.batch_size, t.seed);
        }
        if let Some(lr) = h.next_lr {
            println!("  next lr     {lr:e}");
        }
        println!("  sha256      {}", h.params_sha256);
        return Ok(());
    }
    Err(Error::Usage(format!(
        "{} is neither a dataset nor a checkpoint",
        path.display()
    )))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            system,
            variant,
            n_train,
            n_test,
            seed,
            config,
            out,
        } => generate(system.into(), variant, n_train, n_test, seed, config.as_deref(), &out),
        Command::Train {
            dataset,
            config,
            seed,
            out,
        } => train(&dataset, config.as_deref(), seed, &out),
        Command::Rollout {
            ckpt,
            dataset,
            order,
            split,
            samples,
            out,
        } => rollout(&ckpt, &dataset, order, split, &samples, &out),
        Command::Eval {
            ckpt,
            dataset,
            order,
            group_by,
            out,
        } => eval(&ckpt, &dataset, &order, &group_by, &out),
        Command::Inspect { path } => inspect(&path),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
