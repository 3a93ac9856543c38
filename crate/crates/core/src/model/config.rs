use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{AdamWConfig, LrSchedule};
use crate::systems::SystemKind;

/// Where an encoder's input comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum InputSource {
    /// One state channel, as is.
    State { channel: usize },
    /// `(cos θ, sin θ)` of one state channel.
    Angle { channel: usize },
    /// A named static feature of the given width, multiplied by `scale`
    /// before encoding.
    Feature {
        name: String,
        dim: usize,
        #[serde(default = "unit_scale", skip_serializing_if = "is_unit_scale")]
        scale: f64,
    },
}

fn unit_scale() -> f64 {
    1.0
}

fn is_unit_scale(s: &f64) -> bool {
    *s == 1.0
}

impl InputSource {
    pub fn dim(&self) -> usize {
        match self {
            InputSource::State { .. } => 1,
            InputSource::Angle { .. } => 2,
            InputSource::Feature { dim, .. } => *dim,
        }
    }

    pub fn is_dynamic(&self) -> bool {
        !matches!(self, InputSource::Feature { .. })
    }

    pub fn label(&self) -> String {
        match self {
            InputSource::State { channel } => format!("state[{channel}]"),
            InputSource::Angle { channel } => format!("angle[{channel}]"),
            InputSource::Feature { name, .. } => name.clone(),
        }
    }

    pub fn feature(name: &str, dim: usize) -> Self {
        InputSource::scaled_feature(name, dim, 1.0)
    }

    pub fn scaled_feature(name: &str, dim: usize, scale: f64) -> Self {
        InputSource::Feature {
            name: name.into(),
            dim,
            scale,
        }
    }
}

/// Brings grid displacements (spacing 0.01 on the default 100 x 100 grid) and
/// the default viscosity 0.01 to order one.
pub const BURGERS_FEATURE_SCALE: f64 = 100.0;

/// Architecture of `f_θ`: one Mlp2 encoder per input, `num_modules` GN
/// modules and an Mlp2 decoder to the state width.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SystemModelConfig {
    pub system: SystemKind,
    pub node_inputs: Vec<InputSource>,
    pub edge_inputs: Vec<InputSource>,
    pub global_inputs: Vec<InputSource>,
    /// Output width of every encoder.
    pub embed_dim: usize,
    pub encoder_hidden: usize,
    /// Hidden width of both φ^e and φ^v.
    pub gn_hidden: usize,
    /// Output width of φ^e.
    pub message_dim: usize,
    /// Output width of φ^v.
    pub node_dim: usize,
    pub decoder_hidden: usize,
    pub num_modules: usize,
    /// φ^e sees the receiving node as well as the sender.
    pub receiver_in_message: bool,
    pub global_in_message: bool,
    pub global_in_node: bool,
}

impl SystemModelConfig {
    pub fn preset(system: SystemKind) -> Self {
        use InputSource::*;
        match system {
            SystemKind::Burgers => SystemModelConfig {
                system,
                node_inputs: vec![State { channel: 0 }, State { channel: 1 }],
                edge_inputs: vec![InputSource::scaled_feature("disp", 2, BURGERS_FEATURE_SCALE)],
                global_inputs: vec![InputSource::scaled_feature("nu", 1, BURGERS_FEATURE_SCALE)],
                embed_dim: 8,
                encoder_hidden: 32,
                gn_hidden: 32,
                message_dim: 32,
                node_dim: 16,
                decoder_hidden: 32,
                num_modules: 2,
                receiver_in_message: false,
                global_in_message: true,
                global_in_node: true,
            },
            SystemKind::Heat => SystemModelConfig {
                system,
                node_inputs: vec![State { channel: 0 }],
                edge_inputs: vec![InputSource::feature("D", 1)],
                global_inputs: vec![],
                embed_dim: 16,
                encoder_hidden: 16,
                gn_hidden: 64,
                message_dim: 16,
                node_dim: 16,
                decoder_hidden: 16,
                num_modules: 1,
                receiver_in_message: false,
                global_in_message: false,
                global_in_node: false,
            },
            SystemKind::Kuramoto => SystemModelConfig {
                system,
                node_inputs: vec![Angle { channel: 0 }, InputSource::feature("omega", 1)],
                edge_inputs: vec![InputSource::feature("K", 1)],
                global_inputs: vec![],
                embed_dim: 16,
                encoder_hidden: 64,
                gn_hidden: 64,
                message_dim: 16,
                node_dim: 32,
                decoder_hidden: 32,
                num_modules: 1,
                receiver_in_message: true,
                global_in_message: false,
                global_in_node: false,
            },
            SystemKind::Rossler => SystemModelConfig {
                system,
                node_inputs: vec![State { channel: 0 }, State { channel: 1 }, State { channel: 2 }],
                edge_inputs: vec![InputSource::feature("K", 1)],
                global_inputs: vec![
                    InputSource::feature("a", 1),
                    InputSource::feature("b", 1),
                    InputSource::feature("c", 1),
                ],
                embed_dim: 32,
                encoder_hidden: 32,
                gn_hidden: 128,
                message_dim: 32,
                node_dim: 96,
                decoder_hidden: 96,
                num_modules: 1,
                receiver_in_message: false,
                global_in_message: false,
                global_in_node: true,
            },
        }
    }

    pub fn d_state(&self) -> usize {
        self.system.d_state()
    }

    pub fn node_embed_width(&self) -> usize {
        self.embed_dim * self.node_inputs.len()
    }

    pub fn edge_embed_width(&self) -> usize {
        self.embed_dim * self.edge_inputs.len()
    }

    pub fn global_embed_width(&self) -> usize {
        self.embed_dim * self.global_inputs.len()
    }

    /// Node width entering GN module `k`.
    pub fn module_node_width(&self, k: usize) -> usize {
        if k == 0 {
            self.node_embed_width()
        } else {
            self.node_dim
        }
    }

    pub fn message_input_width(&self, k: usize) -> usize {
        let v = self.module_node_width(k);
        let receiver = if self.receiver_in_message { v } else { 0 };
        let global = if self.global_in_message {
            self.global_embed_width()
        } else {
            0
        };
        receiver + v + self.edge_embed_width() + global
    }

    pub fn node_update_input_width(&self, k: usize) -> usize {
        let global = if self.global_in_node {
            self.global_embed_width()
        } else {
            0
        };
        self.message_dim + self.module_node_width(k) + global
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::config(msg));
        let dims = [
            ("embed_dim", self.embed_dim),
            ("encoder_hidden", self.encoder_hidden),
            ("gn_hidden", self.gn_hidden),
            ("message_dim", self.message_dim),
            ("node_dim", self.node_dim),
            ("decoder_hidden", self.decoder_hidden),
            ("num_modules", self.num_modules),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return bad(format!("{name} must be positive"));
        }
        if !self.node_inputs.iter().any(InputSource::is_dynamic) {
            return bad("at least one node input must read the state".into());
        }
        let d = self.d_state();
        for input in &self.node_inputs {
            match input {
                InputSource::State { channel } | InputSource::Angle { channel } if *channel >= d => {
                    return bad(format!("{} exceeds the {d}-channel state", input.label()));
                }
                InputSource::Feature { dim, name, scale } if *dim == 0 || !scale.is_finite() || *scale == 0.0 => {
                    return bad(format!(
                        "feature {name} needs a positive width and a finite nonzero scale"
                    ));
                }
                _ => {}
            }
        }
        for input in self.edge_inputs.iter().chain(&self.global_inputs) {
            match input {
                InputSource::Feature { dim, scale, .. } if *dim > 0 && scale.is_finite() && *scale != 0.0 => {}
                other => {
                    return bad(format!(
                        "edge and global inputs must be features, got {}",
                        other.label()
                    ))
                }
            }
        }
        if (self.global_in_message || self.global_in_node) && self.global_inputs.is_empty() {
            return bad("global wiring enabled without global inputs".into());
        }
        if !self.global_inputs.is_empty() && !(self.global_in_message || self.global_in_node) {
            return bad("global inputs are not wired into any GN update".into());
        }
        Ok(())
    }

    /// Applies one `key=value` setting; returns false for keys it does not own.
    pub fn apply_setting(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "embed_dim" => self.embed_dim = parse(key, value)?,
            "encoder_hidden" => self.encoder_hidden = parse(key, value)?,
            "gn_hidden" => self.gn_hidden = parse(key, value)?,
            "message_dim" => self.message_dim = parse(key, value)?,
            "node_dim" => self.node_dim = parse(key, value)?,
            "decoder_hidden" => self.decoder_hidden = parse(key, value)?,
            "num_modules" => self.num_modules = parse(key, value)?,
            "receiver_in_message" => self.receiver_in_message = parse(key, value)?,
            _ if key.starts_with("scale.") => {
                let target = &key["scale.".len()..];
                let new_scale: f64 = parse(key, value)?;
                let mut found = false;
                for input in self
                    .node_inputs
                    .iter_mut()
                    .chain(&mut self.edge_inputs)
                    .chain(&mut self.global_inputs)
                {
                    if let InputSource::Feature { name, scale, .. } = input {
                        if name == target {
                            *scale = new_scale;
                            found = true;
                        }
                    }
                }
                if !found {
                    return Err(Error::config(format!("no feature input named {target:?}")));
                }
            }
            "global_in_message" => self.global_in_message = parse(key, value)?,
            "global_in_node" => self.global_in_node = parse(key, value)?,
            _ => return Ok(false),
        }
        Ok(true)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    /// One-step pairs per optimizer update.
    pub batch_size: usize,
    /// RK order used inside the training step.
    pub order: usize,
    pub schedule: LrSchedule,
    pub optimizer: AdamWConfig,
    /// Global gradient-norm cap; off when `None`.
    pub grad_clip: Option<f64>,
    /// Random subset of pairs visited per epoch; all pairs when `None`.
    pub pairs_per_epoch: Option<usize>,
    pub seed: u64,
}

impl TrainConfig {
    /// Per-system schedules and epoch budgets; coupled systems train at order 1.
    pub fn preset(system: SystemKind) -> Self {
        let cosine = |lr_min, lr_max, period, period_factor, peak_factor| LrSchedule::CosineCycles {
            lr_min,
            lr_max,
            period,
            period_factor,
            peak_factor,
        };
        let (epochs, batch_size, order, schedule) = match system {
            SystemKind::Burgers => (
                500,
                4,
                4,
                LrSchedule::Milestones {
                    table: vec![(0, 0.004), (20, 0.002), (50, 0.001)],
                },
            ),
            SystemKind::Heat => (630, 32, 1, cosine(1e-4, 1e-2, 10.0, 2.0, 0.7)),
            SystemKind::Kuramoto => (310, 32, 1, cosine(1e-5, 1e-2, 10.0, 2.0, 0.5)),
            SystemKind::Rossler => (2000, 32, 1, cosine(1e-5, 2e-3, 20.0, 1.4, 0.6)),
        };
        TrainConfig {
            epochs,
            batch_size,
            order,
            schedule,
            optimizer: AdamWConfig::default(),
            grad_clip: None,
            pairs_per_epoch: None,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || !(1..=4).contains(&self.order) {
            return Err(Error::config(format!(
                "epochs and batch_size must be positive and order in 1..=4 (got {}, {}, {})",
                self.epochs, self.batch_size, self.order
            )));
        }
        if self.pairs_per_epoch == Some(0) || self.grad_clip.is_some_and(|c| !(c > 0.0)) {
            return Err(Error::config("pairs_per_epoch and grad_clip must be positive"));
        }
        self.schedule.validate()
    }

    /// Applies one `key=value` setting; returns false for keys it does not own.
    ///
    /// Schedules: `schedule=constant|milestones|cosine`, with `lr`,
    /// `milestones=0:0.004,20:0.002`, or `lr_min`, `lr_max`, `period`,
    /// `period_factor`, `peak_factor`.
    pub fn apply_setting(&mut self, key: &str, value: &str) -> Result<bool> {
        match key {
            "epochs" => self.epochs = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "order" | "train_order" => self.order = parse(key, value)?,
            "weight_decay" => self.optimizer.weight_decay = parse(key, value)?,
            "beta1" => self.optimizer.beta1 = parse(key, value)?,
            "beta2" => self.optimizer.beta2 = parse(key, value)?,
            "eps" => self.optimizer.eps = parse(key, value)?,
            "grad_clip" => self.grad_clip = parse_optional(key, value)?,
            "pairs_per_epoch" => self.pairs_per_epoch = parse_optional(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "schedule" => {
                self.schedule = match value {
                    "constant" => LrSchedule::Constant { lr: 1e-3 },
                    "milestones" => LrSchedule::Milestones { table: vec![(0, 1e-3)] },
                    "cosine" => LrSchedule::CosineCycles {
                        lr_min: 1e-5,
                        lr_max: 1e-2,
                        period: 10.0,
                        period_factor: 2.0,
                        peak_factor: 0.5,
                    },
                    other => return Err(Error::config(format!("unknown schedule {other:?}"))),
                }
            }
            "lr" => match &mut self.schedule {
                LrSchedule::Constant { lr } => *lr = parse(key, value)?,
                _ => return Err(Error::config("`lr` needs schedule=constant")),
            },
            "milestones" => match &mut self.schedule {
                LrSchedule::Milestones { table } => *table = parse_milestones(value)?,
                _ => return Err(Error::config("`milestones` needs schedule=milestones")),
            },
            "lr_min" | "lr_max" | "period" | "period_factor" | "peak_factor" => {
                let LrSchedule::CosineCycles {
                    lr_min,
                    lr_max,
                    period,
                    period_factor,
                    peak_factor,
                } = &mut self.schedule
                else {
                    return Err(Error::config(format!("`{key}` needs schedule=cosine")));
                };
                let slot = match key {
                    "lr_min" => lr_min,
                    "lr_max" => lr_max,
                    "period" => period,
                    "period_factor" => period_factor,
                    _ => peak_factor,
                };
                *slot = parse(key, value)?;
            }
            _ => return Ok(false),
        }
        Ok(true)
    }
}

pub(crate) fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse()
        .map_err(|_| Error::config(format!("invalid value {value:?} for {key}")))
}

pub(crate) fn parse_optional<T: std::str::FromStr>(key: &str, value: &str) -> Result<Option<T>> {
    match value.trim() {
        "" | "none" | "off" => Ok(None),
        v => parse(key, v).map(Some),
    }
}

fn parse_milestones(value: &str) -> Result<Vec<(usize, f64)>> {
    value
        .split(',')
        .map(|item| {
            let (e, lr) = item
                .split_once(':')
                .ok_or_else(|| Error::config(format!("milestone {item:?} is not epoch:lr")))?;
            Ok((parse("milestones", e)?, parse("milestones", lr)?))
        })
        .collect()
}

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse_settings(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}: expected key=value", i + 1)))?;
        out.push((k.trim().to_string(), v.trim().to_string()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for s in [
            SystemKind::Burgers,
            SystemKind::Heat,
            SystemKind::Kuramoto,
            SystemKind::Rossler,
        ] {
            SystemModelConfig::preset(s).validate().unwrap();
            TrainConfig::preset(s).validate().unwrap();
        }
    }

    #[test]
    fn settings_round() {
        let text = "# heat\nepochs = 5\nschedule=milestones\nmilestones=0:0.01,3:0.001\ngn_hidden=8\n";
        let mut m = SystemModelConfig::preset(SystemKind::Heat);
        let mut t = TrainConfig::preset(SystemKind::Heat);
        for (k, v) in parse_settings(text).unwrap() {
            let used = m.apply_setting(&k, &v).unwrap() || t.apply_setting(&k, &v).unwrap();
            assert!(used, "{k}");
        }
        assert_eq!(t.epochs, 5);
        assert_eq!(m.gn_hidden, 8);
        assert_eq!(t.schedule.lr_at(4), 0.001);
        assert!(parse_settings("novalue").is_err());
        assert!(t.apply_setting("epochs", "many").is_err());
        assert!(!t.apply_setting("colour", "red").unwrap());
    }

    #[test]
    fn invalid_configs() {
        let mut c = SystemModelConfig::preset(SystemKind::Heat);
        c.node_inputs = vec![InputSource::feature("x", 1)];
        assert!(c.validate().is_err());
        let mut c = SystemModelConfig::preset(SystemKind::Heat);
        c.node_inputs = vec![InputSource::State { channel: 1 }];
        assert!(c.validate().is_err());
        let mut c = SystemModelConfig::preset(SystemKind::Heat);
        c.global_in_node = true;
        assert!(c.validate().is_err());
    }

    #[test]
    fn feature_scales() {
        let mut c = SystemModelConfig::preset(SystemKind::Burgers);
        let json = serde_json::to_string(&c).unwrap();
        assert!(json.contains("\"scale\":100.0"), "{json}");
        c.apply_setting("scale.disp", "2.5").unwrap();
        assert!(
            matches!(&c.edge_inputs[0], InputSource::Feature { name, scale, .. } if name == "disp" && *scale == 2.5)
        );
        assert!(c.apply_setting("scale.missing", "2").is_err());
        assert!(c.apply_setting("scale.nu", "0").is_err() || c.validate().is_err());

        let heat = SystemModelConfig::preset(SystemKind::Heat);
        let json = serde_json::to_string(&heat).unwrap();
        assert!(!json.contains("scale"), "{json}");
        let back: SystemModelConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, heat);
    }
}
