//! Experiment configuration.
//!
//! A configuration is a preset plus overrides. Overrides come from a flat
//! `key = value` text file and then from the command line, using the same key
//! names as the long CLI flags (`eta`, `delay`, `sync-every`, ...). Lines
//! starting with `#` are comments.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::presets::{Preset, IID_DISTANCE, INID_DEST, INID_RELAYS, INID_SOURCE};
use crate::agents::TrainConfig;
use crate::channel::{db_to_linear, Fading, Topology};
use crate::env::{EnvConfig, InvalidActionMode};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FadingSpec {
    Rayleigh,
    Fixed(f64),
}

impl fmt::Display for FadingSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FadingSpec::Rayleigh => f.write_str("rayleigh"),
            FadingSpec::Fixed(g) => write!(f, "fixed:{g}"),
        }
    }
}

impl FromStr for FadingSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "rayleigh" {
            return Ok(FadingSpec::Rayleigh);
        }
        s.strip_prefix("fixed:")
            .and_then(|g| g.parse().ok())
            .map(FadingSpec::Fixed)
            .ok_or_else(|| Error::InvalidConfig(format!("bad fading {s:?} (expected rayleigh or fixed:<gain>)")))
    }
}

/// Everything needed to build the environment and the learner.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub preset: Preset,
    pub relays: usize,
    pub buffer: usize,
    pub eta: f64,
    pub delay: u64,
    pub power_db: f64,
    pub alpha: f64,
    pub fading: FadingSpec,
    pub train: TrainConfig,
}

impl Experiment {
    pub fn from_preset(preset: Preset) -> Self {
        let (eta, delay, fading) = match preset {
            Preset::IidDefault | Preset::InidDefault => (8.0, 6, FadingSpec::Rayleigh),
            Preset::Toy => (8.0, 6, FadingSpec::Fixed(1.0)),
        };
        Self {
            preset,
            relays: preset.default_relays(),
            buffer: preset.default_buffer(),
            eta,
            delay,
            power_db: 50.0,
            alpha: 3.0,
            fading,
            train: TrainConfig::default(),
        }
    }

    pub fn topology(&self) -> Result<Topology> {
        let ptn = db_to_linear(self.power_db);
        match self.preset {
            Preset::IidDefault | Preset::Toy => Topology::equidistant(self.relays, IID_DISTANCE, self.alpha, ptn),
            Preset::InidDefault => {
                if self.relays > INID_RELAYS.len() {
                    return Err(Error::InvalidConfig(format!(
                        "the inid preset places at most {} relays",
                        INID_RELAYS.len()
                    )));
                }
                Topology::from_positions(INID_SOURCE, INID_DEST, &INID_RELAYS[..self.relays], self.alpha, ptn)
            }
        }
    }

    /// Environment configuration; invalid-action handling follows the assist mode.
    pub fn env_config(&self) -> Result<EnvConfig> {
        let cfg = EnvConfig {
            topology: self.topology()?,
            fading: match self.fading {
                FadingSpec::Rayleigh => Fading::Rayleigh,
                FadingSpec::Fixed(g) => Fading::Fixed(g),
            },
            buffer_size: self.buffer,
            eta: self.eta,
            target_delay: self.delay,
            invalid_action_mode: self.train.assist.env_mode(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn env_config_with_mode(&self, mode: InvalidActionMode) -> Result<EnvConfig> {
        Ok(EnvConfig { invalid_action_mode: mode, ..self.env_config()? })
    }

    pub fn validate(&self) -> Result<()> {
        self.env_config()?;
        self.train.validate()
    }

    /// Applies one `key = value` override.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn parse<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value.parse().map_err(|_| Error::InvalidConfig(format!("bad value {value:?} for {key}")))
        }
        let t = &mut self.train;
        match key {
            "preset" => {
                let preset: Preset = value.parse()?;
                if preset != self.preset {
                    return Err(Error::InvalidConfig("the preset must be chosen before other overrides".into()));
                }
            }
            "relays" => self.relays = parse(key, value)?,
            "buffer" => self.buffer = parse(key, value)?,
            "eta" => self.eta = parse(key, value)?,
            "delay" => self.delay = parse(key, value)?,
            "power-db" => self.power_db = parse(key, value)?,
            "alpha" => self.alpha = parse(key, value)?,
            "fading" => self.fading = value.parse()?,
            "algorithm" => t.algorithm = value.parse()?,
            "assist" => t.assist = value.parse()?,
            "seed" => t.seed = parse(key, value)?,
            "rounds" => t.rounds = parse(key, value)?,
            "discount" => t.discount = parse(key, value)?,
            "epsilon-decay" => t.epsilon_decay = parse(key, value)?,
            "epsilon-min" => t.epsilon_min = parse(key, value)?,
            "lr" => t.learning_rate = parse(key, value)?,
            "generate" => t.generate = parse(key, value)?,
            "batch" => t.batch = parse(key, value)?,
            "sync-every" => t.sync_every = parse(key, value)?,
            "eval-slots" => t.eval_slots = parse(key, value)?,
            "wall-clock" => t.record_wall_clock = parse(key, value)?,
            "hidden" => {
                t.hidden = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s.trim()))
                    .collect::<Result<_>>()?
            }
            _ => return Err(Error::InvalidConfig(format!("unknown setting {key:?}"))),
        }
        Ok(())
    }

    /// Effective settings as `(key, value)` pairs, in a fixed order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let t = &self.train;
        vec![
            ("preset", self.preset.to_string()),
            ("relays", self.relays.to_string()),
            ("buffer", self.buffer.to_string()),
            ("eta", self.eta.to_string()),
            ("delay", self.delay.to_string()),
            ("power-db", self.power_db.to_string()),
            ("alpha", self.alpha.to_string()),
            ("fading", self.fading.to_string()),
            ("algorithm", t.algorithm.to_string()),
            ("assist", t.assist.to_string()),
            ("seed", t.seed.to_string()),
            ("rounds", t.rounds.to_string()),
            ("discount", t.discount.to_string()),
            ("epsilon-decay", t.epsilon_decay.to_string()),
            ("epsilon-min", t.epsilon_min.to_string()),
            ("lr", t.learning_rate.to_string()),
            ("generate", t.generate.to_string()),
            ("batch", t.batch.to_string()),
            ("sync-every", t.sync_every.to_string()),
            ("hidden", t.hidden.iter().map(usize::to_string).collect::<Vec<_>>().join(",")),
            ("eval-slots", t.eval_slots.to_string()),
            ("wall-clock", t.record_wall_clock.to_string()),
        ]
    }
}

/// Parses `key = value` lines, skipping blanks and `#` comments.
pub fn parse_config_text(text: &str) -> Result<Vec<(String, String)>> {
    text.lines()
        .enumerate()
        .map(|(i, line)| (i, line.trim()))
        .filter(|(_, line)| !line.is_empty() && !line.starts_with('#'))
        .map(|(i, line)| {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::InvalidConfig(format!("line {}: expected key = value", i + 1)))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

/// Builds an experiment from an optional config file and CLI overrides.
///
/// The preset is resolved first (CLI, then file, then `iid_default`); file
/// settings are applied next and CLI settings last.
pub fn resolve(config_file: Option<&Path>, cli: &[(String, String)]) -> Result<Experiment> {
    let file = match config_file {
        Some(p) => parse_config_text(&std::fs::read_to_string(p)?)?,
        None => Vec::new(),
    };
    let preset_of = |entries: &[(String, String)]| entries.iter().rev().find(|(k, _)| k == "preset").map(|(_, v)| v.clone());
    let preset = match preset_of(cli).or_else(|| preset_of(&file)) {
        Some(name) => name.parse()?,
        None => Preset::IidDefault,
    };
    let mut exp = Experiment::from_preset(preset);
    for (k, v) in file.iter().chain(cli).filter(|(k, _)| k != "preset") {
        exp.set(k, v)?;
    }
    exp.validate()?;
    Ok(exp)
}
