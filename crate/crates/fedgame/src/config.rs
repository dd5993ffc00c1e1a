//! Flat TOML experiment configuration.
//!
//! ```toml
//! profile = "fast"
//! n = 5
//! trials = 5
//! master_seed = 7
//! attack_cost = 0.1
//! defense_cost = 0.05
//! noise_power = 0.001
//! ```
//!
//! Every key is optional. Unknown keys are rejected, as are the schedule
//! sizes that the profile fixes.

use std::fs;
use std::path::{Path, PathBuf};

use fedgame_core::fl::FlConfig;
use fedgame_core::game::GameCosts;
use fedgame_core::nn::RmsProp;
use fedgame_core::signal::ChannelConfig;
use serde::Deserialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// 20 rounds, 200 samples per client.
    Fast,
    /// 100 rounds, 1000 samples per client.
    Paper,
}

impl Profile {
    pub fn fl(self) -> FlConfig {
        match self {
            Profile::Fast => FlConfig::fast(),
            Profile::Paper => FlConfig::paper(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub profile: Profile,
    pub n: usize,
    pub trials: usize,
    pub costs: GameCosts,
    pub channel: ChannelConfig,
    pub fl: FlConfig,
    pub output_dir: PathBuf,
    pub master_seed: u64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig::for_profile(Profile::Paper)
    }
}

pub const KEYS: &[&str] = &[
    "profile",
    "n",
    "trials",
    "master_seed",
    "output_dir",
    "attack_cost",
    "defense_cost",
    "path_loss_exponent",
    "reference_gain",
    "noise_power",
    "distance_min",
    "distance_max",
    "channel_seed",
    "local_epochs",
    "batch_size",
    "label_balance",
    "flip_fraction",
    "learning_rate",
    "rho",
    "epsilon",
];

const PROFILE_KEYS: &[&str] = &["rounds", "samples_per_client", "test_samples"];

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct Raw {
    profile: Option<Profile>,
    n: Option<usize>,
    trials: Option<usize>,
    master_seed: Option<u64>,
    output_dir: Option<PathBuf>,
    attack_cost: Option<f64>,
    defense_cost: Option<f64>,
    path_loss_exponent: Option<f64>,
    reference_gain: Option<f64>,
    noise_power: Option<f64>,
    distance_min: Option<f64>,
    distance_max: Option<f64>,
    channel_seed: Option<u64>,
    local_epochs: Option<usize>,
    batch_size: Option<usize>,
    label_balance: Option<f64>,
    flip_fraction: Option<f64>,
    learning_rate: Option<f64>,
    rho: Option<f64>,
    epsilon: Option<f64>,
}

impl ExperimentConfig {
    pub fn for_profile(profile: Profile) -> Self {
        ExperimentConfig {
            profile,
            n: 5,
            trials: 5,
            costs: GameCosts {
                attack: 0.1,
                defense: 0.05,
            },
            channel: ChannelConfig::default(),
            fl: profile.fl(),
            output_dir: PathBuf::from("."),
            master_seed: 0,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        let doc: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| Error::Invalid(format!("config: {e}")))?;
        let fixed: Vec<&str> = doc
            .keys()
            .map(String::as_str)
            .filter(|k| PROFILE_KEYS.contains(k))
            .collect();
        if !fixed.is_empty() {
            return Err(Error::Invalid(format!(
                "config keys fixed by the profile: {}",
                fixed.join(", ")
            )));
        }
        let unknown: Vec<&str> = doc
            .keys()
            .map(String::as_str)
            .filter(|k| !KEYS.contains(k))
            .collect();
        if !unknown.is_empty() {
            return Err(Error::Invalid(format!(
                "unknown config keys: {}",
                unknown.join(", ")
            )));
        }
        let raw: Raw = doc
            .try_into()
            .map_err(|e: toml::de::Error| Error::Invalid(format!("config: {e}")))?;

        let mut cfg = ExperimentConfig::for_profile(raw.profile.unwrap_or(Profile::Paper));
        let ch = &mut cfg.channel;
        let fl = &mut cfg.fl;
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        cfg.n = raw.n.unwrap_or(cfg.n);
        cfg.trials = raw.trials.unwrap_or(cfg.trials);
        cfg.master_seed = raw.master_seed.unwrap_or(cfg.master_seed);
        cfg.output_dir = raw.output_dir.unwrap_or(cfg.output_dir);
        set(&mut cfg.costs.attack, raw.attack_cost);
        set(&mut cfg.costs.defense, raw.defense_cost);
        set(&mut ch.path_loss_exponent, raw.path_loss_exponent);
        set(&mut ch.reference_gain, raw.reference_gain);
        set(&mut ch.noise_power, raw.noise_power);
        set(&mut ch.distance_min, raw.distance_min);
        set(&mut ch.distance_max, raw.distance_max);
        ch.seed = raw.channel_seed.unwrap_or(ch.seed);
        fl.local_epochs = raw.local_epochs.unwrap_or(fl.local_epochs);
        fl.batch_size = raw.batch_size.unwrap_or(fl.batch_size);
        set(&mut fl.label_balance, raw.label_balance);
        set(&mut fl.flip_fraction, raw.flip_fraction);
        let opt: &mut RmsProp = &mut fl.optimizer;
        set(&mut opt.learning_rate, raw.learning_rate);
        set(&mut opt.rho, raw.rho);
        set(&mut opt.epsilon, raw.epsilon);
        cfg.finish()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ExperimentConfig::from_toml(&text)
            .map_err(|e| Error::Invalid(format!("{}: {e}", path.display())))
    }

    pub fn with_seed(mut self, seed: u64) -> Result<Self> {
        self.master_seed = seed;
        self.finish()
    }

    /// Propagates the master seed and checks every section.
    pub fn finish(mut self) -> Result<Self> {
        self.fl.master_seed = self.master_seed;
        if self.n == 0 {
            return Err(Error::Invalid("n must be at least 1".into()));
        }
        if self.trials == 0 {
            return Err(Error::Invalid("trials must be at least 1".into()));
        }
        self.costs.validate()?;
        self.channel.validate()?;
        self.fl.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_paper_profile() {
        let cfg = ExperimentConfig::from_toml("").unwrap();
        assert_eq!(cfg.profile, Profile::Paper);
        assert_eq!(
            (
                cfg.fl.rounds,
                cfg.fl.samples_per_client,
                cfg.fl.test_samples
            ),
            (100, 1000, 1000)
        );
    }

    #[test]
    fn fast_profile_and_overrides() {
        let cfg = ExperimentConfig::from_toml(
            "profile = \"fast\"\nn = 2\nmaster_seed = 9\nnoise_power = 0.01\nlearning_rate = 0.002\n",
        )
        .unwrap();
        assert_eq!((cfg.fl.rounds, cfg.fl.samples_per_client), (20, 200));
        assert_eq!((cfg.n, cfg.master_seed, cfg.fl.master_seed), (2, 9, 9));
        assert_eq!(cfg.channel.noise_power, 0.01);
        assert_eq!(cfg.fl.optimizer.learning_rate, 0.002);
    }

    #[test]
    fn unknown_keys_are_listed() {
        let err = ExperimentConfig::from_toml("nn = 3\nseeed = 1\nn = 2\n").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("nn") && msg.contains("seeed"), "{msg}");
    }

    #[test]
    fn profile_sizes_are_not_settable() {
        let err = ExperimentConfig::from_toml("rounds = 5").unwrap_err();
        assert!(err.to_string().contains("rounds"));
    }

    #[test]
    fn invalid_values_are_rejected() {
        assert!(ExperimentConfig::from_toml("profile = \"slow\"").is_err());
        assert!(ExperimentConfig::from_toml("attack_cost = -1.0").is_err());
        assert!(ExperimentConfig::from_toml("n = 0").is_err());
        assert!(ExperimentConfig::from_toml("distance_min = 5.0\ndistance_max = 2.0").is_err());
    }
}
