//! Configurations shipped with the crate, one per kernel family.

use super::config::ExperimentConfig;
use crate::error::{Error, Result};

pub const PRESETS: [(&str, &str); 5] = [
    ("meanfield-linear", include_str!("../../presets/meanfield-linear.toml")),
    ("erdos-renyi-diluted", include_str!("../../presets/erdos-renyi-diluted.toml")),
    ("edd", include_str!("../../presets/edd.toml")),
    ("sbm", include_str!("../../presets/sbm.toml")),
    ("pnearest-sigmoid", include_str!("../../presets/pnearest-sigmoid.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(name, _)| *name)
}

pub fn preset(name: &str) -> Result<ExperimentConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::Config(format!("unknown preset `{name}`; known: {}", preset_names().collect::<Vec<_>>().join(", "))))?;
    ExperimentConfig::from_toml(text)
}
