//! Configs reproducing the published figures, embedded at build time.

use crate::{CliError, ExperimentConfig};

pub const PRESETS: &[(&str, &str)] = &[
    (
        "fig1_inset",
        include_str!("../../../configs/fig1_inset.toml"),
    ),
    (
        "fig1_lineshape",
        include_str!("../../../configs/fig1_lineshape.toml"),
    ),
    ("fig2a", include_str!("../../../configs/fig2a.toml")),
    ("fig2b", include_str!("../../../configs/fig2b.toml")),
    ("fig3a", include_str!("../../../configs/fig3a.toml")),
    ("fig3b", include_str!("../../../configs/fig3b.toml")),
    ("fig3c", include_str!("../../../configs/fig3c.toml")),
    (
        "sm_bloch_qpm1",
        include_str!("../../../configs/sm_bloch_qpm1.toml"),
    ),
    (
        "sm_bloch_qpm2",
        include_str!("../../../configs/sm_bloch_qpm2.toml"),
    ),
    (
        "sm_bloch_qpm3",
        include_str!("../../../configs/sm_bloch_qpm3.toml"),
    ),
    (
        "sm_ordered",
        include_str!("../../../configs/sm_ordered.toml"),
    ),
];

pub fn names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

pub fn source(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, s)| *s)
}

pub fn load(name: &str) -> Result<ExperimentConfig, CliError> {
    let text = source(name).ok_or_else(|| {
        CliError::Validation(vec![format!(
            "unknown preset {name:?}; available: {}",
            names().collect::<Vec<_>>().join(", ")
        )])
    })?;
    ExperimentConfig::from_toml(text)
}
