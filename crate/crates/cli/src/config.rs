//! Experiment configuration files (TOML).
//!
//! A file names one `experiment` kind and carries the matching parameter
//! table. Every number is checked up front and all problems are reported
//! together, so a config either runs or is rejected before any output
//! exists.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use qpm_core::ensemble::{config_hash, linspace, ChannelWeights};
use qpm_core::units::LINEAR_FIELD_RANGE;
use qpm_core::{PhysicalConstants, Protocol};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Transfer vs detuning at fixed interaction time, random gas.
    Lineshape,
    /// Transfer vs time at constant detunings, random gas, 2-atom model.
    Rabi,
    /// Transfer vs time under field-jump sequences, random gas, 2-atom model.
    Qpm,
    /// Transfer vs time for an ordered array of aligned pairs.
    Ordered,
    /// Transfer vs time for interacting groups of up to four atoms.
    Groups,
    /// Single-pair Bloch-sphere trajectories.
    Bloch,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Lineshape => "lineshape",
            ExperimentKind::Rabi => "rabi",
            ExperimentKind::Qpm => "qpm",
            ExperimentKind::Ordered => "ordered",
            ExperimentKind::Groups => "groups",
            ExperimentKind::Bloch => "bloch",
        }
    }
}

/// Evenly spaced values, both ends included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    #[serde(default)]
    pub start: f64,
    pub stop: f64,
    pub points: usize,
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        linspace(self.start, self.stop, self.points).expect("grid was validated")
    }

    fn check(&self, path: &str, non_negative: bool, errs: &mut Vec<String>) {
        if !self.start.is_finite() || !self.stop.is_finite() {
            errs.push(format!(
                "{path}: start and stop must be finite, got {} and {}",
                self.start, self.stop
            ));
            return;
        }
        if self.points < 2 {
            errs.push(format!(
                "{path}.points: need at least 2 points, got {}",
                self.points
            ));
        }
        if self.stop <= self.start {
            errs.push(format!(
                "{path}: stop ({}) must exceed start ({})",
                self.stop, self.start
            ));
        }
        if non_negative && self.start < 0.0 {
            errs.push(format!(
                "{path}.start: times must be non-negative, got {}",
                self.start
            ));
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineshapeParams {
    /// cm⁻³.
    pub rho: f64,
    pub samples: usize,
    /// Interaction time, µs.
    pub duration: f64,
    /// MHz.
    pub detunings: Grid,
    /// Coupling percentiles whose single-pair Lorentzians are written next
    /// to the ensemble lineshape.
    #[serde(default = "default_percentiles")]
    pub percentiles: Vec<f64>,
    #[serde(default)]
    pub channel_weights: Option<[f64; 4]>,
}

fn default_percentiles() -> Vec<f64> {
    vec![20.0, 50.0, 80.0]
}

/// Shared by the `rabi` and `qpm` experiments.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairScanParams {
    /// cm⁻³.
    pub rho: f64,
    pub samples: usize,
    pub protocols: Vec<Protocol>,
    /// Total interaction times, µs.
    pub times: Grid,
    #[serde(default)]
    pub channel_weights: Option<[f64; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetuningUnit {
    #[default]
    Mhz,
    /// Multiples of the mean pair coupling of the configured array.
    VAvg,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderedParams {
    /// µm.
    pub r_mean: f64,
    /// µm.
    pub r_sigma: f64,
    /// Angle between the pair axis and the field, degrees.
    pub theta_deg: f64,
    pub samples: usize,
    #[serde(default)]
    pub channel_weights: Option<[f64; 4]>,
    #[serde(default)]
    pub detuning_unit: DetuningUnit,
    pub protocols: Vec<Protocol>,
    pub times: Grid,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupsParams {
    /// cm⁻³.
    pub rho: f64,
    pub groups: usize,
    /// Central atom plus `atoms - 1` nearest neighbours, 2 to 4.
    #[serde(default = "default_atoms")]
    pub atoms: usize,
    /// Include the p–s exchange terms.
    #[serde(default = "default_true")]
    pub exchange: bool,
    pub protocols: Vec<Protocol>,
    pub times: Grid,
    /// When set, the same protocols are also run through the 2-atom
    /// nearest-neighbour model with this many pairs.
    #[serde(default)]
    pub two_atom_samples: Option<usize>,
}

fn default_atoms() -> usize {
    4
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BlochParams {
    /// MHz.
    pub detuning: f64,
    /// Real couplings, MHz; one trajectory each.
    pub couplings: Vec<f64>,
    /// 1 for a constant detuning, otherwise an even zone count.
    pub zones: u32,
    /// µs per zone.
    pub zone_duration: f64,
    /// Output step, µs.
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Used as the prefix of every output file.
    pub name: String,
    pub experiment: ExperimentKind,
    pub seed: u64,
    /// Relative paths resolve against the working directory. `--out` wins.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lineshape: Option<LineshapeParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rabi: Option<PairScanParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qpm: Option<PairScanParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ordered: Option<OrderedParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub groups: Option<GroupsParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<BlochParams>,
}

fn positive(path: &str, v: f64, errs: &mut Vec<String>) {
    if !(v.is_finite() && v > 0.0) {
        errs.push(format!("{path}: must be positive and finite, got {v}"));
    }
}

fn at_least_one(path: &str, n: usize, errs: &mut Vec<String>) {
    if n == 0 {
        errs.push(format!("{path}: must be at least 1"));
    }
}

fn weights(path: &str, w: &Option<[f64; 4]>, errs: &mut Vec<String>) {
    if let Some(w) = w {
        if let Err(e) = ChannelWeights::new(*w) {
            errs.push(format!("{path}: {e}"));
        }
    }
}

fn protocols(path: &str, list: &[Protocol], errs: &mut Vec<String>) {
    if list.is_empty() {
        errs.push(format!("{path}: at least one protocol is required"));
    }
    for (i, p) in list.iter().enumerate() {
        if let Err(e) = p.validate() {
            errs.push(format!("{path}[{i}]: {e}"));
        }
    }
}

/// Set when `detuning` needs a field outside the linear Stark range.
pub fn linear_range_warning(what: &str, detuning: f64) -> Option<String> {
    let offset = detuning / PhysicalConstants::RB_32P.detuning_slope;
    (offset.abs() > LINEAR_FIELD_RANGE).then(|| {
        format!(
            "{what}: {detuning} MHz needs a field {offset:+.3} V/cm from resonance, outside the ±{LINEAR_FIELD_RANGE} V/cm linear Stark range"
        )
    })
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text)
            .map_err(|e| CliError::Validation(vec![e.to_string().trim_end().to_string()]))
    }

    /// Every problem with the config, with its field path. Empty when valid.
    pub fn problems(&self) -> Vec<String> {
        let mut errs = Vec::new();
        if self.name.is_empty()
            || !self
                .name
                .chars()
                .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
        {
            errs.push(format!(
                "name: must be non-empty and use only letters, digits, '_' and '-', got {:?}",
                self.name
            ));
        }
        let present: Vec<&str> = [
            ("lineshape", self.lineshape.is_some()),
            ("rabi", self.rabi.is_some()),
            ("qpm", self.qpm.is_some()),
            ("ordered", self.ordered.is_some()),
            ("groups", self.groups.is_some()),
            ("bloch", self.bloch.is_some()),
        ]
        .into_iter()
        .filter_map(|(k, on)| on.then_some(k))
        .collect();
        let kind = self.experiment.as_str();
        if !present.contains(&kind) {
            errs.push(format!(
                "{kind}: experiment = \"{kind}\" needs a [{kind}] table"
            ));
        }
        for other in present.iter().filter(|&&k| k != kind) {
            errs.push(format!(
                "{other}: table does not belong to experiment \"{kind}\""
            ));
        }

        match self.experiment {
            ExperimentKind::Lineshape => {
                if let Some(p) = &self.lineshape {
                    positive("lineshape.rho", p.rho, &mut errs);
                    at_least_one("lineshape.samples", p.samples, &mut errs);
                    positive("lineshape.duration", p.duration, &mut errs);
                    p.detunings.check("lineshape.detunings", false, &mut errs);
                    for (i, q) in p.percentiles.iter().enumerate() {
                        if !(q.is_finite() && *q > 0.0 && *q < 100.0) {
                            errs.push(format!("lineshape.percentiles[{i}]: must lie strictly between 0 and 100, got {q}"));
                        }
                    }
                    weights("lineshape.channel_weights", &p.channel_weights, &mut errs);
                }
            }
            ExperimentKind::Rabi | ExperimentKind::Qpm => {
                let p = if self.experiment == ExperimentKind::Rabi {
                    &self.rabi
                } else {
                    &self.qpm
                };
                if let Some(p) = p {
                    positive(&format!("{kind}.rho"), p.rho, &mut errs);
                    at_least_one(&format!("{kind}.samples"), p.samples, &mut errs);
                    protocols(&format!("{kind}.protocols"), &p.protocols, &mut errs);
                    p.times.check(&format!("{kind}.times"), true, &mut errs);
                    weights(
                        &format!("{kind}.channel_weights"),
                        &p.channel_weights,
                        &mut errs,
                    );
                    if self.experiment == ExperimentKind::Rabi {
                        for (i, pr) in p.protocols.iter().enumerate() {
                            if matches!(pr, Protocol::Qpm { .. }) {
                                errs.push(format!("rabi.protocols[{i}]: rabi takes constant detunings only; use experiment = \"qpm\""));
                            }
                        }
                    }
                }
            }
            ExperimentKind::Ordered => {
                if let Some(p) = &self.ordered {
                    positive("ordered.r_mean", p.r_mean, &mut errs);
                    if !(p.r_sigma.is_finite() && p.r_sigma >= 0.0) {
                        errs.push(format!(
                            "ordered.r_sigma: must be non-negative and finite, got {}",
                            p.r_sigma
                        ));
                    }
                    if !(p.theta_deg.is_finite() && (0.0..=180.0).contains(&p.theta_deg)) {
                        errs.push(format!(
                            "ordered.theta_deg: must lie in [0, 180], got {}",
                            p.theta_deg
                        ));
                    }
                    at_least_one("ordered.samples", p.samples, &mut errs);
                    weights("ordered.channel_weights", &p.channel_weights, &mut errs);
                    protocols("ordered.protocols", &p.protocols, &mut errs);
                    p.times.check("ordered.times", true, &mut errs);
                }
            }
            ExperimentKind::Groups => {
                if let Some(p) = &self.groups {
                    positive("groups.rho", p.rho, &mut errs);
                    at_least_one("groups.groups", p.groups, &mut errs);
                    if !(2..=4).contains(&p.atoms) {
                        errs.push(format!("groups.atoms: must be 2, 3 or 4, got {}", p.atoms));
                    }
                    protocols("groups.protocols", &p.protocols, &mut errs);
                    p.times.check("groups.times", true, &mut errs);
                    if let Some(n) = p.two_atom_samples {
                        at_least_one("groups.two_atom_samples", n, &mut errs);
                    }
                }
            }
            ExperimentKind::Bloch => {
                if let Some(p) = &self.bloch {
                    if !p.detuning.is_finite() {
                        errs.push(format!(
                            "bloch.detuning: must be finite, got {}",
                            p.detuning
                        ));
                    }
                    if p.couplings.is_empty() {
                        errs.push("bloch.couplings: at least one coupling is required".into());
                    }
                    for (i, v) in p.couplings.iter().enumerate() {
                        if !v.is_finite() {
                            errs.push(format!("bloch.couplings[{i}]: must be finite, got {v}"));
                        }
                    }
                    if p.zones != 1 && (p.zones == 0 || p.zones % 2 != 0) {
                        errs.push(format!(
                            "bloch.zones: QPM zone count must be even and at least 2 (or 1 for a constant detuning), got {}",
                            p.zones
                        ));
                    }
                    positive("bloch.zone_duration", p.zone_duration, &mut errs);
                    positive("bloch.dt", p.dt, &mut errs);
                    if p.dt.is_finite() && p.zone_duration.is_finite() && p.dt > p.zone_duration {
                        errs.push(format!(
                            "bloch.dt: must not exceed the zone duration ({} > {})",
                            p.dt, p.zone_duration
                        ));
                    }
                }
            }
        }
        errs
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let errs = self.problems();
        if errs.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(errs))
        }
    }

    /// Non-fatal remarks about the physics of a valid config.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let mut check_detuning = |what: String, e: f64| out.extend(linear_range_warning(&what, e));
        let list = match self.experiment {
            ExperimentKind::Rabi => self.rabi.as_ref().map(|p| &p.protocols),
            ExperimentKind::Qpm => self.qpm.as_ref().map(|p| &p.protocols),
            ExperimentKind::Groups => self.groups.as_ref().map(|p| &p.protocols),
            _ => None,
        };
        for (i, p) in list.into_iter().flatten().enumerate() {
            check_detuning(format!("protocol {}", i), p.detuning());
        }
        if let Some(p) = self
            .lineshape
            .as_ref()
            .filter(|_| self.experiment == ExperimentKind::Lineshape)
        {
            let edge = p.detunings.start.abs().max(p.detunings.stop.abs());
            check_detuning("detuning grid edge".into(), edge);
        }
        if let Some(p) = self
            .groups
            .as_ref()
            .filter(|_| self.experiment == ExperimentKind::Groups)
        {
            if p.rho >= 3e9 {
                out.push(format!(
                    "density {:.1e} cm^-3: field jumps are treated as instantaneous; at this density the couplings are fast enough that a finite switching time would matter",
                    p.rho
                ));
            }
            if p.atoms < 4 || !p.exchange {
                out.push(format!(
                    "reduced group model: {} atoms, exchange terms {}",
                    p.atoms,
                    if p.exchange { "on" } else { "off" }
                ));
            }
        }
        out
    }

    /// Hash of everything that affects the numbers. The output location is
    /// left out so moving a run does not change its identity.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.output_dir = None;
        config_hash(&c)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }
}
