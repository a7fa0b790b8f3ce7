use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// One constant-detuning interval: detuning in MHz, duration in µs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub detuning: f64,
    pub duration: f64,
}

impl Zone {
    pub fn new(detuning: f64, duration: f64) -> Result<Self> {
        ensure_finite("zone detuning", detuning)?;
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::invalid(format!(
                "zone duration must be positive, got {duration}"
            )));
        }
        Ok(Zone { detuning, duration })
    }
}

/// Piecewise-constant detuning history. Detuning jumps between zones are
/// instantaneous.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PulseSequence {
    zones: Vec<Zone>,
    total_time: f64,
}

impl PulseSequence {
    /// An empty zone list is the identity (zero interaction time).
    pub fn new(zones: Vec<Zone>) -> Result<Self> {
        for z in &zones {
            Zone::new(z.detuning, z.duration)?;
        }
        let total_time = zones.iter().map(|z| z.duration).sum();
        Ok(PulseSequence { zones, total_time })
    }

    pub fn constant(detuning: f64, duration: f64) -> Result<Self> {
        if duration == 0.0 {
            return PulseSequence::new(Vec::new());
        }
        PulseSequence::new(vec![Zone::new(detuning, duration)?])
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    pub fn total_time(&self) -> f64 {
        self.total_time
    }

    pub fn min_zone_duration(&self) -> Option<f64> {
        self.zones.iter().map(|z| z.duration).reduce(f64::min)
    }

    /// Start time of each zone.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut t = 0.0;
        self.zones
            .iter()
            .map(|z| {
                let start = t;
                t += z.duration;
                start
            })
            .collect()
    }

    /// The part of the sequence up to time `t`, shortening the zone that
    /// contains `t`.
    pub fn truncated(&self, t: f64) -> Result<PulseSequence> {
        let slack = 1e-12 * self.total_time.max(1.0);
        if !(t.is_finite() && t >= 0.0 && t <= self.total_time + slack) {
            return Err(Error::invalid(format!(
                "time {t} µs lies outside the sequence [0, {}]",
                self.total_time
            )));
        }
        let mut zones = Vec::new();
        let mut elapsed = 0.0;
        for z in &self.zones {
            let remaining = t - elapsed;
            if remaining <= 0.0 {
                break;
            }
            if z.duration <= remaining {
                zones.push(*z);
            } else {
                zones.push(Zone {
                    detuning: z.detuning,
                    duration: remaining,
                });
                break;
            }
            elapsed += z.duration;
        }
        // total follows the summed durations, not `t`, to keep the invariant
        PulseSequence::new(zones)
    }
}

pub(crate) fn check_zone_count(zones: u32) -> Result<()> {
    if zones >= 2 && zones % 2 == 0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "QPM zone count must be even and at least 2, got {zones}"
        )))
    }
}

/// `N` zones of `T/N`, detunings `+E, -E, +E, ...`.
pub fn qpm_sequence(detuning: f64, total_time: f64, zones: u32) -> Result<PulseSequence> {
    check_zone_count(zones)?;
    ensure_finite("detuning", detuning)?;
    if !(total_time.is_finite() && total_time > 0.0) {
        return Err(Error::invalid(format!(
            "total time must be positive, got {total_time}"
        )));
    }
    let duration = total_time / zones as f64;
    let zones = (0..zones)
        .map(|k| Zone {
            detuning: if k % 2 == 0 { detuning } else { -detuning },
            duration,
        })
        .collect();
    PulseSequence::new(zones)
}

/// A family of sequences parameterised by their total interaction time.
///
/// Time scans of a protocol rebuild the whole sequence for every total time
/// `T`, so a QPM scan always has `N` zones of `T/N`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Protocol {
    Constant { detuning: f64 },
    Qpm { detuning: f64, zones: u32 },
}

impl Protocol {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Protocol::Constant { detuning } => ensure_finite("detuning", detuning).map(|_| ()),
            Protocol::Qpm { detuning, zones } => {
                ensure_finite("detuning", detuning)?;
                check_zone_count(zones)
            }
        }
    }

    pub fn detuning(&self) -> f64 {
        match *self {
            Protocol::Constant { detuning } | Protocol::Qpm { detuning, .. } => detuning,
        }
    }

    pub fn zone_count(&self) -> u32 {
        match *self {
            Protocol::Constant { .. } => 1,
            Protocol::Qpm { zones, .. } => zones,
        }
    }

    /// Sequence for total time `t` (empty at `t = 0`).
    pub fn sequence(&self, t: f64) -> Result<PulseSequence> {
        if t == 0.0 {
            return PulseSequence::new(Vec::new());
        }
        match *self {
            Protocol::Constant { detuning } => PulseSequence::constant(detuning, t),
            Protocol::Qpm { detuning, zones } => qpm_sequence(detuning, t, zones),
        }
    }

    /// Short label used in file names and CSV headers.
    pub fn label(&self) -> String {
        match *self {
            Protocol::Constant { detuning } => format!("const_{detuning}MHz"),
            Protocol::Qpm { detuning, zones } => format!("qpm{zones}_{detuning}MHz"),
        }
    }
}
