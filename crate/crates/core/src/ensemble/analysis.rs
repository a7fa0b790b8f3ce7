//! Oscillation features of population curves.
//!
//! Extrema are found with a zigzag filter: a turning point is accepted once
//! the curve has moved back from it by more than 2% of the curve's total
//! range. Small ripples from the few very close pairs are ignored; any
//! swing large enough to matter for a 1/e envelope is kept.

use super::EvolutionRecord;
use crate::error::{Error, Result};

/// Reversal threshold, as a fraction of `max - min` of the curve.
pub const EXTREMUM_THRESHOLD: f64 = 0.02;

/// Indices of the turning points of `values`, starting with index 0.
pub fn extrema(values: &[f64]) -> Vec<usize> {
    if values.is_empty() {
        return Vec::new();
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let threshold = EXTREMUM_THRESHOLD * (hi - lo);
    let mut out = vec![0];
    if hi - lo == 0.0 {
        return out;
    }
    let mut dir = 0i8;
    let mut cand = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        match dir {
            0 => {
                if v - values[0] > threshold {
                    dir = 1;
                    cand = i;
                } else if values[0] - v > threshold {
                    dir = -1;
                    cand = i;
                }
            }
            1 => {
                if v > values[cand] {
                    cand = i;
                } else if values[cand] - v > threshold {
                    out.push(cand);
                    dir = -1;
                    cand = i;
                }
            }
            _ => {
                if v < values[cand] {
                    cand = i;
                } else if v - values[cand] > threshold {
                    out.push(cand);
                    dir = 1;
                    cand = i;
                }
            }
        }
    }
    out
}

fn check_grid(times: &[f64], values: &[f64]) -> Result<()> {
    if times.len() != values.len() {
        return Err(Error::invalid(format!(
            "time grid has {} points but curve has {}",
            times.len(),
            values.len()
        )));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("time grid must be strictly increasing"));
    }
    Ok(())
}

/// Peak-to-trough swings between consecutive extrema, normalised to the
/// first swing, at the midpoint time of each swing.
pub fn contrast_envelope(times: &[f64], values: &[f64]) -> Result<Vec<(f64, f64)>> {
    check_grid(times, values)?;
    let ext = extrema(values);
    if ext.len() < 2 {
        return Err(Error::NotApplicable(
            "no oscillation extrema in the curve".into(),
        ));
    }
    let first = (values[ext[1]] - values[ext[0]]).abs();
    Ok(ext
        .windows(2)
        .map(|w| {
            (
                0.5 * (times[w[0]] + times[w[1]]),
                (values[w[1]] - values[w[0]]).abs() / first,
            )
        })
        .collect())
}

/// Time at which the contrast envelope first falls below 1/e, linearly
/// interpolated between swings. `+∞` if the curve never dephases within the
/// grid; `NotApplicable` if there is no oscillation at all.
pub fn dephasing_time_of(times: &[f64], values: &[f64]) -> Result<f64> {
    let env = contrast_envelope(times, values)?;
    let level = (-1.0f64).exp();
    for k in 1..env.len() {
        let (t1, c1) = env[k];
        if c1 < level {
            let (t0, c0) = env[k - 1];
            return Ok(t0 + (c0 - level) / (c0 - c1) * (t1 - t0));
        }
    }
    Ok(f64::INFINITY)
}

/// Twice the mean spacing of the extrema found before `until`.
pub fn oscillation_period_of(times: &[f64], values: &[f64], until: f64) -> Result<f64> {
    check_grid(times, values)?;
    let ext: Vec<usize> = extrema(values)
        .into_iter()
        .filter(|&i| times[i] <= until)
        .collect();
    if ext.len() < 2 {
        return Err(Error::NotApplicable(
            "fewer than two extrema before the cut-off".into(),
        ));
    }
    let span = times[*ext.last().unwrap()] - times[ext[0]];
    Ok(2.0 * span / (ext.len() - 1) as f64)
}

/// Depth of the first modulation: the swing from the first extremum to the
/// second.
pub fn modulation_contrast_of(times: &[f64], values: &[f64]) -> Result<f64> {
    check_grid(times, values)?;
    let ext = extrema(values);
    if ext.len() < 2 {
        return Err(Error::NotApplicable("no modulation in the curve".into()));
    }
    Ok((values[ext[1]] - values[ext[0]]).abs())
}

/// Largest reversal among turning points strictly after `after`: for each
/// turning point, the smaller of the moves into and out of it. A decaying
/// curve with small bumps scores the bump size, not the decay; zero for a
/// monotone tail.
pub fn late_reversal_of(times: &[f64], values: &[f64], after: f64) -> Result<f64> {
    check_grid(times, values)?;
    let start = times.partition_point(|&t| t <= after);
    let tail = &values[start..];
    if tail.len() < 3 {
        return Ok(0.0);
    }
    let mut points = extrema(tail);
    if points.last() != Some(&(tail.len() - 1)) {
        points.push(tail.len() - 1);
    }
    // points[0] and the final sample are ends of the window, not turning points
    Ok(points
        .windows(3)
        .map(|w| {
            (tail[w[1]] - tail[w[0]])
                .abs()
                .min((tail[w[2]] - tail[w[1]]).abs())
        })
        .fold(0.0, f64::max))
}

impl EvolutionRecord {
    pub fn dephasing_time(&self) -> Result<f64> {
        dephasing_time_of(&self.times, &self.p_population)
    }

    /// Oscillation period of `p` over every extremum on the grid.
    pub fn oscillation_period(&self) -> Result<f64> {
        oscillation_period_of(&self.times, &self.p_population, f64::INFINITY)
    }

    /// Dephasing time divided by the period measured over the extrema that
    /// precede it.
    pub fn rabi_cycles_before_dephasing(&self) -> Result<f64> {
        let tau = self.dephasing_time()?;
        Ok(tau / oscillation_period_of(&self.times, &self.p_population, tau)?)
    }

    pub fn modulation_contrast(&self) -> Result<f64> {
        modulation_contrast_of(&self.times, &self.p_population)
    }

    pub fn late_reversal(&self, after: f64) -> Result<f64> {
        late_reversal_of(&self.times, &self.p_population, after)
    }
}
