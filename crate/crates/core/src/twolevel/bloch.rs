//! Bloch-sphere view of a single channel.
//!
//! A state `C_pp |pp⟩ + C_ss' |ss'⟩` maps to polar angle
//! `θ = 2 atan(|C_ss'| / |C_pp|)` (pp at the north pole) and azimuth
//! `φ = arg C_ss' - arg C_pp`, unwrapped along the trajectory.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use num_complex::Complex64 as C64;

use super::{propagator_unchecked, PulseSequence};
use crate::error::{ensure_finite, Error, Result};
use crate::pair::generalized_rabi;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryFlag {
    Interior,
    /// Last point of a zone (just before a jump, or the end of the sequence).
    ZoneEnd,
    /// First point of a zone that follows a jump.
    ZoneStart,
}

impl BoundaryFlag {
    pub fn code(self) -> i8 {
        match self {
            BoundaryFlag::ZoneEnd => -1,
            BoundaryFlag::Interior => 0,
            BoundaryFlag::ZoneStart => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochPoint {
    /// µs.
    pub time: f64,
    pub theta: f64,
    pub varphi: f64,
    pub p_transfer: f64,
    pub zone_index: usize,
    pub boundary: BoundaryFlag,
}

struct Unwrapper {
    last: Option<f64>,
}

impl Unwrapper {
    fn next(&mut self, raw: f64) -> f64 {
        let v = match self.last {
            None => raw,
            Some(prev) => raw + TAU * ((prev - raw) / TAU).round(),
        };
        self.last = Some(v);
        v
    }
}

fn point(
    state: [C64; 2],
    time: f64,
    zone_index: usize,
    boundary: BoundaryFlag,
    unwrap: &mut Unwrapper,
    initial_direction: f64,
) -> BlochPoint {
    let (a, b) = (state[0].norm(), state[1].norm());
    let raw = if state[1].norm() == 0.0 {
        initial_direction
    } else {
        (state[1] * state[0].conj()).arg()
    };
    BlochPoint {
        time,
        theta: 2.0 * b.atan2(a),
        varphi: unwrap.next(raw),
        p_transfer: state[1].norm_sqr(),
        zone_index,
        boundary,
    }
}

/// Sample the trajectory from pp on a grid of step `dt` inside each zone,
/// plus both sides of every zone boundary.
pub fn bloch_trajectory(seq: &PulseSequence, coupling: C64, dt: f64) -> Result<Vec<BlochPoint>> {
    ensure_finite("coupling", coupling.norm())?;
    let min_zone = seq
        .min_zone_duration()
        .ok_or_else(|| Error::invalid("sequence has no zones"))?;
    if !(dt.is_finite() && dt > 0.0 && dt <= min_zone) {
        return Err(Error::invalid(format!(
            "dt must lie in (0, {min_zone}] (shortest zone), got {dt}"
        )));
    }

    // At t = 0 the azimuth is undefined; use the direction the ss' amplitude
    // grows in, i C_ss' ∝ i V*.
    let initial_direction = if coupling.norm() == 0.0 {
        0.0
    } else {
        (C64::i() * coupling.conj()).arg()
    };
    let mut unwrap = Unwrapper { last: None };
    let mut state = [C64::new(1.0, 0.0), C64::new(0.0, 0.0)];
    let mut out = vec![point(
        state,
        0.0,
        0,
        BoundaryFlag::Interior,
        &mut unwrap,
        initial_direction,
    )];

    let mut start = 0.0;
    let n_zones = seq.zones().len();
    for (k, zone) in seq.zones().iter().enumerate() {
        let steps = (zone.duration / dt * (1.0 - 1e-12)).ceil() as usize;
        for j in 1..steps {
            let tau = j as f64 * dt;
            let s = propagator_unchecked(zone.detuning, coupling, tau).apply(state);
            out.push(point(
                s,
                start + tau,
                k,
                BoundaryFlag::Interior,
                &mut unwrap,
                initial_direction,
            ));
        }
        state = propagator_unchecked(zone.detuning, coupling, zone.duration).apply(state);
        start += zone.duration;
        out.push(point(
            state,
            start,
            k,
            BoundaryFlag::ZoneEnd,
            &mut unwrap,
            initial_direction,
        ));
        if k + 1 < n_zones {
            out.push(point(
                state,
                start,
                k + 1,
                BoundaryFlag::ZoneStart,
                &mut unwrap,
                initial_direction,
            ));
        }
    }
    Ok(out)
}

pub fn write_bloch_csv<W: Write>(
    points: &[BlochPoint],
    header: &[(String, String)],
    mut w: W,
) -> Result<()> {
    let io = |e: std::io::Error| Error::invalid(format!("write failed: {e}"));
    for (k, v) in header {
        writeln!(w, "# {k}: {v}").map_err(io)?;
    }
    let mut csv = csv::Writer::from_writer(w);
    let ce = |e: csv::Error| Error::invalid(format!("write failed: {e}"));
    csv.write_record([
        "time_us",
        "theta",
        "varphi",
        "p_transfer",
        "zone_index",
        "boundary_flag",
    ])
    .map_err(ce)?;
    for p in points {
        csv.write_record([
            p.time.to_string(),
            p.theta.to_string(),
            p.varphi.to_string(),
            p.p_transfer.to_string(),
            p.zone_index.to_string(),
            p.boundary.code().to_string(),
        ])
        .map_err(ce)?;
    }
    csv.flush().map_err(io)
}

/// Spread (max - min over couplings) of the accumulated Rabi phase at t = 0
/// and at the end of every zone, from the zone-wise phase model.
///
/// Each coupling accrues `2πΓ` per µs in the detuning direction of the
/// current zone. Until the first detuning reversal the trajectory does not
/// enclose the pole and the Bloch azimuth advances at half the Rabi-phase
/// rate; afterwards it advances at the full rate, so each later zone counts
/// twice in Bloch-azimuth-equivalent units. The reported phase is twice the
/// Bloch azimuth advance.
pub fn dephasing_phase_spread(seq: &PulseSequence, couplings: &[C64]) -> Result<Vec<(f64, f64)>> {
    if couplings.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least two couplings to form a spread, got {}",
            couplings.len()
        )));
    }
    for v in couplings {
        ensure_finite("coupling", v.norm())?;
    }
    let mut phases = vec![0.0f64; couplings.len()];
    let mut out = vec![(0.0, 0.0)];
    let mut t = 0.0;
    let mut encloses_pole = false;
    let mut prev_sign: Option<f64> = None;
    for zone in seq.zones() {
        let sign = if zone.detuning < 0.0 { -1.0 } else { 1.0 };
        if prev_sign.is_some_and(|p| p != sign) {
            encloses_pole = true;
        }
        prev_sign = Some(sign);
        let weight = if encloses_pole { 2.0 } else { 1.0 };
        for (phase, v) in phases.iter_mut().zip(couplings) {
            *phase +=
                sign * weight * 2.0 * PI * generalized_rabi(zone.detuning, *v) * zone.duration;
        }
        t += zone.duration;
        let (lo, hi) = phases
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &p| {
                (lo.min(p), hi.max(p))
            });
        out.push((t, hi - lo));
    }
    Ok(out)
}
