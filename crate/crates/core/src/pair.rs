//! Dipole-dipole coupling of a single pp ↔ ss' atom pair.
//!
//! In the reduced basis (32p₃/₂ |m_j|=3/2, 32s, 33s) the pair dynamics split
//! into four independent two-level systems, labelled by the signs of the two
//! initial m_j = ±3/2 projections. Each pp state couples to one symmetric
//! ss' combination with matrix element `V = ⟨pp|H|ss'_S⟩`:
//!
//! ```text
//! V₊₊ = -(P/√2) sin²Θ (cos2Φ - i sin2Φ)      V₋₋ = V₊₊*
//! V₊₋ =  (P/√2) (sin²Θ - 2/3)                V₋₊ = V₊₋
//! ```
//!
//! with `P = r_ps r_ps' / R³` in MHz.

use std::f64::consts::{FRAC_1_SQRT_2, PI, TAU};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::units::PhysicalConstants;

/// Which pair of initial m_j signs a pp state carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Channel {
    PlusPlus,
    MinusMinus,
    PlusMinus,
    MinusPlus,
}

impl Channel {
    pub const ALL: [Channel; 4] = [
        Channel::PlusPlus,
        Channel::MinusMinus,
        Channel::PlusMinus,
        Channel::MinusPlus,
    ];

    /// Channel for atom signs `(a, b)`, `true` meaning m_j > 0.
    pub fn from_signs(a_positive: bool, b_positive: bool) -> Self {
        match (a_positive, b_positive) {
            (true, true) => Channel::PlusPlus,
            (false, false) => Channel::MinusMinus,
            (true, false) => Channel::PlusMinus,
            (false, true) => Channel::MinusPlus,
        }
    }

    /// |ΔM_J| = 2 channels carry the Φ-dependent sin²Θ form.
    pub fn is_stretched(self) -> bool {
        matches!(self, Channel::PlusPlus | Channel::MinusMinus)
    }
}

/// Dimensionless angular factor `g` of a channel, so that
/// `V = (P/√2) · g(Θ, Φ)`.
pub fn angular_factor(channel: Channel, theta: f64, phi: f64) -> C64 {
    let s2 = theta.sin().powi(2);
    match channel {
        Channel::PlusPlus => -s2 * C64::from_polar(1.0, -2.0 * phi),
        Channel::MinusMinus => -s2 * C64::from_polar(1.0, 2.0 * phi),
        Channel::PlusMinus | Channel::MinusPlus => C64::new(s2 - 2.0 / 3.0, 0.0),
    }
}

/// One nearest-neighbour pair: separation (µm), polar angle to the field
/// axis and azimuth (radians), and the m_j channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomPair {
    pub separation: f64,
    pub theta: f64,
    pub phi: f64,
    pub channel: Channel,
}

impl AtomPair {
    pub fn new(separation: f64, theta: f64, phi: f64, channel: Channel) -> Result<Self> {
        if !(separation.is_finite() && separation > 0.0) {
            return Err(Error::invalid(format!(
                "separation must be positive, got {separation}"
            )));
        }
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid(format!(
                "theta must lie in [0, π], got {theta}"
            )));
        }
        if !(0.0..TAU).contains(&phi) {
            return Err(Error::invalid(format!(
                "phi must lie in [0, 2π), got {phi}"
            )));
        }
        Ok(AtomPair {
            separation,
            theta,
            phi,
            channel,
        })
    }

    /// Pair from the relative position vector `(dx, dy, dz)` (µm), z along
    /// the field.
    pub fn from_vector(d: [f64; 3], channel: Channel) -> Result<Self> {
        let (r, theta, phi) = spherical(d);
        AtomPair::new(r, theta, phi, channel)
    }

    /// Same pair rotated about the field axis by `delta`.
    pub fn rotated(&self, delta: f64) -> Self {
        AtomPair {
            phi: wrap_angle(self.phi + delta),
            ..*self
        }
    }
}

/// `(R, Θ, Φ)` of a Cartesian vector with Φ wrapped into [0, 2π).
pub fn spherical(d: [f64; 3]) -> (f64, f64, f64) {
    let [x, y, z] = d;
    let rho = x.hypot(y);
    let r = rho.hypot(z);
    let theta = rho.atan2(z);
    (r, theta, wrap_angle(y.atan2(x)))
}

pub(crate) fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if w >= TAU {
        0.0
    } else {
        w
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairEigensystem {
    pub e_plus: f64,
    pub e_minus: f64,
    /// Mixing angle, `tan α = 2|V|/E`, in [0, π].
    pub alpha: f64,
}

pub fn channel_coupling(pair: &AtomPair) -> Result<C64> {
    channel_coupling_with(&PhysicalConstants::RB_32P, pair)
}

pub fn channel_coupling_with(constants: &PhysicalConstants, pair: &AtomPair) -> Result<C64> {
    let p = constants.coupling_prefactor(pair.separation)?;
    Ok(p * FRAC_1_SQRT_2 * angular_factor(pair.channel, pair.theta, pair.phi))
}

/// Mean of |V| over isotropic orientations (cos Θ uniform on [-1, 1], Φ
/// uniform) at a fixed separation, MHz. Closed forms: ⟨sin²Θ⟩ = 2/3 for the
/// stretched channels and ⟨|sin²Θ - 2/3|⟩ = 4/(9√3) for the others.
pub fn angle_averaged_coupling(channel: Channel, separation: f64) -> Result<f64> {
    let p = PhysicalConstants::RB_32P.coupling_prefactor(separation)?;
    let g = if channel.is_stretched() {
        2.0 / 3.0
    } else {
        4.0 / (9.0 * 3f64.sqrt())
    };
    Ok(p * FRAC_1_SQRT_2 * g)
}

pub fn pair_eigensystem(detuning: f64, coupling: C64) -> Result<PairEigensystem> {
    ensure_finite("detuning", detuning)?;
    ensure_finite("coupling", coupling.norm())?;
    let g = generalized_rabi(detuning, coupling);
    Ok(PairEigensystem {
        e_plus: 0.5 * (detuning + g),
        e_minus: 0.5 * (detuning - g),
        alpha: (2.0 * coupling.norm()).atan2(detuning),
    })
}

/// `Γ = √(E² + 4|V|²)`, MHz.
pub fn generalized_rabi(detuning: f64, coupling: C64) -> f64 {
    detuning.hypot(2.0 * coupling.norm())
}
