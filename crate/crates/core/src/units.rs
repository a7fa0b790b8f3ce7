//! Physical constants, unit conversions and density-derived length scales.
//!
//! Conventions used throughout the crate:
//!
//! * detunings, couplings and Rabi frequencies are ordinary frequencies in MHz;
//! * times are in µs, so a Rabi phase is `2π · Γ · T` and the factor `2π`
//!   appears only where a phase is formed;
//! * lengths are in µm;
//! * densities are given in cm⁻³ at the API surface and converted to µm⁻³
//!   exactly once, inside [`Density`].

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

/// Hartree energy divided by Planck's constant, in MHz (CODATA 2018).
pub const HARTREE_MHZ: f64 = 6.579683920502e9;

/// Bohr radius in µm (CODATA 2018).
pub const BOHR_UM: f64 = 5.29177210903e-5;

/// `e² a₀² / (4π ε₀ h)` in MHz·µm³: the frequency of a dipole-dipole
/// interaction between two unit (a₀) dipoles one µm apart.
///
/// Frozen from `HARTREE_MHZ · BOHR_UM³`, evaluated at 30 significant digits
/// (0.000975008563337617967708...). The SI route through e, ε₀ and h agrees
/// to 2e-12 relative.
pub const ATOMIC_TO_MHZ_UM3: f64 = 9.750_085_633_376_18e-4;

/// cm⁻³ → µm⁻³.
const PER_CM3_TO_PER_UM3: f64 = 1e-12;

/// Linear Stark-tuning range around the resonance field, V/cm.
pub const LINEAR_FIELD_RANGE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    /// 32p–32s radial matrix element, atomic units.
    pub r_ps: f64,
    /// 32p–33s radial matrix element, atomic units.
    pub r_ps_prime: f64,
    /// Resonance field, V/cm.
    pub f0: f64,
    /// Detuning per unit field offset, MHz/(V/cm).
    pub detuning_slope: f64,
    /// See [`ATOMIC_TO_MHZ_UM3`].
    pub atomic_to_mhz_um3: f64,
}

impl PhysicalConstants {
    pub const RB_32P: PhysicalConstants = PhysicalConstants {
        r_ps: 964.0,
        r_ps_prime: 941.0,
        f0: 11.49,
        detuning_slope: 170.0,
        atomic_to_mhz_um3: ATOMIC_TO_MHZ_UM3,
    };

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("r_ps", self.r_ps),
            ("r_ps_prime", self.r_ps_prime),
            ("f0", self.f0),
            ("detuning_slope", self.detuning_slope),
            ("atomic_to_mhz_um3", self.atomic_to_mhz_um3),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    pub fn detuning_from_field(&self, field: f64) -> Result<Tuning> {
        ensure_finite("field", field)?;
        let offset = field - self.f0;
        Ok(Tuning {
            detuning: self.detuning_slope * offset,
            in_linear_range: offset.abs() <= LINEAR_FIELD_RANGE,
        })
    }

    pub fn field_from_detuning(&self, detuning: f64) -> Result<f64> {
        ensure_finite("detuning", detuning)?;
        Ok(self.f0 + detuning / self.detuning_slope)
    }

    /// `r_ps · r_ps' / R³` converted to MHz, for `R` in µm.
    pub fn coupling_prefactor(&self, separation: f64) -> Result<f64> {
        self.radial_prefactor(self.r_ps * self.r_ps_prime, separation)
    }

    /// Same as [`coupling_prefactor`](Self::coupling_prefactor) for an
    /// arbitrary product of radial matrix elements.
    pub fn radial_prefactor(&self, radial_product: f64, separation: f64) -> Result<f64> {
        if !(separation.is_finite() && separation > 0.0) {
            return Err(Error::invalid(format!(
                "separation must be positive, got {separation}"
            )));
        }
        Ok(radial_product * self.atomic_to_mhz_um3 / separation.powi(3))
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::RB_32P
    }
}

/// Result of converting an applied field into a pair detuning.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tuning {
    /// MHz.
    pub detuning: f64,
    /// False when the field is more than 0.5 V/cm from resonance, where the
    /// linear conversion is no longer trusted.
    pub in_linear_range: bool,
}

/// Atom number density. Stored in cm⁻³.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Density(f64);

impl Density {
    pub fn per_cm3(rho: f64) -> Result<Self> {
        if rho.is_finite() && rho > 0.0 {
            Ok(Density(rho))
        } else {
            Err(Error::invalid(format!(
                "density must be positive, got {rho}"
            )))
        }
    }

    pub fn as_per_cm3(self) -> f64 {
        self.0
    }

    pub fn as_per_um3(self) -> f64 {
        self.0 * PER_CM3_TO_PER_UM3
    }
}

impl TryFrom<f64> for Density {
    type Error = Error;
    fn try_from(v: f64) -> Result<Self> {
        Density::per_cm3(v)
    }
}

impl From<Density> for f64 {
    fn from(d: Density) -> f64 {
        d.0
    }
}

pub fn detuning_from_field(field: f64) -> Result<Tuning> {
    PhysicalConstants::RB_32P.detuning_from_field(field)
}

pub fn field_from_detuning(detuning: f64) -> Result<f64> {
    PhysicalConstants::RB_32P.field_from_detuning(detuning)
}

/// Most probable nearest-neighbour separation `(2πρ)^(-1/3)`, µm.
pub fn r0_from_density(rho: Density) -> f64 {
    (2.0 * PI * rho.as_per_um3()).powf(-1.0 / 3.0)
}

/// `(3 ln2 / (4πρ))^(1/3)`, µm: the median of the nearest-neighbour
/// distribution, about 1.013·R0. The distribution's mean is
/// `Γ(4/3)·(3/(4πρ))^(1/3)`, about 1.022·R0.
pub fn r_avg_from_density(rho: Density) -> f64 {
    (3.0 * std::f64::consts::LN_2 / (4.0 * PI * rho.as_per_um3())).cbrt()
}

pub fn coupling_prefactor(separation: f64) -> Result<f64> {
    PhysicalConstants::RB_32P.coupling_prefactor(separation)
}

pub fn hartree_to_mhz(energy: f64) -> f64 {
    energy * HARTREE_MHZ
}

pub fn mhz_to_hartree(freq: f64) -> f64 {
    freq / HARTREE_MHZ
}
