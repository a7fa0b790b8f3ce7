//! Closed-form propagation of one pp ↔ ss' channel under piecewise-constant
//! detuning.
//!
//! The channel Hamiltonian in the basis `(pp, ss'_S)` is
//! `H = [[0, V], [V*, E]]` (MHz). Zone propagators use the standard closed
//! form
//!
//! ```text
//! U(E, T) = [[cos φ/2 - i (E/Γ) sin φ/2,   i (2V/Γ) sin φ/2         ],
//!            [i (2V*/Γ) sin φ/2,           cos φ/2 + i (E/Γ) sin φ/2]]
//! ```
//!
//! with `Γ = √(E² + 4|V|²)` and `φ = 2πΓT`. This is `e^{-iπET} · e^{+2πiHT}`:
//! the phase-referenced evolution written with the opposite sign of time
//! from `e^{-2πiHT}`. All populations, and therefore every observable in this
//! crate, are identical in the two pictures; the Bloch azimuth changes sign.

mod bloch;
mod sequence;

pub use bloch::{
    bloch_trajectory, dephasing_phase_spread, write_bloch_csv, BlochPoint, BoundaryFlag,
};
pub use sequence::{qpm_sequence, Protocol, PulseSequence, Zone};

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64 as C64;

use crate::error::{ensure_finite, Error, Result};
use crate::pair::generalized_rabi;

/// Largest value of the large-detuning validity expression accepted by
/// [`qpm_approx_transfer`].
pub const QPM_VALIDITY_LIMIT: f64 = 0.1;

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// 2×2 complex propagator acting on `(C_pp, C_ss')`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferMatrix2 {
    pub u: [[C64; 2]; 2],
}

impl TransferMatrix2 {
    pub const IDENTITY: TransferMatrix2 = TransferMatrix2 {
        u: [
            [C64 { re: 1.0, im: 0.0 }, C64 { re: 0.0, im: 0.0 }],
            [C64 { re: 0.0, im: 0.0 }, C64 { re: 1.0, im: 0.0 }],
        ],
    };

    pub fn new(u11: C64, u12: C64, u21: C64, u22: C64) -> Self {
        TransferMatrix2 {
            u: [[u11, u12], [u21, u22]],
        }
    }

    pub fn adjoint(&self) -> Self {
        let u = &self.u;
        Self::new(
            u[0][0].conj(),
            u[1][0].conj(),
            u[0][1].conj(),
            u[1][1].conj(),
        )
    }

    pub fn determinant(&self) -> C64 {
        self.u[0][0] * self.u[1][1] - self.u[0][1] * self.u[1][0]
    }

    pub fn apply(&self, state: [C64; 2]) -> [C64; 2] {
        let u = &self.u;
        [
            u[0][0] * state[0] + u[0][1] * state[1],
            u[1][0] * state[0] + u[1][1] * state[1],
        ]
    }

    /// `‖U†U - I‖∞` (max entry modulus).
    pub fn unitarity_error(&self) -> f64 {
        (self.adjoint() * *self).max_abs_diff(&Self::IDENTITY)
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0f64;
        for r in 0..2 {
            for c in 0..2 {
                m = m.max((self.u[r][c] - other.u[r][c]).norm());
            }
        }
        m
    }

    /// Population transferred out of pp when starting in pp, `|u21|²`.
    pub fn transfer(&self) -> f64 {
        self.u[1][0].norm_sqr()
    }
}

impl Mul for TransferMatrix2 {
    type Output = TransferMatrix2;

    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self.u, &rhs.u);
        let mut u = [[C64::new(0.0, 0.0); 2]; 2];
        for r in 0..2 {
            for c in 0..2 {
                u[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        TransferMatrix2 { u }
    }
}

fn check_duration(duration: f64) -> Result<()> {
    if duration.is_finite() && duration >= 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "duration must be finite and non-negative, got {duration}"
        )))
    }
}

/// Constant-detuning propagator `U(E, T)`; `E`, `V` in MHz, `T` in µs.
pub fn propagator(detuning: f64, coupling: C64, duration: f64) -> Result<TransferMatrix2> {
    check_duration(duration)?;
    ensure_finite("detuning", detuning)?;
    ensure_finite("coupling", coupling.norm())?;
    Ok(propagator_unchecked(detuning, coupling, duration))
}

pub(crate) fn propagator_unchecked(detuning: f64, coupling: C64, duration: f64) -> TransferMatrix2 {
    let gamma = generalized_rabi(detuning, coupling);
    if gamma == 0.0 || duration == 0.0 {
        return TransferMatrix2::IDENTITY;
    }
    let half = PI * gamma * duration;
    let (s, c) = half.sin_cos();
    let a = detuning / gamma * s;
    let b = I * (2.0 * s / gamma);
    TransferMatrix2::new(
        C64::new(c, -a),
        b * coupling,
        b * coupling.conj(),
        C64::new(c, a),
    )
}

/// `|C_ss'(T)|² = (4|V|²/Γ²) sin²(πΓT)`; zero when `E = V = 0`.
pub fn transfer_probability(detuning: f64, coupling: C64, duration: f64) -> Result<f64> {
    check_duration(duration)?;
    ensure_finite("detuning", detuning)?;
    ensure_finite("coupling", coupling.norm())?;
    let gamma = generalized_rabi(detuning, coupling);
    if gamma == 0.0 {
        return Ok(0.0);
    }
    let amp = 4.0 * coupling.norm_sqr() / (gamma * gamma);
    Ok(amp * (PI * gamma * duration).sin().powi(2))
}

/// Ordered product of the zone propagators; the first zone acts first.
pub fn sequence_propagator(seq: &PulseSequence, coupling: C64) -> Result<TransferMatrix2> {
    ensure_finite("coupling", coupling.norm())?;
    Ok(seq
        .zones()
        .iter()
        .fold(TransferMatrix2::IDENTITY, |acc, z| {
            propagator_unchecked(z.detuning, coupling, z.duration) * acc
        }))
}

/// Amplitudes `(C_pp, C_ss')` after the sequence, starting from pp.
pub fn evolve_from_pp(seq: &PulseSequence, coupling: C64) -> [C64; 2] {
    seq.zones()
        .iter()
        .fold([C64::new(1.0, 0.0), C64::new(0.0, 0.0)], |state, z| {
            propagator_unchecked(z.detuning, coupling, z.duration).apply(state)
        })
}

/// `2^{N/2} (2|V|/Γ_N)² sin²(φ_N/2)` with `Γ_N = Γ/N`, `φ_N = 2πΓ_N T`.
pub fn qpm_validity(detuning: f64, coupling: C64, duration: f64, zones: u32) -> f64 {
    let gamma_n = generalized_rabi(detuning, coupling) / zones as f64;
    if gamma_n == 0.0 {
        return 0.0;
    }
    2f64.powf(zones as f64 / 2.0)
        * (2.0 * coupling.norm() / gamma_n).powi(2)
        * (PI * gamma_n * duration).sin().powi(2)
}

/// Large-detuning approximation to the N-zone QPM transfer,
/// `(4|V|²/Γ_N²) sin²(πΓ_N T)`. Refuses to answer when the validity
/// expression reaches [`QPM_VALIDITY_LIMIT`].
pub fn qpm_approx_transfer(detuning: f64, coupling: C64, duration: f64, zones: u32) -> Result<f64> {
    sequence::check_zone_count(zones)?;
    check_duration(duration)?;
    ensure_finite("detuning", detuning)?;
    ensure_finite("coupling", coupling.norm())?;
    let validity = qpm_validity(detuning, coupling, duration, zones);
    if validity >= QPM_VALIDITY_LIMIT {
        return Err(Error::OutOfRegime {
            validity,
            limit: QPM_VALIDITY_LIMIT,
        });
    }
    Ok(qpm_approx_formula(detuning, coupling, duration, zones))
}

/// The approximate formula without regime or parity checks.
pub fn qpm_approx_formula(detuning: f64, coupling: C64, duration: f64, zones: u32) -> f64 {
    let gamma_n = generalized_rabi(detuning, coupling) / zones as f64;
    if gamma_n == 0.0 {
        return 0.0;
    }
    4.0 * coupling.norm_sqr() / (gamma_n * gamma_n) * (PI * gamma_n * duration).sin().powi(2)
}
