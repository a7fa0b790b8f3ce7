//! Dipole-dipole driven pp → ss' population transfer in frozen Rydberg
//! gases, and quasi-phase-matched (QPM) detuning-jump sequences that undo
//! coupling-strength dephasing.
//!
//! Frequencies are ordinary frequencies in MHz, times in µs, lengths in µm.
//! Phases are `2π · frequency · time`.

pub mod ensemble;
pub mod error;
pub mod multiatom;
pub mod pair;
pub mod twolevel;
pub mod units;

pub use ensemble::{
    ensemble_evolution, ensemble_scan, lineshape, ordered_array_evolution, ordered_scan,
    percentile_coupling, ChannelWeights, EnsembleConfig, EvolutionRecord, Lineshape, ModelTag,
    OrderedConfig,
};
pub use error::{Error, Result};
pub use multiatom::{
    build_group, ensemble_average_groups, group_scan, propagate_group, Couplings, FourAtomGroup,
    GroupBasis, GroupConfig,
};
pub use num_complex::Complex64 as C64;
pub use pair::{
    angle_averaged_coupling, angular_factor, channel_coupling, generalized_rabi, pair_eigensystem,
    AtomPair, Channel, PairEigensystem,
};
pub use twolevel::{
    bloch_trajectory, dephasing_phase_spread, propagator, qpm_approx_transfer, qpm_sequence,
    sequence_propagator, transfer_probability, BlochPoint, Protocol, PulseSequence,
    TransferMatrix2, Zone,
};
pub use units::{Density, PhysicalConstants};
