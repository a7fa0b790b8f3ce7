//! Groups of up to four atoms: a central atom and its nearest neighbours,
//! coupled pairwise by the resonant pp ↔ ss' interaction and by the
//! field-independent exchange (hopping) of s and s' excitations between a p
//! atom and a converted atom.
//!
//! Energies are referenced to all-p; every completed pp → ss' conversion
//! adds `E` to the diagonal.

mod basis;
mod group;

pub use basis::{count, GroupBasis, Level, ProductState};
pub use group::{build_group, cube_edge, FourAtomGroup, PairGeometry, CUBE_ATOMS};

use std::collections::HashMap;
use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::ensemble::{
    config_hash, protocol_sequences, sample_moments, substream, EvolutionRecord, ModelTag,
    RecordMetadata,
};
use crate::error::{Error, Result};
use crate::pair::{angular_factor, Channel};
use crate::twolevel::{Protocol, PulseSequence};
use crate::units::{Density, PhysicalConstants};
use crate::C64;

/// Which interaction terms enter the group Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Couplings {
    pub resonant: bool,
    pub exchange: bool,
}

impl Couplings {
    pub const ALL: Couplings = Couplings {
        resonant: true,
        exchange: true,
    };
    pub const RESONANT_ONLY: Couplings = Couplings {
        resonant: true,
        exchange: false,
    };
}

impl Default for Couplings {
    fn default() -> Self {
        Couplings::ALL
    }
}

/// `⟨p_a p_b|H|s_a s'_b⟩ = ⟨p_a p_b|H|s'_a s_b⟩`. Each is `V/√2` of the
/// pair channel, so pp couples to the symmetric ss' combination with `V`
/// and not at all to the antisymmetric one.
fn resonant_element(
    k: &PhysicalConstants,
    g: &PairGeometry,
    a_pos: bool,
    b_pos: bool,
) -> Result<C64> {
    let pre = k.coupling_prefactor(g.separation)?;
    Ok(0.5 * pre * angular_factor(Channel::from_signs(a_pos, b_pos), g.theta, g.phi))
}

/// `⟨p_a x_b|H|x_a p_b⟩` for `x ∈ {s, s'}`.
///
/// The exchange moves one excitation: the p atom (sign `σ_p`) drops to the
/// level `x` and the other atom (sign `σ_x`) returns to p. The two single-atom
/// transitions carry the same m_j changes as the resonant pair transition of
/// the channel `(σ_p, -σ_x)`, so that channel's angular form is used, with the
/// radial product replaced by `r_px²`. With equal signs this is the
/// `sin²Θ - 2/3` form (ΔM = 0); with opposite signs the Φ-dependent
/// `sin²Θ` form (|ΔM| = 2). The result is Hermitian: swapping the roles of the
/// atoms conjugates the element.
fn exchange_element(
    k: &PhysicalConstants,
    g: &PairGeometry,
    p_atom_pos: bool,
    x_atom_pos: bool,
    x: Level,
) -> Result<C64> {
    let r = if x == Level::S { k.r_ps } else { k.r_ps_prime };
    let pre = k.radial_prefactor(r * r, g.separation)?;
    Ok(0.5 * pre * angular_factor(Channel::from_signs(p_atom_pos, !x_atom_pos), g.theta, g.phi))
}

/// Group Hamiltonian split into its detuning-independent couplings and the
/// number of conversions per basis state.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupHamiltonian {
    couplings: DMatrix<C64>,
    conversions: Vec<f64>,
}

impl GroupHamiltonian {
    pub fn new(group: &FourAtomGroup, basis: &GroupBasis, which: Couplings) -> Result<Self> {
        Self::with_constants(&PhysicalConstants::RB_32P, group, basis, which)
    }

    pub fn with_constants(
        k: &PhysicalConstants,
        group: &FourAtomGroup,
        basis: &GroupBasis,
        which: Couplings,
    ) -> Result<Self> {
        if basis.atoms() != group.len() {
            return Err(Error::invalid(format!(
                "basis is for {} atoms but the group has {}",
                basis.atoms(),
                group.len()
            )));
        }
        let n = basis.len();
        let signs = group.mj_positive();
        let geometry = group.pair_geometry();
        let mut h = DMatrix::<C64>::zeros(n, n);
        for (i, state) in basis.states().iter().enumerate() {
            for g in &geometry {
                let (a, b) = (g.a, g.b);
                let (la, lb) = (state[a], state[b]);
                let mut set = |target: ProductState, value: C64| -> Result<()> {
                    let j = basis
                        .index_of(&target)
                        .ok_or_else(|| Error::invalid("basis is not closed under the couplings"))?;
                    h[(i, j)] = value;
                    Ok(())
                };
                let with = |x: Level, y: Level| {
                    let mut t = state.clone();
                    t[a] = x;
                    t[b] = y;
                    t
                };
                use Level::*;
                match (la, lb) {
                    (P, P) if which.resonant => {
                        let v = resonant_element(k, g, signs[a], signs[b])?;
                        set(with(S, SPrime), v)?;
                        set(with(SPrime, S), v)?;
                    }
                    (S, SPrime) | (SPrime, S) if which.resonant => {
                        set(
                            with(P, P),
                            resonant_element(k, g, signs[a], signs[b])?.conj(),
                        )?;
                    }
                    (P, x) if x != P && which.exchange => {
                        set(with(x, P), exchange_element(k, g, signs[a], signs[b], x)?)?;
                    }
                    (x, P) if x != P && which.exchange => {
                        set(with(P, x), exchange_element(k, g, signs[b], signs[a], x)?)?;
                    }
                    _ => {}
                }
            }
        }
        let conversions = basis
            .states()
            .iter()
            .map(|s| count(s, Level::S) as f64)
            .collect();
        Ok(GroupHamiltonian {
            couplings: h,
            conversions,
        })
    }

    pub fn dim(&self) -> usize {
        self.conversions.len()
    }

    /// Dense Hermitian matrix at detuning `E`, MHz.
    pub fn matrix(&self, detuning: f64) -> DMatrix<C64> {
        let mut h = self.couplings.clone();
        for (i, c) in self.conversions.iter().enumerate() {
            h[(i, i)] = C64::new(c * detuning, 0.0);
        }
        h
    }
}

/// Hamiltonian of `group` at detuning `E` with the chosen couplings.
pub fn build_hamiltonian(
    group: &FourAtomGroup,
    basis: &GroupBasis,
    detuning: f64,
    which: Couplings,
) -> Result<DMatrix<C64>> {
    Ok(GroupHamiltonian::new(group, basis, which)?.matrix(detuning))
}

/// `‖H - H†‖∞`.
pub fn hermiticity_error(h: &DMatrix<C64>) -> f64 {
    (h - h.adjoint())
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

struct ZoneEigen {
    vectors: DMatrix<C64>,
    values: DVector<f64>,
}

impl ZoneEigen {
    fn new(h: DMatrix<C64>) -> Result<Self> {
        let norm = h.norm();
        let herm = hermiticity_error(&h);
        match SymmetricEigen::try_new(h, f64::EPSILON, 10_000) {
            Some(e) => Ok(ZoneEigen { vectors: e.eigenvectors, values: e.eigenvalues }),
            None => Err(Error::Numerical {
                index: 0,
                message: format!(
                    "eigendecomposition did not converge (‖H‖_F = {norm:.3e} MHz, ‖H - H†‖ = {herm:.3e})"
                ),
            }),
        }
    }

    /// `exp(-2πiHτ) ψ`.
    fn evolve(&self, psi: &DVector<C64>, tau: f64) -> DVector<C64> {
        let mut c = self.vectors.adjoint() * psi;
        for (ck, lam) in c.iter_mut().zip(self.values.iter()) {
            *ck *= C64::from_polar(1.0, -TAU * lam * tau);
        }
        &self.vectors * c
    }
}

/// Populations of one group after each sequence. Fractions count atoms, so
/// `p + s + s' = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupEvolution {
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub s_prime: Vec<f64>,
    /// Largest `|‖ψ‖² - 1|` over the outputs.
    pub max_norm_error: f64,
    /// Final amplitudes after each sequence, in basis order.
    pub amplitudes: Vec<DVector<C64>>,
}

/// Exact propagation of `group` from all-p through each sequence.
pub fn propagate_sequences(
    group: &FourAtomGroup,
    basis: &GroupBasis,
    sequences: &[PulseSequence],
    which: Couplings,
) -> Result<GroupEvolution> {
    let ham = GroupHamiltonian::new(group, basis, which)?;
    let mut cache: HashMap<u64, ZoneEigen> = HashMap::new();
    let mut psi0 = DVector::<C64>::zeros(ham.dim());
    psi0[0] = C64::new(1.0, 0.0);
    let atoms = group.len() as f64;
    let weights: Vec<[f64; 3]> = basis
        .states()
        .iter()
        .map(|s| {
            [
                count(s, Level::P),
                count(s, Level::S),
                count(s, Level::SPrime),
            ]
            .map(|c| c as f64 / atoms)
        })
        .collect();

    let mut out = GroupEvolution {
        p: Vec::with_capacity(sequences.len()),
        s: Vec::with_capacity(sequences.len()),
        s_prime: Vec::with_capacity(sequences.len()),
        max_norm_error: 0.0,
        amplitudes: Vec::with_capacity(sequences.len()),
    };
    for seq in sequences {
        let mut psi = psi0.clone();
        for z in seq.zones() {
            let key = z.detuning.to_bits();
            if !cache.contains_key(&key) {
                cache.insert(key, ZoneEigen::new(ham.matrix(z.detuning))?);
            }
            psi = cache[&key].evolve(&psi, z.duration);
        }
        let mut pop = [0.0; 3];
        let mut norm = 0.0;
        for (amp, w) in psi.iter().zip(&weights) {
            let q = amp.norm_sqr();
            norm += q;
            for k in 0..3 {
                pop[k] += q * w[k];
            }
        }
        out.max_norm_error = out.max_norm_error.max((norm - 1.0).abs());
        out.p.push(pop[0].clamp(0.0, 1.0));
        out.s.push(pop[1]);
        out.s_prime.push(pop[2]);
        out.amplitudes.push(psi);
    }
    Ok(out)
}

/// Populations of one group at each time along `seq`.
pub fn propagate_group(
    group: &FourAtomGroup,
    seq: &PulseSequence,
    times: &[f64],
    which: Couplings,
) -> Result<GroupEvolution> {
    let seqs: Vec<PulseSequence> = times
        .iter()
        .map(|&t| seq.truncated(t))
        .collect::<Result<_>>()?;
    propagate_sequences(group, &GroupBasis::enumerate(group.len()), &seqs, which)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupConfig {
    pub rho: Density,
    pub n_groups: usize,
    pub seed: u64,
    /// Keep the central atom and its `atoms - 1` nearest neighbours (2 to 4).
    #[serde(default = "default_atoms")]
    pub atoms: usize,
    #[serde(default)]
    pub couplings: Couplings,
}

fn default_atoms() -> usize {
    4
}

impl GroupConfig {
    pub fn new(rho: Density, n_groups: usize, seed: u64) -> Self {
        GroupConfig {
            rho,
            n_groups,
            seed,
            atoms: 4,
            couplings: Couplings::ALL,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_groups == 0 {
            return Err(Error::invalid("n_groups must be at least 1"));
        }
        if !(2..=4).contains(&self.atoms) {
            return Err(Error::invalid(format!(
                "atoms must be 2, 3 or 4, got {}",
                self.atoms
            )));
        }
        Ok(())
    }

    /// Group number `index` of this run, already truncated to `atoms`.
    pub fn group(&self, index: usize) -> Result<FourAtomGroup> {
        build_group(self.rho, &mut substream(self.seed, index as u64)).truncated(self.atoms)
    }
}

fn group_average(
    cfg: &GroupConfig,
    times: &[f64],
    seqs: &[PulseSequence],
    metadata: RecordMetadata,
) -> Result<EvolutionRecord> {
    let basis = GroupBasis::enumerate(cfg.atoms);
    let k = seqs.len();
    let m = sample_moments(cfg.n_groups, 3 * k, |i, out| {
        let g = cfg.group(i)?;
        let ev = propagate_sequences(&g, &basis, seqs, cfg.couplings)?;
        out[..k].copy_from_slice(&ev.p);
        out[k..2 * k].copy_from_slice(&ev.s);
        out[2 * k..].copy_from_slice(&ev.s_prime);
        Ok(())
    })?;
    Ok(EvolutionRecord {
        times: times.to_vec(),
        p_population: m.mean[..k].to_vec(),
        s_population: m.mean[k..2 * k].to_vec(),
        s_prime_population: m.mean[2 * k..].to_vec(),
        p_stderr: m.stderr[..k].to_vec(),
        metadata,
    })
}

fn metadata(cfg: &GroupConfig, label: String, hash: String) -> RecordMetadata {
    RecordMetadata {
        model: ModelTag::FourAtom,
        label,
        seed: cfg.seed,
        samples: cfg.n_groups,
        config_hash: hash,
    }
}

/// Group-ensemble mean populations at each time along `seq`.
pub fn ensemble_average_groups(
    cfg: &GroupConfig,
    seq: &PulseSequence,
    times: &[f64],
) -> Result<EvolutionRecord> {
    cfg.validate()?;
    if times.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    let seqs: Vec<PulseSequence> = times
        .iter()
        .map(|&t| seq.truncated(t))
        .collect::<Result<_>>()?;
    let meta = metadata(cfg, "sequence".into(), config_hash(&(cfg, seq, times)));
    group_average(cfg, times, &seqs, meta)
}

/// Group-ensemble mean populations against total interaction time, the
/// protocol being rebuilt for every `T`.
pub fn group_scan(
    cfg: &GroupConfig,
    protocol: &Protocol,
    times: &[f64],
) -> Result<EvolutionRecord> {
    cfg.validate()?;
    let seqs = protocol_sequences(protocol, times)?;
    let meta = metadata(cfg, protocol.label(), config_hash(&(cfg, protocol, times)));
    group_average(cfg, times, &seqs, meta)
}

#[cfg(test)]
mod tests;
