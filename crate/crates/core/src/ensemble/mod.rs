//! Monte Carlo ensembles of independent pairs: the random frozen gas under
//! the nearest-neighbour model, and ordered arrays of aligned pairs.

mod analysis;
mod parallel;
mod record;
mod sampling;

pub use analysis::{
    contrast_envelope, dephasing_time_of, extrema, late_reversal_of, modulation_contrast_of,
    oscillation_period_of, EXTREMUM_THRESHOLD,
};
pub use record::{config_hash, EvolutionRecord, ModelTag, RecordMetadata};
pub use sampling::{
    nn_cdf, nn_pdf, sample_nn_distance, sample_orientation, substream, ChannelWeights,
};

pub(crate) use parallel::{ordered_map, sample_moments};
pub(crate) use sampling::uniform_cube;

use std::f64::consts::TAU;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};
use crate::pair::{channel_coupling, AtomPair};
use crate::twolevel::{evolve_from_pp, Protocol, PulseSequence};
use crate::units::Density;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleConfig {
    pub rho: Density,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub channel_weights: ChannelWeights,
}

impl EnsembleConfig {
    pub fn new(rho: Density, n_samples: usize, seed: u64) -> Self {
        EnsembleConfig {
            rho,
            n_samples,
            seed,
            channel_weights: ChannelWeights::UNIFORM,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        ChannelWeights::new(self.channel_weights.as_array()).map(|_| ())
    }

    /// Pair for sample `index`: nearest-neighbour distance, isotropic
    /// orientation, channel by weight.
    pub fn sample_pair(&self, index: usize) -> Result<AtomPair> {
        let mut rng = substream(self.seed, index as u64);
        let r = sample_nn_distance(self.rho, &mut rng);
        let (theta, phi) = sample_orientation(&mut rng);
        let channel = self.channel_weights.sample(&mut rng);
        AtomPair::new(r, theta, phi, channel)
    }

    pub fn couplings(&self) -> Result<Vec<C64>> {
        self.validate()?;
        ordered_map(self.n_samples, |i| channel_coupling(&self.sample_pair(i)?))
    }
}

/// Aligned pairs with Gaussian separations and a fixed polar angle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrderedConfig {
    /// µm.
    pub r_mean: f64,
    /// µm.
    pub r_sigma: f64,
    /// Radians.
    pub theta: f64,
    pub n_samples: usize,
    pub seed: u64,
    #[serde(default)]
    pub channel_weights: ChannelWeights,
}

impl OrderedConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.r_mean.is_finite() && self.r_mean > 0.0) {
            return Err(Error::invalid(format!(
                "r_mean must be positive, got {}",
                self.r_mean
            )));
        }
        if !(self.r_sigma.is_finite() && self.r_sigma >= 0.0) {
            return Err(Error::invalid(format!(
                "r_sigma must be non-negative, got {}",
                self.r_sigma
            )));
        }
        if !(0.0..=std::f64::consts::PI).contains(&self.theta) {
            return Err(Error::invalid(format!(
                "theta must lie in [0, π], got {}",
                self.theta
            )));
        }
        if self.n_samples == 0 {
            return Err(Error::invalid("n_samples must be at least 1"));
        }
        ChannelWeights::new(self.channel_weights.as_array()).map(|_| ())
    }

    /// Non-positive separations are redrawn.
    pub fn sample_pair(&self, index: usize) -> Result<AtomPair> {
        let mut rng = substream(self.seed, index as u64);
        let normal = Normal::new(self.r_mean, self.r_sigma)
            .map_err(|e| Error::invalid(format!("separation distribution: {e}")))?;
        let r = loop {
            let r = normal.sample(&mut rng);
            if r > 0.0 {
                break r;
            }
        };
        let phi = rng.random_range(0.0..TAU);
        let channel = self.channel_weights.sample(&mut rng);
        AtomPair::new(r, self.theta, phi, channel)
    }

    pub fn couplings(&self) -> Result<Vec<C64>> {
        self.validate()?;
        ordered_map(self.n_samples, |i| channel_coupling(&self.sample_pair(i)?))
    }

    /// Mean `|V|` over the sampled pairs, MHz.
    pub fn mean_coupling(&self) -> Result<f64> {
        let v = self.couplings()?;
        Ok(v.iter().map(|c| c.norm()).sum::<f64>() / v.len() as f64)
    }
}

/// `n` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Result<Vec<f64>> {
    ensure_finite("grid start", start)?;
    ensure_finite("grid stop", stop)?;
    if n < 2 || !(stop > start) {
        return Err(Error::invalid(format!(
            "grid needs at least 2 points and stop > start, got {n} points on [{start}, {stop}]"
        )));
    }
    let step = (stop - start) / (n - 1) as f64;
    Ok((0..n)
        .map(|i| {
            if i + 1 == n {
                stop
            } else {
                start + step * i as f64
            }
        })
        .collect())
}

/// Lorentzian `4V²/(E² + 4V²)`: the peak transfer of a single pair.
pub fn lorentzian(coupling: f64, detuning: f64) -> f64 {
    let v2 = 4.0 * coupling * coupling;
    if v2 == 0.0 {
        return 0.0;
    }
    v2 / (detuning * detuning + v2)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineshapePoint {
    /// MHz.
    pub detuning: f64,
    pub transfer: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lineshape {
    /// µs.
    pub duration: f64,
    pub points: Vec<LineshapePoint>,
    pub metadata: RecordMetadata,
}

impl Lineshape {
    pub fn hwhm(&self) -> Result<f64> {
        let (e, v): (Vec<f64>, Vec<f64>) =
            self.points.iter().map(|p| (p.detuning, p.transfer)).unzip();
        half_width(&e, &v)
    }

    pub fn write_csv<W: Write>(&self, mut w: W, extra: &[(String, String)]) -> Result<()> {
        let fail = |e: csv::Error| Error::invalid(format!("write failed: {e}"));
        record::write_header(&mut w, &self.metadata.header())?;
        record::write_header(&mut w, &[("duration_us".into(), self.duration.to_string())])?;
        record::write_header(&mut w, extra)?;
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(["detuning_mhz", "transfer", "stderr"])
            .map_err(fail)?;
        for p in &self.points {
            csv.write_record([
                p.detuning.to_string(),
                p.transfer.to_string(),
                p.stderr.to_string(),
            ])
            .map_err(fail)?;
        }
        csv.flush()
            .map_err(|e| Error::invalid(format!("write failed: {e}")))
    }
}

/// Half width at half maximum of a sampled peak, from linear interpolation
/// of the half-maximum crossings on either side of the largest sample.
pub fn half_width(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::invalid("need at least three matching samples"));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("abscissae must be strictly increasing"));
    }
    let peak = (0..y.len()).fold(0, |best, i| if y[i] > y[best] { i } else { best });
    let half = 0.5 * y[peak];
    let cross = |a: usize, b: usize| x[a] + (half - y[a]) / (y[b] - y[a]) * (x[b] - x[a]);
    let left = (1..=peak)
        .rev()
        .find(|&i| y[i - 1] <= half)
        .map(|i| cross(i - 1, i));
    let right = (peak..y.len() - 1)
        .find(|&i| y[i + 1] <= half)
        .map(|i| cross(i, i + 1));
    match (left, right) {
        (Some(l), Some(r)) => Ok(0.5 * (r - l)),
        _ => Err(Error::NotApplicable(
            "the peak does not fall to half maximum inside the scan".into(),
        )),
    }
}

/// Ensemble-mean transfer probability after a constant detuning held for
/// `duration`, for each detuning. The same pairs are used at every
/// detuning.
pub fn lineshape(cfg: &EnsembleConfig, duration: f64, detunings: &[f64]) -> Result<Lineshape> {
    cfg.validate()?;
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::invalid(format!(
            "duration must be positive, got {duration}"
        )));
    }
    for &e in detunings {
        ensure_finite("detuning", e)?;
    }
    let m = sample_moments(cfg.n_samples, detunings.len(), |i, out| {
        let v = channel_coupling(&cfg.sample_pair(i)?)?;
        for (o, &e) in out.iter_mut().zip(detunings) {
            *o = crate::twolevel::transfer_probability(e, v, duration)?;
        }
        Ok(())
    })?;
    let points = detunings
        .iter()
        .zip(m.mean.iter().zip(&m.stderr))
        .map(|(&detuning, (&transfer, &stderr))| LineshapePoint {
            detuning,
            transfer,
            stderr,
        })
        .collect();
    Ok(Lineshape {
        duration,
        points,
        metadata: RecordMetadata {
            model: ModelTag::TwoAtom,
            label: "lineshape".into(),
            seed: cfg.seed,
            samples: cfg.n_samples,
            config_hash: config_hash(&(cfg, duration, detunings)),
        },
    })
}

/// Empirical `q`-th percentile (0 < q < 100) of `|V|` over the sampled pairs,
/// with linear interpolation between order statistics.
pub fn percentile_coupling(cfg: &EnsembleConfig, q: f64) -> Result<f64> {
    if !(q > 0.0 && q < 100.0) {
        return Err(Error::invalid(format!(
            "percentile must lie in (0, 100), got {q}"
        )));
    }
    let mut v: Vec<f64> = cfg.couplings()?.iter().map(|c| c.norm()).collect();
    v.sort_by(f64::total_cmp);
    let pos = q / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(v.len() - 1);
    Ok(v[lo] + (pos - lo as f64) * (v[hi] - v[lo]))
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.is_empty() {
        return Err(Error::invalid("time grid is empty"));
    }
    for &t in times {
        if !(t.is_finite() && t >= 0.0) {
            return Err(Error::invalid(format!(
                "times must be finite and non-negative, got {t}"
            )));
        }
    }
    Ok(())
}

/// Average over pairs of the populations after each sequence.
fn pair_average<F>(
    n: usize,
    times: &[f64],
    sequences: &[PulseSequence],
    coupling: F,
    metadata: RecordMetadata,
) -> Result<EvolutionRecord>
where
    F: Fn(usize) -> Result<C64> + Sync,
{
    let k = sequences.len();
    let m = sample_moments(n, 2 * k, |i, out| {
        let v = coupling(i)?;
        for (j, seq) in sequences.iter().enumerate() {
            let c = evolve_from_pp(seq, v);
            let p = c[0].norm_sqr().min(1.0);
            out[j] = p;
            out[k + j] = 1.0 - p;
        }
        Ok(())
    })?;
    let half: Vec<f64> = m.mean[k..].iter().map(|x| 0.5 * x).collect();
    Ok(EvolutionRecord {
        times: times.to_vec(),
        p_population: m.mean[..k].to_vec(),
        s_population: half.clone(),
        s_prime_population: half,
        p_stderr: m.stderr[..k].to_vec(),
        metadata,
    })
}

fn truncations(seq: &PulseSequence, times: &[f64]) -> Result<Vec<PulseSequence>> {
    check_times(times)?;
    times.iter().map(|&t| seq.truncated(t)).collect()
}

/// Rebuilds the protocol's sequence for every total time in `times`.
pub fn protocol_sequences(protocol: &Protocol, times: &[f64]) -> Result<Vec<PulseSequence>> {
    protocol.validate()?;
    check_times(times)?;
    times.iter().map(|&t| protocol.sequence(t)).collect()
}

/// Random-gas ensemble followed along one sequence: the populations at each
/// time in `times` (all within the sequence).
pub fn ensemble_evolution(
    cfg: &EnsembleConfig,
    seq: &PulseSequence,
    times: &[f64],
) -> Result<EvolutionRecord> {
    cfg.validate()?;
    let seqs = truncations(seq, times)?;
    let meta = RecordMetadata {
        model: ModelTag::TwoAtom,
        label: "sequence".into(),
        seed: cfg.seed,
        samples: cfg.n_samples,
        config_hash: config_hash(&(cfg, seq, times)),
    };
    pair_average(
        cfg.n_samples,
        times,
        &seqs,
        |i| channel_coupling(&cfg.sample_pair(i)?),
        meta,
    )
}

/// Random-gas ensemble against total interaction time: at each `T` the full
/// protocol (for QPM, `N` zones of `T/N`) is applied.
pub fn ensemble_scan(
    cfg: &EnsembleConfig,
    protocol: &Protocol,
    times: &[f64],
) -> Result<EvolutionRecord> {
    cfg.validate()?;
    let seqs = protocol_sequences(protocol, times)?;
    let meta = RecordMetadata {
        model: ModelTag::TwoAtom,
        label: protocol.label(),
        seed: cfg.seed,
        samples: cfg.n_samples,
        config_hash: config_hash(&(cfg, protocol, times)),
    };
    pair_average(
        cfg.n_samples,
        times,
        &seqs,
        |i| channel_coupling(&cfg.sample_pair(i)?),
        meta,
    )
}

pub fn ordered_array_evolution(
    cfg: &OrderedConfig,
    seq: &PulseSequence,
    times: &[f64],
) -> Result<EvolutionRecord> {
    cfg.validate()?;
    let seqs = truncations(seq, times)?;
    let meta = RecordMetadata {
        model: ModelTag::Ordered,
        label: "sequence".into(),
        seed: cfg.seed,
        samples: cfg.n_samples,
        config_hash: config_hash(&(cfg, seq, times)),
    };
    pair_average(
        cfg.n_samples,
        times,
        &seqs,
        |i| channel_coupling(&cfg.sample_pair(i)?),
        meta,
    )
}

pub fn ordered_scan(
    cfg: &OrderedConfig,
    protocol: &Protocol,
    times: &[f64],
) -> Result<EvolutionRecord> {
    cfg.validate()?;
    let seqs = protocol_sequences(protocol, times)?;
    let meta = RecordMetadata {
        model: ModelTag::Ordered,
        label: protocol.label(),
        seed: cfg.seed,
        samples: cfg.n_samples,
        config_hash: config_hash(&(cfg, protocol, times)),
    };
    pair_average(
        cfg.n_samples,
        times,
        &seqs,
        |i| channel_coupling(&cfg.sample_pair(i)?),
        meta,
    )
}
