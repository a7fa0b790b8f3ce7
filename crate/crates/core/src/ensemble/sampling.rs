use std::f64::consts::{PI, TAU};

use rand::distr::{Distribution, Open01, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pair::Channel;
use crate::units::Density;

/// Generator for Monte Carlo sample `index` of a run seeded with `seed`.
///
/// Every sample owns a ChaCha stream, so the draws for a given sample do not
/// depend on how samples are split across threads.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Nearest-neighbour density `G(R) = 4πρR² exp(-4πρR³/3)`, per µm.
pub fn nn_pdf(rho: Density, r: f64) -> f64 {
    if r < 0.0 {
        return 0.0;
    }
    let n = rho.as_per_um3();
    4.0 * PI * n * r * r * (-4.0 / 3.0 * PI * n * r.powi(3)).exp()
}

pub fn nn_cdf(rho: Density, r: f64) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    -(-4.0 / 3.0 * PI * rho.as_per_um3() * r.powi(3)).exp_m1()
}

/// Inverse-CDF draw from `G(R)`, µm.
pub fn sample_nn_distance<R: Rng + ?Sized>(rho: Density, rng: &mut R) -> f64 {
    let u: f64 = Open01.sample(rng);
    (-3.0 * (-u).ln_1p() / (4.0 * PI * rho.as_per_um3())).cbrt()
}

/// Isotropic direction `(θ, φ)`: cos θ uniform on [-1, 1], φ on [0, 2π).
pub fn sample_orientation<R: Rng + ?Sized>(rng: &mut R) -> (f64, f64) {
    let cos_theta: f64 = rng.random_range(-1.0..=1.0);
    let phi: f64 = rng.random_range(0.0..TAU);
    (cos_theta.clamp(-1.0, 1.0).acos(), phi)
}

/// Probabilities for the four channels, in [`Channel::ALL`] order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct ChannelWeights([f64; 4]);

impl ChannelWeights {
    pub const UNIFORM: ChannelWeights = ChannelWeights([0.25; 4]);

    pub fn new(w: [f64; 4]) -> Result<Self> {
        if w.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::invalid(format!(
                "channel weights must be non-negative, got {w:?}"
            )));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!(
                "channel weights must sum to 1, got {sum}"
            )));
        }
        Ok(ChannelWeights(w))
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Channel {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (ch, w) in Channel::ALL.iter().zip(self.0) {
            acc += w;
            if u < acc {
                return *ch;
            }
        }
        // u landed in the rounding gap above the cumulative sum
        Channel::ALL
            .iter()
            .zip(self.0)
            .rev()
            .find(|(_, w)| *w > 0.0)
            .map(|(c, _)| *c)
            .unwrap_or(Channel::PlusPlus)
    }
}

impl Default for ChannelWeights {
    fn default() -> Self {
        ChannelWeights::UNIFORM
    }
}

impl TryFrom<[f64; 4]> for ChannelWeights {
    type Error = Error;
    fn try_from(w: [f64; 4]) -> Result<Self> {
        ChannelWeights::new(w)
    }
}

impl From<ChannelWeights> for [f64; 4] {
    fn from(w: ChannelWeights) -> [f64; 4] {
        w.0
    }
}

pub(crate) fn uniform_cube<R: Rng + ?Sized>(edge: f64, rng: &mut R) -> [f64; 3] {
    let u = Uniform::new(0.0, edge).expect("positive cube edge");
    [u.sample(rng), u.sample(rng), u.sample(rng)]
}
