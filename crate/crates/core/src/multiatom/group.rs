use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::ensemble::uniform_cube;
use crate::error::{Error, Result};
use crate::pair::spherical;
use crate::units::Density;

/// Atoms placed in the sampling cube around the central atom.
pub const CUBE_ATOMS: usize = 99;

/// Up to four atoms with their initial m_j signs (`true` for +3/2). Atom 0
/// is the central atom, the others are its neighbours by increasing
/// distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourAtomGroup {
    positions: Vec<[f64; 3]>,
    mj_positive: Vec<bool>,
}

/// Separation (µm) and direction of the vector from atom `a` to atom `b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairGeometry {
    pub a: usize,
    pub b: usize,
    pub separation: f64,
    pub theta: f64,
    pub phi: f64,
}

impl FourAtomGroup {
    pub fn new(positions: Vec<[f64; 3]>, mj_positive: Vec<bool>) -> Result<Self> {
        if !(2..=4).contains(&positions.len()) || positions.len() != mj_positive.len() {
            return Err(Error::invalid(format!(
                "a group needs 2 to 4 atoms with one sign each, got {} positions and {} signs",
                positions.len(),
                mj_positive.len()
            )));
        }
        if positions.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::invalid("atom positions must be finite"));
        }
        let g = FourAtomGroup {
            positions,
            mj_positive,
        };
        if let Some(p) = g.pair_geometry().iter().find(|p| !(p.separation > 0.0)) {
            return Err(Error::invalid(format!(
                "atoms {} and {} coincide",
                p.a, p.b
            )));
        }
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[[f64; 3]] {
        &self.positions
    }

    pub fn mj_positive(&self) -> &[bool] {
        &self.mj_positive
    }

    pub fn pair_geometry(&self) -> Vec<PairGeometry> {
        let n = self.positions.len();
        let mut out = Vec::with_capacity(n * (n - 1) / 2);
        for a in 0..n {
            for b in a + 1..n {
                let (pa, pb) = (self.positions[a], self.positions[b]);
                let (separation, theta, phi) =
                    spherical([pb[0] - pa[0], pb[1] - pa[1], pb[2] - pa[2]]);
                out.push(PairGeometry {
                    a,
                    b,
                    separation,
                    theta,
                    phi,
                });
            }
        }
        out
    }

    /// The first `k` atoms (the centre and its `k - 1` nearest neighbours).
    pub fn truncated(&self, k: usize) -> Result<Self> {
        if !(2..=self.len()).contains(&k) {
            return Err(Error::invalid(format!(
                "cannot keep {k} of {} atoms",
                self.len()
            )));
        }
        FourAtomGroup::new(self.positions[..k].to_vec(), self.mj_positive[..k].to_vec())
    }

    /// Same atoms in the order given by `perm` (atom `i` of the result is
    /// atom `perm[i]` of `self`).
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let mut seen = vec![false; self.len()];
        if perm.len() != self.len()
            || perm
                .iter()
                .any(|&i| i >= self.len() || std::mem::replace(&mut seen[i], true))
        {
            return Err(Error::invalid(format!(
                "{perm:?} is not a permutation of {} atoms",
                self.len()
            )));
        }
        FourAtomGroup::new(
            perm.iter().map(|&i| self.positions[i]).collect(),
            perm.iter().map(|&i| self.mj_positive[i]).collect(),
        )
    }
}

/// Edge of the cube holding 100 atoms at density `rho`, µm.
pub fn cube_edge(rho: Density) -> f64 {
    (100.0 / rho.as_per_um3()).cbrt()
}

/// Random-gas group: 99 atoms uniform in a cube of edge `(100/ρ)^(1/3)`
/// plus one at its centre; the group is the central atom and its three
/// nearest neighbours, each with a random m_j sign.
pub fn build_group<R: Rng + ?Sized>(rho: Density, rng: &mut R) -> FourAtomGroup {
    let edge = cube_edge(rho);
    let centre = [0.5 * edge; 3];
    let mut others: Vec<(f64, [f64; 3])> = (0..CUBE_ATOMS)
        .map(|_| {
            let p = uniform_cube(edge, rng);
            let d2 = (0..3).map(|k| (p[k] - centre[k]).powi(2)).sum::<f64>();
            (d2, p)
        })
        .collect();
    others.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut positions = vec![centre];
    positions.extend(others.iter().take(3).map(|x| x.1));
    let mj_positive = (0..4).map(|_| rng.random::<bool>()).collect();
    FourAtomGroup {
        positions,
        mj_positive,
    }
}
