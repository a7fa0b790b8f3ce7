use std::collections::{BTreeSet, HashMap};

/// Single-atom level. Each atom keeps the sign of its initial m_j, so the
/// sign is a property of the atom, not of the state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Level {
    P,
    S,
    SPrime,
}

pub type ProductState = Vec<Level>;

/// Product states reachable from all-p under pp ↔ ss' conversion and
/// p ↔ s, p ↔ s' exchange between any two atoms.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupBasis {
    states: Vec<ProductState>,
    index: HashMap<ProductState, usize>,
}

fn neighbours(state: &[Level]) -> Vec<ProductState> {
    use Level::*;
    let mut out = Vec::new();
    let n = state.len();
    for a in 0..n {
        for b in a + 1..n {
            let mut push = |la, lb| {
                let mut s = state.to_vec();
                s[a] = la;
                s[b] = lb;
                out.push(s);
            };
            match (state[a], state[b]) {
                (P, P) => {
                    push(S, SPrime);
                    push(SPrime, S);
                }
                (S, SPrime) | (SPrime, S) => push(P, P),
                (P, x) if x != P => push(x, P),
                (x, P) if x != P => push(P, x),
                _ => {}
            }
        }
    }
    out
}

impl GroupBasis {
    /// Closure from the all-p state by fixed-point iteration. States are
    /// ordered by (number of conversions, lexicographic labels), so index 0
    /// is all-p.
    pub fn enumerate(atoms: usize) -> Self {
        let start = vec![Level::P; atoms];
        let mut found: BTreeSet<(usize, ProductState)> = BTreeSet::new();
        found.insert((0, start.clone()));
        let mut frontier = vec![start];
        while let Some(s) = frontier.pop() {
            for t in neighbours(&s) {
                let key = (count(&t, Level::S), t.clone());
                if found.insert(key) {
                    frontier.push(t);
                }
            }
        }
        let states: Vec<ProductState> = found.into_iter().map(|(_, s)| s).collect();
        let index = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        GroupBasis { states, index }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn atoms(&self) -> usize {
        self.states.first().map_or(0, |s| s.len())
    }

    pub fn states(&self) -> &[ProductState] {
        &self.states
    }

    pub fn index_of(&self, state: &[Level]) -> Option<usize> {
        self.index.get(state).copied()
    }

    /// Every coupling out of every basis state lands in the basis.
    pub fn is_closed(&self) -> bool {
        self.states
            .iter()
            .all(|s| neighbours(s).iter().all(|t| self.index.contains_key(t)))
    }
}

pub fn count(state: &[Level], level: Level) -> usize {
    state.iter().filter(|&&l| l == level).count()
}
