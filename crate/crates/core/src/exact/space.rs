use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::path::{binomial, LatticePath};
use crate::perm::{Comparison, HeightField, Permutation};

/// Default limit on the number of enumerated states.
pub const DEFAULT_STATE_CAP: u128 = 5_000_000;

/// Which chain a state space belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Model {
    /// Adjacent-transposition shuffle on `S_N`.
    Shuffle { n: usize },
    /// Exclusion process with `k` particles on `N` sites.
    Exclusion { n: usize, k: usize },
}

impl Model {
    pub fn shuffle(n: usize) -> Result<Model> {
        check_range("N", n as i64, 2, 34)?;
        Ok(Model::Shuffle { n })
    }

    pub fn exclusion(n: usize, k: usize) -> Result<Model> {
        check_range("N", n as i64, 2, 64)?;
        check_range("k", k as i64, 1, n as i64 - 1)?;
        Ok(Model::Exclusion { n, k })
    }

    pub fn n(&self) -> usize {
        match *self {
            Model::Shuffle { n } | Model::Exclusion { n, .. } => n,
        }
    }

    pub fn k(&self) -> Option<usize> {
        match *self {
            Model::Shuffle { .. } => None,
            Model::Exclusion { k, .. } => Some(k),
        }
    }

    /// `N!` or `C(N, k)`.
    pub fn size(&self) -> u128 {
        match *self {
            Model::Shuffle { n } => (1..=n as u128).product(),
            Model::Exclusion { n, k } => binomial(n, k),
        }
    }

    /// Short tag used in reports: `at` or `sep`.
    pub fn tag(&self) -> &'static str {
        match self {
            Model::Shuffle { .. } => "at",
            Model::Exclusion { .. } => "sep",
        }
    }
}

impl fmt::Display for Model {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Model::Shuffle { n } => write!(f, "AT(N={n})"),
            Model::Exclusion { n, k } => write!(f, "SEP(N={n}, k={k})"),
        }
    }
}

/// Dense indexing of a state space together with the table of adjacent
/// swaps. Permutations are ranked lexicographically (identity first,
/// reversal last); configurations are ranked by the numeric value of their
/// occupancy bitmask (`∧` first, `∨` last).
pub struct StateSpace {
    model: Model,
    size: usize,
    sites: usize,
    neighbors: Vec<u32>,
    masks: Vec<u64>,
}

pub fn enumerate(model: Model, cap: u128) -> Result<StateSpace> {
    let size = model.size();
    if size > cap {
        return Err(Error::CapExceeded { size, cap });
    }
    if size > u32::MAX as u128 {
        return Err(Error::CapExceeded {
            size,
            cap: u32::MAX as u128,
        });
    }
    let size = size as usize;
    let n = model.n();
    let sites = n - 1;
    let mut neighbors = vec![0u32; size * sites];
    let mut masks = Vec::new();
    match model {
        Model::Shuffle { n } => {
            let fact = factorials(n);
            neighbors
                .par_chunks_mut(sites)
                .enumerate()
                .for_each(|(rank, row)| {
                    let lehmer = lehmer_of_rank(rank as u64, n, &fact);
                    let perm = perm_of_lehmer(&lehmer);
                    for i in 0..sites {
                        let (a, b) = (perm[i], perm[i + 1]);
                        let new_i = lehmer[i + 1] + u64::from(a < b);
                        let new_next = lehmer[i] - u64::from(b < a);
                        let delta = (new_i as i128 - lehmer[i] as i128) * fact[n - 1 - i] as i128
                            + (new_next as i128 - lehmer[i + 1] as i128) * fact[n - 2 - i] as i128;
                        row[i] = (rank as i128 + delta) as u32;
                    }
                });
        }
        Model::Exclusion { n, k } => {
            masks.reserve(size);
            let mut m: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
            for _ in 0..size {
                masks.push(m);
                if m != 0 {
                    let c = m & m.wrapping_neg();
                    let r = m.wrapping_add(c);
                    m = (((r ^ m) >> 2) / c) | r;
                }
            }
            let choose = binomial_table(n);
            neighbors
                .par_chunks_mut(sites)
                .enumerate()
                .for_each(|(rank, row)| {
                    let mask = masks[rank];
                    for p in 0..sites {
                        let here = mask >> p & 1;
                        let next = mask >> (p + 1) & 1;
                        let below = (mask & ((1u64 << p) - 1)).count_ones() as usize;
                        row[p] = match (here, next) {
                            (1, 0) => rank as u64 + choose[p][below],
                            (0, 1) => rank as u64 - choose[p][below],
                            _ => rank as u64,
                        } as u32;
                    }
                });
        }
    }
    Ok(StateSpace {
        model,
        size,
        sites,
        neighbors,
        masks,
    })
}

fn factorials(n: usize) -> Vec<u64> {
    let mut f = vec![1u64; n + 1];
    for i in 1..=n {
        f[i] = f[i - 1] * i as u64;
    }
    f
}

fn binomial_table(n: usize) -> Vec<Vec<u64>> {
    (0..=n)
        .map(|a| (0..=n).map(|b| binomial(a, b) as u64).collect())
        .collect()
}

fn lehmer_of_rank(mut rank: u64, n: usize, fact: &[u64]) -> Vec<u64> {
    let mut code = vec![0u64; n];
    for (i, slot) in code.iter_mut().enumerate() {
        let f = fact[n - 1 - i];
        *slot = rank / f;
        rank %= f;
    }
    code
}

/// 1-based labels from a Lehmer code.
fn perm_of_lehmer(code: &[u64]) -> Vec<u32> {
    let mut free: Vec<u32> = (1..=code.len() as u32).collect();
    code.iter().map(|&c| free.remove(c as usize)).collect()
}

impl StateSpace {
    pub fn model(&self) -> Model {
        self.model
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn n(&self) -> usize {
        self.model.n()
    }

    /// Index reached from state `i` by exchanging positions `site`, `site + 1`.
    #[inline]
    pub fn neighbor(&self, i: usize, site: usize) -> usize {
        self.neighbors[i * self.sites + site - 1] as usize
    }

    pub(crate) fn neighbor_rows(&self) -> &[u32] {
        &self.neighbors
    }

    /// Index of the maximal state (identity or `∧`).
    pub fn top_index(&self) -> usize {
        0
    }

    /// Index of the minimal state (reversal or `∨`).
    pub fn bottom_index(&self) -> usize {
        self.size - 1
    }

    pub fn perm(&self, i: usize) -> Result<Permutation> {
        match self.model {
            Model::Shuffle { n } => {
                let fact = factorials(n);
                Ok(Permutation::from_raw(perm_of_lehmer(&lehmer_of_rank(
                    i as u64, n, &fact,
                ))))
            }
            _ => Err(Error::ModelMismatch(format!(
                "{} has no permutations",
                self.model
            ))),
        }
    }

    pub fn perm_index(&self, p: &Permutation) -> Result<usize> {
        match self.model {
            Model::Shuffle { n } if n == p.n() => {
                let fact = factorials(n);
                let cards = p.raw();
                let mut rank = 0u64;
                for i in 0..n {
                    let smaller = cards[i + 1..].iter().filter(|&&c| c < cards[i]).count();
                    rank += smaller as u64 * fact[n - 1 - i];
                }
                Ok(rank as usize)
            }
            _ => Err(Error::ModelMismatch(format!(
                "{p} is not a state of {}",
                self.model
            ))),
        }
    }

    pub fn path(&self, i: usize) -> Result<LatticePath> {
        match self.model {
            Model::Exclusion { n, .. } => LatticePath::from_mask(n, self.masks[i]),
            _ => Err(Error::ModelMismatch(format!("{} has no paths", self.model))),
        }
    }

    pub fn mask(&self, i: usize) -> u64 {
        self.masks[i]
    }

    pub fn path_index(&self, path: &LatticePath) -> Result<usize> {
        match self.model {
            Model::Exclusion { n, k } if n == path.n() && k == path.k() => {
                let mask = path.mask();
                let mut rank = 0u128;
                let mut seen = 0;
                for p in 0..n {
                    if mask >> p & 1 == 1 {
                        seen += 1;
                        rank += binomial(p, seen);
                    }
                }
                Ok(rank as usize)
            }
            _ => Err(Error::ModelMismatch(format!(
                "{path} is not a state of {}",
                self.model
            ))),
        }
    }

    /// Human-readable state: one-line notation or occupancy string.
    pub fn label(&self, i: usize) -> String {
        match self.model {
            Model::Shuffle { .. } => self.perm(i).map(|p| p.to_string()).unwrap_or_default(),
            Model::Exclusion { .. } => self.path(i).map(|p| p.to_string()).unwrap_or_default(),
        }
    }

    /// Height-field-like coordinates of a state: the full height field for
    /// permutations, the path for configurations. Pointwise order on these
    /// vectors is the partial order on states.
    pub fn heights(&self, i: usize) -> Vec<i64> {
        match self.model {
            Model::Shuffle { n } => {
                let hf: HeightField = self.perm(i).expect("shuffle").height_field();
                let mut out = Vec::with_capacity((n + 1) * (n + 1));
                for x in 0..=n {
                    for y in 0..=n {
                        out.push(hf.scaled(x, y));
                    }
                }
                out
            }
            Model::Exclusion { .. } => self.path(i).expect("exclusion").scaled_values().to_vec(),
        }
    }

    /// States directly above `i`: one sorting move away. For permutations
    /// these fix one inversion by a transposition of any two positions; for
    /// configurations they move one particle left. The order is the
    /// transitive closure of these moves.
    pub fn up_moves(&self, i: usize) -> Vec<usize> {
        match self.model {
            Model::Shuffle { n } => {
                let p = self.perm(i).expect("shuffle");
                let cards = p.raw();
                let mut out = Vec::new();
                for a in 0..n {
                    for b in a + 1..n {
                        if cards[a] > cards[b] {
                            let mut q = p.clone();
                            q.raw_mut().swap(a, b);
                            out.push(self.perm_index(&q).expect("same size"));
                        }
                    }
                }
                out
            }
            Model::Exclusion { .. } => {
                let mask = self.masks[i];
                (0..self.sites)
                    .filter(|&p| mask >> p & 1 == 0 && mask >> (p + 1) & 1 == 1)
                    .map(|p| self.neighbor(i, p + 1))
                    .collect()
            }
        }
    }

    /// Compares states `i` and `j` in the partial order.
    pub fn compare(&self, i: usize, j: usize) -> Comparison {
        let (a, b) = (self.heights(i), self.heights(j));
        let below = a.iter().zip(&b).any(|(x, y)| x < y);
        let above = a.iter().zip(&b).any(|(x, y)| x > y);
        Comparison::from_flags(below, above)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_and_refusal() {
        assert_eq!(
            enumerate(Model::shuffle(3).unwrap(), DEFAULT_STATE_CAP)
                .unwrap()
                .size(),
            6
        );
        assert_eq!(
            enumerate(Model::exclusion(4, 2).unwrap(), DEFAULT_STATE_CAP)
                .unwrap()
                .size(),
            6
        );
        match enumerate(Model::shuffle(13).unwrap(), DEFAULT_STATE_CAP) {
            Err(Error::CapExceeded { size, cap }) => {
                assert_eq!(size, 6_227_020_800);
                assert_eq!(cap, DEFAULT_STATE_CAP);
            }
            _ => panic!("expected a cap refusal"),
        }
    }

    #[test]
    fn shuffle_ranks_round_trip() {
        let s = enumerate(Model::shuffle(5).unwrap(), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(s.perm(0).unwrap(), Permutation::identity(5));
        assert_eq!(s.perm(119).unwrap(), Permutation::reversal(5));
        for i in 0..s.size() {
            let p = s.perm(i).unwrap();
            assert_eq!(s.perm_index(&p).unwrap(), i);
            if i > 0 {
                assert!(s.perm(i - 1).unwrap() < p);
            }
            for site in 1..5 {
                let q =
                    crate::dynamics::apply_update(&p, site, p.at(site) > p.at(site + 1)).unwrap();
                let q = if q == p {
                    crate::dynamics::apply_update(&p, site, p.at(site) < p.at(site + 1)).unwrap()
                } else {
                    q
                };
                assert_eq!(s.neighbor(i, site), s.perm_index(&q).unwrap());
            }
        }
    }

    #[test]
    fn exclusion_ranks_round_trip() {
        let s = enumerate(Model::exclusion(7, 3).unwrap(), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(s.size(), 35);
        assert_eq!(s.label(0), "1110000");
        assert_eq!(s.label(34), "0000111");
        for i in 0..s.size() {
            let path = s.path(i).unwrap();
            assert_eq!(s.path_index(&path).unwrap(), i);
            for site in 1..7 {
                let mut occ = path.occupancy();
                occ.swap(site - 1, site);
                let q = LatticePath::from_occupancy(&occ).unwrap();
                assert_eq!(s.neighbor(i, site), s.path_index(&q).unwrap());
            }
        }
    }

    #[test]
    fn up_moves_generate_the_order() {
        for model in [
            Model::shuffle(4).unwrap(),
            Model::exclusion(6, 3).unwrap(),
            Model::exclusion(5, 2).unwrap(),
        ] {
            let s = enumerate(model, DEFAULT_STATE_CAP).unwrap();
            let size = s.size();
            let mut reach = vec![vec![false; size]; size];
            for (i, row) in reach.iter_mut().enumerate() {
                row[i] = true;
                for j in s.up_moves(i) {
                    assert_eq!(s.compare(i, j), Comparison::Less);
                    row[j] = true;
                }
            }
            for m in 0..size {
                for i in 0..size {
                    if reach[i][m] {
                        for j in 0..size {
                            if reach[m][j] {
                                reach[i][j] = true;
                            }
                        }
                    }
                }
            }
            for i in 0..size {
                for j in 0..size {
                    assert_eq!(reach[i][j], s.compare(i, j).is_le(), "{model} {i} {j}");
                }
            }
        }
    }
}
