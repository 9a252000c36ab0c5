//! Permutations of a deck of `N` cards, their height fields and the
//! partial order those height fields induce.
//!
//! Positions and labels are 1-based in every public method and 0-based in
//! storage. Heights are stored multiplied by `N` so every comparison is an
//! exact integer comparison.
//!
//! Order convention: `a ≤ b` iff `σ̃_a(x, y) ≤ σ̃_b(x, y)` at every `(x, y)`.
//! The identity has the largest height field and is the maximal element; the
//! reversal is minimal. Sorting adjacent cards moves a permutation up.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::path::LatticePath;

/// An arrangement of `N` labeled cards: `at(x)` is the label at position `x`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Permutation {
    map: Vec<u32>,
}

/// Result of comparing two height fields pointwise.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Comparison {
    Equal,
    /// `a < b`: every height of `a` is at most the matching height of `b`.
    Less,
    /// `a > b`.
    Greater,
    Incomparable,
}

impl Comparison {
    /// True for `Equal` and `Less`.
    pub fn is_le(self) -> bool {
        matches!(self, Comparison::Equal | Comparison::Less)
    }

    /// True for `Equal` and `Greater`.
    pub fn is_ge(self) -> bool {
        matches!(self, Comparison::Equal | Comparison::Greater)
    }

    pub(crate) fn from_flags(some_below: bool, some_above: bool) -> Self {
        match (some_below, some_above) {
            (false, false) => Comparison::Equal,
            (true, false) => Comparison::Less,
            (false, true) => Comparison::Greater,
            (true, true) => Comparison::Incomparable,
        }
    }
}

impl Permutation {
    /// Builds a permutation from 1-based labels listed by position.
    pub fn new(labels: Vec<usize>) -> Result<Self> {
        let n = labels.len();
        if n < 1 {
            return Err(Error::InvalidPermutation("empty deck".into()));
        }
        let mut seen = vec![false; n];
        for &v in &labels {
            if v == 0 || v > n || seen[v - 1] {
                return Err(Error::InvalidPermutation(format!(
                    "{labels:?} is not a bijection of 1..={n}"
                )));
            }
            seen[v - 1] = true;
        }
        Ok(Permutation {
            map: labels.into_iter().map(|v| v as u32).collect(),
        })
    }

    pub(crate) fn from_raw(map: Vec<u32>) -> Self {
        debug_assert!(Permutation::new(map.iter().map(|&v| v as usize).collect()).is_ok());
        Permutation { map }
    }

    pub fn identity(n: usize) -> Self {
        Permutation {
            map: (1..=n as u32).collect(),
        }
    }

    /// The reversal `σ_min(x) = N + 1 − x`, the minimal element.
    pub fn reversal(n: usize) -> Self {
        Permutation {
            map: (1..=n as u32).rev().collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.map.len()
    }

    /// Label at 1-based position `x`.
    pub fn at(&self, x: usize) -> usize {
        self.map[x - 1] as usize
    }

    /// Labels in position order.
    pub fn labels(&self) -> Vec<usize> {
        self.map.iter().map(|&v| v as usize).collect()
    }

    pub(crate) fn raw(&self) -> &[u32] {
        &self.map
    }

    pub(crate) fn raw_mut(&mut self) -> &mut [u32] {
        &mut self.map
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0u32; self.n()];
        for (x, &v) in self.map.iter().enumerate() {
            inv[v as usize - 1] = x as u32 + 1;
        }
        Permutation { map: inv }
    }

    /// Relabels the cards: returns `g ∘ σ`, whose position `x` holds `g(σ(x))`.
    pub fn relabel(&self, g: &Permutation) -> Result<Permutation> {
        same_size(self.n(), g.n())?;
        Ok(Permutation {
            map: self.map.iter().map(|&v| g.map[v as usize - 1]).collect(),
        })
    }

    /// The conjugate `σ_min ∘ σ ∘ σ_min`: positions and labels both reflected.
    pub fn reflect(&self) -> Permutation {
        let n = self.n() as u32;
        Permutation {
            map: self.map.iter().rev().map(|&v| n + 1 - v).collect(),
        }
    }

    /// Number of inversions.
    pub fn inversions(&self) -> usize {
        let mut count = 0;
        for i in 0..self.map.len() {
            for j in i + 1..self.map.len() {
                if self.map[i] > self.map[j] {
                    count += 1;
                }
            }
        }
        count
    }

    pub fn height_field(&self) -> HeightField {
        let n = self.n();
        let w = n + 1;
        let mut counts = vec![0i64; w * w];
        for x in 1..=n {
            let label = self.map[x - 1] as usize;
            for y in 0..=n {
                counts[x * w + y] = counts[(x - 1) * w + y] + i64::from(y >= label);
            }
        }
        let nn = n as i64;
        for x in 0..=n {
            for y in 0..=n {
                counts[x * w + y] = nn * counts[x * w + y] - (x * y) as i64;
            }
        }
        HeightField { n, values: counts }
    }

    /// Compares two permutations through their height fields.
    pub fn compare(&self, other: &Permutation) -> Result<Comparison> {
        same_size(self.n(), other.n())?;
        Ok(self.height_field().compare(&other.height_field()))
    }

    /// `self ≤ other`, i.e. `σ̃_self ≤ σ̃_other` pointwise.
    pub fn leq(&self, other: &Permutation) -> Result<bool> {
        Ok(self.compare(other)?.is_le())
    }

    pub fn skeleton(&self, bp: &BlockPartition) -> Result<SkeletonGrid> {
        same_size(self.n(), bp.n())?;
        Ok(self.height_field().skeleton(bp))
    }

    pub fn semi_skeleton(&self, bp: &BlockPartition) -> Result<SemiSkeleton> {
        same_size(self.n(), bp.n())?;
        let hf = self.height_field();
        let k = bp.k_blocks();
        let mut values = Vec::with_capacity((self.n() + 1) * (k + 1));
        for x in 0..=self.n() {
            for j in 0..=k {
                values.push(hf.scaled(x, bp.cut(j)));
            }
        }
        Ok(SemiSkeleton {
            n: self.n(),
            k_blocks: k,
            values,
        })
    }

    /// Sorts the labels increasingly inside each block of positions.
    pub fn block_sort(&self, bp: &BlockPartition) -> Result<Permutation> {
        same_size(self.n(), bp.n())?;
        let mut map = self.map.clone();
        for i in 1..=bp.k_blocks() {
            map[bp.cut(i - 1)..bp.cut(i)].sort_unstable();
        }
        Ok(Permutation { map })
    }

    /// True when every label block `{x_{i-1}+1, …, x_i}` is mapped onto itself.
    pub fn preserves_blocks(&self, bp: &BlockPartition) -> Result<bool> {
        same_size(self.n(), bp.n())?;
        let blocks = bp.block_of_each();
        Ok(self
            .map
            .iter()
            .enumerate()
            .all(|(x, &v)| blocks[x] == blocks[v as usize - 1]))
    }

    /// Projection onto the exclusion process: a particle sits at `x` iff
    /// `σ(x) ≤ k`.
    pub fn to_exclusion(&self, k: usize) -> Result<LatticePath> {
        check_range("k", k as i64, 1, self.n() as i64 - 1)?;
        let occ: Vec<bool> = self.map.iter().map(|&v| v as usize <= k).collect();
        LatticePath::from_occupancy(&occ)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.map.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

impl FromStr for Permutation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let labels = s
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|_| Error::Parse(format!("bad label {t:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Permutation::new(labels)
    }
}

pub(crate) fn same_size(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::SizeMismatch { left: a, right: b });
    }
    Ok(())
}

/// `N·σ̃(x, y)` on the grid `{0, …, N}²`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeightField {
    n: usize,
    values: Vec<i64>,
}

impl HeightField {
    pub fn n(&self) -> usize {
        self.n
    }

    /// `N·σ̃(x, y)`.
    pub fn scaled(&self, x: usize, y: usize) -> i64 {
        self.values[x * (self.n + 1) + y]
    }

    /// `σ̃(x, y)` as a float.
    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.scaled(x, y) as f64 / self.n as f64
    }

    /// Pointwise comparison; `Less` means `self` lies below `other`.
    pub fn compare(&self, other: &HeightField) -> Comparison {
        let mut below = false;
        let mut above = false;
        for (a, b) in self.values.iter().zip(&other.values) {
            below |= a < b;
            above |= a > b;
            if below && above {
                break;
            }
        }
        Comparison::from_flags(below, above)
    }

    pub fn skeleton(&self, bp: &BlockPartition) -> SkeletonGrid {
        let k = bp.k_blocks();
        let mut values = Vec::with_capacity((k + 1) * (k + 1));
        for i in 0..=k {
            for j in 0..=k {
                values.push(self.scaled(bp.cut(i), bp.cut(j)));
            }
        }
        SkeletonGrid {
            n: self.n,
            k_blocks: k,
            values,
        }
    }

    /// CSV grid: one row per `x`, one column per `y`, entries `N·σ̃(x, y)`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x");
        for y in 0..=self.n {
            out.push_str(&format!(",{y}"));
        }
        out.push('\n');
        for x in 0..=self.n {
            out.push_str(&x.to_string());
            for y in 0..=self.n {
                out.push_str(&format!(",{}", self.scaled(x, y)));
            }
            out.push('\n');
        }
        out
    }
}

/// Cuts `x_i = ⌈iN/K⌉` splitting `{1, …, N}` into `K` blocks.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockPartition {
    n: usize,
    cuts: Vec<usize>,
}

impl BlockPartition {
    pub fn new(n: usize, k_blocks: usize) -> Result<Self> {
        check_range("N", n as i64, 1, i64::MAX)?;
        check_range("K", k_blocks as i64, 1, n as i64)?;
        let cuts = (0..=k_blocks).map(|i| (i * n).div_ceil(k_blocks)).collect();
        Ok(BlockPartition { n, cuts })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_blocks(&self) -> usize {
        self.cuts.len() - 1
    }

    pub fn cut(&self, i: usize) -> usize {
        self.cuts[i]
    }

    pub fn cuts(&self) -> &[usize] {
        &self.cuts
    }

    /// Block index (1-based) of each 0-based coordinate.
    pub(crate) fn block_of_each(&self) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for i in 1..self.cuts.len() {
            for slot in &mut out[self.cuts[i - 1]..self.cuts[i]] {
                *slot = i;
            }
        }
        out
    }
}

/// `N·σ̄(i, j) = N·σ̃(x_i, x_j)` on `{0, …, K}²`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SkeletonGrid {
    n: usize,
    k_blocks: usize,
    values: Vec<i64>,
}

impl SkeletonGrid {
    pub fn k_blocks(&self) -> usize {
        self.k_blocks
    }

    pub fn scaled(&self, i: usize, j: usize) -> i64 {
        self.values[i * (self.k_blocks + 1) + j]
    }

    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.scaled(i, j) as f64 / self.n as f64
    }

    /// `N·v` where `v = Σ_{i,j=1}^{K−1} σ̄(i, j)`.
    pub fn volume_scaled(&self) -> i64 {
        let k = self.k_blocks;
        let mut total = 0;
        for i in 1..k {
            for j in 1..k {
                total += self.scaled(i, j);
            }
        }
        total
    }

    pub fn volume(&self) -> f64 {
        self.volume_scaled() as f64 / self.n as f64
    }

    pub fn compare(&self, other: &SkeletonGrid) -> Comparison {
        let mut below = false;
        let mut above = false;
        for (a, b) in self.values.iter().zip(&other.values) {
            below |= a < b;
            above |= a > b;
        }
        Comparison::from_flags(below, above)
    }

    /// Largest semi-skeleton compatible with this skeleton. For `x` in block
    /// `i`, `N·σ̂(x, j)` is the smaller of the two straight lines leaving the
    /// skeleton values at `x_{i−1}` and `x_i` with slopes `N − x_j` and `−x_j`.
    pub fn maximal_semi_skeleton(&self, bp: &BlockPartition) -> Result<SemiSkeleton> {
        same_size(self.k_blocks, bp.k_blocks())?;
        same_size(self.n, bp.n())?;
        let n = self.n as i64;
        let k = self.k_blocks;
        let mut values = vec![0i64; (self.n + 1) * (k + 1)];
        for i in 1..=k {
            let (lo, hi) = (bp.cut(i - 1), bp.cut(i));
            for x in lo..=hi {
                for j in 0..=k {
                    let xj = bp.cut(j) as i64;
                    let rising = (n - xj) * (x - lo) as i64 + self.scaled(i - 1, j);
                    let falling = xj * (hi - x) as i64 + self.scaled(i, j);
                    values[x * (k + 1) + j] = rising.min(falling);
                }
            }
        }
        Ok(SemiSkeleton {
            n: self.n,
            k_blocks: k,
            values,
        })
    }
}

/// `N·σ̂(x, j) = N·σ̃(x, x_j)` on `{0, …, N} × {0, …, K}`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SemiSkeleton {
    n: usize,
    k_blocks: usize,
    values: Vec<i64>,
}

impl SemiSkeleton {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k_blocks(&self) -> usize {
        self.k_blocks
    }

    pub fn scaled(&self, x: usize, j: usize) -> i64 {
        self.values[x * (self.k_blocks + 1) + j]
    }

    pub fn compare(&self, other: &SemiSkeleton) -> Comparison {
        let mut below = false;
        let mut above = false;
        for (a, b) in self.values.iter().zip(&other.values) {
            below |= a < b;
            above |= a > b;
        }
        Comparison::from_flags(below, above)
    }
}
