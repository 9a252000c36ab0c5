//! Exclusion-process configurations as centered lattice paths.
//!
//! A configuration of `k` particles on sites `1..=N` is stored through its
//! path `η(x) = Σ_{z≤x} γ(z) − xk/N`, multiplied by `N`. Paths are ordered
//! pointwise; the top path `∧` packs the particles to the left.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::perm::{BlockPartition, Comparison};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticePath {
    n: usize,
    k: usize,
    values: Vec<i64>,
}

impl LatticePath {
    /// Path of the occupancy vector `γ(1), …, γ(N)`.
    pub fn from_occupancy(occupied: &[bool]) -> Result<Self> {
        let n = occupied.len();
        if n == 0 {
            return Err(Error::InvalidPath("no sites".into()));
        }
        let k = occupied.iter().filter(|&&b| b).count();
        let (up, down) = ((n - k) as i64, -(k as i64));
        let mut values = Vec::with_capacity(n + 1);
        let mut h = 0i64;
        values.push(0);
        for &b in occupied {
            h += if b { up } else { down };
            values.push(h);
        }
        Ok(LatticePath { n, k, values })
    }

    /// Path from `N·η(0..=N)`, validated.
    pub fn from_scaled(n: usize, k: usize, values: Vec<i64>) -> Result<Self> {
        check_range("k", k as i64, 0, n as i64)?;
        if values.len() != n + 1 || values[0] != 0 || values[n] != 0 {
            return Err(Error::InvalidPath(format!(
                "{values:?} is not pinned to zero at both ends of 0..={n}"
            )));
        }
        let (up, down) = ((n - k) as i64, -(k as i64));
        let mut ups = 0;
        for w in values.windows(2) {
            let step = w[1] - w[0];
            if step == up {
                ups += 1;
            } else if step != down {
                return Err(Error::InvalidPath(format!(
                    "increment {step} in {values:?}"
                )));
            }
        }
        if ups != k {
            return Err(Error::InvalidPath(format!("{ups} particles, expected {k}")));
        }
        Ok(LatticePath { n, k, values })
    }

    /// Path of a bitmask where bit `p − 1` marks a particle at site `p`.
    pub fn from_mask(n: usize, mask: u64) -> Result<Self> {
        check_range("N", n as i64, 1, 64)?;
        if n < 64 && mask >> n != 0 {
            return Err(Error::InvalidPath(format!(
                "mask {mask:#x} has bits beyond site {n}"
            )));
        }
        let occ: Vec<bool> = (0..n).map(|p| mask >> p & 1 == 1).collect();
        LatticePath::from_occupancy(&occ)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// `N·η(x)`.
    pub fn scaled(&self, x: usize) -> i64 {
        self.values[x]
    }

    pub fn scaled_values(&self) -> &[i64] {
        &self.values
    }

    /// `η(x)` as a float.
    pub fn value(&self, x: usize) -> f64 {
        self.values[x] as f64 / self.n as f64
    }

    /// `γ(x)` for 1-based site `x`.
    pub fn occupied(&self, x: usize) -> bool {
        self.values[x] > self.values[x - 1]
    }

    pub fn occupancy(&self) -> Vec<bool> {
        (1..=self.n).map(|x| self.occupied(x)).collect()
    }

    pub fn mask(&self) -> u64 {
        debug_assert!(self.n <= 64);
        (1..=self.n)
            .filter(|&x| self.occupied(x))
            .fold(0u64, |m, x| m | 1 << (x - 1))
    }

    /// `η` has a local maximum at `x`: a particle at `x`, a hole at `x + 1`.
    pub fn is_local_max(&self, x: usize) -> bool {
        self.occupied(x) && !self.occupied(x + 1)
    }

    /// `η` has a local minimum at `x`: a hole at `x`, a particle at `x + 1`.
    pub fn is_local_min(&self, x: usize) -> bool {
        !self.occupied(x) && self.occupied(x + 1)
    }

    /// Exchanges the contents of sites `x` and `x + 1`, turning a corner of
    /// the path at `x` into the opposite corner.
    pub fn flip(&mut self, x: usize) {
        let n = self.n as i64;
        if self.is_local_max(x) {
            self.values[x] -= n;
        } else if self.is_local_min(x) {
            self.values[x] += n;
        }
    }

    /// Moves the corner at `x` up (`up = true`) or down, when possible.
    /// Returns whether the path changed.
    pub fn push(&mut self, x: usize, up: bool) -> bool {
        let movable = if up {
            self.is_local_min(x)
        } else {
            self.is_local_max(x)
        };
        if movable {
            self.flip(x);
        }
        movable
    }

    pub fn compare(&self, other: &LatticePath) -> Result<Comparison> {
        same_params(self, other)?;
        let below = self.values.iter().zip(&other.values).any(|(a, b)| a < b);
        let above = self.values.iter().zip(&other.values).any(|(a, b)| a > b);
        Ok(Comparison::from_flags(below, above))
    }

    /// `self ≤ other` pointwise.
    pub fn leq(&self, other: &LatticePath) -> Result<bool> {
        Ok(self.compare(other)?.is_le())
    }

    /// `Σ_x N·η(x)`, the signed area under the path times `N`.
    pub fn area_scaled(&self) -> i64 {
        self.values.iter().sum()
    }

    pub fn max_abs_scaled(&self) -> i64 {
        self.values.iter().map(|v| v.abs()).max().unwrap_or(0)
    }
}

impl fmt::Display for LatticePath {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in 1..=self.n {
            f.write_str(if self.occupied(x) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for LatticePath {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let occ = s
            .trim()
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::Parse(format!("bad occupancy character {c:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        LatticePath::from_occupancy(&occ)
    }
}

fn same_params(a: &LatticePath, b: &LatticePath) -> Result<()> {
    if a.n != b.n || a.k != b.k {
        return Err(Error::InvalidParameter(format!(
            "paths with (N, k) = ({}, {}) and ({}, {})",
            a.n, a.k, b.n, b.k
        )));
    }
    Ok(())
}

fn check_nk(n: usize, k: usize) -> Result<()> {
    check_range("N", n as i64, 2, i64::MAX)?;
    check_range("k", k as i64, 1, n as i64 - 1)
}

/// The top path `∧` (particles on the left) and bottom path `∨`.
pub fn extremal_paths(n: usize, k: usize) -> Result<(LatticePath, LatticePath)> {
    check_nk(n, k)?;
    let top: Vec<bool> = (0..n).map(|p| p < k).collect();
    let bottom: Vec<bool> = (0..n).map(|p| p >= n - k).collect();
    Ok((
        LatticePath::from_occupancy(&top)?,
        LatticePath::from_occupancy(&bottom)?,
    ))
}

/// Scaled top height `N·∧(x) = min((N−k)x, k(N−x))`.
pub fn top_scaled(n: usize, k: usize, x: usize) -> i64 {
    (((n - k) * x).min(k * (n - x))) as i64
}

/// Scaled bottom height `N·∨(x) = max(−kx, (N−k)(x−N))`.
pub fn bottom_scaled(n: usize, k: usize, x: usize) -> i64 {
    -((k * x).min((n - k) * (n - x)) as i64)
}

pub fn lattice_min(a: &LatticePath, b: &LatticePath) -> Result<LatticePath> {
    same_params(a, b)?;
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| *x.min(y))
        .collect();
    LatticePath::from_scaled(a.n, a.k, values)
}

pub fn lattice_max(a: &LatticePath, b: &LatticePath) -> Result<LatticePath> {
    same_params(a, b)?;
    let values = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| *x.max(y))
        .collect();
    LatticePath::from_scaled(a.n, a.k, values)
}

/// Two paths held in order, `top ≥ bottom`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathPair {
    top: LatticePath,
    bottom: LatticePath,
}

impl PathPair {
    pub fn new(top: LatticePath, bottom: LatticePath) -> Result<Self> {
        same_params(&top, &bottom)?;
        if let Some(x) = (0..=top.n).find(|&x| top.values[x] < bottom.values[x]) {
            return Err(Error::OrderViolation { x });
        }
        Ok(PathPair { top, bottom })
    }

    pub fn extremal(n: usize, k: usize) -> Result<Self> {
        let (top, bottom) = extremal_paths(n, k)?;
        Ok(PathPair { top, bottom })
    }

    pub fn top(&self) -> &LatticePath {
        &self.top
    }

    pub fn bottom(&self) -> &LatticePath {
        &self.bottom
    }

    pub(crate) fn parts_mut(&mut self) -> (&mut LatticePath, &mut LatticePath) {
        (&mut self.top, &mut self.bottom)
    }

    pub fn merged(&self) -> bool {
        self.top == self.bottom
    }

    /// `Σ_x (η^top − η^bottom)(x)` in units where one corner flip moves it by 1.
    pub fn area(&self) -> i64 {
        (self.top.area_scaled() - self.bottom.area_scaled()) / self.top.n as i64
    }
}

/// `C(n, r)` exactly.
pub fn binomial(n: usize, r: usize) -> u128 {
    if r > n {
        return 0;
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc
}

/// Law of `η(x)` under the uniform measure on configurations.
#[derive(Clone, Debug, PartialEq)]
pub struct Marginal {
    pub n: usize,
    pub k: usize,
    pub x: usize,
    /// `(m, P[m particles among the first x sites])`; the height is `m − xk/N`.
    pub entries: Vec<(usize, Ratio<u128>)>,
}

impl Marginal {
    /// `N·η(x)` when `m` particles sit in the first `x` sites.
    pub fn height_scaled(&self, m: usize) -> i64 {
        (self.n * m) as i64 - (self.x * self.k) as i64
    }

    pub fn total(&self) -> Ratio<u128> {
        self.entries.iter().map(|e| e.1).sum()
    }

    /// Exact variance of `η(x)`.
    pub fn variance(&self) -> Ratio<i128> {
        let nn = (self.n * self.n) as i128;
        let mut second = Ratio::from_integer(0i128);
        let mut first = Ratio::from_integer(0i128);
        for &(m, p) in &self.entries {
            let p = Ratio::new(*p.numer() as i128, *p.denom() as i128);
            let h = self.height_scaled(m) as i128;
            first += p * h;
            second += p * h * h;
        }
        (second - first * first) / nn
    }

    /// CSV with columns `value, numerator, denominator`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("value,numerator,denominator\n");
        for &(m, p) in &self.entries {
            let v = self.height_scaled(m) as f64 / self.n as f64;
            out.push_str(&format!("{v},{},{}\n", p.numer(), p.denom()));
        }
        out
    }
}

pub fn hypergeometric_marginal(n: usize, k: usize, x: usize) -> Result<Marginal> {
    check_range("N", n as i64, 1, 120)?;
    check_range("k", k as i64, 0, n as i64)?;
    check_range("x", x as i64, 0, n as i64)?;
    let total = binomial(n, k);
    let lo = k.saturating_sub(n - x);
    let hi = k.min(x);
    let entries = (lo..=hi)
        .map(|m| {
            (
                m,
                Ratio::new(binomial(x, m) * binomial(n - x, k - m), total),
            )
        })
        .collect();
    Ok(Marginal { n, k, x, entries })
}

/// Membership verdict for the set of bad paths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BadSetVerdict {
    pub bad: bool,
    /// `k < 2`: the logarithmic thresholds vanish and every path is bad.
    pub degenerate: bool,
    /// Height threshold `√k·ln k`.
    pub height_threshold: f64,
    /// Site where `|η|` first reaches the height threshold.
    pub height_witness: Option<usize>,
    /// Window length `⌈2(N/k)(ln k)²⌉`.
    pub window: usize,
    /// Left ends `x` of affine closed windows `[x, x + window]`.
    pub affine_windows: Vec<usize>,
}

impl BadSetVerdict {
    pub fn reason(&self) -> String {
        if self.degenerate {
            return "k < 2: every path is bad".into();
        }
        let mut parts = Vec::new();
        if let Some(x) = self.height_witness {
            parts.push(format!("|eta({x})| >= {:.4}", self.height_threshold));
        }
        if let Some(&x) = self.affine_windows.first() {
            parts.push(format!("affine on [{x}, {}]", x + self.window));
        }
        if parts.is_empty() {
            "good".into()
        } else {
            parts.join("; ")
        }
    }
}

/// Tests whether a path is too tall or contains a long straight stretch.
pub fn in_bad_set(path: &LatticePath) -> BadSetVerdict {
    let (n, k) = (path.n, path.k);
    if k < 2 {
        return BadSetVerdict {
            bad: true,
            degenerate: true,
            height_threshold: 0.0,
            height_witness: None,
            window: 0,
            affine_windows: Vec::new(),
        };
    }
    let kf = k as f64;
    let threshold = kf.sqrt() * kf.ln();
    let height_witness = (0..=n).find(|&x| path.value(x).abs() >= threshold);
    let window = (2.0 * (n as f64 / kf) * kf.ln().powi(2)).ceil() as usize;
    let affine_windows = if window == 0 || window > n {
        Vec::new()
    } else {
        (0..=n - window)
            .filter(|&x| {
                let first = path.occupied(x + 1);
                (x + 2..=x + window).all(|z| path.occupied(z) == first)
            })
            .collect()
    };
    BadSetVerdict {
        bad: height_witness.is_some() || !affine_windows.is_empty(),
        degenerate: false,
        height_threshold: threshold,
        height_witness,
        window,
        affine_windows,
    }
}

/// `N·η(x_i)` at the block cuts.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PathSkeleton {
    pub n: usize,
    pub values: Vec<i64>,
}

impl PathSkeleton {
    pub fn value(&self, i: usize) -> f64 {
        self.values[i] as f64 / self.n as f64
    }
}

pub fn skeleton_path(path: &LatticePath, bp: &BlockPartition) -> Result<PathSkeleton> {
    if bp.n() != path.n {
        return Err(Error::SizeMismatch {
            left: path.n,
            right: bp.n(),
        });
    }
    Ok(PathSkeleton {
        n: path.n,
        values: bp.cuts().iter().map(|&x| path.values[x]).collect(),
    })
}
