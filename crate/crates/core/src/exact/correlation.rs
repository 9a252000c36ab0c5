//! Correlation inequalities under the uniform law, in exact arithmetic, and
//! generators of increasing events.

use num_rational::Ratio;
use rand::Rng as _;

use super::space::{Model, StateSpace};
use crate::error::{Error, Result};
use crate::rng::Rng;

pub type Rational = Ratio<i128>;

#[derive(Clone, Debug, PartialEq)]
pub struct CorrelationCheck {
    /// `μ(fg)` for FKG, `μ(f | A)` for Holley.
    pub lhs: Rational,
    /// `μ(f)μ(g)` for FKG, `μ(f | B)` for Holley.
    pub rhs: Rational,
    pub pass: bool,
}

/// A violating pair `(lower, upper)` of an increasing function, if any.
pub fn increasing_witness(space: &StateSpace, f: &[i64]) -> Option<(usize, usize)> {
    (0..space.size()).find_map(|i| {
        space
            .up_moves(i)
            .into_iter()
            .find(|&j| f[i] > f[j])
            .map(|j| (i, j))
    })
}

fn require_increasing(space: &StateSpace, f: &[i64], name: &str) -> Result<()> {
    if f.len() != space.size() {
        return Err(Error::SizeMismatch {
            left: f.len(),
            right: space.size(),
        });
    }
    if let Some((a, b)) = increasing_witness(space, f) {
        return Err(Error::NotIncreasing(format!(
            "{name}: {} <= {} but {name}({}) = {} > {}",
            space.label(a),
            space.label(b),
            space.label(a),
            f[a],
            f[b]
        )));
    }
    Ok(())
}

pub fn indicator(event: &[bool]) -> Vec<i64> {
    event.iter().map(|&b| i64::from(b)).collect()
}

/// `μ(fg) ≥ μ(f)μ(g)` for increasing integer-valued `f`, `g`.
pub fn fkg_check(space: &StateSpace, f: &[i64], g: &[i64]) -> Result<CorrelationCheck> {
    require_increasing(space, f, "f")?;
    require_increasing(space, g, "g")?;
    let n = space.size() as i128;
    let fg: i128 = f.iter().zip(g).map(|(&a, &b)| a as i128 * b as i128).sum();
    let sf: i128 = f.iter().map(|&a| a as i128).sum();
    let sg: i128 = g.iter().map(|&a| a as i128).sum();
    let lhs = Rational::new(fg, n);
    let rhs = Rational::new(sf, n) * Rational::new(sg, n);
    Ok(CorrelationCheck {
        pass: lhs >= rhs,
        lhs,
        rhs,
    })
}

/// Indices of the lattice minimum of two configurations.
fn path_min(space: &StateSpace, a: usize, b: usize) -> usize {
    let (x, y) = (space.mask(a), space.mask(b));
    let n = space.n();
    // The minimum path has, at each x, the smaller particle count up to x.
    let (mut ca, mut cb, mut cm, mut out) = (0u32, 0u32, 0u32, 0u64);
    for p in 0..n {
        ca += (x >> p & 1) as u32;
        cb += (y >> p & 1) as u32;
        let target = ca.min(cb);
        if target > cm {
            out |= 1 << p;
            cm = target;
        }
    }
    let path = crate::path::LatticePath::from_mask(n, out).expect("lattice closure");
    space.path_index(&path).expect("same space")
}

/// Holley comparison `μ(f | A) ≥ μ(f | B)` on configurations, for an
/// increasing `A`, an increasing `f`, and `B` with `min(A, B) ⊆ B`.
pub fn holley_check(
    space: &StateSpace,
    a: &[bool],
    b: &[bool],
    f: &[i64],
) -> Result<CorrelationCheck> {
    if !matches!(space.model(), Model::Exclusion { .. }) {
        return Err(Error::ModelMismatch(
            "Holley check needs configurations".into(),
        ));
    }
    if a.len() != space.size() || b.len() != space.size() {
        return Err(Error::SizeMismatch {
            left: a.len().max(b.len()),
            right: space.size(),
        });
    }
    require_increasing(space, &indicator(a), "1_A")?;
    require_increasing(space, f, "f")?;
    let (ia, ib): (Vec<usize>, Vec<usize>) = (
        (0..a.len()).filter(|&i| a[i]).collect(),
        (0..b.len()).filter(|&i| b[i]).collect(),
    );
    if ia.is_empty() || ib.is_empty() {
        return Err(Error::Precondition("A and B must be nonempty".into()));
    }
    for &x in &ia {
        for &y in &ib {
            let m = path_min(space, x, y);
            if !b[m] {
                return Err(Error::Precondition(format!(
                    "min({}, {}) = {} is not in B",
                    space.label(x),
                    space.label(y),
                    space.label(m)
                )));
            }
        }
    }
    let mean = |set: &[usize]| -> Rational {
        Rational::new(set.iter().map(|&i| f[i] as i128).sum(), set.len() as i128)
    };
    let (lhs, rhs) = (mean(&ia), mean(&ib));
    Ok(CorrelationCheck {
        pass: lhs >= rhs,
        lhs,
        rhs,
    })
}

/// The principal up-set `{s : s ≥ s0}`.
pub fn principal_up_set(space: &StateSpace, s0: usize) -> Vec<bool> {
    let mut inside = vec![false; space.size()];
    let mut stack = vec![s0];
    inside[s0] = true;
    while let Some(i) = stack.pop() {
        for j in space.up_moves(i) {
            if !inside[j] {
                inside[j] = true;
                stack.push(j);
            }
        }
    }
    inside
}

/// `{s : h_s(c) ≥ level}` for the height coordinate `c` of
/// [`StateSpace::heights`].
pub fn threshold_event(space: &StateSpace, coordinate: usize, level: i64) -> Vec<bool> {
    (0..space.size())
        .map(|i| space.heights(i)[coordinate] >= level)
        .collect()
}

/// A random increasing event: a union of one to three principal up-sets,
/// or a threshold set of one height coordinate, or an intersection of two
/// such sets.
pub fn random_increasing_event(space: &StateSpace, rng: &mut Rng) -> Vec<bool> {
    let single = |rng: &mut Rng| -> Vec<bool> {
        if rng.random_bool(0.5) {
            let count = rng.random_range(1..=3);
            let mut out = vec![false; space.size()];
            for _ in 0..count {
                let s0 = rng.random_range(0..space.size());
                for (o, u) in out.iter_mut().zip(principal_up_set(space, s0)) {
                    *o |= u;
                }
            }
            out
        } else {
            let s = rng.random_range(0..space.size());
            let heights = space.heights(s);
            let c = rng.random_range(0..heights.len());
            threshold_event(space, c, heights[c])
        }
    };
    let first = single(rng);
    if rng.random_bool(0.25) {
        let second = single(rng);
        first.iter().zip(&second).map(|(a, b)| *a && *b).collect()
    } else {
        first
    }
}
