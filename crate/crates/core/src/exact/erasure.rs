//! Label erasure inside blocks and the resulting decomposition of the
//! distance to equilibrium.

use std::collections::HashMap;

use super::dist::{total_variation, tv_to_uniform, Distribution};
use super::space::{Model, StateSpace};
use crate::error::{Error, Result};
use crate::perm::BlockPartition;

fn check_shuffle(space: &StateSpace, bp: &BlockPartition) -> Result<()> {
    match space.model() {
        Model::Shuffle { n } if n == bp.n() => Ok(()),
        Model::Shuffle { n } => Err(Error::SizeMismatch {
            left: n,
            right: bp.n(),
        }),
        other => Err(Error::ModelMismatch(format!(
            "label erasure needs a shuffle, got {other}"
        ))),
    }
}

/// Label blocks seen at each position; two permutations share a key iff
/// one is a block-preserving relabeling of the other.
fn fiber_keys(space: &StateSpace, bp: &BlockPartition) -> Result<Vec<Vec<u8>>> {
    let blocks = bp.block_of_each();
    (0..space.size())
        .map(|i| {
            let p = space.perm(i)?;
            Ok((1..=space.n()).map(|x| blocks[p.at(x) - 1] as u8).collect())
        })
        .collect()
}

/// Fiber of each state and the mass and size of each fiber.
fn fibers(
    space: &StateSpace,
    dist: &Distribution,
    bp: &BlockPartition,
) -> Result<(Vec<usize>, Vec<(f64, usize)>)> {
    let keys = fiber_keys(space, bp)?;
    let mut ids: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut stats: Vec<(f64, usize)> = Vec::new();
    let mut of_state = Vec::with_capacity(keys.len());
    for (i, key) in keys.into_iter().enumerate() {
        let next = ids.len();
        let id = *ids.entry(key).or_insert(next);
        if id == stats.len() {
            stats.push((0.0, 0));
        }
        stats[id].0 += dist.get(i);
        stats[id].1 += 1;
        of_state.push(id);
    }
    Ok((of_state, stats))
}

/// `ν̃`: the average of `ν` over relabelings `σ ↦ g∘σ` by permutations `g`
/// preserving every block.
pub fn label_erased(
    space: &StateSpace,
    dist: &Distribution,
    bp: &BlockPartition,
) -> Result<Distribution> {
    dist.check_space(space)?;
    check_shuffle(space, bp)?;
    let (of_state, stats) = fibers(space, dist, bp)?;
    let probs = of_state
        .iter()
        .map(|&f| stats[f].0 / stats[f].1 as f64)
        .collect();
    Ok(Distribution::from_raw(space.model(), probs))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TvDecomposition {
    /// `‖ν̂ − μ̂‖` for the semi-skeleton laws.
    pub semi_skeleton_tv: f64,
    /// `‖ν − ν̃‖`.
    pub erasure_tv: f64,
    /// `‖ν̃ − μ‖`, equal to `semi_skeleton_tv`.
    pub erased_tv: f64,
    /// `‖ν − μ‖`, at most `semi_skeleton_tv + erasure_tv`.
    pub total_tv: f64,
}

impl TvDecomposition {
    pub fn identity_holds(&self, tol: f64) -> bool {
        (self.erased_tv - self.semi_skeleton_tv).abs() <= tol
    }

    pub fn bound_holds(&self, tol: f64) -> bool {
        self.total_tv <= self.semi_skeleton_tv + self.erasure_tv + tol
    }
}

pub fn tv_decomposition(
    space: &StateSpace,
    dist: &Distribution,
    bp: &BlockPartition,
) -> Result<TvDecomposition> {
    let erased = label_erased(space, dist, bp)?;
    let (_, stats) = fibers(space, dist, bp)?;
    let total = space.size() as f64;
    let semi = 0.5
        * stats
            .iter()
            .map(|&(mass, size)| (mass - size as f64 / total).abs())
            .sum::<f64>();
    Ok(TvDecomposition {
        semi_skeleton_tv: semi.clamp(0.0, 1.0),
        erasure_tv: total_variation(dist, &erased)?,
        erased_tv: tv_to_uniform(&erased),
        total_tv: tv_to_uniform(dist),
    })
}
