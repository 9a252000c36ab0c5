use rand::Rng as _;

use super::stream::{CensoringScheme, UpdateEvent, UpdateStream};
use crate::error::{check_range, Error, Result};
use crate::perm::Permutation;
use crate::rng::rng_from_seed;

/// Sorts 0-based slots `i, i + 1` ascending when `ascending`, else descending.
#[inline]
pub fn sort_adjacent(cards: &mut [u32], i: usize, ascending: bool) {
    if (cards[i] > cards[i + 1]) == ascending {
        cards.swap(i, i + 1);
    }
}

pub fn apply_update(p: &Permutation, site: usize, bit: bool) -> Result<Permutation> {
    check_range("site", site as i64, 1, p.n() as i64 - 1)?;
    let mut q = p.clone();
    sort_adjacent(q.raw_mut(), site - 1, bit);
    Ok(q)
}

/// Applies a sequence of events to `init`, in order.
pub fn run_trajectory_events<I>(init: &Permutation, events: I) -> Permutation
where
    I: IntoIterator<Item = UpdateEvent>,
{
    let mut q = init.clone();
    let cards = q.raw_mut();
    for e in events {
        sort_adjacent(cards, e.site - 1, e.bit);
    }
    q
}

pub fn run_trajectory(
    init: &Permutation,
    stream: &UpdateStream,
    scheme: Option<&CensoringScheme>,
) -> Result<Permutation> {
    if init.n() != stream.n() {
        return Err(Error::SizeMismatch {
            left: init.n(),
            right: stream.n(),
        });
    }
    if let Some(c) = scheme {
        c.check_covers(stream)?;
    }
    let kept = stream
        .events()
        .iter()
        .filter(|e| scheme.is_none_or(|c| c.allows(e.time, e.site)))
        .copied();
    Ok(run_trajectory_events(init, kept))
}

/// Drives every initial permutation with the same stream; the result is
/// aligned with `inits`.
pub fn grand_coupling(
    inits: &[Permutation],
    stream: &UpdateStream,
    scheme: Option<&CensoringScheme>,
) -> Result<Vec<Permutation>> {
    inits
        .iter()
        .map(|p| run_trajectory(p, stream, scheme))
        .collect()
}

/// Discrete-time chain: each step sorts or reverse-sorts a uniformly chosen
/// adjacent pair with probability 1/2 each.
pub fn run_discrete(init: &Permutation, steps: u64, seed: u64) -> Permutation {
    let n = init.n();
    if n < 2 {
        return init.clone();
    }
    let mut rng = rng_from_seed(seed);
    let mut q = init.clone();
    let cards = q.raw_mut();
    for _ in 0..steps {
        let i = rng.random_range(0..n - 1);
        let bit: bool = rng.random();
        sort_adjacent(cards, i, bit);
    }
    q
}
