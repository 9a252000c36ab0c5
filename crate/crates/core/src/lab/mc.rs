//! Monte Carlo building blocks shared by the experiments. Replica `r` of a
//! batch seeded with `s` always uses the substream `substream_seed(s, r)`,
//! and per-replica results are merged in replica order.

use rayon::prelude::*;

use crate::dynamics::{apply_update, UpdateEvents};
use crate::error::{Error, Result};
use crate::path::{extremal_paths, LatticePath};
use crate::perm::Permutation;
use crate::rng::substream_seed;

pub(crate) fn check_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "times must be finite and nonnegative".into(),
        ));
    }
    if times.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidParameter(
            "times must be nondecreasing".into(),
        ));
    }
    Ok(())
}

pub(crate) fn check_replicas(replicas: u64) -> Result<()> {
    if replicas == 0 {
        return Err(Error::InvalidParameter(
            "replica budget must be positive".into(),
        ));
    }
    Ok(())
}

/// Whether `η^∧_t ≠ η^∨_t` under the grand coupling, at each of `times`.
pub fn grand_unmerged(n: usize, k: usize, times: &[f64], seed: u64) -> Result<Vec<bool>> {
    check_grid(times)?;
    let (mut top, mut bottom) = extremal_paths(n, k)?;
    let mut out = vec![false; times.len()];
    let mut next = 0;
    for ev in UpdateEvents::new(n, seed) {
        while next < times.len() && times[next] < ev.time {
            out[next] = true;
            next += 1;
        }
        if next == times.len() {
            break;
        }
        top.push(ev.site, ev.bit);
        bottom.push(ev.site, ev.bit);
        if top == bottom {
            break;
        }
    }
    Ok(out)
}

/// Configurations at each of `times`, from `init`.
pub fn sep_samples(init: &LatticePath, times: &[f64], seed: u64) -> Result<Vec<LatticePath>> {
    check_grid(times)?;
    let mut path = init.clone();
    let mut out = Vec::with_capacity(times.len());
    let mut events = UpdateEvents::new(init.n(), seed).peekable();
    for &t in times {
        while let Some(ev) = events.next_if(|e| e.time <= t) {
            path.push(ev.site, ev.bit);
        }
        out.push(path.clone());
    }
    Ok(out)
}

/// Permutations at each of `times`, from `init`.
pub fn shuffle_samples(init: &Permutation, times: &[f64], seed: u64) -> Result<Vec<Permutation>> {
    check_grid(times)?;
    let mut p = init.clone();
    let mut out = Vec::with_capacity(times.len());
    let mut events = UpdateEvents::new(init.n(), seed).peekable();
    for &t in times {
        while let Some(ev) = events.next_if(|e| e.time <= t) {
            p = apply_update(&p, ev.site, ev.bit)?;
        }
        out.push(p.clone());
    }
    Ok(out)
}

/// Mean and standard error of `σ̃_t(x, y)` from the identity, indexed
/// `[time][x·(N + 1) + y]`.
pub fn height_field_means(
    n: usize,
    times: &[f64],
    replicas: u64,
    seed: u64,
) -> Result<Vec<Vec<(f64, f64)>>> {
    check_replicas(replicas)?;
    check_grid(times)?;
    let w = (n + 1) * (n + 1);
    let fields: Vec<Vec<Vec<i64>>> = (0..replicas)
        .into_par_iter()
        .map(|r| {
            let samples =
                shuffle_samples(&Permutation::identity(n), times, substream_seed(seed, r))?;
            Ok(samples
                .iter()
                .map(|p| {
                    let hf = p.height_field();
                    (0..w)
                        .map(|i| hf.scaled(i / (n + 1), i % (n + 1)))
                        .collect()
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let scale = n as f64;
    let r = replicas as f64;
    Ok((0..times.len())
        .map(|j| {
            (0..w)
                .map(|i| {
                    let (mut s, mut s2) = (0.0, 0.0);
                    for f in &fields {
                        let v = f[j][i] as f64 / scale;
                        s += v;
                        s2 += v * v;
                    }
                    let mean = s / r;
                    let var = if replicas > 1 {
                        ((s2 - r * mean * mean) / (r - 1.0)).max(0.0)
                    } else {
                        0.0
                    };
                    (mean, (var / r).sqrt())
                })
                .collect()
        })
        .collect())
}
