//! The censored three-phase schedule from the identity: block-local mixing
//! up to `t₁`, free dynamics up to `t₂`, then block-local mixing again up to
//! `t₃` with the skeleton frozen.

use std::collections::HashMap;
use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mc::check_replicas;
use super::report::{mean_se, ExperimentReport};
use crate::dynamics::{apply_update, CensoringScheme, UpdateEvents};
use crate::error::{Error, Result};
use crate::exact::{
    enumerate, evolve, tv_decomposition, tv_to_uniform, Distribution, Model, StateSpace,
};
use crate::perm::{BlockPartition, Permutation};
use crate::rng::substream_seed;
use crate::spectral::lambda_n;

/// Largest state count for which the exact laws are computed.
pub const EXACT_STATES: u128 = 40_320;

/// Largest number of block-label sequences for the plug-in distance.
pub const PLUG_IN_CLASSES: u128 = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThreePhaseParams {
    pub n: usize,
    pub delta: f64,
    pub replicas: u64,
    pub seed: u64,
}

/// `t_j = N²/(2π²) · c_j · log N` with `c = (δ/3, 1 + 2δ/3, 1 + δ)`.
pub fn phase_times(n: usize, delta: f64) -> (f64, f64, f64) {
    let base = (n * n) as f64 / (2.0 * PI * PI) * (n as f64).ln();
    (
        base * delta / 3.0,
        base * (1.0 + 2.0 * delta / 3.0),
        base * (1.0 + delta),
    )
}

/// `⌈1/δ⌉`.
pub fn block_count(delta: f64) -> usize {
    (1.0 / delta).ceil() as usize
}

/// The schedule as a censoring scheme: cut sites are off on `[0, t₁)` and
/// on `[t₂, t₃]`.
pub fn schedule(n: usize, delta: f64) -> Result<CensoringScheme> {
    let bp = BlockPartition::new(n, block_count(delta))?;
    let (t1, t2, t3) = phase_times(n, delta);
    let inner = inner_sites(&bp);
    CensoringScheme::new(
        n,
        t3,
        vec![(0.0, inner.clone()), (t1, (1..n).collect()), (t2, inner)],
    )
}

fn inner_sites(bp: &BlockPartition) -> Vec<usize> {
    let cuts = &bp.cuts()[1..bp.k_blocks()];
    (1..bp.n()).filter(|s| !cuts.contains(s)).collect()
}

struct Replica {
    blocks_kept: bool,
    local: Vec<Permutation>,
    frozen_phase1: bool,
    volume_t2: f64,
    frozen_phase3: bool,
    key_t3: Vec<u8>,
}

fn run_replica(n: usize, delta: f64, bp: &BlockPartition, seed: u64) -> Result<Replica> {
    let (t1, t2, t3) = phase_times(n, delta);
    let block = bp.block_of_each();
    let cuts = &bp.cuts()[1..bp.k_blocks()];
    let start = Permutation::identity(n);
    let skeleton0 = start.skeleton(bp)?;
    let mut p = start;
    let mut blocks_kept = true;
    let mut events = UpdateEvents::new(n, seed).peekable();
    while let Some(ev) = events.next_if(|e| e.time <= t1) {
        if cuts.contains(&ev.site) {
            continue;
        }
        p = apply_update(&p, ev.site, ev.bit)?;
        for x in [ev.site, ev.site + 1] {
            blocks_kept &= block[x - 1] == block[p.at(x) - 1];
        }
    }
    blocks_kept &= p.preserves_blocks(bp)?;
    let local = (1..=bp.k_blocks())
        .map(|i| {
            let lo = bp.cut(i - 1);
            let labels = (lo + 1..=bp.cut(i))
                .map(|x| p.at(x).saturating_sub(lo))
                .collect();
            Permutation::new(labels)
        })
        .collect::<Result<Vec<_>>>();
    // A block that leaked cards has no local permutation; the flag records it.
    let local = if blocks_kept { local? } else { Vec::new() };
    let frozen_phase1 = p.skeleton(bp)? == skeleton0;
    while let Some(ev) = events.next_if(|e| e.time <= t2) {
        p = apply_update(&p, ev.site, ev.bit)?;
    }
    let skeleton2 = p.skeleton(bp)?;
    while let Some(ev) = events.next_if(|e| e.time <= t3) {
        if !cuts.contains(&ev.site) {
            p = apply_update(&p, ev.site, ev.bit)?;
        }
    }
    Ok(Replica {
        blocks_kept,
        local,
        frozen_phase1,
        volume_t2: skeleton2.volume(),
        frozen_phase3: p.skeleton(bp)? == skeleton2,
        key_t3: (1..=n).map(|x| block[p.at(x) - 1] as u8).collect(),
    })
}

fn factorial(b: usize) -> u128 {
    (1..=b as u128).product()
}

/// Number of distinct block-label sequences, `N! / ∏ b_i!`.
fn label_classes(bp: &BlockPartition) -> u128 {
    let mut out = 1u128;
    let mut placed = 0u128;
    for i in 1..=bp.k_blocks() {
        let b = (bp.cut(i) - bp.cut(i - 1)) as u128;
        for j in 1..=b {
            placed += 1;
            out = out * placed / j;
        }
    }
    out
}

fn volume_of(space: &StateSpace, bp: &BlockPartition) -> Result<Vec<f64>> {
    (0..space.size())
        .map(|i| Ok(space.perm(i)?.skeleton(bp)?.volume()))
        .collect()
}

/// Runs the schedule and checks its structural facts: no card crosses a
/// cut before `t₁`, the skeleton is frozen in the censored phases, and the
/// mean volume at `t₂` respects `2N(K − 1)² e^{−λ_N(t₂ − t₁)}`.
pub fn three_phase_schedule(p: &ThreePhaseParams) -> Result<ExperimentReport> {
    check_replicas(p.replicas)?;
    if !(p.delta > 0.0 && p.delta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "delta must lie in (0, 1], got {}",
            p.delta
        )));
    }
    let k_blocks = block_count(p.delta);
    if k_blocks >= p.n {
        return Err(Error::InvalidParameter(format!(
            "K = {k_blocks} blocks need N > K, got N = {}",
            p.n
        )));
    }
    let bp = BlockPartition::new(p.n, k_blocks)?;
    let (t1, t2, t3) = phase_times(p.n, p.delta);
    let runs: Vec<Replica> = (0..p.replicas)
        .into_par_iter()
        .map(|r| run_replica(p.n, p.delta, &bp, substream_seed(p.seed, r)))
        .collect::<Result<_>>()?;
    let mut report = ExperimentReport::new("three-phase", p, p.seed);
    let (n, reps) = (p.n, p.replicas);
    report.note(
        "censored schedule: by the censoring inequality its distances bound those of the uncensored chain from above",
    );
    report.push("at", n, None, None, "K", k_blocks as f64, None, 0);
    report.push("at", n, None, None, "t1", t1, None, 0);
    report.push("at", n, None, None, "t2", t2, None, 0);
    report.push("at", n, None, None, "t3", t3, None, 0);

    let leaked = runs.iter().filter(|r| !r.blocks_kept).count();
    report.verdict(
        "no card crosses a block boundary before t1",
        leaked == 0,
        (leaked > 0).then(|| format!("{leaked} replicas leaked")),
    );
    let moved = runs.iter().filter(|r| !r.frozen_phase1).count();
    report.verdict(
        "skeleton unchanged on [0, t1]",
        moved == 0,
        (moved > 0).then(|| format!("{moved} replicas")),
    );
    let moved = runs.iter().filter(|r| !r.frozen_phase3).count();
    report.verdict(
        "skeleton at t3 equals skeleton at t2",
        moved == 0,
        (moved > 0).then(|| format!("{moved} replicas")),
    );

    if leaked == 0 {
        block_marginals(&mut report, &bp, &runs, t1, reps)?;
    }

    let volumes: Vec<f64> = runs.iter().map(|r| r.volume_t2).collect();
    let (mean_v, se_v) = mean_se(&volumes);
    let bound = 2.0
        * n as f64
        * ((k_blocks - 1) * (k_blocks - 1)) as f64
        * (-lambda_n(n)? * (t2 - t1)).exp();
    report.push(
        "at",
        n,
        None,
        Some(t2),
        "volume_mean",
        mean_v,
        Some(se_v),
        reps,
    );
    report.push("at", n, None, Some(t2), "volume_bound", bound, None, 0);
    report.verdict(
        "mean volume at t2 below the bound within 4 SE",
        mean_v <= bound + 4.0 * se_v,
        (mean_v > bound + 4.0 * se_v).then(|| format!("{mean_v} ± {se_v} > {bound}")),
    );

    let classes = label_classes(&bp);
    if classes <= PLUG_IN_CLASSES {
        let mut counts: HashMap<&[u8], u64> = HashMap::new();
        for r in &runs {
            *counts.entry(&r.key_t3).or_default() += 1;
        }
        let u = 1.0 / classes as f64;
        let seen: f64 = counts
            .values()
            .map(|&c| (c as f64 / reps as f64 - u).max(0.0))
            .sum();
        report.push(
            "at",
            n,
            None,
            Some(t3),
            "semi_skeleton_tv_plugin",
            seen,
            None,
            reps,
        );
    } else {
        report.note("too many block-label sequences for a plug-in distance at t3");
    }

    if factorial(n) <= EXACT_STATES {
        exact_checks(&mut report, &bp, p.delta, mean_v, se_v, reps)?;
    }
    Ok(report)
}

/// Monte Carlo frequencies of each block's local order at `t₁` against the
/// exact law of adjacent transpositions on that block.
fn block_marginals(
    report: &mut ExperimentReport,
    bp: &BlockPartition,
    runs: &[Replica],
    t1: f64,
    reps: u64,
) -> Result<()> {
    let n = bp.n();
    let mut within = 0usize;
    let mut total = 0usize;
    for i in 1..=bp.k_blocks() {
        let b = bp.cut(i) - bp.cut(i - 1);
        let metric = |m: &str| format!("block{i}_{m}");
        if b < 2 || factorial(b) > EXACT_STATES {
            continue;
        }
        let space = enumerate(Model::shuffle(b)?, EXACT_STATES)?;
        let exact = evolve(&space, &Distribution::point_mass(&space, 0), None, t1)?;
        let mut counts = vec![0u64; space.size()];
        for r in runs {
            counts[space.perm_index(&r.local[i - 1])?] += 1;
        }
        let r = reps as f64;
        let freq: Vec<f64> = counts.iter().map(|&c| c as f64 / r).collect();
        let plug_in: f64 = freq
            .iter()
            .map(|f| (f - 1.0 / space.size() as f64).max(0.0))
            .sum();
        let gap: f64 = freq
            .iter()
            .zip(exact.probs())
            .map(|(f, q)| (f - q).max(0.0))
            .sum();
        for (f, q) in freq.iter().zip(exact.probs()) {
            let se = (q * (1.0 - q) / r).sqrt().max(1.0 / r);
            within += usize::from((f - q).abs() <= 4.0 * se);
            total += 1;
        }
        report.push(
            "at",
            n,
            None,
            Some(t1),
            &metric("tv_exact"),
            tv_to_uniform(&exact),
            None,
            0,
        );
        report.push(
            "at",
            n,
            None,
            Some(t1),
            &metric("tv_plugin"),
            plug_in,
            None,
            reps,
        );
        report.push(
            "at",
            n,
            None,
            Some(t1),
            &metric("mc_vs_exact_tv"),
            gap,
            None,
            reps,
        );
    }
    if total > 0 {
        let share = within as f64 / total as f64;
        report.verdict(
            "block frequencies at t1 within 4 SE of the exact law at >= 95% of states",
            share >= 0.95,
            (share < 0.95).then(|| format!("{within} of {total} states")),
        );
    }
    Ok(())
}

/// Exact censored law on the full group: volume expectation, the
/// semi-skeleton decomposition at `t₃`, and the censoring comparison.
fn exact_checks(
    report: &mut ExperimentReport,
    bp: &BlockPartition,
    delta: f64,
    mean_v: f64,
    se_v: f64,
    reps: u64,
) -> Result<()> {
    let n = bp.n();
    let (_, t2, t3) = phase_times(n, delta);
    let space = enumerate(Model::shuffle(n)?, EXACT_STATES)?;
    let scheme = schedule(n, delta)?;
    let id = Distribution::point_mass(&space, 0);
    let at_t2 = evolve(&space, &id, Some(&scheme), t2)?;
    let volume = volume_of(&space, bp)?;
    let exact_v: f64 = volume.iter().zip(at_t2.probs()).map(|(v, q)| v * q).sum();
    report.push("at", n, None, Some(t2), "volume_exact", exact_v, None, 0);
    let tol = 4.0 * se_v.max(1.0 / reps as f64);
    report.verdict(
        "mean volume at t2 within 4 SE of the exact value",
        (mean_v - exact_v).abs() <= tol,
        ((mean_v - exact_v).abs() > tol).then(|| format!("{mean_v} vs {exact_v}")),
    );

    let censored = evolve(&space, &id, Some(&scheme), t3)?;
    let free = evolve(&space, &id, None, t3)?;
    let d = tv_decomposition(&space, &censored, bp)?;
    let free_tv = tv_to_uniform(&free);
    report.push(
        "at",
        n,
        None,
        Some(t3),
        "semi_skeleton_tv_exact",
        d.semi_skeleton_tv,
        None,
        0,
    );
    report.push("at", n, None, Some(t3), "erasure_tv", d.erasure_tv, None, 0);
    report.push("at", n, None, Some(t3), "censored_tv", d.total_tv, None, 0);
    report.push("at", n, None, Some(t3), "uncensored_tv", free_tv, None, 0);
    report.verdict(
        "censored distance at t3 >= uncensored distance",
        d.total_tv >= free_tv - 1e-9,
        (d.total_tv < free_tv - 1e-9).then(|| format!("{} < {free_tv}", d.total_tv)),
    );
    report.verdict(
        "total distance within the semi-skeleton plus erasure bound",
        d.bound_holds(1e-9),
        (!d.bound_holds(1e-9)).then(|| format!("{d:?}")),
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn times_and_schedule() {
        let (t1, t2, t3) = phase_times(8, 0.5);
        assert!(t1 < t2 && t2 < t3);
        assert!((t3 - 64.0 / (2.0 * PI * PI) * 1.5 * 8f64.ln()).abs() < 1e-12);
        let s = schedule(8, 0.5).unwrap();
        assert!(!s.allows(0.0, 4));
        assert!(s.allows(0.0, 3));
        assert!(s.allows(t1, 4));
        assert!(!s.allows(t2, 4));
        assert_eq!(label_classes(&BlockPartition::new(8, 2).unwrap()), 70);
        assert_eq!(
            label_classes(&BlockPartition::new(7, 3).unwrap()),
            5040 / (6 * 2 * 2)
        );
    }

    #[test]
    fn eight_cards_half() {
        let p = ThreePhaseParams {
            n: 8,
            delta: 0.5,
            replicas: 2000,
            seed: 3,
        };
        let r = three_phase_schedule(&p).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        assert_eq!(r.metric("volume_exact").len(), 1);
        assert_eq!(r.metric("block1_tv_exact").len(), 1);
    }

    #[test]
    fn refuses_too_many_blocks() {
        let p = ThreePhaseParams {
            n: 4,
            delta: 0.2,
            replicas: 10,
            seed: 0,
        };
        assert!(matches!(
            three_phase_schedule(&p),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn deterministic() {
        let p = ThreePhaseParams {
            n: 12,
            delta: 0.34,
            replicas: 50,
            seed: 9,
        };
        let a = three_phase_schedule(&p).unwrap();
        let b = three_phase_schedule(&p).unwrap();
        assert_eq!(a.to_csv(None), b.to_csv(None));
        assert!(a.passed(), "{:?}", a.failures());
    }
}
