//! Coupling experiments: merge-probability curves and corner-flip audits.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mc::{check_grid, check_replicas, grand_unmerged};
use super::report::{mean_se, proportion, ExperimentReport};
use crate::dynamics::{corner_flip_run_with, PairTrace};
use crate::error::{check_range, Result};
use crate::exact::{enumerate, evolve_many, tv_to_uniform, Distribution, Method, Model};
use crate::rng::substream_seed;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    #[default]
    Grand,
    CornerFlip,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TvUpperParams {
    pub n: usize,
    pub k: usize,
    pub times: Vec<f64>,
    pub replicas: u64,
    pub seed: u64,
    pub coupling: Coupling,
}

/// Largest state count for which the exact maximum over starts is computed.
const MAX_START_STATES: usize = 2_000;

/// `max_η ‖P^η_t − μ‖` at each time, over every start.
pub fn max_start_tv(space: &crate::exact::StateSpace, times: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0f64; times.len()];
    for s in 0..space.size() {
        let d = evolve_many(
            space,
            &Distribution::point_mass(space, s),
            times,
            Method::Uniformization,
        )?;
        for (o, p) in out.iter_mut().zip(&d) {
            *o = o.max(tv_to_uniform(p));
        }
    }
    Ok(out)
}

/// Estimates `P[η^∧_t ≠ η^∨_t]`, an upper bound on the distance to
/// equilibrium from any start, under either coupling.
pub fn tv_upper_curve(p: &TvUpperParams) -> Result<ExperimentReport> {
    check_replicas(p.replicas)?;
    check_grid(&p.times)?;
    check_range("k", p.k as i64, 1, p.n as i64 - 1)?;
    let mut report = ExperimentReport::new("tv-upper", p, p.seed);
    let horizon = p.times.last().copied().unwrap_or(0.0);
    let per_replica: Vec<Vec<bool>> = (0..p.replicas)
        .into_par_iter()
        .map(|r| {
            let seed = substream_seed(p.seed, r);
            match p.coupling {
                Coupling::Grand => grand_unmerged(p.n, p.k, &p.times, seed),
                Coupling::CornerFlip => {
                    let run = corner_flip_run_with(p.n, p.k, horizon, seed, &p.times, &[])?;
                    Ok(unmerged_on_grid(&run.trace, &p.times))
                }
            }
        })
        .collect::<Result<_>>()?;
    let metric = match p.coupling {
        Coupling::Grand => "unmerged_grand",
        Coupling::CornerFlip => "unmerged_corner_flip",
    };
    let mut estimates = Vec::with_capacity(p.times.len());
    for (j, &t) in p.times.iter().enumerate() {
        let hits = per_replica.iter().filter(|v| v[j]).count() as u64;
        let (est, se) = proportion(hits, p.replicas);
        report.push(
            "sep",
            p.n,
            Some(p.k),
            Some(t),
            metric,
            est,
            Some(se),
            p.replicas,
        );
        estimates.push((t, est, se));
    }
    if let Some(&(t, est, _)) = estimates.iter().find(|e| e.0 == 0.0) {
        report.verdict(
            "distinct starts are unmerged at t = 0",
            est == 1.0,
            (est != 1.0).then(|| format!("t={t} estimate {est}")),
        );
    }
    let model = Model::exclusion(p.n, p.k)?;
    if model.size() <= MAX_START_STATES as u128 {
        let space = enumerate(model, MAX_START_STATES as u128)?;
        let exact = max_start_tv(&space, &p.times)?;
        let mut witness = None;
        for (&(t, est, se), &d) in estimates.iter().zip(&exact) {
            report.push(
                "sep",
                p.n,
                Some(p.k),
                Some(t),
                "tv_exact_max_start",
                d,
                None,
                0,
            );
            // A floor of one replica keeps the check meaningful at estimates of 0 or 1.
            let slack = 3.0 * se.max(1.0 / p.replicas as f64);
            if est < d - slack && witness.is_none() {
                witness = Some(format!("t={t}: estimate {est} below exact {d}"));
            }
        }
        report.verdict("curve >= exact distance - 3 SE", witness.is_none(), witness);
    }
    Ok(report)
}

pub(crate) fn unmerged_on_grid(trace: &PairTrace, times: &[f64]) -> Vec<bool> {
    times
        .iter()
        .map(|&t| trace.merge_time.is_none_or(|m| m > t))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AreaAuditParams {
    pub n: usize,
    pub k: usize,
    pub horizon: f64,
    pub replicas: u64,
    pub seed: u64,
    /// Exponent step of the area thresholds `k^{1/2 − (i+1)ε} N`.
    pub eps: f64,
    /// Number of equally spaced sampling times on `[0, horizon]`.
    pub grid_points: usize,
}

/// 1% critical value of the Kolmogorov distribution.
pub const KS_CRITICAL_1PCT: f64 = 1.6276;

/// `(i, k^{1/2 − (i+1)ε} N)` for `i = 2, …, ⌈1/(2ε)⌉ + 1`.
pub fn area_thresholds(n: usize, k: usize, eps: f64) -> Vec<(usize, f64)> {
    let last = (1.0 / (2.0 * eps)).ceil() as usize + 1;
    (2..=last)
        .map(|i| (i, (k as f64).powf(0.5 - (i as f64 + 1.0) * eps) * n as f64))
        .collect()
}

/// Kolmogorov–Smirnov distance between merge times and `1 − e^{−2t}`; runs
/// that did not merge count as exceeding `horizon`.
pub fn ks_exponential(merge_times: &[Option<f64>], rate: f64, horizon: f64) -> f64 {
    let total = merge_times.len() as f64;
    let mut seen: Vec<f64> = merge_times.iter().flatten().copied().collect();
    seen.sort_by(f64::total_cmp);
    let cdf = |t: f64| 1.0 - (-rate * t).exp();
    let mut d = 0.0f64;
    for (i, &t) in seen.iter().enumerate() {
        let f = cdf(t);
        d = d
            .max((i as f64 + 1.0) / total - f)
            .max(f - i as f64 / total);
    }
    d.max((seen.len() as f64 / total - cdf(horizon)).abs())
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let idx = ((sorted.len() as f64 - 1.0) * q).round() as usize;
    sorted[idx]
}

/// Corner-flip coupling audit from `(∧, ∨)`.
pub fn area_audit(p: &AreaAuditParams) -> Result<ExperimentReport> {
    check_replicas(p.replicas)?;
    check_range("k", p.k as i64, 1, p.n as i64 - 1)?;
    if !(p.horizon > 0.0) || !(p.eps > 0.0) || p.grid_points < 2 {
        return Err(crate::Error::InvalidParameter(
            "horizon and eps must be positive, with at least two grid points".into(),
        ));
    }
    let mut report = ExperimentReport::new("area-audit", p, p.seed);
    let grid: Vec<f64> = (0..p.grid_points)
        .map(|j| p.horizon * j as f64 / (p.grid_points - 1) as f64)
        .collect();
    let thresholds = area_thresholds(p.n, p.k, p.eps);
    let levels: Vec<f64> = thresholds.iter().map(|t| t.1).collect();
    let traces: Vec<PairTrace> = (0..p.replicas)
        .into_par_iter()
        .map(|r| {
            corner_flip_run_with(
                p.n,
                p.k,
                p.horizon,
                substream_seed(p.seed, r),
                &grid,
                &levels,
            )
            .map(|run| run.trace)
        })
        .collect::<Result<_>>()?;
    let (n, k, reps) = (p.n, Some(p.k), p.replicas);

    let events: u64 = traces.iter().map(|t| t.events).sum();
    let gap = traces.iter().map(|t| t.gap_violations).sum::<u64>();
    let step = traces.iter().map(|t| t.area_step_violations).sum::<u64>();
    let order = traces.iter().map(|t| t.order_violations).sum::<u64>();
    report.push("sep", n, k, None, "events", events as f64, None, reps);
    report.push("sep", n, k, None, "gap_violations", gap as f64, None, reps);
    report.push(
        "sep",
        n,
        k,
        None,
        "area_step_violations",
        step as f64,
        None,
        reps,
    );
    report.push(
        "sep",
        n,
        k,
        None,
        "order_violations",
        order as f64,
        None,
        reps,
    );
    let first_bad = |f: fn(&PairTrace) -> u64| {
        traces
            .iter()
            .find(|t| f(t) > 0)
            .map(|t| t.replay_token.clone())
    };
    report.verdict(
        "d - u in {0,1,2} at every event",
        gap == 0,
        first_bad(|t| t.gap_violations),
    );
    report.verdict(
        "area moves by one only at active points",
        step == 0,
        first_bad(|t| t.area_step_violations),
    );
    report.verdict(
        "top stays above bottom",
        order == 0,
        first_bad(|t| t.order_violations),
    );

    let areas: Vec<Vec<f64>> = (0..grid.len())
        .map(|j| {
            traces
                .iter()
                .map(|t| sample_at(t, grid[j]) as f64)
                .collect()
        })
        .collect();
    for (j, &t) in grid.iter().enumerate() {
        let (m, se) = mean_se(&areas[j]);
        report.push("sep", n, k, Some(t), "mean_area", m, Some(se), reps);
    }
    let mut witness = None;
    for j in 1..grid.len() {
        let diffs: Vec<f64> = areas[j]
            .iter()
            .zip(&areas[j - 1])
            .map(|(a, b)| a - b)
            .collect();
        let (m, se) = mean_se(&diffs);
        if m > 4.0 * se && witness.is_none() {
            witness = Some(format!(
                "mean area rises by {m} (SE {se}) between t={} and t={}",
                grid[j - 1],
                grid[j]
            ));
        }
    }
    report.verdict(
        "mean area nonincreasing within 4 SE",
        witness.is_none(),
        witness,
    );

    for (idx, &(i, level)) in thresholds.iter().enumerate() {
        let hit: Vec<f64> = traces.iter().filter_map(|t| t.crossings[idx]).collect();
        let (m, se) = mean_se(&hit);
        report.push(
            "sep",
            n,
            k,
            Some(level),
            &format!("tau_{i}"),
            m,
            Some(se),
            hit.len() as u64,
        );
    }
    let merges: Vec<Option<f64>> = traces.iter().map(|t| t.merge_time).collect();
    let mut merged: Vec<f64> = merges.iter().flatten().copied().collect();
    merged.sort_by(f64::total_cmp);
    let (frac, frac_se) = proportion(merged.len() as u64, reps);
    report.push(
        "sep",
        n,
        k,
        Some(p.horizon),
        "merged_fraction",
        frac,
        Some(frac_se),
        reps,
    );
    if !merged.is_empty() {
        for q in [0.1, 0.5, 0.9] {
            report.push(
                "sep",
                n,
                k,
                None,
                &format!("merge_q{q}"),
                quantile(&merged, q),
                None,
                merged.len() as u64,
            );
        }
    }
    if p.n == 2 && p.k == 1 {
        let d = ks_exponential(&merges, 2.0, p.horizon);
        let crit = KS_CRITICAL_1PCT / (reps as f64).sqrt();
        report.push("sep", n, k, None, "ks_distance", d, None, reps);
        report.verdict(
            "merge time ~ Exp(2) by KS at 1%",
            d <= crit,
            (d > crit).then(|| format!("D = {d} > {crit}")),
        );
    }
    Ok(report)
}

/// Area at time `t`, from the samples on the grid.
fn sample_at(trace: &PairTrace, t: f64) -> i64 {
    let mut area = trace.samples.first().map_or(0, |s| s.area);
    for s in &trace.samples {
        if s.time <= t {
            area = s.area;
        } else {
            break;
        }
    }
    area
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_sites_curve() {
        let p = TvUpperParams {
            n: 2,
            k: 1,
            times: vec![0.0, 1.0],
            replicas: 20_000,
            seed: 3,
            coupling: Coupling::Grand,
        };
        let r = tv_upper_curve(&p).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        let row = &r.metric("unmerged_grand")[1];
        assert!((row.value - (-2.0f64).exp()).abs() < 3.0 * row.stderr.unwrap());
        let again = tv_upper_curve(&p).unwrap();
        assert_eq!(again, r);
        assert!(tv_upper_curve(&TvUpperParams { replicas: 0, ..p }).is_err());
    }

    #[test]
    fn thresholds_follow_exponent() {
        let t = area_thresholds(16, 8, 0.25);
        assert_eq!(t.iter().map(|x| x.0).collect::<Vec<_>>(), vec![2, 3]);
        assert!((t[0].1 - 8f64.powf(-0.25) * 16.0).abs() < 1e-12);
    }

    #[test]
    fn ks_on_exact_quantiles() {
        let m = 1000;
        let times: Vec<Option<f64>> = (0..m)
            .map(|i| Some(-((1.0 - (i as f64 + 0.5) / m as f64).ln()) / 2.0))
            .collect();
        assert!(ks_exponential(&times, 2.0, 100.0) <= 0.5 / m as f64 + 1e-12);
    }

    #[test]
    fn small_audit_passes() {
        let p = AreaAuditParams {
            n: 8,
            k: 4,
            horizon: 60.0,
            replicas: 300,
            seed: 1,
            eps: 0.1,
            grid_points: 8,
        };
        let r = area_audit(&p).unwrap();
        assert!(r.passed(), "{:?}", r.failures());
        assert_eq!(r.metric("mean_area")[0].value, 16.0);
    }
}
