//! Mixing-time location on exact distance profiles, and the Monte Carlo
//! counterpart based on the grand coupling.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::mc::{check_replicas, grand_unmerged};
use super::report::ExperimentReport;
use crate::dynamics::{apply_update, UpdateEvents};
use crate::error::{Error, Result};
use crate::exact::{
    enumerate, evolve_many, tv_to_uniform, Distribution, Method, Model, StateSpace,
};
use crate::perm::Permutation;
use crate::rng::substream_seed;
use crate::spectral::lambda_n;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    At,
    Sep,
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "at" => Ok(ModelKind::At),
            "sep" => Ok(ModelKind::Sep),
            other => Err(Error::Parse(format!(
                "unknown model {other:?}; expected at or sep"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    #[default]
    Exact,
    Mc,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "mc" => Ok(Mode::Mc),
            other => Err(Error::Parse(format!(
                "unknown mode {other:?}; expected exact or mc"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum HalfTag {
    Half,
}

/// Particle count: a fixed `k` or `⌊N/2⌋`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "KRuleRepr", into = "KRuleRepr")]
pub enum KRule {
    Half,
    Fixed(usize),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum KRuleRepr {
    Fixed(usize),
    Tag(HalfTag),
}

impl From<KRuleRepr> for KRule {
    fn from(r: KRuleRepr) -> Self {
        match r {
            KRuleRepr::Fixed(k) => KRule::Fixed(k),
            KRuleRepr::Tag(HalfTag::Half) => KRule::Half,
        }
    }
}

impl From<KRule> for KRuleRepr {
    fn from(r: KRule) -> Self {
        match r {
            KRule::Fixed(k) => KRuleRepr::Fixed(k),
            KRule::Half => KRuleRepr::Tag(HalfTag::Half),
        }
    }
}

impl KRule {
    pub fn resolve(self, n: usize) -> usize {
        match self {
            KRule::Half => n / 2,
            KRule::Fixed(k) => k,
        }
    }
}

impl FromStr for KRule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        if s == "half" {
            return Ok(KRule::Half);
        }
        s.parse()
            .map(KRule::Fixed)
            .map_err(|_| Error::Parse(format!("k must be an integer or \"half\", got {s:?}")))
    }
}

impl fmt::Display for KRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KRule::Half => write!(f, "half"),
            KRule::Fixed(k) => write!(f, "{k}"),
        }
    }
}

/// `m` in the normalization `N² log m`: `N` for the shuffle and
/// `min(k, N − k)` for the exclusion process.
pub fn log_scale(model: ModelKind, n: usize, k: usize) -> f64 {
    match model {
        ModelKind::At => (n as f64).ln(),
        ModelKind::Sep => (k.min(n - k) as f64).ln(),
    }
}

/// Default search horizon `(log m + 1)/λ_N`.
pub fn default_horizon(model: ModelKind, n: usize, k: usize) -> Result<f64> {
    Ok((log_scale(model, n, k).max(0.0) + 1.0) / lambda_n(n)?)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Located {
    pub eps: f64,
    pub t: f64,
    /// Final bracket `(t_lo, tv_lo, t_hi, tv_hi)` with `tv_lo > eps ≥ tv_hi`.
    pub bracket: (f64, f64, f64, f64),
}

/// Coarse grid size and refinement schedule of [`locate_exact`].
pub const COARSE_POINTS: usize = 16;
pub const REFINE_POINTS: usize = 8;
pub const REFINE_ROUNDS: usize = 3;

/// Exact distance profile `(t, ‖P_t − μ‖)` on `COARSE_POINTS` times in
/// `(0, t_max]`, together with each distribution.
fn coarse_profile(
    space: &StateSpace,
    init: &Distribution,
    t_max: f64,
) -> Result<Vec<(f64, f64, Distribution)>> {
    let times: Vec<f64> = (1..=COARSE_POINTS)
        .map(|j| t_max * j as f64 / COARSE_POINTS as f64)
        .collect();
    let dists = evolve_many(space, init, &times, Method::Chebyshev)?;
    let mut out = vec![(0.0, tv_to_uniform(init), init.clone())];
    out.extend(
        times
            .into_iter()
            .zip(dists)
            .map(|(t, d)| (t, tv_to_uniform(&d), d)),
    );
    Ok(out)
}

/// Locates `T(ε) = inf{t : ‖P_t − μ‖ ≤ ε}` for each `ε`: a coarse exact
/// profile on `(0, t_max]`, then rounds of multisection inside the bracket
/// restarted from the stored distribution at its left end, then linear
/// interpolation. The profile is nonincreasing, so brackets are unique.
/// Returns the coarse profile alongside.
pub fn locate_exact(
    space: &StateSpace,
    init: &Distribution,
    eps_list: &[f64],
    t_max: f64,
) -> Result<(Vec<Result<Located>>, Vec<(f64, f64)>)> {
    let coarse = coarse_profile(space, init, t_max)?;
    let profile: Vec<(f64, f64)> = coarse.iter().map(|c| (c.0, c.1)).collect();
    let mut found = Vec::with_capacity(eps_list.len());
    for &eps in eps_list {
        found.push(refine(space, &coarse, eps, t_max));
    }
    Ok((found, profile))
}

fn refine(
    space: &StateSpace,
    coarse: &[(f64, f64, Distribution)],
    eps: f64,
    t_max: f64,
) -> Result<Located> {
    if coarse[0].1 <= eps {
        return Ok(Located {
            eps,
            t: 0.0,
            bracket: (0.0, coarse[0].1, 0.0, coarse[0].1),
        });
    }
    let Some(j) = coarse.iter().position(|c| c.1 <= eps) else {
        return Err(Error::NonBracketing { eps, t_max });
    };
    let (mut t_lo, mut tv_lo) = (coarse[j - 1].0, coarse[j - 1].1);
    let (mut t_hi, mut tv_hi) = (coarse[j].0, coarse[j].1);
    let mut base = coarse[j - 1].2.clone();
    for _ in 0..REFINE_ROUNDS {
        let width = t_hi - t_lo;
        let offsets: Vec<f64> = (1..=REFINE_POINTS)
            .map(|i| width * i as f64 / REFINE_POINTS as f64)
            .collect();
        let mut dists = evolve_many(space, &base, &offsets, Method::Chebyshev)?;
        let tvs: Vec<f64> = dists.iter().map(tv_to_uniform).collect();
        let Some(i) = tvs.iter().position(|&v| v <= eps) else {
            // Rounding at the right end of the bracket; keep the bracket.
            break;
        };
        let start = t_lo;
        if i > 0 {
            t_lo = start + offsets[i - 1];
            tv_lo = tvs[i - 1];
            base = dists.swap_remove(i - 1);
        }
        t_hi = start + offsets[i];
        tv_hi = tvs[i];
    }
    let frac = if tv_lo > tv_hi {
        (tv_lo - eps) / (tv_lo - tv_hi)
    } else {
        1.0
    };
    Ok(Located {
        eps,
        t: t_lo + frac * (t_hi - t_lo),
        bracket: (t_lo, tv_lo, t_hi, tv_hi),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    pub model: ModelKind,
    pub ns: Vec<usize>,
    pub k: KRule,
    pub eps: Vec<f64>,
    pub mode: Mode,
    /// Monte Carlo replicas; unused in exact mode.
    pub replicas: u64,
    pub seed: u64,
    /// Enumeration cap for exact mode.
    pub state_cap: u128,
    /// Search horizon; defaults to `(log m + 1)/λ_N` per `N`.
    pub t_max: Option<f64>,
}

fn eps_key(eps: f64) -> String {
    format!("{eps}")
}

/// Locates `T(ε)` for each `N`, reports normalized ratios and the window
/// `T(¼) − T(¾)` relative to `T(½)`.
pub fn cutoff_profile(p: &CutoffParams) -> Result<ExperimentReport> {
    if p.ns.is_empty() || p.eps.is_empty() {
        return Err(Error::InvalidParameter(
            "need at least one N and one eps".into(),
        ));
    }
    if let Some(e) = p.eps.iter().find(|e| !(**e > 0.0 && **e < 1.0)) {
        return Err(Error::InvalidParameter(format!("eps {e} outside (0, 1)")));
    }
    if p.mode == Mode::Mc {
        check_replicas(p.replicas)?;
    } else {
        for &n in &p.ns {
            let size = match p.model {
                ModelKind::At => Model::shuffle(n)?.size(),
                ModelKind::Sep => Model::exclusion(n, p.k.resolve(n))?.size(),
            };
            if size > p.state_cap {
                return Err(Error::CapExceeded {
                    size,
                    cap: p.state_cap,
                });
            }
        }
    }
    let mut report = ExperimentReport::new("cutoff", p, p.seed);
    let tag = match p.model {
        ModelKind::At => "at",
        ModelKind::Sep => "sep",
    };
    let mut windows: Vec<(usize, f64)> = Vec::new();
    for &n in &p.ns {
        let k = p.k.resolve(n);
        let (model, k_col) = match p.model {
            ModelKind::At => (Model::shuffle(n)?, None),
            ModelKind::Sep => (Model::exclusion(n, k)?, Some(k)),
        };
        let t_max = match p.t_max {
            Some(t) => t,
            None => default_horizon(p.model, n, k)?,
        };
        let reps = if p.mode == Mode::Mc { p.replicas } else { 0 };
        let located: Vec<Result<Located>> = match p.mode {
            Mode::Exact => {
                let space = enumerate(model, p.state_cap)?;
                let init = Distribution::point_mass(&space, space.top_index());
                let (found, profile) = locate_exact(&space, &init, &p.eps, t_max)?;
                for (t, tv) in profile {
                    report.push(tag, n, k_col, Some(t), "tv", tv, None, 0);
                }
                found
            }
            Mode::Mc => locate_mc(p, n, k, t_max, &mut report)?,
        };
        let norm = 2.0 * std::f64::consts::PI.powi(2) / ((n * n) as f64 * log_scale(p.model, n, k));
        let mut times = Vec::new();
        for (eps, res) in p.eps.iter().zip(located) {
            match res {
                Ok(l) => {
                    let name = match p.mode {
                        Mode::Exact => "t_mix",
                        Mode::Mc => "t_merge",
                    };
                    report.push(
                        tag,
                        n,
                        k_col,
                        None,
                        &format!("{name}_eps_{}", eps_key(*eps)),
                        l.t,
                        None,
                        reps,
                    );
                    report.push(
                        tag,
                        n,
                        k_col,
                        None,
                        &format!("ratio_eps_{}", eps_key(*eps)),
                        l.t * norm,
                        None,
                        reps,
                    );
                    times.push((*eps, l.t));
                }
                Err(e) => report.verdict(
                    &format!("profile brackets eps={eps} at N={n}"),
                    false,
                    Some(e.to_string()),
                ),
            }
        }
        let mut sorted = times.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let monotone = sorted.windows(2).all(|w| w[0].1 >= w[1].1);
        report.verdict(
            &format!("T(eps) nonincreasing in eps at N={n}"),
            monotone,
            (!monotone).then(|| format!("{sorted:?}")),
        );
        let at = |e: f64| times.iter().find(|x| x.0 == e).map(|x| x.1);
        if let (Some(a), Some(b), Some(c)) = (at(0.25), at(0.5), at(0.75)) {
            let rel = (a - c) / b;
            report.push(tag, n, k_col, None, "window", a - c, None, reps);
            report.push(tag, n, k_col, None, "relative_window", rel, None, reps);
            windows.push((n, rel));
        }
    }
    if windows.len() >= 2 {
        let bad = windows.windows(2).find(|w| !(w[1].1 < w[0].1));
        report.verdict(
            "relative window strictly decreasing across N",
            bad.is_none(),
            bad.map(|w| format!("N={}: {} then N={}: {}", w[0].0, w[0].1, w[1].0, w[1].1)),
        );
    }
    report.note("normalized ratios are reported only; their limit is asymptotic");
    Ok(report)
}

/// Unmerged fraction of the grand coupling of the two extremal states on a
/// 64-point grid over four times the exact horizon, and the first crossing of each `ε` by interpolation. The
/// crossing upper-bounds `T(ε)` up to sampling error.
fn locate_mc(
    p: &CutoffParams,
    n: usize,
    k: usize,
    t_max: f64,
    report: &mut ExperimentReport,
) -> Result<Vec<Result<Located>>> {
    const POINTS: usize = 64;
    // Coalescence of the extremal states takes longer than mixing.
    let t_max = 4.0 * t_max;
    let times: Vec<f64> = (0..=POINTS)
        .map(|j| t_max * j as f64 / POINTS as f64)
        .collect();
    let per: Vec<Vec<bool>> = (0..p.replicas)
        .into_par_iter()
        .map(|r| {
            let seed = substream_seed(p.seed ^ n as u64, r);
            match p.model {
                ModelKind::Sep => grand_unmerged(n, k, &times, seed),
                ModelKind::At => Ok(shuffle_unmerged(n, &times, seed)),
            }
        })
        .collect::<Result<_>>()?;
    let tag = if p.model == ModelKind::At {
        "at"
    } else {
        "sep"
    };
    let k_col = (p.model == ModelKind::Sep).then_some(k);
    let curve: Vec<f64> = (0..times.len())
        .map(|j| per.iter().filter(|v| v[j]).count() as f64 / p.replicas as f64)
        .collect();
    for (t, v) in times.iter().zip(&curve) {
        let se = (v * (1.0 - v) / p.replicas as f64).sqrt();
        report.push(
            tag,
            n,
            k_col,
            Some(*t),
            "unmerged",
            *v,
            Some(se),
            p.replicas,
        );
    }
    Ok(p.eps
        .iter()
        .map(|&eps| {
            let j = curve
                .iter()
                .position(|&v| v <= eps)
                .ok_or(Error::NonBracketing { eps, t_max })?;
            if j == 0 {
                return Ok(Located {
                    eps,
                    t: 0.0,
                    bracket: (0.0, curve[0], 0.0, curve[0]),
                });
            }
            let (a, b) = (curve[j - 1], curve[j]);
            let frac = if a > b { (a - eps) / (a - b) } else { 1.0 };
            Ok(Located {
                eps,
                t: times[j - 1] + frac * (times[j] - times[j - 1]),
                bracket: (times[j - 1], a, times[j], b),
            })
        })
        .collect())
}

/// Whether the identity and the reversal differ under the grand coupling.
fn shuffle_unmerged(n: usize, times: &[f64], seed: u64) -> Vec<bool> {
    let (mut a, mut b) = (Permutation::identity(n), Permutation::reversal(n));
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
        a = apply_update(&a, ev.site, ev.bit).expect("valid site");
        b = apply_update(&b, ev.site, ev.bit).expect("valid site");
        if a == b {
            break;
        }
    }
    out
}
