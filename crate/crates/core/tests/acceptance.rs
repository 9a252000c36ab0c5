//! Acceptance suite: one line per criterion, nonzero exit if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng as _;

use shufflecut::dynamics::{apply_update, sample_update_stream, CensoringScheme};
use shufflecut::exact::{
    censoring_comparison, discrete_profile, enumerate, evolve, evolve_many, fkg_check,
    holley_check, indicator, poisson_sandwich, push_to_exclusion, random_increasing_event,
    total_variation, tv_to_uniform, Distribution, Method, Model, StateSpace, DEFAULT_STATE_CAP,
};
use shufflecut::lab::cutoff::default_horizon;
use shufflecut::lab::mc::height_field_means;
use shufflecut::lab::{
    analytic_suite, area_audit, cutoff_profile, separation_profile, wilson_sandwich,
    AnalyticParams, AreaAuditParams, CutoffParams, ExperimentReport, KRule, Mode, ModelKind,
    SeparationParams, WilsonSandwichParams,
};
use shufflecut::rng::{rng_from_seed, substream_seed, Rng};
use shufflecut::spectral::{
    heat_profile, identity_row, killed_two_walk_direct, killed_walk_starts, lambda_n, mean_bounds,
    KilledTwoWalk, MeanStart,
};
use shufflecut::Permutation;

type Outcome = Result<String, String>;

fn within(elapsed: Duration, limit: Duration, detail: String) -> Outcome {
    if elapsed <= limit {
        Ok(detail)
    } else {
        Err(format!("{detail}; took {elapsed:.2?}, limit {limit:?}"))
    }
}

fn report_outcome(r: &ExperimentReport) -> Outcome {
    let failures: Vec<String> = r
        .failures()
        .iter()
        .map(|v| format!("{} ({})", v.check, v.witness.as_deref().unwrap_or("")))
        .collect();
    if failures.is_empty() {
        Ok(format!("{} verdicts pass", r.verdicts.len()))
    } else {
        Err(failures.join("; "))
    }
}

fn grid(t_max: f64, points: usize) -> Vec<f64> {
    (0..points)
        .map(|i| t_max * i as f64 / (points - 1) as f64)
        .collect()
}

fn analytic() -> Outcome {
    let start = Instant::now();
    let r = analytic_suite(&AnalyticParams::default()).map_err(|e| e.to_string())?;
    let detail = report_outcome(&r)?;
    within(start.elapsed(), Duration::from_secs(1), detail)
}

fn projection() -> Outcome {
    let start = Instant::now();
    let at = enumerate(Model::shuffle(5).unwrap(), DEFAULT_STATE_CAP).unwrap();
    let times = grid(4.0, 10);
    let from_id = evolve_many(
        &at,
        &Distribution::point_mass(&at, 0),
        &times,
        Method::Uniformization,
    )
    .unwrap();
    let mut worst = 0.0f64;
    for k in [1, 2] {
        let sep = enumerate(Model::exclusion(5, k).unwrap(), DEFAULT_STATE_CAP).unwrap();
        let direct = evolve_many(
            &sep,
            &Distribution::point_mass(&sep, sep.top_index()),
            &times,
            Method::Uniformization,
        )
        .unwrap();
        for (a, d) in from_id.iter().zip(&direct) {
            let pushed = push_to_exclusion(&at, a, &sep).unwrap();
            worst = worst.max(total_variation(&pushed, d).unwrap());
        }
    }
    if worst >= 1e-9 {
        return Err(format!("largest discrepancy {worst:e}"));
    }
    within(
        start.elapsed(),
        Duration::from_secs(10),
        format!("largest discrepancy {worst:.1e}"),
    )
}

fn random_scheme(n: usize, horizon: f64, rng: &mut Rng) -> CensoringScheme {
    let pieces = rng.random_range(1..=4);
    let mut starts: Vec<f64> = (1..pieces)
        .map(|_| rng.random_range(0.0..horizon))
        .collect();
    starts.sort_by(f64::total_cmp);
    starts.dedup();
    starts.insert(0, 0.0);
    let pieces = starts
        .into_iter()
        .map(|s| (s, (1..n).filter(|_| rng.random_bool(0.5)).collect()))
        .collect();
    CensoringScheme::new(n, horizon, pieces).unwrap()
}

fn censoring() -> Outcome {
    let start = Instant::now();
    let mut rng = rng_from_seed(2024);
    let mut failures = 0;
    let mut checks = 0;
    for n in [3, 4] {
        let space = enumerate(Model::shuffle(n).unwrap(), DEFAULT_STATE_CAP).unwrap();
        let id = Distribution::point_mass(&space, 0);
        for _ in 0..50 {
            let horizon = rng.random_range(0.05..3.0);
            let scheme = random_scheme(n, horizon, &mut rng);
            let full = tv_to_uniform(&evolve(&space, &id, None, horizon).unwrap());
            let censored = tv_to_uniform(&evolve(&space, &id, Some(&scheme), horizon).unwrap());
            failures += usize::from(censored < full - 1e-9);
            checks += 1;
        }
        for _ in 0..50 {
            let len = rng.random_range(1..=12);
            let sites: Vec<usize> = (0..len).map(|_| rng.random_range(1..n)).collect();
            let omit: Vec<usize> = (0..len).filter(|_| rng.random_bool(0.3)).collect();
            let c = censoring_comparison(&space, &id, &sites, &omit).unwrap();
            failures += usize::from(!c.holds(1e-9));
            checks += 1;
        }
    }
    if failures > 0 {
        return Err(format!("{failures} of {checks} comparisons fail"));
    }
    within(
        start.elapsed(),
        Duration::from_secs(60),
        format!("{checks} comparisons"),
    )
}

fn random_increasing_function(space: &StateSpace, rng: &mut Rng) -> Vec<i64> {
    let coords = space.heights(0).len();
    let picks: Vec<(usize, i64)> = (0..rng.random_range(1..=3))
        .map(|_| (rng.random_range(0..coords), rng.random_range(1..=3)))
        .collect();
    (0..space.size())
        .map(|i| {
            let h = space.heights(i);
            picks.iter().map(|&(c, w)| w * h[c]).sum()
        })
        .collect()
}

fn nonempty_increasing(space: &StateSpace, rng: &mut Rng) -> Vec<bool> {
    loop {
        let e = random_increasing_event(space, rng);
        if e.iter().any(|&b| b) {
            return e;
        }
    }
}

fn fkg_holley() -> Outcome {
    let mut rng = rng_from_seed(7);
    let at = enumerate(Model::shuffle(4).unwrap(), DEFAULT_STATE_CAP).unwrap();
    let mut fkg_fail = 0;
    for _ in 0..200 {
        let a = random_increasing_event(&at, &mut rng);
        let b = random_increasing_event(&at, &mut rng);
        let c = fkg_check(&at, &indicator(&a), &indicator(&b)).map_err(|e| e.to_string())?;
        fkg_fail += usize::from(!c.pass);
    }
    let sep = enumerate(Model::exclusion(6, 3).unwrap(), DEFAULT_STATE_CAP).unwrap();
    let mut holley_fail = 0;
    for i in 0..100 {
        let a = nonempty_increasing(&sep, &mut rng);
        // Down-sets, and the whole space, contain min(a, b) whenever they contain b.
        let b: Vec<bool> = if i % 4 == 0 {
            vec![true; sep.size()]
        } else {
            loop {
                let up = nonempty_increasing(&sep, &mut rng);
                if up.iter().any(|&u| !u) {
                    break up.iter().map(|&u| !u).collect();
                }
            }
        };
        let f = random_increasing_function(&sep, &mut rng);
        let c = holley_check(&sep, &a, &b, &f).map_err(|e| e.to_string())?;
        holley_fail += usize::from(!c.pass);
    }
    if fkg_fail + holley_fail > 0 {
        return Err(format!("{fkg_fail} FKG and {holley_fail} Holley failures"));
    }
    Ok("200 FKG pairs, 100 Holley instances".into())
}

fn sandwich() -> Outcome {
    let start = Instant::now();
    let (n, k) = (8, 4);
    let times = grid(2.0 * default_horizon(ModelKind::Sep, n, k).unwrap(), 32);
    let r = wilson_sandwich(&WilsonSandwichParams {
        n,
        k,
        times,
        state_cap: DEFAULT_STATE_CAP,
    })
    .map_err(|e| e.to_string())?;
    let detail = report_outcome(&r)?;
    within(
        start.elapsed(),
        Duration::from_secs(30),
        format!("32 points, {detail}"),
    )
}

fn heat() -> Outcome {
    let mut bound_fail = 0;
    for n in [8, 16, 32, 64] {
        let times = grid(2.0 * (n * n) as f64 / 10.0, 16);
        for y in 0..=n {
            let profile = heat_profile(&identity_row(n, y), &times).unwrap();
            for (j, &t) in times.iter().enumerate() {
                let b = mean_bounds(n, y, t, MeanStart::Identity).unwrap();
                let row = profile.row(j);
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                bound_fail += usize::from(max > b.upper + 1e-12);
                bound_fail += row
                    .iter()
                    .zip(&b.lower)
                    .filter(|(f, l)| **f < **l - 1e-12)
                    .count();
            }
        }
    }
    if bound_fail > 0 {
        return Err(format!("{bound_fail} bound violations"));
    }
    let n = 16;
    let probe_times = [10.0, 20.0, 40.0, 80.0];
    let means = height_field_means(n, &probe_times, 10_000, 99).map_err(|e| e.to_string())?;
    let (mut hits, mut total) = (0, 0);
    for y in 1..n {
        let profile = heat_profile(&identity_row(n, y), &probe_times).unwrap();
        for (j, _) in probe_times.iter().enumerate() {
            for x in 1..n {
                let (mean, se) = means[j][x * (n + 1) + y];
                hits += usize::from((mean - profile.at(j, x)).abs() <= 4.0 * se);
                total += 1;
            }
        }
    }
    let share = hits as f64 / total as f64;
    let detail = format!("bounds hold; MC within 4 SE at {hits}/{total} probe points");
    if share >= 0.95 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn killed_walk() -> Outcome {
    let mut worst = 0.0f64;
    let mut bound_fail = 0;
    for n in 2..=20 {
        let walk = KilledTwoWalk::new(n).unwrap();
        let starts = killed_walk_starts(n);
        let lam = lambda_n(n).unwrap();
        for t in grid(3.0 * (n * n) as f64 / 10.0, 8) {
            let direct = killed_two_walk_direct(n, t).unwrap();
            for (&(x, y), d) in starts.iter().zip(&direct) {
                let s = walk.survival(x, y, t).unwrap();
                worst = worst.max((s - d).abs());
                bound_fail += usize::from(s > 10.0 * (-lam * t).exp());
            }
        }
    }
    if worst >= 1e-8 || bound_fail > 0 {
        return Err(format!(
            "largest gap {worst:e}, {bound_fail} bound violations"
        ));
    }
    Ok(format!("largest gap {worst:.1e}"))
}

fn poissonization() -> Outcome {
    let mut failures = 0;
    for n in [3, 4] {
        let space = enumerate(Model::shuffle(n).unwrap(), DEFAULT_STATE_CAP).unwrap();
        let id = Distribution::point_mass(&space, 0);
        let exact = discrete_profile(&space, &id, 200).unwrap();
        for (step, d) in exact.iter().enumerate() {
            let t = step as f64 / (2.0 * (n - 1) as f64);
            let b = poisson_sandwich(&space, &id, step, t).map_err(|e| e.to_string())?;
            failures += usize::from(!b.contains(*d, 1e-9));
        }
    }
    if failures > 0 {
        return Err(format!("{failures} steps outside the bracket"));
    }
    Ok("402 steps bracketed".into())
}

fn corner_flip() -> Outcome {
    let (n, k) = (16, 8);
    let big = area_audit(&AreaAuditParams {
        n,
        k,
        horizon: default_horizon(ModelKind::Sep, n, k).unwrap(),
        replicas: 10_000,
        seed: 31,
        eps: 0.01,
        grid_points: 32,
    })
    .map_err(|e| e.to_string())?;
    let small = area_audit(&AreaAuditParams {
        n: 2,
        k: 1,
        horizon: 8.0,
        replicas: 10_000,
        seed: 32,
        eps: 0.01,
        grid_points: 16,
    })
    .map_err(|e| e.to_string())?;
    let a = report_outcome(&big)?;
    let b = report_outcome(&small)?;
    let ks = small
        .metric("ks_distance")
        .first()
        .map(|r| r.value)
        .unwrap_or(f64::NAN);
    Ok(format!("N=16: {a}; N=2: {b}, KS distance {ks:.4}"))
}

fn random_perm(n: usize, rng: &mut Rng) -> Permutation {
    let mut labels: Vec<usize> = (1..=n).collect();
    labels.shuffle(rng);
    Permutation::new(labels).unwrap()
}

fn order_preservation() -> Outcome {
    let mut rng = rng_from_seed(5);
    let mut violations = 0u64;
    let mut runs = 0u64;
    for n in 4..=8 {
        for pair in 0..1000u64 {
            let lower = random_perm(n, &mut rng);
            let mut upper = lower.clone();
            for _ in 0..rng.random_range(0..3 * n) {
                upper = apply_update(&upper, rng.random_range(1..n), true).unwrap();
            }
            if !lower.leq(&upper).unwrap() {
                return Err(format!("generated pair {lower} / {upper} is not ordered"));
            }
            for s in 0..100u64 {
                let stream =
                    sample_update_stream(n, 1.5, substream_seed(n as u64, pair * 100 + s)).unwrap();
                let (mut lo, mut hi) = (lower.clone(), upper.clone());
                for ev in stream.events() {
                    lo = apply_update(&lo, ev.site, ev.bit).unwrap();
                    hi = apply_update(&hi, ev.site, ev.bit).unwrap();
                    violations += u64::from(!lo.leq(&hi).unwrap());
                }
                runs += 1;
            }
        }
    }
    if violations > 0 {
        return Err(format!("{violations} violations over {runs} runs"));
    }
    Ok(format!("{runs} coupled runs, checked at every event"))
}

fn cutoff_trend() -> Outcome {
    let start = Instant::now();
    let r = cutoff_profile(&CutoffParams {
        model: ModelKind::Sep,
        ns: vec![8, 12, 16, 20, 24],
        k: KRule::Half,
        eps: vec![0.25, 0.5, 0.75],
        mode: Mode::Exact,
        replicas: 0,
        seed: 0,
        state_cap: DEFAULT_STATE_CAP,
        t_max: None,
    })
    .map_err(|e| e.to_string())?;
    report_outcome(&r)?;
    let windows: Vec<String> = r
        .metric("relative_window")
        .iter()
        .map(|row| format!("{}:{:.4}", row.n, row.value))
        .collect();
    let ratios: Vec<String> = r
        .metric("ratio_eps_0.5")
        .iter()
        .map(|row| format!("{:.3}", row.value))
        .collect();
    within(
        start.elapsed(),
        Duration::from_secs(300),
        format!(
            "relative windows {}; ratios at 1/2 {}",
            windows.join(" "),
            ratios.join(" ")
        ),
    )
}

fn separation_identity() -> Outcome {
    let mut checked = 0;
    for n in 2..=8 {
        for k in 1..n {
            let horizon = 2.0 * default_horizon(ModelKind::Sep, n, k).unwrap();
            let r = separation_profile(&SeparationParams {
                n,
                k,
                times: grid(horizon, 10),
                state_cap: DEFAULT_STATE_CAP,
            })
            .map_err(|e| e.to_string())?;
            report_outcome(&r).map_err(|e| format!("N={n}, k={k}: {e}"))?;
            checked += 1;
        }
    }
    Ok(format!("{checked} (N, k) pairs"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("two-state analytic suite", analytic),
        ("projection consistency", projection),
        ("censoring inequality", censoring),
        ("FKG and Holley by enumeration", fkg_holley),
        ("Wilson sandwich", sandwich),
        ("heat-equation oracle", heat),
        ("killed two-walk", killed_walk),
        ("Poissonization sandwich", poissonization),
        ("corner-flip audits", corner_flip),
        ("order preservation", order_preservation),
        ("cutoff trend", cutoff_trend),
        ("separation identity", separation_identity),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome =
            catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1}s]", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
