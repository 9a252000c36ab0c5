use rand::Rng as _;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::path::{bottom_scaled, top_scaled, LatticePath, PathPair};
use crate::rng::{rng_from_seed, Rng};

/// Clock ring at the space-height point `(x, level)`: an up ring turns a
/// local minimum sitting there into a maximum, a down ring does the reverse.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CornerFlipEvent {
    pub time: f64,
    pub x: usize,
    /// `N·z`.
    pub level: i64,
    pub up: bool,
}

/// Up and down clocks of rate 1 at every admissible point `(x, z)`, sampled
/// as one merged process of rate `2|Θ|` with the point and direction drawn
/// uniformly.
#[derive(Clone, Debug)]
pub struct CornerFlipStream {
    n: usize,
    k: usize,
    horizon: f64,
    seed: u64,
    theta: Vec<(usize, i64)>,
}

impl CornerFlipStream {
    pub fn new(n: usize, k: usize, horizon: f64, seed: u64) -> Result<Self> {
        check_range("N", n as i64, 2, i64::MAX)?;
        check_range("k", k as i64, 1, n as i64 - 1)?;
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!("horizon {horizon}")));
        }
        let mut theta = Vec::new();
        for x in 1..n {
            let mut z = bottom_scaled(n, k, x);
            while z <= top_scaled(n, k, x) {
                theta.push((x, z));
                z += n as i64;
            }
        }
        Ok(CornerFlipStream {
            n,
            k,
            horizon,
            seed,
            theta,
        })
    }

    /// Admissible points `(x, N·z)`.
    pub fn theta(&self) -> &[(usize, i64)] {
        &self.theta
    }

    pub fn events(&self) -> impl Iterator<Item = CornerFlipEvent> + '_ {
        let mut rng: Rng = rng_from_seed(self.seed);
        let choices = 2 * self.theta.len();
        let rate = choices as f64;
        let mut time = 0.0;
        let horizon = self.horizon;
        std::iter::from_fn(move || {
            let gap: f64 = rng.sample(Exp1);
            time += gap / rate;
            let pick = rng.random_range(0..choices);
            let (x, level) = self.theta[pick / 2];
            Some(CornerFlipEvent {
                time,
                x,
                level,
                up: pick % 2 == 0,
            })
        })
        .take_while(move |e| e.time <= horizon)
    }

    pub fn replay_token(&self) -> String {
        format!(
            "seed={};N={};k={};horizon={}",
            self.seed, self.n, self.k, self.horizon
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Corner {
    TopMin,
    TopMax,
    BottomMin,
    BottomMax,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivePoint {
    pub x: usize,
    pub level: i64,
    pub corner: Corner,
}

/// Flippable corners next to the region where the paths differ. Flipping a
/// point of `up` increases the area between the paths; flipping a point of
/// `down` decreases it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActivePoints {
    pub up: Vec<ActivePoint>,
    pub down: Vec<ActivePoint>,
}

impl ActivePoints {
    pub fn u(&self) -> usize {
        self.up.len()
    }

    pub fn d(&self) -> usize {
        self.down.len()
    }
}

fn is_active(top: &LatticePath, bottom: &LatticePath, x: usize) -> bool {
    (x - 1..=x + 1).any(|y| top.scaled(y) > bottom.scaled(y))
}

fn counts(top: &LatticePath, bottom: &LatticePath) -> (usize, usize) {
    let (mut u, mut d) = (0, 0);
    for x in 1..top.n() {
        if !is_active(top, bottom, x) {
            continue;
        }
        u += usize::from(top.is_local_min(x)) + usize::from(bottom.is_local_max(x));
        d += usize::from(top.is_local_max(x)) + usize::from(bottom.is_local_min(x));
    }
    (u, d)
}

pub fn active_points(pair: &PathPair) -> ActivePoints {
    let (top, bottom) = (pair.top(), pair.bottom());
    let mut up = Vec::new();
    let mut down = Vec::new();
    for x in 1..top.n() {
        if !is_active(top, bottom, x) {
            continue;
        }
        let at = |path: &LatticePath, corner| ActivePoint {
            x,
            level: path.scaled(x),
            corner,
        };
        if top.is_local_min(x) {
            up.push(at(top, Corner::TopMin));
        }
        if top.is_local_max(x) {
            down.push(at(top, Corner::TopMax));
        }
        if bottom.is_local_min(x) {
            down.push(at(bottom, Corner::BottomMin));
        }
        if bottom.is_local_max(x) {
            up.push(at(bottom, Corner::BottomMax));
        }
    }
    ActivePoints { up, down }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceSample {
    pub time: f64,
    pub area: i64,
    pub u: usize,
    pub d: usize,
    pub merged: bool,
}

/// Record of a coupled top/bottom run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairTrace {
    pub samples: Vec<TraceSample>,
    pub merge_time: Option<f64>,
    /// Clock rings processed.
    pub events: u64,
    /// Rings that moved at least one path.
    pub moves: u64,
    /// States after a move with `d − u` outside `{0, 1, 2}`.
    pub gap_violations: u64,
    /// Area changes by more than 1, or at an inactive coordinate.
    pub area_step_violations: u64,
    /// Moves after which the paths were out of order.
    pub order_violations: u64,
    pub min_gap: i64,
    pub max_gap: i64,
    /// First time the area is at most each requested threshold.
    pub crossings: Vec<Option<f64>>,
    pub replay_token: String,
}

impl PairTrace {
    /// CSV with columns `time, area, u, d, merged`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time,area,u,d,merged\n");
        for s in &self.samples {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                s.time,
                s.area,
                s.u,
                s.d,
                u8::from(s.merged)
            ));
        }
        out
    }

    pub fn violations(&self) -> u64 {
        self.gap_violations + self.area_step_violations + self.order_violations
    }
}

#[derive(Clone, Debug)]
pub struct CornerFlipRun {
    pub trace: PairTrace,
    pub pair: PathPair,
}

pub fn corner_flip_run(
    n: usize,
    k: usize,
    horizon: f64,
    seed: u64,
    sample_grid: &[f64],
) -> Result<CornerFlipRun> {
    corner_flip_run_with(n, k, horizon, seed, sample_grid, &[])
}

/// Runs the coupling from `(∧, ∨)` until the horizon or the merge, also
/// recording when the area first drops to each of `thresholds`.
pub fn corner_flip_run_with(
    n: usize,
    k: usize,
    horizon: f64,
    seed: u64,
    sample_grid: &[f64],
    thresholds: &[f64],
) -> Result<CornerFlipRun> {
    let stream = CornerFlipStream::new(n, k, horizon, seed)?;
    let mut pair = PathPair::extremal(n, k)?;
    let mut grid: Vec<f64> = sample_grid
        .iter()
        .copied()
        .filter(|&t| t >= 0.0 && t <= horizon)
        .collect();
    grid.sort_by(f64::total_cmp);

    let mut area = pair.area();
    let (mut u, mut d) = counts(pair.top(), pair.bottom());
    let mut trace = PairTrace {
        samples: Vec::with_capacity(grid.len() + 1),
        merge_time: None,
        events: 0,
        moves: 0,
        gap_violations: 0,
        area_step_violations: 0,
        order_violations: 0,
        min_gap: d as i64 - u as i64,
        max_gap: d as i64 - u as i64,
        crossings: thresholds
            .iter()
            .map(|&h| (area as f64 <= h).then_some(0.0))
            .collect(),
        replay_token: stream.replay_token(),
    };
    let gap_ok = |g: i64| (0..=2).contains(&g);
    if !gap_ok(d as i64 - u as i64) {
        trace.gap_violations += 1;
    }
    let mut next = 0;

    for ev in stream.events() {
        while next < grid.len() && grid[next] < ev.time {
            trace.samples.push(TraceSample {
                time: grid[next],
                area,
                u,
                d,
                merged: false,
            });
            next += 1;
        }
        trace.events += 1;
        let (top, bottom) = pair.parts_mut();
        let active = is_active(top, bottom, ev.x);
        let moved_top = top.scaled(ev.x) == ev.level && top.push(ev.x, ev.up);
        let moved_bottom = bottom.scaled(ev.x) == ev.level && bottom.push(ev.x, ev.up);
        if !(moved_top || moved_bottom) {
            continue;
        }
        trace.moves += 1;
        let step = if ev.up { 1 } else { -1 };
        let delta = i64::from(moved_top) * step - i64::from(moved_bottom) * step;
        if delta != 0 && !active {
            trace.area_step_violations += 1;
        }
        area += delta;
        if top.scaled(ev.x) < bottom.scaled(ev.x) {
            trace.order_violations += 1;
        }
        (u, d) = counts(top, bottom);
        let gap = d as i64 - u as i64;
        trace.min_gap = trace.min_gap.min(gap);
        trace.max_gap = trace.max_gap.max(gap);
        if !gap_ok(gap) {
            trace.gap_violations += 1;
        }
        for (slot, &h) in trace.crossings.iter_mut().zip(thresholds) {
            if slot.is_none() && area as f64 <= h {
                *slot = Some(ev.time);
            }
        }
        if area == 0 {
            if !pair.merged() {
                trace.area_step_violations += 1;
            }
            trace.merge_time = Some(ev.time);
            trace.samples.push(TraceSample {
                time: ev.time,
                area,
                u,
                d,
                merged: true,
            });
            break;
        }
    }
    let merged = trace.merge_time.is_some();
    for &t in &grid[next..] {
        trace.samples.push(TraceSample {
            time: t,
            area,
            u,
            d,
            merged,
        });
    }
    trace.samples.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(CornerFlipRun { trace, pair })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::extremal_paths;

    #[test]
    fn theta_counts_levels() {
        let s = CornerFlipStream::new(4, 2, 1.0, 0).unwrap();
        assert_eq!(
            s.theta(),
            &[(1, -2), (1, 2), (2, -4), (2, 0), (2, 4), (3, -2), (3, 2)]
        );
        assert!(CornerFlipStream::new(4, 0, 1.0, 0).is_err());
    }

    #[test]
    fn extremal_active_points() {
        let pair = PathPair::extremal(4, 2).unwrap();
        let a = active_points(&pair);
        assert!(a.up.is_empty());
        assert_eq!(
            a.down,
            vec![
                ActivePoint {
                    x: 2,
                    level: 4,
                    corner: Corner::TopMax
                },
                ActivePoint {
                    x: 2,
                    level: -4,
                    corner: Corner::BottomMin
                }
            ]
        );
        let (top, _) = extremal_paths(4, 2).unwrap();
        let merged = PathPair::new(top.clone(), top).unwrap();
        assert_eq!(active_points(&merged).d(), 0);
        assert_eq!(active_points(&merged).u(), 0);
    }

    #[test]
    fn runs_are_audited_and_reproducible() {
        let grid = [0.0, 1.0, 5.0, 20.0];
        for seed in 0..50 {
            let run = corner_flip_run(12, 5, 200.0, seed, &grid).unwrap();
            let t = &run.trace;
            assert_eq!(t.violations(), 0);
            assert!(t.min_gap >= 0 && t.max_gap <= 2);
            assert_eq!(t.samples[0].area, 35);
            if t.merge_time.is_some() {
                assert!(run.pair.merged());
                assert!(t.samples.iter().filter(|s| s.merged).all(|s| s.area == 0));
            }
            let again = corner_flip_run(12, 5, 200.0, seed, &grid).unwrap();
            assert_eq!(again.trace, run.trace);
        }
    }

    #[test]
    fn two_sites_merge_at_first_useful_ring() {
        let reps = 10_000;
        let merged = (0..reps)
            .filter(|&s| {
                corner_flip_run(2, 1, 1.0, s, &[])
                    .unwrap()
                    .trace
                    .merge_time
                    .is_some()
            })
            .count() as f64
            / reps as f64;
        let p = 1.0 - (-2.0f64).exp();
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((merged - p).abs() < 3.0 * se, "{merged} vs {p}");
    }

    #[test]
    fn crossings_are_monotone() {
        let run = corner_flip_run_with(16, 8, 500.0, 3, &[], &[40.0, 20.0, 5.0]).unwrap();
        let c: Vec<f64> = run.trace.crossings.iter().map(|c| c.unwrap()).collect();
        assert!(c[0] <= c[1] && c[1] <= c[2]);
    }

    #[test]
    fn trace_csv_header() {
        let run = corner_flip_run(4, 2, 1.0, 1, &[0.5]).unwrap();
        assert!(run.trace.to_csv().starts_with("time,area,u,d,merged\n0.5,"));
    }
}
