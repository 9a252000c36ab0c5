use rand::Rng as _;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{check_range, Error, Result};
use crate::rng::{rng_from_seed, Rng};

/// One clock ring: at `time`, the cards (or sites) `site` and `site + 1` are
/// sorted if `bit` is set and reverse-sorted otherwise.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateEvent {
    pub time: f64,
    pub site: usize,
    pub bit: bool,
}

/// Infinite event source: a Poisson process of intensity `2(N − 1)` with
/// uniformly chosen sites and fair bits.
pub struct UpdateEvents {
    n: usize,
    rate: f64,
    time: f64,
    rng: Rng,
}

impl UpdateEvents {
    pub fn new(n: usize, seed: u64) -> Self {
        UpdateEvents {
            n,
            rate: 2.0 * (n as f64 - 1.0),
            time: 0.0,
            rng: rng_from_seed(seed),
        }
    }
}

impl Iterator for UpdateEvents {
    type Item = UpdateEvent;

    fn next(&mut self) -> Option<UpdateEvent> {
        if self.n < 2 {
            return None;
        }
        let gap: f64 = self.rng.sample(Exp1);
        self.time += gap / self.rate;
        Some(UpdateEvent {
            time: self.time,
            site: self.rng.random_range(1..self.n),
            bit: self.rng.random(),
        })
    }
}

/// A realized, time-ordered stream of update events on `[0, horizon]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UpdateStream {
    n: usize,
    horizon: f64,
    seed: Option<u64>,
    events: Vec<UpdateEvent>,
    ties: usize,
}

pub fn sample_update_stream(n: usize, horizon: f64, seed: u64) -> Result<UpdateStream> {
    check_range("N", n as i64, 2, i64::MAX)?;
    check_horizon(horizon)?;
    let mut ties = 0;
    let mut last = f64::NEG_INFINITY;
    let events: Vec<UpdateEvent> = UpdateEvents::new(n, seed)
        .take_while(|e| e.time <= horizon)
        .inspect(|e| {
            if e.time == last {
                ties += 1;
            }
            last = e.time;
        })
        .collect();
    Ok(UpdateStream {
        n,
        horizon,
        seed: Some(seed),
        events,
        ties,
    })
}

fn check_horizon(horizon: f64) -> Result<()> {
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon {horizon}")));
    }
    Ok(())
}

impl UpdateStream {
    /// Stream from explicit events. Times must be nondecreasing and within
    /// `[0, horizon]`; equal times keep their given order and are counted.
    pub fn from_events(n: usize, horizon: f64, events: Vec<UpdateEvent>) -> Result<Self> {
        check_range("N", n as i64, 2, i64::MAX)?;
        check_horizon(horizon)?;
        let mut ties = 0;
        let mut last = 0.0;
        for e in &events {
            check_range("site", e.site as i64, 1, n as i64 - 1)?;
            if !(e.time >= last && e.time <= horizon) {
                return Err(Error::InvalidParameter(format!(
                    "event time {} out of order or beyond horizon {horizon}",
                    e.time
                )));
            }
            if e.time == last {
                ties += 1;
            }
            last = e.time;
        }
        Ok(UpdateStream {
            n,
            horizon,
            seed: None,
            events,
            ties,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    pub fn events(&self) -> &[UpdateEvent] {
        &self.events
    }

    /// Number of events sharing a time with their predecessor.
    pub fn ties(&self) -> usize {
        self.ties
    }

    /// The events surviving censoring, as a stream without censoring.
    pub fn filtered(&self, scheme: &CensoringScheme) -> Result<UpdateStream> {
        scheme.check_covers(self)?;
        Ok(UpdateStream {
            n: self.n,
            horizon: self.horizon,
            seed: None,
            events: self
                .events
                .iter()
                .filter(|e| scheme.allows(e.time, e.site))
                .copied()
                .collect(),
            ties: self.ties,
        })
    }

    /// `(seed, N, horizon)`, enough to regenerate the stream.
    pub fn replay_token(&self) -> String {
        match self.seed {
            Some(s) => format!("seed={s};N={};horizon={}", self.n, self.horizon),
            None => format!("explicit;N={};horizon={}", self.n, self.horizon),
        }
    }
}

/// Piecewise-constant sets of allowed update sites. Piece `i` covers
/// `[start_i, start_{i+1})`; the last piece runs to the horizon.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CensoringScheme {
    n: usize,
    horizon: f64,
    starts: Vec<f64>,
    allowed: Vec<Vec<bool>>,
}

impl CensoringScheme {
    /// `pieces` lists `(start time, allowed 1-based sites)`; the first start
    /// must be 0 and starts must increase.
    pub fn new(n: usize, horizon: f64, pieces: Vec<(f64, Vec<usize>)>) -> Result<Self> {
        check_range("N", n as i64, 2, i64::MAX)?;
        check_horizon(horizon)?;
        if pieces.is_empty() || pieces[0].0 != 0.0 {
            return Err(Error::InvalidParameter(
                "censoring scheme must start at time 0".into(),
            ));
        }
        let mut starts = Vec::with_capacity(pieces.len());
        let mut allowed = Vec::with_capacity(pieces.len());
        for (i, (start, sites)) in pieces.into_iter().enumerate() {
            if i > 0 && !(start > starts[i - 1] && start <= horizon) {
                return Err(Error::InvalidParameter(format!(
                    "piece start {start} is not increasing within the horizon"
                )));
            }
            let mut mask = vec![false; n - 1];
            for s in sites {
                check_range("site", s as i64, 1, n as i64 - 1)?;
                mask[s - 1] = true;
            }
            starts.push(start);
            allowed.push(mask);
        }
        Ok(CensoringScheme {
            n,
            horizon,
            starts,
            allowed,
        })
    }

    pub fn uncensored(n: usize, horizon: f64) -> Result<Self> {
        CensoringScheme::new(n, horizon, vec![(0.0, (1..n).collect())])
    }

    pub fn censor_all(n: usize, horizon: f64) -> Result<Self> {
        CensoringScheme::new(n, horizon, vec![(0.0, Vec::new())])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    fn piece_at(&self, t: f64) -> usize {
        self.starts.partition_point(|&s| s <= t).saturating_sub(1)
    }

    pub fn allows(&self, t: f64, site: usize) -> bool {
        self.allowed[self.piece_at(t)][site - 1]
    }

    /// `(start, end, allowed sites)` for each piece, clipped to the horizon.
    pub fn pieces(&self) -> Vec<(f64, f64, Vec<usize>)> {
        (0..self.starts.len())
            .map(|i| {
                let end = self.starts.get(i + 1).copied().unwrap_or(self.horizon);
                let sites = (1..self.n).filter(|&s| self.allowed[i][s - 1]).collect();
                (self.starts[i], end, sites)
            })
            .collect()
    }

    pub(crate) fn check_covers(&self, stream: &UpdateStream) -> Result<()> {
        if self.n != stream.n {
            return Err(Error::SizeMismatch {
                left: stream.n,
                right: self.n,
            });
        }
        if self.horizon < stream.horizon {
            return Err(Error::SchemeTooShort {
                scheme: self.horizon,
                stream: stream.horizon,
            });
        }
        Ok(())
    }
}

/// `count` log-spaced times from `t_min` to `t_max` inclusive.
pub fn log_spaced_grid(t_min: f64, t_max: f64, count: usize) -> Vec<f64> {
    match count {
        0 => Vec::new(),
        1 => vec![t_max],
        _ => {
            let (a, b) = (t_min.ln(), t_max.ln());
            (0..count)
                .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
                .collect()
        }
    }
}
