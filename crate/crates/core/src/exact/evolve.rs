//! `exp(tL)` applied to distributions.
//!
//! Both chains have generator `L = Λ(P − I)` with `Λ = N − 1` and
//! `P = Λ⁻¹ Σ_x T_x`, where `T_x` exchanges positions `x, x + 1` (a no-op
//! for configurations whose two sites agree). Censoring keeps only the
//! allowed `T_x` and puts the removed mass on the diagonal. `P` is symmetric,
//! so the same operator propagates distributions.
//!
//! Two expansions are available: uniformization (Poisson mixture of powers
//! of `P`) and a Chebyshev expansion in `P` with modified-Bessel weights,
//! which needs about `√(Λt)` products instead of `Λt`.

use rayon::prelude::*;

use super::dist::{tv_to_uniform, Distribution};
use super::space::StateSpace;
use crate::dynamics::CensoringScheme;
use crate::error::{Error, Result};

/// Bound on the discarded tail of either expansion.
pub const TRUNCATION: f64 = 1e-13;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Method {
    #[default]
    Uniformization,
    Chebyshev,
}

const ROWS: usize = 1 << 12;

/// `out = P_C v` where `allowed[x − 1]` marks the allowed sites.
fn apply_jump(space: &StateSpace, allowed: &[bool], v: &[f64], out: &mut [f64]) {
    let sites = space.n() - 1;
    let lam = sites as f64;
    let used: Vec<usize> = (0..sites).filter(|&s| allowed[s]).collect();
    let stay = (sites - used.len()) as f64 / lam;
    let inv = 1.0 / lam;
    let table = space.neighbor_rows();
    let full = used.len() == sites;
    out.par_chunks_mut(ROWS).enumerate().for_each(|(c, chunk)| {
        let base = c * ROWS;
        for (off, slot) in chunk.iter_mut().enumerate() {
            let i = base + off;
            let row = &table[i * sites..(i + 1) * sites];
            let mut acc = 0.0;
            if full {
                for &j in row {
                    acc += v[j as usize];
                }
            } else {
                for &s in &used {
                    acc += v[row[s] as usize];
                }
            }
            *slot = acc * inv + stay * v[i];
        }
    });
}

fn axpy(acc: &mut [f64], w: f64, x: &[f64]) {
    acc.par_chunks_mut(ROWS)
        .zip(x.par_chunks(ROWS))
        .for_each(|(a, b)| {
            for (p, q) in a.iter_mut().zip(b) {
                *p += w * q;
            }
        });
}

/// Poisson(m) weights `w_0, …, w_K` with a certified tail `< TRUNCATION`,
/// built outwards from the mode and normalized.
pub fn poisson_weights(m: f64) -> Vec<f64> {
    if m <= 0.0 {
        return vec![1.0];
    }
    let mode = m.floor() as usize;
    let mut up = vec![1.0f64];
    let mut n = mode;
    loop {
        let r = m / (n as f64 + 1.0);
        let w = *up.last().expect("nonempty");
        if r < 1.0 && w * r / (1.0 - r) < TRUNCATION * 1e-3 {
            break;
        }
        up.push(w * r);
        n += 1;
    }
    let mut out = vec![0.0; mode];
    let mut w = 1.0f64;
    for j in (1..=mode).rev() {
        w *= j as f64 / m;
        out[j - 1] = w;
    }
    out.extend(up);
    let total: f64 = out.iter().sum();
    out.iter_mut().for_each(|w| *w /= total);
    out
}

/// Weights `b_k` with `exp(m(P − I)) = Σ_k b_k T_k(P)`: `b_0 = e^{−m} I_0(m)`
/// and `b_k = 2e^{−m} I_k(m)`, computed by normalized backward recurrence.
pub fn chebyshev_weights(m: f64) -> Vec<f64> {
    if m <= 0.0 {
        return vec![1.0];
    }
    let start = (m + 40.0 * m.sqrt() + 60.0).ceil() as usize;
    let mut vals = vec![0.0f64; start + 2];
    vals[start] = 1e-300;
    for k in (1..=start).rev() {
        vals[k - 1] = (2.0 * k as f64 / m) * vals[k] + vals[k + 1];
        if vals[k - 1] > 1e250 {
            for v in &mut vals[k - 1..] {
                *v *= 1e-250;
            }
        }
    }
    let norm = vals[0] + 2.0 * vals[1..].iter().sum::<f64>();
    let mut out: Vec<f64> = vals
        .iter()
        .enumerate()
        .map(|(k, v)| if k == 0 { v / norm } else { 2.0 * v / norm })
        .collect();
    let mut tail = 0.0;
    let mut cut = out.len();
    while cut > 1 && tail + out[cut - 1] < TRUNCATION * 1e-3 {
        tail += out[cut - 1];
        cut -= 1;
    }
    out.truncate(cut);
    out
}

fn series(
    space: &StateSpace,
    allowed: &[bool],
    v: &[f64],
    weights: &[Vec<f64>],
    method: Method,
) -> Vec<Vec<f64>> {
    let len = v.len();
    let terms = weights.iter().map(Vec::len).max().unwrap_or(0);
    let mut accs: Vec<Vec<f64>> = weights.iter().map(|_| vec![0.0; len]).collect();
    let add = |k: usize, x: &[f64], accs: &mut Vec<Vec<f64>>| {
        for (acc, w) in accs.iter_mut().zip(weights) {
            if let Some(&wk) = w.get(k) {
                if wk > 1e-20 {
                    axpy(acc, wk, x);
                }
            }
        }
    };
    match method {
        Method::Uniformization => {
            let mut cur = v.to_vec();
            let mut next = vec![0.0; len];
            add(0, &cur, &mut accs);
            for k in 1..terms {
                apply_jump(space, allowed, &cur, &mut next);
                std::mem::swap(&mut cur, &mut next);
                add(k, &cur, &mut accs);
            }
        }
        Method::Chebyshev => {
            let mut prev = v.to_vec();
            add(0, &prev, &mut accs);
            if terms > 1 {
                let mut cur = vec![0.0; len];
                apply_jump(space, allowed, &prev, &mut cur);
                add(1, &cur, &mut accs);
                let mut next = vec![0.0; len];
                for k in 2..terms {
                    apply_jump(space, allowed, &cur, &mut next);
                    next.par_chunks_mut(ROWS)
                        .zip(prev.par_chunks(ROWS))
                        .for_each(|(a, b)| {
                            for (p, q) in a.iter_mut().zip(b) {
                                *p = 2.0 * *p - q;
                            }
                        });
                    std::mem::swap(&mut prev, &mut cur);
                    std::mem::swap(&mut cur, &mut next);
                    add(k, &cur, &mut accs);
                }
            }
        }
    }
    accs
}

fn weights_for(method: Method, m: f64) -> Vec<f64> {
    match method {
        Method::Uniformization => poisson_weights(m),
        Method::Chebyshev => chebyshev_weights(m),
    }
}

fn check_time(t: f64) -> Result<()> {
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidParameter(format!("time {t}")));
    }
    Ok(())
}

/// `init · exp(tL)`, optionally under a censoring scheme.
pub fn evolve(
    space: &StateSpace,
    init: &Distribution,
    scheme: Option<&CensoringScheme>,
    t: f64,
) -> Result<Distribution> {
    evolve_with(space, init, scheme, t, Method::Uniformization)
}

pub fn evolve_with(
    space: &StateSpace,
    init: &Distribution,
    scheme: Option<&CensoringScheme>,
    t: f64,
    method: Method,
) -> Result<Distribution> {
    init.check_space(space)?;
    check_time(t)?;
    let sites = space.n() - 1;
    let lam = sites as f64;
    let pieces: Vec<(f64, Vec<bool>)> = match scheme {
        None => vec![(t, vec![true; sites])],
        Some(c) => {
            if c.n() != space.n() {
                return Err(Error::SizeMismatch {
                    left: c.n(),
                    right: space.n(),
                });
            }
            if c.horizon() < t {
                return Err(Error::SchemeTooShort {
                    scheme: c.horizon(),
                    stream: t,
                });
            }
            c.pieces()
                .into_iter()
                .filter(|(start, _, _)| *start < t)
                .map(|(start, end, allowed)| {
                    let mut mask = vec![false; sites];
                    for s in allowed {
                        mask[s - 1] = true;
                    }
                    (end.min(t) - start, mask)
                })
                .collect()
        }
    };
    let mut v = init.probs().to_vec();
    for (dur, mask) in pieces {
        if dur > 0.0 && mask.iter().any(|&a| a) {
            let w = weights_for(method, lam * dur);
            v = series(space, &mask, &v, &[w], method)
                .pop()
                .expect("one accumulator");
        }
    }
    Ok(Distribution::from_raw(space.model(), v))
}

/// `init · exp(tL)` at several times from a single expansion.
pub fn evolve_many(
    space: &StateSpace,
    init: &Distribution,
    times: &[f64],
    method: Method,
) -> Result<Vec<Distribution>> {
    init.check_space(space)?;
    for &t in times {
        check_time(t)?;
    }
    let lam = (space.n() - 1) as f64;
    let weights: Vec<Vec<f64>> = times
        .iter()
        .map(|&t| weights_for(method, lam * t))
        .collect();
    let all = vec![true; space.n() - 1];
    Ok(series(space, &all, init.probs(), &weights, method)
        .into_iter()
        .map(|v| Distribution::from_raw(space.model(), v))
        .collect())
}

/// One step of the discrete chain `½I + ½P`.
pub fn discrete_step(space: &StateSpace, dist: &Distribution) -> Result<Distribution> {
    dist.check_space(space)?;
    let all = vec![true; space.n() - 1];
    let mut out = vec![0.0; dist.len()];
    apply_jump(space, &all, dist.probs(), &mut out);
    for (o, p) in out.iter_mut().zip(dist.probs()) {
        *o = 0.5 * *o + 0.5 * p;
    }
    Ok(Distribution::from_raw(space.model(), out))
}

/// `‖𝐏_n − μ‖` for `n = 0, …, steps` from `init`.
pub fn discrete_profile(space: &StateSpace, init: &Distribution, steps: usize) -> Result<Vec<f64>> {
    let mut d = init.clone();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(tv_to_uniform(&d));
    for _ in 0..steps {
        d = discrete_step(space, &d)?;
        out.push(tv_to_uniform(&d));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::dist::{separation, total_variation};
    use crate::exact::space::{enumerate, Model, DEFAULT_STATE_CAP};

    fn space(model: Model) -> StateSpace {
        enumerate(model, DEFAULT_STATE_CAP).unwrap()
    }

    #[test]
    fn weights_are_normalized() {
        for m in [0.0, 0.3, 1.0, 7.5, 60.0, 900.0, 4000.0] {
            let p: f64 = poisson_weights(m).iter().sum();
            let c: f64 = chebyshev_weights(m).iter().sum();
            assert!((p - 1.0).abs() < 1e-12, "poisson {m} {p}");
            assert!((c - 1.0).abs() < 1e-12, "chebyshev {m} {c}");
        }
        assert!(chebyshev_weights(4000.0).len() < 1500);
        // e^{-1} I_1(1) = 0.2079104153497085
        assert!((chebyshev_weights(1.0)[1] / 2.0 - 0.207_910_415_349_708_5).abs() < 1e-15);
    }

    #[test]
    fn two_cards_analytic() {
        let s = space(Model::shuffle(2).unwrap());
        let id = Distribution::point_mass(&s, 0);
        for method in [Method::Uniformization, Method::Chebyshev] {
            let d = evolve_with(&s, &id, None, 0.5, method).unwrap();
            assert!((d.get(0) - (1.0 + (-1.0f64).exp()) / 2.0).abs() < 1e-13);
        }
        assert_eq!(evolve(&s, &id, None, 0.0).unwrap(), id);
        let mu = Distribution::uniform(&s);
        for t in [0.1, 1.0, 3.0] {
            let d = evolve(&s, &id, None, t).unwrap();
            let tv = total_variation(&d, &mu).unwrap();
            assert!((tv - (-2.0 * t).exp() / 2.0).abs() < 1e-13);
        }
        let e = space(Model::exclusion(2, 1).unwrap());
        let top = Distribution::point_mass(&e, 0);
        let d = evolve(&e, &top, None, 0.7).unwrap();
        let sep = separation(&d, &Distribution::uniform(&e)).unwrap();
        assert!((sep - (-1.4f64).exp()).abs() < 1e-13);
    }

    #[test]
    fn converges_and_conserves_mass() {
        let s = space(Model::shuffle(3).unwrap());
        let d = evolve(&s, &Distribution::point_mass(&s, 2), None, 20.0).unwrap();
        assert!(d.probs().iter().all(|p| (p - 1.0 / 6.0).abs() < 1e-9));
        assert!((d.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn methods_agree() {
        let s = space(Model::exclusion(10, 5).unwrap());
        let top = Distribution::point_mass(&s, 0);
        let times = [0.0, 0.5, 3.0, 17.0, 60.0];
        let a = evolve_many(&s, &top, &times, Method::Uniformization).unwrap();
        let b = evolve_many(&s, &top, &times, Method::Chebyshev).unwrap();
        for ((x, y), &t) in a.iter().zip(&b).zip(&times) {
            let single = evolve(&s, &top, None, t).unwrap();
            assert!(total_variation(x, y).unwrap() < 1e-12);
            assert!(total_variation(x, &single).unwrap() < 1e-12);
        }
    }

    #[test]
    fn censoring_everything_freezes() {
        let s = space(Model::shuffle(4).unwrap());
        let start = Distribution::point_mass(&s, 5);
        let c = CensoringScheme::censor_all(4, 3.0).unwrap();
        assert_eq!(evolve(&s, &start, Some(&c), 3.0).unwrap(), start);
        assert!(matches!(
            evolve(&s, &start, Some(&c), 4.0),
            Err(Error::SchemeTooShort { .. })
        ));
        let open = CensoringScheme::uncensored(4, 3.0).unwrap();
        let a = evolve(&s, &start, Some(&open), 2.0).unwrap();
        let b = evolve(&s, &start, None, 2.0).unwrap();
        assert!(total_variation(&a, &b).unwrap() < 1e-13);
    }

    #[test]
    fn piecewise_schedule_composes() {
        let s = space(Model::shuffle(4).unwrap());
        let start = Distribution::point_mass(&s, 0);
        let c = CensoringScheme::new(4, 2.0, vec![(0.0, vec![1, 3]), (0.8, vec![2])]).unwrap();
        let once = evolve(&s, &start, Some(&c), 1.5).unwrap();
        let first = CensoringScheme::new(4, 0.8, vec![(0.0, vec![1, 3])]).unwrap();
        let second = CensoringScheme::new(4, 0.7, vec![(0.0, vec![2])]).unwrap();
        let mid = evolve(&s, &start, Some(&first), 0.8).unwrap();
        let twice = evolve(&s, &mid, Some(&second), 0.7).unwrap();
        assert!(total_variation(&once, &twice).unwrap() < 1e-13);
    }

    #[test]
    fn discrete_chain_at_two_cards() {
        let s = space(Model::shuffle(2).unwrap());
        let prof = discrete_profile(&s, &Distribution::point_mass(&s, 0), 3).unwrap();
        assert_eq!(prof, vec![0.5, 0.0, 0.0, 0.0]);
    }
}
