use rayon::prelude::*;

use super::space::{Model, StateSpace};
use crate::error::{Error, Result};

/// A probability vector over an enumerated state space.
#[derive(Clone, Debug, PartialEq)]
pub struct Distribution {
    model: Model,
    probs: Vec<f64>,
}

const CHUNK: usize = 1 << 14;

/// Sum with a fixed chunking so the result does not depend on thread count.
pub(crate) fn stable_sum<F>(len: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partial: Vec<f64> = (0..len.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&term).sum())
        .collect();
    partial.iter().sum()
}

impl Distribution {
    pub fn point_mass(space: &StateSpace, i: usize) -> Distribution {
        let mut probs = vec![0.0; space.size()];
        probs[i] = 1.0;
        Distribution {
            model: space.model(),
            probs,
        }
    }

    pub fn uniform(space: &StateSpace) -> Distribution {
        Distribution {
            model: space.model(),
            probs: vec![1.0 / space.size() as f64; space.size()],
        }
    }

    /// Validated constructor: nonnegative entries summing to 1 within 1e−9.
    pub fn from_probs(space: &StateSpace, probs: Vec<f64>) -> Result<Distribution> {
        if probs.len() != space.size() {
            return Err(Error::SizeMismatch {
                left: probs.len(),
                right: space.size(),
            });
        }
        if let Some(i) = probs.iter().position(|&p| !(p >= -1e-15)) {
            return Err(Error::InvalidParameter(format!(
                "negative probability {} at state {i}",
                probs[i]
            )));
        }
        let total = stable_sum(probs.len(), |i| probs[i]);
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!(
                "probabilities sum to {total}"
            )));
        }
        Ok(Distribution {
            model: space.model(),
            probs,
        })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights(space: &StateSpace, weights: &[f64]) -> Result<Distribution> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|&w| w < 0.0) {
            return Err(Error::InvalidParameter(
                "weights must be nonnegative, not all zero".into(),
            ));
        }
        Distribution::from_probs(space, weights.iter().map(|w| w / total).collect())
    }

    pub(crate) fn from_raw(model: Model, probs: Vec<f64>) -> Distribution {
        Distribution { model, probs }
    }

    pub fn model(&self) -> Model {
        self.model
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn get(&self, i: usize) -> f64 {
        self.probs[i]
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn total(&self) -> f64 {
        stable_sum(self.probs.len(), |i| self.probs[i])
    }

    pub(crate) fn check_space(&self, space: &StateSpace) -> Result<()> {
        if self.model != space.model() {
            return Err(Error::ModelMismatch(format!(
                "distribution on {} used with {}",
                self.model,
                space.model()
            )));
        }
        Ok(())
    }

    /// CSV snapshot with columns `state, probability`.
    pub fn to_csv(&self, space: &StateSpace) -> Result<String> {
        self.check_space(space)?;
        let mut out = String::from("state,probability\n");
        for (i, p) in self.probs.iter().enumerate() {
            out.push_str(&format!("{},{p:e}\n", space.label(i)));
        }
        Ok(out)
    }
}

fn same_model(p: &Distribution, q: &Distribution) -> Result<()> {
    if p.model != q.model {
        return Err(Error::ModelMismatch(format!("{} vs {}", p.model, q.model)));
    }
    Ok(())
}

/// `½ Σ |p − q|`.
pub fn total_variation(p: &Distribution, q: &Distribution) -> Result<f64> {
    same_model(p, q)?;
    let half = 0.5 * stable_sum(p.len(), |i| (p.probs[i] - q.probs[i]).abs());
    Ok(half.clamp(0.0, 1.0))
}

/// Total variation to the uniform law.
pub fn tv_to_uniform(p: &Distribution) -> f64 {
    let u = 1.0 / p.len() as f64;
    (0.5 * stable_sum(p.len(), |i| (p.probs[i] - u).abs())).clamp(0.0, 1.0)
}

/// `max_x (1 − p(x)/μ(x))`, clamped below at 0.
pub fn separation(p: &Distribution, mu: &Distribution) -> Result<f64> {
    same_model(p, mu)?;
    if let Some(i) = mu.probs.iter().position(|&m| !(m > 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "reference law vanishes at state {i}"
        )));
    }
    let worst = p
        .probs
        .iter()
        .zip(&mu.probs)
        .map(|(a, m)| 1.0 - a / m)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(worst.clamp(0.0, 1.0))
}

/// Image of a shuffle distribution under `σ ↦ to_exclusion(σ, k)`.
pub fn push_to_exclusion(
    at_space: &StateSpace,
    dist: &Distribution,
    sep_space: &StateSpace,
) -> Result<Distribution> {
    dist.check_space(at_space)?;
    let k = match (at_space.model(), sep_space.model()) {
        (Model::Shuffle { n }, Model::Exclusion { n: m, k }) if n == m => k,
        (a, b) => return Err(Error::ModelMismatch(format!("cannot project {a} onto {b}"))),
    };
    let mut probs = vec![0.0; sep_space.size()];
    for (i, &p) in dist.probs.iter().enumerate() {
        if p != 0.0 {
            let path = at_space.perm(i)?.to_exclusion(k)?;
            probs[sep_space.path_index(&path)?] += p;
        }
    }
    Ok(Distribution {
        model: sep_space.model(),
        probs,
    })
}
