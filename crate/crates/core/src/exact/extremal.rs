//! Separation from the top state through the mass at the bottom state.

use super::dist::{separation, Distribution};
use super::evolve::evolve;
use super::space::{Model, StateSpace};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SeparationCheck {
    pub t: f64,
    /// `1 − P^∧_t(∨)/μ(∨)`.
    pub value: f64,
    /// `max_η (1 − P^∧_t(η)/μ(η))`.
    pub full: f64,
    /// Whether `∨` attains the smallest ratio `P^∧_t(η)/μ(η)`.
    pub bottom_is_argmin: bool,
    /// A state with a strictly smaller ratio than `∨`, if any.
    pub witness: Option<usize>,
}

/// Relative slack used when comparing ratios against the one at `∨`.
const RATIO_SLACK: f64 = 1e-12;

/// Separation of `P^∧_t` through `P^∧_t(∨)`, checked against the full
/// maximum over states.
pub fn separation_via_extremal(space: &StateSpace, t: f64) -> Result<SeparationCheck> {
    if !matches!(space.model(), Model::Exclusion { .. }) {
        return Err(Error::ModelMismatch(format!(
            "extremal separation is stated for configurations, got {}",
            space.model()
        )));
    }
    let p = evolve(
        space,
        &Distribution::point_mass(space, space.top_index()),
        None,
        t,
    )?;
    Ok(check(space, &p, t))
}

pub(crate) fn check(space: &StateSpace, p: &Distribution, t: f64) -> SeparationCheck {
    let mu = Distribution::uniform(space);
    let scale = space.size() as f64;
    let at_bottom = p.get(space.bottom_index()) * scale;
    let witness = (0..space.size()).find(|&i| p.get(i) * scale < at_bottom - RATIO_SLACK);
    SeparationCheck {
        t,
        value: (1.0 - at_bottom).clamp(0.0, 1.0),
        full: separation(p, &mu).expect("same space"),
        bottom_is_argmin: witness.is_none(),
        witness,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::space::{enumerate, DEFAULT_STATE_CAP};

    #[test]
    fn two_sites() {
        let s = enumerate(Model::exclusion(2, 1).unwrap(), DEFAULT_STATE_CAP).unwrap();
        for t in [0.0, 0.25, 1.0, 3.0] {
            let c = separation_via_extremal(&s, t).unwrap();
            assert!((c.value - (-2.0 * t).exp()).abs() < 1e-12);
            assert!((c.full - c.value).abs() < 1e-12);
            assert!(c.bottom_is_argmin);
        }
    }

    #[test]
    fn agrees_with_full_separation() {
        let s = enumerate(Model::exclusion(6, 3).unwrap(), DEFAULT_STATE_CAP).unwrap();
        assert_eq!(separation_via_extremal(&s, 0.0).unwrap().value, 1.0);
        for t in [0.1, 0.7, 2.0, 8.0] {
            let c = separation_via_extremal(&s, t).unwrap();
            assert!(c.bottom_is_argmin, "{c:?}");
            assert!((c.full - c.value).abs() < 1e-9);
        }
        assert!(separation_via_extremal(&s, 200.0).unwrap().value < 1e-12);
    }
}
