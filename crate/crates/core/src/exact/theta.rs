use num_rational::Ratio;

use super::dist::{tv_to_uniform, Distribution};
use super::space::StateSpace;
use crate::error::{check_range, Error, Result};

/// Default slack, on the density scale, for monotonicity checks.
pub const DENSITY_TOLERANCE: f64 = 1e-9;

/// `θ_x(ν)(s) = (ν(s) + ν(T_x s)) / 2`: the law after a fair update at `x`.
pub fn update_operator(
    space: &StateSpace,
    dist: &Distribution,
    site: usize,
) -> Result<Distribution> {
    dist.check_space(space)?;
    check_range("site", site as i64, 1, space.n() as i64 - 1)?;
    let p = dist.probs();
    let probs = (0..space.size())
        .map(|i| 0.5 * (p[i] + p[space.neighbor(i, site)]))
        .collect();
    Ok(Distribution::from_raw(space.model(), probs))
}

#[derive(Clone, Debug, PartialEq)]
pub struct IncreasingCheck {
    pub increasing: bool,
    /// `(lower, upper)` with `lower ≤ upper` in the order but more mass below.
    pub witness: Option<(usize, usize)>,
}

/// Checks that `ν/μ` is increasing, comparing densities along the moves
/// that generate the order, with slack `tol` on the density scale.
pub fn is_increasing_density_tol(
    space: &StateSpace,
    dist: &Distribution,
    tol: f64,
) -> Result<IncreasingCheck> {
    dist.check_space(space)?;
    let scale = space.size() as f64;
    let p = dist.probs();
    for i in 0..space.size() {
        for j in space.up_moves(i) {
            if p[i] * scale > p[j] * scale + tol {
                return Ok(IncreasingCheck {
                    increasing: false,
                    witness: Some((i, j)),
                });
            }
        }
    }
    Ok(IncreasingCheck {
        increasing: true,
        witness: None,
    })
}

pub fn is_increasing_density(space: &StateSpace, dist: &Distribution) -> Result<IncreasingCheck> {
    is_increasing_density_tol(space, dist, DENSITY_TOLERANCE)
}

/// Distances to equilibrium with every update applied and with some omitted.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CensorComparison {
    pub tv_full: f64,
    pub tv_omitted: f64,
}

impl CensorComparison {
    /// Omitting updates never brings an increasing law closer to equilibrium.
    pub fn holds(&self, tol: f64) -> bool {
        self.tv_omitted >= self.tv_full - tol
    }
}

fn check_sequence(space: &StateSpace, sites: &[usize], omit: &[usize]) -> Result<()> {
    for &s in sites {
        check_range("site", s as i64, 1, space.n() as i64 - 1)?;
    }
    for &o in omit {
        if o >= sites.len() {
            return Err(Error::InvalidParameter(format!(
                "omitted index {o} beyond a sequence of length {}",
                sites.len()
            )));
        }
    }
    Ok(())
}

fn refuse_non_increasing(space: &StateSpace, check: &IncreasingCheck) -> Result<()> {
    if let Some((a, b)) = check.witness {
        return Err(Error::NotIncreasing(format!(
            "{} <= {} but the lower state carries more mass",
            space.label(a),
            space.label(b)
        )));
    }
    Ok(())
}

/// Applies `θ` along `sites`, once with every update and once skipping the
/// positions listed in `omit`, and reports both distances to uniform.
pub fn censoring_comparison(
    space: &StateSpace,
    init: &Distribution,
    sites: &[usize],
    omit: &[usize],
) -> Result<CensorComparison> {
    check_sequence(space, sites, omit)?;
    refuse_non_increasing(space, &is_increasing_density(space, init)?)?;
    let mut full = init.clone();
    let mut omitted = init.clone();
    for (idx, &s) in sites.iter().enumerate() {
        full = update_operator(space, &full, s)?;
        if !omit.contains(&idx) {
            omitted = update_operator(space, &omitted, s)?;
        }
    }
    Ok(CensorComparison {
        tv_full: tv_to_uniform(&full),
        tv_omitted: tv_to_uniform(&omitted),
    })
}

/// Exact rational version of [`censoring_comparison`] for small spaces.
pub fn censoring_comparison_exact(
    space: &StateSpace,
    init: &[Ratio<i128>],
    sites: &[usize],
    omit: &[usize],
) -> Result<(Ratio<i128>, Ratio<i128>)> {
    check_sequence(space, sites, omit)?;
    if init.len() != space.size() {
        return Err(Error::SizeMismatch {
            left: init.len(),
            right: space.size(),
        });
    }
    for i in 0..space.size() {
        for j in space.up_moves(i) {
            if init[i] > init[j] {
                refuse_non_increasing(
                    space,
                    &IncreasingCheck {
                        increasing: false,
                        witness: Some((i, j)),
                    },
                )?;
            }
        }
    }
    let half = Ratio::new(1, 2);
    let step = |v: &[Ratio<i128>], s: usize| -> Vec<Ratio<i128>> {
        (0..space.size())
            .map(|i| (v[i] + v[space.neighbor(i, s)]) * half)
            .collect()
    };
    let mut full = init.to_vec();
    let mut omitted = init.to_vec();
    for (idx, &s) in sites.iter().enumerate() {
        full = step(&full, s);
        if !omit.contains(&idx) {
            omitted = step(&omitted, s);
        }
    }
    let u = Ratio::new(1, space.size() as i128);
    let tv = |v: &[Ratio<i128>]| -> Ratio<i128> {
        v.iter()
            .map(|&p| if p > u { p - u } else { Ratio::from_integer(0) })
            .sum()
    };
    Ok((tv(&full), tv(&omitted)))
}
