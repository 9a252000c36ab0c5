//! Two-sided comparison between the discrete chain `½I + ½P` after `n` steps
//! and the continuous-time chain at time `t`.
//!
//! The continuous chain is the discrete one run at the jump times of a
//! Poisson process of rate `2(N − 1)`, so `P_t = Σ_j w_j 𝐏_j` with
//! `w ~ Poisson(2(N − 1)t)`. For an increasing start, `j ↦ ‖𝐏_j − μ‖` is
//! nonincreasing and the distances add up along `j`, which gives
//! `lower ≤ ‖𝐏_n − μ‖ ≤ upper`.

use super::dist::{tv_to_uniform, Distribution};
use super::evolve::evolve;
use super::space::StateSpace;
use super::theta::is_increasing_density;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PoissonSandwich {
    pub n: usize,
    pub t: f64,
    pub lower: f64,
    pub upper: f64,
    /// `‖P_t − μ‖`.
    pub continuous_tv: f64,
}

impl PoissonSandwich {
    pub fn contains(&self, value: f64, slack: f64) -> bool {
        value >= self.lower - slack && value <= self.upper + slack
    }
}

/// `(P[J ≤ n − 1], P[J ≤ n])` for `J ~ Poisson(m)`, summed in log space.
fn poisson_cdfs(m: f64, n: usize) -> (f64, f64) {
    if m <= 0.0 {
        return (if n == 0 { 0.0 } else { 1.0 }, 1.0);
    }
    let logs: Vec<f64> = (0..=n)
        .scan(0.0f64, |lf, j| {
            if j > 0 {
                *lf += (j as f64).ln();
            }
            Some(j as f64 * m.ln() - m - *lf)
        })
        .collect();
    let sum = |terms: &[f64]| -> f64 {
        if terms.is_empty() {
            return 0.0;
        }
        let top = terms.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        (top + terms.iter().map(|l| (l - top).exp()).sum::<f64>().ln()).exp()
    };
    (sum(&logs[..n]).min(1.0), sum(&logs).min(1.0))
}

/// Bounds on `‖𝐏_n − μ‖` from the exact continuous-time distance at `t`.
pub fn poisson_sandwich(
    space: &StateSpace,
    init: &Distribution,
    n: usize,
    t: f64,
) -> Result<PoissonSandwich> {
    if let Some((a, b)) = is_increasing_density(space, init)?.witness {
        return Err(Error::NotIncreasing(format!(
            "{} <= {} but the lower state carries more mass",
            space.label(a),
            space.label(b)
        )));
    }
    let tv = tv_to_uniform(&evolve(space, init, None, t)?);
    let m = 2.0 * (space.n() - 1) as f64 * t;
    let (below, upto) = poisson_cdfs(m, n);
    let upper = if upto > 0.0 {
        (tv / upto).min(1.0)
    } else {
        1.0
    };
    let above = 1.0 - below;
    let lower = if above > 0.0 {
        ((tv - below) / above).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(PoissonSandwich {
        n,
        t,
        lower: lower.min(upper),
        upper,
        continuous_tv: tv,
    })
}
