//! Closed forms built on the eigenpairs of the discrete Dirichlet Laplacian
//! on `{0, …, N}`: heat-equation solutions for the mean height field, the
//! Wilson-type upper bounds, the two-particle walk killed on the diagonal,
//! and the first Fourier mode of a path.

use std::f64::consts::PI;

use crate::error::{check_range, Error, Result};
use crate::exact::{evolve, poisson_weights, Distribution, Model, StateSpace};
use crate::path::{extremal_paths, LatticePath};

/// `sin(π num / den)` with the argument reduced exactly modulo `2π`.
fn sin_pi(num: i64, den: i64) -> f64 {
    (PI * num.rem_euclid(2 * den) as f64 / den as f64).sin()
}

fn cos_pi(num: i64, den: i64) -> f64 {
    (PI * num.rem_euclid(2 * den) as f64 / den as f64).cos()
}

/// `λ_{N,i} = 2(1 − cos(iπ/N))`.
pub fn lambda(n: usize, i: usize) -> Result<f64> {
    check_range("N", n as i64, 2, i64::MAX)?;
    check_range("i", i as i64, 1, n as i64 - 1)?;
    Ok(lambda_raw(n, i))
}

fn lambda_raw(n: usize, i: usize) -> f64 {
    // 2(1 − cos θ) = 4 sin²(θ/2), which keeps precision for small θ.
    let s = sin_pi(i as i64, 2 * n as i64);
    4.0 * s * s
}

/// The spectral gap `λ_N = λ_{N,1}`.
pub fn lambda_n(n: usize) -> Result<f64> {
    lambda(n, 1)
}

/// `u_i(x) = √(2/N) sin(xiπ/N)`.
pub fn eigenfunction(n: usize, i: usize, x: usize) -> f64 {
    (2.0 / n as f64).sqrt() * sin_pi((x * i) as i64, n as i64)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumTable {
    n: usize,
    eigenvalues: Vec<f64>,
}

impl SpectrumTable {
    pub fn new(n: usize) -> Result<SpectrumTable> {
        check_range("N", n as i64, 2, i64::MAX)?;
        Ok(SpectrumTable {
            n,
            eigenvalues: (1..n).map(|i| lambda_raw(n, i)).collect(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `λ_{N,i}` for `i = 1, …, N − 1`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// `max_{i,j} |⟨u_i, u_j⟩ − δ_ij|` over `x = 1, …, N − 1`.
    pub fn orthonormality_error(&self) -> f64 {
        let n = self.n;
        let rows: Vec<Vec<f64>> = (1..n)
            .map(|i| (1..n).map(|x| eigenfunction(n, i, x)).collect())
            .collect();
        let mut worst = 0.0f64;
        for i in 0..rows.len() {
            for j in i..rows.len() {
                let dot: f64 = rows[i].iter().zip(&rows[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - want).abs());
            }
        }
        worst
    }

    /// Columns `i, lambda, a_i`; the last column is left empty without
    /// coefficients.
    pub fn to_csv(&self, coefficients: Option<&[f64]>) -> String {
        let mut out = String::from("i,lambda,a_i\n");
        for (idx, l) in self.eigenvalues.iter().enumerate() {
            let a = coefficients
                .and_then(|c| c.get(idx))
                .map(|v| v.to_string())
                .unwrap_or_default();
            out.push_str(&format!("{},{l},{a}\n", idx + 1));
        }
        out
    }
}

/// Sine coefficients `a_i = Σ_{x=1}^{N−1} f(x) sin(xiπ/N)`, `i = 1, …, N − 1`.
fn sine_coefficients(row: &[f64]) -> Vec<f64> {
    let n = row.len() - 1;
    (1..n)
        .map(|i| {
            (1..n)
                .map(|x| row[x] * sin_pi((x * i) as i64, n as i64))
                .sum()
        })
        .collect()
}

/// Solution of `∂_t f = Δ f` on `{0, …, N}` with zero boundary values.
#[derive(Clone, Debug, PartialEq)]
pub struct HeatProfile {
    n: usize,
    times: Vec<f64>,
    /// `values[j][x] = f(x, times[j])`.
    values: Vec<Vec<f64>>,
}

impl HeatProfile {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn at(&self, time_index: usize, x: usize) -> f64 {
        self.values[time_index][x]
    }

    pub fn row(&self, time_index: usize) -> &[f64] {
        &self.values[time_index]
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,t,f\n");
        for (t, row) in self.times.iter().zip(&self.values) {
            for (x, f) in row.iter().enumerate() {
                out.push_str(&format!("{x},{t},{f}\n"));
            }
        }
        out
    }
}

pub fn heat_profile(init_row: &[f64], times: &[f64]) -> Result<HeatProfile> {
    if init_row.len() < 3 {
        return Err(Error::InvalidParameter(
            "a heat profile needs N >= 2".into(),
        ));
    }
    let n = init_row.len() - 1;
    if init_row[0] != 0.0 || init_row[n] != 0.0 {
        return Err(Error::InvalidParameter(format!(
            "boundary values must vanish, got {} and {}",
            init_row[0], init_row[n]
        )));
    }
    if let Some(t) = times.iter().find(|t| !(**t >= 0.0)) {
        return Err(Error::InvalidParameter(format!("time {t}")));
    }
    let a = sine_coefficients(init_row);
    let lam: Vec<f64> = (1..n).map(|i| lambda_raw(n, i)).collect();
    let values = times
        .iter()
        .map(|&t| {
            let damped: Vec<f64> = a
                .iter()
                .zip(&lam)
                .map(|(a, l)| a * (-l * t).exp())
                .collect();
            (0..=n)
                .map(|x| {
                    if x == 0 || x == n {
                        return 0.0;
                    }
                    2.0 / n as f64
                        * damped
                            .iter()
                            .enumerate()
                            .map(|(k, d)| d * sin_pi((x * (k + 1)) as i64, n as i64))
                            .sum::<f64>()
                })
                .collect()
        })
        .collect();
    Ok(HeatProfile {
        n,
        times: times.to_vec(),
        values,
    })
}

/// Row `x ↦ σ̃(x, y)` of the identity: `min(x, y) − xy/N`.
pub fn identity_row(n: usize, y: usize) -> Vec<f64> {
    (0..=n)
        .map(|x| x.min(y) as f64 - (x * y) as f64 / n as f64)
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeanStart {
    Identity,
    Generic,
}

/// Bounds on `E[σ̃_t(x, y)]` for a fixed row `y`.
#[derive(Clone, Debug, PartialEq)]
pub struct MeanBounds {
    /// Bound on `max_x E[σ̃_t(x, y)]`.
    pub upper: f64,
    /// Pointwise lower bound for `x = 0, …, N`; zero for a generic start.
    pub lower: Vec<f64>,
}

pub fn mean_bounds(n: usize, y: usize, t: f64, start: MeanStart) -> Result<MeanBounds> {
    check_range("y", y as i64, 0, n as i64)?;
    let decay = (-lambda_n(n)? * t).exp();
    let m = y.min(n - y) as f64;
    let lower = match start {
        MeanStart::Generic => vec![0.0; n + 1],
        MeanStart::Identity => (0..=n)
            .map(|x| m / PI * sin_pi(x as i64, n as i64) * decay)
            .collect(),
    };
    Ok(MeanBounds {
        upper: 4.0 * m * decay,
        lower,
    })
}

/// Bound `4 min(k, N − k) e^{−λ_N t}` on `max_x E[η_t(x)]`.
pub fn sep_mean_upper(n: usize, k: usize, t: f64) -> Result<f64> {
    check_range("k", k as i64, 0, n as i64)?;
    Ok(4.0 * k.min(n - k) as f64 * (-lambda_n(n)? * t).exp())
}

/// `10 N e^{−λ_N t}`, not capped at 1.
pub fn wilson_bound(n: usize, t: f64) -> Result<f64> {
    Ok(10.0 * n as f64 * (-lambda_n(n)? * t).exp())
}

/// `10 k e^{−λ_N t}`, not capped at 1.
pub fn wilson_bound_k(n: usize, k: usize, t: f64) -> Result<f64> {
    check_range("k", k as i64, 0, n as i64)?;
    Ok(10.0 * k as f64 * (-lambda_n(n)? * t).exp())
}

/// Two walkers on `{1, …, N}` jumping to each neighbor at rate 1, killed when
/// they meet. The survival probability is expanded on the antisymmetrized
/// products of the Neumann eigenfunctions `cos(iπ(x − ½)/N)`.
#[derive(Clone, Debug)]
pub struct KilledTwoWalk {
    n: usize,
    /// `(i, j, λ_{i,j,N}, Σ_{x<y} u_{i,j}(x, y) / ‖u_{i,j}‖²)` for `i < j`.
    modes: Vec<(usize, usize, f64, f64)>,
    /// `cos(iπ(x − ½)/N)` at `[i][x − 1]`.
    cosines: Vec<Vec<f64>>,
}

impl KilledTwoWalk {
    pub fn new(n: usize) -> Result<KilledTwoWalk> {
        check_range("N", n as i64, 2, i64::MAX)?;
        let cosines: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                (1..=n)
                    .map(|x| cos_pi((i * (2 * x - 1)) as i64, 2 * n as i64))
                    .collect()
            })
            .collect();
        // prefix[i][y] = Σ_{x<y} c_i(x), with 0-based y.
        let prefix: Vec<Vec<f64>> = cosines
            .iter()
            .map(|c| {
                let mut acc = 0.0;
                c.iter()
                    .map(|v| {
                        let before = acc;
                        acc += v;
                        before
                    })
                    .collect()
            })
            .collect();
        let ell = |i: usize| if i == 0 { 0.0 } else { lambda_raw(n, i) };
        let mut modes = Vec::with_capacity(n * (n - 1) / 2);
        for i in 0..n {
            for j in i + 1..n {
                let sum: f64 = (0..n)
                    .map(|y| prefix[i][y] * cosines[j][y] - prefix[j][y] * cosines[i][y])
                    .sum();
                let norm = (n * n) as f64 / 4.0 * if i == 0 { 2.0 } else { 1.0 };
                modes.push((i, j, ell(i) + ell(j), sum / norm));
            }
        }
        Ok(KilledTwoWalk { n, modes, cosines })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// `P_{x0,y0}[X_t ≠ Y_t]`.
    pub fn survival(&self, x0: usize, y0: usize, t: f64) -> Result<f64> {
        check_range("x0", x0 as i64, 1, self.n as i64 - 1)?;
        check_range("y0", y0 as i64, x0 as i64 + 1, self.n as i64)?;
        let (a, b) = (x0 - 1, y0 - 1);
        let c = &self.cosines;
        Ok(self
            .modes
            .iter()
            .map(|&(i, j, l, w)| {
                let u = c[i][a] * c[j][b] - c[i][b] * c[j][a];
                u * w * (-l * t).exp()
            })
            .sum())
    }
}

pub fn killed_two_walk(n: usize, x0: usize, y0: usize, t: f64) -> Result<f64> {
    KilledTwoWalk::new(n)?.survival(x0, y0, t)
}

/// Starting pairs `1 ≤ x < y ≤ N` in lexicographic order.
pub fn killed_walk_starts(n: usize) -> Vec<(usize, usize)> {
    (1..=n)
        .flat_map(|x| (x + 1..=n).map(move |y| (x, y)))
        .collect()
}

/// Survival from every start in [`killed_walk_starts`] order, by uniformized
/// evolution of the killed chain.
pub fn killed_two_walk_direct(n: usize, t: f64) -> Result<Vec<f64>> {
    check_range("N", n as i64, 2, i64::MAX)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("time {t}")));
    }
    let starts = killed_walk_starts(n);
    let index = |x: usize, y: usize| -> usize {
        // Rank of (x, y) among pairs ordered lexicographically.
        (x - 1) * n - (x - 1) * x / 2 + (y - x - 1)
    };
    // Uniformization at rate 4: each walker proposes each direction at rate 1.
    let step = |v: &[f64]| -> Vec<f64> {
        starts
            .iter()
            .map(|&(x, y)| {
                let mut acc = 0.0;
                let mut stay = 0.0;
                for (nx, ny) in [
                    (x as i64 - 1, y as i64),
                    (x as i64 + 1, y as i64),
                    (x as i64, y as i64 - 1),
                    (x as i64, y as i64 + 1),
                ] {
                    if nx < 1 || ny > n as i64 {
                        stay += 0.25;
                    } else if nx < ny {
                        acc += 0.25 * v[index(nx as usize, ny as usize)];
                    }
                }
                acc + stay * v[index(x, y)]
            })
            .collect()
    };
    let weights = poisson_weights(4.0 * t);
    let mut v = vec![1.0; starts.len()];
    let mut out = vec![0.0; starts.len()];
    for (k, w) in weights.iter().enumerate() {
        if k > 0 {
            v = step(&v);
        }
        for (o, p) in out.iter_mut().zip(&v) {
            *o += w * p;
        }
    }
    Ok(out)
}

/// `a_i(η) = Σ_{x=1}^{N−1} η(x) sin(iπx/N)`.
pub fn fourier_coeff(path: &LatticePath, i: usize) -> Result<f64> {
    let n = path.n();
    check_range("i", i as i64, 1, n as i64 - 1)?;
    Ok((1..n)
        .map(|x| path.value(x) * sin_pi((i * x) as i64, n as i64))
        .sum())
}

/// `E_μ[a_1]` is zero; this is `Var_μ(a_1)`, from the covariance
/// `Cov(η(x), η(y)) = k(N − k) x(N − y) / (N²(N − 1))` for `x ≤ y`.
pub fn a1_equilibrium_variance(n: usize, k: usize) -> Result<f64> {
    check_range("N", n as i64, 2, i64::MAX)?;
    check_range("k", k as i64, 0, n as i64)?;
    let (nf, kf) = (n as f64, k as f64);
    let scale = kf * (nf - kf) / (nf * nf * (nf - 1.0));
    let s: Vec<f64> = (0..=n).map(|x| sin_pi(x as i64, n as i64)).collect();
    let mut total = 0.0;
    for x in 1..n {
        for y in 1..n {
            let (lo, hi) = (x.min(y), x.max(y));
            total += s[x] * s[y] * (lo * (n - hi)) as f64;
        }
    }
    Ok(scale * total)
}

/// Mean and variance of `a_1` under an exact law on configurations.
pub fn a1_moments(space: &StateSpace, dist: &Distribution) -> Result<(f64, f64)> {
    if !matches!(space.model(), Model::Exclusion { .. }) {
        return Err(Error::ModelMismatch(
            "a_1 is defined on configurations".into(),
        ));
    }
    let values: Vec<f64> = (0..space.size())
        .map(|i| fourier_coeff(&space.path(i)?, 1))
        .collect::<Result<_>>()?;
    let mean: f64 = values.iter().zip(dist.probs()).map(|(a, p)| a * p).sum();
    let var: f64 = values
        .iter()
        .zip(dist.probs())
        .map(|(a, p)| p * (a - mean) * (a - mean))
        .sum();
    Ok((mean, var.max(0.0)))
}

/// First and second moments of `a_1` under `P^∧_t` and under `μ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct A1Moments {
    pub mean_p: f64,
    pub var_p: f64,
    pub mean_mu: f64,
    pub var_mu: f64,
}

/// Exact moments at time `t` from the top configuration.
pub fn a1_moments_exact(space: &StateSpace, t: f64) -> Result<A1Moments> {
    let Model::Exclusion { n, k } = space.model() else {
        return Err(Error::ModelMismatch(
            "a_1 is defined on configurations".into(),
        ));
    };
    let p = evolve(
        space,
        &Distribution::point_mass(space, space.top_index()),
        None,
        t,
    )?;
    let (mean_p, var_p) = a1_moments(space, &p)?;
    Ok(A1Moments {
        mean_p,
        var_p,
        mean_mu: 0.0,
        var_mu: a1_equilibrium_variance(n, k)?,
    })
}

/// `E[a_1(η^∧_t)] = e^{−λ_N t} a_1(∧)`.
pub fn a1_mean_from_top(n: usize, k: usize, t: f64) -> Result<f64> {
    let (top, _) = extremal_paths(n, k)?;
    Ok((-lambda_n(n)? * t).exp() * fourier_coeff(&top, 1)?)
}

/// Chebyshev bound `1 − 2(Var_P + Var_μ)/(E_P − E_μ)²` on the distance to
/// equilibrium, clamped to `[0, 1]`; zero when the means coincide.
pub fn tv_lower_bound(m: &A1Moments) -> f64 {
    let gap = m.mean_p - m.mean_mu;
    if gap == 0.0 || !gap.is_finite() {
        return 0.0;
    }
    (1.0 - 2.0 * (m.var_p + m.var_mu) / (gap * gap)).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::enumerate;
    use crate::exact::DEFAULT_STATE_CAP;

    #[test]
    fn eigenvalues() {
        assert!((lambda(2, 1).unwrap() - 2.0).abs() < 1e-15);
        assert!((lambda(4, 1).unwrap() - (2.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!(lambda(4, 4).is_err() && lambda(4, 0).is_err());
        let t = SpectrumTable::new(16).unwrap();
        assert!(t.orthonormality_error() < 1e-12);
        assert!(t.eigenvalues().windows(2).all(|w| w[0] < w[1]));
        assert!(t.to_csv(None).starts_with("i,lambda,a_i\n1,"));
    }

    #[test]
    fn heat_two_sites() {
        let h = heat_profile(&[0.0, 0.5, 0.0], &[0.0, 0.4, 2.0]).unwrap();
        for (j, &t) in h.times().iter().enumerate() {
            assert!((h.at(j, 1) - 0.5 * (-2.0 * t).exp()).abs() < 1e-15);
        }
        assert!(heat_profile(&[0.1, 0.5, 0.0], &[0.0]).is_err());
        let row = identity_row(9, 4);
        let h = heat_profile(&row, &[0.0]).unwrap();
        for x in 0..=9 {
            assert!((h.at(0, x) - row[x]).abs() < 1e-12);
        }
    }

    #[test]
    fn heat_matches_derivative() {
        // Central difference in time against the discrete Laplacian.
        let row = identity_row(8, 3);
        let (t, dt) = (1.3, 1e-5);
        let h = heat_profile(&row, &[t - dt, t, t + dt]).unwrap();
        for x in 1..8 {
            let dfdt = (h.at(2, x) - h.at(0, x)) / (2.0 * dt);
            let lap = h.at(1, x + 1) + h.at(1, x - 1) - 2.0 * h.at(1, x);
            assert!((dfdt - lap).abs() < 1e-7);
        }
    }

    #[test]
    fn killed_walk_two_sites() {
        for t in [0.0, 0.5, 2.0] {
            let e = killed_two_walk(2, 1, 2, t).unwrap();
            assert!((e - (-2.0 * t).exp()).abs() < 1e-14);
            let d = killed_two_walk_direct(2, t).unwrap();
            assert!((d[0] - (-2.0 * t).exp()).abs() < 1e-12);
        }
        assert!(killed_two_walk(4, 2, 2, 1.0).is_err());
    }

    #[test]
    fn killed_walk_starts_at_one() {
        let w = KilledTwoWalk::new(7).unwrap();
        for (x, y) in killed_walk_starts(7) {
            assert!((w.survival(x, y, 0.0).unwrap() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn killed_walk_expansion_matches_chain() {
        let w = KilledTwoWalk::new(9).unwrap();
        for t in [0.3, 4.0, 25.0] {
            let direct = killed_two_walk_direct(9, t).unwrap();
            for ((x, y), d) in killed_walk_starts(9).into_iter().zip(direct) {
                assert!((w.survival(x, y, t).unwrap() - d).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn fourier_of_top() {
        let (top, bottom) = extremal_paths(4, 2).unwrap();
        let a = fourier_coeff(&top, 1).unwrap();
        assert!((a - (1.0 + 2f64.sqrt() / 2.0)).abs() < 1e-12);
        assert!((a + fourier_coeff(&bottom, 1).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn equilibrium_variance_by_enumeration() {
        let s = enumerate(Model::exclusion(8, 3).unwrap(), DEFAULT_STATE_CAP).unwrap();
        let (mean, var) = a1_moments(&s, &Distribution::uniform(&s)).unwrap();
        assert!(mean.abs() < 1e-12);
        assert!((var - a1_equilibrium_variance(8, 3).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn lower_bound_at_zero() {
        let s = enumerate(Model::exclusion(8, 4).unwrap(), DEFAULT_STATE_CAP).unwrap();
        let m = a1_moments_exact(&s, 0.0).unwrap();
        assert_eq!(m.var_p, 0.0);
        let a = a1_mean_from_top(8, 4, 0.0).unwrap();
        assert!((m.mean_p - a).abs() < 1e-12);
        let want = 1.0 - 2.0 * m.var_mu / (a * a);
        assert!((tv_lower_bound(&m) - want).abs() < 1e-12);
        let late = a1_moments_exact(&s, 400.0).unwrap();
        assert_eq!(tv_lower_bound(&late), 0.0);
    }

    #[test]
    fn bounds_formulae() {
        assert_eq!(wilson_bound(3, 0.0).unwrap(), 30.0);
        assert_eq!(wilson_bound_k(8, 4, 0.0).unwrap(), 40.0);
        let b = mean_bounds(10, 0, 1.0, MeanStart::Identity).unwrap();
        assert_eq!(b.upper, 0.0);
        assert!(b.lower.iter().all(|&l| l == 0.0));
        assert_eq!(sep_mean_upper(10, 7, 0.0).unwrap(), 12.0);
    }
}
