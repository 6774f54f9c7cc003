//! Threshold constants and the closed-form functions behind them.
//!
//! All roots are found by bisection on brackets located with a documented
//! sign scan; nothing here needs derivatives.

use std::f64::consts::PI;

use serde::Serialize;
use thiserror::Error;

pub const DEFAULT_TOL: f64 = 1e-10;

/// Cap on the bracket used for `γ_d`, excluding the trivial root `x = 1`.
const GAMMA_BRACKET_CAP: f64 = 1.0 - 1e-6;

const RHO_STEP_TOL: f64 = 1e-12;
const RHO_MAX_ITERS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConstantsError {
    #[error("no sign change found while bracketing {0}")]
    BracketFailure(&'static str),
    #[error("closed forms exist only for ell in {{1, 2}}, got {0}")]
    UnsupportedEll(u32),
    #[error("z = {0} is outside [0, 1/e]")]
    OutsideDomain(f64),
}

/// Bisection on `[lo, hi]` where `f(lo) < 0 < f(hi)` (or the reverse).
/// Stops when the bracket is at most `tol` wide and returns its midpoint.
pub fn bisect(
    mut f: impl FnMut(f64) -> f64,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Option<f64> {
    let flo = f(lo);
    let fhi = f(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if (flo < 0.0) == (fhi < 0.0) {
        return None;
    }
    let lo_negative = flo < 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return Some(mid);
        }
        if (fm < 0.0) == lo_negative {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Some(0.5 * (lo + hi))
}

/// Root of `f` on `(0, ∞)` for functions negative on `(0, a)` and positive
/// beyond the root: the left end starts at 1 and halves until negative, the
/// right end doubles from there until positive.
fn solve_positive_crossing(
    f: impl Fn(f64) -> f64,
    tol: f64,
    what: &'static str,
) -> Result<f64, ConstantsError> {
    let mut lo = 1.0;
    let mut tries = 0;
    while f(lo) >= 0.0 {
        lo *= 0.5;
        tries += 1;
        if tries > 60 {
            return Err(ConstantsError::BracketFailure(what));
        }
    }
    let mut hi = 2.0 * lo;
    tries = 0;
    while f(hi) <= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 60 {
            return Err(ConstantsError::BracketFailure(what));
        }
    }
    bisect(f, lo, hi, tol).ok_or(ConstantsError::BracketFailure(what))
}

/// `g_d(x) = (d+1)(x+1)e^{-x} + x(1 - e^{-x})^{d+1}`
pub fn g_d_eval(d: usize, x: f64) -> f64 {
    let e = (-x).exp();
    (d as f64 + 1.0) * (x + 1.0) * e + x * (1.0 - e).powi(d as i32 + 1)
}

/// `c_d`: the positive solution of `g_d(x) = d + 1`.
pub fn solve_c_d(d: usize, tol: f64) -> Result<f64, ConstantsError> {
    let target = d as f64 + 1.0;
    solve_positive_crossing(|x| g_d_eval(d, x) - target, tol, "c_d")
}

/// `u_d(γ, x) = exp(-γ (1-x)^d) - x`
pub fn u_d_eval(gamma: f64, x: f64, d: usize) -> f64 {
    (-gamma * (1.0 - x).powi(d as i32)).exp() - x
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaRoot {
    pub gamma: f64,
    /// Interior root of `exp(-(1-x)/(d x)) = x`.
    pub x_star: f64,
}

/// `γ_d = (d x (1-x)^{d-1})^{-1}` at the interior root of `exp(-(1-x)/(dx)) = x`.
///
/// The bracket comes from scanning a geometric grid `1e-12 · 2^i` up to 1/2
/// followed by a uniform grid of step 1/1024 up to `1 - 1e-6`; the first
/// negative-to-positive sign change is bisected. `d = 1` has no interior
/// root and returns `(1, 1)`.
pub fn solve_gamma_d(d: usize, tol: f64) -> Result<GammaRoot, ConstantsError> {
    if d <= 1 {
        return Ok(GammaRoot {
            gamma: 1.0,
            x_star: 1.0,
        });
    }
    let df = d as f64;
    let h = |x: f64| (-(1.0 - x) / (df * x)).exp() - x;

    let mut grid = Vec::new();
    let mut x = 1e-12;
    while x < 0.5 {
        grid.push(x);
        x *= 2.0;
    }
    let mut x = 0.5;
    while x < GAMMA_BRACKET_CAP {
        grid.push(x);
        x += 1.0 / 1024.0;
    }
    grid.push(GAMMA_BRACKET_CAP);

    let bracket = grid
        .windows(2)
        .find(|w| h(w[0]) < 0.0 && h(w[1]) >= 0.0)
        .ok_or(ConstantsError::BracketFailure("gamma_d"))?;
    let x_star = bisect(h, bracket[0], bracket[1], tol)
        .ok_or(ConstantsError::BracketFailure("gamma_d"))?;
    let gamma = 1.0 / (df * x_star * (1.0 - x_star).powi(d as i32 - 1));
    Ok(GammaRoot { gamma, x_star })
}

/// `θ_{d,1}(x) = e^{-x}`, `θ_{d,2}(x) = (1+x)e^{-x} - x/(d+1) (1 - (1-e^{-x})^{d+1})`.
pub fn theta_d_ell(d: usize, ell: u32, x: f64) -> Result<f64, ConstantsError> {
    let e = (-x).exp();
    match ell {
        1 => Ok(e),
        2 => {
            let d1 = d as f64 + 1.0;
            Ok((1.0 + x) * e - x / d1 * (1.0 - (1.0 - e).powi(d as i32 + 1)))
        }
        _ => Err(ConstantsError::UnsupportedEll(ell)),
    }
}

/// `c_{d,ℓ}`: positive root of `x + (d+1) θ_{d,ℓ}(x) = d + 1`.
pub fn solve_c_d_ell(d: usize, ell: u32, tol: f64) -> Result<f64, ConstantsError> {
    theta_d_ell(d, ell, 0.0)?;
    let d1 = d as f64 + 1.0;
    solve_positive_crossing(
        |x| x + d1 * theta_d_ell(d, ell, x).expect("ell checked") - d1,
        tol,
        "c_d_ell",
    )
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport {
    pub d: usize,
    pub c_d: f64,
    pub gamma_d: f64,
    pub x_star: f64,
    pub c_d_1: f64,
    pub c_d_2: f64,
    pub tol: f64,
}

pub fn threshold_report(d: usize, tol: f64) -> Result<ThresholdReport, ConstantsError> {
    let GammaRoot { gamma, x_star } = solve_gamma_d(d, tol)?;
    Ok(ThresholdReport {
        d,
        c_d: solve_c_d(d, tol)?,
        gamma_d: gamma,
        x_star,
        c_d_1: solve_c_d_ell(d, 1, tol)?,
        c_d_2: solve_c_d_ell(d, 2, tol)?,
        tol,
    })
}

/// `ρ_d(k, γ)` for `k = 0..=K` and the limit `ρ_d(γ)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RhoCurve {
    pub d: usize,
    pub gamma: f64,
    /// `values[k] = ρ_d(k, γ)`.
    pub values: Vec<f64>,
    pub fixed_point: f64,
    pub iterations: usize,
    /// False when the iteration cap was hit before the step fell below 1e-12.
    pub converged: bool,
}

/// `ρ_d(0,γ) = e^{-γ}`, `ρ_d(k,γ) = exp(-γ (1 - ρ_d(k-1,γ))^d)`.
///
/// The fixed point is reached by continuing the same monotone iteration
/// until a step is below 1e-12 or 10^6 iterations have run.
pub fn rho_recursion(d: usize, gamma: f64, k: usize) -> RhoCurve {
    let step = |x: f64| (-gamma * (1.0 - x).powi(d as i32)).exp();
    let mut values = Vec::with_capacity(k + 1);
    let mut x = (-gamma).exp();
    values.push(x);
    for _ in 0..k {
        x = step(x);
        values.push(x);
    }

    let mut x = values[0];
    let mut iterations = 0;
    let mut converged = false;
    while iterations < RHO_MAX_ITERS {
        let next = step(x);
        iterations += 1;
        let delta = (next - x).abs();
        x = next;
        if delta < RHO_STEP_TOL {
            converged = true;
            break;
        }
    }
    RhoCurve {
        d,
        gamma,
        values,
        fixed_point: x,
        iterations,
        converged,
    }
}

/// Truncated tree generating functions at `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TreeGf {
    /// `R(z) = Σ k^{k-1} z^k / k!` over `k ≤ K`.
    pub r: f64,
    /// `T(z) = R(z) - R(z)^2 / 2` from the truncated `R`.
    pub t: f64,
    /// Bound on `|R(z) - r|`, which also bounds `|T(z) - t|`.
    pub tail_bound: f64,
    pub terms: u64,
}

/// `ln(k!) - (k ln k - k + ln(2πk)/2)`, the Stirling correction.
fn stirling_correction(k: f64) -> f64 {
    let k2 = k * k;
    (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * k2)) / k2) / k2) / k
}

/// `ln(k^{k-1} e^{-k} / k!)`, i.e. the `k`-th term of `R(1/e)` in log space.
fn log_rooted_tree_term(k: u64) -> f64 {
    let kf = k as f64;
    if k < 20 {
        let ln_fact: f64 = (2..=k).map(|j| (j as f64).ln()).sum();
        (kf - 1.0) * kf.ln() - kf - ln_fact
    } else {
        -1.5 * kf.ln() - 0.5 * (2.0 * PI).ln() - stirling_correction(kf)
    }
}

/// `R(z)` and `T(z)` by the series truncated at `terms`, summed from the
/// smallest term up.
///
/// Since `k! ≥ sqrt(2πk)(k/e)^k`, the `k`-th term is at most
/// `(ze)^k / (sqrt(2π) k^{3/2})`, so the tail after `K` terms is at most
/// `sqrt(2/(πK)) (ze)^{K+1}`. The bound adds `K·ε` for rounding.
pub fn tree_gf(z: f64, terms: u64) -> Result<TreeGf, ConstantsError> {
    let e_inv = (-1.0f64).exp();
    if !(0.0..=e_inv).contains(&z) || terms == 0 {
        return Err(ConstantsError::OutsideDomain(z));
    }
    // ln(z e) <= 0; clamp rounding at z = 1/e
    let log_ze = if z == 0.0 {
        f64::NEG_INFINITY
    } else {
        (z.ln() + 1.0).min(0.0)
    };
    let mut r = 0.0;
    for k in (1..=terms).rev() {
        let log_term = log_rooted_tree_term(k) + k as f64 * log_ze;
        r += log_term.exp();
    }
    let kf = terms as f64;
    let ratio = if z == 0.0 { 0.0 } else { log_ze.exp() };
    let tail_bound = (2.0 / (PI * kf)).sqrt() * ratio.powf(kf + 1.0) + kf * f64::EPSILON;
    Ok(TreeGf {
        r,
        t: r - 0.5 * r * r,
        tail_bound,
        terms,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GfResidual {
    pub x: f64,
    pub residual: f64,
    /// `2 · tail_bound / x`: the truncation error carried into the residual.
    pub bound: f64,
    pub gf: TreeGf,
}

pub const DEFAULT_GF_TERMS: u64 = 10_000_000;

/// `x + 2 T(x e^{-x}) / x - 2` with the series truncated at `terms`.
pub fn tilde_c1_residual_at(x: f64, terms: u64) -> Result<GfResidual, ConstantsError> {
    let gf = tree_gf(x * (-x).exp(), terms)?;
    Ok(GfResidual {
        x,
        residual: x + 2.0 * gf.t / x - 2.0,
        bound: 2.0 * gf.tail_bound / x,
        gf,
    })
}

/// The residual at `x = 1` with [`DEFAULT_GF_TERMS`] terms.
pub fn tilde_c1_residual() -> f64 {
    tilde_c1_residual_at(1.0, DEFAULT_GF_TERMS)
        .expect("x = 1 is inside the domain")
        .residual
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_d_values() {
        for d in 1..8 {
            assert_eq!(g_d_eval(d, 0.0), d as f64 + 1.0);
        }
        // 12 e^{-3} + 3 (1 - e^{-3})^3
        let e3 = (-3.0f64).exp();
        let direct = 12.0 * e3 + 3.0 * (1.0 - e3).powi(3);
        assert!((g_d_eval(2, 3.0) - direct).abs() < 1e-15);
        assert!((g_d_eval(2, 3.0) - 3.171).abs() < 5e-4);
        let c2 = solve_c_d(2, DEFAULT_TOL).unwrap();
        assert!((g_d_eval(2, c2) - 3.0).abs() < 1e-9);
    }

    #[test]
    fn c_d_values_and_rate() {
        assert!((solve_c_d(2, DEFAULT_TOL).unwrap() - 2.783).abs() <= 0.002);
        for d in 2..=10 {
            assert!(solve_c_d(d, DEFAULT_TOL).unwrap() < d as f64 + 1.0);
        }
        for d in 3..=12 {
            let c = solve_c_d(d, DEFAULT_TOL).unwrap();
            let scaled = (d as f64 + 1.0 - c) * (d as f64).exp() / d as f64;
            assert!(scaled > 0.1 && scaled < 100.0, "d={d}: {scaled}");
        }
    }

    #[test]
    fn u_d_values() {
        for d in 1..5 {
            assert_eq!(u_d_eval(2.7, 1.0, d), 0.0);
            assert!((u_d_eval(0.0, 0.3, d) - 0.7).abs() < 1e-15);
        }
        // the subcritical root near 0.081 (fixed-point iteration gives 0.078109)
        let fp = rho_recursion(2, 3.0, 0).fixed_point;
        assert!(u_d_eval(3.0, fp, 2).abs() < 1e-10);
        assert!((fp - 0.0781091).abs() < 1e-6);
        assert!(u_d_eval(3.0, 0.081, 2).abs() < 0.01);
    }

    #[test]
    fn gamma_d_values() {
        let g = |d| solve_gamma_d(d, DEFAULT_TOL).unwrap().gamma;
        assert!((g(2) - 2.455).abs() <= 0.002);
        assert!((g(3) - 3.089).abs() <= 0.002);
        assert!((g(4) - 3.508).abs() <= 0.002);
        assert!((g(100) - 7.555).abs() <= 0.002);
        for d in [50, 100, 500] {
            let ratio = g(d) / (d as f64).ln();
            assert!(ratio > 0.8 && ratio < 2.5, "d={d}: {ratio}");
        }
        assert_eq!(
            solve_gamma_d(1, DEFAULT_TOL).unwrap(),
            GammaRoot {
                gamma: 1.0,
                x_star: 1.0
            }
        );
    }

    #[test]
    fn gamma_root_is_a_double_root_of_u() {
        for d in 2..=6 {
            let GammaRoot { gamma, x_star } = solve_gamma_d(d, DEFAULT_TOL).unwrap();
            assert!(x_star > 0.0 && x_star < 1.0);
            assert!(u_d_eval(gamma, x_star, d).abs() < 1e-8);
            // ∂u/∂x = γ d (1-x)^{d-1} exp(-γ(1-x)^d) - 1
            let df = d as f64;
            let du = gamma * df * (1.0 - x_star).powi(d as i32 - 1)
                * (-gamma * (1.0 - x_star).powi(d as i32)).exp()
                - 1.0;
            assert!(du.abs() < 1e-7);
        }
    }

    #[test]
    fn roots_are_stable_under_tighter_tolerance() {
        for d in 2..=6 {
            let a = solve_c_d(d, 1e-9).unwrap();
            let b = solve_c_d(d, 1e-10).unwrap();
            assert!((a - b).abs() <= 1e-9);
            let a = solve_gamma_d(d, 1e-9).unwrap().x_star;
            let b = solve_gamma_d(d, 1e-10).unwrap().x_star;
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn rho_examples() {
        let curve = rho_recursion(2, 2.0, 5);
        assert_eq!(curve.values[0], (-2.0f64).exp());
        assert!((curve.fixed_point - 1.0).abs() < 1e-6);
        assert!(curve.converged);
        assert!(curve.values.windows(2).all(|w| w[0] <= w[1]));
        // one step of the recursion at γ = 1
        let one = rho_recursion(2, 1.0, 1);
        let e1 = (-1.0f64).exp();
        assert!((one.values[1] - (-(1.0 - e1).powi(2)).exp()).abs() < 1e-15);
        assert!((one.values[1] - 0.6706).abs() < 1e-4);
        let above = rho_recursion(2, 3.0, 0);
        assert!(above.fixed_point < 0.1);
    }

    #[test]
    fn theta_identity_and_c_d_ell() {
        for d in 1..=6 {
            assert_eq!(theta_d_ell(d, 1, 0.0).unwrap(), 1.0);
            assert_eq!(theta_d_ell(d, 2, 0.0).unwrap(), 1.0);
            for i in 0..50 {
                let x = 0.13 * i as f64;
                let lhs = x + (d as f64 + 1.0) * theta_d_ell(d, 2, x).unwrap();
                assert!((lhs - g_d_eval(d, x)).abs() < 1e-12);
            }
        }
        assert_eq!(theta_d_ell(2, 3, 1.0), Err(ConstantsError::UnsupportedEll(3)));
        assert!(solve_c_d_ell(2, 0, DEFAULT_TOL).is_err());

        // x + 3 e^{-x} = 3
        let c21 = solve_c_d_ell(2, 1, DEFAULT_TOL).unwrap();
        assert!((c21 - 2.82).abs() < 0.005);
        assert!((c21 + 3.0 * (-c21).exp() - 3.0).abs() < 1e-9);
        for d in 2..=10 {
            let c2 = solve_c_d_ell(d, 2, DEFAULT_TOL).unwrap();
            assert!((c2 - solve_c_d(d, DEFAULT_TOL).unwrap()).abs() < 1e-8);
            assert!(solve_c_d_ell(d, 1, DEFAULT_TOL).unwrap() > c2);
        }
    }

    #[test]
    fn report_orders_constants() {
        for d in 2..=10 {
            let r = threshold_report(d, DEFAULT_TOL).unwrap();
            assert!(r.gamma_d < r.c_d && r.c_d < d as f64 + 1.0);
            assert!((r.c_d_2 - r.c_d).abs() <= 10.0 * r.tol);
        }
    }

    #[test]
    fn stirling_terms_match_direct_evaluation() {
        for k in 20u64..60 {
            let kf = k as f64;
            let ln_fact: f64 = (2..=k).map(|j| (j as f64).ln()).sum();
            let direct = (kf - 1.0) * kf.ln() - kf - ln_fact;
            assert!((log_rooted_tree_term(k) - direct).abs() < 1e-12, "k={k}");
        }
    }

    #[test]
    fn tree_gf_small_cases() {
        let zero = tree_gf(0.0, 100).unwrap();
        assert_eq!((zero.r, zero.t), (0.0, 0.0));
        assert!(tree_gf(0.4, 10).is_err());

        let gf = tree_gf(0.2, 200).unwrap();
        assert!((gf.r - 0.2 * gf.r.exp()).abs() < 1e-9);
        assert!(gf.tail_bound < 1e-12);

        let at = tree_gf((-1.0f64).exp(), 100_000).unwrap();
        assert!((at.r - 1.0).abs() <= at.tail_bound);
        assert!((at.t - 0.5).abs() <= at.tail_bound);
    }

    #[test]
    fn residual_behaviour() {
        let coarse = tilde_c1_residual_at(1.0, 100_000).unwrap();
        let fine = tilde_c1_residual_at(1.0, 1_000_000).unwrap();
        assert!(coarse.residual.abs() <= coarse.bound);
        assert!(fine.residual.abs() < coarse.residual.abs());
        // identically zero below 1: R(x e^{-x}) = x
        let half = tilde_c1_residual_at(0.5, 1000).unwrap();
        assert!(half.residual.abs() <= half.bound.max(1e-14));
        // strictly positive above 1
        let two = tilde_c1_residual_at(2.0, 1000).unwrap();
        assert!(two.residual > 0.3);
    }
}
