//! Closed-form reference values: limit moments of `tau`, the exact birthday
//! product, hazard moments and the Chen-Stein bound terms for window
//! collisions.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::params::Params;
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TauMoments {
    pub mean: f64,
    pub variance: f64,
    /// Moment convergence is proven only for `k = 2`; other arities carry the
    /// distributional scaling over as a heuristic.
    pub heuristic: bool,
}

/// Limit moments `E tau ~ m^{k/2} sqrt(pi/2)` and
/// `Var tau ~ (2 - pi/2) m^k`.
pub fn asymptotic_tau_moments(params: Params) -> TauMoments {
    let states = params.states() as f64;
    TauMoments {
        mean: states.sqrt() * (PI / 2.0).sqrt(),
        variance: (2.0 - PI / 2.0) * states,
        heuristic: params.k() != 2,
    }
}

/// Exp(1) survival `e^{-x}`.
pub fn exponential_tail(x: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::domain(format!(
            "tail point must be nonnegative, got {x}"
        )));
    }
    Ok((-x).exp())
}

/// Probability that `n` IID uniform draws from `population` values are all
/// distinct: `prod_{i=1}^{n-1} (1 - i/M)`.
pub fn birthday_survival(population: u64, n: u64) -> f64 {
    if population == 0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if n > population {
        return 0.0;
    }
    let m = population as f64;
    let mut p = 1.0;
    for i in 1..n {
        p *= 1.0 - i as f64 / m;
        if p == 0.0 {
            break;
        }
    }
    p
}

/// Chen-Stein quantities for the collision count among windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoryBounds {
    pub x: f64,
    /// `N = floor(sqrt(2 m^k x))`.
    pub n_windows: u64,
    /// `C(N, 2)`, the pair count used for `lambda`.
    pub pair_count: f64,
    /// `C(N + 1, 2)`, the number of pairs `0 <= i < j <= N`.
    pub pair_count_alt: f64,
    /// `C(N, 2) m^{-k}`.
    pub lambda: f64,
    /// `C(N + 1, 2) m^{-k}`.
    pub lambda_alt: f64,
    pub b1: f64,
    pub b2: f64,
}

impl TheoryBounds {
    pub fn total(&self) -> f64 {
        self.b1 + self.b2
    }
}

fn choose2(n: f64) -> f64 {
    n * (n - 1.0) / 2.0
}

/// Neighborhood bounds for the Poisson approximation of window collisions.
///
/// Every pair `(i, j)` has collision probability `m^{-k}`. A pair has at most
/// `8kN` dependent neighbours, giving `b1 <= lambda * 8kN * m^{-k}`; pairs
/// with both ends near `(i, j)` (fewer than `16 k^2`) collide jointly with
/// probability at most `m^{-k-1}`, the rest with `m^{-2k}`, giving
/// `b2 <= C(N,2) (16 k^2 m^{-k-1} + 8kN m^{-2k})`.
pub fn chen_stein_bounds(params: Params, x: f64) -> Result<TheoryBounds> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::domain(format!(
            "x must be positive and finite, got {x}"
        )));
    }
    let m = params.m() as f64;
    let k = params.k() as f64;
    let states = params.states() as f64;
    // M fits in u64, so M^2 < 2^128 stays far inside f64 range.
    let inv_states = 1.0 / states;
    let n_windows = (2.0 * states * x).sqrt().floor() as u64;
    let n = n_windows as f64;
    let pair_count = choose2(n);
    let pair_count_alt = choose2(n + 1.0);
    let lambda = pair_count * inv_states;
    let b1 = lambda * (8.0 * k * n) * inv_states;
    let b2 = pair_count * (16.0 * k * k * inv_states / m + 8.0 * k * n * inv_states * inv_states);
    Ok(TheoryBounds {
        x,
        n_windows,
        pair_count,
        pair_count_alt,
        lambda,
        lambda_alt: pair_count_alt * inv_states,
        b1,
        b2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HazardMoments {
    pub mean: f64,
    pub variance: f64,
}

/// Exact mean `C(s,2)/m^2` and variance `C(s,2)(m^{-3} - m^{-4})` of the
/// linearized hazard after `s` IID symbols.
pub fn hazard_h_moments(steps: u64, m: u64) -> Result<HazardMoments> {
    if steps < 2 {
        return Err(Error::domain(format!("need at least 2 steps, got {steps}")));
    }
    if m == 0 {
        return Err(Error::domain("alphabet size m must be at least 1"));
    }
    let pairs = choose2(steps as f64);
    let m = m as f64;
    Ok(HazardMoments {
        mean: pairs / (m * m),
        variance: pairs * (1.0 / (m * m * m) - 1.0 / (m * m * m * m)),
    })
}

/// Inverse transform for Exp(1) conditioned below `x`:
/// `-ln(1 - u (1 - e^{-x}))`. `x = inf` gives the plain Exp(1) transform.
pub fn conditioned_exp_quantile(x: f64, u: f64) -> f64 {
    // exp_m1 / ln_1p keep precision when x or u is tiny.
    -(u * (-x).exp_m1()).ln_1p()
}

/// Draws Exp(1) conditioned to lie in `(0, x)`.
pub fn sample_conditioned_exp(x: f64, stream: &mut RngStream) -> Result<f64> {
    if !(x > 0.0) {
        return Err(Error::domain(format!(
            "conditioning bound must be positive, got {x}"
        )));
    }
    let u = stream.next_open01();
    Ok(conditioned_exp_quantile(x, u).min(x.next_down()))
}

/// Probability that windows `W_i` and `W_j` coincide, `m^{-k}` for every
/// `i < j` including overlapping windows.
pub fn window_collision_prob(params: Params, i: u64, j: u64) -> Result<f64> {
    if i >= j {
        return Err(Error::domain(format!("need i < j, got i = {i}, j = {j}")));
    }
    Ok(1.0 / params.states() as f64)
}
