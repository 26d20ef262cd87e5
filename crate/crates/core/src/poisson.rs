//! Collision count `Z` among the windows `W_0, ..., W_N` of an IID stream,
//! compared with a Poisson law.
//!
//! `N = floor(sqrt(2 m^k x))`, so `Z = 0` is the event that the first `N + 1`
//! windows are distinct.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::params::{Params, WindowCode};
use crate::rng::RngStream;
use crate::stats::{empirical_pmf, poisson_pmf, tv_distance, Pmf};
use crate::theory::{chen_stein_bounds, TheoryBounds};

/// Upper limit on windows held in memory for one trial.
pub const WINDOW_LIMIT: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CollisionRecord {
    pub z: u64,
    /// `N`; the trial looked at `N + 1` windows.
    pub n_windows: u64,
    pub x: f64,
}

/// Number of unordered equal pairs, `sum_v C(mult(v), 2)`. Sorts in place.
pub fn collision_pairs(codes: &mut [u64]) -> u64 {
    codes.sort_unstable();
    codes
        .chunk_by(|a, b| a == b)
        .map(|run| {
            let c = run.len() as u64;
            c * (c - 1) / 2
        })
        .sum()
}

/// Codes of the windows `W_0, ..., W_count-1` of a fresh IID stream.
fn window_codes(params: Params, count: u64, stream: &mut RngStream) -> Vec<u64> {
    let m = params.m();
    let mut code = WindowCode(0);
    for _ in 0..params.k() {
        code = params.roll_unchecked(code, stream.next_symbol(m));
    }
    let mut codes = Vec::with_capacity(count as usize);
    if count > 0 {
        codes.push(code.0);
    }
    while (codes.len() as u64) < count {
        code = params.roll_unchecked(code, stream.next_symbol(m));
        codes.push(code.0);
    }
    codes
}

pub fn sample_z(params: Params, x: f64, stream: &mut RngStream) -> Result<CollisionRecord> {
    let bounds = chen_stein_bounds(params, x)?;
    sample_z_with(params, &bounds, stream)
}

fn sample_z_with(
    params: Params,
    bounds: &TheoryBounds,
    stream: &mut RngStream,
) -> Result<CollisionRecord> {
    let count = bounds.n_windows.saturating_add(1);
    if count > WINDOW_LIMIT {
        return Err(Error::Capacity {
            what: "windows per collision trial",
            required: count as u128,
            limit: WINDOW_LIMIT as u128,
        });
    }
    let mut codes = window_codes(params, count, stream);
    Ok(CollisionRecord {
        z: collision_pairs(&mut codes),
        n_windows: bounds.n_windows,
        x: bounds.x,
    })
}

/// `n_trials` collision counts; trial `i` reads stream `(master_seed, i)`.
pub fn run_collisions(
    params: Params,
    x: f64,
    n_trials: u64,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Vec<CollisionRecord>> {
    let bounds = chen_stein_bounds(params, x)?;
    map_indexed(n_trials, workers, |i| {
        sample_z_with(params, &bounds, &mut RngStream::new(master_seed, i))
    })
    .into_iter()
    .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonGap {
    pub n_trials: u64,
    pub bounds: TheoryBounds,
    /// TV distance between the empirical law of `Z` and Poisson(`lambda`).
    pub tv_empirical: f64,
    /// Monte Carlo scale `sqrt(support / n)` of `tv_empirical`.
    pub tv_error_bar: f64,
    /// `b1 + b2`.
    pub bound: f64,
    pub p0_empirical: f64,
    pub p0_poisson: f64,
    pub p0_gap: f64,
    pub p0_se: f64,
    pub mean_z: f64,
    pub mean_z_se: f64,
    /// Exact `E Z = C(N + 1, 2) m^{-k}` for the `N + 1` simulated windows.
    pub expected_z: f64,
    pub pmf: Pmf<u64>,
}

/// Minimum trial count accepted by [`poisson_gap`].
pub const MIN_GAP_TRIALS: u64 = 10_000;

pub fn poisson_gap(
    params: Params,
    x: f64,
    n_trials: u64,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<PoissonGap> {
    if n_trials < MIN_GAP_TRIALS {
        return Err(Error::domain(format!(
            "poisson_gap needs at least {MIN_GAP_TRIALS} trials, got {n_trials}"
        )));
    }
    let records = run_collisions(params, x, n_trials, master_seed, workers)?;
    summarize_collisions(params, x, &records)
}

/// Compares recorded collision counts with Poisson(`lambda`).
pub fn summarize_collisions(
    params: Params,
    x: f64,
    records: &[CollisionRecord],
) -> Result<PoissonGap> {
    if records.is_empty() {
        return Err(Error::domain("no collision records to summarize"));
    }
    let bounds = chen_stein_bounds(params, x)?;
    let n = records.len() as f64;
    let pmf = empirical_pmf(records.iter().map(|r| r.z));
    let max_z = records.iter().map(|r| r.z).max().unwrap_or(0);
    let lambda = bounds.lambda;
    let upper = ((lambda + 40.0 * lambda.sqrt() + 40.0).ceil() as u64).max(max_z);
    let reference: Pmf<u64> = (0..=upper).map(|j| (j, poisson_pmf(lambda, j))).collect();
    let tv_empirical = tv_distance(&pmf, &reference)?;

    let p0_empirical = pmf.get(&0).copied().unwrap_or(0.0);
    let p0_poisson = (-lambda).exp();
    let zs: Vec<f64> = records.iter().map(|r| r.z as f64).collect();
    let mean_z = zs.iter().sum::<f64>() / n;
    let var_z = zs.iter().map(|z| (z - mean_z).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    Ok(PoissonGap {
        n_trials: records.len() as u64,
        bounds,
        tv_empirical,
        tv_error_bar: (pmf.len() as f64 / n).sqrt(),
        bound: bounds.total(),
        p0_empirical,
        p0_poisson,
        p0_gap: (p0_empirical - p0_poisson).abs(),
        p0_se: (p0_empirical * (1.0 - p0_empirical) / n).sqrt(),
        mean_z,
        mean_z_se: (var_z / n).sqrt(),
        expected_z: bounds.pair_count_alt / params.states() as f64,
        pmf,
    })
}
