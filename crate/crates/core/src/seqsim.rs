//! Rho shape of trajectories driven by an IID uniform symbol stream.
//!
//! Before the first repeated window every new symbol of a random-map
//! trajectory is a fresh uniform draw, so `(tau, X_1, ..., X_tau)` has the
//! same law whether the symbols come from a random `f` or from an IID stream.
//! Simulating the stream needs no map table at all.
//!
//! Indexing: window `W_i = (X_i, ..., X_{i+k-1})` for `i >= 1`. If `W_R` is the
//! first window equal to an earlier `W_s`, then `tau = R + k - 1`,
//! `mu = s + k - 1` and the period is `R - s`.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::params::{Params, WindowCode};
use crate::rng::RngStream;
use crate::stats::{self, StatSummary};
use crate::theory::conditioned_exp_quantile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RhoResult {
    /// X-index where the repeated window first ended.
    pub mu: u64,
    /// X-index of the last symbol of the first repeated window.
    pub tau: u64,
    pub period: u64,
    /// Symbols before the periodic part: `mu - k`.
    pub tail: u64,
}

impl RhoResult {
    /// Builds the result from the 1-based indices of the earlier occurrence
    /// (`first`) and the repeat (`repeat`) of a window.
    pub fn from_window_repeat(params: Params, first: u64, repeat: u64) -> Self {
        debug_assert!(1 <= first && first < repeat);
        let k = params.k() as u64;
        RhoResult {
            mu: first + k - 1,
            tau: repeat + k - 1,
            period: repeat - first,
            tail: first - 1,
        }
    }

    /// Builds the result from the graph view: `tail` steps to reach a cycle
    /// of length `cycle`.
    pub fn from_tail_cycle(params: Params, tail: u64, cycle: u64) -> Self {
        Self::from_window_repeat(params, tail + 1, tail + cycle + 1)
    }
}

/// Seen-window table of one trajectory.
struct WindowLog {
    first_seen: FxHashMap<u64, u64>,
}

impl WindowLog {
    fn new() -> Self {
        WindowLog {
            first_seen: FxHashMap::default(),
        }
    }

    /// Records window `index`; returns the earlier index on a repeat.
    #[inline]
    fn visit(&mut self, code: WindowCode, index: u64) -> Option<u64> {
        match self.first_seen.entry(code.0) {
            std::collections::hash_map::Entry::Occupied(e) => Some(*e.get()),
            std::collections::hash_map::Entry::Vacant(v) => {
                v.insert(index);
                None
            }
        }
    }

    fn distinct(&self) -> usize {
        self.first_seen.len()
    }
}

/// Consumes symbols until a window repeats.
///
/// Returns [`Error::IncompleteTrajectory`] if the driver runs dry first and
/// [`Error::Domain`] on a symbol outside `0..m`.
pub fn sample_rho_from_stream<I>(driver: I, params: Params) -> Result<RhoResult>
where
    I: IntoIterator<Item = u64>,
{
    let mut symbols = driver.into_iter();
    let mut consumed = 0u64;
    let mut next = || -> Result<u64> {
        let x = symbols
            .next()
            .ok_or(Error::IncompleteTrajectory { consumed })?;
        consumed += 1;
        if x >= params.m() {
            return Err(Error::Domain(format!(
                "driver symbol {x} outside [0, {})",
                params.m()
            )));
        }
        Ok(x)
    };

    let mut code = WindowCode(0);
    for _ in 0..params.k() {
        code = params.roll_unchecked(code, next()?);
    }
    let mut log = WindowLog::new();
    log.visit(code, 1);
    let mut index = 1u64;
    loop {
        code = params.roll_unchecked(code, next()?);
        index += 1;
        if let Some(first) = log.visit(code, index) {
            debug_assert_eq!(log.distinct() as u64, index - 1);
            return Ok(RhoResult::from_window_repeat(params, first, index));
        }
    }
}

/// One trajectory from a random map and uniform seed, simulated through the
/// IID stream.
pub fn sample_rho(params: Params, stream: &mut RngStream) -> RhoResult {
    let m = params.m();
    let mut code = WindowCode(0);
    for _ in 0..params.k() {
        code = params.roll_unchecked(code, stream.next_symbol(m));
    }
    let mut log = WindowLog::new();
    log.visit(code, 1);
    let mut index = 1u64;
    loop {
        code = params.roll_unchecked(code, stream.next_symbol(m));
        index += 1;
        if let Some(first) = log.visit(code, index) {
            return RhoResult::from_window_repeat(params, first, index);
        }
    }
}

/// Per-step hazard quantities of one `k = 2` trajectory.
///
/// Vectors are indexed by X-position: entry `j - 1` holds the value for
/// `X_j`, for `j = 1, ..., tau - 1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardTrace {
    /// `Y_j`: number of earlier positions holding the symbol `X_j`.
    pub y: Vec<u32>,
    /// `A_j = Y_j / m`, the conditional chance that the next symbol closes
    /// a repeated window.
    pub a: Vec<f64>,
    /// `h(j) = -ln(1 - A_j)`.
    pub h_steps: Vec<f64>,
    /// Fractional terminal hazard, Exp(1) conditioned below `h(tau - 1)`.
    pub h_star: f64,
    /// `h_star + sum_{j <= tau-2} h(j)`; exactly Exp(1).
    pub h_total: f64,
    /// Linearized hazard `H(j) = sum_{i <= j} A_i`.
    pub h_cum: Vec<f64>,
    /// Symbol counts among `X_1, ..., X_{tau-1}` (nonzero entries only).
    pub occupancy: BTreeMap<u64, u32>,
}

impl HazardTrace {
    /// `h(tau - 1)`, the hazard of the step that produced the repeat.
    pub fn terminal_hazard(&self) -> f64 {
        self.h_steps.last().copied().unwrap_or(0.0)
    }

    /// `sum_{j <= tau-1} h(j)`.
    pub fn hazard_sum(&self) -> f64 {
        self.h_steps.iter().sum()
    }

    /// `H(tau - 1)`.
    pub fn h_final(&self) -> f64 {
        self.h_cum.last().copied().unwrap_or(0.0)
    }

    pub fn max_y(&self) -> u32 {
        self.y.iter().copied().max().unwrap_or(0)
    }
}

/// Simulates a `k = 2` trajectory and records its hazard trace.
pub fn sample_rho_with_hazard(
    params: Params,
    stream: &mut RngStream,
) -> Result<(RhoResult, HazardTrace)> {
    if params.k() != 2 {
        return Err(Error::UnsupportedArity {
            k: params.k(),
            reason: "hazard instrumentation is defined for k = 2 only",
        });
    }
    let m = params.m();
    let mf = m as f64;
    let mut counts: FxHashMap<u64, u32> = FxHashMap::default();
    let mut trace = HazardTrace {
        y: Vec::new(),
        a: Vec::new(),
        h_steps: Vec::new(),
        h_star: 0.0,
        h_total: 0.0,
        h_cum: Vec::new(),
        occupancy: BTreeMap::new(),
    };
    let mut h_running = 0.0;

    let mut push = |x: u64, trace: &mut HazardTrace| {
        let c = counts.entry(x).or_insert(0);
        let y = *c;
        *c += 1;
        let a = y as f64 / mf;
        h_running += a;
        trace.y.push(y);
        trace.a.push(a);
        trace.h_steps.push(-(-a).ln_1p());
        trace.h_cum.push(h_running);
    };

    let x1 = stream.next_symbol(m);
    let x2 = stream.next_symbol(m);
    push(x1, &mut trace);
    let mut code = params.roll_unchecked(WindowCode(x1), x2);
    let mut log = WindowLog::new();
    log.visit(code, 1);
    let mut index = 1u64;
    let mut newest = x2;
    let rho = loop {
        // X_{index+1} is `newest`; its Y is final once it is in the counts.
        push(newest, &mut trace);
        let x = stream.next_symbol(m);
        code = params.roll_unchecked(code, x);
        index += 1;
        if let Some(first) = log.visit(code, index) {
            break RhoResult::from_window_repeat(params, first, index);
        }
        newest = x;
    };
    debug_assert_eq!(trace.y.len() as u64, rho.tau - 1);

    let terminal = trace.terminal_hazard();
    assert!(terminal > 0.0, "a repeat implies Y_(tau-1) > 0");
    let head: f64 = trace.h_steps[..trace.h_steps.len() - 1].iter().sum();
    let u = stream.next_open01();
    trace.h_star = conditioned_exp_quantile(terminal, u).min(terminal.next_down());
    trace.h_total = trace.h_star + head;
    trace.occupancy = counts.into_iter().collect();
    Ok((rho, trace))
}

/// Linearized hazard `H(steps) = (1/m) sum_v C(T(v), 2)` of `steps` IID
/// symbols, with no stopping at the first repeat.
pub fn sample_linearized_hazard(m: u64, steps: u64, stream: &mut RngStream) -> f64 {
    let mut counts: FxHashMap<u64, u64> = FxHashMap::default();
    for _ in 0..steps {
        *counts.entry(stream.next_symbol(m)).or_insert(0) += 1;
    }
    let pairs: u64 = counts.values().map(|&t| t * t.saturating_sub(1) / 2).sum();
    pairs as f64 / m as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchOptions {
    pub hazard: bool,
    /// Threshold `x` for the tail fraction `P(tau^2 / (2 m^k) >= x)`.
    pub x_threshold: f64,
    /// Largest period reported in the period pmf.
    pub max_reported_period: u64,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        BatchOptions {
            hazard: false,
            x_threshold: 1.0,
            max_reported_period: 8,
            workers: None,
        }
    }
}

/// One line of trial output.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: u64,
    pub mu: u64,
    pub tau: u64,
    pub period: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub h_total: Option<f64>,
    #[serde(rename = "H_final", skip_serializing_if = "Option::is_none", default)]
    pub h_final: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Batch {
    pub records: Vec<TrialRecord>,
    pub summary: StatSummary,
}

impl Batch {
    pub fn taus(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.tau as f64).collect()
    }

    /// `tau^2 / (2 m^k)` per trial.
    pub fn scaled_taus(&self, params: Params) -> Vec<f64> {
        let two_m = 2.0 * params.states() as f64;
        self.records
            .iter()
            .map(|r| (r.tau as f64) * (r.tau as f64) / two_m)
            .collect()
    }

    pub fn mu_over_tau(&self) -> Vec<f64> {
        self.records
            .iter()
            .map(|r| r.mu as f64 / r.tau as f64)
            .collect()
    }
}

/// Runs `n_trials` independent trajectories; trial `i` reads stream
/// `(master_seed, i)`. Summaries fold in trial order, so output is identical
/// for every worker count.
pub fn batch_sample(
    params: Params,
    n_trials: u64,
    master_seed: u64,
    options: BatchOptions,
) -> Result<Batch> {
    if n_trials == 0 {
        return Err(Error::domain("n_trials must be at least 1"));
    }
    if options.hazard && params.k() != 2 {
        return Err(Error::UnsupportedArity {
            k: params.k(),
            reason: "hazard instrumentation is defined for k = 2 only",
        });
    }
    let records = map_indexed(n_trials, options.workers, |trial| {
        let mut stream = RngStream::new(master_seed, trial);
        if options.hazard {
            let (rho, trace) =
                sample_rho_with_hazard(params, &mut stream).expect("arity checked above");
            TrialRecord {
                trial,
                mu: rho.mu,
                tau: rho.tau,
                period: rho.period,
                h_total: Some(trace.h_total),
                h_final: Some(trace.h_final()),
            }
        } else {
            let rho = sample_rho(params, &mut stream);
            TrialRecord {
                trial,
                mu: rho.mu,
                tau: rho.tau,
                period: rho.period,
                h_total: None,
                h_final: None,
            }
        }
    });
    let summary = summarize(params, &records, &options)?;
    Ok(Batch { records, summary })
}

fn summarize(
    params: Params,
    records: &[TrialRecord],
    options: &BatchOptions,
) -> Result<StatSummary> {
    let n = records.len() as f64;
    let taus: Vec<f64> = records.iter().map(|r| r.tau as f64).collect();
    let mut summary = StatSummary::from_samples(&taus)?;

    let two_m = 2.0 * params.states() as f64;
    let scaled: Vec<f64> = taus.iter().map(|t| t * t / two_m).collect();
    summary.ks = Some(stats::ks_test(&scaled, stats::exp1_cdf)?);

    let tail = scaled.iter().filter(|&&s| s >= options.x_threshold).count() as f64 / n;
    let ratios: Vec<f64> = records.iter().map(|r| r.mu as f64 / r.tau as f64).collect();
    let extra = &mut summary.extra;
    extra.insert("x_threshold".into(), options.x_threshold);
    extra.insert("tail_fraction".into(), tail);
    extra.insert("tail_fraction_se".into(), (tail * (1.0 - tail) / n).sqrt());
    extra.insert("mean_mu_over_tau".into(), ratios.iter().sum::<f64>() / n);
    extra.insert(
        "corr_mu_over_tau_tau".into(),
        stats::correlation(&ratios, &taus),
    );
    extra.insert(
        "ks_mu_over_tau".into(),
        stats::ks_test(&ratios, stats::unit_uniform_cdf)?.statistic,
    );
    for p in 1..=options.max_reported_period {
        let c = records.iter().filter(|r| r.period == p).count() as f64;
        extra.insert(format!("period_pmf.{p}"), c / n);
    }
    if options.hazard {
        let h: Vec<f64> = records.iter().filter_map(|r| r.h_total).collect();
        extra.insert("h_total_mean".into(), h.iter().sum::<f64>() / n);
        extra.insert(
            "ks_h_total".into(),
            stats::ks_test(&h, stats::exp1_cdf)?.statistic,
        );
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn p(m: u64, k: u32) -> Params {
        Params::new(m, k).unwrap()
    }

    fn rho(mu: u64, tau: u64, period: u64, tail: u64) -> RhoResult {
        RhoResult {
            mu,
            tau,
            period,
            tail,
        }
    }

    #[test]
    fn single_state_repeats_immediately() {
        let r = sample_rho_from_stream(std::iter::repeat(0), p(1, 2)).unwrap();
        assert_eq!(r, rho(2, 3, 1, 0));
        let r = sample_rho(p(1, 2), &mut RngStream::new(1, 1));
        assert_eq!(r, rho(2, 3, 1, 0));
    }

    #[test]
    fn hand_traced_drivers() {
        assert_eq!(
            sample_rho_from_stream([0, 1, 0, 1], p(3, 2)).unwrap(),
            rho(2, 4, 2, 0)
        );
        assert_eq!(
            sample_rho_from_stream([0, 0, 0], p(2, 2)).unwrap(),
            rho(2, 3, 1, 0)
        );
        // k = 1 reduces to the unary birthday problem.
        assert_eq!(
            sample_rho_from_stream([4, 2, 7, 2], p(8, 1)).unwrap(),
            rho(2, 4, 2, 1)
        );
    }

    #[test]
    fn driver_errors() {
        assert_eq!(
            sample_rho_from_stream([0, 1, 0], p(3, 2)),
            Err(Error::IncompleteTrajectory { consumed: 3 })
        );
        assert!(matches!(
            sample_rho_from_stream([0, 5, 0], p(3, 2)),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn stream_and_driver_agree() {
        let params = p(7, 3);
        for idx in 0..50 {
            let a = sample_rho(params, &mut RngStream::new(11, idx));
            let mut s = RngStream::new(11, idx);
            let b = sample_rho_from_stream(s.symbols(7), params).unwrap();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn hazard_single_step_trace() {
        // A stream starting 0, 0, 0 at m = 2: the second window repeats the first.
        let params = p(2, 2);
        let idx = (0..)
            .find(|&i| {
                let mut s = RngStream::new(5, i);
                (0..3).all(|_| s.next_symbol(2) == 0)
            })
            .unwrap();
        let (r, t) = sample_rho_with_hazard(params, &mut RngStream::new(5, idx)).unwrap();
        assert_eq!(r.tau, 3);
        assert_eq!(t.y, vec![0, 1]);
        assert_eq!(t.a, vec![0.0, 0.5]);
        assert_abs_diff_eq!(t.terminal_hazard(), 2f64.ln(), epsilon = 1e-15);
        assert_eq!(t.h_total, t.h_star);
        assert!(t.h_star > 0.0 && t.h_star < 2f64.ln());
    }

    #[test]
    fn hazard_rejects_other_arity() {
        let err = sample_rho_with_hazard(p(10, 3), &mut RngStream::new(0, 0)).unwrap_err();
        assert!(matches!(err, Error::UnsupportedArity { k: 3, .. }));
        assert!(batch_sample(
            p(10, 3),
            5,
            0,
            BatchOptions {
                hazard: true,
                ..Default::default()
            }
        )
        .is_err());
    }

    #[test]
    fn hazard_trace_matches_plain_trajectory() {
        let params = p(13, 2);
        for idx in 0..200 {
            let plain = sample_rho(params, &mut RngStream::new(8, idx));
            let (r, _) = sample_rho_with_hazard(params, &mut RngStream::new(8, idx)).unwrap();
            assert_eq!(plain, r);
        }
    }

    #[test]
    fn hazard_trace_invariants() {
        for m in [1u64, 2, 3, 10, 97] {
            let params = p(m, 2);
            for idx in 0..300 {
                let (r, t) = sample_rho_with_hazard(params, &mut RngStream::new(m, idx)).unwrap();
                let len = (r.tau - 1) as usize;
                assert_eq!(t.y.len(), len);
                for (i, &y) in t.y.iter().enumerate() {
                    let j = i as u32 + 1;
                    assert!(y < j);
                    assert!(t.a[i] >= 0.0 && t.a[i] <= 1.0);
                    // Only the terminal step can make a repeat certain.
                    if i + 1 < len {
                        assert!(t.a[i] < 1.0);
                    }
                    assert!(t.h_steps[i] >= t.a[i]);
                }
                assert!(t.h_cum.windows(2).all(|w| w[1] >= w[0]));
                let terminal = t.terminal_hazard();
                assert!(terminal > 0.0);
                assert!(t.h_star >= 0.0 && t.h_star < terminal);
                // truncation bound
                let gap = t.hazard_sum() - t.h_total;
                assert!(gap >= -1e-12 && gap <= terminal + 1e-12);
                // occupancy identity for H
                let pairs: u64 = t
                    .occupancy
                    .values()
                    .map(|&c| c as u64 * (c as u64).saturating_sub(1) / 2)
                    .sum();
                assert_abs_diff_eq!(t.h_final(), pairs as f64 / m as f64, epsilon = 1e-9);
                assert_eq!(
                    t.occupancy.values().map(|&c| c as u64).sum::<u64>(),
                    r.tau - 1
                );
            }
        }
    }

    #[test]
    fn batch_of_one_matches_sample_rho() {
        let params = p(50, 2);
        let b = batch_sample(params, 1, 42, BatchOptions::default()).unwrap();
        let r = sample_rho(params, &mut RngStream::new(42, 0));
        assert_eq!(b.records.len(), 1);
        assert_eq!(
            (b.records[0].mu, b.records[0].tau, b.records[0].period),
            (r.mu, r.tau, r.period)
        );
        assert!(batch_sample(params, 0, 42, BatchOptions::default()).is_err());
    }

    #[test]
    fn batch_is_worker_independent() {
        let params = p(40, 2);
        let opts = |w| BatchOptions {
            hazard: true,
            workers: Some(w),
            ..Default::default()
        };
        let a = batch_sample(params, 500, 9, opts(1)).unwrap();
        let b = batch_sample(params, 500, 9, opts(5)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn linearized_hazard_matches_running_sum() {
        let mut s = RngStream::new(1, 2);
        let mut t = s.clone();
        let h = sample_linearized_hazard(50, 60, &mut s);
        let mut counts = std::collections::HashMap::new();
        let mut running = 0.0;
        for _ in 0..60 {
            let c = counts.entry(t.next_symbol(50)).or_insert(0u32);
            running += *c as f64 / 50.0;
            *c += 1;
        }
        assert_abs_diff_eq!(h, running, epsilon = 1e-12);
    }

    proptest! {
        #[test]
        fn rho_invariants(m in 1u64..40, k in 1u32..4, seed in any::<u64>()) {
            let params = p(m, k);
            let r = sample_rho(params, &mut RngStream::new(seed, 0));
            let k = k as u64;
            prop_assert!(k <= r.mu && r.mu < r.tau);
            prop_assert!(r.period >= 1 && r.tau >= k + 1);
            prop_assert_eq!(r.period + r.tail + k, r.tau);
            prop_assert_eq!(r.period, r.tau - r.mu);
            prop_assert!(r.tau <= params.states() + k);
        }

        #[test]
        fn windows_before_repeat_distinct(m in 1u64..20, k in 1u32..4, seed in any::<u64>()) {
            let params = p(m, k);
            let mut s = RngStream::new(seed, 1);
            let xs: Vec<u64> = s.symbols(m).take((params.states() + k as u64 + 1) as usize).collect();
            let r = sample_rho_from_stream(xs.iter().copied(), params).unwrap();
            let kk = k as usize;
            let windows: Vec<&[u64]> = xs.windows(kk).collect();
            let repeat = (r.tau as usize + 1) - kk; // R, 1-based
            let first = (r.mu as usize + 1) - kk;
            let seen: std::collections::HashSet<&[u64]> = windows[..repeat - 1].iter().copied().collect();
            prop_assert_eq!(seen.len(), repeat - 1);
            prop_assert_eq!(windows[repeat - 1], windows[first - 1]);
        }
    }
}
