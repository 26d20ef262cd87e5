//! Exact laws for tiny `(m, k)` by exhaustive enumeration.
//!
//! Two independent routes: every map table together with every seed, and
//! every IID symbol sequence long enough to force a repeat. Both produce
//! integer counts; probabilities are formed only at the end.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::params::{Params, WindowCode};
use crate::seqsim::sample_rho_from_stream;
use crate::stats::Pmf;

/// Work limit for map enumeration: `m^M * M * M`.
pub const MAP_WORK_LIMIT: u128 = 1_000_000_000;
/// Limit on the number of enumerated sequences, `m^(M + k)`.
pub const SEQUENCE_LIMIT: u128 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointAtom {
    pub mu: u64,
    pub tau: u64,
    pub count: u64,
}

/// Exact law of `(mu, tau)` under a uniform map and uniform seed, plus the
/// per-map seed census.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactDistribution {
    pub params: Params,
    /// Number of `(map, seed)` pairs, `m^M * M`.
    pub total: u64,
    pub maps_total: u64,
    pub joint: Vec<JointAtom>,
    pub maps_without_period1: u64,
    /// Sum over maps of the number of distinct cycles.
    pub cycles_sum: u64,
    /// Sum over maps of the largest seed `tau`.
    pub tau_star_sum: u64,
    pub e_tau: f64,
    pub p_period1: f64,
    pub e_num_cycles: f64,
    pub p_no_seed_period1: f64,
    pub e_tau_star: f64,
}

impl ExactDistribution {
    pub fn joint_pmf(&self) -> Pmf<(u64, u64)> {
        joint_to_pmf(&self.joint, self.total)
    }

    pub fn marginal_tau(&self) -> Pmf<u64> {
        marginal(&self.joint, self.total, |a| a.tau)
    }

    pub fn marginal_period(&self) -> Pmf<u64> {
        marginal(&self.joint, self.total, |a| a.tau - a.mu)
    }

    pub fn count_where(&self, pred: impl Fn(&JointAtom) -> bool) -> u64 {
        self.joint.iter().filter(|a| pred(a)).map(|a| a.count).sum()
    }
}

/// Exact law of `(mu, tau)` under an IID uniform symbol sequence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceLaw {
    pub params: Params,
    /// Sequence length `M + k`, the largest possible `tau`.
    pub horizon: u32,
    /// `m^horizon`.
    pub total: u64,
    pub joint: Vec<JointAtom>,
}

impl SequenceLaw {
    pub fn joint_pmf(&self) -> Pmf<(u64, u64)> {
        joint_to_pmf(&self.joint, self.total)
    }

    pub fn marginal_tau(&self) -> Pmf<u64> {
        marginal(&self.joint, self.total, |a| a.tau)
    }
}

fn joint_to_pmf(joint: &[JointAtom], total: u64) -> Pmf<(u64, u64)> {
    joint
        .iter()
        .map(|a| ((a.mu, a.tau), a.count as f64 / total as f64))
        .collect()
}

fn marginal(joint: &[JointAtom], total: u64, key: impl Fn(&JointAtom) -> u64) -> Pmf<u64> {
    let mut counts: BTreeMap<u64, u64> = BTreeMap::new();
    for a in joint {
        *counts.entry(key(a)).or_insert(0) += a.count;
    }
    counts
        .into_iter()
        .map(|(k, c)| (k, c as f64 / total as f64))
        .collect()
}

fn checked_pow(base: u64, exp: u64) -> Option<u128> {
    let mut acc: u128 = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base as u128)?;
    }
    Some(acc)
}

#[derive(Default)]
struct MapTally {
    joint: BTreeMap<(u64, u64), u64>,
    maps: u64,
    maps_without_period1: u64,
    cycles_sum: u64,
    tau_star_sum: u64,
}

impl MapTally {
    fn merge(mut self, other: MapTally) -> MapTally {
        for (key, c) in other.joint {
            *self.joint.entry(key).or_insert(0) += c;
        }
        self.maps += other.maps;
        self.maps_without_period1 += other.maps_without_period1;
        self.cycles_sum += other.cycles_sum;
        self.tau_star_sum += other.tau_star_sum;
        self
    }
}

/// Brute-force census of one table: walks every seed with a stamp array.
fn tally_map(params: Params, table: &[u64], stamp: &mut [u64], tally: &mut MapTally) {
    let states = table.len();
    let k = params.k() as u64;
    let mut cycle_ids: Vec<u64> = Vec::new();
    let mut tau_star = 0u64;
    let mut any_period1 = false;
    let mut path: Vec<u64> = Vec::with_capacity(states + 1);
    for seed in 0..states as u64 {
        stamp.iter_mut().for_each(|s| *s = 0);
        path.clear();
        let mut state = seed;
        let mut index = 1u64;
        loop {
            let seen = stamp[state as usize];
            if seen != 0 {
                let (s, r) = (seen, index);
                let mu = s + k - 1;
                let tau = r + k - 1;
                *tally.joint.entry((mu, tau)).or_insert(0) += 1;
                tau_star = tau_star.max(tau);
                any_period1 |= r - s == 1;
                let cycle_min = path[(s - 1) as usize..]
                    .iter()
                    .copied()
                    .min()
                    .expect("cycle");
                cycle_ids.push(cycle_min);
                break;
            }
            stamp[state as usize] = index;
            path.push(state);
            let x = table[state as usize];
            state = params.roll_unchecked(WindowCode(state), x).0;
            index += 1;
        }
    }
    cycle_ids.sort_unstable();
    cycle_ids.dedup();
    tally.maps += 1;
    tally.cycles_sum += cycle_ids.len() as u64;
    tally.tau_star_sum += tau_star;
    if !any_period1 {
        tally.maps_without_period1 += 1;
    }
}

/// Writes the base-`m` digits of `index` into `table`, least significant in
/// the last slot.
fn odometer_set(table: &mut [u64], mut index: u128, m: u64) {
    for slot in table.iter_mut().rev() {
        *slot = (index % m as u128) as u64;
        index /= m as u128;
    }
}

fn odometer_next(table: &mut [u64], m: u64) {
    for slot in table.iter_mut().rev() {
        *slot += 1;
        if *slot < m {
            return;
        }
        *slot = 0;
    }
}

fn chunk_ranges(total: u128, chunks: u128) -> Vec<(u128, u128)> {
    let chunks = chunks.min(total).max(1);
    (0..chunks)
        .map(|c| (total * c / chunks, total * (c + 1) / chunks))
        .filter(|(a, b)| a < b)
        .collect()
}

/// Enumerates all `m^(m^k)` maps and all `m^k` seeds.
pub fn enumerate_maps_exact(params: Params) -> Result<ExactDistribution> {
    enumerate_maps_impl(params, None)
}

/// Same census with every enumerated table conjugated by the symbol
/// permutation `perm` (`f -> perm . f . perm^-1` on windows). The resulting
/// law must not change.
pub fn enumerate_maps_exact_relabeled(params: Params, perm: &[u64]) -> Result<ExactDistribution> {
    let m = params.m() as usize;
    let mut seen = vec![false; m];
    if perm.len() != m
        || perm
            .iter()
            .any(|&p| p as usize >= m || std::mem::replace(&mut seen[p as usize], true))
    {
        return Err(Error::domain("relabeling must be a permutation of 0..m"));
    }
    enumerate_maps_impl(params, Some(perm))
}

fn relabel_window(params: Params, code: u64, perm: &[u64]) -> u64 {
    let symbols = params.decode(WindowCode(code)).expect("valid code");
    let mapped: Vec<u64> = symbols.iter().map(|&x| perm[x as usize]).collect();
    params.encode(&mapped).expect("valid symbols").0
}

fn enumerate_maps_impl(params: Params, perm: Option<&[u64]>) -> Result<ExactDistribution> {
    let states = params.states();
    let m = params.m();
    let maps = checked_pow(m, states);
    let work = maps.and_then(|n| n.checked_mul(states as u128 * states as u128));
    let work = match work {
        Some(w) if w <= MAP_WORK_LIMIT => w,
        other => {
            return Err(Error::Capacity {
                what: "exhaustive map enumeration work m^M * M^2",
                required: other.unwrap_or(u128::MAX),
                limit: MAP_WORK_LIMIT,
            })
        }
    };
    let maps = maps.expect("bounded by work");
    debug_assert!(work <= MAP_WORK_LIMIT);

    let window_perm: Option<Vec<u64>> =
        perm.map(|p| (0..states).map(|c| relabel_window(params, c, p)).collect());

    let tally = chunk_ranges(maps, 256)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut tally = MapTally::default();
            let mut table = vec![0u64; states as usize];
            let mut conj = vec![0u64; states as usize];
            let mut stamp = vec![0u64; states as usize];
            odometer_set(&mut table, lo, m);
            for _ in lo..hi {
                match (&window_perm, perm) {
                    (Some(wp), Some(p)) => {
                        for (c, &v) in table.iter().enumerate() {
                            conj[wp[c] as usize] = p[v as usize];
                        }
                        tally_map(params, &conj, &mut stamp, &mut tally);
                    }
                    _ => tally_map(params, &table, &mut stamp, &mut tally),
                }
                odometer_next(&mut table, m);
            }
            tally
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(MapTally::default(), MapTally::merge);

    let maps_total = tally.maps;
    let total = maps_total * states;
    let joint: Vec<JointAtom> = tally
        .joint
        .iter()
        .map(|(&(mu, tau), &count)| JointAtom { mu, tau, count })
        .collect();
    let tau_sum: u128 = joint.iter().map(|a| a.tau as u128 * a.count as u128).sum();
    let period1: u64 = joint
        .iter()
        .filter(|a| a.tau - a.mu == 1)
        .map(|a| a.count)
        .sum();
    Ok(ExactDistribution {
        params,
        total,
        maps_total,
        maps_without_period1: tally.maps_without_period1,
        cycles_sum: tally.cycles_sum,
        tau_star_sum: tally.tau_star_sum,
        e_tau: tau_sum as f64 / total as f64,
        p_period1: period1 as f64 / total as f64,
        e_num_cycles: tally.cycles_sum as f64 / maps_total as f64,
        p_no_seed_period1: tally.maps_without_period1 as f64 / maps_total as f64,
        e_tau_star: tally.tau_star_sum as f64 / maps_total as f64,
        joint,
    })
}

/// Enumerates every symbol sequence of length `M + k` and records the first
/// window repeat of each.
pub fn enumerate_sequences_exact(params: Params) -> Result<SequenceLaw> {
    let m = params.m();
    let horizon_wide = params.states() as u128 + params.k() as u128;
    let total = u32::try_from(horizon_wide)
        .ok()
        .and_then(|h| checked_pow(m, h as u64));
    let total = match total {
        Some(t) if t <= SEQUENCE_LIMIT => t,
        other => {
            return Err(Error::Capacity {
                what: "exhaustive sequence enumeration m^(M + k)",
                required: other.unwrap_or(u128::MAX),
                limit: SEQUENCE_LIMIT,
            })
        }
    };
    let horizon = horizon_wide as u32;

    let joint = chunk_ranges(total, 256)
        .into_par_iter()
        .map(|(lo, hi)| {
            let mut counts: BTreeMap<(u64, u64), u64> = BTreeMap::new();
            let mut seq = vec![0u64; horizon as usize];
            odometer_set(&mut seq, lo, m);
            for _ in lo..hi {
                let r = sample_rho_from_stream(seq.iter().copied(), params)
                    .expect("M + k symbols always force a repeat");
                *counts.entry((r.mu, r.tau)).or_insert(0) += 1;
                odometer_next(&mut seq, m);
            }
            counts
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(BTreeMap::new(), |mut acc, part| {
            for (key, c) in part {
                *acc.entry(key).or_insert(0u64) += c;
            }
            acc
        });

    Ok(SequenceLaw {
        params,
        horizon,
        total: total as u64,
        joint: joint
            .into_iter()
            .map(|((mu, tau), count)| JointAtom { mu, tau, count })
            .collect(),
    })
}
