//! Explicit random maps `f: [m]^k -> [m]` and the functional graph they
//! induce on window codes.

use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::exec::map_indexed;
use crate::params::{Params, WindowCode};
use crate::rng::RngStream;
use crate::seqsim::RhoResult;

/// Largest table `build_map` fills in dense mode unless told otherwise.
pub const DEFAULT_DENSE_BUDGET: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MapMode {
    /// All `M` entries drawn at construction.
    Dense,
    /// Entries drawn on first access and memoized.
    Lazy,
}

#[derive(Debug, Clone)]
enum Storage {
    Dense(Vec<u64>),
    Lazy {
        memo: FxHashMap<u64, u64>,
        stream: RngStream,
    },
}

/// A sampled map, indexed by window code.
#[derive(Debug, Clone)]
pub struct MapTable {
    params: Params,
    storage: Storage,
}

pub fn build_map(params: Params, stream: RngStream, mode: MapMode) -> Result<MapTable> {
    build_map_with_budget(params, stream, mode, DEFAULT_DENSE_BUDGET)
}

pub fn build_map_with_budget(
    params: Params,
    mut stream: RngStream,
    mode: MapMode,
    budget: u64,
) -> Result<MapTable> {
    let storage = match mode {
        MapMode::Dense => {
            if params.states() > budget {
                return Err(Error::Capacity {
                    what: "dense map table",
                    required: params.states() as u128,
                    limit: budget as u128,
                });
            }
            let m = params.m();
            Storage::Dense(
                (0..params.states())
                    .map(|_| stream.next_symbol(m))
                    .collect(),
            )
        }
        MapMode::Lazy => Storage::Lazy {
            memo: FxHashMap::default(),
            stream,
        },
    };
    Ok(MapTable { params, storage })
}

impl MapTable {
    /// Dense map from an explicit value table (`values[code] = f(window)`).
    pub fn from_values(params: Params, values: Vec<u64>) -> Result<Self> {
        if values.len() as u64 != params.states() {
            return Err(Error::domain(format!(
                "table has {} entries, expected M = {}",
                values.len(),
                params.states()
            )));
        }
        if let Some(&bad) = values.iter().find(|&&v| v >= params.m()) {
            return Err(Error::domain(format!(
                "table value {bad} outside [0, {})",
                params.m()
            )));
        }
        Ok(MapTable {
            params,
            storage: Storage::Dense(values),
        })
    }

    pub fn params(&self) -> Params {
        self.params
    }

    pub fn mode(&self) -> MapMode {
        match self.storage {
            Storage::Dense(_) => MapMode::Dense,
            Storage::Lazy { .. } => MapMode::Lazy,
        }
    }

    /// Dense table contents, if dense.
    pub fn values(&self) -> Option<&[u64]> {
        match &self.storage {
            Storage::Dense(v) => Some(v),
            Storage::Lazy { .. } => None,
        }
    }

    /// `f(window)`; draws and memoizes the entry in lazy mode.
    pub fn eval(&mut self, code: WindowCode) -> u64 {
        match &mut self.storage {
            Storage::Dense(v) => v[code.0 as usize],
            Storage::Lazy { memo, stream } => {
                let m = self.params.m();
                *memo.entry(code.0).or_insert_with(|| stream.next_symbol(m))
            }
        }
    }

    /// Next state of the recursion.
    #[inline]
    pub fn step(&mut self, code: WindowCode) -> WindowCode {
        let x = self.eval(code);
        self.params.roll_unchecked(code, x)
    }

    /// Whether some `j` has `f(j, ..., j) = j`.
    pub fn has_diag_fixed_point(&mut self) -> bool {
        let params = self.params;
        (0..params.m()).any(|j| {
            let d = params.diagonal(j).expect("j < m");
            self.eval(d) == j
        })
    }
}

/// Iterates the map from `seed` until a state repeats.
pub fn trajectory(map: &mut MapTable, seed: WindowCode) -> Result<RhoResult> {
    let params = map.params();
    params.check_code(seed)?;
    let mut first_seen: FxHashMap<u64, u64> = FxHashMap::default();
    let mut state = seed;
    let mut index = 1u64;
    first_seen.insert(state.0, index);
    loop {
        state = map.step(state);
        index += 1;
        if let Some(&first) = first_seen.get(&state.0) {
            return Ok(RhoResult::from_window_repeat(params, first, index));
        }
        first_seen.insert(state.0, index);
    }
}

/// Per-state distance to the cycle and cycle length of a dense map.
#[derive(Debug, Clone)]
pub struct Decomposition {
    params: Params,
    tail: Vec<u32>,
    cycle_len: Vec<u32>,
    cycle_hist: BTreeMap<u64, u64>,
}

impl Decomposition {
    pub fn seed_rho(&self, seed: WindowCode) -> RhoResult {
        let i = seed.0 as usize;
        RhoResult::from_tail_cycle(self.params, self.tail[i] as u64, self.cycle_len[i] as u64)
    }

    pub fn seed_taus(&self) -> impl Iterator<Item = u64> + '_ {
        let k = self.params.k() as u64;
        self.tail
            .iter()
            .zip(&self.cycle_len)
            .map(move |(&t, &c)| t as u64 + c as u64 + k)
    }

    /// Cycle length -> number of distinct cycles with that length.
    pub fn cycle_hist(&self) -> &BTreeMap<u64, u64> {
        &self.cycle_hist
    }

    pub fn on_cycle(&self, code: WindowCode) -> bool {
        self.tail[code.0 as usize] == 0
    }
}

const UNVISITED: u8 = 0;
const ON_PATH: u8 = 1;
const RESOLVED: u8 = 2;

/// Splits the functional graph of a dense map into cycles and the trees
/// hanging off them, in one pass with an explicit path stack.
pub fn decompose(map: &MapTable) -> Result<Decomposition> {
    let params = map.params();
    let values = map
        .values()
        .ok_or_else(|| Error::domain("graph analysis needs a dense map"))?;
    if params.states() > u32::MAX as u64 {
        return Err(Error::Capacity {
            what: "graph analysis state count",
            required: params.states() as u128,
            limit: u32::MAX as u128,
        });
    }
    let n = params.states() as usize;
    let next = |s: usize| params.roll_unchecked(WindowCode(s as u64), values[s]).0 as usize;

    let mut color = vec![UNVISITED; n];
    let mut tail = vec![0u32; n];
    let mut cycle_len = vec![0u32; n];
    let mut cycle_hist = BTreeMap::new();
    let mut path: Vec<usize> = Vec::new();

    for start in 0..n {
        if color[start] != UNVISITED {
            continue;
        }
        path.clear();
        let mut v = start;
        while color[v] == UNVISITED {
            color[v] = ON_PATH;
            path.push(v);
            v = next(v);
        }
        if color[v] == ON_PATH {
            // New cycle: the path suffix starting at v.
            let pos = path
                .iter()
                .rposition(|&u| u == v)
                .expect("v is on the path");
            let len = (path.len() - pos) as u32;
            for &u in &path[pos..] {
                color[u] = RESOLVED;
                tail[u] = 0;
                cycle_len[u] = len;
            }
            *cycle_hist.entry(len as u64).or_insert(0) += 1;
            path.truncate(pos);
        }
        // v is resolved now; unwind the rest of the path towards it.
        let (mut t, c) = (tail[v], cycle_len[v]);
        while let Some(u) = path.pop() {
            t += 1;
            color[u] = RESOLVED;
            tail[u] = t;
            cycle_len[u] = c;
        }
    }
    Ok(Decomposition {
        params,
        tail,
        cycle_len,
        cycle_hist,
    })
}

/// Seed census of one map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphStats {
    /// Largest `tau` over all seeds.
    pub tau_star: u64,
    pub mean_tau: f64,
    pub n_cycles: u64,
    pub cycle_length_hist: BTreeMap<u64, u64>,
    pub frac_seeds_period1: f64,
    pub has_diag_fixed_point: bool,
    pub states_on_cycles: u64,
}

pub fn analyze_graph(map: &MapTable) -> Result<GraphStats> {
    let d = decompose(map)?;
    Ok(stats_from_decomposition(map, &d))
}

pub fn stats_from_decomposition(map: &MapTable, d: &Decomposition) -> GraphStats {
    let params = map.params();
    let n = params.states();
    let (mut tau_star, mut tau_sum, mut period1) = (0u64, 0u128, 0u64);
    for (tau, &c) in d.seed_taus().zip(&d.cycle_len) {
        tau_star = tau_star.max(tau);
        tau_sum += tau as u128;
        if c == 1 {
            period1 += 1;
        }
    }
    let values = map.values().expect("decomposition implies dense");
    let has_diag_fixed_point = (0..params.m()).any(|j| {
        let dcode = params.diagonal(j).expect("j < m");
        values[dcode.0 as usize] == j
    });
    GraphStats {
        tau_star,
        mean_tau: tau_sum as f64 / n as f64,
        n_cycles: d.cycle_hist.values().sum(),
        states_on_cycles: d.cycle_hist.iter().map(|(len, cnt)| len * cnt).sum(),
        cycle_length_hist: d.cycle_hist.clone(),
        frac_seeds_period1: period1 as f64 / n as f64,
        has_diag_fixed_point,
    }
}

/// Draws a dense random map and a uniform seed from one stream and returns
/// the seed's trajectory.
pub fn random_map_rho(params: Params, mut stream: RngStream) -> Result<RhoResult> {
    let seed = WindowCode(stream.next_symbol(params.states()));
    let mut map = build_map(params, stream, MapMode::Dense)?;
    trajectory(&mut map, seed)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub estimate: f64,
    pub stderr: f64,
    /// `1 - (1 - 1/m)^m`.
    pub exact: f64,
    pub n: u64,
}

/// Estimates `P(exists j: f(j, ..., j) = j)` by sampling only the `m`
/// diagonal entries of each map.
pub fn diag_fixed_point_prob(
    m: u64,
    n_maps: u64,
    master_seed: u64,
    workers: Option<usize>,
) -> Result<Estimate> {
    if m == 0 {
        return Err(Error::domain("alphabet size m must be at least 1"));
    }
    if n_maps == 0 {
        return Err(Error::domain("n_maps must be at least 1"));
    }
    let hits = map_indexed(n_maps, workers, |i| {
        let mut s = RngStream::new(master_seed, i);
        (0..m).any(|j| s.next_symbol(m) == j)
    });
    let p = hits.iter().filter(|&&h| h).count() as f64 / n_maps as f64;
    Ok(Estimate {
        estimate: p,
        stderr: (p * (1.0 - p) / n_maps as f64).sqrt(),
        exact: 1.0 - (1.0 - 1.0 / m as f64).powf(m as f64),
        n: n_maps,
    })
}
