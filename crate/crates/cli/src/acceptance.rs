//! The acceptance suite: fourteen numbered criteria, each a fixed-seed
//! experiment plus a list of threshold checks on its observed values.
//!
//! Every criterion produces its raw data as JSON-lines blobs. Criterion 14
//! reruns the others with a different worker count and compares the blobs
//! byte for byte.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use rho_lab::exec::map_indexed;
use rho_lab::mapgraph::{analyze_graph, build_map, diag_fixed_point_prob, random_map_rho, MapMode};
use rho_lab::oracle::{enumerate_maps_exact, enumerate_sequences_exact};
use rho_lab::poisson::{run_collisions, summarize_collisions};
use rho_lab::seqsim::{batch_sample, sample_linearized_hazard, BatchOptions, TrialRecord};
use rho_lab::stats::{empirical_pmf, tv_distance};
use rho_lab::theory::{asymptotic_tau_moments, hazard_h_moments};
use rho_lab::{Params, RngStream};

use crate::config::RunConfig;
use crate::error::CliError;
use crate::output::{fmt_num, jsonl_bytes, sha256_hex, ToolInfo};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Rule {
    Below { limit: f64 },
    AtMost { limit: f64 },
    Between { lo: f64, hi: f64 },
}

impl Rule {
    /// NaN never passes.
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Rule::Below { limit } => v < limit,
            Rule::AtMost { limit } => v <= limit,
            Rule::Between { lo, hi } => lo <= v && v <= hi,
        }
    }

    /// Same rule kind with new bounds: `"0.01"` for one-sided rules,
    /// `"lo:hi"` for ranges.
    pub fn with_value(&self, value: &str) -> Result<Rule, String> {
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {s:?}"))
        };
        match self {
            Rule::Below { .. } => Ok(Rule::Below { limit: num(value)? }),
            Rule::AtMost { .. } => Ok(Rule::AtMost { limit: num(value)? }),
            Rule::Between { .. } => {
                let (lo, hi) = value
                    .split_once(':')
                    .ok_or_else(|| format!("range threshold needs lo:hi, got {value:?}"))?;
                Ok(Rule::Between {
                    lo: num(lo)?,
                    hi: num(hi)?,
                })
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Rule::Below { limit } => format!("< {}", fmt_num(limit)),
            Rule::AtMost { limit } => format!("<= {}", fmt_num(limit)),
            Rule::Between { lo, hi } if lo == hi => format!("== {}", fmt_num(lo)),
            Rule::Between { lo, hi } => format!("in [{}, {}]", fmt_num(lo), fmt_num(hi)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    pub rule: Rule,
    pub pass: bool,
}

impl Check {
    fn new(name: impl Into<String>, observed: f64, rule: Rule) -> Self {
        Check {
            name: name.into(),
            observed,
            rule,
            pass: rule.holds(observed),
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{}  {}  observed={}  threshold: {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            fmt_num(self.observed),
            self.rule.describe()
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DataFile {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub title: String,
    /// What the expected value rests on, e.g. `limit-law`, `exact-identity`.
    pub basis: String,
    pub checks: Vec<Check>,
    /// Informational values that are not thresholded.
    pub details: BTreeMap<String, f64>,
    pub data_files: Vec<DataFile>,
    pub elapsed_secs: f64,
    pub pass: bool,
}

impl CriterionReport {
    pub fn headline(&self) -> String {
        format!(
            "{} criterion {:>2}: {} [{}] ({} s)",
            if self.pass { "PASS" } else { "FAIL" },
            self.id,
            self.title,
            self.basis,
            fmt_num((self.elapsed_secs * 100.0).round() / 100.0)
        )
    }

    fn refresh(&mut self) {
        for c in &mut self.checks {
            c.pass = c.rule.holds(c.observed);
        }
        self.pass = self.checks.iter().all(|c| c.pass);
    }
}

#[derive(Debug, Clone)]
pub struct DataBlob {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone)]
pub struct CriterionRun {
    pub report: CriterionReport,
    pub data: Vec<DataBlob>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub master_seed: u64,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy)]
pub struct CriterionSpec {
    pub id: u32,
    pub title: &'static str,
    pub basis: &'static str,
    pub runtime_limit_secs: Option<f64>,
}

pub const CRITERIA: [CriterionSpec; 14] = [
    spec(1, "hazard total is exactly Exp(1)", "exact-law", Some(10.0)),
    spec(2, "mean rho length", "limit-law", Some(30.0)),
    spec(3, "variance of rho length", "limit-law", None),
    spec(4, "exponential tail, k = 2", "limit-law", None),
    spec(5, "exponential law, k = 3", "limit-law", Some(60.0)),
    spec(6, "normalized joint limit of (mu, tau)", "limit-law", None),
    spec(
        7,
        "exact oracle anchor at m = 2, k = 2",
        "exact-enumeration",
        Some(60.0),
    ),
    spec(
        8,
        "random maps vs IID driver",
        "monte-carlo-consistency",
        None,
    ),
    spec(
        9,
        "Poisson approximation of window collisions",
        "approximation-bound",
        Some(120.0),
    ),
    spec(10, "diagonal fixed points", "analytic-formula", None),
    spec(11, "period-1 scaling in m", "scaling-heuristic", None),
    spec(
        12,
        "tail of the largest rho length",
        "tail-bound",
        Some(60.0),
    ),
    spec(13, "linearized hazard moments", "moment-formula", None),
    spec(
        14,
        "results independent of worker count",
        "determinism",
        None,
    ),
];

const fn spec(
    id: u32,
    title: &'static str,
    basis: &'static str,
    limit: Option<f64>,
) -> CriterionSpec {
    CriterionSpec {
        id,
        title,
        basis,
        runtime_limit_secs: limit,
    }
}

pub fn criterion_spec(id: u32) -> Option<&'static CriterionSpec> {
    CRITERIA.iter().find(|c| c.id == id)
}

/// Per-criterion master seed; sub-runs add small offsets.
fn seed_for(cfg: &SuiteConfig, id: u32, sub: u64) -> u64 {
    cfg.master_seed
        .wrapping_add(u64::from(id).wrapping_mul(1_000_003))
        .wrapping_add(sub)
}

fn params(m: u64, k: u32) -> Params {
    Params::new(m, k).expect("acceptance parameters are valid")
}

struct Outcome {
    checks: Vec<Check>,
    details: BTreeMap<String, f64>,
    data: Vec<DataBlob>,
}

impl Outcome {
    fn new() -> Self {
        Outcome {
            checks: Vec::new(),
            details: BTreeMap::new(),
            data: Vec::new(),
        }
    }

    fn check(&mut self, id: u32, name: &str, observed: f64, rule: Rule) {
        self.checks
            .push(Check::new(format!("c{id:02}.{name}"), observed, rule));
    }

    fn detail(&mut self, name: &str, v: f64) {
        self.details.insert(name.to_string(), v);
    }

    fn blob<T: Serialize>(&mut self, id: u32, suffix: &str, records: &[T]) {
        let name = if suffix.is_empty() {
            format!("criterion-{id:02}.jsonl")
        } else {
            format!("criterion-{id:02}-{suffix}.jsonl")
        };
        self.data.push(DataBlob {
            name,
            bytes: jsonl_bytes(records),
        });
    }
}

/// Runs one criterion (1 to 13). Criterion 14 needs the others; see
/// [`run_suite`] and [`determinism_report`].
pub fn run_criterion(id: u32, cfg: &SuiteConfig) -> Result<CriterionRun, CliError> {
    let spec = criterion_spec(id)
        .filter(|s| s.id != 14)
        .ok_or_else(|| CliError::Usage(format!("no runnable criterion {id}")))?;
    let start = Instant::now();
    let mut out = Outcome::new();
    match id {
        1 => hazard_law(cfg, &mut out)?,
        2..=4 | 6 => theorem_m1000(id, cfg, &mut out)?,
        5 => general_k(cfg, &mut out)?,
        7 => oracle_anchor(cfg, &mut out)?,
        8 => measure_equivalence(cfg, &mut out)?,
        9 => chen_stein(cfg, &mut out)?,
        10 => diagonal(cfg, &mut out)?,
        11 => period_one_scaling(cfg, &mut out)?,
        12 => tau_star_tail(cfg, &mut out)?,
        13 => h_moments(cfg, &mut out)?,
        _ => unreachable!("criterion ids are 1..=14"),
    }
    let elapsed = start.elapsed().as_secs_f64();
    if let Some(limit) = spec.runtime_limit_secs {
        out.check(id, "runtime_secs", elapsed, Rule::Below { limit });
    }
    let mut report = CriterionReport {
        id,
        title: spec.title.to_string(),
        basis: spec.basis.to_string(),
        checks: out.checks,
        details: out.details,
        data_files: out
            .data
            .iter()
            .map(|b| DataFile {
                name: b.name.clone(),
                bytes: b.bytes.len() as u64,
                sha256: sha256_hex(&b.bytes),
            })
            .collect(),
        elapsed_secs: elapsed,
        pass: false,
    };
    report.refresh();
    Ok(CriterionRun {
        report,
        data: out.data,
    })
}

fn hazard_law(cfg: &SuiteConfig, out: &mut Outcome) -> Result<(), CliError> {
    let opts = BatchOptions {
        hazard: true,
        workers: cfg.workers,
        ..Default::default()
    };
    let b = batch_sample(params(10, 2), 100_000, seed_for(cfg, 1, 0), opts)?;
    out.check(
        1,
        "ks_h_total",
        b.summary.extra["ks_h_total"],
        Rule::Below { limit: 0.006 },
    );
    out.detail("h_total_mean", b.summary.extra["h_total_mean"]);
    out.blob(1, "", &b.records);
    Ok(())
}

fn theorem_m1000(id: u32, cfg: &SuiteConfig, out: &mut Outcome) -> Result<(), CliError> {
    let p = params(1000, 2);
    let opts = BatchOptions {
        workers: cfg.workers,
        ..Default::default()
    };
    // Criteria 2, 3, 4 and 6 share one run.
    let b = batch_sample(p, 10_000, seed_for(cfg, 2, 0), opts)?;
    let theory = asymptotic_tau_moments(p);
    let s = &b.summary;
    match id {
        2 => {
            out.check(
                2,
                "mean_ratio",
                s.mean / theory.mean,
                Rule::Between { lo: 0.97, hi: 1.03 },
            );
            out.detail("mean_tau", s.mean);
            out.detail("mean_tau_se", s.mean_se);
            out.detail("theory_mean", theory.mean);
        }
        3 => {
            out.check(
                3,
                "variance_ratio",
                s.variance / theory.variance,
                Rule::Between { lo: 0.85, hi: 1.15 },
            );
            out.detail("variance_tau", s.variance);
            out.detail("theory_variance", theory.variance);
        }
        4 => {
            let tail = s.extra["tail_fraction"];
            out.check(
                4,
                "tail_gap",
                (tail - (-1f64).exp()).abs(),
                Rule::Below { limit: 0.02 },
            );
            out.detail("tail_fraction", tail);
            out.detail("tail_fraction_se", s.extra["tail_fraction_se"]);
        }
        6 => {
            out.check(
                6,
                "mean_mu_over_tau",
                s.extra["mean_mu_over_tau"],
                Rule::Between { lo: 0.48, hi: 0.52 },
            );
            out.check(
                6,
                "ks_mu_over_tau",
                s.extra["ks_mu_over_tau"],
                Rule::Below { limit: 0.03 },
            );
            out.check(
                6,
                "abs_corr_mu_over_tau_tau",
                s.extra["corr_mu_over_tau_tau"].abs(),
                Rule::Below { limit: 0.05 },
            );
        }
        _ => unreachable!(),
    }
    out.blob(id, "", &b.records);
    Ok(())
}

fn general_k(cfg: &SuiteConfig, out: &mut Outcome) -> Result<(), CliError> {
    let p = params(100, 3);
    let opts = BatchOptions {
        workers: cfg.workers,
        ..Default::default()
    };
    let b = batch_sample(p, 10_000, seed_for(cfg, 5, 0), opts)?;
    let ks = b
        .summary
        .ks
        .as_ref()
        .expect("batch summary carries KS")
        .statistic;
    let theory = asymptotic_tau_moments(p);
    out.check(5, "ks_scaled_tau", ks, Rule::Below { limit: 0.03 });
    out.check(
        5,
        "mean_ratio",
        b.summary.mean / theory.mean,
        Rule::Between { lo: 0.97, hi: 1.03 },
    );
    out.detail("mean_tau", b.summary.mean);
    out.blob(5, "", &b.records);
    Ok(())
}

fn oracle_anchor(cfg: &SuiteConfig, out: &mut Outcome) -> Result<(), CliError> {
    let p = params(2, 2);
    let maps = enumerate_maps_exact(p)?;
    let seqs = enumerate_sequences_exact(p)?;
    let first = maps.count_where(|a| a.tau == 3) as f64 / maps.total as f64;
    let exact = Rule::Between { lo: 0.25, hi: 0.25 };
    out.check(7, "p_tau_eq_3", first, exact);
    out.check(7, "p_no_seed_period1", maps.p_no_seed_period1, exact);
    let oracle_pmf = maps.joint_pmf();
    out.check(
        7,
        "tv_map_vs_sequence_oracle",
        tv_distance(&oracle_pmf, &seqs.joint_pmf())?,
        Rule::Below { limit: 1e-12 },
    );
    let opts = BatchOptions {
        workers: cfg.workers,
        ..Default::default()
    };
    let b = batch_sample(p, 100_000, seed_for(cfg, 7, 0), opts)?;
    let mc = empirical_pmf(b.records.iter().map(|r| (r.mu, r.tau)));
    out.check(
        7,
        "tv_monte_carlo_vs_oracle",
        tv_distance(&mc, &oracle_pmf)?,
        Rule::Below { limit: 0.01 },
    );
    out.detail("e_tau", maps.e_tau);
    out.detail("p_period1", maps.p_period1);
    out.detail("e_tau_star", maps.e_tau_star);
    out.detail("e_num_cycles", maps.e_num_cycles);
    out.blob(7, "", &b.records);
    Ok(())
}

fn trial_record(trial: u64, r: rho_lab::RhoResult) -> TrialRecord {
    TrialRecord {
        trial,
        mu: r.mu,
        tau: r.tau,
        period: r.period,
        h_total: None,
        h_final: None,
    }
}

fn measure_equivalence(cfg: &SuiteConfig, out: &mut Outcome) -> Result<(), CliError> {
    let p = params(3, 2);
    let n = 100_000;
    let map_seed = seed_for(cfg, 8, 0);
    let maps = map_indexed(n, cfg.workers, |i| {
        random_map_rho(p, RngStream::new(map_seed, i)).map(|r| trial_record(i, r))
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    let opts = BatchOptions {
        workers: cfg.workers,
        ..Default::default()
    };
    let seq = batch_sample(p, n, seed_for(cfg, 8, 1), opts)?;
    let a = empirical_pmf(maps.iter().map(|r| r.tau));
    let b = empirical_pmf(seq.records.iter().map(|r| r.tau));
    out.check(
        8,
        "tv_tau_maps_vs_sequence",
        tv_distance(&a, &b)?,
        Rule::Below { limit: 0.01 },
    );
    out.blob(8, "maps", &maps);
    out.blob(8, "sequence", &seq.records);
    Ok(())
}

#[derive(Serialize)]
struct ZRecord {
    trial: u64,
    z: u64,
}

fn chen_stein(cfg: &SuiteConfig, out: &mut Outcome) -> Result<(), CliError> {
    let x = 0.5;
    let mut gaps = Vec::new();
    for (sub, m) in [30u64, 100, 300].into_iter().enumerate() {
        let p = params(m, 2);
        let records = run_collisions(p, x, 100_000, seed_for(cfg, 9, sub as u64), cfg.workers)?;
        let gap = summarize_collisions(p, x, &records)?;
        out.detail(&format!("m{m}.tv_empirical"), gap.tv_empirical);
        out.detail(&format!("m{m}.tv_error_bar"), gap.tv_error_bar);
        out.detail(&format!("m{m}.p0_gap"), gap.p0_gap);
        out.detail(&format!("m{m}.lambda"), gap.bounds.lambda);
        out.detail(&format!("m{m}.b1_plus_b2"), gap.bound);
        let z: Vec<ZRecord> = records
            .iter()
            .enumerate()
            .map(|(i, r)| ZRecord {
                trial: i as u64,
                z: r.z,
            })
            .collect();
        out.blob(9, &format!("m{m}"), &z);
        gaps.push(gap);
    }
    out.check(
        9,
        "p0_gap_m30",
        gaps[0].p0_gap,
        Rule::AtMost {
            limit: gaps[0].bound,
        },
    );
    out.check(
        9,
        "tv_m300",
        gaps[2].tv_empirical,
        Rule::Below { limit: 0.05 },
    );
    for (lo, hi, label) in [
        (0, 1, "tv_rise_m30_to_m100"),
        (1, 2, "tv_rise_m100_to_m300"),
    ] {
        let rise = gaps[hi].tv_empirical - gaps[lo].tv_empirical;
        let bar = gaps[hi].tv_error_bar + gaps[lo].tv_error_bar;
        out.check(9, label, rise, Rule::AtMost { limit: bar });
    }
    Ok(())
}

fn diagonal(cfg: &SuiteConfig, out: &mut Outcome) -> Result<(), CliError> {
    let est = diag_fixed_point_prob(1000, 10_000, seed_for(cfg, 10, 0), cfg.workers)?;
    out.check(
        10,
        "abs_error",
        (est.estimate - est.exact).abs(),
        Rule::AtMost { limit: 0.01 },
    );
    out.detail("estimate", est.estimate);
    out.detail("stderr", est.stderr);
    out.detail("exact", est.exact);
    out.blob(10, "", &[est]);
    Ok(())
}

/// Least-squares slope of `ys` against `xs`.
fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn period_one_scaling(cfg: &SuiteConfig, out: &mut Outcome) -> Result<(), CliError> {
    let ms = [100u64, 200, 400];
    let mut log_m = Vec::new();
    let mut log_p = Vec::new();
    for (sub, &m) in ms.iter().enumerate() {
        let opts = BatchOptions {
            workers: cfg.workers,
            ..Default::default()
        };
        let b = batch_sample(params(m, 2), 100_000, seed_for(cfg, 11, sub as u64), opts)?;
        let ones = b.records.iter().filter(|r| r.period == 1).count() as f64;
        let phat = ones / b.records.len() as f64;
        out.detail(&format!("m{m}.p_period1"), phat);
        log_m.push((m as f64).ln());
        log_p.push(phat.ln());
        out.blob(11, &format!("m{m}"), &b.records);
    }
    let s = slope(&log_m, &log_p);
    out.detail("slope", s);
    out.check(
        11,
        "slope_error",
        (s + 1.0).abs(),
        Rule::AtMost { limit: 0.3 },
    );
    Ok(())
}

#[derive(Serialize)]
struct MapRecord {
    map: u64,
    tau_star: u64,
    mean_tau: f64,
    n_cycles: u64,
    states_on_cycles: u64,
}

fn tau_star_tail(cfg: &SuiteConfig, out: &mut Outcome) -> Result<(), CliError> {
    let (m, k) = (100u64, 2u32);
    let p = params(m, k);
    let threshold = (3.0 * k as f64 * p.states() as f64 * (m as f64).ln()).sqrt();
    let seed = seed_for(cfg, 12, 0);
    let maps = map_indexed(200, cfg.workers, |i| {
        let map = build_map(p, RngStream::new(seed, i), MapMode::Dense)?;
        let g = analyze_graph(&map)?;
        Ok(MapRecord {
            map: i,
            tau_star: g.tau_star,
            mean_tau: g.mean_tau,
            n_cycles: g.n_cycles,
            states_on_cycles: g.states_on_cycles,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, rho_lab::Error>>()?;
    let above = maps
        .iter()
        .filter(|r| r.tau_star as f64 > threshold)
        .count() as f64;
    out.check(
        12,
        "fraction_above",
        above / maps.len() as f64,
        Rule::Below { limit: 0.1 },
    );
    out.detail("threshold", threshold);
    out.detail(
        "mean_tau_star",
        maps.iter().map(|r| r.tau_star as f64).sum::<f64>() / maps.len() as f64,
    );
    out.blob(12, "", &maps);
    Ok(())
}

#[derive(Serialize)]
struct HRecord {
    trial: u64,
    #[serde(rename = "H")]
    h: f64,
}

fn h_moments(cfg: &SuiteConfig, out: &mut Outcome) -> Result<(), CliError> {
    let (m, steps, n) = (50u64, 60u64, 100_000u64);
    let seed = seed_for(cfg, 13, 0);
    let hs = map_indexed(n, cfg.workers, |i| HRecord {
        trial: i,
        h: sample_linearized_hazard(m, steps, &mut RngStream::new(seed, i)),
    });
    let mean = hs.iter().map(|r| r.h).sum::<f64>() / n as f64;
    let var = hs.iter().map(|r| (r.h - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let exact = hazard_h_moments(steps, m)?;
    out.check(
        13,
        "mean_rel_error",
        (mean / exact.mean - 1.0).abs(),
        Rule::AtMost { limit: 0.03 },
    );
    out.check(
        13,
        "variance_rel_error",
        (var / exact.variance - 1.0).abs(),
        Rule::AtMost { limit: 0.10 },
    );
    out.detail("mean", mean);
    out.detail("variance", var);
    out.detail("exact_mean", exact.mean);
    out.detail("exact_variance", exact.variance);
    out.blob(13, "", &hs);
    Ok(())
}

/// Worker count for the determinism rerun: anything other than `workers`.
pub fn alternate_workers(workers: Option<usize>) -> Option<usize> {
    match workers {
        Some(1) => Some(3),
        _ => Some(1),
    }
}

/// Criterion 14: reruns each of `first` with a different worker count and
/// counts data files whose bytes differ.
pub fn determinism_report(
    first: &[CriterionRun],
    cfg: &SuiteConfig,
) -> Result<CriterionRun, CliError> {
    let spec = criterion_spec(14).expect("criterion 14 exists");
    let start = Instant::now();
    let alt = SuiteConfig {
        workers: alternate_workers(cfg.workers),
        ..*cfg
    };
    let mut out = Outcome::new();
    let mut mismatched = 0u64;
    let mut compared = 0u64;
    for run in first {
        let again = run_criterion(run.report.id, &alt)?;
        let same = again.data.len() == run.data.len()
            && again
                .data
                .iter()
                .zip(&run.data)
                .all(|(a, b)| a.name == b.name && a.bytes == b.bytes);
        compared += run.data.len() as u64;
        if !same {
            mismatched += 1;
        }
        out.detail(
            &format!("c{:02}.identical", run.report.id),
            same as u8 as f64,
        );
    }
    out.detail("data_files_compared", compared as f64);
    out.check(
        14,
        "criteria_with_differing_data",
        mismatched as f64,
        Rule::AtMost { limit: 0.0 },
    );
    let mut report = CriterionReport {
        id: 14,
        title: spec.title.to_string(),
        basis: spec.basis.to_string(),
        checks: out.checks,
        details: out.details,
        data_files: Vec::new(),
        elapsed_secs: start.elapsed().as_secs_f64(),
        pass: false,
    };
    report.refresh();
    Ok(CriterionRun {
        report,
        data: Vec::new(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub tool: ToolInfo,
    pub config: RunConfig,
    pub criteria: Vec<CriterionReport>,
    pub pass: bool,
}

impl SuiteReport {
    /// Replaces check thresholds (`name -> value`, see [`Rule::with_value`])
    /// and re-derives every pass flag.
    pub fn apply_overrides(&mut self, overrides: &[(String, String)]) -> Result<(), CliError> {
        for (name, value) in overrides {
            let check = self
                .criteria
                .iter_mut()
                .flat_map(|c| c.checks.iter_mut())
                .find(|c| &c.name == name)
                .ok_or_else(|| {
                    CliError::Usage(format!("unknown check name in --threshold: {name}"))
                })?;
            check.rule = check
                .rule
                .with_value(value)
                .map_err(|e| CliError::Usage(format!("--threshold {name}: {e}")))?;
        }
        for c in &mut self.criteria {
            c.refresh();
        }
        self.pass = self.criteria.iter().all(|c| c.pass);
        Ok(())
    }

    pub fn lines(&self) -> Vec<String> {
        let mut lines = Vec::new();
        for c in &self.criteria {
            lines.push(c.headline());
            lines.extend(c.checks.iter().map(|k| format!("    {}", k.line())));
        }
        let failed = self.criteria.iter().filter(|c| !c.pass).count();
        lines.push(format!(
            "{}: {} of {} criteria passed",
            if self.pass { "PASS" } else { "FAIL" },
            self.criteria.len() - failed,
            self.criteria.len()
        ));
        lines
    }
}

pub struct SuiteRun {
    pub runs: Vec<CriterionRun>,
}

/// Runs the requested criteria in id order. Criterion 14, if requested,
/// covers every other requested criterion.
pub fn run_suite(ids: &[u32], cfg: &SuiteConfig) -> Result<SuiteRun, CliError> {
    let mut ids: Vec<u32> = ids.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if let Some(bad) = ids.iter().find(|&&i| criterion_spec(i).is_none()) {
        return Err(CliError::Usage(format!("no acceptance criterion {bad}")));
    }
    let mut runs = Vec::new();
    for &id in ids.iter().filter(|&&i| i != 14) {
        runs.push(run_criterion(id, cfg)?);
    }
    if ids.contains(&14) {
        let det = determinism_report(&runs, cfg)?;
        runs.push(det);
    }
    Ok(SuiteRun { runs })
}
