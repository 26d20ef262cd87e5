use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rho_lab::exec::map_indexed;
use rho_lab::mapgraph::{analyze_graph, build_map, diag_fixed_point_prob, trajectory, MapMode};
use rho_lab::oracle::{enumerate_maps_exact, enumerate_sequences_exact, ExactDistribution};
use rho_lab::poisson::{run_collisions, summarize_collisions};
use rho_lab::seqsim::{batch_sample, BatchOptions, TrialRecord};
use rho_lab::stats::tv_distance;
use rho_lab::theory::{asymptotic_tau_moments, chen_stein_bounds, exponential_tail};
use rho_lab::{Params, RngStream, WindowCode};

use crate::acceptance::{run_suite, SuiteConfig, SuiteReport, CRITERIA};
use crate::config::{RunConfig, DEFAULT_SEED};
use crate::error::{exit, CliError};
use crate::output::{
    csv_bytes, data_path, fmt_num, jsonl_bytes, output_dir, read_json, summary_path, tool_info,
    write_bytes, write_json, ToolInfo,
};

#[derive(Debug, Parser)]
#[command(
    name = "rho-lab",
    version,
    about = "Rho lengths, cycles and collision counts of iterated random k-ary maps"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample (mu, tau, period) from IID symbol streams.
    Simulate(SimulateArgs),
    /// Like `simulate` with the k = 2 hazard instrumentation.
    Hazard(SimulateArgs),
    /// Census of random maps: cycles and rho lengths over every seed.
    Exhaustive(ExhaustiveArgs),
    /// Exact (mu, tau) law by enumerating every map and seed.
    Oracle(OracleArgs),
    /// Window collision counts against the Poisson approximation.
    Poisson(PoissonArgs),
    /// Closed-form quantities: collision bounds and limit moments.
    Theory(TheoryArgs),
    /// Run the acceptance suite, or re-evaluate a stored one.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Master seed; trial i reads stream (seed, i).
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// JSON-lines data file [default: $RHO_LAB_OUT/<command>.jsonl or runs/<command>.jsonl].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the records as CSV to this path.
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Worker threads [default: available parallelism].
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub m: u64,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    /// Threshold for the tail fraction P(tau^2 / 2M >= x).
    #[arg(long, default_value_t = 1.0)]
    pub x: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ExhaustiveArgs {
    #[arg(long)]
    pub m: u64,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// Number of random maps.
    #[arg(long, default_value_t = 200)]
    pub trials: u64,
    /// One random seed per map on a lazily drawn table instead of a full census.
    #[arg(long, conflicts_with = "diag")]
    pub lazy: bool,
    /// Only estimate P(some f(j, ..., j) = j) from the diagonal entries.
    #[arg(long)]
    pub diag: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub m: u64,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    /// Data file for the joint law [default: $RHO_LAB_OUT/oracle.jsonl].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct PoissonArgs {
    #[arg(long)]
    pub m: u64,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value_t = 0.5)]
    pub x: f64,
    #[arg(long, default_value_t = 100_000)]
    pub trials: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct TheoryArgs {
    #[arg(long)]
    pub m: u64,
    #[arg(long, default_value_t = 2)]
    pub k: u32,
    #[arg(long, default_value_t = 1.0)]
    pub x: f64,
    /// Also write the values as JSON to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ReportArgs {
    /// Output directory [default: $RHO_LAB_OUT/report or runs/report].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Re-evaluate a stored acceptance.json instead of running the suite.
    #[arg(long)]
    pub from: Option<PathBuf>,
    /// Replace a check threshold, e.g. `c01.ks_h_total=0.004` or
    /// `c02.mean_ratio=0.99:1.01`. Repeatable.
    #[arg(long = "threshold", value_name = "NAME=VALUE", value_parser = parse_override)]
    pub thresholds: Vec<(String, String)>,
    /// Comma-separated criterion ids [default: all].
    #[arg(long, value_delimiter = ',')]
    pub criteria: Vec<u32>,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: Option<u64>,
}

fn parse_override(s: &str) -> Result<(String, String), String> {
    let (name, value) = s
        .split_once('=')
        .ok_or_else(|| format!("expected NAME=VALUE, got {s:?}"))?;
    if name.is_empty() || value.is_empty() {
        return Err(format!("expected NAME=VALUE, got {s:?}"));
    }
    Ok((name.to_string(), value.to_string()))
}

/// Parses `argv` and runs the command. Returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Simulate(a) => simulate(a, false),
        Command::Hazard(a) => simulate(a, true),
        Command::Exhaustive(a) => exhaustive(a),
        Command::Oracle(a) => oracle(a),
        Command::Poisson(a) => poisson(a),
        Command::Theory(a) => theory(a),
        Command::Report(a) => report(a),
    }
}

fn workers(w: Option<u64>) -> Option<usize> {
    w.map(|w| usize::try_from(w).unwrap_or(usize::MAX))
}

fn base_config(command: &str, o: &OutputArgs) -> RunConfig {
    let mut c = RunConfig::new(command, o.seed);
    c.out = o.out.clone();
    c.csv = o.csv.clone();
    c.workers = workers(o.workers);
    c
}

#[derive(Serialize)]
struct Summary<'a, T: Serialize> {
    tool: ToolInfo,
    config: &'a RunConfig,
    summary: T,
}

/// Writes records (JSON lines, optional CSV) and the summary next to them.
fn write_run<R: Serialize, S: Serialize>(
    config: &RunConfig,
    records: &[R],
    summary: S,
) -> Result<PathBuf, CliError> {
    let data = data_path(config.out.as_deref(), &config.command);
    write_bytes(&data, &jsonl_bytes(records))?;
    if let Some(csv_path) = &config.csv {
        let bytes = csv_bytes(records).map_err(|e| CliError::output(csv_path, e))?;
        write_bytes(csv_path, &bytes)?;
    }
    let summary_file = summary_path(&data);
    write_json(
        &summary_file,
        &Summary {
            tool: tool_info(),
            config,
            summary,
        },
    )?;
    Ok(data)
}

fn print_lines(lines: &[String]) {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for l in lines {
        let _ = writeln!(lock, "{l}");
    }
}

fn simulate(a: SimulateArgs, hazard: bool) -> Result<i32, CliError> {
    let command = if hazard { "hazard" } else { "simulate" };
    let params = Params::new(a.m, a.k)?;
    let mut config = base_config(command, &a.output);
    config.m = Some(a.m);
    config.k = Some(a.k);
    config.trials = Some(a.trials);
    config.x = Some(a.x);
    if hazard {
        config.modes.push("hazard".into());
    }
    let opts = BatchOptions {
        hazard,
        x_threshold: a.x,
        workers: config.workers,
        ..Default::default()
    };
    let batch = batch_sample(params, a.trials, config.master_seed, opts)?;
    let theory = asymptotic_tau_moments(params);

    #[derive(Serialize)]
    struct SimSummary<'a> {
        stats: &'a rho_lab::stats::StatSummary,
        theory: rho_lab::theory::TauMoments,
        exp_tail_at_x: f64,
    }
    let s = &batch.summary;
    let data = write_run(
        &config,
        &batch.records,
        SimSummary {
            stats: s,
            theory,
            exp_tail_at_x: exponential_tail(a.x.max(0.0))?,
        },
    )?;
    let mut lines = vec![
        format!(
            "trials={} m={} k={} seed={}",
            a.trials, a.m, a.k, config.master_seed
        ),
        format!(
            "mean_tau={} (limit {})",
            fmt_num(s.mean),
            fmt_num(theory.mean)
        ),
        format!(
            "var_tau={} (limit {})",
            fmt_num(s.variance),
            fmt_num(theory.variance)
        ),
        format!(
            "tail_fraction={} (exp(-x) = {})",
            fmt_num(s.extra["tail_fraction"]),
            fmt_num((-a.x).exp())
        ),
    ];
    if let Some(ks) = &s.ks {
        lines.push(format!("ks_scaled_tau={}", fmt_num(ks.statistic)));
    }
    if hazard {
        lines.push(format!("ks_h_total={}", fmt_num(s.extra["ks_h_total"])));
    }
    lines.push(format!("wrote {}", data.display()));
    print_lines(&lines);
    Ok(exit::OK)
}

#[derive(Serialize)]
struct MapRecord {
    map: u64,
    tau_star: u64,
    mean_tau: f64,
    n_cycles: u64,
    states_on_cycles: u64,
    frac_seeds_period1: f64,
    has_diag_fixed_point: bool,
}

fn exhaustive(a: ExhaustiveArgs) -> Result<i32, CliError> {
    let params = Params::new(a.m, a.k)?;
    let mut config = base_config("exhaustive", &a.output);
    config.m = Some(a.m);
    config.k = Some(a.k);
    config.trials = Some(a.trials);
    let seed = config.master_seed;
    let w = config.workers;

    if a.diag {
        config.modes.push("diag".into());
        let est = diag_fixed_point_prob(a.m, a.trials, seed, w)?;
        let data = write_run(&config, &[est], est)?;
        print_lines(&[
            format!(
                "diag_fixed_point_prob={} +- {} (exact {})",
                fmt_num(est.estimate),
                fmt_num(est.stderr),
                fmt_num(est.exact)
            ),
            format!("wrote {}", data.display()),
        ]);
        return Ok(exit::OK);
    }

    if a.lazy {
        config.modes.push("lazy".into());
        let records = map_indexed(a.trials, w, |i| {
            let mut stream = RngStream::new(seed, i);
            let start = WindowCode(stream.next_symbol(params.states()));
            let mut map = build_map(params, stream, MapMode::Lazy)?;
            let r = trajectory(&mut map, start)?;
            Ok(TrialRecord {
                trial: i,
                mu: r.mu,
                tau: r.tau,
                period: r.period,
                h_total: None,
                h_final: None,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>, rho_lab::Error>>()?;
        let taus: Vec<f64> = records.iter().map(|r| r.tau as f64).collect();
        let stats = rho_lab::stats::StatSummary::from_samples(&taus)?;
        let data = write_run(&config, &records, &stats)?;
        print_lines(&[
            format!("maps={} mean_tau={}", a.trials, fmt_num(stats.mean)),
            format!("wrote {}", data.display()),
        ]);
        return Ok(exit::OK);
    }

    config.modes.push("dense".into());
    let records = map_indexed(a.trials, w, |i| {
        let map = build_map(params, RngStream::new(seed, i), MapMode::Dense)?;
        let g = analyze_graph(&map)?;
        Ok(MapRecord {
            map: i,
            tau_star: g.tau_star,
            mean_tau: g.mean_tau,
            n_cycles: g.n_cycles,
            states_on_cycles: g.states_on_cycles,
            frac_seeds_period1: g.frac_seeds_period1,
            has_diag_fixed_point: g.has_diag_fixed_point,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>, rho_lab::Error>>()?;
    let n = records.len().max(1) as f64;
    let states = params.states() as f64;
    let threshold = (3.0 * a.k as f64 * states * (a.m as f64).ln()).sqrt();
    let mut summary = BTreeMap::new();
    summary.insert(
        "mean_tau_star",
        records.iter().map(|r| r.tau_star as f64).sum::<f64>() / n,
    );
    summary.insert(
        "mean_n_cycles",
        records.iter().map(|r| r.n_cycles as f64).sum::<f64>() / n,
    );
    summary.insert("tau_star_threshold", threshold);
    summary.insert(
        "fraction_tau_star_above_threshold",
        records
            .iter()
            .filter(|r| r.tau_star as f64 > threshold)
            .count() as f64
            / n,
    );
    summary.insert(
        "fraction_with_diag_fixed_point",
        records.iter().filter(|r| r.has_diag_fixed_point).count() as f64 / n,
    );
    summary.insert(
        "diag_fixed_point_exact",
        1.0 - (1.0 - 1.0 / a.m as f64).powf(a.m as f64),
    );
    let data = write_run(&config, &records, &summary)?;
    let mut lines: Vec<String> = summary
        .iter()
        .map(|(k, v)| format!("{k}={}", fmt_num(*v)))
        .collect();
    lines.push(format!("wrote {}", data.display()));
    print_lines(&lines);
    Ok(exit::OK)
}

#[derive(Serialize)]
struct AtomRecord {
    mu: u64,
    tau: u64,
    count: u64,
    prob: f64,
}

#[derive(Serialize)]
struct OracleSummary {
    total: u64,
    maps_total: u64,
    e_tau: f64,
    p_period1: f64,
    e_num_cycles: f64,
    p_no_seed_period1: f64,
    e_tau_star: f64,
    /// TV between the map census and the sequence enumeration, when the
    /// latter fits in its limit.
    sequence_tv: Option<f64>,
}

fn oracle(a: OracleArgs) -> Result<i32, CliError> {
    let params = Params::new(a.m, a.k)?;
    let mut config = RunConfig::new("oracle", DEFAULT_SEED);
    config.m = Some(a.m);
    config.k = Some(a.k);
    config.out = a.out.clone();
    config.csv = a.csv.clone();
    let d: ExactDistribution = enumerate_maps_exact(params)?;
    let sequence_tv = match enumerate_sequences_exact(params) {
        Ok(s) => Some(tv_distance(&d.joint_pmf(), &s.joint_pmf())?),
        Err(rho_lab::Error::Capacity { .. }) => None,
        Err(e) => return Err(e.into()),
    };
    let records: Vec<AtomRecord> = d
        .joint
        .iter()
        .map(|a| AtomRecord {
            mu: a.mu,
            tau: a.tau,
            count: a.count,
            prob: a.count as f64 / d.total as f64,
        })
        .collect();
    let summary = OracleSummary {
        total: d.total,
        maps_total: d.maps_total,
        e_tau: d.e_tau,
        p_period1: d.p_period1,
        e_num_cycles: d.e_num_cycles,
        p_no_seed_period1: d.p_no_seed_period1,
        e_tau_star: d.e_tau_star,
        sequence_tv,
    };
    let data = write_run(&config, &records, &summary)?;
    let mut lines = vec![
        format!("maps={} pairs={}", d.maps_total, d.total),
        format!("E_tau={}", fmt_num(d.e_tau)),
        format!("P_period1={}", fmt_num(d.p_period1)),
        format!("E_num_cycles={}", fmt_num(d.e_num_cycles)),
        format!("P_no_seed_period1={}", fmt_num(d.p_no_seed_period1)),
        format!("E_tau_star={}", fmt_num(d.e_tau_star)),
    ];
    if let Some(tv) = sequence_tv {
        lines.push(format!("tv_vs_sequence_enumeration={}", fmt_num(tv)));
    }
    lines.push(format!("wrote {}", data.display()));
    print_lines(&lines);
    Ok(exit::OK)
}

#[derive(Serialize)]
struct ZRecord {
    trial: u64,
    z: u64,
}

fn poisson(a: PoissonArgs) -> Result<i32, CliError> {
    let params = Params::new(a.m, a.k)?;
    let mut config = base_config("poisson", &a.output);
    config.m = Some(a.m);
    config.k = Some(a.k);
    config.trials = Some(a.trials);
    config.x = Some(a.x);
    if a.trials < rho_lab::poisson::MIN_GAP_TRIALS {
        return Err(CliError::Usage(format!(
            "--trials must be at least {}",
            rho_lab::poisson::MIN_GAP_TRIALS
        )));
    }
    let records = run_collisions(params, a.x, a.trials, config.master_seed, config.workers)?;
    let gap = summarize_collisions(params, a.x, &records)?;
    let z: Vec<ZRecord> = records
        .iter()
        .enumerate()
        .map(|(i, r)| ZRecord {
            trial: i as u64,
            z: r.z,
        })
        .collect();
    let data = write_run(&config, &z, &gap)?;
    print_lines(&[
        format!(
            "N={} lambda={}",
            gap.bounds.n_windows,
            fmt_num(gap.bounds.lambda)
        ),
        format!(
            "mean_z={} (exact {})",
            fmt_num(gap.mean_z),
            fmt_num(gap.expected_z)
        ),
        format!(
            "P(Z=0)={} exp(-lambda)={} gap={} bound b1+b2={}",
            fmt_num(gap.p0_empirical),
            fmt_num(gap.p0_poisson),
            fmt_num(gap.p0_gap),
            fmt_num(gap.bound)
        ),
        format!(
            "tv_empirical={} +- {}",
            fmt_num(gap.tv_empirical),
            fmt_num(gap.tv_error_bar)
        ),
        format!("wrote {}", data.display()),
    ]);
    Ok(exit::OK)
}

fn theory(a: TheoryArgs) -> Result<i32, CliError> {
    let params = Params::new(a.m, a.k)?;
    let b = chen_stein_bounds(params, a.x)?;
    let t = asymptotic_tau_moments(params);
    let values: Vec<(&str, String)> = vec![
        ("M", params.states().to_string()),
        ("N", b.n_windows.to_string()),
        ("pair_count", fmt_num(b.pair_count)),
        ("lambda", fmt_num(b.lambda)),
        ("pair_count_alt", fmt_num(b.pair_count_alt)),
        ("lambda_alt", fmt_num(b.lambda_alt)),
        ("b1", fmt_num(b.b1)),
        ("b2", fmt_num(b.b2)),
        ("b1_plus_b2", fmt_num(b.total())),
        ("exp_minus_lambda", fmt_num((-b.lambda).exp())),
        ("tau_mean_limit", fmt_num(t.mean)),
        ("tau_variance_limit", fmt_num(t.variance)),
        ("tau_limit_heuristic", t.heuristic.to_string()),
    ];
    let mut lines = vec![format!("m={} k={} x={}", a.m, a.k, fmt_num(a.x))];
    lines.extend(values.iter().map(|(k, v)| format!("{k}={v}")));
    print_lines(&lines);
    if let Some(path) = &a.out {
        let mut config = RunConfig::new("theory", DEFAULT_SEED);
        config.m = Some(a.m);
        config.k = Some(a.k);
        config.x = Some(a.x);
        config.out = Some(path.clone());

        #[derive(Serialize)]
        struct TheorySummary {
            bounds: rho_lab::theory::TheoryBounds,
            tau_moments: rho_lab::theory::TauMoments,
        }
        write_json(
            path,
            &Summary {
                tool: tool_info(),
                config: &config,
                summary: TheorySummary {
                    bounds: b,
                    tau_moments: t,
                },
            },
        )?;
    }
    Ok(exit::OK)
}

pub const ACCEPTANCE_FILE: &str = "acceptance.json";

fn report(a: ReportArgs) -> Result<i32, CliError> {
    let mut report = match &a.from {
        Some(path) => load_report(path)?,
        None => {
            let dir = a.out.clone().unwrap_or_else(|| output_dir().join("report"));
            let ids: Vec<u32> = if a.criteria.is_empty() {
                CRITERIA.iter().map(|c| c.id).collect()
            } else {
                a.criteria.clone()
            };
            let cfg = SuiteConfig {
                master_seed: a.seed,
                workers: workers(a.workers),
            };
            let mut config = RunConfig::new("report", a.seed);
            config.out = Some(dir.clone());
            config.workers = cfg.workers;
            config.modes = ids.iter().map(|i| format!("criterion-{i}")).collect();
            let suite = run_suite(&ids, &cfg)?;
            for run in &suite.runs {
                for blob in &run.data {
                    write_bytes(&dir.join(&blob.name), &blob.bytes)?;
                }
            }
            let criteria: Vec<_> = suite.runs.into_iter().map(|r| r.report).collect();
            let pass = criteria.iter().all(|c| c.pass);
            let report = SuiteReport {
                tool: tool_info(),
                config,
                criteria,
                pass,
            };
            write_json(&dir.join(ACCEPTANCE_FILE), &report)?;
            report
        }
    };
    report.apply_overrides(&a.thresholds)?;
    print_lines(&report.lines());
    Ok(if report.pass {
        exit::OK
    } else {
        exit::ACCEPTANCE_FAILED
    })
}

fn load_report(path: &Path) -> Result<SuiteReport, CliError> {
    let r: SuiteReport = read_json(path)?;
    if r.criteria.is_empty() {
        return Err(CliError::input(path, "report lists no criteria"));
    }
    Ok(r)
}
