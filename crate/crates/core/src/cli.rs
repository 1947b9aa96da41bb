//! Command-line driver: analytic tables, figure sweeps, Monte Carlo runs and
//! region checks, all emitted as CSV (or plain text for `region`).
//!
//! Settings come from built-in per-mode defaults, then an optional JSON
//! config file, then flags; later sources win.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytics::{is_achievable, symmetric_rate, t_tot, t_tot_nofb, RatePoint};
use crate::delivery::DeliveryError;
use crate::experiment::{run_replicas, DecodeOutcome, ReplicaOptions, Summary};
use crate::params::SystemParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Analytic,
    Simulate,
    SweepFig3,
    SweepFig4,
    Region,
}

#[derive(Debug, Parser)]
#[command(
    name = "cachecast",
    version,
    about = "Cache-enabled broadcast erasure channel simulator and analytics"
)]
pub struct Cli {
    /// What to run; may also come from `--mode` or the config file.
    #[arg(value_enum)]
    pub command: Option<Mode>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// JSON file with any of the RunConfig fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long = "K")]
    pub users: Option<usize>,
    #[arg(long = "N")]
    pub files: Option<usize>,
    #[arg(long = "M")]
    pub memory: Option<f64>,
    #[arg(long = "F")]
    pub file_packets: Option<usize>,
    #[arg(long = "P")]
    pub payload_len: Option<usize>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub replicas: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Memory grid (files), comma separated.
    #[arg(long, value_delimiter = ',')]
    pub m_grid: Option<Vec<f64>>,
    /// Erasure-probability grid, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub delta_grid: Option<Vec<f64>>,
    /// Caching-probability grid (M/N) for the memory/erasure tradeoff sweep.
    #[arg(long, value_delimiter = ',')]
    pub p_grid: Option<Vec<f64>>,
    /// Rate point for `region`, one entry per user.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub rates: Option<Vec<f64>>,
    /// Also run the feedback-free baseline on the same erasure patterns.
    #[arg(long)]
    pub no_feedback: bool,
    /// Skip per-user decoding in `simulate`.
    #[arg(long)]
    pub no_decode: bool,
    /// Largest tolerated fraction of failed decodes before exiting with 2.
    #[arg(long)]
    pub max_fail: Option<f64>,
}

/// Fully resolved settings for one invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub mode: Option<Mode>,
    #[serde(rename = "K")]
    pub users: usize,
    #[serde(rename = "N")]
    pub files: usize,
    #[serde(rename = "M")]
    pub memory: f64,
    #[serde(rename = "F")]
    pub file_packets: usize,
    #[serde(rename = "P")]
    pub payload_len: usize,
    pub delta: f64,
    pub seed: u64,
    pub replicas: u64,
    pub m_grid: Option<Vec<f64>>,
    pub delta_grid: Option<Vec<f64>>,
    pub p_grid: Option<Vec<f64>>,
    pub rates: Option<Vec<f64>>,
    pub no_feedback: bool,
    pub decode: bool,
    pub max_fail: f64,
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: None,
            users: 10,
            files: 100,
            memory: 0.0,
            file_packets: 10_000,
            payload_len: 16,
            delta: 0.0,
            seed: 0,
            replicas: 10,
            m_grid: None,
            delta_grid: None,
            p_grid: None,
            rates: None,
            no_feedback: false,
            decode: true,
            max_fail: 0.1,
            out: None,
        }
    }
}

impl RunConfig {
    /// Defaults that depend on the mode (the K=3 tradeoff plot uses K=3).
    fn for_mode(mode: Option<Mode>) -> Self {
        let mut c = RunConfig {
            mode,
            ..Default::default()
        };
        if mode == Some(Mode::SweepFig3) {
            c.users = 3;
            c.files = 3;
        }
        c
    }

    pub fn params(&self) -> SystemParams {
        SystemParams::new(
            self.users,
            self.files,
            self.memory,
            self.file_packets,
            self.delta,
        )
        .with_payload_len(self.payload_len)
        .with_seed(self.seed)
    }

    fn validate(&self) -> Result<(), CliError> {
        self.params()
            .validate()
            .map_err(|e| CliError::Usage(e.to_string()))?;
        if self.replicas == 0 {
            return Err(CliError::Usage("replica count must be at least 1".into()));
        }
        for (name, grid) in [
            ("m-grid", &self.m_grid),
            ("delta-grid", &self.delta_grid),
            ("p-grid", &self.p_grid),
        ] {
            if grid.as_ref().is_some_and(Vec::is_empty) {
                return Err(CliError::Usage(format!("{name} must not be empty")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("config file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Delivery(#[from] DeliveryError),
}

/// How a successful invocation ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RunStatus {
    Done,
    /// Decode failure rate above `--max-fail`.
    TooManyDecodeFailures {
        rate: f64,
    },
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            RunStatus::Done => 0,
            RunStatus::TooManyDecodeFailures { .. } => 2,
        }
    }
}

/// Merges defaults, config file and flags.
pub fn resolve(cli: &Cli) -> Result<RunConfig, CliError> {
    let file_config: Option<serde_json::Value> = match &cli.config {
        Some(path) => Some(serde_json::from_reader(File::open(path)?)?),
        None => None,
    };
    let file_mode: Option<Mode> = match file_config.as_ref().and_then(|v| v.get("mode")) {
        Some(m) => Some(serde_json::from_value(m.clone())?),
        None => None,
    };
    let mode = cli.command.or(cli.mode).or(file_mode);
    let mut config = RunConfig::for_mode(mode);
    if let Some(serde_json::Value::Object(fields)) = file_config {
        let mut base = serde_json::to_value(&config)?;
        if let serde_json::Value::Object(base_fields) = &mut base {
            base_fields.extend(fields);
        }
        config = serde_json::from_value(base)?;
        config.mode = mode;
    }
    macro_rules! over {
        ($($field:ident),*) => { $( if let Some(v) = cli.$field.clone() { config.$field = v.into(); } )* };
    }
    over!(
        users,
        files,
        memory,
        file_packets,
        payload_len,
        delta,
        replicas,
        seed
    );
    if let Some(v) = &cli.out {
        config.out = Some(v.clone());
    }
    if let Some(v) = &cli.m_grid {
        config.m_grid = Some(v.clone());
    }
    if let Some(v) = &cli.delta_grid {
        config.delta_grid = Some(v.clone());
    }
    if let Some(v) = &cli.p_grid {
        config.p_grid = Some(v.clone());
    }
    if let Some(v) = &cli.rates {
        config.rates = Some(v.clone());
    }
    if let Some(v) = cli.max_fail {
        config.max_fail = v;
    }
    config.no_feedback |= cli.no_feedback;
    if cli.no_decode {
        config.decode = false;
    }
    Ok(config)
}

/// Parses `args` and runs; output goes to `--out` or else to `stdout`.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write) -> Result<RunStatus, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            write!(stdout, "{e}")?;
            return Ok(RunStatus::Done);
        }
        Err(e) => return Err(CliError::Usage(e.to_string())),
    };
    let config = resolve(&cli)?;
    run_config(&config, stdout)
}

pub fn run_config(config: &RunConfig, stdout: &mut dyn Write) -> Result<RunStatus, CliError> {
    let mode = config.mode.ok_or_else(|| {
        CliError::Usage("no mode given (analytic, simulate, sweep-fig3, sweep-fig4, region)".into())
    })?;
    if mode != Mode::SweepFig3 {
        config.validate()?;
    }
    let mut file_out;
    let out: &mut dyn Write = match &config.out {
        Some(path) => {
            file_out = BufWriter::new(File::create(path)?);
            &mut file_out
        }
        None => stdout,
    };
    let status = match mode {
        Mode::Analytic => cmd_analytic(config, out).map(|_| RunStatus::Done),
        Mode::SweepFig3 => cmd_sweep_fig3(config, out).map(|_| RunStatus::Done),
        Mode::SweepFig4 => cmd_sweep_fig4(config, out).map(|_| RunStatus::Done),
        Mode::Simulate => cmd_simulate(config, out),
        Mode::Region => cmd_region(config, out).map(|_| RunStatus::Done),
    }?;
    out.flush()?;
    Ok(status)
}

fn num(x: f64) -> String {
    // Rust prints infinities as "inf" and uses '.' without grouping.
    format!("{x}")
}

fn grid(values: &Option<Vec<f64>>, default: impl FnOnce() -> Vec<f64>) -> Vec<f64> {
    values.clone().unwrap_or_else(default)
}

fn steps(from: f64, to: f64, count: usize) -> Vec<f64> {
    (0..=count)
        .map(|i| {
            let v = from + (to - from) * i as f64 / count as f64;
            (v * 1e9).round() / 1e9
        })
        .collect()
}

/// Rows `K,N,M,delta,R_sym,T_tot_per_F,T_tot_nofb_per_F` over the memory and
/// erasure grids (single point by default).
pub fn cmd_analytic(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let ms = grid(&config.m_grid, || vec![config.memory]);
    let deltas = grid(&config.delta_grid, || vec![config.delta]);
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "K",
        "N",
        "M",
        "delta",
        "R_sym",
        "T_tot_per_F",
        "T_tot_nofb_per_F",
    ])?;
    for &delta in &deltas {
        for &m in &ms {
            check_point(config, m, delta)?;
            let p = m / config.files as f64;
            w.write_record([
                config.users.to_string(),
                config.files.to_string(),
                num(m),
                num(delta),
                num(symmetric_rate(config.users, p, delta)),
                num(t_tot(config.users, p, delta)),
                num(t_tot_nofb(config.users, p, delta)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn check_point(config: &RunConfig, memory: f64, delta: f64) -> Result<(), CliError> {
    let params = SystemParams {
        memory,
        delta,
        ..config.params()
    };
    params
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))
}

/// Rows `p,delta,R_sym` over a (p, delta) grid for contour plots.
pub fn cmd_sweep_fig3(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let ps = grid(&config.p_grid, || steps(0.0, 1.0, 20));
    let deltas = grid(&config.delta_grid, || steps(0.0, 0.95, 19));
    if !(2..=crate::MAX_USERS).contains(&config.users) {
        return Err(CliError::Usage(format!(
            "user count K={} outside 2..={}",
            config.users,
            crate::MAX_USERS
        )));
    }
    if let Some(bad) = ps.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(CliError::Usage(format!(
            "caching probability {bad} outside [0, 1]"
        )));
    }
    if let Some(bad) = deltas.iter().find(|d| !(0.0..1.0).contains(*d)) {
        return Err(CliError::Usage(format!(
            "erasure probability {bad} outside [0, 1)"
        )));
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["p", "delta", "R_sym"])?;
    for &delta in &deltas {
        for &p in &ps {
            w.write_record([
                num(p),
                num(delta),
                num(symmetric_rate(config.users, p, delta)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Rows `M,delta,T_fb_per_F,T_nofb_per_F`; defaults to `M = 0..=N`
/// in steps of 5 and `delta ∈ {0, 0.2, 0.6}`.
pub fn cmd_sweep_fig4(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let ms = grid(&config.m_grid, || {
        steps(0.0, config.files as f64, config.files.div_ceil(5).max(1))
    });
    let deltas = grid(&config.delta_grid, || vec![0.0, 0.2, 0.6]);
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["M", "delta", "T_fb_per_F", "T_nofb_per_F"])?;
    for &delta in &deltas {
        for &m in &ms {
            check_point(config, m, delta)?;
            let p = m / config.files as f64;
            w.write_record([
                num(m),
                num(delta),
                num(t_tot(config.users, p, delta)),
                num(t_tot_nofb(config.users, p, delta)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// One row per replica, then `mean` and `std` rows. Decode failures are
/// counted; the returned status flags a failure rate above `max_fail`.
pub fn cmd_simulate(config: &RunConfig, out: &mut dyn Write) -> Result<RunStatus, CliError> {
    let params = config.params();
    let options = ReplicaOptions {
        decode: config.decode,
        no_feedback: config.no_feedback,
        audit: false,
    };
    let outcomes = run_replicas(&params, config.replicas, options)?;
    let f = params.file_packets as f64;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "replica",
        "seed",
        "K",
        "N",
        "M",
        "F",
        "delta",
        "T_per_F",
        "predicted_T_per_F",
        "relative_error",
        "decoded_users",
        "decode_failures",
        "T_nofb_per_F",
        "predicted_T_nofb_per_F",
    ])?;
    let mut failures = 0usize;
    let mut attempts = 0usize;
    let mut columns: Vec<Vec<f64>> = vec![Vec::new(); 5];
    for o in &outcomes {
        let failed = o
            .decodes
            .iter()
            .filter(|d| **d != DecodeOutcome::Exact)
            .count();
        failures += failed;
        attempts += o.decodes.len();
        let t = o.slots as f64 / f;
        let nofb = o.nofb_slots.map(|s| s as f64 / f);
        columns[0].push(t);
        columns[1].push(o.relative_error());
        columns[2].push(o.exact_decodes() as f64);
        columns[3].push(failed as f64);
        if let Some(v) = nofb {
            columns[4].push(v);
        }
        w.write_record([
            o.replica.to_string(),
            o.seed.to_string(),
            params.users.to_string(),
            params.files.to_string(),
            num(params.memory),
            params.file_packets.to_string(),
            num(params.delta),
            num(t),
            num(o.predicted_slots / f),
            num(o.relative_error()),
            if config.decode {
                o.exact_decodes().to_string()
            } else {
                String::new()
            },
            if config.decode {
                failed.to_string()
            } else {
                String::new()
            },
            nofb.map(num).unwrap_or_default(),
            if config.no_feedback {
                num(o.nofb_predicted / f)
            } else {
                String::new()
            },
        ])?;
    }
    let summaries: Vec<Summary> = columns.iter().map(|c| Summary::of(c)).collect();
    let predicted = outcomes.first().map_or(0.0, |o| o.predicted_slots / f);
    let nofb_predicted = outcomes.first().map_or(0.0, |o| o.nofb_predicted / f);
    for (label, pick) in [("mean", 0usize), ("std", 1)] {
        let stat = |s: &Summary| if pick == 0 { s.mean } else { s.std };
        w.write_record([
            label.to_string(),
            String::new(),
            params.users.to_string(),
            params.files.to_string(),
            num(params.memory),
            params.file_packets.to_string(),
            num(params.delta),
            num(stat(&summaries[0])),
            if pick == 0 {
                num(predicted)
            } else {
                String::new()
            },
            num(stat(&summaries[1])),
            if config.decode {
                num(stat(&summaries[2]))
            } else {
                String::new()
            },
            if config.decode {
                num(stat(&summaries[3]))
            } else {
                String::new()
            },
            if config.no_feedback {
                num(stat(&summaries[4]))
            } else {
                String::new()
            },
            if config.no_feedback && pick == 0 {
                num(nofb_predicted)
            } else {
                String::new()
            },
        ])?;
    }
    w.flush()?;
    if attempts > 0 {
        let rate = failures as f64 / attempts as f64;
        if rate > config.max_fail {
            return Ok(RunStatus::TooManyDecodeFailures { rate });
        }
    }
    Ok(RunStatus::Done)
}

/// Verdict for a rate point against the region at the configured K, N, M,
/// delta.
pub fn cmd_region(config: &RunConfig, out: &mut dyn Write) -> Result<(), CliError> {
    let rates = config
        .rates
        .clone()
        .ok_or_else(|| CliError::Usage("region needs --rates with one value per user".into()))?;
    if rates.len() != config.users {
        return Err(CliError::Usage(format!(
            "expected {} rates, got {}",
            config.users,
            rates.len()
        )));
    }
    if rates.iter().any(|r| !(r.is_finite() && *r >= 0.0)) {
        return Err(CliError::Usage(
            "rates must be finite and nonnegative".into(),
        ));
    }
    let p = config.memory / config.files as f64;
    let verdict = is_achievable(&RatePoint(rates), p, config.delta);
    let order: Vec<String> = verdict
        .binding
        .iter()
        .map(|u| (u + 1).to_string())
        .collect();
    writeln!(
        out,
        "achievable: {}",
        if verdict.achievable { "yes" } else { "no" }
    )?;
    writeln!(out, "binding permutation: {}", order.join(" "))?;
    writeln!(out, "weighted sum: {}", num(verdict.weighted_sum))?;
    writeln!(out, "slack: {}", num(verdict.slack))?;
    Ok(())
}
