//! Command-line front end: scenario files, scheme selection, CSV/JSON
//! emission and figure presets.
//!
//! Exit codes: 0 success, 2 usage or validation error, 3 numerical
//! degradation (more than 20% of the trials failed; the CSV is still
//! written).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::beamform::{DiaOptions, ZfSide};
use crate::dof_calc::{
    alloc_two_user, alloc_two_user_for_streams, antenna_ratio, dof_k_user_bounds,
    hybrid_gain_ratio, sum_dof_bounds, Dof, DofBounds, GainRatio,
};
use crate::error::Error;
use crate::model::{NetworkConfig, UserProfile};
use crate::rate::{estimate_dof, run_sweep, RateTable, Scheme, MAX_FAILURE_FRACTION};

/// SNR window (dB) used for the reported slope.
pub const SLOPE_WINDOW_DB: (f64, f64) = (40.0, 60.0);

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    Auto,
    TwoUserZf,
    KUserZf,
    Dia,
    /// The auto-selected scheme on the same network with one antenna per
    /// RF chain.
    FullDigitalBaseline,
}

/// A simulation request as read from a JSON scenario file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub config: NetworkConfig,
    #[serde(default)]
    pub scheme: SchemeName,
    /// Streams per user; for alignment, the total over the extension.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub streams: Option<Vec<usize>>,
    /// Symbol-extension length for alignment.
    #[serde(default, alias = "extension_T", skip_serializing_if = "Option::is_none")]
    pub extension_t: Option<usize>,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dia: Option<DiaOptions>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.config.validate()?;
        if self.trials == 0 {
            return Err(CliError::Usage("trials must be at least 1".into()));
        }
        if self.snr_db.is_empty() {
            return Err(CliError::Usage("snr_db must not be empty".into()));
        }
        if self.snr_db.iter().any(|s| !s.is_finite()) || self.snr_db.windows(2).any(|w| w[1] <= w[0]) {
            return Err(CliError::Usage("snr_db must be finite and strictly increasing".into()));
        }
        if self.extension_t == Some(0) {
            return Err(CliError::Usage("extension_t must be at least 1".into()));
        }
        if let Some(d) = &self.streams {
            if d.len() != self.config.k() {
                return Err(CliError::Usage(format!(
                    "{} stream counts for {} users",
                    d.len(),
                    self.config.k()
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot parse scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error(transparent)]
    Model(#[from] Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Parse(_) | CliError::Io { .. } => 2,
            CliError::Model(Error::InvalidArgument(_) | Error::InfeasibleScheme(_)) => 2,
            CliError::Model(_) => 3,
        }
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// A scenario after scheme selection.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    /// The network actually simulated (full digital for the baseline).
    pub config: NetworkConfig,
    pub scheme: Scheme,
}

fn auto_scheme(cfg: &NetworkConfig) -> SchemeName {
    match cfg.k() {
        1 => SchemeName::KUserZf,
        2 => SchemeName::TwoUserZf,
        k => match cfg.common_profile() {
            Some(u) if k <= antenna_ratio(u.m_ant, u.n_ant) => SchemeName::KUserZf,
            _ => SchemeName::Dia,
        },
    }
}

fn default_streams(cfg: &NetworkConfig) -> Vec<usize> {
    cfg.users.iter().map(|u| u.m_rf.min(u.n_rf)).collect()
}

/// Receive-side nulling when it fits and the receivers have at least as
/// many antennas as the transmitters, transmit-side otherwise.
fn choose_side(cfg: &NetworkConfig, streams: &[usize]) -> Result<ZfSide, CliError> {
    let total: usize = streams.iter().sum();
    let rx_ok = cfg.k() == 1 || cfg.users.iter().all(|u| total <= u.n_ant);
    let tx_ok = cfg.k() == 1 || cfg.users.iter().all(|u| total <= u.m_ant);
    let prefer_rx = cfg.users.iter().map(|u| u.n_ant).sum::<usize>()
        >= cfg.users.iter().map(|u| u.m_ant).sum::<usize>();
    match (rx_ok, tx_ok) {
        (true, false) => Ok(ZfSide::Receive),
        (false, true) => Ok(ZfSide::Transmit),
        (true, true) if prefer_rx => Ok(ZfSide::Receive),
        (true, true) => Ok(ZfSide::Transmit),
        (false, false) => Err(Error::InfeasibleScheme(format!(
            "{total} total streams exceed the antennas at every receiver (N') and every transmitter (M')"
        ))
        .into()),
    }
}

/// Per-user stream counts and extension length for alignment: explicit
/// streams if given, otherwise the per-user share of the best achievable
/// sum DoF, realized over the smallest extension making it integral.
fn dia_streams(
    cfg: &NetworkConfig,
    streams: Option<&Vec<usize>>,
    extension: Option<usize>,
) -> Result<(Vec<usize>, usize), CliError> {
    if let Some(d) = streams {
        return Ok((d.clone(), extension.unwrap_or(1)));
    }
    let shares: Vec<Dof> = match cfg.k() {
        2 => {
            let a = alloc_two_user(cfg)?;
            a.streams().iter().map(|&d| Dof::from_integer(d as i64)).collect()
        }
        1 => vec![Dof::from_integer(default_streams(cfg)[0] as i64)],
        k => {
            let b = sum_dof_bounds(cfg)?;
            vec![b.lower / Dof::from_integer(k as i64); k]
        }
    };
    let slots = extension.unwrap_or_else(|| {
        shares.iter().map(|q| *q.denom() as usize).fold(1, num_integer::lcm)
    });
    let t = Dof::from_integer(slots as i64);
    let d: Vec<usize> = shares.iter().map(|q| (q * t).floor().to_integer() as usize).collect();
    if d.iter().all(|&x| x == 0) {
        return Err(CliError::Usage(format!(
            "no stream fits a {slots}-slot extension; raise extension_t"
        )));
    }
    Ok((d, slots))
}

/// Applies the scheme-selection rules to a scenario.
pub fn resolve(s: &Scenario) -> Result<Resolved, CliError> {
    s.validate()?;
    let (config, requested) = match s.scheme {
        SchemeName::FullDigitalBaseline => (s.config.full_digital(), SchemeName::Auto),
        other => (s.config.clone(), other),
    };
    let name = match requested {
        SchemeName::Auto => auto_scheme(&config),
        other => other,
    };
    if s.extension_t.is_some() && name != SchemeName::Dia {
        return Err(CliError::Usage(
            "extension_t only applies to the dia scheme".into(),
        ));
    }
    let scheme = match name {
        SchemeName::TwoUserZf => {
            if config.k() != 2 {
                return Err(CliError::Usage(format!(
                    "two_user_zf needs 2 users, the network has {}",
                    config.k()
                )));
            }
            let alloc = match &s.streams {
                Some(d) => alloc_two_user_for_streams(&config, d[0], d[1])?,
                None => alloc_two_user(&config)?,
            };
            Scheme::TwoUserZf(alloc)
        }
        SchemeName::KUserZf => {
            let streams = s.streams.clone().unwrap_or_else(|| default_streams(&config));
            let side = choose_side(&config, &streams)?;
            Scheme::KUserZf { streams, side }
        }
        SchemeName::Dia => {
            let (streams, slots) = dia_streams(&config, s.streams.as_ref(), s.extension_t)?;
            Scheme::Dia {
                streams,
                slots,
                opts: s.dia.unwrap_or_default(),
            }
        }
        SchemeName::Auto | SchemeName::FullDigitalBaseline => unreachable!("resolved above"),
    };
    Ok(Resolved { config, scheme })
}

/// Everything a simulate run reports.
#[derive(Clone, Debug, PartialEq)]
pub struct ResultRecord {
    pub scenario: Scenario,
    pub resolved: Resolved,
    pub table: RateTable,
    /// Slope over [`SLOPE_WINDOW_DB`], if the grid has two points there.
    pub estimated_dof: Option<f64>,
    pub bounds: Option<DofBounds>,
    pub failure_fraction: f64,
}

impl ResultRecord {
    pub fn degraded(&self) -> bool {
        self.failure_fraction > MAX_FAILURE_FRACTION
    }

    /// One-line JSON summary.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Summary<'a> {
            scenario: &'a str,
            estimated_dof: Option<f64>,
            bounds: Option<DofBounds>,
            slope_window_db: [f64; 2],
            failure_fraction: f64,
            trials: usize,
            failures: usize,
        }
        serde_json::to_string(&Summary {
            scenario: &self.table.scenario,
            estimated_dof: self.estimated_dof,
            bounds: self.bounds,
            slope_window_db: [SLOPE_WINDOW_DB.0, SLOPE_WINDOW_DB.1],
            failure_fraction: self.failure_fraction,
            trials: self.table.trials,
            failures: self.table.failures,
        })
        .expect("summary serializes")
    }
}

/// Resolves and runs a scenario. A high failure fraction is reported in the
/// record, not as an error.
pub fn simulate(s: &Scenario) -> Result<ResultRecord, CliError> {
    let resolved = resolve(s)?;
    let table = run_sweep(&resolved.config, &resolved.scheme, &s.snr_db, s.trials, s.seed)?;
    let estimated_dof = estimate_dof(&table, SLOPE_WINDOW_DB.0, SLOPE_WINDOW_DB.1).ok();
    let bounds = sum_dof_bounds(&resolved.config).ok();
    Ok(ResultRecord {
        scenario: s.clone(),
        failure_fraction: table.failure_fraction(),
        resolved,
        table,
        estimated_dof,
        bounds,
    })
}

/// Formats with 6 significant digits the way C's `%g` does.
pub fn format_g6(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    fn trim(s: &str) -> &str {
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.')
        } else {
            s
        }
    }
    let sci = format!("{x:.5e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..6).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim(mantissa), exp.abs())
    } else {
        trim(&format!("{:.*}", (5 - exp) as usize, x)).to_string()
    }
}

/// `snr_db,sum_rate_bits,rate_user_1..K,trials,failures`, one row per SNR.
pub fn rate_csv(table: &RateTable) -> String {
    let k = table.points.first().map_or(0, |p| p.per_user_bits.len());
    let mut out = String::from("snr_db,sum_rate_bits");
    for i in 1..=k {
        out.push_str(&format!(",rate_user_{i}"));
    }
    out.push_str(",trials,failures\n");
    for p in &table.points {
        out.push_str(&format_g6(p.snr_db));
        out.push(',');
        out.push_str(&format_g6(p.sum_bits));
        for r in &p.per_user_bits {
            out.push(',');
            out.push_str(&format_g6(*r));
        }
        out.push_str(&format!(",{},{}\n", table.trials, table.failures));
    }
    out
}

/// One point of a closed-form DoF curve.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DofRow {
    pub curve: String,
    pub x: usize,
    pub bounds: DofBounds,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Fig2,
    Fig3,
    Fig4,
    Fig5,
    Fig6,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Fig2 => "fig2",
            Preset::Fig3 => "fig3",
            Preset::Fig4 => "fig4",
            Preset::Fig5 => "fig5",
            Preset::Fig6 => "fig6",
        }
    }

    pub fn is_simulated(self) -> bool {
        matches!(self, Preset::Fig4 | Preset::Fig5)
    }
}

fn sym(k: usize, m: usize, mp: usize, n: usize, np: usize) -> Result<NetworkConfig, Error> {
    NetworkConfig::symmetric(k, UserProfile::new(m, mp, n, np)?)
}

fn row(curve: &str, x: usize, cfg: &NetworkConfig) -> Result<DofRow, Error> {
    Ok(DofRow {
        curve: curve.into(),
        x,
        bounds: sum_dof_bounds(cfg)?,
    })
}

/// Closed-form curves of the DoF presets; the x axis is `M'` for fig2 and
/// fig3 and `K` for fig6.
pub fn dof_curves(preset: Preset) -> Result<Vec<DofRow>, Error> {
    let mut rows = Vec::new();
    match preset {
        Preset::Fig2 => {
            for mp in 2..=6 {
                rows.push(row("hybrid", mp, &sym(2, 2, mp, 2, mp)?)?);
            }
            for mp in 2..=6 {
                rows.push(row("full_digital", mp, &sym(2, 2, 2, 2, 2)?)?);
            }
        }
        Preset::Fig3 => {
            for mp in 2..=8 {
                rows.push(row("np_eq_mp", mp, &sym(3, 2, mp, 2, mp)?)?);
            }
            for mp in 2..=8 {
                rows.push(row("np_eq_n", mp, &sym(3, 2, mp, 2, 2)?)?);
            }
            for mp in 2..=8 {
                rows.push(row("full_digital", mp, &sym(3, 2, 2, 2, 2)?)?);
            }
        }
        Preset::Fig6 => {
            for np in [4, 8] {
                for k in 1..=10 {
                    rows.push(DofRow {
                        curve: format!("np{np}"),
                        x: k,
                        bounds: dof_k_user_bounds(k, 2, 2, 2, np)?,
                    });
                }
            }
            for k in 1..=10 {
                rows.push(DofRow {
                    curve: "full_digital".into(),
                    x: k,
                    bounds: dof_k_user_bounds(k, 2, 2, 2, 2)?,
                });
            }
        }
        Preset::Fig4 | Preset::Fig5 => {
            return Err(Error::InvalidArgument(format!(
                "{} is a simulated preset",
                preset.name()
            )))
        }
    }
    Ok(rows)
}

fn ratio_value(r: Dof) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn dof_csv(rows: &[DofRow], x_name: &str) -> String {
    let mut out = format!("curve,{x_name},lower,upper,lower_value,upper_value\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.curve,
            r.x,
            r.bounds.lower,
            r.bounds.upper,
            format_g6(ratio_value(r.bounds.lower)),
            format_g6(ratio_value(r.bounds.upper))
        ));
    }
    out
}

/// Default SNR grid of the simulated presets: 0 to 60 dB in 5 dB steps.
pub fn preset_snr_grid() -> Vec<f64> {
    (0..=12).map(|k| 5.0 * k as f64).collect()
}

/// Labelled scenarios of a simulated preset.
pub fn preset_scenarios(preset: Preset, trials: usize, seed: u64) -> Result<Vec<(String, Scenario)>, Error> {
    let scenario = |cfg: NetworkConfig, scheme: SchemeName| Scenario {
        config: cfg,
        scheme,
        streams: None,
        extension_t: None,
        snr_db: preset_snr_grid(),
        trials,
        seed,
        dia: None,
    };
    let mut out = Vec::new();
    match preset {
        Preset::Fig4 => {
            for mp in 2..=4 {
                out.push((format!("mp{mp}_np{mp}"), scenario(sym(2, 2, mp, 2, mp)?, SchemeName::Auto)));
            }
        }
        Preset::Fig5 => {
            for (mp, np) in [(4, 4), (6, 6), (4, 2), (6, 2)] {
                out.push((format!("mp{mp}_np{np}"), scenario(sym(3, 2, mp, 2, np)?, SchemeName::Auto)));
            }
            out.push((
                "full_digital".into(),
                scenario(sym(3, 2, 4, 2, 4)?, SchemeName::FullDigitalBaseline),
            ));
        }
        _ => {
            return Err(Error::InvalidArgument(format!(
                "{} is a closed-form preset",
                preset.name()
            )))
        }
    }
    Ok(out)
}

fn describe_scheme(s: &Scheme) -> String {
    match s {
        Scheme::TwoUserZf(a) => format!(
            "two_user_zf d1={} (d11={}, d10={}) d2={} (d22={}, d20={})",
            a.d1, a.d11, a.d10, a.d2, a.d22, a.d20
        ),
        Scheme::KUserZf { streams, side } => {
            format!("k_user_zf side={} d={streams:?}", side_name(*side))
        }
        Scheme::Dia { streams, slots, opts } => format!(
            "dia T={slots} d={streams:?} max_iter={} leak_tol={}",
            opts.max_iter, opts.leak_tol
        ),
    }
}

fn side_name(side: ZfSide) -> &'static str {
    match side {
        ZfSide::Receive => "receive",
        ZfSide::Transmit => "transmit",
    }
}

/// Writes one file per curve into `out_dir`; returns the written paths and
/// whether any simulated curve exceeded the failure budget.
pub fn run_preset(
    preset: Preset,
    out_dir: &Path,
    trials: usize,
    seed: u64,
) -> Result<(Vec<PathBuf>, bool), CliError> {
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;
    let mut written = Vec::new();
    let mut degraded = false;
    if !preset.is_simulated() {
        let x_name = if preset == Preset::Fig6 { "k" } else { "m_ant" };
        let mut text = match preset {
            Preset::Fig2 => "# preset fig2: two users, M = N = 2, N' = M'\n",
            Preset::Fig3 => "# preset fig3: three users, M = N = 2\n",
            _ => "# preset fig6: M = N = M' = 2\n",
        }
        .to_string();
        text.push_str(&dof_csv(&dof_curves(preset)?, x_name));
        let path = out_dir.join(format!("{}.csv", preset.name()));
        fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
        return Ok((written, degraded));
    }
    for (label, scenario) in preset_scenarios(preset, trials, seed)? {
        let record = simulate(&scenario)?;
        degraded |= record.degraded();
        let mut text = format!("# preset {} curve {label}\n", preset.name());
        text.push_str(&format!("# scenario {}\n", serde_json::to_string(&scenario)?));
        text.push_str(&format!("# scheme {}\n", describe_scheme(&record.resolved.scheme)));
        text.push_str(&format!(
            "# trials {trials}, seed {seed}, snr 0..60 dB step 5, failures {}\n",
            record.table.failures
        ));
        text.push_str(&format!("# summary {}\n", record.summary_json()));
        text.push_str(&rate_csv(&record.table));
        let path = out_dir.join(format!("{}_{label}.csv", preset.name()));
        fs::write(&path, text).map_err(io_err(&path))?;
        written.push(path);
    }
    Ok((written, degraded))
}

/// Text report of the closed-form results for a symmetric network.
pub fn dof_report(k: usize, m: usize, mp: usize, n: usize, np: usize) -> Result<String, Error> {
    let cfg = sym(k, m, mp, n, np)?;
    let bounds = sum_dof_bounds(&cfg)?;
    let mut out = format!("network: K = {k}, (M, M') = ({m}, {mp}), (N, N') = ({n}, {np})\n");
    out.push_str(&format!("R = {}\n", antenna_ratio(mp, np)));
    if k <= 2 {
        out.push_str(&format!("sum DoF = {}\n", bounds.lower));
    } else {
        out.push_str(&format!(
            "sum DoF: lower = {}, upper = {}{}\n",
            bounds.lower,
            bounds.upper,
            if bounds.is_tight() { " (tight)" } else { "" }
        ));
    }
    if k == 2 {
        let a = alloc_two_user(&cfg)?;
        out.push_str(&format!(
            "allocation: d = ({}, {}), d1 = {} nulled + {} generic, d2 = {} nulled + {} generic\n",
            a.d1, a.d2, a.d11, a.d10, a.d22, a.d20
        ));
    }
    let gain = match hybrid_gain_ratio(&cfg)? {
        GainRatio::Finite(r) => r.to_string(),
        GainRatio::Infinite => "unbounded".into(),
    };
    out.push_str(&format!("hybrid gain over full digital = {gain}\n"));
    Ok(out)
}

#[derive(Debug, Parser)]
#[command(name = "hybrid-dof", version, about = "Sum DoF of MIMO interference channels with hybrid beamforming")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Closed-form sum DoF of a symmetric network
    Dof {
        #[arg(long, default_value_t = 2)]
        k: usize,
        /// Transmit RF chains
        #[arg(long)]
        m: usize,
        /// Transmit antennas
        #[arg(long)]
        mp: usize,
        /// Receive RF chains
        #[arg(long)]
        n: usize,
        /// Receive antennas
        #[arg(long)]
        np: usize,
    },
    /// Monte-Carlo rate sweep of a JSON scenario
    Simulate {
        scenario: PathBuf,
        /// CSV destination (stdout if absent)
        #[arg(long)]
        out: Option<PathBuf>,
        /// JSON summary destination (stderr if absent)
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Write the data set of a figure preset (fig2 to fig6)
    Preset {
        #[arg(value_enum)]
        name: Preset,
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
}

fn dispatch(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, CliError> {
    let stdout_err = |e: std::io::Error| CliError::Io {
        path: "<stdout>".into(),
        source: e,
    };
    match cli.command {
        Command::Dof { k, m, mp, n, np } => {
            let text = dof_report(k, m, mp, n, np)?;
            stdout.write_all(text.as_bytes()).map_err(stdout_err)?;
            Ok(0)
        }
        Command::Simulate { scenario, out, summary } => {
            let text = fs::read_to_string(&scenario).map_err(io_err(&scenario))?;
            let s = Scenario::from_json(&text)?;
            let record = simulate(&s)?;
            let csv = rate_csv(&record.table);
            match &out {
                Some(path) => fs::write(path, csv).map_err(io_err(path))?,
                None => stdout.write_all(csv.as_bytes()).map_err(stdout_err)?,
            }
            let line = record.summary_json() + "\n";
            match &summary {
                Some(path) => fs::write(path, line).map_err(io_err(path))?,
                None => {
                    let _ = stderr.write_all(line.as_bytes());
                }
            }
            if record.degraded() {
                let _ = writeln!(
                    stderr,
                    "warning: {} of {} trials failed (more than {}%); results are partial",
                    record.table.failures,
                    record.table.trials,
                    MAX_FAILURE_FRACTION * 100.0
                );
                return Ok(3);
            }
            Ok(0)
        }
        Command::Preset { name, out_dir, trials, seed } => {
            if trials == 0 {
                return Err(CliError::Usage("trials must be at least 1".into()));
            }
            let (paths, degraded) = run_preset(name, &out_dir, trials, seed)?;
            for p in paths {
                writeln!(stdout, "{}", p.display()).map_err(stdout_err)?;
            }
            if degraded {
                let _ = writeln!(stderr, "warning: a simulated curve exceeded the failure budget");
                return Ok(3);
            }
            Ok(0)
        }
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let mut stdout = std::io::stdout().lock();
    let mut stderr = std::io::stderr().lock();
    match dispatch(cli, &mut stdout, &mut stderr) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            e.exit_code()
        }
    }
}
