//! Achievable rates, Monte-Carlo SNR sweeps and empirical DoF estimation.
//!
//! Noise is normalized to unit power, so `P = 10^(snr_db/10)`. Rates are in
//! bits per channel use; designs over a `T`-slot extension are divided by
//! `T` to report per-slot figures.

use std::f64::consts::LN_2;

use rayon::prelude::*;
use serde::Serialize;

use crate::beamform::{
    design_dia, design_k_user_zf, design_two_user_zf, DiaOptions, HybridDesign, ZfSide,
};
use crate::cxmat::{logdet_hpd, mix64, rank, ComplexMatrix, Rng, DEFAULT_REL_TOL};
use crate::dof_calc::TwoUserAllocation;
use crate::error::{invalid, Error, Result};
use crate::model::{draw_channels, extend_network, ChannelRealization, NetworkConfig};

/// Largest failed-trial fraction a sweep tolerates.
pub const MAX_FAILURE_FRACTION: f64 = 0.2;

/// Environment variable capping the number of sweep worker threads.
pub const THREADS_ENV: &str = "HDL_THREADS";

/// Converts decibels to linear transmit power.
pub fn snr_to_power(snr_db: f64) -> f64 {
    10f64.powf(snr_db / 10.0)
}

fn check_shapes(design: &HybridDesign, r: &ChannelRealization) -> Result<()> {
    let k = design.users.len();
    if r.k() != k {
        return invalid(format!("design has {k} users, channel has {}", r.k()));
    }
    for (i, ui) in design.users.iter().enumerate() {
        for (j, uj) in design.users.iter().enumerate() {
            let h = &r.h[i][j];
            if h.rows() != ui.analog_rx.rows() || h.cols() != uj.analog_tx.rows() {
                return invalid(format!(
                    "link {}<-{} is {}x{}, design expects {}x{}",
                    i + 1,
                    j + 1,
                    h.rows(),
                    h.cols(),
                    ui.analog_rx.rows(),
                    uj.analog_tx.rows()
                ));
            }
        }
    }
    Ok(())
}

fn logdet_bits(a: &ComplexMatrix) -> Result<f64> {
    logdet_hpd(a).map(|v| v / LN_2)
}

/// Per-user rates of one channel use (of the possibly extended channel):
///
/// `log2|A_i + Σ_j (P/d_j) He_ij He_ij†| - log2|A_i + Σ_{j≠i} (P/d_j) He_ij He_ij†|`
///
/// with `He_ij = U_i† H_ij W_j` and the post-combining noise covariance
/// `A_i = U_i† U_i`.
pub fn sum_rate_instant(
    design: &HybridDesign,
    r: &ChannelRealization,
    power: f64,
) -> Result<Vec<f64>> {
    if !(power >= 0.0 && power.is_finite()) {
        return invalid(format!("power must be finite and nonnegative, got {power}"));
    }
    check_shapes(design, r)?;
    let precoders = design.precoders();
    let mut rates = Vec::with_capacity(design.users.len());
    for (i, user) in design.users.iter().enumerate() {
        let d = user.streams;
        if d == 0 {
            rates.push(0.0);
            continue;
        }
        let u = user.combiner();
        if rank(&u, DEFAULT_REL_TOL)? < d {
            return Err(Error::InvalidDesign(format!(
                "combiner of user {} is not injective",
                i + 1
            )));
        }
        let noise = u.adjoint_mul(&u)?;
        let mut interference = noise.clone();
        let mut desired = ComplexMatrix::zeros(d, d);
        for (j, w) in precoders.iter().enumerate() {
            if w.cols() == 0 {
                continue;
            }
            let eff = &u.adjoint_mul(&r.h[i][j])? * w;
            let cov = eff.scale((power / w.cols() as f64).sqrt()).gram_outer();
            if j == i {
                desired = cov;
            } else {
                interference = &interference + &cov;
            }
        }
        let total = &interference + &desired;
        let singular = |e: Error| match e {
            Error::InvalidArgument(msg) => Error::InvalidDesign(format!("user {}: {msg}", i + 1)),
            other => other,
        };
        let num = logdet_bits(&total).map_err(singular)?;
        let den = logdet_bits(&interference).map_err(singular)?;
        rates.push((num - den).max(0.0));
    }
    Ok(rates)
}

/// Closed-form per-user rates of a design without residual interference
/// and with orthonormal combiners: `Σ_k log2(1 + (P/d) λ_k²)`.
pub fn interference_free_bits(design: &HybridDesign, power: f64) -> Vec<f64> {
    design
        .users
        .iter()
        .map(|u| {
            let per_stream = power / u.streams.max(1) as f64;
            u.direct_singulars
                .iter()
                .map(|s| (1.0 + per_stream * s * s).log2())
                .sum()
        })
        .collect()
}

/// Transmission scheme evaluated by a sweep.
#[derive(Clone, Debug, PartialEq)]
pub enum Scheme {
    TwoUserZf(TwoUserAllocation),
    KUserZf { streams: Vec<usize>, side: ZfSide },
    /// Alignment over `slots` independent channel uses with `streams`
    /// streams per user in total over the extension.
    Dia {
        streams: Vec<usize>,
        slots: usize,
        opts: DiaOptions,
    },
}

impl Scheme {
    pub fn slots(&self) -> usize {
        match self {
            Scheme::Dia { slots, .. } => *slots,
            _ => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RatePoint {
    pub snr_db: f64,
    /// Bits per channel use and slot, averaged over successful trials.
    pub per_user_bits: Vec<f64>,
    pub sum_bits: f64,
    /// Number of successful trials averaged into this point.
    pub trials: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateTable {
    pub scenario: String,
    pub points: Vec<RatePoint>,
    pub trials: usize,
    pub failures: usize,
}

impl RateTable {
    pub fn failure_fraction(&self) -> f64 {
        if self.trials == 0 {
            0.0
        } else {
            self.failures as f64 / self.trials as f64
        }
    }
}

/// Channel draw, design and per-SNR rates of one trial; `None` when the
/// design could not be synthesized or the alignment did not converge.
fn run_trial(
    cfg: &NetworkConfig,
    scheme: &Scheme,
    powers: &[f64],
    rng: &mut Rng,
) -> Result<Option<Vec<Vec<f64>>>> {
    let slots = scheme.slots();
    let rs = draw_channels(cfg, slots, rng)?;
    let design = match scheme {
        Scheme::TwoUserZf(alloc) => design_two_user_zf(cfg, &rs[0], alloc, DEFAULT_REL_TOL, rng),
        Scheme::KUserZf { streams, side } => {
            design_k_user_zf(cfg, &rs[0], streams, *side, DEFAULT_REL_TOL, rng)
        }
        Scheme::Dia { streams, opts, .. } => {
            // equal powers scale every covariance alike, so one design
            // serves the whole SNR grid
            design_dia(cfg, &rs, streams, 1.0, opts, rng)
                .and_then(|(d, trace)| {
                    if trace.converged {
                        Ok(d)
                    } else {
                        Err(Error::NumericalFailure("alignment did not converge".into()))
                    }
                })
        }
    };
    let design = match design {
        Ok(d) => d,
        Err(Error::InvalidArgument(msg)) => return invalid(msg),
        Err(_) => return Ok(None),
    };
    let channel = if slots == 1 { rs[0].clone() } else { extend_network(&rs)? };
    let rates = powers
        .iter()
        .map(|&p| {
            sum_rate_instant(&design, &channel, p)
                .map(|v| v.into_iter().map(|x| x / slots as f64).collect())
        })
        .collect::<Result<Vec<Vec<f64>>>>();
    match rates {
        Ok(v) => Ok(Some(v)),
        Err(Error::InvalidDesign(_)) => Ok(None),
        Err(e) => Err(e),
    }
}

fn worker_pool() -> Result<Option<rayon::ThreadPool>> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(None);
    };
    let n: usize = raw
        .trim()
        .parse()
        .map_err(|_| Error::InvalidArgument(format!("{THREADS_ENV}={raw:?} is not a count")))?;
    if n == 0 {
        return invalid(format!("{THREADS_ENV} must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map(Some)
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))
}

/// Runs every trial and averages in trial order, whatever the failure
/// count. Trial `k` draws from `Rng::new(mix64(seed, k))`.
pub fn run_sweep(
    cfg: &NetworkConfig,
    scheme: &Scheme,
    snr_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<RateTable> {
    cfg.validate()?;
    if trials == 0 {
        return invalid("a sweep needs at least one trial");
    }
    if snr_db.is_empty() {
        return invalid("empty SNR grid");
    }
    if snr_db.iter().any(|s| !s.is_finite()) || snr_db.windows(2).any(|w| w[1] <= w[0]) {
        return invalid("SNR grid must be finite and strictly increasing");
    }
    if scheme.slots() == 0 {
        return invalid("extension length must be at least 1");
    }
    let powers: Vec<f64> = snr_db.iter().map(|&s| snr_to_power(s)).collect();
    let job = |k: usize| run_trial(cfg, scheme, &powers, &mut Rng::new(mix64(seed, k as u64)));
    let outcomes: Vec<Result<Option<Vec<Vec<f64>>>>> = match worker_pool()? {
        Some(pool) => pool.install(|| (0..trials).into_par_iter().map(job).collect()),
        None => (0..trials).into_par_iter().map(job).collect(),
    };

    let k = cfg.k();
    let mut sums = vec![vec![0.0; k]; snr_db.len()];
    let mut ok = 0usize;
    for outcome in outcomes {
        if let Some(rates) = outcome? {
            ok += 1;
            for (acc, row) in sums.iter_mut().zip(&rates) {
                for (a, r) in acc.iter_mut().zip(row) {
                    *a += r;
                }
            }
        }
    }
    let points = snr_db
        .iter()
        .zip(sums)
        .map(|(&s, acc)| {
            let per_user_bits: Vec<f64> = acc
                .into_iter()
                .map(|a| if ok > 0 { a / ok as f64 } else { 0.0 })
                .collect();
            RatePoint {
                snr_db: s,
                sum_bits: per_user_bits.iter().sum(),
                per_user_bits,
                trials: ok,
                seed,
            }
        })
        .collect();
    Ok(RateTable {
        scenario: describe(cfg, scheme),
        points,
        trials,
        failures: trials - ok,
    })
}

/// [`run_sweep`] that turns a failure fraction above
/// [`MAX_FAILURE_FRACTION`] into an error.
pub fn mc_sweep(
    cfg: &NetworkConfig,
    scheme: &Scheme,
    snr_db: &[f64],
    trials: usize,
    seed: u64,
) -> Result<RateTable> {
    let table = run_sweep(cfg, scheme, snr_db, trials, seed)?;
    if table.failure_fraction() > MAX_FAILURE_FRACTION {
        return Err(Error::NumericalFailure(format!(
            "{} of {} trials failed",
            table.failures, table.trials
        )));
    }
    Ok(table)
}

fn describe(cfg: &NetworkConfig, scheme: &Scheme) -> String {
    let users: Vec<String> = cfg
        .users
        .iter()
        .map(|u| format!("({},{})x({},{})", u.m_rf, u.m_ant, u.n_rf, u.n_ant))
        .collect();
    let scheme = match scheme {
        Scheme::TwoUserZf(a) => format!("two_user_zf d=({},{})", a.d1, a.d2),
        Scheme::KUserZf { streams, side } => {
            let side = match side {
                ZfSide::Receive => "receive",
                ZfSide::Transmit => "transmit",
            };
            format!("k_user_zf {side} d={streams:?}")
        }
        Scheme::Dia { streams, slots, .. } => format!("dia T={slots} d={streams:?}"),
    };
    format!("K={} {} {}", cfg.k(), users.join(" "), scheme)
}

/// Least-squares slope of the sum rate against `log2(P)` over the points
/// with `lo_db <= snr_db <= hi_db`.
pub fn estimate_dof(table: &RateTable, lo_db: f64, hi_db: f64) -> Result<f64> {
    let pts: Vec<(f64, f64)> = table
        .points
        .iter()
        .filter(|p| p.snr_db >= lo_db && p.snr_db <= hi_db)
        .map(|p| (p.snr_db / 10.0 * 10f64.log2(), p.sum_bits))
        .collect();
    if pts.len() < 2 {
        return invalid(format!(
            "{} points in [{lo_db}, {hi_db}] dB, need at least 2",
            pts.len()
        ));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}
