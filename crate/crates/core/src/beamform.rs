//! Hybrid precoder/combiner synthesis.
//!
//! Each design stores, per user, an analog stage (antenna domain, unit-norm
//! columns) and a square digital stage (RF-chain domain) on both ends. The
//! zero-forcing designs null all cross links exactly; the alignment design
//! minimizes total leakage by alternating between the forward and the
//! reverse network.

use serde::{Deserialize, Serialize};

use crate::cxmat::{
    gaussian_matrix, least_dominant_subspace, nullspace, qr, rank, svd, ComplexMatrix, Rng,
};
use crate::dof_calc::TwoUserAllocation;
use crate::error::{invalid, Error, Result};
use crate::model::{extend_network, reverse_channels, ChannelRealization, NetworkConfig};

/// Largest admissible `‖U_i† H_ij W_j‖_F / ‖H_ij‖_F` for a zero-forcing design.
pub const ZF_LEAKAGE_TOL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct UserBeams {
    /// Antennas x streams, unit-norm columns.
    pub analog_tx: ComplexMatrix,
    /// Streams x streams.
    pub digital_tx: ComplexMatrix,
    /// Antennas x streams.
    pub analog_rx: ComplexMatrix,
    pub digital_rx: ComplexMatrix,
    pub streams: usize,
    /// Singular values of the user's own effective channel.
    pub direct_singulars: Vec<f64>,
}

impl UserBeams {
    /// Combined transmit matrix `V'_i V_i`.
    pub fn precoder(&self) -> ComplexMatrix {
        &self.analog_tx * &self.digital_tx
    }

    /// Combined receive matrix `U'_i U_i`.
    pub fn combiner(&self) -> ComplexMatrix {
        &self.analog_rx * &self.digital_rx
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HybridDesign {
    pub users: Vec<UserBeams>,
    /// Symbol-extension length the design operates over.
    pub slots: usize,
}

impl HybridDesign {
    pub fn streams(&self) -> Vec<usize> {
        self.users.iter().map(|u| u.streams).collect()
    }

    pub fn total_streams(&self) -> usize {
        self.users.iter().map(|u| u.streams).sum()
    }

    pub fn precoders(&self) -> Vec<ComplexMatrix> {
        self.users.iter().map(UserBeams::precoder).collect()
    }

    pub fn combiners(&self) -> Vec<ComplexMatrix> {
        self.users.iter().map(UserBeams::combiner).collect()
    }
}

/// Which end does the nulling in the K-user zero-forcing scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ZfSide {
    /// Random precoders, combiners null all interferers.
    Receive,
    /// Random combiners, precoders null all unintended receivers.
    Transmit,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiaOptions {
    pub max_iter: usize,
    /// Absolute threshold on leakage with unit power per stream.
    pub leak_tol: f64,
}

impl Default for DiaOptions {
    fn default() -> Self {
        DiaOptions {
            max_iter: 5000,
            leak_tol: 1e-6,
        }
    }
}

/// Leakage after every alternating iteration, measured with unit power per
/// stream.
#[derive(Clone, Debug, PartialEq)]
pub struct LeakageTrace {
    pub values: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
}

impl LeakageTrace {
    pub fn final_leakage(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::INFINITY)
    }
}

/// Splits a combined precoder into unit-norm analog columns and a diagonal
/// digital stage holding the column norms.
pub fn factor_hybrid(
    combined: &ComplexMatrix,
    rf_chains: usize,
) -> Result<(ComplexMatrix, ComplexMatrix)> {
    let d = combined.cols();
    if d > rf_chains {
        return invalid(format!("{d} streams exceed {rf_chains} RF chains"));
    }
    let mut analog = combined.clone();
    let mut norms = Vec::with_capacity(d);
    for j in 0..d {
        let nrm = combined.column_norm(j);
        if nrm > 0.0 {
            let col: Vec<_> = combined.column(j).iter().map(|z| z / nrm).collect();
            analog.set_column(j, &col);
        }
        norms.push(nrm);
    }
    Ok((analog, ComplexMatrix::diag_real(&norms)))
}

fn random_unit_columns(rows: usize, cols: usize, rng: &mut Rng) -> Result<ComplexMatrix> {
    if cols == 0 {
        return Ok(ComplexMatrix::zeros(rows, 0));
    }
    let g = gaussian_matrix(rows, cols, rng)?;
    Ok(factor_hybrid(&g, cols)?.0)
}

fn random_orthonormal(rows: usize, cols: usize, rng: &mut Rng) -> Result<ComplexMatrix> {
    if cols == 0 {
        return Ok(ComplexMatrix::zeros(rows, 0));
    }
    if cols > rows {
        return invalid(format!("{cols} orthonormal columns do not fit in {rows} dimensions"));
    }
    Ok(qr(&gaussian_matrix(rows, cols, rng)?)?.q)
}

/// One end of a link: either pinned to given columns or free to pick the
/// best `d` directions inside an orthonormal basis.
enum End {
    Fixed(ComplexMatrix),
    Within(ComplexMatrix),
}

impl End {
    fn basis(&self) -> &ComplexMatrix {
        match self {
            End::Fixed(m) | End::Within(m) => m,
        }
    }
}

/// Picks analog stages for one user and diagonalizes the resulting
/// streams x streams channel with the digital stages.
fn realize(h: &ComplexMatrix, tx: End, rx: End, d: usize, rel_tol: f64) -> Result<UserBeams> {
    for (end, name) in [(&tx, "transmit"), (&rx, "receive")] {
        if end.basis().cols() < d {
            return Err(Error::InfeasibleScheme(format!(
                "{name} space has {} dimensions for {d} streams",
                end.basis().cols()
            )));
        }
    }
    if d == 0 {
        return Ok(UserBeams {
            analog_tx: ComplexMatrix::zeros(h.cols(), 0),
            digital_tx: ComplexMatrix::zeros(0, 0),
            analog_rx: ComplexMatrix::zeros(h.rows(), 0),
            digital_rx: ComplexMatrix::zeros(0, 0),
            streams: 0,
            direct_singulars: Vec::new(),
        });
    }
    let e = svd(&(&rx.basis().adjoint_mul(h)? * tx.basis()))?;
    let analog_tx = match tx {
        End::Fixed(m) => m,
        End::Within(b) => &b * &e.v.leading_columns(d),
    };
    let analog_rx = match rx {
        End::Fixed(m) => m,
        End::Within(c) => &c * &e.u.leading_columns(d),
    };
    let effective = &analog_rx.adjoint_mul(h)? * &analog_tx;
    if rank(&effective, rel_tol)? < d {
        return Err(Error::DegenerateChannel(format!(
            "effective direct channel has rank below {d}"
        )));
    }
    let g = svd(&effective)?;
    Ok(UserBeams {
        analog_tx,
        digital_tx: g.v,
        analog_rx,
        digital_rx: g.u,
        streams: d,
        direct_singulars: g.s,
    })
}

fn check_realization(cfg: &NetworkConfig, r: &ChannelRealization) -> Result<()> {
    cfg.validate()?;
    if !r.matches(cfg) {
        return invalid("channel shapes do not match the network configuration");
    }
    Ok(())
}

/// Worst normalized cross-link leakage and a rank check on every direct
/// link; fails with a degenerate-channel error when either is violated.
pub fn verify_zero_forcing(
    design: &HybridDesign,
    r: &ChannelRealization,
    rel_tol: f64,
) -> Result<f64> {
    let w = design.precoders();
    let u = design.combiners();
    let mut worst = 0.0f64;
    for i in 0..r.k() {
        for j in 0..r.k() {
            let h = &r.h[i][j];
            let eff = &u[i].adjoint_mul(h)? * &w[j];
            if i == j {
                if rank(&eff, rel_tol)? != design.users[i].streams {
                    return Err(Error::DegenerateChannel(format!(
                        "direct channel of user {} lost rank",
                        i + 1
                    )));
                }
            } else {
                let scale = h.frobenius_norm();
                if scale > 0.0 {
                    worst = worst.max(eff.frobenius_norm() / scale);
                }
            }
        }
    }
    if worst > ZF_LEAKAGE_TOL {
        return Err(Error::DegenerateChannel(format!(
            "residual cross-link leakage {worst:e} above {ZF_LEAKAGE_TOL:e}"
        )));
    }
    Ok(worst)
}

/// Two-user zero forcing: each transmitter sends `d_ii` streams inside the
/// kernel of its cross link and `d_i0` streams on random unit directions;
/// each receiver projects out the random-direction interference it sees.
///
/// A single-user network is accepted and reduces to SVD beamforming.
pub fn design_two_user_zf(
    cfg: &NetworkConfig,
    r: &ChannelRealization,
    alloc: &TwoUserAllocation,
    rel_tol: f64,
    rng: &mut Rng,
) -> Result<HybridDesign> {
    check_realization(cfg, r)?;
    let k = cfg.k();
    let feasible = match k {
        1 => {
            let u = &cfg.users[0];
            alloc.d2 == 0
                && alloc.d1 == alloc.d11 + alloc.d10
                && alloc.d1 <= u.m_rf.min(u.n_rf)
        }
        2 => alloc.satisfies(cfg),
        _ => return invalid(format!("two-user design applied to {k} users")),
    };
    if !feasible {
        return invalid(format!("allocation {alloc:?} is infeasible for this network"));
    }

    // transmit side: [nulled | generic]
    let mut generic = Vec::with_capacity(k);
    let mut tx = Vec::with_capacity(k);
    for i in 0..k {
        let (d_null, d_gen) = alloc.split(i);
        let m_ant = cfg.users[i].m_ant;
        let kernel = if k == 2 {
            nullspace(&r.h[1 - i][i], rel_tol)?
        } else {
            ComplexMatrix::identity(m_ant)
        };
        if kernel.cols() < d_null {
            return Err(Error::DegenerateChannel(format!(
                "cross link of user {} leaves {} null directions, {d_null} needed",
                i + 1,
                kernel.cols()
            )));
        }
        let nulled = if d_null > 0 {
            let best = svd(&(&r.h[i][i] * &kernel))?;
            &kernel * &best.v.leading_columns(d_null)
        } else {
            ComplexMatrix::zeros(m_ant, 0)
        };
        let random = random_unit_columns(m_ant, d_gen, rng)?;
        tx.push(ComplexMatrix::hstack(&[&nulled, &random])?);
        generic.push(random);
    }

    let mut users = Vec::with_capacity(k);
    for (i, tx_i) in tx.into_iter().enumerate() {
        let n_ant = cfg.users[i].n_ant;
        let rx_space = if k == 2 && generic[1 - i].cols() > 0 {
            let interference = &r.h[i][1 - i] * &generic[1 - i];
            nullspace(&interference.adjoint(), rel_tol)?
        } else {
            ComplexMatrix::identity(n_ant)
        };
        // a lone user has no cross link, so it may pick its best directions
        let tx_end = if k == 1 && alloc.d10 == 0 {
            End::Within(ComplexMatrix::identity(cfg.users[0].m_ant))
        } else {
            End::Fixed(tx_i)
        };
        users.push(realize(
            &r.h[i][i],
            tx_end,
            End::Within(rx_space),
            alloc.streams()[i],
            rel_tol,
        )?);
    }
    let design = HybridDesign { users, slots: 1 };
    verify_zero_forcing(&design, r, rel_tol)?;
    Ok(design)
}

/// K-user zero forcing; one end is random and the other nulls all
/// interference. Receive-side nulling needs `Σ_j d_j <= N'_i` at every
/// receiver, transmit-side nulling `Σ_j d_j <= M'_i` at every transmitter.
pub fn design_k_user_zf(
    cfg: &NetworkConfig,
    r: &ChannelRealization,
    streams: &[usize],
    side: ZfSide,
    rel_tol: f64,
    rng: &mut Rng,
) -> Result<HybridDesign> {
    check_realization(cfg, r)?;
    let k = cfg.k();
    if streams.len() != k {
        return invalid(format!("{} stream counts for {k} users", streams.len()));
    }
    let total: usize = streams.iter().sum();
    for (i, (u, &d)) in cfg.users.iter().zip(streams).enumerate() {
        if d > u.m_rf.min(u.n_rf) {
            return Err(Error::InfeasibleScheme(format!(
                "user {}: d = {d} exceeds min(M, N) = {}",
                i + 1,
                u.m_rf.min(u.n_rf)
            )));
        }
        if k > 1 {
            let (dim, name) = match side {
                ZfSide::Receive => (u.n_ant, "N'"),
                ZfSide::Transmit => (u.m_ant, "M'"),
            };
            if total > dim {
                return Err(Error::InfeasibleScheme(format!(
                    "user {}: total streams {total} > {name} = {dim} (needs K·d <= {name})",
                    i + 1
                )));
            }
        }
    }

    if k == 1 {
        let u = &cfg.users[0];
        let beams = realize(
            &r.h[0][0],
            End::Within(ComplexMatrix::identity(u.m_ant)),
            End::Within(ComplexMatrix::identity(u.n_ant)),
            streams[0],
            rel_tol,
        )?;
        return Ok(HybridDesign { users: vec![beams], slots: 1 });
    }

    let mut users = Vec::with_capacity(k);
    match side {
        ZfSide::Receive => {
            let tx: Vec<ComplexMatrix> = cfg
                .users
                .iter()
                .zip(streams)
                .map(|(u, &d)| random_unit_columns(u.m_ant, d, rng))
                .collect::<Result<_>>()?;
            for i in 0..k {
                let parts: Vec<ComplexMatrix> = (0..k)
                    .filter(|&j| j != i && streams[j] > 0)
                    .map(|j| &r.h[i][j] * &tx[j])
                    .collect();
                let refs: Vec<&ComplexMatrix> = parts.iter().collect();
                let rx_space = if refs.is_empty() {
                    ComplexMatrix::identity(cfg.users[i].n_ant)
                } else {
                    nullspace(&ComplexMatrix::hstack(&refs)?.adjoint(), rel_tol)?
                };
                users.push(realize(
                    &r.h[i][i],
                    End::Fixed(tx[i].clone()),
                    End::Within(rx_space),
                    streams[i],
                    rel_tol,
                )?);
            }
        }
        ZfSide::Transmit => {
            let rx: Vec<ComplexMatrix> = cfg
                .users
                .iter()
                .zip(streams)
                .map(|(u, &d)| random_orthonormal(u.n_ant, d, rng))
                .collect::<Result<_>>()?;
            for i in 0..k {
                let parts: Vec<ComplexMatrix> = (0..k)
                    .filter(|&j| j != i && streams[j] > 0)
                    .map(|j| rx[j].adjoint_mul(&r.h[j][i]))
                    .collect::<Result<_>>()?;
                let refs: Vec<&ComplexMatrix> = parts.iter().collect();
                let tx_space = if refs.is_empty() {
                    ComplexMatrix::identity(cfg.users[i].m_ant)
                } else {
                    nullspace(&ComplexMatrix::vstack(&refs)?, rel_tol)?
                };
                users.push(realize(
                    &r.h[i][i],
                    End::Within(tx_space),
                    End::Fixed(rx[i].clone()),
                    streams[i],
                    rel_tol,
                )?);
            }
        }
    }
    let design = HybridDesign { users, slots: 1 };
    verify_zero_forcing(&design, r, rel_tol)?;
    Ok(design)
}

/// Interference power receiver `i` collects through `combiner`:
/// `Σ_{j≠i} (P_j/d_j) ‖combiner† H_ij W_j‖_F²`.
pub fn receiver_leakage(
    h: &ChannelRealization,
    i: usize,
    combiner: &ComplexMatrix,
    precoders: &[ComplexMatrix],
    powers: &[f64],
) -> Result<f64> {
    let mut total = 0.0;
    for (j, w) in precoders.iter().enumerate() {
        if j == i || w.cols() == 0 {
            continue;
        }
        let eff = &combiner.adjoint_mul(&h.h[i][j])? * w;
        total += powers[j] / w.cols() as f64 * eff.frobenius_norm().powi(2);
    }
    Ok(total)
}

fn total_leakage(
    h: &ChannelRealization,
    combiners: &[ComplexMatrix],
    precoders: &[ComplexMatrix],
    powers: &[f64],
) -> Result<f64> {
    (0..h.k())
        .map(|i| receiver_leakage(h, i, &combiners[i], precoders, powers))
        .sum()
}

/// Total leakage `Σ_i Σ_{j≠i} (P_j/d_j) ‖U_i† H_ij W_j‖_F²` of a design on
/// the channel it was built for (the extended channel when `slots > 1`).
pub fn leakage(design: &HybridDesign, r: &ChannelRealization, powers: &[f64]) -> Result<f64> {
    if powers.len() != design.users.len() || r.k() != design.users.len() {
        return invalid("powers, design and channel disagree on the number of users");
    }
    total_leakage(r, &design.combiners(), &design.precoders(), powers)
}

/// For fixed precoders, the combiner of each receiver minimizing its own
/// leakage: the `d_i` least-dominant eigenvectors of its interference
/// covariance `Σ_{j≠i} (P_j/d_j) H_ij W_j W_j† H_ij†`.
pub fn min_leakage_combiners(
    h: &ChannelRealization,
    precoders: &[ComplexMatrix],
    streams: &[usize],
    powers: &[f64],
) -> Result<Vec<ComplexMatrix>> {
    let k = h.k();
    (0..k)
        .map(|i| {
            let parts: Vec<ComplexMatrix> = (0..k)
                .filter(|&j| j != i && precoders[j].cols() > 0)
                .map(|j| (&h.h[i][j] * &precoders[j]).scale((powers[j] / precoders[j].cols() as f64).sqrt()))
                .collect();
            let refs: Vec<&ComplexMatrix> = parts.iter().collect();
            let rows = h.h[i][i].rows();
            let factor = if refs.is_empty() {
                ComplexMatrix::zeros(rows, 0)
            } else {
                ComplexMatrix::hstack(&refs)?
            };
            Ok(least_dominant_subspace(&factor, streams[i])?.0)
        })
        .collect()
}

/// Leakage-minimizing interference alignment over the `T = rs.len()` slot
/// extension. Non-convergence is reported through the trace, not as an
/// error.
pub fn design_dia(
    cfg: &NetworkConfig,
    rs: &[ChannelRealization],
    streams: &[usize],
    power: f64,
    opts: &DiaOptions,
    rng: &mut Rng,
) -> Result<(HybridDesign, LeakageTrace)> {
    let t = rs.len();
    if t == 0 {
        return invalid("alignment needs at least one slot");
    }
    for r in rs {
        check_realization(cfg, r)?;
    }
    let k = cfg.k();
    if streams.len() != k {
        return invalid(format!("{} stream counts for {k} users", streams.len()));
    }
    if !(power > 0.0 && power.is_finite()) {
        return invalid(format!("transmit power must be positive, got {power}"));
    }
    for (i, (u, &d)) in cfg.users.iter().zip(streams).enumerate() {
        let cap = (u.m_rf.min(u.n_rf) * t).min(u.m_ant.min(u.n_ant) * t);
        if d > cap {
            return invalid(format!(
                "user {}: {d} streams over {t} slots exceed the {cap} available",
                i + 1
            ));
        }
    }

    let forward = if t == 1 { rs[0].clone() } else { extend_network(rs)? };
    let backward = reverse_channels(&forward);
    let powers = vec![power; k];
    let unit: Vec<f64> = streams.iter().map(|&d| d as f64).collect();

    let mut precoders: Vec<ComplexMatrix> = cfg
        .users
        .iter()
        .zip(streams)
        .map(|(u, &d)| random_orthonormal(u.m_ant * t, d, rng))
        .collect::<Result<_>>()?;
    let mut trace = LeakageTrace {
        values: Vec::new(),
        converged: false,
        iterations: 0,
    };
    for _ in 0..opts.max_iter.max(1) {
        let combiners = min_leakage_combiners(&forward, &precoders, streams, &powers)?;
        precoders = min_leakage_combiners(&backward, &combiners, streams, &powers)?;
        let leak = total_leakage(&forward, &combiners, &precoders, &unit)?;
        trace.values.push(leak);
        trace.iterations += 1;
        if leak < opts.leak_tol {
            trace.converged = true;
            break;
        }
    }
    // the last half-step moved the precoders; refresh the combiners
    let combiners = min_leakage_combiners(&forward, &precoders, streams, &powers)?;
    let final_leak = total_leakage(&forward, &combiners, &precoders, &unit)?;
    if let Some(last) = trace.values.last_mut() {
        *last = final_leak;
    }
    trace.converged = final_leak < opts.leak_tol;

    let mut users = Vec::with_capacity(k);
    for (i, u) in cfg.users.iter().enumerate() {
        let (analog_tx, digital_tx) = factor_hybrid(&precoders[i], u.m_rf * t)?;
        let (analog_rx, digital_rx) = factor_hybrid(&combiners[i], u.n_rf * t)?;
        let direct = &combiners[i].adjoint_mul(&forward.h[i][i])? * &precoders[i];
        let direct_singulars = if streams[i] > 0 { svd(&direct)?.s } else { Vec::new() };
        users.push(UserBeams {
            analog_tx,
            digital_tx,
            analog_rx,
            digital_rx,
            streams: streams[i],
            direct_singulars,
        });
    }
    Ok((HybridDesign { users, slots: t }, trace))
}
