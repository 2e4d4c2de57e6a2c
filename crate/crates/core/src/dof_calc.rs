//! Closed-form sum-DoF formulas and stream-count arithmetic.
//!
//! Every DoF value that can be fractional is an exact rational.

use num_bigint::BigInt;
use num_rational::{BigRational, Rational64};
use num_traits::{Pow, Zero};
use serde::Serialize;

use crate::error::{invalid, Error, Result};
use crate::model::NetworkConfig;

pub type Dof = Rational64;

fn check_profile(m: usize, mp: usize, n: usize, np: usize) -> Result<()> {
    if m == 0 || n == 0 {
        return invalid("RF-chain counts must be at least 1");
    }
    if m > mp {
        return invalid(format!("transmit RF chains exceed antennas (M={m} > M'={mp})"));
    }
    if n > np {
        return invalid(format!("receive RF chains exceed antennas (N={n} > N'={np})"));
    }
    Ok(())
}

/// Point-to-point link: extra antennas without RF chains add nothing.
pub fn dof_ptp(m: usize, mp: usize, n: usize, np: usize) -> Result<usize> {
    check_profile(m, mp, n, np)?;
    Ok(m.min(n))
}

pub fn dof_mac(ms: &[usize], n: usize) -> Result<usize> {
    if ms.is_empty() {
        return invalid("multiple access channel needs at least one transmitter");
    }
    Ok(ms.iter().sum::<usize>().min(n))
}

pub fn dof_bc(m: usize, ns: &[usize]) -> Result<usize> {
    if ns.is_empty() {
        return invalid("broadcast channel needs at least one receiver");
    }
    Ok(m.min(ns.iter().sum()))
}

fn two_users(cfg: &NetworkConfig) -> Result<()> {
    cfg.validate()?;
    if cfg.k() != 2 {
        return invalid(format!("two-user formula applied to {} users", cfg.k()));
    }
    Ok(())
}

/// Exact sum DoF of the two-user channel.
pub fn dof_two_user(cfg: &NetworkConfig) -> Result<usize> {
    two_users(cfg)?;
    let (a, b) = (&cfg.users[0], &cfg.users[1]);
    Ok([
        a.m_rf + b.m_rf,
        a.n_rf + b.n_rf,
        a.m_rf + b.n_rf,
        b.m_rf + a.n_rf,
        a.m_ant.max(b.n_ant),
        b.m_ant.max(a.n_ant),
    ]
    .into_iter()
    .min()
    .unwrap())
}

/// Stream split of the two-user zero-forcing scheme: user `i` sends `d_ii`
/// streams on directions its transmitter nulls at the other receiver and
/// `d_i0` streams on generic directions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct TwoUserAllocation {
    pub d1: usize,
    pub d11: usize,
    pub d10: usize,
    pub d2: usize,
    pub d22: usize,
    pub d20: usize,
}

impl TwoUserAllocation {
    pub fn streams(&self) -> [usize; 2] {
        [self.d1, self.d2]
    }

    pub fn sum(&self) -> usize {
        self.d1 + self.d2
    }

    /// (transmit-nulled, generic) stream counts of user `i` (0-based).
    pub fn split(&self, i: usize) -> (usize, usize) {
        if i == 0 {
            (self.d11, self.d10)
        } else {
            (self.d22, self.d20)
        }
    }

    /// Checks every feasibility condition of the scheme against `cfg`.
    pub fn satisfies(&self, cfg: &NetworkConfig) -> bool {
        if cfg.k() != 2 {
            return false;
        }
        let (a, b) = (&cfg.users[0], &cfg.users[1]);
        self.d1 == self.d11 + self.d10
            && self.d2 == self.d22 + self.d20
            && self.d1 <= a.m_rf.min(a.n_rf)
            && self.d2 <= b.m_rf.min(b.n_rf)
            && self.d11 <= a.m_ant.saturating_sub(b.n_ant)
            && self.d22 <= b.m_ant.saturating_sub(a.n_ant)
            && self.d1 + self.d20 <= a.n_ant
            && self.d2 + self.d10 <= b.n_ant
    }
}

// Given the per-user totals, nulling as many streams as allowed only
// loosens the receive-side conditions, so it is the best split.
fn split_for(cfg: &NetworkConfig, d1: usize, d2: usize) -> Option<TwoUserAllocation> {
    let (a, b) = (&cfg.users[0], &cfg.users[1]);
    let d11 = d1.min(a.m_ant.saturating_sub(b.n_ant));
    let d22 = d2.min(b.m_ant.saturating_sub(a.n_ant));
    let alloc = TwoUserAllocation {
        d1,
        d11,
        d10: d1 - d11,
        d2,
        d22,
        d20: d2 - d22,
    };
    alloc.satisfies(cfg).then_some(alloc)
}

/// Allocation maximizing `d1 + d2`; ties go to more transmit-nulled
/// streams, then to a larger `d1`.
pub fn alloc_two_user(cfg: &NetworkConfig) -> Result<TwoUserAllocation> {
    two_users(cfg)?;
    let (a, b) = (&cfg.users[0], &cfg.users[1]);
    let mut best = TwoUserAllocation::default();
    let key = |x: &TwoUserAllocation| (x.sum(), x.d11 + x.d22, x.d1);
    for d1 in 0..=a.m_rf.min(a.n_rf) {
        for d2 in 0..=b.m_rf.min(b.n_rf) {
            if let Some(cand) = split_for(cfg, d1, d2) {
                if key(&cand) > key(&best) {
                    best = cand;
                }
            }
        }
    }
    Ok(best)
}

/// Feasible allocation with prescribed per-user stream counts.
pub fn alloc_two_user_for_streams(
    cfg: &NetworkConfig,
    d1: usize,
    d2: usize,
) -> Result<TwoUserAllocation> {
    two_users(cfg)?;
    split_for(cfg, d1, d2).ok_or_else(|| {
        Error::InfeasibleScheme(format!(
            "streams ({d1}, {d2}) violate the two-user zero-forcing conditions"
        ))
    })
}

/// `R = floor(max{M', N'} / min{M', N'})`.
pub fn antenna_ratio(mp: usize, np: usize) -> usize {
    mp.max(np) / mp.min(np)
}

/// Lower (achievable) and upper (converse) sum-DoF bounds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct DofBounds {
    #[serde(serialize_with = "ser_ratio")]
    pub lower: Dof,
    #[serde(serialize_with = "ser_ratio")]
    pub upper: Dof,
}

fn ser_ratio<S: serde::Serializer>(r: &Dof, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&r.to_string())
}

impl DofBounds {
    pub fn exact(v: Dof) -> Self {
        DofBounds { lower: v, upper: v }
    }

    pub fn is_tight(&self) -> bool {
        self.lower == self.upper
    }
}

fn ri(x: usize) -> Dof {
    Dof::from_integer(x as i64)
}

/// Bounds for the symmetric K-user channel.
pub fn dof_k_user_bounds(k: usize, m: usize, mp: usize, n: usize, np: usize) -> Result<DofBounds> {
    check_profile(m, mp, n, np)?;
    if k == 0 {
        return invalid("K must be at least 1");
    }
    let r = antenna_ratio(mp, np);
    let kk = ri(k);
    let per_user = ri(m.min(n));
    if k <= r {
        return Ok(DofBounds::exact(kk * per_user));
    }
    let frac = Dof::new(r as i64, r as i64 + 1);
    let lower = kk * per_user.min(frac * ri(mp.min(np)));
    let upper = kk * per_user.min(Dof::new(mp.max(np) as i64, r as i64 + 1));
    Ok(DofBounds { lower, upper })
}

/// Best known bounds for a network: exact for one or two users, the
/// symmetric K-user bounds otherwise.
pub fn sum_dof_bounds(cfg: &NetworkConfig) -> Result<DofBounds> {
    cfg.validate()?;
    match cfg.k() {
        1 => {
            let u = cfg.users[0];
            Ok(DofBounds::exact(ri(dof_ptp(u.m_rf, u.m_ant, u.n_rf, u.n_ant)?)))
        }
        2 => Ok(DofBounds::exact(ri(dof_two_user(cfg)?))),
        k => {
            let u = cfg.common_profile().ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "no sum-DoF formula for an asymmetric {k}-user network"
                ))
            })?;
            dof_k_user_bounds(k, u.m_rf, u.m_ant, u.n_rf, u.n_ant)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GainRatio {
    Finite(Dof),
    /// Full digital has zero DoF while the hybrid network does not.
    Infinite,
}

/// Sum DoF with the given antennas over the sum DoF with one antenna per RF
/// chain. Two users use the exact formula; larger symmetric networks
/// compare achievable (lower) bounds.
pub fn hybrid_gain_ratio(cfg: &NetworkConfig) -> Result<GainRatio> {
    let hybrid = sum_dof_bounds(cfg)?.lower;
    let digital = sum_dof_bounds(&cfg.full_digital())?.lower;
    Ok(if digital.is_zero() {
        if hybrid.is_zero() {
            GainRatio::Finite(Dof::zero())
        } else {
            GainRatio::Infinite
        }
    } else {
        GainRatio::Finite(hybrid / digital)
    })
}

/// Stream counting of the asymptotic alignment scheme over a
/// `T = (R+1)(n+1)^p` slot extension, in the orientation `M' <= N'`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtensionPlan {
    /// Transmit and receive sides were exchanged to get `M' <= N'`.
    pub swapped: bool,
    pub k: usize,
    /// RF chains and antennas after the orientation swap.
    pub m_rf: usize,
    pub m_ant: usize,
    pub n_rf: usize,
    pub n_ant: usize,
    pub ratio: u64,
    pub n: u64,
    pub exponent: u64,
    pub slots: BigInt,
    /// `floor((R+1)/M')`.
    pub k1: u64,
    /// Per-user streams of the `K M'`-user SIMO network.
    pub simo_streams: Vec<BigInt>,
    /// Precoder columns available to each user.
    pub columns: Vec<BigInt>,
    /// Streams each user actually sends, `min{M T, N T, c_i}`.
    pub streams: Vec<BigInt>,
}

impl ExtensionPlan {
    /// `(1/T) Σ d_i`.
    pub fn sum_dof_per_slot(&self) -> BigRational {
        let total: BigInt = self.streams.iter().sum();
        BigRational::new(total, self.slots.clone())
    }
}

fn oriented(m: usize, mp: usize, n: usize, np: usize) -> (bool, usize, usize, usize, usize) {
    if mp <= np {
        (false, m, mp, n, np)
    } else {
        (true, n, np, m, mp)
    }
}

/// `p = M' K R (M' K - R - 1)` with `M' = min{M', N'}`.
pub fn extension_exponent(k: usize, mp: usize, np: usize) -> Result<u64> {
    let r = antenna_ratio(mp, np) as u64;
    let a = (mp.min(np) * k) as u64;
    if a < r + 1 {
        return invalid("alignment regime needs K > R");
    }
    Ok(a * r * (a - r - 1))
}

pub fn extension_plan(
    k: usize,
    m: usize,
    mp: usize,
    n: usize,
    np: usize,
    n_param: u64,
) -> Result<ExtensionPlan> {
    check_profile(m, mp, n, np)?;
    let p = extension_exponent(k, mp, np)?;
    extension_plan_with_exponent(k, m, mp, n, np, n_param, p)
}

/// Same as [`extension_plan`] with the exponent `p` given explicitly; the
/// true exponent makes `T` astronomically large for all but tiny networks.
pub fn extension_plan_with_exponent(
    k: usize,
    m: usize,
    mp: usize,
    n: usize,
    np: usize,
    n_param: u64,
    p: u64,
) -> Result<ExtensionPlan> {
    check_profile(m, mp, n, np)?;
    if n_param == 0 {
        return invalid("extension parameter n must be at least 1");
    }
    let r = antenna_ratio(mp, np);
    if k <= r {
        return invalid(format!("K={k} <= R={r}: zero forcing needs no symbol extension"));
    }
    let (swapped, m, mp, n, np) = oriented(m, mp, n, np);
    let r_big = BigInt::from(r);
    let big_p = (BigInt::from(n_param) + 1u32).pow(p);
    let small_p = BigInt::from(n_param).pow(p);
    let slots = BigInt::from(r + 1) * &big_p;
    let k1 = (r + 1) / mp;

    let simo_streams: Vec<BigInt> = (1..=k * mp)
        .map(|i| if i <= r + 1 { &r_big * &big_p } else { &r_big * &small_p })
        .collect();

    let mp_big = BigInt::from(mp);
    let columns: Vec<BigInt> = (1..=k)
        .map(|i| {
            if i <= k1 {
                &mp_big * &r_big * &big_p
            } else if i == k1 + 1 {
                let head = BigInt::from(r + 1 - k1 * mp);
                let tail = BigInt::from((k1 + 1) * mp - (r + 1));
                head * &r_big * &big_p + tail * &r_big * &small_p
            } else {
                &mp_big * &r_big * &small_p
            }
        })
        .collect();

    let cap = BigInt::from(m.min(n)) * &slots;
    let streams = columns.iter().map(|c| c.clone().min(cap.clone())).collect();

    Ok(ExtensionPlan {
        swapped,
        k,
        m_rf: m,
        m_ant: mp,
        n_rf: n,
        n_ant: np,
        ratio: r as u64,
        n: n_param,
        exponent: p,
        slots,
        k1: k1 as u64,
        simo_streams,
        columns,
        streams,
    })
}

/// `lim_{n→∞} (1/T) Σ d_i = K min{R M'/(R+1), M, N}` with `M' = min{M', N'}`.
pub fn extension_dof_limit(k: usize, m: usize, mp: usize, n: usize, np: usize) -> Result<Dof> {
    check_profile(m, mp, n, np)?;
    let r = antenna_ratio(mp, np);
    if k <= r {
        return invalid(format!("K={k} <= R={r}: no symbol extension"));
    }
    let per_user = Dof::new((r * mp.min(np)) as i64, r as i64 + 1).min(ri(m.min(n)));
    Ok(ri(k) * per_user)
}

/// Exact rational as a big rational.
pub fn to_big(r: Dof) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}
