//! Network configurations and channel realizations.

use serde::{Deserialize, Serialize};

use crate::cxmat::{gaussian_matrix, ComplexMatrix, Rng};
use crate::error::{invalid, Result};

/// RF-chain and antenna counts of one transmitter/receiver pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UserProfile {
    /// Transmit RF chains (M).
    pub m_rf: usize,
    /// Transmit antennas (M').
    pub m_ant: usize,
    /// Receive RF chains (N).
    pub n_rf: usize,
    /// Receive antennas (N').
    pub n_ant: usize,
}

impl UserProfile {
    pub fn new(m_rf: usize, m_ant: usize, n_rf: usize, n_ant: usize) -> Result<Self> {
        let p = UserProfile {
            m_rf,
            m_ant,
            n_rf,
            n_ant,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.m_rf == 0 || self.m_ant == 0 || self.n_rf == 0 || self.n_ant == 0 {
            return invalid("all RF-chain and antenna counts must be at least 1");
        }
        if self.m_rf > self.m_ant {
            return invalid(format!(
                "transmit RF chains exceed antennas (M={} > M'={})",
                self.m_rf, self.m_ant
            ));
        }
        if self.n_rf > self.n_ant {
            return invalid(format!(
                "receive RF chains exceed antennas (N={} > N'={})",
                self.n_rf, self.n_ant
            ));
        }
        Ok(())
    }

    /// Same RF chains, one antenna per chain.
    pub fn full_digital(&self) -> Self {
        UserProfile {
            m_rf: self.m_rf,
            m_ant: self.m_rf,
            n_rf: self.n_rf,
            n_ant: self.n_rf,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub users: Vec<UserProfile>,
}

impl NetworkConfig {
    pub fn new(users: Vec<UserProfile>) -> Result<Self> {
        let cfg = NetworkConfig { users };
        cfg.validate()?;
        Ok(cfg)
    }

    /// K users sharing one profile.
    pub fn symmetric(k: usize, profile: UserProfile) -> Result<Self> {
        Self::new(vec![profile; k])
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return invalid("a network needs at least one user");
        }
        for (i, u) in self.users.iter().enumerate() {
            u.validate()
                .map_err(|e| crate::Error::InvalidArgument(format!("user {}: {e}", i + 1)))?;
        }
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.users.len()
    }

    pub fn is_symmetric(&self) -> bool {
        self.users.windows(2).all(|w| w[0] == w[1])
    }

    /// The shared profile of a symmetric network.
    pub fn common_profile(&self) -> Option<UserProfile> {
        self.is_symmetric().then(|| self.users[0])
    }

    pub fn full_digital(&self) -> Self {
        NetworkConfig {
            users: self.users.iter().map(UserProfile::full_digital).collect(),
        }
    }

    /// The same network with transmitters and receivers exchanged.
    pub fn reversed(&self) -> Self {
        NetworkConfig {
            users: self
                .users
                .iter()
                .map(|u| UserProfile {
                    m_rf: u.n_rf,
                    m_ant: u.n_ant,
                    n_rf: u.m_rf,
                    n_ant: u.m_ant,
                })
                .collect(),
        }
    }
}

/// All K x K channel matrices of one time slot; `h[j][i]` maps transmitter
/// `i` to receiver `j` and is `n_ant_j x m_ant_i`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealization {
    pub slot: usize,
    pub h: Vec<Vec<ComplexMatrix>>,
}

impl ChannelRealization {
    pub fn k(&self) -> usize {
        self.h.len()
    }

    /// Transmitter `i` to receiver `j`.
    pub fn link(&self, j: usize, i: usize) -> &ComplexMatrix {
        &self.h[j][i]
    }

    pub fn matches(&self, cfg: &NetworkConfig) -> bool {
        self.h.len() == cfg.k()
            && self.h.iter().enumerate().all(|(j, row)| {
                row.len() == cfg.k()
                    && row
                        .iter()
                        .enumerate()
                        .all(|(i, m)| m.shape() == (cfg.users[j].n_ant, cfg.users[i].m_ant))
            })
    }
}

/// How channels evolve across the slots of a symbol extension.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SlotVariation {
    /// Fresh i.i.d. draw every slot.
    #[default]
    Independent,
    /// One draw repeated in every slot.
    Constant,
}

/// `slots` realizations with i.i.d. CN(0,1) entries, drawn slot by slot,
/// receiver-major (`j`), then transmitter (`i`).
pub fn draw_channels(
    cfg: &NetworkConfig,
    slots: usize,
    rng: &mut Rng,
) -> Result<Vec<ChannelRealization>> {
    draw_channels_with(cfg, slots, SlotVariation::Independent, rng)
}

pub fn draw_channels_with(
    cfg: &NetworkConfig,
    slots: usize,
    variation: SlotVariation,
    rng: &mut Rng,
) -> Result<Vec<ChannelRealization>> {
    cfg.validate()?;
    if slots == 0 {
        return invalid("at least one slot is required");
    }
    let draw = |rng: &mut Rng, slot: usize| -> Result<ChannelRealization> {
        let h = cfg
            .users
            .iter()
            .map(|rx| {
                cfg.users
                    .iter()
                    .map(|tx| gaussian_matrix(rx.n_ant, tx.m_ant, rng))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ChannelRealization { slot, h })
    };
    match variation {
        SlotVariation::Independent => (0..slots).map(|t| draw(rng, t)).collect(),
        SlotVariation::Constant => {
            let first = draw(rng, 0)?;
            Ok((0..slots)
                .map(|t| ChannelRealization {
                    slot: t,
                    h: first.h.clone(),
                })
                .collect())
        }
    }
}

/// Reverse-link network: `h'[j][i] = h[i][j]†`.
pub fn reverse_channels(r: &ChannelRealization) -> ChannelRealization {
    let k = r.k();
    let h = (0..k)
        .map(|j| (0..k).map(|i| r.h[i][j].adjoint()).collect())
        .collect();
    ChannelRealization { slot: r.slot, h }
}

/// Block-diagonal channel from transmitter `i` to receiver `j` over the
/// slots of `rs`, blocks in slot order.
pub fn extend_block_diagonal(
    rs: &[ChannelRealization],
    i: usize,
    j: usize,
) -> Result<ComplexMatrix> {
    let first = match rs.first() {
        Some(r) => r,
        None => return invalid("symbol extension over zero slots"),
    };
    if j >= first.k() || i >= first.k() {
        return invalid(format!("link ({j}, {i}) outside a {}-user network", first.k()));
    }
    let (br, bc) = first.h[j][i].shape();
    if rs.iter().any(|r| r.k() != first.k() || r.h[j][i].shape() != (br, bc)) {
        return invalid("channel shapes differ across slots");
    }
    let t = rs.len();
    let mut out = ComplexMatrix::zeros(t * br, t * bc);
    for (s, r) in rs.iter().enumerate() {
        let block = &r.h[j][i];
        for a in 0..br {
            for b in 0..bc {
                out[(s * br + a, s * bc + b)] = block[(a, b)];
            }
        }
    }
    Ok(out)
}

/// Every link of the network extended over `rs`, packaged as one
/// realization of the `T`-slot super-channel.
pub fn extend_network(rs: &[ChannelRealization]) -> Result<ChannelRealization> {
    let k = rs.first().map_or(0, ChannelRealization::k);
    let h = (0..k)
        .map(|j| {
            (0..k)
                .map(|i| extend_block_diagonal(rs, i, j))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ChannelRealization { slot: 0, h })
}
