//! Degrees of freedom of K-user MIMO interference channels with hybrid
//! analog/digital beamforming.
//!
//! * [`cxmat`]: small dense complex linear algebra and seeded sampling
//! * [`model`]: network configurations and channel draws
//! * [`dof_calc`]: closed-form DoF formulas and stream allocation
//! * [`beamform`]: zero-forcing and leakage-minimizing alignment designs
//! * [`rate`]: achievable rates, Monte-Carlo sweeps, slope estimation
//! * [`cli`]: scenario files, scheme selection, CSV/JSON output, presets

pub mod beamform;
pub mod cli;
pub mod cxmat;
pub mod error;

pub use error::{Error, Result};
pub mod dof_calc;
pub mod model;
pub mod rate;
