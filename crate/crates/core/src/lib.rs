//! Average peak age of information for a primary/secondary cognitive-radio
//! IoT pair under overlay and underlay spectrum access.
//!
//! The crate has three layers:
//!
//! - closed forms: [`link`] (outage probabilities under Rayleigh fading),
//!   [`overlay`], [`underlay`] and the high-SNR [`asymptotics`];
//! - a slot-level Monte Carlo in [`sim`], used to check the closed forms;
//! - sweeps and config files ([`sweep`], [`config_file`]) behind the CLI.
//!
//! Time is slotted. Every slot runs generate -> access -> decode -> age
//! update, and a new update always replaces the one in service.

pub mod analysis;
pub mod asymptotics;
pub mod config_file;
pub mod error;
pub mod expint;
pub mod linear;
pub mod link;
pub mod model;
pub mod overlay;
pub mod par;
pub mod sim;
pub mod sweep;
pub mod underlay;

pub use error::{Error, Result};
pub use link::OutageSet;
pub use model::{PeakAoiBreakdown, Scheme, System, SystemConfig};
