//! Uplink massive-MIMO receivers behind low-resolution ADCs over Rician fading.
//!
//! The crate pairs a Monte-Carlo link simulator (MRC and ZF combining, perfect
//! and LMMSE-estimated CSI, additive quantization noise model) with the
//! matching large-system closed forms, power-scaling limits and a system-level
//! energy-efficiency model.
//!
//! Module map:
//!
//! - [`channel`]: Rician channel realizations and ULA line-of-sight geometry.
//! - [`quantization`]: AQNM coefficients, quantization-noise statistics and a
//!   reference uniform quantizer.
//! - [`estimation`]: LMMSE channel estimation from quantized pilots.
//! - [`receivers`]: per-realization filters and exact SINR breakdowns.
//! - [`asymptotics`]: closed-form SINR approximations and limits.
//! - [`energy`]: power budget and energy efficiency.
//! - [`harness`]: seeded Monte-Carlo sweeps, figure presets, CSV tables and
//!   validation suites.
//!
//! User indices are zero-based throughout.

pub mod asymptotics;
pub mod channel;
pub mod energy;
mod error;
pub mod estimation;
pub mod harness;
pub mod linalg;
pub mod quantization;
pub mod receivers;

pub use asymptotics::{CsiKnowledge, Fading, ScalingScenario, SigmaMatrix};
pub use channel::{ChannelRealization, RicianProfile};
pub use energy::PowerModel;
pub use error::{Error, Result};
pub use estimation::{EstimatedChannel, EstimationStats, PilotConfig};
pub use harness::{ExperimentSpec, ResultTable, SweepAxis, SystemConfig};
pub use linalg::{CMatrix, CVector, C64};
pub use quantization::AdcModel;
pub use receivers::{Link, LogBase, Receiver, SinrBreakdown};
