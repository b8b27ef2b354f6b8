//! Link-level Monte-Carlo simulator of a reconfigurable-surface-assisted
//! multi-user MISO downlink.
//!
//! The crate is layered bottom-up:
//!
//! - [`units`] — dB/dBm/linear conversions.
//! - [`channel`] — scene geometry, path loss, Rician fading, seeded channel
//!   realization.
//! - [`signal`] — surface states, effective channels, SINR / sum spectral
//!   efficiency, power accounting.
//! - [`optimize`] — BS precoders and the alternating precoder/phase/gain
//!   ascent for the passive and active surface modes.
//! - [`controller`] — transmit-power classification and adaptive mode
//!   selection.
//! - [`sim`] — seeded Monte-Carlo sweeps, hybrid envelope runs, CSV output.
//! - [`config`] — TOML config loading with key=value overrides.
//! - [`validate`] — the self-check suite behind the `validate` subcommand.

pub mod channel;
pub mod config;
pub mod controller;
pub mod optimize;
pub mod signal;
pub mod sim;
pub mod units;
pub mod validate;
