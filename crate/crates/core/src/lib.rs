//! Joint time allocation and passive beamforming for a downlink where the
//! IRS controller doubles as a decode-and-forward relay.

pub mod channel;
pub mod numerics;
pub mod optimizer;
pub mod rate;
pub mod experiment;
pub mod config;
pub mod verify;
pub mod cli;
