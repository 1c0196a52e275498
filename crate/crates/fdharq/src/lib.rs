//! Outage analysis and link-level simulation for a full-duplex relay-assisted
//! HARQ system.
//!
//! A source transmits OFDM blocks to a destination while a full-duplex relay
//! amplifies and forwards the incident signal with a one-tone delay, at the
//! cost of residual self-interference at its own receiver. When the combined
//! first transmission fails, a single HARQ retransmission is sent either by
//! the relay (selective decode-and-forward) or, if the relay failed to decode
//! as well, by the source itself. The crate computes outage probabilities for
//! this system along two independent routes:
//!
//! * [`analytic`] — semi-analytic evaluation of the outage integrals by
//!   adaptive quadrature, with every reduced (one-dimensional) form
//!   cross-checked against a direct two-dimensional evaluation of the same
//!   probability region;
//! * [`montecarlo`] — per-trial simulation of the fading draws and decoding
//!   decisions, deterministic for a given seed regardless of worker count.
//!
//! [`timeline`] maps retransmission rounds to TTI-level latency and checks
//! multi-process scheduling feasibility; [`experiment`] drives parameter
//! sweeps and produces the tabulated results the CLI writes to disk.
//!
//! The `parallel` feature (on by default) runs Monte-Carlo batches and sweep
//! points on a rayon pool. Disabling it leaves a purely sequential build with
//! identical numerical output.

pub mod analytic;
pub mod channel;
pub mod config;
pub mod experiment;
pub mod montecarlo;
pub mod quad;
pub mod sinr;
pub mod special;
pub mod timeline;

pub use config::{SystemParams, Thresholds};
