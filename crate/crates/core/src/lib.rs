//! Transaction success of PBFT view consensus over lossy links: a
//! closed-form model, a discrete-event simulator of the protocol, and an
//! experiment runner that puts the two side by side.
//!
//! * [`config`] holds the scenario description shared by everything else.
//! * [`analytic`] evaluates success probabilities and retransmission rules.
//! * [`netsim`] runs the protocol over simulated UDP/TCP links.
//! * [`pbft`] contains the replica and client state machines.
//! * [`experiment`] sweeps parameters, aggregates runs and writes CSV.

pub mod analytic;
pub mod config;
pub mod error;
pub mod experiment;
pub mod netsim;
pub mod pbft;

pub use error::{Error, Result};
