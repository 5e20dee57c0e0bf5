//! Discrete-event simulation of the protocol on a star network.
//!
//! Every replica and the client hang off a single router through identical
//! links. A message crosses two links; each crossing is lost independently
//! and costs serialization time plus a sampled propagation delay. Links do
//! not queue, so concurrent messages never delay each other.
//!
//! A run is deterministic in its seed. Repetitions draw from independent
//! ChaCha8 streams and may execute on any number of threads.

mod link;
mod queue;
mod run;
mod transport;

pub use link::{ms_to_us, sample_delay_ms, traverse_route, Endpoint, Link, StarTopology};
pub use queue::{Event, EventQueue};
pub use run::{repetition_seed, run, run_repetition, EventKind, TransactionRecord};
pub use transport::{transmit_tcp, transmit_udp, TcpDelivery, TcpEndpointModel, TcpOutcome};
