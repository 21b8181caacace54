//! Lightweight communication protocol: fixed-layout binary pose/twist
//! streaming with loopback and UDP transports and a latency benchmark.
//!
//! The wire format is this crate's normative definition (68 bytes,
//! little-endian, versioned); see [`codec`]. The benchmark contrasts it with
//! a deliberately verbose self-describing text codec to expose the
//! serialization-overhead difference at a fixed publish rate.

pub mod baseline;
pub mod bench;
pub mod codec;
pub mod transport;

pub use bench::{run_latency_bench, BenchConfig, CodecKind, LatencyReport, TransportKind};
pub use codec::{decode, encode, DecodeError, StateFrame, FRAME_LEN};
