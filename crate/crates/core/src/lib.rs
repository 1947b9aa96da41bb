//! Packet-level simulation and closed-form analysis of cache-enabled K-user
//! broadcast packet erasure channels with state feedback.
//!
//! - [`gf`]: GF(2^8) arithmetic, payloads, linear combination and solving.
//! - [`placement`]: decentralized cache placement and subfile partitions.
//! - [`channel`]: i.i.d. broadcast erasure channel with state feedback.
//! - [`delivery`]: the feedback-driven multi-phase coded delivery, per-user
//!   decoding, and the feedback-free baseline.
//! - [`analytics`]: rate region, completion times and phase recursions.
//! - [`experiment`] and [`cli`]: Monte Carlo replicas, sweeps and CSV output.

pub mod analytics;
pub mod channel;
pub mod cli;
pub mod delivery;
pub mod experiment;
pub mod gf;
pub mod params;
pub mod placement;
pub mod rng;
pub mod userset;

pub use params::{ParamError, SystemParams};
pub use userset::{UserSet, MAX_USERS};
