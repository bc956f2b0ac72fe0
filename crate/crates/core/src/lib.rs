//! Simulation and analysis of acknowledgment-based contention resolution
//! on a slotted shared channel.
//!
//! Parties wake according to a schedule, transmit with probabilities given
//! by a memoryless backoff rule, and leave after their first solo
//! transmission. The crate provides the Elias ω machinery behind the
//! GlobalClock protocol, the protocol rules, arrival schedules and
//! adversaries, a seeded simulator, and exact contention analysis.

pub mod analysis;
pub mod elias;
pub mod engine;
pub mod error;
pub mod experiment;
pub mod protocols;
pub mod schedule;
pub mod seed;

pub use engine::{run, ExecutionTrace, PartyRecord, Simulator, SlotRecord};
pub use error::{Error, Result};
pub use protocols::{ClockContext, Protocol};
pub use schedule::ObliviousSchedule;
