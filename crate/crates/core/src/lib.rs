//! Time-domain simulation of a weak distribution bus feeding an induction-motor
//! group, with a shunt-connected STATCOM regulating the bus voltage.
//!
//! The plant (grid Thevenin branch, bus node, converter coupling, motors) and the
//! control system (PLL, outer voltage/DC regulators, three alternative inner
//! strategies) are modeled in a single synchronous dq frame anchored to the source
//! and integrated with fixed-step classical RK4. Scenarios — parameter sets plus a
//! list of sag/swell/fault events — are described in JSON; runs produce a sampled
//! time-series log and step-response metrics (overshoot, settling time) per event.
//!
//! All amplitudes are normalized: 1.0 is the nominal phase-voltage peak, and the
//! power base is chosen so the fully loaded motor group draws about 1.0.

pub mod controllers;
pub mod error;
pub mod frames;
pub mod machine;
pub mod metrics;
pub mod network;
pub mod scenario;
pub mod sim;
pub mod statcom;

mod init;

pub use error::SimError;
pub use frames::{park, inverse_park, AbcTriple, DqPair, PllParams, PllState};
pub use scenario::Scenario;
pub use sim::{compare_controllers, run_scenario, Comparison, RunResult, TimeSeriesLog};

/// Nominal electrical angular frequency, rad/s (60 Hz system).
pub const OMEGA_NOM: f64 = 2.0 * std::f64::consts::PI * 60.0;
