//! Energy-minimal downlink access for dense cellular deployments with
//! non-ideal power amplifiers.
//!
//! The question answered here: to deliver a required downlink rate to one
//! user within one radio frame, which base station should transmit, at what
//! power, and for how long, so that the total energy drawn over the frame
//! (amplifier, circuit, idle, and user-side consumption) is smallest?
//!
//! The pipeline:
//!
//! * [`scenario`] draws random network snapshots ("drops"): Poisson base
//!   station layouts, log-distance path loss with Rayleigh fading, and the
//!   candidate subset the scheduler may use.
//! * [`power`] prices a frame: amplifier consumption (traditional
//!   square-root-law or ideal linear), rate-proportional and static circuit
//!   power, idle floors, and the user's receive side.
//! * [`optimizer`] solves one drop: required power at a given duration, the
//!   duration line search, base-station selection, closed-form
//!   approximations, and the max-received-power / all-access baselines.
//! * [`oracle`] cross-checks the single-station structure of the optimum by
//!   exhaustive grid search over joint power splits.
//! * [`sweep`] runs seeded Monte Carlo sweeps over required spectral
//!   efficiency with common random numbers across schemes.
//! * [`config`] / [`report`] load engineering-unit configuration and emit
//!   deterministic CSV (optionally SVG) artifacts.
//!
//! All internal quantities are SI (watts, seconds, hertz, bits per second,
//! meters); decibel forms exist only at the configuration and report
//! boundaries ([`units`]).

pub mod config;
pub mod error;
pub mod optimizer;
pub mod oracle;
pub mod power;
pub mod report;
pub mod scenario;
pub mod sweep;
pub mod units;

pub use error::SimError;
