//! Error taxonomy shared across the crate.
//!
//! Infeasibility is reported, never clamped away: a rate target that cannot
//! be met inside the frame surfaces as [`SimError::InfeasibleDemand`] (or a
//! sibling) and Monte Carlo layers count such drops instead of averaging
//! over silently distorted ones.

use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum SimError {
    /// Distance that is nonpositive, NaN, or infinite.
    #[error("distance must be positive and finite, got {0} m")]
    BadDistance(f64),

    /// A scalar argument outside its documented domain.
    #[error("{what} must be {requirement}, got {value}")]
    BadParameter {
        what: &'static str,
        requirement: &'static str,
        value: f64,
    },

    /// Power vector and channel vector of different lengths.
    #[error("powers ({powers}) and channels ({channels}) differ in length")]
    LengthMismatch { powers: usize, channels: usize },

    /// Duration outside the frame.
    #[error("duration {t_s} s outside frame [0, {frame_s} s]")]
    BadDuration { t_s: f64, frame_s: f64 },

    /// Transmit power outside the amplifier's operating range.
    #[error("transmit power {p_w} W outside [0, {p_max_w} W]")]
    PowerOutOfRange { p_w: f64, p_max_w: f64 },

    /// Drop construction failed; the Monte Carlo harness redraws.
    #[error("drop rejected: {0}")]
    DropRejected(String),

    /// Channel gain is exactly zero; no finite power reaches the target.
    #[error("channel gain is zero; rate target unreachable")]
    DeadChannel,

    /// Even full power for the whole frame cannot carry the rate target.
    #[error(
        "rate target unreachable: minimum duration {t_min_s} s exceeds frame {frame_s} s"
    )]
    InfeasibleDemand { t_min_s: f64, frame_s: f64 },

    /// Required power overflows the floating-point range at this duration.
    #[error("required power overflows at duration {t_s} s")]
    DurationOverflow { t_s: f64 },

    /// Selection ran out of feasible candidates.
    #[error("no feasible candidate")]
    NoFeasibleCandidate,

    /// Configuration file that does not parse or resolve.
    #[error("config: {0}")]
    Config(String),

    /// Filesystem failure while writing artifacts.
    #[error("i/o: {0}")]
    Io(String),
}

impl SimError {
    /// True for errors that mean "this drop cannot meet the demand", as
    /// opposed to caller bugs or broken configuration.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            SimError::DeadChannel
                | SimError::InfeasibleDemand { .. }
                | SimError::DurationOverflow { .. }
                | SimError::NoFeasibleCandidate
        )
    }
}
