//! Virtual simulation time.

use std::fmt;
use std::ops::{Add, Sub};

use serde::{Deserialize, Serialize};

const NANOS_PER_SEC: f64 = 1e9;

/// A point on the virtual clock, in integer nanoseconds since trial start.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default, Serialize, Deserialize)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);

    /// Rounds to the nearest nanosecond. Negative inputs clamp to zero.
    pub fn from_secs(secs: f64) -> Self {
        if secs <= 0.0 || !secs.is_finite() {
            return SimTime(0);
        }
        SimTime((secs * NANOS_PER_SEC).round() as u64)
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / NANOS_PER_SEC
    }

    pub fn nanos(self) -> u64 {
        self.0
    }

    /// Time of the `index`-th tick of a clock running at `rate_hz`.
    pub fn at_rate(index: u64, rate_hz: f64) -> Self {
        SimTime((index as f64 * NANOS_PER_SEC / rate_hz).round() as u64)
    }

    pub fn saturating_sub(self, other: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(other.0))
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.9}s", self.as_secs())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frame_times_at_30_fps() {
        assert_eq!(SimTime::at_rate(3, 30.0), SimTime(100_000_000));
        assert_eq!(SimTime::at_rate(1, 30.0), SimTime(33_333_333));
        assert_eq!(SimTime::at_rate(2, 30.0), SimTime(66_666_667));
    }

    #[test]
    fn default_latency_split_sums_exactly() {
        let total = SimTime::from_secs(0.033) + SimTime::from_secs(0.0125) + SimTime::from_secs(0.017);
        assert_eq!(total, SimTime::from_secs(0.0625));
    }
}
