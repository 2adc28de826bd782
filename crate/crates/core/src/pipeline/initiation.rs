use thiserror::Error;

use crate::time::SimTime;
use crate::trace::Record;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum InitiationError {
    #[error("log has no frozen grasp")]
    NoFreezeEvent,
}

/// Time from the capture of the first frame with a detected target to the
/// first frozen grasp.
pub fn measure_initiation(log: &[Record]) -> Result<SimTime, InitiationError> {
    let frozen_at = log
        .iter()
        .find_map(|r| match r {
            Record::Frozen { t_ns, .. } => Some(SimTime(*t_ns)),
            _ => None,
        })
        .ok_or(InitiationError::NoFreezeEvent)?;
    let first_seen = log
        .iter()
        .find_map(|r| match r {
            Record::Frame { capture_ns, target: true, t_ns, .. } if *t_ns <= frozen_at.nanos() => Some(SimTime(*capture_ns)),
            _ => None,
        })
        .ok_or(InitiationError::NoFreezeEvent)?;
    Ok(frozen_at - first_seen)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn needs_a_freeze() {
        assert_eq!(measure_initiation(&[]), Err(InitiationError::NoFreezeEvent));
    }
}
