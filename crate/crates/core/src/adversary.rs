//! Open-loop emission schedules for compromised agents.
//!
//! An adversary keeps no protocol state. What it puts on the wire toward a
//! neighbour is a pure function of the round, the target and (for noisy
//! schedules) a seed.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::AgentId;
use crate::signals::{Round, SignalError, SignalSpec};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AdversaryError {
    #[error("per-neighbor schedule has no entry for target {0}")]
    UnmappedTarget(AgentId),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AdversaryStrategy {
    /// Same value to every neighbour (malicious).
    Broadcast { series: SignalSpec },
    /// Distinct schedule per neighbour (Byzantine).
    PerNeighbor {
        targets: BTreeMap<AgentId, SignalSpec>,
    },
    /// A broadcast series plus independent uniform noise in `[-noise, noise]`
    /// per target and round.
    NoisyBroadcast {
        series: SignalSpec,
        noise: f64,
        seed: u64,
    },
}

impl AdversaryStrategy {
    /// Value placed on the wire toward `target` at round `t`.
    pub fn emit(&self, t: Round, target: AgentId) -> Result<f64, AdversaryError> {
        match self {
            AdversaryStrategy::Broadcast { series } => Ok(series.evaluate(t)?),
            AdversaryStrategy::PerNeighbor { targets } => {
                let series = targets
                    .get(&target)
                    .ok_or(AdversaryError::UnmappedTarget(target))?;
                Ok(series.evaluate(t)?)
            }
            AdversaryStrategy::NoisyBroadcast {
                series,
                noise,
                seed,
            } => {
                let base = series.evaluate(t)?;
                Ok(base + noise * unit_noise(*seed, t, target))
            }
        }
    }

    /// Targets this schedule is defined for, when it is not target-independent.
    pub fn mapped_targets(&self) -> Option<impl Iterator<Item = AgentId> + '_> {
        match self {
            AdversaryStrategy::PerNeighbor { targets } => Some(targets.keys().copied()),
            _ => None,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            AdversaryStrategy::Broadcast { .. } => "broadcast",
            AdversaryStrategy::PerNeighbor { .. } => "per_neighbor",
            AdversaryStrategy::NoisyBroadcast { .. } => "noisy_broadcast",
        }
    }
}

/// Uniform sample in `[-1, 1)` addressed by `(seed, t, target)`.
///
/// The ChaCha stream is selected by the target and the word position by the
/// round, so the draw does not depend on query order.
fn unit_noise(seed: u64, t: Round, target: AgentId) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(target.0 as u64);
    rng.set_word_pos(u128::from(t) * 2);
    rng.random_range(-1.0..1.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn broadcast_ramp() {
        let s = AdversaryStrategy::Broadcast {
            series: SignalSpec::Ramp {
                offset: 0.0,
                slope: 1.0 / 5.0,
            },
        };
        assert_eq!(s.emit(10, AgentId(4)), Ok(2.0));
        assert_eq!(s.emit(10, AgentId(7)), Ok(2.0));
    }

    #[test]
    fn broadcast_sinusoid_at_zero() {
        let s = AdversaryStrategy::Broadcast {
            series: SignalSpec::SinusoidRamp {
                offset: 1.0,
                slope: 0.0,
                amplitude: 2.0,
                angular_freq: 0.1 * PI,
            },
        };
        assert_eq!(s.emit(0, AgentId(1)), Ok(1.0));
    }

    #[test]
    fn per_neighbor_values() {
        let s = AdversaryStrategy::PerNeighbor {
            targets: BTreeMap::from([
                (AgentId(4), SignalSpec::Constant { value: 1e6 }),
                (AgentId(5), SignalSpec::Constant { value: -1e6 }),
            ]),
        };
        assert_eq!(s.emit(17, AgentId(4)), Ok(1e6));
        assert_eq!(s.emit(3, AgentId(5)), Ok(-1e6));
        assert_eq!(
            s.emit(3, AgentId(6)),
            Err(AdversaryError::UnmappedTarget(AgentId(6)))
        );
    }

    #[test]
    fn noisy_is_seeded() {
        let s = |seed| AdversaryStrategy::NoisyBroadcast {
            series: SignalSpec::Constant { value: 0.0 },
            noise: 3.0,
            seed,
        };
        let a: Vec<f64> = (1..50).map(|t| s(9).emit(t, AgentId(2)).unwrap()).collect();
        let b: Vec<f64> = (1..50)
            .rev()
            .map(|t| s(9).emit(t, AgentId(2)).unwrap())
            .rev()
            .collect();
        assert_eq!(a, b);
        assert!(a.iter().all(|v| v.abs() <= 3.0));
        let c: Vec<f64> = (1..50)
            .map(|t| s(10).emit(t, AgentId(2)).unwrap())
            .collect();
        assert_ne!(a, c);
        let other: Vec<f64> = (1..50).map(|t| s(9).emit(t, AgentId(3)).unwrap()).collect();
        assert_ne!(a, other);
    }

    proptest! {
        #[test]
        fn broadcast_is_target_independent(t in 0u64..10_000, u in 1usize..50, v in 1usize..50, slope in -2.0..2.0f64) {
            let s = AdversaryStrategy::Broadcast { series: SignalSpec::Ramp { offset: 1.0, slope } };
            prop_assert_eq!(s.emit(t, AgentId(u)), s.emit(t, AgentId(v)));
        }
    }
}
