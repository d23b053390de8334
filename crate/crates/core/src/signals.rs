//! Reference signals sampled at integer rounds.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::AgentId;

/// Round index. The protocol starts at `t = 1`; `r_i(0)` is an input.
pub type Round = u64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SignalError {
    #[error("tabulated series has {len} samples, round {t} requested")]
    OutOfRange { t: Round, len: usize },
    #[error("first difference is undefined at round 0")]
    NoPreviousSample,
    #[error("signal bank is empty")]
    EmptyBank,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalSpec {
    /// `offset + slope * t + amplitude * sin(angular_freq * t)`.
    SinusoidRamp {
        offset: f64,
        slope: f64,
        amplitude: f64,
        angular_freq: f64,
    },
    Constant {
        value: f64,
    },
    Ramp {
        offset: f64,
        slope: f64,
    },
    /// Samples indexed from `t = 0`.
    Tabulated {
        values: Vec<f64>,
    },
}

impl SignalSpec {
    pub fn evaluate(&self, t: Round) -> Result<f64, SignalError> {
        let tf = t as f64;
        Ok(match self {
            SignalSpec::SinusoidRamp {
                offset,
                slope,
                amplitude,
                angular_freq,
            } => offset + slope * tf + amplitude * (angular_freq * tf).sin(),
            SignalSpec::Constant { value } => *value,
            SignalSpec::Ramp { offset, slope } => offset + slope * tf,
            SignalSpec::Tabulated { values } => {
                *values.get(t as usize).ok_or(SignalError::OutOfRange {
                    t,
                    len: values.len(),
                })?
            }
        })
    }

    /// `r(t) - r(t - 1)`, defined for `t >= 1`.
    pub fn first_difference(&self, t: Round) -> Result<f64, SignalError> {
        if t == 0 {
            return Err(SignalError::NoPreviousSample);
        }
        Ok(self.evaluate(t)? - self.evaluate(t - 1)?)
    }

    /// Largest round this signal can be evaluated at, if bounded.
    pub fn last_round(&self) -> Option<Round> {
        match self {
            SignalSpec::Tabulated { values } => Some(values.len().saturating_sub(1) as Round),
            _ => None,
        }
    }
}

/// Reference signals of the good agents.
pub type SignalBank = BTreeMap<AgentId, SignalSpec>;

/// Spread `max - min` of the first differences across the bank at round `t`.
pub fn delta_spread(bank: &SignalBank, t: Round) -> Result<f64, SignalError> {
    if bank.is_empty() {
        return Err(SignalError::EmptyBank);
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for spec in bank.values() {
        let d = spec.first_difference(t)?;
        lo = lo.min(d);
        hi = hi.max(d);
    }
    Ok(hi - lo)
}

/// Largest [`delta_spread`] over rounds `1..=horizon`.
pub fn theta_estimate(bank: &SignalBank, horizon: Round) -> Result<f64, SignalError> {
    (1..=horizon.max(1)).try_fold(0.0_f64, |acc, t| Ok(acc.max(delta_spread(bank, t)?)))
}

/// Sinusoid-plus-ramp reference used in the bundled scenarios:
/// `0.5 i + t/10 + 0.2 i sin(0.02 pi t)`.
pub fn scenario_reference(agent: AgentId) -> SignalSpec {
    let i = agent.0 as f64;
    SignalSpec::SinusoidRamp {
        offset: 0.5 * i,
        slope: 0.1,
        amplitude: 0.2 * i,
        angular_freq: 0.02 * std::f64::consts::PI,
    }
}
