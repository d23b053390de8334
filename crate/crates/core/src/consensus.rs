//! Synchronous round engine for the trusted/ordinary update laws.
//!
//! Trusted agents average over their trusted neighbours with weights `1/m_T`
//! and keep the remaining mass on themselves. Ordinary agents keep only the
//! received values that fall inside the closed interval spanned by their
//! trusted neighbours and themselves, and take the plain mean of those. Both
//! then add their own reference increment `r_i(t) - r_i(t-1)`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::adversary::{AdversaryError, AdversaryStrategy};
use crate::graph::{validate_topology, AgentId, AgentRole, NetworkTopology};
use crate::signals::{Round, SignalBank, SignalError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConsensusError {
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Config(Vec<String>),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("protocol assumption violated: {0}")]
    ProtocolAssumption(String),
    #[error("round {t}: non-finite {what} for agent {agent}")]
    Data {
        t: Round,
        agent: AgentId,
        what: &'static str,
    },
    #[error("round {t}: trusted agent {agent} was fed a value from non-trusted agent {sender}")]
    InsulationBreach {
        t: Round,
        agent: AgentId,
        sender: AgentId,
    },
    #[error("round {t}: signal of agent {agent}: {source}")]
    Signal {
        t: Round,
        agent: AgentId,
        source: SignalError,
    },
    #[error("round {t}: adversary {agent}: {source}")]
    Adversary {
        t: Round,
        agent: AgentId,
        source: AdversaryError,
    },
}

/// Local variables of a good agent at the start of a round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentState {
    pub x: f64,
    /// `r_i(t - 1)`.
    pub last_reference: f64,
}

/// Values received by one agent in one round, keyed by sender.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RoundInbox {
    pub values: BTreeMap<AgentId, f64>,
}

/// Result of the ordinary-agent interval filter.
#[derive(Debug, Clone, PartialEq)]
pub struct FilterOutcome {
    pub x_min: f64,
    pub x_max: f64,
    /// The accepted set `U_i(t)` with the value each member contributed.
    pub accepted: BTreeMap<AgentId, f64>,
}

impl FilterOutcome {
    pub fn accepted_ids(&self) -> impl Iterator<Item = AgentId> + '_ {
        self.accepted.keys().copied()
    }
}

/// Trusted update: `sum_j x_j / m_T + (1 - |T_i| / m_T) x_i + delta_r`.
pub fn trusted_update(
    own_x: f64,
    trusted_values: &BTreeMap<AgentId, f64>,
    m_t: usize,
    delta_r: f64,
) -> Result<f64, ConsensusError> {
    if m_t == 0 || trusted_values.len() >= m_t {
        return Err(ConsensusError::InvalidArgument(format!(
            "{} trusted neighbours with m_T = {m_t}; need |T_i| <= m_T - 1",
            trusted_values.len()
        )));
    }
    let m = m_t as f64;
    let neighbours: f64 = trusted_values.values().map(|x| x / m).sum();
    let self_weight = 1.0 - trusted_values.len() as f64 / m;
    Ok(neighbours + self_weight * own_x + delta_r)
}

/// Interval filter of an ordinary agent.
///
/// The bounds are the extremes of the trusted neighbour values and the
/// agent's own value; every received value inside the closed interval is
/// accepted, together with the agent itself.
pub fn filter_neighbors(
    own: AgentId,
    own_x: f64,
    trusted_values: &BTreeMap<AgentId, f64>,
    all_received: &BTreeMap<AgentId, f64>,
) -> Result<FilterOutcome, ConsensusError> {
    if trusted_values.is_empty() {
        return Err(ConsensusError::ProtocolAssumption(format!(
            "ordinary agent {own} has no trusted neighbour"
        )));
    }
    if let Some(j) = trusted_values
        .keys()
        .find(|j| !all_received.contains_key(j))
    {
        return Err(ConsensusError::InvalidArgument(format!(
            "trusted neighbour {j} missing from the received values of agent {own}"
        )));
    }
    let (x_min, x_max) = trusted_values
        .values()
        .fold((own_x, own_x), |(lo, hi), v| (lo.min(*v), hi.max(*v)));
    let mut accepted: BTreeMap<AgentId, f64> = all_received
        .iter()
        .filter(|(_, v)| (x_min..=x_max).contains(*v))
        .map(|(j, v)| (*j, *v))
        .collect();
    accepted.insert(own, own_x);
    Ok(FilterOutcome {
        x_min,
        x_max,
        accepted,
    })
}

/// Ordinary update: mean of the accepted values plus `delta_r`.
pub fn ordinary_update(outcome: &FilterOutcome, delta_r: f64) -> f64 {
    let n = outcome.accepted.len() as f64;
    outcome.accepted.values().map(|x| x / n).sum::<f64>() + delta_r
}

/// Everything needed to run the protocol.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub topology: NetworkTopology,
    /// One signal per good agent.
    pub signals: SignalBank,
    /// One schedule per adversarial agent.
    pub adversaries: BTreeMap<AgentId, AdversaryStrategy>,
    /// Number of state samples `x(1..=horizon)`; `horizon - 1` rounds run.
    pub horizon: Round,
    /// Overrides of `x_i(1)`; unspecified agents start at `r_i(0)`.
    pub initial_states: BTreeMap<AgentId, f64>,
}

impl SimulationConfig {
    /// Lists every inconsistency between topology, signals and schedules.
    pub fn problems(&self) -> Vec<String> {
        let topo = &self.topology;
        let mut issues: Vec<String> = validate_topology(topo)
            .failures()
            .map(|c| format!("{}: {}", c.check.name(), c.detail))
            .collect();
        if self.horizon < 2 {
            issues.push(format!("horizon must be at least 2, got {}", self.horizon));
        }
        for id in topo.good() {
            if !self.signals.contains_key(&id) {
                issues.push(format!("agent {id} ({}) has no signal", topo.role(id)));
            }
        }
        for (id, spec) in &self.signals {
            if !topo.contains(*id) || !topo.role(*id).is_good() {
                issues.push(format!("agent {id} is not a good agent but has a signal"));
            } else if let Some(last) = spec.last_round() {
                if last < self.horizon {
                    issues.push(format!(
                        "tabulated signal of agent {id} ends at round {last}, horizon is {}",
                        self.horizon
                    ));
                }
            }
        }
        for id in topo.adversarial() {
            match self.adversaries.get(&id) {
                None => issues.push(format!("adversarial agent {id} has no strategy")),
                Some(strategy) => {
                    if let Some(mapped) = strategy.mapped_targets() {
                        let mapped: Vec<AgentId> = mapped.collect();
                        for n in topo.neighbors(id) {
                            if !mapped.contains(n) {
                                issues.push(format!(
                                    "per-neighbor strategy of agent {id} has no entry for neighbor {n}"
                                ));
                            }
                        }
                        for m in mapped {
                            if !topo.neighbors(id).contains(&m) {
                                issues.push(format!(
                                    "per-neighbor strategy of agent {id} targets non-neighbor {m}"
                                ));
                            }
                        }
                    }
                }
            }
        }
        for id in self.adversaries.keys() {
            if !topo.contains(*id) || topo.role(*id) != AgentRole::Adversarial {
                issues.push(format!("agent {id} is not adversarial but has a strategy"));
            }
        }
        for id in self.initial_states.keys() {
            if !topo.contains(*id) || !topo.role(*id).is_good() {
                issues.push(format!("initial state given for non-good agent {id}"));
            }
        }
        issues
    }

    pub fn validate(&self) -> Result<(), ConsensusError> {
        let issues = self.problems();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConsensusError::Config(issues))
        }
    }

    fn reference(&self, id: AgentId, t: Round) -> Result<f64, ConsensusError> {
        let spec = self
            .signals
            .get(&id)
            .ok_or_else(|| ConsensusError::Config(vec![format!("agent {id} has no signal")]))?;
        let r = spec.evaluate(t).map_err(|source| ConsensusError::Signal {
            t,
            agent: id,
            source,
        })?;
        if !r.is_finite() {
            return Err(ConsensusError::Data {
                t,
                agent: id,
                what: "reference",
            });
        }
        Ok(r)
    }

    /// `x(1)` and `r(0)` for every good agent.
    pub fn initial_agent_states(&self) -> Result<Vec<AgentState>, ConsensusError> {
        self.topology
            .good()
            .map(|id| {
                let r0 = self.reference(id, 0)?;
                let x = self.initial_states.get(&id).copied().unwrap_or(r0);
                if !x.is_finite() {
                    return Err(ConsensusError::Data {
                        t: 1,
                        agent: id,
                        what: "initial state",
                    });
                }
                Ok(AgentState {
                    x,
                    last_reference: r0,
                })
            })
            .collect()
    }
}

/// What happened in one round, kept for the analysis side.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: Round,
    /// `delta_r_i(t)` indexed by good-agent position.
    pub delta_r: Vec<f64>,
    /// Inbox of every good agent.
    pub inboxes: BTreeMap<AgentId, RoundInbox>,
    /// Filter outcome of every ordinary agent.
    pub filters: BTreeMap<AgentId, FilterOutcome>,
}

impl RoundRecord {
    /// `(sender, receiver, value)` for every adversarial emission to a good agent.
    pub fn adversary_emissions<'a>(
        &'a self,
        topology: &'a NetworkTopology,
    ) -> impl Iterator<Item = (AgentId, AgentId, f64)> + 'a {
        self.inboxes.iter().flat_map(move |(receiver, inbox)| {
            inbox
                .values
                .iter()
                .filter(move |(s, _)| topology.role(**s) == AgentRole::Adversarial)
                .map(move |(s, v)| (*s, *receiver, *v))
        })
    }
}

/// Executes round `t`: all inboxes are built from the states at `t` before
/// any agent updates.
pub fn run_round(
    config: &SimulationConfig,
    states: &[AgentState],
    t: Round,
) -> Result<(Vec<AgentState>, RoundRecord), ConsensusError> {
    let topo = &config.topology;
    if t == 0 {
        return Err(ConsensusError::InvalidArgument(
            "rounds start at t = 1".into(),
        ));
    }
    if states.len() != topo.good_count() {
        return Err(ConsensusError::InvalidArgument(format!(
            "expected {} good-agent states, got {}",
            topo.good_count(),
            states.len()
        )));
    }

    let mut references = Vec::with_capacity(states.len());
    let mut delta_r = Vec::with_capacity(states.len());
    for (id, state) in topo.good().zip(states) {
        if !state.x.is_finite() {
            return Err(ConsensusError::Data {
                t,
                agent: id,
                what: "state",
            });
        }
        let r = config.reference(id, t)?;
        references.push(r);
        delta_r.push(r - state.last_reference);
    }

    let mut inboxes = BTreeMap::new();
    for receiver in topo.good() {
        let mut inbox = RoundInbox::default();
        for &sender in topo.neighbors(receiver) {
            let value = if topo.role(sender).is_good() {
                states[sender.index()].x
            } else {
                let strategy = config.adversaries.get(&sender).ok_or_else(|| {
                    ConsensusError::Config(vec![format!(
                        "adversarial agent {sender} has no strategy"
                    )])
                })?;
                strategy
                    .emit(t, receiver)
                    .map_err(|source| ConsensusError::Adversary {
                        t,
                        agent: sender,
                        source,
                    })?
            };
            inbox.values.insert(sender, value);
        }
        inboxes.insert(receiver, inbox);
    }

    let m_t = topo.trusted_count();
    let mut next = Vec::with_capacity(states.len());
    let mut filters = BTreeMap::new();
    for id in topo.good() {
        let k = id.index();
        let inbox = &inboxes[&id];
        let trusted_values: BTreeMap<AgentId, f64> = topo
            .trusted_neighbors(id)
            .map(|j| (j, inbox.values[&j]))
            .collect();
        let x = match topo.role(id) {
            AgentRole::Trusted => {
                if let Some(sender) = trusted_values
                    .keys()
                    .find(|j| topo.role(**j) != AgentRole::Trusted)
                {
                    return Err(ConsensusError::InsulationBreach {
                        t,
                        agent: id,
                        sender: *sender,
                    });
                }
                trusted_update(states[k].x, &trusted_values, m_t, delta_r[k])?
            }
            AgentRole::Ordinary => {
                let outcome = filter_neighbors(id, states[k].x, &trusted_values, &inbox.values)?;
                let x = ordinary_update(&outcome, delta_r[k]);
                filters.insert(id, outcome);
                x
            }
            AgentRole::Adversarial => unreachable!("good() yields only good agents"),
        };
        next.push(AgentState {
            x,
            last_reference: references[k],
        });
    }

    Ok((
        next,
        RoundRecord {
            t,
            delta_r,
            inboxes,
            filters,
        },
    ))
}

/// Full history of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub topology: NetworkTopology,
    pub horizon: Round,
    /// `states[t - 1][k]` is `x(t)` of good agent `k + 1`, for `t = 1..=horizon`.
    pub states: Vec<Vec<f64>>,
    /// `references[t][k]` is `r(t)` of good agent `k + 1`, for `t = 0..=horizon`.
    pub references: Vec<Vec<f64>>,
    /// Records of rounds `t = 1..horizon`.
    pub rounds: Vec<RoundRecord>,
}

impl SimulationTrace {
    pub fn state(&self, t: Round, id: AgentId) -> f64 {
        self.states[(t - 1) as usize][id.index()]
    }

    pub fn states_at(&self, t: Round) -> &[f64] {
        &self.states[(t - 1) as usize]
    }

    pub fn reference(&self, t: Round, id: AgentId) -> f64 {
        self.references[t as usize][id.index()]
    }

    pub fn round(&self, t: Round) -> &RoundRecord {
        &self.rounds[(t - 1) as usize]
    }

    /// `r_T(t)` averaged over trusted agents.
    pub fn trusted_reference_mean(&self, t: Round) -> f64 {
        let m = self.topology.trusted_count();
        self.references[t as usize][..m].iter().sum::<f64>() / m as f64
    }

    /// `x_T(t)` averaged over trusted agents.
    pub fn trusted_state_mean(&self, t: Round) -> f64 {
        let m = self.topology.trusted_count();
        self.states_at(t)[..m].iter().sum::<f64>() / m as f64
    }

    /// `y(t)`: max minus min over good-agent states.
    pub fn spread(&self, t: Round) -> f64 {
        let xs = self.states_at(t);
        let hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
        hi - lo
    }
}

/// Runs rounds `1..horizon` from the configured initial states.
pub fn run(config: &SimulationConfig) -> Result<SimulationTrace, ConsensusError> {
    config.validate()?;
    let topo = &config.topology;
    let mut states = config.initial_agent_states()?;
    let references = (0..=config.horizon)
        .map(|t| topo.good().map(|id| config.reference(id, t)).collect())
        .collect::<Result<Vec<Vec<f64>>, _>>()?;

    let rounds_to_run = (config.horizon - 1) as usize;
    let mut trace_states = Vec::with_capacity(rounds_to_run + 1);
    trace_states.push(states.iter().map(|s| s.x).collect::<Vec<_>>());
    let mut rounds = Vec::with_capacity(rounds_to_run);
    for t in 1..config.horizon {
        let (next, record) = run_round(config, &states, t)?;
        states = next;
        trace_states.push(states.iter().map(|s| s.x).collect());
        rounds.push(record);
    }

    Ok(SimulationTrace {
        topology: topo.clone(),
        horizon: config.horizon,
        states: trace_states,
        references,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signals::SignalSpec;
    use AgentRole::*;

    fn vals(pairs: &[(usize, f64)]) -> BTreeMap<AgentId, f64> {
        pairs.iter().map(|(k, v)| (AgentId(*k), *v)).collect()
    }

    #[test]
    fn trusted_update_examples() {
        let x = trusted_update(3.0, &vals(&[(1, 0.0), (3, 6.0)]), 3, 0.0).unwrap();
        assert!((x - 3.0).abs() < 1e-12);
        assert_eq!(trusted_update(5.0, &BTreeMap::new(), 1, 2.0), Ok(7.0));
        let c = 1.25;
        let x = trusted_update(c, &vals(&[(1, c), (2, c)]), 4, 0.0).unwrap();
        assert!((x - c).abs() < 1e-15);
    }

    #[test]
    fn trusted_update_rejects_full_neighbourhood() {
        assert!(matches!(
            trusted_update(0.0, &vals(&[(1, 0.0), (2, 0.0)]), 2, 0.0),
            Err(ConsensusError::InvalidArgument(_))
        ));
    }

    #[test]
    fn filter_example() {
        let trusted = vals(&[(1, 1.0), (2, 5.0)]);
        let all = vals(&[(1, 1.0), (2, 5.0), (6, 4.0), (7, 10.0)]);
        let out = filter_neighbors(AgentId(4), 3.0, &trusted, &all).unwrap();
        assert_eq!((out.x_min, out.x_max), (1.0, 5.0));
        assert_eq!(
            out.accepted,
            vals(&[(1, 1.0), (2, 5.0), (4, 3.0), (6, 4.0)])
        );
        assert!((ordinary_update(&out, 1.0) - 4.25).abs() < 1e-12);
    }

    #[test]
    fn filter_degenerate_interval_and_boundary() {
        let c = 2.5;
        let out = filter_neighbors(
            AgentId(3),
            c,
            &vals(&[(1, c)]),
            &vals(&[(1, c), (5, c), (6, c + 1e-9)]),
        )
        .unwrap();
        assert_eq!(out.accepted, vals(&[(1, c), (3, c), (5, c)]));
        assert_eq!(ordinary_update(&out, 0.0), c);
        assert_eq!(ordinary_update(&out, 0.5), c + 0.5);

        let out = filter_neighbors(
            AgentId(3),
            0.0,
            &vals(&[(1, 2.0)]),
            &vals(&[(1, 2.0), (9, 2.0)]),
        )
        .unwrap();
        assert!(out.accepted.contains_key(&AgentId(9)));
    }

    #[test]
    fn filter_requires_trusted_neighbour() {
        assert!(matches!(
            filter_neighbors(AgentId(2), 0.0, &BTreeMap::new(), &vals(&[(5, 1.0)])),
            Err(ConsensusError::ProtocolAssumption(_))
        ));
        assert!(matches!(
            filter_neighbors(AgentId(2), 0.0, &vals(&[(1, 0.0)]), &BTreeMap::new()),
            Err(ConsensusError::InvalidArgument(_))
        ));
    }

    #[test]
    fn ordinary_self_only() {
        let out =
            filter_neighbors(AgentId(2), 7.0, &vals(&[(1, 7.0)]), &vals(&[(1, 7.0)])).unwrap();
        let only_self = FilterOutcome {
            accepted: vals(&[(2, 7.0)]),
            ..out
        };
        assert_eq!(ordinary_update(&only_self, 0.0), 7.0);
    }

    fn constant_triangle() -> SimulationConfig {
        let topology = NetworkTopology::new(vec![Trusted; 3], [(1, 2), (2, 3), (1, 3)]).unwrap();
        SimulationConfig {
            topology,
            signals: (1..=3)
                .map(|i| (AgentId(i), SignalSpec::Constant { value: 2.0 }))
                .collect(),
            adversaries: BTreeMap::new(),
            horizon: 2,
            initial_states: BTreeMap::new(),
        }
    }

    #[test]
    fn consensus_fixed_point() {
        let trace = run(&constant_triangle()).unwrap();
        assert_eq!(trace.states.len(), 2);
        assert_eq!(trace.rounds.len(), 1);
        assert_eq!(trace.states[0], trace.states[1]);
    }

    #[test]
    fn isolated_ordinary_uses_only_self_and_trusted() {
        let topology = NetworkTopology::new(
            vec![Trusted, Trusted, Ordinary, Adversarial, Adversarial],
            [(1, 2), (1, 3), (3, 4), (3, 5), (2, 4), (2, 5)],
        )
        .unwrap();
        let config = SimulationConfig {
            topology,
            signals: BTreeMap::from([
                (AgentId(1), SignalSpec::Constant { value: 1.0 }),
                (AgentId(2), SignalSpec::Constant { value: 2.0 }),
                (
                    AgentId(3),
                    SignalSpec::Ramp {
                        offset: 3.0,
                        slope: 0.5,
                    },
                ),
            ]),
            adversaries: BTreeMap::from([
                (
                    AgentId(4),
                    AdversaryStrategy::Broadcast {
                        series: SignalSpec::Constant { value: 100.0 },
                    },
                ),
                (
                    AgentId(5),
                    AdversaryStrategy::Broadcast {
                        series: SignalSpec::Constant { value: -100.0 },
                    },
                ),
            ]),
            horizon: 2,
            initial_states: BTreeMap::new(),
        };
        let states = config.initial_agent_states().unwrap();
        let (next, record) = run_round(&config, &states, 1).unwrap();
        assert_eq!(next[2].x, (1.0 + 3.0) / 2.0 + 0.5);
        assert_eq!(record.filters[&AgentId(3)].accepted.len(), 2);
        let emissions: Vec<_> = record.adversary_emissions(&config.topology).collect();
        assert_eq!(emissions.len(), 4);
    }

    #[test]
    fn config_problems_are_listed() {
        let mut config = constant_triangle();
        config.signals.remove(&AgentId(2));
        config.horizon = 1;
        config.initial_states.insert(AgentId(9), 0.0);
        let issues = config.problems();
        assert_eq!(issues.len(), 3, "{issues:?}");
        assert!(issues.iter().any(|s| s.contains("agent 2")));
        assert!(matches!(run(&config), Err(ConsensusError::Config(_))));
    }

    #[test]
    fn per_neighbor_must_cover_neighbours() {
        let topology = NetworkTopology::new(
            vec![Trusted, Ordinary, Adversarial],
            [(1, 2), (2, 3), (1, 3)],
        )
        .unwrap();
        let config = SimulationConfig {
            topology,
            signals: (1..=2)
                .map(|i| (AgentId(i), SignalSpec::Constant { value: 0.0 }))
                .collect(),
            adversaries: BTreeMap::from([(
                AgentId(3),
                AdversaryStrategy::PerNeighbor {
                    targets: BTreeMap::from([(AgentId(2), SignalSpec::Constant { value: 1.0 })]),
                },
            )]),
            horizon: 5,
            initial_states: BTreeMap::new(),
        };
        let issues = config.problems();
        assert_eq!(issues.len(), 1);
        assert!(issues[0].contains("neighbor 1"));
    }

    #[test]
    fn nan_reference_aborts() {
        let mut config = constant_triangle();
        config.horizon = 3;
        config.signals.insert(
            AgentId(2),
            SignalSpec::Tabulated {
                values: vec![0.0, f64::NAN, 0.0, 0.0],
            },
        );
        assert!(matches!(
            run(&config),
            Err(ConsensusError::Data {
                agent: AgentId(2),
                ..
            })
        ));
    }

    #[test]
    fn short_tabulated_signal_is_a_config_error() {
        let mut config = constant_triangle();
        config.horizon = 10;
        config.signals.insert(
            AgentId(1),
            SignalSpec::Tabulated {
                values: vec![0.0; 5],
            },
        );
        assert!(matches!(run(&config), Err(ConsensusError::Config(_))));
    }
}
