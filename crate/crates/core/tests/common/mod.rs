#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resdac::graph::{AgentId, AgentRole, NetworkTopology};
use resdac::signals::{Round, SignalSpec};
use resdac::{AdversaryStrategy, SimulationConfig};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A valid random topology with at most `max_agents` agents and at least two
/// good ones. Trusted agents form a random tree and every other agent gets a
/// trusted neighbour; extra edges appear with probability `density`.
pub fn random_topology(rng: &mut ChaCha8Rng, max_agents: usize, density: f64) -> NetworkTopology {
    let total = rng.random_range(3..=max_agents);
    let m_t = rng.random_range(1..=3.min(total));
    let good = rng.random_range(2.max(m_t)..=total);
    let m_o = good - m_t;
    let m_a = total - good;
    let mut roles = vec![AgentRole::Trusted; m_t];
    roles.extend(std::iter::repeat_n(AgentRole::Ordinary, m_o));
    roles.extend(std::iter::repeat_n(AgentRole::Adversarial, m_a));

    let mut edges = BTreeSet::new();
    for k in 2..=m_t {
        edges.insert((rng.random_range(1..k), k));
    }
    for k in m_t + 1..=total {
        edges.insert((rng.random_range(1..=m_t), k));
    }
    for a in 1..=total {
        for b in a + 1..=total {
            if rng.random_bool(density) {
                edges.insert((a, b));
            }
        }
    }
    NetworkTopology::new(roles, edges).expect("generated topology is well formed")
}

pub fn random_signal(rng: &mut ChaCha8Rng) -> SignalSpec {
    SignalSpec::SinusoidRamp {
        offset: rng.random_range(-3.0..3.0),
        slope: rng.random_range(-0.2..0.2),
        amplitude: rng.random_range(0.0..1.5),
        angular_freq: rng.random_range(0.01..0.4),
    }
}

pub fn random_strategy(
    rng: &mut ChaCha8Rng,
    topo: &NetworkTopology,
    id: AgentId,
) -> AdversaryStrategy {
    match rng.random_range(0..3) {
        0 => AdversaryStrategy::Broadcast {
            series: SignalSpec::Ramp {
                offset: rng.random_range(-50.0..50.0),
                slope: rng.random_range(-2.0..2.0),
            },
        },
        1 => AdversaryStrategy::NoisyBroadcast {
            series: random_signal(rng),
            noise: rng.random_range(0.0..20.0),
            seed: rng.random(),
        },
        _ => AdversaryStrategy::PerNeighbor {
            targets: topo
                .neighbors(id)
                .iter()
                .map(|n| {
                    let sign = *[-1.0, 1.0].choose(rng).unwrap();
                    (
                        *n,
                        SignalSpec::Constant {
                            value: sign * rng.random_range(0.0..100.0),
                        },
                    )
                })
                .collect(),
        },
    }
}

pub fn random_config(rng: &mut ChaCha8Rng, max_agents: usize, horizon: Round) -> SimulationConfig {
    let topology = random_topology(rng, max_agents, 0.25);
    let signals = topology.good().map(|id| (id, random_signal(rng))).collect();
    let adversaries = topology
        .adversarial()
        .map(|id| (id, random_strategy(rng, &topology, id)))
        .collect();
    SimulationConfig {
        topology,
        signals,
        adversaries,
        horizon,
        initial_states: BTreeMap::new(),
    }
}

/// Connectivity of the subgraph induced by `nodes`, by flood fill.
pub fn induced_connected(topo: &NetworkTopology, nodes: &BTreeSet<AgentId>) -> bool {
    let Some(&start) = nodes.iter().next() else {
        return false;
    };
    let mut seen = BTreeSet::from([start]);
    let mut stack = vec![start];
    while let Some(u) = stack.pop() {
        for v in nodes {
            if !seen.contains(v) && topo.has_edge(u, *v) {
                seen.insert(*v);
                stack.push(*v);
            }
        }
    }
    seen.len() == nodes.len()
}

/// Spread envelope summed term by term: `S(t) = 1 + (1 - eta) S(t - 1)`.
pub fn envelope_oracle(horizon: Round, n: usize, theta: f64, alpha: f64, y1: f64) -> Vec<f64> {
    let pairs = (n * (n + 1) / 2) as i32;
    let eta = alpha.powi(pairs - 1);
    let keep = 1.0 - eta;
    let nm1 = (n - 1) as f64;
    let mut geometric = 0.0;
    (1..=horizon)
        .map(|t| {
            geometric = 1.0 + keep * geometric;
            let decay = if eta == 0.0 || keep == 1.0 {
                y1
            } else {
                keep.powf(t as f64 / nm1 - 1.0) * y1
            };
            decay + theta * nm1 * (1.0 + geometric)
        })
        .collect()
}
