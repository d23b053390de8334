//! Bundled scenario configurations.
//!
//! Both scenarios use the sinusoid-plus-ramp references
//! `0.5 i + t/10 + 0.2 i sin(0.02 pi t)` on a nine-agent graph with trusted
//! agents 1-3. Scenario 1 has adversaries 8 and 9; scenario 2 additionally
//! compromises 6 and 7. The edge sets are reconstructions chosen to satisfy
//! the published role and connectivity constraints.

use std::path::Path;

use crate::config::{parse_config, ConfigError, RunConfig};

pub const SCENARIO_1: &str = include_str!("../scenarios/scenario1.toml");
pub const SCENARIO_2: &str = include_str!("../scenarios/scenario2.toml");

pub const NAMES: [&str; 2] = ["scenario1", "scenario2"];

pub fn text(name: &str) -> Option<&'static str> {
    match name {
        "scenario1" | "1" => Some(SCENARIO_1),
        "scenario2" | "2" => Some(SCENARIO_2),
        _ => None,
    }
}

pub fn by_name(name: &str) -> Option<Result<RunConfig, ConfigError>> {
    text(name).map(|t| parse_config(t, Path::new(".")))
}

/// Scenario `1` or `2`.
pub fn scenario(number: u8) -> Result<RunConfig, ConfigError> {
    by_name(&number.to_string())
        .unwrap_or_else(|| Err(ConfigError::Parse(format!("no scenario {number}"))))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{is_connected_dominating_set, AgentId, AgentRole};
    use std::collections::BTreeSet;

    fn role_ids(cfg: &RunConfig, role: AgentRole) -> Vec<usize> {
        cfg.topology()
            .agents()
            .filter(|id| cfg.topology().role(*id) == role)
            .map(|id| id.0)
            .collect()
    }

    #[test]
    fn scenario_one_roles() {
        let cfg = scenario(1).unwrap();
        assert_eq!(role_ids(&cfg, AgentRole::Trusted), vec![1, 2, 3]);
        assert_eq!(role_ids(&cfg, AgentRole::Ordinary), vec![4, 5, 6, 7]);
        assert_eq!(role_ids(&cfg, AgentRole::Adversarial), vec![8, 9]);
    }

    #[test]
    fn scenario_two_constraints() {
        let cfg = scenario(2).unwrap();
        let topo = cfg.topology();
        assert_eq!(role_ids(&cfg, AgentRole::Adversarial), vec![6, 7, 8, 9]);
        let cds: BTreeSet<AgentId> = (1..=5).map(AgentId).collect();
        assert!(is_connected_dominating_set(topo, &cds).unwrap());
        for (ordinary, trusted) in [(4, 1), (5, 3)] {
            let t: Vec<usize> = topo
                .trusted_neighbors(AgentId(ordinary))
                .map(|j| j.0)
                .collect();
            assert_eq!(t, vec![trusted]);
            let others_adversarial = topo
                .neighbors(AgentId(ordinary))
                .iter()
                .filter(|j| j.0 != trusted)
                .all(|j| topo.role(*j) == AgentRole::Adversarial);
            assert!(others_adversarial);
        }
    }

    #[test]
    fn scenarios_share_a_graph() {
        let a = scenario(1).unwrap();
        let b = scenario(2).unwrap();
        assert_eq!(a.topology().edges(), b.topology().edges());
    }
}
