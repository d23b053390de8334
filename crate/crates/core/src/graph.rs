//! Communication topology with agent roles.
//!
//! Agents are numbered `1..=M` with trusted agents first, then ordinary,
//! then adversarial. The ordering is enforced when a [`NetworkTopology`] is
//! built so that the trusted block of any per-round transition matrix is a
//! fixed index range.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One-based agent identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub usize);

impl AgentId {
    /// Zero-based position of the agent in role-ordered vectors.
    pub fn index(self) -> usize {
        self.0 - 1
    }

    pub fn from_index(index: usize) -> Self {
        AgentId(index + 1)
    }
}

impl fmt::Display for AgentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentRole {
    Trusted,
    Ordinary,
    Adversarial,
}

impl AgentRole {
    pub fn is_good(self) -> bool {
        !matches!(self, AgentRole::Adversarial)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            AgentRole::Trusted => "trusted",
            AgentRole::Ordinary => "ordinary",
            AgentRole::Adversarial => "adversarial",
        }
    }

    fn rank(self) -> u8 {
        match self {
            AgentRole::Trusted => 0,
            AgentRole::Ordinary => 1,
            AgentRole::Adversarial => 2,
        }
    }
}

impl fmt::Display for AgentRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("topology has no agents")]
    Empty,
    #[error("edge ({0}, {1}) references an unknown agent")]
    UnknownAgent(usize, usize),
    #[error("self-loop on agent {0}")]
    SelfLoop(AgentId),
    #[error("agent {agent} is {role} but follows a {previous} agent; ids must be ordered trusted, ordinary, adversarial")]
    RoleOrder {
        agent: AgentId,
        role: AgentRole,
        previous: AgentRole,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("topology violates the trusted-backbone assumption: {0}")]
    Precondition(String),
}

/// Undirected communication graph with role labels.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkTopology {
    roles: Vec<AgentRole>,
    adjacency: Vec<BTreeSet<AgentId>>,
    edges: BTreeSet<(AgentId, AgentId)>,
    trusted_count: usize,
    ordinary_count: usize,
}

impl NetworkTopology {
    /// Builds a topology from role labels (index `k` is agent `k + 1`) and
    /// undirected edges given as one-based id pairs. Duplicate edges collapse.
    pub fn new(
        roles: Vec<AgentRole>,
        edges: impl IntoIterator<Item = (usize, usize)>,
    ) -> Result<Self, GraphError> {
        if roles.is_empty() {
            return Err(GraphError::Empty);
        }
        for pair in roles.windows(2).enumerate() {
            let (k, w) = pair;
            if w[1].rank() < w[0].rank() {
                return Err(GraphError::RoleOrder {
                    agent: AgentId::from_index(k + 1),
                    role: w[1],
                    previous: w[0],
                });
            }
        }
        let m = roles.len();
        let mut adjacency = vec![BTreeSet::new(); m];
        let mut edge_set = BTreeSet::new();
        for (a, b) in edges {
            if a == 0 || b == 0 || a > m || b > m {
                return Err(GraphError::UnknownAgent(a, b));
            }
            if a == b {
                return Err(GraphError::SelfLoop(AgentId(a)));
            }
            let (lo, hi) = (AgentId(a.min(b)), AgentId(a.max(b)));
            edge_set.insert((lo, hi));
            adjacency[lo.index()].insert(hi);
            adjacency[hi.index()].insert(lo);
        }
        let trusted_count = roles.iter().filter(|r| **r == AgentRole::Trusted).count();
        let ordinary_count = roles.iter().filter(|r| **r == AgentRole::Ordinary).count();
        Ok(Self {
            roles,
            adjacency,
            edges: edge_set,
            trusted_count,
            ordinary_count,
        })
    }

    /// Total number of agents, `M`.
    pub fn agent_count(&self) -> usize {
        self.roles.len()
    }

    /// Number of good (trusted plus ordinary) agents, `N`.
    pub fn good_count(&self) -> usize {
        self.trusted_count + self.ordinary_count
    }

    pub fn trusted_count(&self) -> usize {
        self.trusted_count
    }

    pub fn ordinary_count(&self) -> usize {
        self.ordinary_count
    }

    pub fn adversarial_count(&self) -> usize {
        self.agent_count() - self.good_count()
    }

    pub fn roles(&self) -> &[AgentRole] {
        &self.roles
    }

    pub fn contains(&self, id: AgentId) -> bool {
        id.0 >= 1 && id.0 <= self.agent_count()
    }

    /// Role of `id`. Panics if the id is not part of the topology.
    pub fn role(&self, id: AgentId) -> AgentRole {
        self.roles[id.index()]
    }

    pub fn agents(&self) -> impl Iterator<Item = AgentId> + '_ {
        (1..=self.agent_count()).map(AgentId)
    }

    pub fn trusted(&self) -> impl Iterator<Item = AgentId> {
        (1..=self.trusted_count).map(AgentId)
    }

    pub fn ordinary(&self) -> impl Iterator<Item = AgentId> {
        (self.trusted_count + 1..=self.good_count()).map(AgentId)
    }

    pub fn good(&self) -> impl Iterator<Item = AgentId> {
        (1..=self.good_count()).map(AgentId)
    }

    pub fn adversarial(&self) -> impl Iterator<Item = AgentId> {
        (self.good_count() + 1..=self.agent_count()).map(AgentId)
    }

    /// Neighbour set `N_i`.
    pub fn neighbors(&self, id: AgentId) -> &BTreeSet<AgentId> {
        &self.adjacency[id.index()]
    }

    /// Trusted neighbour set `T_i`.
    pub fn trusted_neighbors(&self, id: AgentId) -> impl Iterator<Item = AgentId> + '_ {
        self.neighbors(id)
            .iter()
            .copied()
            .filter(move |j| self.role(*j) == AgentRole::Trusted)
    }

    pub fn has_edge(&self, a: AgentId, b: AgentId) -> bool {
        self.contains(a) && self.neighbors(a).contains(&b)
    }

    /// Undirected edges as `(low, high)` pairs.
    pub fn edges(&self) -> &BTreeSet<(AgentId, AgentId)> {
        &self.edges
    }
}

fn check_candidate(
    topology: &NetworkTopology,
    candidate: &BTreeSet<AgentId>,
) -> Result<(), GraphError> {
    if candidate.is_empty() {
        return Err(GraphError::InvalidArgument("empty candidate set".into()));
    }
    if let Some(bad) = candidate.iter().find(|id| !topology.contains(**id)) {
        return Err(GraphError::InvalidArgument(format!("unknown agent {bad}")));
    }
    Ok(())
}

/// Connected components of the subgraph induced by `nodes`, each sorted.
fn induced_components(topology: &NetworkTopology, nodes: &BTreeSet<AgentId>) -> Vec<Vec<AgentId>> {
    let mut seen = BTreeSet::new();
    let mut components = Vec::new();
    for &start in nodes {
        if !seen.insert(start) {
            continue;
        }
        let mut component = vec![start];
        let mut queue = VecDeque::from([start]);
        while let Some(u) = queue.pop_front() {
            for &v in topology.neighbors(u) {
                if nodes.contains(&v) && seen.insert(v) {
                    component.push(v);
                    queue.push_back(v);
                }
            }
        }
        component.sort();
        components.push(component);
    }
    components
}

fn undominated(topology: &NetworkTopology, candidate: &BTreeSet<AgentId>) -> Vec<AgentId> {
    topology
        .agents()
        .filter(|id| !candidate.contains(id))
        .filter(|id| topology.neighbors(*id).is_disjoint(candidate))
        .collect()
}

/// True iff `candidate` induces a connected subgraph and every other agent
/// has a neighbour inside it.
pub fn is_connected_dominating_set(
    topology: &NetworkTopology,
    candidate: &BTreeSet<AgentId>,
) -> Result<bool, GraphError> {
    check_candidate(topology, candidate)?;
    Ok(induced_components(topology, candidate).len() == 1
        && undominated(topology, candidate).is_empty())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValidationCheck {
    RoleCounts,
    RoleOrdering,
    TrustedConnected,
    TrustedDominating,
    OrdinaryTrustedNeighbor,
}

impl ValidationCheck {
    pub fn name(self) -> &'static str {
        match self {
            ValidationCheck::RoleCounts => "role_counts",
            ValidationCheck::RoleOrdering => "role_ordering",
            ValidationCheck::TrustedConnected => "trusted_connected",
            ValidationCheck::TrustedDominating => "trusted_dominating",
            ValidationCheck::OrdinaryTrustedNeighbor => "ordinary_trusted_neighbor",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub check: ValidationCheck,
    pub passed: bool,
    pub detail: String,
}

/// Outcome of [`validate_topology`]. Failures are entries, not errors.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<CheckResult>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn check(&self, which: ValidationCheck) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.check == which)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let mark = if c.passed { "ok  " } else { "FAIL" };
            writeln!(f, "{mark} {:<26} {}", c.check.name(), c.detail)?;
        }
        Ok(())
    }
}

fn join_ids(ids: &[AgentId]) -> String {
    ids.iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",")
}

/// Checks the trusted-backbone assumption and the role conventions.
pub fn validate_topology(topology: &NetworkTopology) -> ValidationReport {
    let mut checks = Vec::new();
    let m_t = topology.trusted_count();
    let m_o = topology.ordinary_count();
    let m_a = topology.adversarial_count();

    checks.push(CheckResult {
        check: ValidationCheck::RoleCounts,
        passed: m_t >= 1 && m_t + m_o + m_a == topology.agent_count(),
        detail: if m_t == 0 {
            "no trusted agents".to_string()
        } else {
            format!("m_T={m_t} m_O={m_o} m_A={m_a} M={}", topology.agent_count())
        },
    });

    let ordered = topology
        .roles()
        .windows(2)
        .all(|w| w[0].rank() <= w[1].rank());
    checks.push(CheckResult {
        check: ValidationCheck::RoleOrdering,
        passed: ordered,
        detail: if ordered {
            "trusted, ordinary, adversarial".to_string()
        } else {
            "ids not ordered trusted, ordinary, adversarial".to_string()
        },
    });

    let trusted: BTreeSet<AgentId> = topology.trusted().collect();
    let components = induced_components(topology, &trusted);
    let connected = components.len() == 1;
    checks.push(CheckResult {
        check: ValidationCheck::TrustedConnected,
        passed: connected,
        detail: if connected {
            "trusted subgraph connected".to_string()
        } else if components.is_empty() {
            "trusted subgraph empty".to_string()
        } else {
            let parts: Vec<String> = components
                .iter()
                .map(|c| format!("{{{}}}", join_ids(c)))
                .collect();
            format!("trusted subgraph disconnected: {}", parts.join(" "))
        },
    });

    let missing = undominated(topology, &trusted);
    checks.push(CheckResult {
        check: ValidationCheck::TrustedDominating,
        passed: missing.is_empty(),
        detail: if missing.is_empty() {
            "every agent has a trusted neighbor or is trusted".to_string()
        } else {
            format!(
                "not dominated by the trusted set: agents {}",
                join_ids(&missing)
            )
        },
    });

    let lonely: Vec<AgentId> = topology
        .ordinary()
        .filter(|id| topology.trusted_neighbors(*id).next().is_none())
        .collect();
    checks.push(CheckResult {
        check: ValidationCheck::OrdinaryTrustedNeighbor,
        passed: lonely.is_empty(),
        detail: if lonely.is_empty() {
            "every ordinary agent has a trusted neighbor".to_string()
        } else {
            lonely
                .iter()
                .map(|id| format!("agent {id} has no trusted neighbor"))
                .collect::<Vec<_>>()
                .join("; ")
        },
    });

    ValidationReport { checks }
}

/// Good-agent subgraph: trusted-trusted arcs in both directions plus the
/// arcs into each ordinary agent from its trusted neighbours.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GoodSubgraph {
    pub nodes: Vec<AgentId>,
    /// Directed arcs `(from, to)`.
    pub arcs: BTreeSet<(AgentId, AgentId)>,
}

impl GoodSubgraph {
    pub fn contains_arc(&self, from: AgentId, to: AgentId) -> bool {
        self.arcs.contains(&(from, to))
    }

    /// In-neighbours of `to` within the subgraph.
    pub fn in_neighbors(&self, to: AgentId) -> BTreeSet<AgentId> {
        self.arcs
            .iter()
            .filter(|(_, t)| *t == to)
            .map(|(f, _)| *f)
            .collect()
    }
}

pub fn good_subgraph(topology: &NetworkTopology) -> Result<GoodSubgraph, GraphError> {
    let report = validate_topology(topology);
    if !report.passed() {
        let reasons: Vec<String> = report.failures().map(|c| c.detail.clone()).collect();
        return Err(GraphError::Precondition(reasons.join("; ")));
    }
    let mut arcs = BTreeSet::new();
    for &(a, b) in topology.edges() {
        match (topology.role(a), topology.role(b)) {
            (AgentRole::Trusted, AgentRole::Trusted) => {
                arcs.insert((a, b));
                arcs.insert((b, a));
            }
            (AgentRole::Trusted, AgentRole::Ordinary) => {
                arcs.insert((a, b));
            }
            (AgentRole::Ordinary, AgentRole::Trusted) => {
                arcs.insert((b, a));
            }
            _ => {}
        }
    }
    Ok(GoodSubgraph {
        nodes: topology.good().collect(),
        arcs,
    })
}

/// Minimum nonzero transition weight `1 / (1 + d_max)`.
///
/// `d_max` is the largest full neighbourhood size over good agents, raised
/// to at least `m_T - 1` so that the `1/m_T` trusted weights stay above it.
pub fn alpha_lower_bound(topology: &NetworkTopology) -> f64 {
    let widest = topology
        .good()
        .map(|id| topology.neighbors(id).len())
        .max()
        .unwrap_or(0);
    let d_max = widest.max(topology.trusted_count().saturating_sub(1));
    1.0 / (1.0 + d_max as f64)
}
