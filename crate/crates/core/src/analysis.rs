//! Observer-side analysis of completed traces.
//!
//! Agents never form matrices. Here each round is rewritten as
//! `x(t+1) = W(t) x(t) + delta_r(t)` over the good agents, where every value
//! an ordinary agent accepted from outside its trusted neighbourhood is
//! expressed as a convex combination of the interval endpoints and its weight
//! moved onto the agents attaining them. The resulting matrix is checked for
//! row stochasticity, support on the good subgraph, a uniform lower bound on
//! nonzero entries and a doubly stochastic trusted block.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::consensus::{RoundRecord, SimulationConfig, SimulationTrace};
use crate::graph::{
    alpha_lower_bound, good_subgraph, AgentId, AgentRole, GoodSubgraph, GraphError, NetworkTopology,
};
use crate::signals::{theta_estimate, Round, SignalError};

/// Tolerance for algebraic identities on a single matrix.
pub const ALGEBRAIC_TOL: f64 = 1e-12;
/// Tolerance for quantities accumulated over many rounds.
pub const ACCUMULATED_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalysisError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("round {t}, agent {agent}: {reason}")]
    Inconsistent {
        t: Round,
        agent: AgentId,
        reason: String,
    },
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Signal(#[from] SignalError),
}

/// Equivalent transition matrix of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRecord {
    pub t: Round,
    /// `N x N`, trusted block first.
    pub matrix: DMatrix<f64>,
    /// Max over rows of `|[W x(t) + delta_r(t) - x(t+1)]_i|`.
    pub residual: f64,
    /// Decomposition coefficient of every redistributed outsider value.
    pub lambdas: Vec<f64>,
}

fn inconsistent(t: Round, agent: AgentId, reason: impl Into<String>) -> AnalysisError {
    AnalysisError::Inconsistent {
        t,
        agent,
        reason: reason.into(),
    }
}

/// Rebuilds `W(t)` from a round record and the states on both sides of it.
pub fn reconstruct_transition(
    record: &RoundRecord,
    topology: &NetworkTopology,
    x_t: &[f64],
    x_next: &[f64],
) -> Result<TransitionRecord, AnalysisError> {
    let n = topology.good_count();
    let t = record.t;
    if x_t.len() != n || x_next.len() != n || record.delta_r.len() != n {
        return Err(AnalysisError::InvalidArgument(format!(
            "expected {n} good-agent entries"
        )));
    }
    let m_t = topology.trusted_count() as f64;
    let mut w = DMatrix::<f64>::zeros(n, n);
    let mut lambdas = Vec::new();

    for i in topology.good() {
        let row = i.index();
        let trusted: Vec<AgentId> = topology.trusted_neighbors(i).collect();
        match topology.role(i) {
            AgentRole::Trusted => {
                for j in &trusted {
                    w[(row, j.index())] = 1.0 / m_t;
                }
                w[(row, row)] = 1.0 - trusted.len() as f64 / m_t;
            }
            AgentRole::Ordinary => {
                let outcome = record
                    .filters
                    .get(&i)
                    .ok_or_else(|| inconsistent(t, i, "missing filter outcome"))?;
                let base = 1.0 / outcome.accepted.len() as f64;
                let core: Vec<AgentId> =
                    trusted.iter().copied().chain(std::iter::once(i)).collect();
                let core_value =
                    |j: &AgentId| {
                        outcome.accepted.get(j).copied().ok_or_else(|| {
                            inconsistent(t, i, format!("core agent {j} not accepted"))
                        })
                    };
                // Lowest id attaining each extreme.
                let mut j_max = None;
                let mut j_min = None;
                for j in &core {
                    let v = core_value(j)?;
                    if j_max.is_none() && v == outcome.x_max {
                        j_max = Some(*j);
                    }
                    if j_min.is_none() && v == outcome.x_min {
                        j_min = Some(*j);
                    }
                    w[(row, j.index())] += base;
                }
                let (j_max, j_min) = match (j_max, j_min) {
                    (Some(a), Some(b)) => (a, b),
                    _ => {
                        return Err(inconsistent(
                            t,
                            i,
                            "interval endpoints not attained by the trusted neighbourhood",
                        ))
                    }
                };
                let width = outcome.x_max - outcome.x_min;
                for (k, v) in &outcome.accepted {
                    if core.contains(k) {
                        continue;
                    }
                    let lambda = if width > 0.0 {
                        (v - outcome.x_min) / width
                    } else if *v == outcome.x_min {
                        0.0
                    } else {
                        return Err(inconsistent(
                            t,
                            i,
                            format!(
                                "value {v} from agent {k} outside degenerate interval [{}]",
                                outcome.x_min
                            ),
                        ));
                    };
                    lambdas.push(lambda);
                    w[(row, j_max.index())] += base * lambda;
                    w[(row, j_min.index())] += base * (1.0 - lambda);
                }
            }
            AgentRole::Adversarial => unreachable!(),
        }
    }

    let residual = (0..n)
        .map(|r| {
            let predicted: f64 =
                (0..n).map(|c| w[(r, c)] * x_t[c]).sum::<f64>() + record.delta_r[r];
            (predicted - x_next[r]).abs()
        })
        .fold(0.0, f64::max);

    Ok(TransitionRecord {
        t,
        matrix: w,
        residual,
        lambdas,
    })
}

/// One measured property: `measured` is the slack or extreme value observed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropertyCheck {
    pub passed: bool,
    pub measured: f64,
}

impl PropertyCheck {
    fn new(passed: bool, measured: f64) -> Self {
        Self { passed, measured }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyReport {
    pub t: Round,
    /// Smallest entry; must be nonnegative.
    pub nonnegative: PropertyCheck,
    /// A1: max `|row sum - 1|`.
    pub row_sums: PropertyCheck,
    /// A2: number of entries whose zero pattern disagrees with the good subgraph plus self-loops.
    pub support: PropertyCheck,
    /// A3: smallest nonzero entry against alpha.
    pub min_weight: PropertyCheck,
    /// B1: max `|column sum - 1|` of the trusted block.
    pub trusted_columns: PropertyCheck,
    pub residual: PropertyCheck,
    /// Largest distance of a decomposition coefficient outside `[0, 1]`.
    pub lambda_range: PropertyCheck,
}

impl PropertyReport {
    pub fn all_passed(&self) -> bool {
        [
            self.nonnegative,
            self.row_sums,
            self.support,
            self.min_weight,
            self.trusted_columns,
            self.residual,
            self.lambda_range,
        ]
        .iter()
        .all(|c| c.passed)
    }

    pub fn summary(&self) -> String {
        format!(
            "nonneg={} ({}) A1={} ({:e}) A2={} ({}) A3={} ({}) B1={} ({:e}) residual={} ({:e}) lambda={} ({:e})",
            self.nonnegative.passed,
            self.nonnegative.measured,
            self.row_sums.passed,
            self.row_sums.measured,
            self.support.passed,
            self.support.measured,
            self.min_weight.passed,
            self.min_weight.measured,
            self.trusted_columns.passed,
            self.trusted_columns.measured,
            self.residual.passed,
            self.residual.measured,
            self.lambda_range.passed,
            self.lambda_range.measured,
        )
    }
}

pub fn check_transition_properties(
    record: &TransitionRecord,
    topology: &NetworkTopology,
    subgraph: &GoodSubgraph,
    alpha: f64,
) -> PropertyReport {
    let w = &record.matrix;
    let n = w.nrows();
    let m_t = topology.trusted_count().min(n);

    let min_entry = w.iter().copied().fold(f64::INFINITY, f64::min);
    let row_slack = w
        .row_iter()
        .map(|r| (r.sum() - 1.0).abs())
        .fold(0.0, f64::max);

    let mut mismatches = 0usize;
    for r in 0..n {
        for c in 0..n {
            let expected =
                r == c || subgraph.contains_arc(AgentId::from_index(c), AgentId::from_index(r));
            if (w[(r, c)] != 0.0) != expected {
                mismatches += 1;
            }
        }
    }

    let min_nonzero = w
        .iter()
        .copied()
        .filter(|v| *v != 0.0)
        .fold(f64::INFINITY, f64::min);

    let block = w.view((0, 0), (m_t, m_t));
    let column_slack = block
        .column_iter()
        .map(|c| (c.sum() - 1.0).abs())
        .fold(0.0, f64::max);

    let lambda_excess = record
        .lambdas
        .iter()
        .map(|l| (-l).max(l - 1.0).max(0.0))
        .fold(0.0, f64::max);

    PropertyReport {
        t: record.t,
        nonnegative: PropertyCheck::new(min_entry >= 0.0, min_entry),
        row_sums: PropertyCheck::new(row_slack <= ALGEBRAIC_TOL, row_slack),
        support: PropertyCheck::new(mismatches == 0, mismatches as f64),
        min_weight: PropertyCheck::new(min_nonzero >= alpha - ALGEBRAIC_TOL, min_nonzero),
        trusted_columns: PropertyCheck::new(column_slack <= ALGEBRAIC_TOL, column_slack),
        residual: PropertyCheck::new(record.residual <= ACCUMULATED_TOL, record.residual),
        lambda_range: PropertyCheck::new(lambda_excess == 0.0, lambda_excess),
    }
}

/// Reconstructs and checks every round of a trace.
pub fn verify_transitions(
    trace: &SimulationTrace,
) -> Result<Vec<(TransitionRecord, PropertyReport)>, AnalysisError> {
    let topology = &trace.topology;
    let subgraph = good_subgraph(topology)?;
    let alpha = alpha_lower_bound(topology);
    trace
        .rounds
        .iter()
        .map(|record| {
            let record_t = record.t;
            let w = reconstruct_transition(
                record,
                topology,
                trace.states_at(record_t),
                trace.states_at(record_t + 1),
            )?;
            let report = check_transition_properties(&w, topology, &subgraph, alpha);
            Ok((w, report))
        })
        .collect()
}

fn check_alpha(alpha: f64) -> Result<(), AnalysisError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(AnalysisError::InvalidArgument(format!(
            "alpha must lie in (0, 1], got {alpha}"
        )))
    }
}

/// `alpha^(N(N+1)/2 - 1)`.
pub fn eta(n: usize, alpha: f64) -> f64 {
    let exponent = (n * (n + 1) / 2) as f64 - 1.0;
    alpha.powf(exponent)
}

/// `theta (N-1) (1 + 1/eta)`, the limit of the spread envelope.
pub fn omega_limit(n: usize, theta: f64, alpha: f64) -> f64 {
    if n <= 1 || theta == 0.0 {
        return 0.0;
    }
    theta * (n as f64 - 1.0) * (1.0 + 1.0 / eta(n, alpha))
}

/// Asymptotic tracking bound `omega_inf + |xbar_T(1) - rbar_T(0)|`.
pub fn epsilon_bound(
    n: usize,
    theta: f64,
    alpha: f64,
    xbar_t1: f64,
    rbar_t0: f64,
) -> Result<f64, AnalysisError> {
    if n == 0 {
        return Err(AnalysisError::InvalidArgument(
            "N must be at least 1".into(),
        ));
    }
    if theta.is_nan() || theta < 0.0 {
        return Err(AnalysisError::InvalidArgument(format!(
            "theta must be nonnegative, got {theta}"
        )));
    }
    check_alpha(alpha)?;
    Ok(omega_limit(n, theta, alpha) + (xbar_t1 - rbar_t0).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeValue {
    pub value: f64,
    /// Set for a single good agent, where the envelope is not defined.
    pub degenerate: bool,
}

/// Spread envelope
/// `(1-eta)^(t/(N-1) - 1) y(1) + theta (N-1) (1 + (1 - (1-eta)^t) / eta)`.
///
/// Evaluated through `ln_1p`/`exp_m1` so that `eta` far below machine
/// epsilon still yields the correct near-linear growth.
pub fn omega_envelope(
    t: Round,
    n: usize,
    theta: f64,
    alpha: f64,
    y1: f64,
) -> Result<EnvelopeValue, AnalysisError> {
    check_alpha(alpha)?;
    if t == 0 {
        return Err(AnalysisError::InvalidArgument(
            "envelope starts at t = 1".into(),
        ));
    }
    if n <= 1 {
        return Ok(EnvelopeValue {
            value: 0.0,
            degenerate: true,
        });
    }
    let eta = eta(n, alpha);
    let log_keep = (-eta).ln_1p();
    let nm1 = n as f64 - 1.0;
    let tf = t as f64;
    let power = tf / nm1 - 1.0;
    let decay = if y1 == 0.0 {
        0.0
    } else if power == 0.0 {
        y1
    } else {
        (power * log_keep).exp() * y1
    };
    let growth = if theta == 0.0 {
        0.0
    } else {
        let ratio = if eta == 0.0 {
            tf
        } else {
            -(tf * log_keep).exp_m1() / eta
        };
        theta * nm1 * (1.0 + ratio)
    };
    Ok(EnvelopeValue {
        value: decay + growth,
        degenerate: false,
    })
}

/// Per-round tracking metrics.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundMetrics {
    pub t: Round,
    /// `y(t)`.
    pub spread: f64,
    /// `e(t) = xbar_T(t) - rbar_T(t-1)`.
    pub offset: f64,
    /// `rbar_T(t-1)`.
    pub target: f64,
    /// `|x_i(t) - rbar_T(t-1)|` per good agent.
    pub tracking_errors: Vec<f64>,
}

impl RoundMetrics {
    pub fn max_tracking_error(&self) -> f64 {
        self.tracking_errors.iter().copied().fold(0.0, f64::max)
    }
}

pub fn trace_metrics(trace: &SimulationTrace) -> Vec<RoundMetrics> {
    (1..=trace.horizon)
        .map(|t| {
            let target = trace.trusted_reference_mean(t - 1);
            RoundMetrics {
                t,
                spread: trace.spread(t),
                offset: trace.trusted_state_mean(t) - target,
                target,
                tracking_errors: trace
                    .states_at(t)
                    .iter()
                    .map(|x| (x - target).abs())
                    .collect(),
            }
        })
        .collect()
}

/// First round counted as steady state for a run of `horizon` samples.
pub fn steady_state_start(horizon: Round) -> Round {
    (horizon / 5).max(1) + 1
}

/// Bound evaluation for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport {
    pub n: usize,
    pub horizon: Round,
    pub theta: f64,
    pub alpha: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub omega_infinity: f64,
    /// Conservation constant `e(1)`.
    pub e1: f64,
    pub y1: f64,
    /// `omega(t)` for `t = 1..=horizon`.
    pub omega: Vec<f64>,
    pub degenerate: bool,
    pub steady_state_start: Round,
    pub max_steady_tracking_error: f64,
    pub envelope_violations: usize,
    /// `max_t |e(t) - e(1)|`.
    pub max_offset_drift: f64,
}

impl BoundReport {
    /// `key=value` lines.
    pub fn to_key_values(&self) -> String {
        let lines = [
            ("n", self.n.to_string()),
            ("horizon", self.horizon.to_string()),
            ("theta", self.theta.to_string()),
            ("alpha", self.alpha.to_string()),
            ("eta", self.eta.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("omega_inf", self.omega_infinity.to_string()),
            ("e1", self.e1.to_string()),
            ("y1", self.y1.to_string()),
            ("degenerate", self.degenerate.to_string()),
            ("steady_state_start", self.steady_state_start.to_string()),
            (
                "max_steady_tracking_error",
                self.max_steady_tracking_error.to_string(),
            ),
            ("envelope_violations", self.envelope_violations.to_string()),
            ("max_offset_drift", self.max_offset_drift.to_string()),
        ];
        lines.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
    }
}

pub fn bounds_report(
    config: &SimulationConfig,
    trace: &SimulationTrace,
) -> Result<BoundReport, AnalysisError> {
    let n = trace.topology.good_count();
    let theta = theta_estimate(&config.signals, trace.horizon)?;
    let alpha = alpha_lower_bound(&trace.topology);
    let metrics = trace_metrics(trace);
    let e1 = metrics[0].offset;
    let y1 = metrics[0].spread;
    let epsilon = epsilon_bound(
        n,
        theta,
        alpha,
        trace.trusted_state_mean(1),
        trace.trusted_reference_mean(0),
    )?;
    let mut omega = Vec::with_capacity(metrics.len());
    let mut degenerate = false;
    let mut violations = 0;
    for m in &metrics {
        let env = omega_envelope(m.t, n, theta, alpha, y1)?;
        degenerate |= env.degenerate;
        if !env.degenerate && m.spread > env.value + ACCUMULATED_TOL {
            violations += 1;
        }
        omega.push(env.value);
    }
    let start = steady_state_start(trace.horizon);
    let max_steady = metrics
        .iter()
        .filter(|m| m.t >= start)
        .map(RoundMetrics::max_tracking_error)
        .fold(0.0, f64::max);
    let drift = metrics
        .iter()
        .map(|m| (m.offset - e1).abs())
        .fold(0.0, f64::max);
    Ok(BoundReport {
        n,
        horizon: trace.horizon,
        theta,
        alpha,
        eta: eta(n, alpha),
        epsilon,
        omega_infinity: omega_limit(n, theta, alpha),
        e1,
        y1,
        omega,
        degenerate,
        steady_state_start: start,
        max_steady_tracking_error: max_steady,
        envelope_violations: violations,
        max_offset_drift: drift,
    })
}
