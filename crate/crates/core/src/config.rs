//! Run configuration files.
//!
//! A configuration is a TOML document with four sections:
//!
//! ```toml
//! [run]
//! horizon = 1000          # samples x(1..=horizon)
//! seed = 1                # seeds noisy adversaries that give no seed of their own
//! output_dir = "out"      # optional, relative to the working directory
//! emit_matrices = false
//! emit_plots = true
//! initial_states = { 4 = 2.5 }   # optional x_i(1); default r_i(0)
//!
//! [topology]
//! roles = ["trusted", "trusted", "ordinary", "adversarial"]
//! edges = [[1, 2], [2, 3], [3, 4]]
//!
//! [[signals]]             # one per good agent
//! agent = 1
//! kind = "sinusoid_ramp"  # or constant, ramp, tabulated, tabulated_file
//! offset = 0.5
//! slope = 0.1
//! amplitude = 0.2
//! angular_freq = 0.0628
//!
//! [[adversaries]]         # one per adversarial agent
//! agent = 4
//! kind = "per_neighbor"   # or broadcast, noisy_broadcast
//! targets = { 3 = { kind = "constant", value = 1e6 } }
//! ```
//!
//! `tabulated_file` reads one number per line from `path`, resolved relative
//! to the configuration file.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::adversary::AdversaryStrategy;
use crate::consensus::SimulationConfig;
use crate::graph::{validate_topology, AgentId, AgentRole, NetworkTopology, ValidationReport};
use crate::signals::{Round, SignalBank, SignalSpec};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid configuration:\n  - {}", .issues.join("\n  - "))]
    Invalid {
        issues: Vec<String>,
        /// Topology validation, when the topology itself could be built.
        report: Option<ValidationReport>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    run: RunSection,
    topology: TopologySection,
    #[serde(default)]
    signals: Vec<SignalEntry>,
    #[serde(default)]
    adversaries: Vec<AdversaryEntry>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RunSection {
    horizon: Round,
    #[serde(default)]
    seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    output_dir: Option<PathBuf>,
    #[serde(default)]
    emit_matrices: bool,
    #[serde(default = "default_true")]
    emit_plots: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    initial_states: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TopologySection {
    roles: Vec<AgentRole>,
    edges: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct SignalEntry {
    agent: usize,
    #[serde(flatten)]
    signal: SignalSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SignalSource {
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
    Tabulated {
        values: Vec<f64>,
    },
    TabulatedFile {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct AdversaryEntry {
    agent: usize,
    #[serde(flatten)]
    strategy: StrategySource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum StrategySource {
    Broadcast {
        series: SignalSource,
    },
    PerNeighbor {
        targets: BTreeMap<String, SignalSource>,
    },
    NoisyBroadcast {
        series: SignalSource,
        noise: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl From<&SignalSpec> for SignalSource {
    fn from(spec: &SignalSpec) -> Self {
        match spec.clone() {
            SignalSpec::SinusoidRamp {
                offset,
                slope,
                amplitude,
                angular_freq,
            } => SignalSource::SinusoidRamp {
                offset,
                slope,
                amplitude,
                angular_freq,
            },
            SignalSpec::Constant { value } => SignalSource::Constant { value },
            SignalSpec::Ramp { offset, slope } => SignalSource::Ramp { offset, slope },
            SignalSpec::Tabulated { values } => SignalSource::Tabulated { values },
        }
    }
}

/// Reads a single-column numeric series; blank lines and `#` comments are skipped.
pub fn read_series(path: &Path) -> Result<Vec<f64>, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    text.lines()
        .enumerate()
        .map(|(k, l)| (k, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
        .map(|(k, l)| {
            l.parse::<f64>()
                .map_err(|e| ConfigError::Parse(format!("{}:{}: {e}", path.display(), k + 1)))
        })
        .collect()
}

/// Noise seed for an adversary that does not carry its own.
fn derived_seed(run_seed: u64, agent: AgentId) -> u64 {
    run_seed
        .wrapping_mul(0x9E37_79B9_7F4A_7C15)
        .wrapping_add(agent.0 as u64)
}

/// A validated run configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub simulation: SimulationConfig,
    pub seed: u64,
    pub output_dir: Option<PathBuf>,
    pub emit_matrices: bool,
    pub emit_plots: bool,
    /// Noisy adversaries whose seed derives from `seed`.
    derived_seeds: BTreeSet<AgentId>,
}

impl RunConfig {
    pub fn new(simulation: SimulationConfig, seed: u64) -> Self {
        Self {
            simulation,
            seed,
            output_dir: None,
            emit_matrices: false,
            emit_plots: true,
            derived_seeds: BTreeSet::new(),
        }
    }

    pub fn topology(&self) -> &NetworkTopology {
        &self.simulation.topology
    }

    /// Replaces the run seed and re-derives the seeds that depend on it.
    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        for id in &self.derived_seeds {
            if let Some(AdversaryStrategy::NoisyBroadcast { seed: s, .. }) =
                self.simulation.adversaries.get_mut(id)
            {
                *s = derived_seed(seed, *id);
            }
        }
    }

    /// Changes the horizon, re-checking that tabulated data still covers it.
    pub fn set_horizon(&mut self, horizon: Round) -> Result<(), ConfigError> {
        self.simulation.horizon = horizon;
        let issues = self.simulation.problems();
        if issues.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid {
                issues,
                report: None,
            })
        }
    }

    /// Serialises back to the configuration format. Tabulated files are
    /// written inline.
    pub fn to_toml(&self) -> Result<String, ConfigError> {
        let topo = self.topology();
        let file = ConfigFile {
            run: RunSection {
                horizon: self.simulation.horizon,
                seed: self.seed,
                output_dir: self.output_dir.clone(),
                emit_matrices: self.emit_matrices,
                emit_plots: self.emit_plots,
                initial_states: self
                    .simulation
                    .initial_states
                    .iter()
                    .map(|(k, v)| (k.to_string(), *v))
                    .collect(),
            },
            topology: TopologySection {
                roles: topo.roles().to_vec(),
                edges: topo.edges().iter().map(|(a, b)| [a.0, b.0]).collect(),
            },
            signals: self
                .simulation
                .signals
                .iter()
                .map(|(id, spec)| SignalEntry {
                    agent: id.0,
                    signal: spec.into(),
                })
                .collect(),
            adversaries: self
                .simulation
                .adversaries
                .iter()
                .map(|(id, strategy)| AdversaryEntry {
                    agent: id.0,
                    strategy: match strategy {
                        AdversaryStrategy::Broadcast { series } => StrategySource::Broadcast {
                            series: series.into(),
                        },
                        AdversaryStrategy::PerNeighbor { targets } => StrategySource::PerNeighbor {
                            targets: targets
                                .iter()
                                .map(|(k, v)| (k.to_string(), v.into()))
                                .collect(),
                        },
                        AdversaryStrategy::NoisyBroadcast {
                            series,
                            noise,
                            seed,
                        } => StrategySource::NoisyBroadcast {
                            series: series.into(),
                            noise: *noise,
                            seed: (!self.derived_seeds.contains(id)).then_some(*seed),
                        },
                    },
                })
                .collect(),
        };
        toml::to_string(&file).map_err(|e| ConfigError::Parse(e.to_string()))
    }
}

struct Builder<'a> {
    base_dir: &'a Path,
    issues: Vec<String>,
}

impl Builder<'_> {
    fn signal(&mut self, source: SignalSource, what: &str) -> Option<SignalSpec> {
        Some(match source {
            SignalSource::SinusoidRamp {
                offset,
                slope,
                amplitude,
                angular_freq,
            } => SignalSpec::SinusoidRamp {
                offset,
                slope,
                amplitude,
                angular_freq,
            },
            SignalSource::Constant { value } => SignalSpec::Constant { value },
            SignalSource::Ramp { offset, slope } => SignalSpec::Ramp { offset, slope },
            SignalSource::Tabulated { values } => SignalSpec::Tabulated { values },
            SignalSource::TabulatedFile { path } => match read_series(&self.base_dir.join(&path)) {
                Ok(values) => SignalSpec::Tabulated { values },
                Err(e) => {
                    self.issues.push(format!("{what}: {e}"));
                    return None;
                }
            },
        })
    }

    fn agent_key(&mut self, key: &str, what: &str) -> Option<AgentId> {
        match key.trim().parse::<usize>() {
            Ok(k) if k > 0 => Some(AgentId(k)),
            _ => {
                self.issues
                    .push(format!("{what}: `{key}` is not an agent id"));
                None
            }
        }
    }
}

/// Parses and validates configuration text. Relative file references are
/// resolved against `base_dir`.
pub fn parse_config(text: &str, base_dir: &Path) -> Result<RunConfig, ConfigError> {
    let file: ConfigFile = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    let mut b = Builder {
        base_dir,
        issues: Vec::new(),
    };

    let topology = match NetworkTopology::new(
        file.topology.roles.clone(),
        file.topology.edges.iter().map(|[a, c]| (*a, *c)),
    ) {
        Ok(t) => t,
        Err(e) => {
            return Err(ConfigError::Invalid {
                issues: vec![format!("topology: {e}")],
                report: None,
            })
        }
    };

    let mut signals = SignalBank::new();
    for entry in file.signals {
        let id = AgentId(entry.agent);
        if signals.contains_key(&id) {
            b.issues
                .push(format!("agent {id} has more than one signal"));
            continue;
        }
        if let Some(spec) = b.signal(entry.signal, &format!("signal of agent {id}")) {
            signals.insert(id, spec);
        }
    }

    let mut adversaries = BTreeMap::new();
    let mut derived_seeds = BTreeSet::new();
    for entry in file.adversaries {
        let id = AgentId(entry.agent);
        if adversaries.contains_key(&id) {
            b.issues
                .push(format!("agent {id} has more than one strategy"));
            continue;
        }
        let what = format!("strategy of agent {id}");
        let strategy = match entry.strategy {
            StrategySource::Broadcast { series } => b
                .signal(series, &what)
                .map(|series| AdversaryStrategy::Broadcast { series }),
            StrategySource::PerNeighbor { targets } => {
                let mut map = BTreeMap::new();
                for (key, source) in targets {
                    if let (Some(target), Some(spec)) =
                        (b.agent_key(&key, &what), b.signal(source, &what))
                    {
                        map.insert(target, spec);
                    }
                }
                Some(AdversaryStrategy::PerNeighbor { targets: map })
            }
            StrategySource::NoisyBroadcast {
                series,
                noise,
                seed,
            } => {
                if !(noise >= 0.0 && noise.is_finite()) {
                    b.issues
                        .push(format!("{what}: noise must be finite and nonnegative"));
                }
                let seed = seed.unwrap_or_else(|| {
                    derived_seeds.insert(id);
                    derived_seed(file.run.seed, id)
                });
                b.signal(series, &what)
                    .map(|series| AdversaryStrategy::NoisyBroadcast {
                        series,
                        noise,
                        seed,
                    })
            }
        };
        if let Some(s) = strategy {
            adversaries.insert(id, s);
        }
    }

    let mut initial_states = BTreeMap::new();
    for (key, x) in &file.run.initial_states {
        if let Some(id) = b.agent_key(key, "initial_states") {
            initial_states.insert(id, *x);
        }
    }

    let simulation = SimulationConfig {
        topology,
        signals,
        adversaries,
        horizon: file.run.horizon,
        initial_states,
    };
    let mut issues = b.issues;
    issues.extend(simulation.problems());
    if !issues.is_empty() {
        let report = validate_topology(&simulation.topology);
        return Err(ConfigError::Invalid {
            issues,
            report: Some(report),
        });
    }

    Ok(RunConfig {
        simulation,
        seed: file.run.seed,
        output_dir: file.run.output_dir,
        emit_matrices: file.run.emit_matrices,
        emit_plots: file.run.emit_plots,
        derived_seeds,
    })
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    parse_config(&text, base)
}
