//! TOML experiment files. Every table rejects unknown keys; units are
//! spelled out in key names where a quantity has one.

use std::fs;
use std::path::{Path, PathBuf};

use byzest_core::adversary::PullTarget;
use byzest_core::{
    AdversarySpec, Error, InitSpec, NoiseSpec, ObservationSpec, SimulationConfig, ThetaSpec, Topology,
    TopologySpec,
};
use serde::{Deserialize, Serialize};

/// `(key, example value, description)` for every accepted key. Printed by
/// `--help` and checked against the parser by the schema tests.
pub const CONFIG_KEYS: &[(&str, &str, &str)] = &[
    ("seed", "7", "master seed; --seed overrides it (default 0)"),
    ("network.phi", "30", "number of good agents"),
    ("network.d", "50", "dimension of the unknown parameter"),
    ("network.b", "6", "fault budget, also the trimming parameter"),
    ("network.fault_ids", "[30, 31]", "0-based ids of faulty nodes (default none)"),
    ("network.topology", "\"complete\"", "\"complete\" or \"graph\""),
    ("network.graph_file", "\"net.txt\"", "edge-list file for topology = \"graph\", relative to this file"),
    ("observation.kind", "\"selection\"", "\"selection\", \"identity\", \"zero\" or \"explicit\""),
    ("observation.rows", "20", "rows per observation matrix (selection, zero, explicit)"),
    ("observation.multiplicity", "7", "agents observing each coordinate (selection)"),
    ("observation.coords", "[[0], [1]]", "coordinates observed by each good agent, ascending id (explicit)"),
    ("noise.kind", "\"uniform_box\"", "\"zero\", \"uniform_box\" or \"truncated_gaussian\""),
    ("noise.bound_C", "0.05", "almost-sure bound on the noise norm"),
    ("noise.sigma", "0.02", "per-component standard deviation (truncated_gaussian)"),
    ("theta.kind", "\"uniform\"", "\"uniform\" or \"fixed\""),
    ("theta.radius", "1.0", "components uniform in [-radius, radius] (uniform)"),
    ("theta.values", "[0.5, -0.5]", "the true parameter (fixed)"),
    ("init.kind", "\"zero\"", "\"zero\" or \"random\" initial estimates"),
    ("init.radius", "1.0", "l-infinity radius for random initial estimates"),
    ("adversary.kind", "\"gaussian\"", "\"none\", \"gaussian\", \"extreme\" or \"pull_toward\""),
    ("adversary.sigma", "3.0", "standard deviation of each message component (gaussian)"),
    ("adversary.margin", "100.0", "distance beyond the good range (extreme)"),
    ("adversary.directions", "[1, -1]", "+1 or -1 per coordinate (extreme; default alternating)"),
    ("adversary.target", "\"theta_star\"", "\"theta_star\" or \"fixed\" (pull_toward)"),
    ("adversary.target_values", "[0.0, 0.0]", "pull target for target = \"fixed\""),
    ("run.rounds", "500", "number of rounds T"),
    ("run.epsilon", "0.0", "slack term of the logged error envelope"),
    ("run.per_agent_every_rounds", "0", "per-agent error columns every N rounds (0 = off)"),
    ("run.verify", "false", "check every aggregate against the good values"),
    ("output.dir", "\"out\"", "directory for trace CSVs; --out overrides it"),
];

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub seed: Option<u64>,
    pub network: RawNetwork,
    pub observation: RawObservation,
    #[serde(default)]
    pub noise: Option<RawNoise>,
    #[serde(default)]
    pub theta: Option<RawTheta>,
    #[serde(default)]
    pub init: Option<RawInit>,
    #[serde(default)]
    pub adversary: Option<RawAdversary>,
    pub run: RawRun,
    #[serde(default)]
    pub output: Option<RawOutput>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawNetwork {
    pub phi: usize,
    pub d: usize,
    pub b: usize,
    pub fault_ids: Option<Vec<usize>>,
    pub topology: String,
    pub graph_file: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawObservation {
    pub kind: String,
    pub rows: Option<usize>,
    pub multiplicity: Option<usize>,
    pub coords: Option<Vec<Vec<usize>>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawNoise {
    pub kind: String,
    #[serde(rename = "bound_C")]
    pub bound_c: Option<f64>,
    pub sigma: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawTheta {
    pub kind: String,
    pub radius: Option<f64>,
    pub values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawInit {
    pub kind: String,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawAdversary {
    pub kind: String,
    pub sigma: Option<f64>,
    pub margin: Option<f64>,
    pub directions: Option<Vec<f64>>,
    pub target: Option<String>,
    pub target_values: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawRun {
    pub rounds: u64,
    pub epsilon: Option<f64>,
    pub per_agent_every_rounds: Option<u64>,
    pub verify: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub dir: Option<String>,
}

/// A parsed experiment file.
#[derive(Debug, Clone, PartialEq)]
pub struct Experiment {
    pub sim: SimulationConfig,
    pub output_dir: Option<PathBuf>,
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn need<T>(value: Option<T>, key: &str, when: &str) -> Result<T, Error> {
    value.ok_or_else(|| invalid(format!("`{key}` is required when {when}")))
}

impl RawConfig {
    pub fn parse(text: &str) -> Result<Self, Error> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    /// Converts to a simulation config; `base_dir` anchors relative paths.
    pub fn into_experiment(self, base_dir: &Path) -> Result<Experiment, Error> {
        let net = self.network;
        let topology = match net.topology.as_str() {
            "complete" => {
                if net.graph_file.is_some() {
                    return Err(invalid("`network.graph_file` only applies to topology = \"graph\""));
                }
                TopologySpec::Complete
            }
            "graph" => {
                let file = need(net.graph_file, "network.graph_file", "topology = \"graph\"")?;
                let path = base_dir.join(file);
                let text = fs::read_to_string(&path)
                    .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
                TopologySpec::Graph(Topology::parse(&text)?)
            }
            other => return Err(invalid(format!("unknown network.topology {other:?}"))),
        };

        let obs = self.observation;
        let observation = match obs.kind.as_str() {
            "selection" => ObservationSpec::Selection {
                rows: need(obs.rows, "observation.rows", "kind = \"selection\"")?,
                multiplicity: need(obs.multiplicity, "observation.multiplicity", "kind = \"selection\"")?,
            },
            "identity" => ObservationSpec::Identity,
            "zero" => ObservationSpec::Zero { rows: obs.rows.unwrap_or(1) },
            "explicit" => ObservationSpec::Explicit {
                rows: need(obs.rows, "observation.rows", "kind = \"explicit\"")?,
                coords: need(obs.coords, "observation.coords", "kind = \"explicit\"")?,
            },
            other => return Err(invalid(format!("unknown observation.kind {other:?}"))),
        };

        let noise = match self.noise {
            None => NoiseSpec::Zero,
            Some(n) => match n.kind.as_str() {
                "zero" => NoiseSpec::Zero,
                "uniform_box" => {
                    NoiseSpec::UniformBox { bound: need(n.bound_c, "noise.bound_C", "kind = \"uniform_box\"")? }
                }
                "truncated_gaussian" => NoiseSpec::TruncatedGaussian {
                    sigma: need(n.sigma, "noise.sigma", "kind = \"truncated_gaussian\"")?,
                    bound: need(n.bound_c, "noise.bound_C", "kind = \"truncated_gaussian\"")?,
                },
                other => return Err(invalid(format!("unknown noise.kind {other:?}"))),
            },
        };

        let theta = match self.theta {
            None => ThetaSpec::Uniform { radius: 1.0 },
            Some(t) => match t.kind.as_str() {
                "uniform" => ThetaSpec::Uniform { radius: t.radius.unwrap_or(1.0) },
                "fixed" => ThetaSpec::Fixed(need(t.values, "theta.values", "kind = \"fixed\"")?),
                other => return Err(invalid(format!("unknown theta.kind {other:?}"))),
            },
        };

        let init = match self.init {
            None => InitSpec::Zero,
            Some(i) => match i.kind.as_str() {
                "zero" => InitSpec::Zero,
                "random" => InitSpec::Random { radius: need(i.radius, "init.radius", "kind = \"random\"")? },
                other => return Err(invalid(format!("unknown init.kind {other:?}"))),
            },
        };

        let adversary = match self.adversary {
            None => AdversarySpec::None,
            Some(a) => match a.kind.as_str() {
                "none" => AdversarySpec::None,
                "gaussian" => AdversarySpec::Gaussian { sigma: need(a.sigma, "adversary.sigma", "kind = \"gaussian\"")? },
                "extreme" => AdversarySpec::Extreme {
                    margin: a.margin.unwrap_or(100.0),
                    directions: a.directions,
                },
                "pull_toward" => {
                    let target = match a.target.as_deref().unwrap_or("theta_star") {
                        "theta_star" => PullTarget::ThetaStar,
                        "fixed" => PullTarget::Fixed(need(
                            a.target_values,
                            "adversary.target_values",
                            "target = \"fixed\"",
                        )?),
                        other => return Err(invalid(format!("unknown adversary.target {other:?}"))),
                    };
                    AdversarySpec::PullToward { target }
                }
                other => return Err(invalid(format!("unknown adversary.kind {other:?}"))),
            },
        };

        let sim = SimulationConfig {
            d: net.d,
            phi: net.phi,
            fault_ids: net.fault_ids.unwrap_or_default(),
            b: net.b,
            rounds: self.run.rounds,
            topology,
            observation,
            noise,
            theta,
            adversary,
            init,
            seed: self.seed.unwrap_or(0),
            epsilon: self.run.epsilon.unwrap_or(0.0),
            per_agent_every: self.run.per_agent_every_rounds.unwrap_or(0),
            verify: self.run.verify.unwrap_or(false),
        };
        sim.validate()?;
        let output_dir = self.output.and_then(|o| o.dir).map(|d| base_dir.join(d));
        Ok(Experiment { sim, output_dir })
    }
}

/// Reads, parses and validates an experiment file.
pub fn load(path: &Path) -> Result<Experiment, Error> {
    let text = fs::read_to_string(path).map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or_else(|| Path::new("."));
    RawConfig::parse(&text)?.into_experiment(base)
}

/// The key table as aligned text, for `--help`.
pub fn keys_help() -> String {
    let width = CONFIG_KEYS.iter().map(|(k, _, _)| k.len()).max().unwrap_or(0);
    let mut out = String::from("Config keys (TOML; unknown keys are rejected):\n");
    for (key, example, doc) in CONFIG_KEYS {
        out.push_str(&format!("  {key:<width$}  {doc} [e.g. {example}]\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    /// Every documented key with its example value, grouped into tables.
    fn documented_toml() -> String {
        let mut top = String::new();
        let mut tables: Vec<(String, String)> = Vec::new();
        for (key, example, _) in CONFIG_KEYS {
            match key.split_once('.') {
                None => top.push_str(&format!("{key} = {example}\n")),
                Some((table, field)) => {
                    let line = format!("{field} = {example}\n");
                    match tables.iter_mut().find(|(t, _)| t == table) {
                        Some((_, body)) => body.push_str(&line),
                        None => tables.push((table.to_string(), line)),
                    }
                }
            }
        }
        for (table, body) in tables {
            top.push_str(&format!("[{table}]\n{body}"));
        }
        top
    }

    fn keys_of(value: &toml::Value, prefix: &str, out: &mut BTreeSet<String>) {
        if let toml::Value::Table(t) = value {
            for (k, v) in t {
                let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                if v.is_table() {
                    keys_of(v, &key, out);
                } else {
                    out.insert(key);
                }
            }
        }
    }

    /// Built with full struct literals so a new field fails to compile here
    /// until it is given a value, and then must appear in the docs.
    fn every_field_set() -> RawConfig {
        RawConfig {
            seed: Some(1),
            network: RawNetwork {
                phi: 1,
                d: 1,
                b: 0,
                fault_ids: Some(vec![]),
                topology: "complete".into(),
                graph_file: Some("g".into()),
            },
            observation: RawObservation {
                kind: "identity".into(),
                rows: Some(1),
                multiplicity: Some(1),
                coords: Some(vec![vec![0]]),
            },
            noise: Some(RawNoise { kind: "zero".into(), bound_c: Some(1.0), sigma: Some(1.0) }),
            theta: Some(RawTheta { kind: "uniform".into(), radius: Some(1.0), values: Some(vec![0.0]) }),
            init: Some(RawInit { kind: "zero".into(), radius: Some(1.0) }),
            adversary: Some(RawAdversary {
                kind: "none".into(),
                sigma: Some(1.0),
                margin: Some(1.0),
                directions: Some(vec![1.0]),
                target: Some("theta_star".into()),
                target_values: Some(vec![0.0]),
            }),
            run: RawRun { rounds: 1, epsilon: Some(0.0), per_agent_every_rounds: Some(0), verify: Some(false) },
            output: Some(RawOutput { dir: Some("o".into()) }),
        }
    }

    #[test]
    fn documented_keys_all_parse() {
        RawConfig::parse(&documented_toml()).unwrap();
    }

    #[test]
    fn parser_fields_are_exactly_the_documented_keys() {
        let value = toml::Value::try_from(every_field_set()).unwrap();
        let mut parsed = BTreeSet::new();
        keys_of(&value, "", &mut parsed);
        let documented: BTreeSet<String> = CONFIG_KEYS.iter().map(|(k, _, _)| k.to_string()).collect();
        assert_eq!(parsed, documented);
    }

    #[test]
    fn unknown_keys_rejected() {
        let text = documented_toml().replace("[run]\n", "[run]\nbogus = 1\n");
        assert!(matches!(RawConfig::parse(&text), Err(Error::InvalidConfig(_))));
        let text = format!("extra = 1\n{}", documented_toml());
        assert!(RawConfig::parse(&text).is_err());
    }

    #[test]
    fn minimal_file_uses_defaults() {
        let text = r#"
            [network]
            phi = 3
            d = 2
            b = 0
            topology = "complete"
            [observation]
            kind = "identity"
            [run]
            rounds = 4
        "#;
        let exp = RawConfig::parse(text).unwrap().into_experiment(Path::new(".")).unwrap();
        assert_eq!(exp.sim.noise, NoiseSpec::Zero);
        assert_eq!(exp.sim.adversary, AdversarySpec::None);
        assert_eq!(exp.sim.seed, 0);
        assert_eq!(exp.output_dir, None);
    }

    #[test]
    fn fault_budget_is_checked() {
        let text = r#"
            [network]
            phi = 5
            d = 2
            b = 1
            fault_ids = [5, 6]
            topology = "complete"
            [observation]
            kind = "identity"
            [adversary]
            kind = "gaussian"
            sigma = 3.0
            [run]
            rounds = 4
        "#;
        let err = RawConfig::parse(text).unwrap().into_experiment(Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("fault budget exceeded"));
    }

    #[test]
    fn missing_conditional_key_is_reported() {
        let text = r#"
            [network]
            phi = 3
            d = 2
            b = 0
            topology = "complete"
            [observation]
            kind = "selection"
            rows = 2
            [run]
            rounds = 4
        "#;
        let err = RawConfig::parse(text).unwrap().into_experiment(Path::new(".")).unwrap_err();
        assert!(err.to_string().contains("observation.multiplicity"));
    }
}
