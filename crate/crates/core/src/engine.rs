//! Round-synchronous simulation loop: good agents step, the adversary
//! speaks, messages are routed along topology edges, agents aggregate.
//!
//! Every source of randomness is a named stream of the master seed, so a
//! trace is a pure function of its [`SimulationConfig`] regardless of how
//! many worker threads execute it.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;

use crate::adversary::{AdversarySpec, AdversaryView};
use crate::agents::AgentState;
use crate::aggregation::{bounded_weight_feasible, MessageSet, SortedColumns};
use crate::analysis::{compute_c0, compute_gamma, compute_rho, compute_rho0, ErrorEnvelope};
use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};
use crate::observation::{make_coordinate_selection_models, selection_matrix, NoiseSpec, ObservationModel};
use crate::rng::{SeedTree, Stream, StreamRng};
use crate::topology::{reduced_graph_count, Topology};

/// Any coordinate beyond this magnitude halts the run as diverged.
pub const DIVERGENCE_LIMIT: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub enum TopologySpec {
    /// All good and faulty agents fully connected; `n = φ + |A|`.
    Complete,
    Graph(Topology),
}

/// How the good agents' observation matrices are produced.
#[derive(Debug, Clone, PartialEq)]
pub enum ObservationSpec {
    /// Seeded coordinate selection: each coordinate seen by exactly
    /// `multiplicity` agents, `rows` rows per agent.
    Selection { rows: usize, multiplicity: usize },
    Identity,
    Zero { rows: usize },
    /// Per good agent (ascending id) the coordinates it observes.
    Explicit { rows: usize, coords: Vec<Vec<usize>> },
    /// Per good agent (ascending id) a full matrix.
    Custom(Vec<Matrix>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ThetaSpec {
    /// Components i.i.d. uniform in `[-radius, radius]`.
    Uniform { radius: f64 },
    Fixed(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq)]
pub enum InitSpec {
    Zero,
    /// Each good agent uniform in the ℓ∞ ball of this radius.
    Random { radius: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationConfig {
    pub d: usize,
    pub phi: usize,
    pub fault_ids: Vec<usize>,
    pub b: usize,
    pub rounds: u64,
    pub topology: TopologySpec,
    pub observation: ObservationSpec,
    pub noise: NoiseSpec,
    pub theta: ThetaSpec,
    pub adversary: AdversarySpec,
    pub init: InitSpec,
    pub seed: u64,
    /// Slack term of the logged envelope.
    pub epsilon: f64,
    /// Per-agent error columns every this many rounds; 0 disables them.
    pub per_agent_every: u64,
    /// Check every aggregate against the good values it was built from.
    pub verify: bool,
}

impl SimulationConfig {
    /// Noiseless, fault-free complete graph with identity observations.
    pub fn complete(d: usize, phi: usize, rounds: u64) -> Self {
        SimulationConfig {
            d,
            phi,
            fault_ids: Vec::new(),
            b: 0,
            rounds,
            topology: TopologySpec::Complete,
            observation: ObservationSpec::Identity,
            noise: NoiseSpec::Zero,
            theta: ThetaSpec::Uniform { radius: 1.0 },
            adversary: AdversarySpec::None,
            init: InitSpec::Zero,
            seed: 0,
            epsilon: 0.0,
            per_agent_every: 0,
            verify: false,
        }
    }

    pub fn node_count(&self) -> usize {
        match &self.topology {
            TopologySpec::Complete => self.phi + self.fault_ids.len(),
            TopologySpec::Graph(t) => t.node_count(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 || self.phi == 0 {
            return Err(Error::InvalidConfig("d and phi must be positive".into()));
        }
        if self.rounds == 0 {
            return Err(Error::InvalidConfig("rounds must be at least 1".into()));
        }
        if self.fault_ids.len() > self.b {
            return Err(Error::FaultBudgetExceeded { faulty: self.fault_ids.len(), b: self.b });
        }
        let n = self.node_count();
        let mut sorted = self.fault_ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != self.fault_ids.len() {
            return Err(Error::InvalidConfig("fault_ids contains duplicates".into()));
        }
        if let Some(&bad) = sorted.iter().find(|&&f| f >= n) {
            return Err(Error::InvalidConfig(format!("fault id {bad} outside 0..{n}")));
        }
        if self.b >= n {
            return Err(Error::InvalidConfig(format!("b = {} must be below n = {n}", self.b)));
        }
        if n - self.fault_ids.len() != self.phi {
            return Err(Error::InvalidConfig(format!(
                "phi = {} but the graph has {} good agents",
                self.phi,
                n - self.fault_ids.len()
            )));
        }
        if !(self.epsilon >= 0.0) || !self.epsilon.is_finite() {
            return Err(Error::InvalidConfig("epsilon must be a finite non-negative number".into()));
        }
        self.noise.validate()?;
        let needed = 2 * self.b + 1;
        match &self.topology {
            TopologySpec::Complete if n < needed => {
                return Err(Error::InvalidConfig(format!("complete graph on {n} nodes is below 2b+1 = {needed}")));
            }
            TopologySpec::Graph(t) => {
                for i in (0..n).filter(|i| !sorted.contains(i)) {
                    let have = t.in_neighbors(i).len() + 1;
                    if have < needed {
                        return Err(Error::InvalidConfig(format!(
                            "agent {i} hears {have} values including its own, below 2b+1 = {needed}"
                        )));
                    }
                }
            }
            _ => {}
        }
        match &self.theta {
            ThetaSpec::Uniform { radius } if !(*radius >= 0.0 && radius.is_finite()) => {
                return Err(Error::InvalidConfig("theta radius must be finite and non-negative".into()));
            }
            ThetaSpec::Fixed(v) if v.len() != self.d => {
                return Err(Error::DimensionMismatch { expected: self.d, actual: v.len() });
            }
            _ => {}
        }
        if let InitSpec::Random { radius } = self.init {
            if !(radius >= 0.0 && radius.is_finite()) {
                return Err(Error::InvalidConfig("init radius must be finite and non-negative".into()));
            }
        }
        Ok(())
    }

    /// Validates and materialises topology, θ* and observation models.
    pub fn prepare(&self) -> Result<Prepared> {
        self.validate()?;
        let seeds = SeedTree::new(self.seed);
        let n = self.node_count();
        let topology = match &self.topology {
            TopologySpec::Complete => Topology::complete(n),
            TopologySpec::Graph(t) => t.clone(),
        };
        let mut faulty = self.fault_ids.clone();
        faulty.sort_unstable();
        let good_ids: Vec<usize> = (0..n).filter(|i| faulty.binary_search(i).is_err()).collect();

        let theta_star = match &self.theta {
            ThetaSpec::Uniform { radius } => {
                let mut rng = seeds.stream(Stream::Theta);
                let r = *radius;
                Vector::from((0..self.d).map(|_| rng.random_range(-r..=r)).collect::<Vec<f64>>())
            }
            ThetaSpec::Fixed(v) => Vector::new(v.clone())?,
        };

        let matrices: Vec<Matrix> = match &self.observation {
            ObservationSpec::Selection { rows, multiplicity } => {
                let mut rng = seeds.stream(Stream::Observation);
                make_coordinate_selection_models(self.d, self.phi, *rows, *multiplicity, &NoiseSpec::Zero, &mut rng)?
                    .into_iter()
                    .map(|m| m.h().clone())
                    .collect()
            }
            ObservationSpec::Identity => vec![Matrix::identity(self.d); self.phi],
            ObservationSpec::Zero { rows } => vec![Matrix::zeros(*rows, self.d); self.phi],
            ObservationSpec::Explicit { rows, coords } => {
                if coords.len() != self.phi {
                    return Err(Error::InvalidConfig(format!(
                        "explicit observation lists {} agents, expected phi = {}",
                        coords.len(),
                        self.phi
                    )));
                }
                coords.iter().map(|c| selection_matrix(self.d, *rows, c)).collect::<Result<_>>()?
            }
            ObservationSpec::Custom(ms) => {
                if ms.len() != self.phi {
                    return Err(Error::InvalidConfig(format!(
                        "custom observation lists {} matrices, expected phi = {}",
                        ms.len(),
                        self.phi
                    )));
                }
                if let Some(m) = ms.iter().find(|m| m.cols() != self.d) {
                    return Err(Error::DimensionMismatch { expected: self.d, actual: m.cols() });
                }
                ms.clone()
            }
        };
        let models = good_ids
            .iter()
            .zip(matrices)
            .map(|(&id, h)| ObservationModel::new(id, h, self.noise.clone()))
            .collect::<Result<Vec<_>>>()?;
        Ok(Prepared { seeds, topology, faulty, good_ids, theta_star, models })
    }
}

/// Everything a run derives from its configuration before round 1.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub seeds: SeedTree,
    pub topology: Topology,
    /// Sorted fault set.
    pub faulty: Vec<usize>,
    /// Sorted good ids; `models[i]` belongs to `good_ids[i]`.
    pub good_ids: Vec<usize>,
    pub theta_star: Vector,
    pub models: Vec<ObservationModel>,
}

/// Which theoretical bound a trace logs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EnvelopeKind {
    CompleteGraph { rho: f64 },
    SourceComponent { per_round: f64 },
    /// The relevant assumption fails; the envelope column is NaN.
    Unavailable,
}

impl EnvelopeKind {
    fn rate(&self) -> Option<f64> {
        match *self {
            EnvelopeKind::CompleteGraph { rho } => Some(rho),
            EnvelopeKind::SourceComponent { per_round } => Some(per_round),
            EnvelopeKind::Unavailable => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: u64,
    /// `(1/φ) Σ_i ‖θ* − x_i(t)‖₂`
    pub error_mean_l2: f64,
    /// `max_i ‖θ* − x_i(t)‖_∞`
    pub error_max_linf: f64,
    pub envelope: f64,
    pub diverged: bool,
    /// `‖θ* − x_i(t)‖₂` per good agent, on cadence rounds only.
    pub per_agent: Option<Vec<f64>>,
    /// `max_j R_j(λ, t)` at the envelope's per-round rate; NaN without one.
    pub noise_series_max: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationTrace {
    pub label: String,
    pub seed: u64,
    pub good_ids: Vec<usize>,
    pub rho: f64,
    pub envelope_kind: EnvelopeKind,
    pub records: Vec<RoundRecord>,
    pub diverged: bool,
    /// Aggregates checked and found outside the admissible good-value set.
    pub verification_checks: u64,
    pub verification_failures: u64,
    pub adversary: &'static str,
}

impl SimulationTrace {
    pub fn initial(&self) -> &RoundRecord {
        &self.records[0]
    }

    pub fn last(&self) -> &RoundRecord {
        self.records.last().expect("trace has round 0")
    }

    pub fn has_per_agent_columns(&self) -> bool {
        self.records.iter().any(|r| r.per_agent.is_some())
    }
}

fn errors_of(theta: &Vector, agents: &[AgentState]) -> (f64, f64, Vec<f64>) {
    let mut l2 = Vec::with_capacity(agents.len());
    let mut linf: f64 = 0.0;
    for a in agents {
        let diff = theta - a.x();
        l2.push(diff.l2_norm());
        linf = linf.max(diff.linf_norm());
    }
    let mean = l2.iter().sum::<f64>() / l2.len() as f64;
    (mean, linf, l2)
}

fn envelope_for(cfg: &SimulationConfig, prep: &Prepared, init_err: f64) -> Result<(EnvelopeKind, Option<ErrorEnvelope>)> {
    let traces: Vec<f64> = prep.models.iter().map(|m| m.noise_covariance_trace()).collect();
    let c0 = compute_c0(&prep.models);
    let rho = compute_rho(&prep.models, cfg.b)?;
    if prep.topology.is_complete() {
        if rho < 1.0 {
            let env = ErrorEnvelope::complete_graph(rho, c0, &traces, init_err, cfg.phi, cfg.epsilon)?;
            return Ok((EnvelopeKind::CompleteGraph { rho }, Some(env)));
        }
        return Ok((EnvelopeKind::Unavailable, None));
    }
    let Ok(rho0) = compute_rho0(&prep.models) else {
        return Ok((EnvelopeKind::Unavailable, None));
    };
    let xi = reduced_graph_count(&prep.topology, &prep.faulty, cfg.b)?;
    let gamma = compute_gamma(rho0, xi, cfg.phi, cfg.b)?;
    let env = ErrorEnvelope::source_component(gamma, c0, &traces, init_err, cfg.phi, cfg.epsilon)?;
    Ok((EnvelopeKind::SourceComponent { per_round: gamma.per_round() }, Some(env)))
}

struct Checker<'a> {
    topology: &'a Topology,
    complete_within_budget: bool,
    phi: usize,
    b: usize,
    checks: u64,
    failures: u64,
}

impl Checker<'_> {
    /// Interval check on every graph; the capped-weight check additionally
    /// on complete graphs with `|A| ≤ b`.
    fn check(&mut self, receiver: usize, agg: &Vector, z: &BTreeMap<usize, Vector>) {
        let senders: Vec<&Vector> = self
            .topology
            .in_neighbors(receiver)
            .iter()
            .chain(std::iter::once(&receiver))
            .filter_map(|s| z.get(s))
            .collect();
        for (k, value) in agg.iter().enumerate() {
            self.checks += 1;
            let local: Vec<f64> = senders.iter().map(|v| v[k]).collect();
            let lo = local.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = local.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let slack = 1e-9 * lo.abs().max(hi.abs()).max(1.0);
            let mut ok = *value >= lo - slack && *value <= hi + slack;
            if ok && self.complete_within_budget {
                let all: Vec<f64> = z.values().map(|v| v[k]).collect();
                ok = bounded_weight_feasible(&all, *value, self.phi, self.b);
            }
            if !ok {
                self.failures += 1;
            }
        }
    }
}

/// Runs one simulation.
pub fn run(cfg: &SimulationConfig) -> Result<SimulationTrace> {
    run_labelled(cfg, String::new())
}

fn run_labelled(cfg: &SimulationConfig, label: String) -> Result<SimulationTrace> {
    let prep = cfg.prepare()?;
    let mut init_rng = prep.seeds.stream(Stream::Init);
    let mut agents = Vec::with_capacity(cfg.phi);
    for model in &prep.models {
        let x0 = match cfg.init {
            InitSpec::Zero => Vector::zeros(cfg.d),
            InitSpec::Random { radius } => {
                Vector::from((0..cfg.d).map(|_| init_rng.random_range(-radius..=radius)).collect::<Vec<f64>>())
            }
        };
        agents.push(AgentState::new(model.clone(), x0)?);
    }
    let mut noise_rngs: Vec<StreamRng> =
        prep.good_ids.iter().map(|&i| prep.seeds.stream(Stream::AgentNoise(i))).collect();
    let mut adversary = cfg.adversary.build(&prep.theta_star, prep.seeds.stream(Stream::Adversary))?;

    let (mean0, linf0, l2_0) = errors_of(&prep.theta_star, &agents);
    let (envelope_kind, envelope) = envelope_for(cfg, &prep, linf0)?;
    let rho = compute_rho(&prep.models, cfg.b)?;
    let lambda = envelope_kind.rate();
    let per_agent_due = |t: u64| cfg.per_agent_every > 0 && t % cfg.per_agent_every == 0;

    let mut records = vec![RoundRecord {
        round: 0,
        error_mean_l2: mean0,
        error_max_linf: linf0,
        envelope: envelope.as_ref().map_or(f64::NAN, |e| e.at(0)),
        diverged: false,
        per_agent: per_agent_due(0).then_some(l2_0),
        noise_series_max: if lambda.is_some() { 0.0 } else { f64::NAN },
    }];

    // Running noise averages w̄_j(t) and the recursion R_j(t) = ‖w̄_j(t)‖ + λ R_j(t−1).
    let mut noise_means: Vec<Vector> = prep.models.iter().map(|m| Vector::zeros(m.measurement_dim())).collect();
    let mut noise_series = vec![0.0; cfg.phi];

    let mut checker = Checker {
        topology: &prep.topology,
        complete_within_budget: prep.topology.is_complete() && prep.faulty.len() <= cfg.b,
        phi: cfg.phi,
        b: cfg.b,
        checks: 0,
        failures: 0,
    };
    let mut diverged = false;

    for t in 1..=cfg.rounds {
        let theta = &prep.theta_star;
        let steps = agents
            .par_iter_mut()
            .zip(noise_rngs.par_iter_mut())
            .map(|(a, rng)| a.local_step(theta, rng))
            .collect::<Result<Vec<_>>>()?;

        let mut z_map = BTreeMap::new();
        let mut x_map = BTreeMap::new();
        for ((a, step), (mean, series)) in
            agents.iter().zip(&steps).zip(noise_means.iter_mut().zip(noise_series.iter_mut()))
        {
            z_map.insert(a.id(), step.z.clone());
            x_map.insert(a.id(), a.x().clone());
            mean.axpy(1.0 / t as f64, &(&step.noise - &*mean))?;
            if let Some(l) = lambda {
                *series = mean.l2_norm() + l * *series;
            }
        }

        let view = AdversaryView {
            theta_star: theta,
            all_good_z: &z_map,
            all_good_x: &x_map,
            round: t,
            topology: &prep.topology,
            faulty: &prep.faulty,
            b: cfg.b,
        };
        let attack = adversary.messages(&view)?;
        let mut inbound: BTreeMap<usize, Vec<(usize, &Vector)>> = BTreeMap::new();
        for (&(from, to), v) in &attack {
            inbound.entry(to).or_default().push((from, v));
        }
        for &g in &prep.good_ids {
            for &f in prep.topology.in_neighbors(g) {
                if prep.faulty.binary_search(&f).is_ok() && !attack.contains_key(&(f, g)) {
                    return Err(Error::MissingMessage { from: f, to: g });
                }
            }
        }

        let topo = &prep.topology;
        let no_extra: Vec<(usize, &Vector)> = Vec::new();
        if topo.is_complete() {
            let mut all = MessageSet::with_capacity(cfg.d, z_map.len());
            for (i, z) in &z_map {
                all.push(*i, z.clone())?;
            }
            let shared = SortedColumns::new(&all);
            agents.par_iter_mut().try_for_each(|a| {
                let extra = inbound.get(&a.id()).unwrap_or(&no_extra);
                a.finalize_with_shared(&shared, extra, cfg.b)
            })?;
        } else {
            let msg_sets = agents
                .par_iter()
                .map(|a| {
                    let i = a.id();
                    let mut msgs = MessageSet::with_capacity(cfg.d, topo.in_neighbors(i).len() + 1);
                    msgs.push(i, z_map[&i].clone())?;
                    for &j in topo.in_neighbors(i) {
                        if let Some(z) = z_map.get(&j) {
                            msgs.push(j, z.clone())?;
                        }
                    }
                    for (from, v) in inbound.get(&i).unwrap_or(&no_extra) {
                        msgs.push(*from, (*v).clone())?;
                    }
                    Ok(msgs)
                })
                .collect::<Result<Vec<_>>>()?;
            agents
                .par_iter_mut()
                .zip(msg_sets.par_iter())
                .try_for_each(|(a, msgs)| a.finalize_round(msgs, cfg.b))?;
        }

        if cfg.verify {
            for a in &agents {
                checker.check(a.id(), a.x(), &z_map);
            }
        }

        diverged = agents.iter().any(|a| a.x().iter().any(|v| !(v.abs() <= DIVERGENCE_LIMIT)));
        let (mean, linf, l2) = errors_of(theta, &agents);
        records.push(RoundRecord {
            round: t,
            error_mean_l2: mean,
            error_max_linf: linf,
            envelope: envelope.as_ref().map_or(f64::NAN, |e| e.at(t)),
            diverged,
            per_agent: per_agent_due(t).then_some(l2),
            noise_series_max: if lambda.is_some() {
                noise_series.iter().copied().fold(0.0, f64::max)
            } else {
                f64::NAN
            },
        });
        if diverged {
            break;
        }
    }

    Ok(SimulationTrace {
        label,
        seed: cfg.seed,
        good_ids: prep.good_ids.clone(),
        rho,
        envelope_kind,
        records,
        diverged,
        verification_checks: checker.checks,
        verification_failures: checker.failures,
        adversary: adversary.name(),
    })
}

/// One adjustment applied to the base configuration of a sweep point.
#[derive(Debug, Clone, PartialEq)]
pub enum SweepParam {
    /// Complete graph only: the last `k` of `φ + k` nodes are faulty.
    FaultCount(usize),
    B(usize),
    Seed(u64),
    Multiplicity(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub label: String,
    pub params: Vec<SweepParam>,
}

impl SweepPoint {
    pub fn apply(&self, base: &SimulationConfig) -> Result<SimulationConfig> {
        let mut cfg = base.clone();
        for p in &self.params {
            match *p {
                SweepParam::FaultCount(k) => {
                    if cfg.topology != TopologySpec::Complete {
                        return Err(Error::InvalidConfig("fault-count sweeps need a complete graph".into()));
                    }
                    cfg.fault_ids = (cfg.phi..cfg.phi + k).collect();
                }
                SweepParam::B(b) => cfg.b = b,
                SweepParam::Seed(s) => cfg.seed = s,
                SweepParam::Multiplicity(m) => match &mut cfg.observation {
                    ObservationSpec::Selection { multiplicity, .. } => *multiplicity = m,
                    _ => return Err(Error::InvalidConfig("multiplicity sweeps need selection observations".into())),
                },
            }
        }
        Ok(cfg)
    }
}

/// Runs every sweep point (in parallel, results in sweep order); an empty
/// sweep runs the base configuration once.
pub fn run_grid(base: &SimulationConfig, sweep: &[SweepPoint]) -> Result<Vec<SimulationTrace>> {
    if sweep.is_empty() {
        return Ok(vec![run(base)?]);
    }
    let configs = sweep
        .iter()
        .map(|p| Ok((p.label.clone(), p.apply(base)?)))
        .collect::<Result<Vec<_>>>()?;
    configs.into_par_iter().map(|(label, cfg)| run_labelled(&cfg, label)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adversary::PullTarget;

    fn cfg_with(phi: usize, faulty: usize, b: usize, adversary: AdversarySpec) -> SimulationConfig {
        let mut cfg = SimulationConfig::complete(6, phi, 40);
        cfg.fault_ids = (phi..phi + faulty).collect();
        cfg.b = b;
        cfg.observation = ObservationSpec::Selection { rows: 6, multiplicity: b + 2 };
        cfg.adversary = adversary;
        cfg.seed = 11;
        cfg
    }

    #[test]
    fn single_identity_agent_is_exact_after_one_round() {
        let cfg = SimulationConfig::complete(3, 1, 1);
        let trace = run(&cfg).unwrap();
        assert_eq!(trace.records.len(), 2);
        assert!(trace.initial().error_mean_l2 > 0.0);
        assert_eq!(trace.records[1].error_mean_l2, 0.0);
    }

    #[test]
    fn noiseless_contraction_under_each_attack() {
        let attacks = [
            AdversarySpec::Gaussian { sigma: 3.0 },
            AdversarySpec::Extreme { margin: 100.0, directions: None },
            AdversarySpec::PullToward { target: PullTarget::Fixed(vec![5.0; 6]) },
        ];
        for attack in attacks {
            let mut cfg = cfg_with(8, 2, 2, attack);
            cfg.verify = true;
            let trace = run(&cfg).unwrap();
            assert!(trace.rho < 1.0);
            let e0 = trace.initial().error_max_linf;
            for r in &trace.records {
                assert!(r.error_max_linf <= trace.rho.powi(r.round as i32) * e0 + 1e-9, "{}", trace.adversary);
                assert!(r.error_max_linf <= r.envelope + 1e-9);
            }
            assert_eq!(trace.verification_failures, 0);
            assert!(trace.verification_checks > 0);
        }
    }

    #[test]
    fn validation_errors() {
        let cfg = cfg_with(5, 3, 2, AdversarySpec::Gaussian { sigma: 1.0 });
        assert_eq!(run(&cfg).unwrap_err(), Error::FaultBudgetExceeded { faulty: 3, b: 2 });
        let mut cfg = SimulationConfig::complete(2, 3, 0);
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        cfg.rounds = 1;
        cfg.b = 3;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        cfg.b = 2;
        assert!(matches!(cfg.validate(), Err(Error::InvalidConfig(_))));
        let mut sparse = SimulationConfig::complete(2, 4, 1);
        sparse.topology = TopologySpec::Graph(Topology::undirected(4, [(0, 1), (1, 2), (2, 3)]).unwrap());
        sparse.b = 1;
        assert!(matches!(sparse.validate(), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn faulty_agents_without_attack_is_an_error() {
        let cfg = cfg_with(5, 1, 1, AdversarySpec::None);
        assert!(matches!(run(&cfg), Err(Error::InvalidConfig(_))));
    }

    #[test]
    fn deterministic_across_thread_pools() {
        let mut cfg = cfg_with(7, 2, 2, AdversarySpec::Gaussian { sigma: 3.0 });
        cfg.noise = NoiseSpec::UniformBox { bound: 0.1 };
        cfg.per_agent_every = 5;
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap().install(|| run(&cfg).unwrap());
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap().install(|| run(&cfg).unwrap());
        assert_eq!(one, four);
        assert_eq!(one, run(&cfg).unwrap());
        assert!(one.records[5].per_agent.is_some());
        assert!(one.records[6].per_agent.is_none());
        assert!(one.records[10].noise_series_max > 0.0);
    }

    #[test]
    fn divergence_is_flagged() {
        // HᵀH = 4I: each local step maps the error e to −3e.
        let mut cfg = SimulationConfig::complete(2, 3, 200);
        cfg.observation = ObservationSpec::Custom(vec![Matrix::diagonal(&[2.0, 2.0]); 3]);
        let trace = run(&cfg).unwrap();
        assert!(trace.diverged);
        assert!(trace.last().diverged);
        assert!(trace.records.len() < 201);
        assert_eq!(trace.envelope_kind, EnvelopeKind::Unavailable);
        assert!(trace.last().envelope.is_nan());
    }

    #[test]
    fn grid_runs_each_point() {
        let base = cfg_with(8, 0, 0, AdversarySpec::Gaussian { sigma: 3.0 });
        assert_eq!(run_grid(&base, &[]).unwrap().len(), 1);
        let sweep: Vec<SweepPoint> = (1..=3)
            .map(|k| SweepPoint {
                label: format!("a{k}"),
                params: vec![SweepParam::FaultCount(k), SweepParam::B(k), SweepParam::Multiplicity(k + 2)],
            })
            .collect();
        let traces = run_grid(&base, &sweep).unwrap();
        assert_eq!(traces.len(), 3);
        assert_eq!(traces[2].label, "a3");
        assert_eq!(traces, run_grid(&base, &sweep).unwrap());
    }

    #[test]
    fn incomplete_graph_uses_source_component_envelope() {
        let ring = Topology::undirected(4, [(0, 1), (1, 2), (2, 3), (3, 0)]).unwrap();
        let mut cfg = SimulationConfig::complete(2, 4, 30);
        cfg.topology = TopologySpec::Graph(ring);
        let trace = run(&cfg).unwrap();
        assert!(matches!(trace.envelope_kind, EnvelopeKind::SourceComponent { .. }));
        assert!(trace.last().error_max_linf < 1e-12);
        for r in &trace.records {
            assert!(r.error_max_linf <= r.envelope + 1e-12);
        }
    }
}
