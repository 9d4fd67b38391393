//! Assumption checks and every closed-form rate and bound used to predict
//! how fast good agents converge.
//!
//! Notation used throughout: `φ` good agents, fault budget `b`, and for agent
//! `j` and coordinate `k` the contraction norm `‖(I − H_jᵀH_j) e_k‖₁`.

use std::collections::HashMap;
use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};
use crate::observation::ObservationModel;
use crate::topology::{
    enumerate_reduced_graphs, reduced_graph_count, sample_reduced_graph, source_components,
    DropMode, ReducedGraph, Topology,
};

/// Tolerance for "‖·‖₁ ≤ 1" with non-selection matrices.
const NORM_SLACK: f64 = 1e-12;

/// Tolerance and cap for the operator-norm power iteration.
pub const POWER_ITER_TOL: f64 = 1e-10;
pub const POWER_ITER_MAX: usize = 10_000;

fn dim_of(models: &[ObservationModel]) -> Result<usize> {
    let first = models.first().ok_or_else(|| Error::Domain("empty good set".into()))?;
    let d = first.dim();
    if let Some(m) = models.iter().find(|m| m.dim() != d) {
        return Err(Error::DimensionMismatch { expected: d, actual: m.dim() });
    }
    Ok(d)
}

fn check_phi_above_b(phi: usize, b: usize) -> Result<()> {
    if phi <= b {
        return Err(Error::Domain(format!("need more good agents ({phi}) than b = {b}")));
    }
    Ok(())
}

/// `norms[j][k] = ‖(I − H_jᵀH_j) e_k‖₁` for each model in order.
pub fn contraction_norms(models: &[ObservationModel]) -> Result<Vec<Vec<f64>>> {
    let d = dim_of(models)?;
    models
        .iter()
        .map(|m| (0..d).map(|k| m.contraction_column_norm(k)).collect())
        .collect()
}

/// Per coordinate, the averaged contraction norm `Σ_j norm_jk / (φ − b)`
/// must be strictly below one. `models` are the good agents'.
pub fn check_assumption_1(models: &[ObservationModel], b: usize) -> Result<bool> {
    let norms = contraction_norms(models)?;
    let phi = models.len();
    check_phi_above_b(phi, b)?;
    let d = norms[0].len();
    Ok((0..d).all(|k| {
        let total: f64 = norms.iter().map(|row| row[k]).sum();
        total < (phi - b) as f64
    }))
}

/// `ρ = max_k Σ_j norm_jk / (φ − b)`: the per-round contraction factor on
/// complete graphs.
pub fn compute_rho(models: &[ObservationModel], b: usize) -> Result<f64> {
    let norms = contraction_norms(models)?;
    let phi = models.len();
    check_phi_above_b(phi, b)?;
    let d = norms[0].len();
    Ok((0..d)
        .map(|k| norms.iter().map(|row| row[k]).sum::<f64>() / (phi - b) as f64)
        .fold(0.0, f64::max))
}

/// `ρ₀ = max_k max{norm_jk : norm_jk < 1}` over the good agents.
pub fn compute_rho0(models: &[ObservationModel]) -> Result<f64> {
    let norms = contraction_norms(models)?;
    let d = norms[0].len();
    let mut rho0: f64 = 0.0;
    for k in 0..d {
        let best = norms
            .iter()
            .map(|row| row[k])
            .filter(|&v| v < 1.0)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        rho0 = rho0.max(best.ok_or(Error::NoStrictObserver(k))?);
    }
    Ok(rho0)
}

/// `C₀ = max_i ‖H_i‖_op`.
pub fn compute_c0(models: &[ObservationModel]) -> f64 {
    models
        .iter()
        .map(|m| m.h().spectral_norm(POWER_ITER_TOL, POWER_ITER_MAX))
        .fold(0.0, f64::max)
}

/// The reduced-graph contraction rate `γ = 1 − (1 − ρ₀) / (2(φ − b))^{ξφ}`.
///
/// For any non-toy graph the subtracted term underflows; [`GammaRate`] keeps
/// the logarithm so envelopes can still be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaRate {
    pub gamma: f64,
    /// `ln γ`, computed without forming `γ` first.
    pub ln_gamma: f64,
    /// Rounds per contraction block, `ξφ`.
    pub block: f64,
}

impl GammaRate {
    /// Effective per-round factor `γ^{1/(ξφ)}`.
    pub fn per_round(&self) -> f64 {
        (self.ln_gamma / self.block).exp()
    }
}

pub fn compute_gamma(rho0: f64, xi: f64, phi: usize, b: usize) -> Result<GammaRate> {
    if !(0.0..1.0).contains(&rho0) {
        return Err(Error::Domain(format!("rho0 = {rho0} outside [0, 1)")));
    }
    if !(xi >= 1.0) || !xi.is_finite() {
        return Err(Error::Domain(format!("xi = {xi} must be a finite count ≥ 1")));
    }
    check_phi_above_b(phi, b)?;
    let block = xi * phi as f64;
    let ln_delta = (1.0 - rho0).ln() - block * (2.0 * (phi - b) as f64).ln();
    let delta = ln_delta.exp();
    let ln_gamma = (-delta).ln_1p();
    Ok(GammaRate { gamma: 1.0 - delta, ln_gamma, block })
}

/// `R(λ, t) = Σ_{m=0}^{t−1} λ^m ‖w̄(t − m)‖`, where `history[s − 1]` holds
/// the norm of the running noise average after `s` rounds.
pub fn cumulative_noise_series(history: &[f64], lambda: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} outside (0, 1)")));
    }
    let mut weight = 1.0;
    let mut total = 0.0;
    for norm in history.iter().rev() {
        total += weight * norm;
        weight *= lambda;
    }
    Ok(total)
}

/// High-probability bound on `R(λ, t)`: returns the drift term
/// `√tr(Σ) Σ_{m=1}^{t−1} λ^m / √(t − m)` and the tail probability
/// `exp(−ε²(1 − λ)² t / 8C²)` of exceeding drift + ε.
///
/// The drift sum starts at `m = 1` while `R` itself starts at `m = 0`.
pub fn concentration_bound(sigma_trace: f64, lambda: f64, t: u64, epsilon: f64, c: f64) -> Result<(f64, f64)> {
    if t == 0 {
        return Err(Error::Domain("t must be at least 1".into()));
    }
    if !(epsilon > 0.0) {
        return Err(Error::Domain(format!("epsilon = {epsilon} must be positive")));
    }
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::Domain(format!("lambda = {lambda} outside (0, 1)")));
    }
    if !(sigma_trace >= 0.0) || !(c >= 0.0) {
        return Err(Error::Domain("trace and noise bound must be non-negative".into()));
    }
    let mean_term = sigma_trace.sqrt() * discounted_root_sum(lambda.ln(), t);
    let tail = if c == 0.0 {
        0.0
    } else {
        (-(epsilon * epsilon) * (1.0 - lambda).powi(2) * t as f64 / (8.0 * c * c)).exp()
    };
    Ok((mean_term, tail))
}

/// `Σ_{m=1}^{t−1} λ^m / √(t − m)` given `ln λ` (−∞ allowed for λ = 0).
fn discounted_root_sum(ln_lambda: f64, t: u64) -> f64 {
    (1..t)
        .map(|m| (ln_lambda * m as f64).exp() / ((t - m) as f64).sqrt())
        .sum()
}

/// Finite-time upper bound on `max_i ‖x_i(t) − θ*‖_∞`:
/// `λᵗ·E₀ + C₀ (Σ_j √tr Σ_j) Σ_{m=1}^{t−1} λ^m/√(t−m) + φε`, where `λ` is
/// `ρ` on complete graphs and `γ^{1/(ξφ)}` on graphs with a unique source
/// component.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorEnvelope {
    ln_rate: f64,
    init_err: f64,
    noise_coeff: f64,
    slack: f64,
}

impl ErrorEnvelope {
    pub fn complete_graph(
        rho: f64,
        c0: f64,
        sigma_traces: &[f64],
        init_err: f64,
        phi: usize,
        epsilon: f64,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&rho) {
            return Err(Error::Domain(format!("rho = {rho} outside [0, 1)")));
        }
        Self::with_ln_rate(rho.ln(), c0, sigma_traces, init_err, phi, epsilon)
    }

    pub fn source_component(
        gamma: GammaRate,
        c0: f64,
        sigma_traces: &[f64],
        init_err: f64,
        phi: usize,
        epsilon: f64,
    ) -> Result<Self> {
        Self::with_ln_rate(gamma.ln_gamma / gamma.block, c0, sigma_traces, init_err, phi, epsilon)
    }

    fn with_ln_rate(
        ln_rate: f64,
        c0: f64,
        sigma_traces: &[f64],
        init_err: f64,
        phi: usize,
        epsilon: f64,
    ) -> Result<Self> {
        if !(init_err >= 0.0) || !(epsilon >= 0.0) || !(c0 >= 0.0) {
            return Err(Error::Domain("envelope inputs must be non-negative".into()));
        }
        if sigma_traces.iter().any(|t| !(*t >= 0.0)) {
            return Err(Error::Domain("noise traces must be non-negative".into()));
        }
        let noise_coeff = c0 * sigma_traces.iter().map(|t| t.sqrt()).sum::<f64>();
        Ok(ErrorEnvelope { ln_rate, init_err, noise_coeff, slack: phi as f64 * epsilon })
    }

    pub fn per_round_rate(&self) -> f64 {
        self.ln_rate.exp()
    }

    pub fn at(&self, t: u64) -> f64 {
        let contraction = if t == 0 { 1.0 } else { (self.ln_rate * t as f64).exp() };
        let noise = if self.noise_coeff == 0.0 {
            0.0
        } else {
            self.noise_coeff * discounted_root_sum(self.ln_rate, t)
        };
        contraction * self.init_err + noise + self.slack
    }
}

/// One-shot form of [`ErrorEnvelope::complete_graph`].
pub fn complete_graph_envelope(
    rho: f64,
    c0: f64,
    sigma_traces: &[f64],
    t: u64,
    init_err: f64,
    phi: usize,
    epsilon: f64,
) -> Result<f64> {
    Ok(ErrorEnvelope::complete_graph(rho, c0, sigma_traces, init_err, phi, epsilon)?.at(t))
}

/// Nodes that see at least `b + 1` strictly contracting good agents (self
/// included) for every coordinate.
fn well_informed_nodes(
    topo: &Topology,
    by_id: &HashMap<usize, &ObservationModel>,
    fault_set: &[usize],
    b: usize,
    d: usize,
) -> Result<Vec<bool>> {
    let n = topo.node_count();
    let mut strict = vec![vec![false; d]; n];
    for (&id, m) in by_id {
        for (k, s) in strict[id].iter_mut().enumerate() {
            *s = m.contraction_column_norm(k)? < 1.0;
        }
    }
    Ok((0..n)
        .map(|i| {
            if fault_set.contains(&i) {
                return false;
            }
            (0..d).all(|k| {
                let own = usize::from(strict[i][k]);
                let others = topo
                    .in_neighbors(i)
                    .iter()
                    .filter(|j| !fault_set.contains(j) && strict[**j][k])
                    .count();
                own + others > b
            })
        })
        .collect())
}

fn index_models<'a>(
    models: &'a [ObservationModel],
    topo: &Topology,
    fault_set: &[usize],
) -> Result<HashMap<usize, &'a ObservationModel>> {
    let by_id: HashMap<usize, &ObservationModel> = models.iter().map(|m| (m.agent_id(), m)).collect();
    for i in (0..topo.node_count()).filter(|i| !fault_set.contains(i)) {
        if !by_id.contains_key(&i) {
            return Err(Error::InvalidConfig(format!("no observation model for good agent {i}")));
        }
    }
    Ok(by_id)
}

/// How a reduced graph fares against the incomplete-graph conditions.
fn judge(g: &ReducedGraph, informed: &[bool]) -> Result<bool> {
    let report = source_components(g);
    match report.unique_source() {
        Some(source) => Ok(source.iter().any(|&i| informed[i])),
        None => Err(Error::IabcFailure { sources: report.source_components.len() }),
    }
}

fn column_norms_at_most_one(
    by_id: &HashMap<usize, &ObservationModel>,
    fault_set: &[usize],
    d: usize,
) -> Result<bool> {
    for (id, m) in by_id {
        if fault_set.contains(id) {
            continue;
        }
        for k in 0..d {
            if m.contraction_column_norm(k)? > 1.0 + NORM_SLACK {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Incomplete-graph condition: every good agent has all contraction norms
/// `≤ 1`, and for every listed fault set, every reduced graph's unique
/// source component contains a node with at least `b + 1` strictly
/// contracting good agents among its neighbours-or-self, for every
/// coordinate. `models` are keyed by `agent_id` and must cover every good node.
///
/// A reduced graph with several source components is reported as
/// [`Error::IabcFailure`]; an oversized enumeration as
/// [`Error::BudgetExceeded`].
pub fn check_assumption_2(
    models: &[ObservationModel],
    topo: &Topology,
    fault_sets: &[Vec<usize>],
    b: usize,
) -> Result<bool> {
    let d = dim_of(models)?;
    for fault_set in fault_sets {
        let by_id = index_models(models, topo, fault_set)?;
        if !column_norms_at_most_one(&by_id, fault_set, d)? {
            return Ok(false);
        }
        let informed = well_informed_nodes(topo, &by_id, fault_set, b, d)?;
        for g in enumerate_reduced_graphs(topo, fault_set, b)? {
            if !judge(&g, &informed)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// [`check_assumption_2`] over `samples` uniformly drawn reduced graphs per
/// fault set. A `true` here is evidence, not proof.
pub fn check_assumption_2_sampled<R: Rng + ?Sized>(
    models: &[ObservationModel],
    topo: &Topology,
    fault_sets: &[Vec<usize>],
    b: usize,
    samples: usize,
    rng: &mut R,
) -> Result<bool> {
    let d = dim_of(models)?;
    for fault_set in fault_sets {
        let by_id = index_models(models, topo, fault_set)?;
        if !column_norms_at_most_one(&by_id, fault_set, d)? {
            return Ok(false);
        }
        let informed = well_informed_nodes(topo, &by_id, fault_set, b, d)?;
        for _ in 0..samples {
            let g = sample_reduced_graph(topo, fault_set, b, DropMode::UpTo, rng)?;
            if !judge(&g, &informed)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// ξ, flagged when it is too large to be represented exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiCount {
    pub value: f64,
    pub exact: bool,
}

impl XiCount {
    pub fn new(value: f64) -> Self {
        XiCount { value, exact: value < 2f64.powi(53) }
    }
}

/// Outcome of the incomplete-graph check, with the reason when it is not
/// a clean yes/no.
#[derive(Debug, Clone, PartialEq)]
pub enum Verdict {
    Holds,
    Fails,
    /// Sampled check found no counterexample.
    HoldsOnSample { samples: usize },
    /// Some reduced graph has more than one source component.
    NotAchievable { sources: usize },
    Unknown(String),
}

impl Verdict {
    pub fn as_bool(&self) -> Option<bool> {
        match self {
            Verdict::Holds | Verdict::HoldsOnSample { .. } => Some(true),
            Verdict::Fails | Verdict::NotAchievable { .. } => Some(false),
            Verdict::Unknown(_) => None,
        }
    }
}

/// Every rate and verdict for one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RateReport {
    pub phi: usize,
    pub b: usize,
    pub rho: f64,
    pub rho0: Option<f64>,
    pub gamma: Option<GammaRate>,
    pub xi: XiCount,
    pub c0: f64,
    pub assumption1_ok: bool,
    pub assumption2: Verdict,
}

/// Reduced graphs drawn per fault set when exact enumeration is over budget.
pub const ASSUMPTION2_SAMPLES: usize = 2_000;

impl RateReport {
    /// Builds the report for the good agents' `models` (keyed by node id)
    /// on `topo` with the given actual fault set.
    pub fn compute<R: Rng + ?Sized>(
        models: &[ObservationModel],
        topo: &Topology,
        fault_set: &[usize],
        b: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let phi = models.len();
        let rho = compute_rho(models, b)?;
        let assumption1_ok = check_assumption_1(models, b)?;
        let rho0 = compute_rho0(models).ok();
        let xi = XiCount::new(reduced_graph_count(topo, fault_set, b)?);
        let gamma = match rho0 {
            Some(r) if r < 1.0 => Some(compute_gamma(r, xi.value, phi, b)?),
            _ => None,
        };
        let sets = [fault_set.to_vec()];
        let assumption2 = match check_assumption_2(models, topo, &sets, b) {
            Ok(true) => Verdict::Holds,
            Ok(false) => Verdict::Fails,
            Err(Error::IabcFailure { sources }) => Verdict::NotAchievable { sources },
            Err(Error::BudgetExceeded { .. }) => {
                match check_assumption_2_sampled(models, topo, &sets, b, ASSUMPTION2_SAMPLES, rng) {
                    Ok(true) => Verdict::HoldsOnSample { samples: ASSUMPTION2_SAMPLES },
                    Ok(false) => Verdict::Fails,
                    Err(Error::IabcFailure { sources }) => Verdict::NotAchievable { sources },
                    Err(e) => Verdict::Unknown(e.to_string()),
                }
            }
            Err(e) => Verdict::Unknown(e.to_string()),
        };
        Ok(RateReport {
            phi,
            b,
            rho,
            rho0,
            gamma,
            xi,
            c0: compute_c0(models),
            assumption1_ok,
            assumption2,
        })
    }
}

impl fmt::Display for RateReport {
    /// Flat `key=value` lines.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "phi={}", self.phi)?;
        writeln!(f, "b={}", self.b)?;
        writeln!(f, "rho={}", self.rho)?;
        match self.rho0 {
            Some(r) => writeln!(f, "rho0={r}")?,
            None => writeln!(f, "rho0=undefined")?,
        }
        if self.xi.exact {
            writeln!(f, "xi={}", self.xi.value)?;
        } else {
            writeln!(f, "xi=approx:{:e}", self.xi.value)?;
        }
        match self.gamma {
            Some(g) => {
                writeln!(f, "gamma={}", g.gamma)?;
                writeln!(f, "ln_gamma={:e}", g.ln_gamma)?;
                writeln!(f, "gamma_per_round={}", g.per_round())?;
            }
            None => writeln!(f, "gamma=undefined")?,
        }
        writeln!(f, "C0={}", self.c0)?;
        writeln!(f, "assumption1_ok={}", self.assumption1_ok)?;
        let (ok, note) = match &self.assumption2 {
            Verdict::Holds => ("true".to_string(), None),
            Verdict::Fails => ("false".to_string(), None),
            Verdict::HoldsOnSample { samples } => {
                ("true".to_string(), Some(format!("approximate: {samples} sampled reduced graphs")))
            }
            Verdict::NotAchievable { sources } => (
                "false".to_string(),
                Some(format!("consensus not achievable: reduced graph with {sources} source components")),
            ),
            Verdict::Unknown(why) => ("unknown".to_string(), Some(why.clone())),
        };
        writeln!(f, "assumption2_ok={ok}")?;
        if let Some(note) = note {
            writeln!(f, "assumption2_note={note}")?;
        }
        Ok(())
    }
}
