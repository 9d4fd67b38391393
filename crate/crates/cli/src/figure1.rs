//! The canned dichotomy sweep: φ = 30 good agents on a complete graph,
//! d = 50, 20 observation rows each, θ* uniform in [−1, 1], Gaussian attack
//! with σ = 3, and |A| ∈ {4, …, 10} with b = |A|.
//!
//! Where the contraction condition is meant to hold (|A| ≤ 6) each
//! coordinate is observed by b + 1 agents. Above that, two observers per
//! coordinate: with b = |A| the trimmed mean already confines the attack,
//! so violating the condition needs a thin observation pattern, not just
//! more faulty agents.

use std::fmt::Write as _;

use byzest_core::engine::EnvelopeKind;
use byzest_core::{
    run_grid, AdversarySpec, NoiseSpec, ObservationSpec, Result, SimulationConfig, SimulationTrace, SweepParam,
    SweepPoint, ThetaSpec,
};

use crate::trace_io::fmt_f64;

pub const PHI: usize = 30;
pub const D: usize = 50;
pub const ROWS: usize = 20;
pub const ATTACK_SIGMA: f64 = 3.0;
pub const FAULT_COUNTS: [usize; 7] = [4, 5, 6, 7, 8, 9, 10];
pub const DEFAULT_ROUNDS: u64 = 500;
/// Largest |A| for which the sweep keeps the contraction condition.
pub const LAST_CONTRACTING: usize = 6;
pub const THIN_MULTIPLICITY: usize = 2;

pub fn multiplicity(faulty: usize) -> usize {
    if faulty <= LAST_CONTRACTING {
        faulty + 1
    } else {
        THIN_MULTIPLICITY
    }
}

/// Configuration for one (|A|, seed) point; `noise_bound = 0` is noiseless.
pub fn config(faulty: usize, seed: u64, rounds: u64, noise_bound: f64) -> SimulationConfig {
    let mut cfg = SimulationConfig::complete(D, PHI, rounds);
    cfg.fault_ids = (PHI..PHI + faulty).collect();
    cfg.b = faulty;
    cfg.observation = ObservationSpec::Selection { rows: ROWS, multiplicity: multiplicity(faulty) };
    cfg.noise = if noise_bound > 0.0 { NoiseSpec::UniformBox { bound: noise_bound } } else { NoiseSpec::Zero };
    cfg.theta = ThetaSpec::Uniform { radius: 1.0 };
    cfg.adversary = AdversarySpec::Gaussian { sigma: ATTACK_SIGMA };
    cfg.seed = seed;
    cfg
}

/// Seed-averaged curve for one |A|.
#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    pub faulty: usize,
    pub multiplicity: usize,
    pub contraction_holds: bool,
    pub runs: Vec<SimulationTrace>,
}

impl Curve {
    pub fn rounds(&self) -> usize {
        self.runs.iter().map(|t| t.records.len()).max().unwrap_or(0)
    }

    /// Mean over runs of `field` at round `t`; a run that halted earlier
    /// contributes its last value.
    pub fn mean_at(&self, t: usize, field: impl Fn(&byzest_core::engine::RoundRecord) -> f64) -> f64 {
        let total: f64 = self.runs.iter().map(|r| field(&r.records[t.min(r.records.len() - 1)])).sum();
        total / self.runs.len() as f64
    }

    pub fn diverged_by(&self, t: usize) -> usize {
        self.runs.iter().filter(|r| r.diverged && r.records.len() <= t + 1).count()
    }

    /// Per-run `Error(T) / Error(0)`.
    pub fn final_ratios(&self) -> Vec<f64> {
        self.runs.iter().map(|r| r.last().error_mean_l2 / r.initial().error_mean_l2).collect()
    }

    pub fn any_diverged(&self) -> bool {
        self.runs.iter().any(|r| r.diverged)
    }
}

/// Runs every (|A|, seed) pair, seeds `0..seeds`.
pub fn run_sweep(fault_counts: &[usize], seeds: u64, rounds: u64, noise_bound: f64) -> Result<Vec<Curve>> {
    let base = config(0, 0, rounds, noise_bound);
    let mut points = Vec::new();
    for &a in fault_counts {
        for s in 0..seeds {
            points.push(SweepPoint {
                label: format!("A{a}"),
                params: vec![
                    SweepParam::FaultCount(a),
                    SweepParam::B(a),
                    SweepParam::Multiplicity(multiplicity(a)),
                    SweepParam::Seed(s),
                ],
            });
        }
    }
    let mut traces = run_grid(&base, &points)?.into_iter();
    Ok(fault_counts
        .iter()
        .map(|&a| {
            let runs: Vec<SimulationTrace> = traces.by_ref().take(seeds as usize).collect();
            let contraction_holds = runs.iter().all(|r| matches!(r.envelope_kind, EnvelopeKind::CompleteGraph { .. }));
            Curve { faulty: a, multiplicity: multiplicity(a), contraction_holds, runs }
        })
        .collect())
}

/// Per-|A| CSV in the trace format, every column averaged over seeds and
/// `diverged` counting the runs halted by that round.
pub fn curve_csv(curve: &Curve) -> String {
    let mut out = String::from("round,error_mean_l2,error_max_linf,envelope,diverged\n");
    for t in 0..curve.rounds() {
        let _ = writeln!(
            out,
            "{t},{},{},{},{}",
            fmt_f64(curve.mean_at(t, |r| r.error_mean_l2)),
            fmt_f64(curve.mean_at(t, |r| r.error_max_linf)),
            fmt_f64(curve.mean_at(t, |r| r.envelope)),
            curve.diverged_by(t)
        );
    }
    out
}

/// Whitespace-separated columns `round A=4 A=5 …` of mean Error(t).
pub fn aggregate_dat(curves: &[Curve]) -> String {
    let mut out = String::from("# round");
    for c in curves {
        let _ = write!(out, " A={}", c.faulty);
    }
    out.push('\n');
    let rounds = curves.iter().map(Curve::rounds).max().unwrap_or(0);
    for t in 0..rounds {
        let _ = write!(out, "{t}");
        for c in curves {
            let _ = write!(out, " {}", fmt_f64(c.mean_at(t, |r| r.error_mean_l2)));
        }
        out.push('\n');
    }
    out
}

pub fn gnuplot_script(curves: &[Curve], dat_name: &str) -> String {
    let mut out = String::new();
    out.push_str("set terminal pngcairo size 900,600\n");
    out.push_str("set output 'figure1.png'\n");
    out.push_str("set logscale y\n");
    out.push_str("set xlabel 'round t'\n");
    out.push_str("set ylabel 'Error(t)'\n");
    out.push_str("set key outside right\n");
    let plots: Vec<String> = curves
        .iter()
        .enumerate()
        .map(|(i, c)| format!("'{dat_name}' using 1:{} with lines title '|A| = {}'", i + 2, c.faulty))
        .collect();
    let _ = writeln!(out, "plot {}", plots.join(", \\\n     "));
    out
}
