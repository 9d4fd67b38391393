//! Subcommand bodies. Each returns the text it wants printed; `main` maps
//! errors to exit codes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use byzest_core::rng::Stream;
use byzest_core::topology::{
    check_iabc_achievable, node_connectivity, source_component_census,
};
use byzest_core::{run, Error, RateReport, Topology};

use crate::config;
use crate::figure1;
use crate::trace_io::write_trace_file;

/// Reduced graphs the check-topology census will enumerate.
pub const CENSUS_BUDGET: u64 = 100_000;

#[derive(Debug)]
pub enum CliError {
    /// Bad input: exit code 2.
    Config(String),
    /// Failure while running: exit code 1.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Runtime(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Runtime(e.to_string())
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Creates `dir` and confirms it accepts files before any work starts.
fn ensure_writable(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))?;
    let probe = dir.join(".byzest-write-probe");
    fs::write(&probe, b"").map_err(|e| CliError::Config(format!("{} is not writable: {e}", dir.display())))?;
    fs::remove_file(&probe).map_err(|e| io_error(&probe, e))
}

pub fn with_jobs<T: Send>(jobs: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    match jobs {
        None => Ok(f()),
        Some(0) => Err(CliError::Config("--jobs must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|e| CliError::Runtime(e.to_string())),
    }
}

pub fn simulate(config_path: &Path, seed: Option<u64>, out: Option<PathBuf>, jobs: Option<usize>) -> Result<String, CliError> {
    let mut exp = config::load(config_path)?;
    if let Some(s) = seed {
        exp.sim.seed = s;
    }
    let dir = out.or(exp.output_dir).unwrap_or_else(|| PathBuf::from("."));
    ensure_writable(&dir)?;
    let trace = with_jobs(jobs, || run(&exp.sim))??;
    let path = write_trace_file(&trace, &dir).map_err(|e| io_error(&dir, e))?;
    let first = trace.initial();
    let last = trace.last();
    let mut s = String::new();
    let _ = writeln!(s, "trace={}", path.display());
    let _ = writeln!(s, "seed={}", trace.seed);
    let _ = writeln!(s, "adversary={}", trace.adversary);
    let _ = writeln!(s, "rounds_completed={}", last.round);
    let _ = writeln!(s, "error_mean_l2_initial={}", first.error_mean_l2);
    let _ = writeln!(s, "error_mean_l2_final={}", last.error_mean_l2);
    let _ = writeln!(s, "error_max_linf_final={}", last.error_max_linf);
    let _ = writeln!(s, "rho={}", trace.rho);
    let _ = writeln!(s, "diverged={}", trace.diverged);
    if exp.sim.verify {
        let _ = writeln!(s, "verification_failures={}/{}", trace.verification_failures, trace.verification_checks);
    }
    Ok(s)
}

pub fn analyze(config_path: &Path) -> Result<String, CliError> {
    let exp = config::load(config_path)?;
    let prep = exp.sim.prepare()?;
    let mut rng = prep.seeds.stream(Stream::Aux(0));
    let report = RateReport::compute(&prep.models, &prep.topology, &prep.faulty, exp.sim.b, &mut rng)?;
    Ok(report.to_string())
}

pub fn check_topology(graph_path: &Path, b: usize) -> Result<String, CliError> {
    let text = fs::read_to_string(graph_path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", graph_path.display())))?;
    let topo = Topology::parse(&text)?;
    let mut s = String::new();
    let _ = writeln!(s, "nodes={}", topo.node_count());
    let _ = writeln!(s, "edges={}", topo.edge_count());
    let _ = writeln!(s, "b={b}");
    match check_iabc_achievable(&topo, b) {
        Ok(v) => {
            let _ = writeln!(s, "achievable={v}");
        }
        Err(e @ Error::BudgetExceeded { .. }) => {
            let _ = writeln!(s, "achievable=unknown ({e})");
        }
        Err(e) => return Err(e.into()),
    }
    let kappa = node_connectivity(&topo);
    let _ = writeln!(s, "connectivity={kappa}");
    let gate = if kappa > b { "pass" } else { "fail" };
    let _ = writeln!(s, "multihop_gate={gate} (needs connectivity >= b+1 = {})", b + 1);
    match source_component_census(&topo, b, CENSUS_BUDGET) {
        Ok(census) => {
            for (sources, count) in census {
                let _ = writeln!(s, "census_source_components_{sources}={count}");
            }
        }
        Err(Error::BudgetExceeded { count, .. }) => {
            let _ = writeln!(s, "census=skipped ({count:e} reduced graphs above {CENSUS_BUDGET})");
        }
        Err(e) => return Err(e.into()),
    }
    Ok(s)
}

pub struct Figure1Args {
    pub out: PathBuf,
    pub seeds: u64,
    pub rounds: u64,
    pub noise_bound: f64,
    pub force: bool,
    pub jobs: Option<usize>,
}

pub fn figure1(args: &Figure1Args) -> Result<String, CliError> {
    if args.seeds == 0 || args.rounds == 0 {
        return Err(CliError::Config("--seeds and --rounds must be positive".into()));
    }
    if !(args.noise_bound >= 0.0 && args.noise_bound.is_finite()) {
        return Err(CliError::Config("--noise-bound must be finite and non-negative".into()));
    }
    if let Ok(mut entries) = fs::read_dir(&args.out) {
        if entries.next().is_some() && !args.force {
            return Err(CliError::Config(format!(
                "{} is not empty; pass --force to overwrite",
                args.out.display()
            )));
        }
    }
    ensure_writable(&args.out)?;
    let curves = with_jobs(args.jobs, || {
        figure1::run_sweep(&figure1::FAULT_COUNTS, args.seeds, args.rounds, args.noise_bound)
    })??;
    let mut s = String::new();
    for c in &curves {
        let path = args.out.join(format!("figure1_A{}.csv", c.faulty));
        fs::write(&path, figure1::curve_csv(c)).map_err(|e| io_error(&path, e))?;
        let ratios = c.final_ratios();
        let mean = ratios.iter().sum::<f64>() / ratios.len() as f64;
        let _ = writeln!(
            s,
            "A={} multiplicity={} contraction_holds={} mean_final_ratio={} diverged={}",
            c.faulty,
            c.multiplicity,
            c.contraction_holds,
            mean,
            c.any_diverged()
        );
    }
    let dat = args.out.join("figure1.dat");
    fs::write(&dat, figure1::aggregate_dat(&curves)).map_err(|e| io_error(&dat, e))?;
    let gp = args.out.join("figure1.gp");
    fs::write(&gp, figure1::gnuplot_script(&curves, "figure1.dat")).map_err(|e| io_error(&gp, e))?;
    let _ = writeln!(s, "wrote {} curves, {} and {}", curves.len(), dat.display(), gp.display());
    Ok(s)
}
