//! Byzantine-resilient cooperative estimation: good agents run one local
//! least-squares gradient step per round on fresh noisy measurements, then
//! replace their estimate by a coordinate-wise trimmed mean of what their
//! neighbours report. Faulty agents are driven by an omniscient adversary.
//!
//! The crate covers the round simulator ([`engine`]), the aggregation rule,
//! observation models, topology analysis (reduced graphs, source
//! components, connectivity) and the closed-form contraction rates and
//! finite-time bounds in [`analysis`].

pub mod adversary;
pub mod agents;
pub mod aggregation;
pub mod analysis;
pub mod engine;
pub mod error;
pub mod numerics;
pub mod observation;
pub mod rng;
pub mod topology;

pub use adversary::{AdversarySpec, AdversaryStrategy, AdversaryView, PullTarget};
pub use agents::AgentState;
pub use aggregation::{coordinate_trimmed_aggregate, trimmed_mean_scalar, MessageSet};
pub use analysis::RateReport;
pub use engine::{
    run, run_grid, InitSpec, ObservationSpec, SimulationConfig, SimulationTrace, SweepParam, SweepPoint,
    ThetaSpec, TopologySpec,
};
pub use error::{Error, Result};
pub use numerics::{Matrix, Vector};
pub use observation::{NoiseSpec, ObservationModel};
pub use topology::Topology;
