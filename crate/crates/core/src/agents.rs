//! A good agent's per-round state machine: measure, take one local gradient
//! step, then replace the estimate by the trimmed aggregate of what it hears.

use rand::Rng;

use crate::aggregation::{coordinate_trimmed_aggregate, trimmed_aggregate_with_extra, MessageSet, SortedColumns};
use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::observation::{MeasurementAccumulator, ObservationModel};

#[derive(Debug, Clone, PartialEq)]
pub struct AgentState {
    id: usize,
    x: Vector,
    acc: MeasurementAccumulator,
    model: ObservationModel,
}

/// Result of [`AgentState::local_step`].
#[derive(Debug, Clone, PartialEq)]
pub struct LocalStep {
    /// Value broadcast this round.
    pub z: Vector,
    /// The measurement noise drawn this round; never used by the agent.
    pub noise: Vector,
}

impl AgentState {
    pub fn new(model: ObservationModel, x0: Vector) -> Result<Self> {
        if x0.len() != model.dim() {
            return Err(Error::DimensionMismatch { expected: model.dim(), actual: x0.len() });
        }
        if !x0.is_finite() {
            return Err(Error::NonFinite);
        }
        let acc = MeasurementAccumulator::new(model.measurement_dim());
        Ok(AgentState { id: model.agent_id(), x: x0, acc, model })
    }

    pub fn id(&self) -> usize {
        self.id
    }

    pub fn x(&self) -> &Vector {
        &self.x
    }

    pub fn model(&self) -> &ObservationModel {
        &self.model
    }

    pub fn accumulator(&self) -> &MeasurementAccumulator {
        &self.acc
    }

    /// Draws `y(t)`, folds it into the running mean and returns
    /// `z = x − Hᵀ(Hx − ȳ)` (step size 1).
    pub fn local_step<R: Rng + ?Sized>(&mut self, theta_star: &Vector, rng: &mut R) -> Result<LocalStep> {
        let (y, noise) = self.model.sample_with_noise(theta_star, rng)?;
        self.acc.push(&y)?;
        let grad = self.model.empirical_gradient(&self.acc, &self.x)?;
        Ok(LocalStep { z: self.x.checked_sub(&grad)?, noise })
    }

    /// `x ← trimmed aggregate of msgs`; `msgs` must include the agent's own z.
    pub fn finalize_round(&mut self, msgs: &MessageSet, b: usize) -> Result<()> {
        if msgs.dim() != self.x.len() {
            return Err(Error::DimensionMismatch { expected: self.x.len(), actual: msgs.dim() });
        }
        if !msgs.entries().iter().any(|(s, _)| *s == self.id) {
            return Err(Error::MissingMessage { from: self.id, to: self.id });
        }
        self.x = coordinate_trimmed_aggregate(msgs, b)?;
        Ok(())
    }

    /// [`finalize_round`](Self::finalize_round) when the agent hears every
    /// message in `shared` (its own included) plus its private `extra`.
    pub fn finalize_with_shared(&mut self, shared: &SortedColumns, extra: &[(usize, &Vector)], b: usize) -> Result<()> {
        if shared.dim() != self.x.len() {
            return Err(Error::DimensionMismatch { expected: self.x.len(), actual: shared.dim() });
        }
        self.x = trimmed_aggregate_with_extra(shared, extra, b)?;
        Ok(())
    }
}
