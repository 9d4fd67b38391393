//! Linear observation model `y_i(t) = H_i θ* + w_i(t)` with bounded noise,
//! the running-mean accumulator, and the empirical least-squares gradient.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numerics::{Matrix, Vector};

/// Bounded, zero-mean, i.i.d. measurement noise.
///
/// The almost-sure bound `C` on `‖w‖` is a property of the noise model alone, so the
/// per-component scale of [`NoiseSpec::UniformBox`] is derived from the
/// measurement dimension at sampling time.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSpec {
    Zero,
    /// Each component uniform on `[-a, a]` with `a = bound / sqrt(n_i)`, so
    /// `‖w‖ ≤ bound` and `Σ_i = (a²/3) I`.
    UniformBox { bound: f64 },
    /// Per-component `N(0, σ²)`, resampled whenever `‖w‖ > bound`.
    TruncatedGaussian { sigma: f64, bound: f64 },
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseSpec::Zero => Ok(()),
            NoiseSpec::UniformBox { bound } if bound.is_finite() && bound > 0.0 => Ok(()),
            NoiseSpec::TruncatedGaussian { sigma, bound }
                if sigma.is_finite() && sigma > 0.0 && bound.is_finite() && bound > 0.0 =>
            {
                Ok(())
            }
            _ => Err(Error::Domain(format!("invalid noise parameters {self:?}"))),
        }
    }

    /// The almost-sure norm bound `C`.
    pub fn bound(&self) -> f64 {
        match *self {
            NoiseSpec::Zero => 0.0,
            NoiseSpec::UniformBox { bound } | NoiseSpec::TruncatedGaussian { bound, .. } => bound,
        }
    }

    /// Target covariance `Σ_i` for an `n`-dimensional measurement.
    pub fn covariance(&self, n: usize) -> Matrix {
        let per_component = match *self {
            NoiseSpec::Zero => 0.0,
            NoiseSpec::UniformBox { bound } => {
                let a = bound / (n as f64).sqrt();
                a * a / 3.0
            }
            // Nominal (untruncated) variance; truncation only shrinks it.
            NoiseSpec::TruncatedGaussian { sigma, .. } => sigma * sigma,
        };
        Matrix::diagonal(&vec![per_component; n])
    }

    pub fn covariance_trace(&self, n: usize) -> f64 {
        self.covariance(n).trace()
    }

    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vector {
        match *self {
            NoiseSpec::Zero => Vector::zeros(n),
            NoiseSpec::UniformBox { bound } => {
                let a = bound / (n as f64).sqrt();
                let w: Vec<f64> = (0..n).map(|_| rng.random_range(-a..=a)).collect();
                let mut w = Vector::from(w);
                // Guard the corner of the box against rounding past the bound.
                let norm = w.l2_norm();
                if norm > bound {
                    w = w.scale(bound / norm);
                }
                w
            }
            NoiseSpec::TruncatedGaussian { sigma, bound } => {
                let normal = Normal::new(0.0, sigma).expect("validated sigma");
                loop {
                    let w = Vector::from((0..n).map(|_| normal.sample(rng)).collect::<Vec<_>>());
                    if w.l2_norm() <= bound {
                        break w;
                    }
                }
            }
        }
    }
}

/// One agent's sensing setup: `H_i ∈ R^{n_i × d}` plus its noise law.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationModel {
    agent_id: usize,
    h: Matrix,
    gram: Matrix,
    noise: NoiseSpec,
}

impl ObservationModel {
    pub fn new(agent_id: usize, h: Matrix, noise: NoiseSpec) -> Result<Self> {
        if h.rows() == 0 {
            return Err(Error::Domain("observation matrix needs at least one row".into()));
        }
        noise.validate()?;
        let gram = h.matmul_transpose_self();
        Ok(ObservationModel { agent_id, h, gram, noise })
    }

    pub fn agent_id(&self) -> usize {
        self.agent_id
    }

    pub fn h(&self) -> &Matrix {
        &self.h
    }

    /// `HᵀH`, cached at construction.
    pub fn gram(&self) -> &Matrix {
        &self.gram
    }

    pub fn noise(&self) -> &NoiseSpec {
        &self.noise
    }

    pub fn dim(&self) -> usize {
        self.h.cols()
    }

    pub fn measurement_dim(&self) -> usize {
        self.h.rows()
    }

    /// `‖(I − HᵀH) e_k‖₁`
    pub fn contraction_column_norm(&self, k: usize) -> Result<f64> {
        let d = self.dim();
        if k >= d {
            return Err(Error::IndexOutOfRange { index: k, len: d });
        }
        Ok((0..d)
            .map(|r| {
                let ident = if r == k { 1.0 } else { 0.0 };
                (ident - self.gram.get(r, k)).abs()
            })
            .sum())
    }

    pub fn noise_covariance_trace(&self) -> f64 {
        self.noise.covariance_trace(self.measurement_dim())
    }

    /// Draws `y = Hθ* + w` and returns it together with the noise `w`
    /// (the latter for bookkeeping only; agents never see it).
    pub fn sample_with_noise<R: Rng + ?Sized>(
        &self,
        theta_star: &Vector,
        rng: &mut R,
    ) -> Result<(Vector, Vector)> {
        let clean = self.h.matvec(theta_star)?;
        let w = self.noise.sample(self.measurement_dim(), rng);
        Ok((&clean + &w, w))
    }

    pub fn sample_measurement<R: Rng + ?Sized>(&self, theta_star: &Vector, rng: &mut R) -> Result<Vector> {
        self.sample_with_noise(theta_star, rng).map(|(y, _)| y)
    }

    /// Gradient of `f_{i,t}(x) = (1/t) Σ_s ½‖Hx − y(s)‖²`, which only
    /// depends on the history through its mean: `Hᵀ(Hx − ȳ)`.
    pub fn empirical_gradient(&self, acc: &MeasurementAccumulator, x: &Vector) -> Result<Vector> {
        if acc.count() == 0 {
            return Err(Error::EmptyAccumulator);
        }
        let residual = self.h.matvec(x)?.checked_sub(acc.mean())?;
        self.h.transpose_matvec(&residual)
    }
}

/// Running mean of an agent's measurements.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementAccumulator {
    count: u64,
    mean: Vector,
}

impl MeasurementAccumulator {
    pub fn new(measurement_dim: usize) -> Self {
        MeasurementAccumulator { count: 0, mean: Vector::zeros(measurement_dim) }
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> &Vector {
        &self.mean
    }

    pub fn push(&mut self, y: &Vector) -> Result<()> {
        if y.len() != self.mean.len() {
            return Err(Error::DimensionMismatch { expected: self.mean.len(), actual: y.len() });
        }
        self.count += 1;
        let inv = 1.0 / self.count as f64;
        for (m, v) in self.mean.as_mut_slice().iter_mut().zip(y.iter()) {
            *m += (v - *m) * inv;
        }
        Ok(())
    }
}

/// Builds coordinate-selection observation matrices for `phi` agents.
///
/// Every coordinate is observed by exactly `multiplicity` distinct agents
/// (rows are standard basis vectors; unused rows are zero). Slots are dealt
/// round-robin over a seeded permutation of coordinates and agents, so the
/// coverage is exact for any seed. For these matrices `(I − HᵀH)` is
/// diagonal with a 0 for every observed coordinate and 1 otherwise.
pub fn make_coordinate_selection_models<R: Rng + ?Sized>(
    d: usize,
    phi: usize,
    rows: usize,
    multiplicity: usize,
    noise: &NoiseSpec,
    rng: &mut R,
) -> Result<Vec<ObservationModel>> {
    let assignment = coordinate_assignment(d, phi, rows, multiplicity, rng)?;
    assignment
        .into_iter()
        .enumerate()
        .map(|(agent, coords)| {
            let h = selection_matrix(d, rows, &coords)?;
            ObservationModel::new(agent, h, noise.clone())
        })
        .collect()
}

/// The per-agent coordinate lists behind [`make_coordinate_selection_models`].
pub fn coordinate_assignment<R: Rng + ?Sized>(
    d: usize,
    phi: usize,
    rows: usize,
    multiplicity: usize,
    rng: &mut R,
) -> Result<Vec<Vec<usize>>> {
    if multiplicity == 0 || d == 0 || phi == 0 || rows == 0 {
        return Err(Error::InfeasibleCoverage(
            "dimension, agent count, rows and multiplicity must all be positive".into(),
        ));
    }
    if multiplicity > phi {
        return Err(Error::InfeasibleCoverage(format!(
            "multiplicity {multiplicity} exceeds the {phi} available agents"
        )));
    }
    let slots = multiplicity * d;
    if slots.div_ceil(phi) > rows {
        return Err(Error::InfeasibleCoverage(format!(
            "{phi} agents with {rows} rows cannot observe {d} coordinates {multiplicity} times each"
        )));
    }
    let mut coord_order: Vec<usize> = (0..d).collect();
    coord_order.shuffle(rng);
    let mut agent_order: Vec<usize> = (0..phi).collect();
    agent_order.shuffle(rng);

    // Slot s carries coordinate s / multiplicity and goes to agent s mod phi.
    // Consecutive copies of a coordinate land on distinct agents, and an
    // agent's slots are phi ≥ multiplicity apart, so never repeat a coordinate.
    let mut out = vec![Vec::new(); phi];
    for s in 0..slots {
        let coord = coord_order[s / multiplicity];
        out[agent_order[s % phi]].push(coord);
    }
    for coords in &mut out {
        coords.sort_unstable();
    }
    Ok(out)
}

/// `rows × d` matrix whose first rows select `coords`; remaining rows are zero.
pub fn selection_matrix(d: usize, rows: usize, coords: &[usize]) -> Result<Matrix> {
    if coords.len() > rows {
        return Err(Error::InfeasibleCoverage(format!(
            "{} coordinates do not fit in {rows} rows",
            coords.len()
        )));
    }
    let mut h = Matrix::zeros(rows, d);
    for (r, &k) in coords.iter().enumerate() {
        if k >= d {
            return Err(Error::IndexOutOfRange { index: k, len: d });
        }
        h.set(r, k, 1.0);
    }
    Ok(h)
}
