//! Omniscient Byzantine adversary: chooses every faulty agent's message to
//! every good out-neighbour, with read access to the full network state.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::numerics::Vector;
use crate::rng::StreamRng;
use crate::topology::Topology;

/// Read-only snapshot handed to a strategy once per round, after every good
/// agent has computed its `z` and before any aggregation.
#[derive(Debug, Clone, Copy)]
pub struct AdversaryView<'a> {
    pub theta_star: &'a Vector,
    pub all_good_z: &'a BTreeMap<usize, Vector>,
    pub all_good_x: &'a BTreeMap<usize, Vector>,
    pub round: u64,
    pub topology: &'a Topology,
    pub faulty: &'a [usize],
    pub b: usize,
}

impl AdversaryView<'_> {
    /// Every (faulty sender, good receiver) link, in ascending order.
    pub fn attack_edges(&self) -> Vec<(usize, usize)> {
        let mut edges = Vec::new();
        for &f in self.faulty {
            for &g in self.topology.out_neighbors(f) {
                if self.all_good_z.contains_key(&g) {
                    edges.push((f, g));
                }
            }
        }
        edges.sort_unstable();
        edges
    }

    pub fn dim(&self) -> usize {
        self.theta_star.len()
    }

    /// Per-coordinate `(min, max)` of the given good z-values.
    fn range_over<'b>(&self, senders: impl Iterator<Item = &'b usize>) -> Vec<(f64, f64)> {
        let mut range = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim()];
        for s in senders {
            if let Some(z) = self.all_good_z.get(s) {
                for (r, v) in range.iter_mut().zip(z.iter()) {
                    r.0 = r.0.min(*v);
                    r.1 = r.1.max(*v);
                }
            }
        }
        range
    }

    /// Range of the z-values that good agent `receiver` will hear from good
    /// senders, its own included.
    pub fn receiver_good_range(&self, receiver: usize) -> Vec<(f64, f64)> {
        let senders: Vec<usize> = self
            .topology
            .in_neighbors(receiver)
            .iter()
            .copied()
            .chain(std::iter::once(receiver))
            .collect();
        self.range_over(senders.iter())
    }

    pub fn global_good_range(&self) -> Vec<(f64, f64)> {
        self.range_over(self.all_good_z.keys())
    }
}

pub type AttackMessages = BTreeMap<(usize, usize), Vector>;

pub trait AdversaryStrategy: Send {
    fn name(&self) -> &'static str;

    /// One message per entry of [`AdversaryView::attack_edges`].
    fn messages(&mut self, view: &AdversaryView<'_>) -> Result<AttackMessages>;
}

/// Silent placeholder used when the fault set is empty.
#[derive(Debug, Clone, Default)]
pub struct NoAttack;

impl AdversaryStrategy for NoAttack {
    fn name(&self) -> &'static str {
        "none"
    }

    fn messages(&mut self, view: &AdversaryView<'_>) -> Result<AttackMessages> {
        if !view.attack_edges().is_empty() {
            return Err(Error::InvalidConfig("faulty agents present but no attack configured".into()));
        }
        Ok(AttackMessages::new())
    }
}

/// Fresh i.i.d. `N(0, σ²)` components per (sender, receiver, round).
#[derive(Debug, Clone)]
pub struct GaussianNoise {
    normal: Normal<f64>,
    rng: StreamRng,
}

impl GaussianNoise {
    pub fn new(sigma: f64, rng: StreamRng) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidConfig(format!("gaussian attack needs sigma > 0, got {sigma}")));
        }
        let normal = Normal::new(0.0, sigma).map_err(|e| Error::InvalidConfig(e.to_string()))?;
        Ok(GaussianNoise { normal, rng })
    }
}

impl AdversaryStrategy for GaussianNoise {
    fn name(&self) -> &'static str {
        "gaussian"
    }

    fn messages(&mut self, view: &AdversaryView<'_>) -> Result<AttackMessages> {
        let d = view.dim();
        let mut out = AttackMessages::new();
        for edge in view.attack_edges() {
            let v: Vec<f64> = (0..d).map(|_| self.normal.sample(&mut self.rng)).collect();
            out.insert(edge, Vector::from(v));
        }
        Ok(out)
    }
}

/// Sends, per coordinate, `max + margin` or `min − margin` of all good
/// z-values, so every faulty value lands at one end of the sorted list.
#[derive(Debug, Clone)]
pub struct ExtremeCoordinate {
    directions: Option<Vec<f64>>,
    margin: f64,
}

impl ExtremeCoordinate {
    /// `directions[k]` is `+1` (above) or `−1` (below); `None` alternates
    /// starting with `+1` on coordinate 0.
    pub fn new(directions: Option<Vec<f64>>, margin: f64) -> Result<Self> {
        if !(margin > 0.0 && margin.is_finite()) {
            return Err(Error::InvalidConfig(format!("extreme attack needs margin > 0, got {margin}")));
        }
        if let Some(dirs) = &directions {
            if dirs.iter().any(|d| *d != 1.0 && *d != -1.0) {
                return Err(Error::InvalidConfig("extreme attack directions must be +1 or -1".into()));
            }
        }
        Ok(ExtremeCoordinate { directions, margin })
    }

    fn direction(&self, k: usize) -> f64 {
        match &self.directions {
            Some(d) => d[k],
            None if k % 2 == 0 => 1.0,
            None => -1.0,
        }
    }
}

impl AdversaryStrategy for ExtremeCoordinate {
    fn name(&self) -> &'static str {
        "extreme"
    }

    fn messages(&mut self, view: &AdversaryView<'_>) -> Result<AttackMessages> {
        let d = view.dim();
        if let Some(dirs) = &self.directions {
            if dirs.len() != d {
                return Err(Error::DimensionMismatch { expected: d, actual: dirs.len() });
            }
        }
        let range = view.global_good_range();
        let value: Vec<f64> = (0..d)
            .map(|k| {
                if self.direction(k) > 0.0 {
                    range[k].1 + self.margin
                } else {
                    range[k].0 - self.margin
                }
            })
            .collect();
        let value = Vector::from(value);
        Ok(view.attack_edges().into_iter().map(|e| (e, value.clone())).collect())
    }
}

/// Sends each receiver the target clamped into the range of good values
/// that receiver will hear, so the message is never an outlier.
#[derive(Debug, Clone)]
pub struct PullToward {
    target: Vector,
}

impl PullToward {
    pub fn new(target: Vector) -> Result<Self> {
        if !target.is_finite() {
            return Err(Error::NonFinite);
        }
        Ok(PullToward { target })
    }
}

impl AdversaryStrategy for PullToward {
    fn name(&self) -> &'static str {
        "pull_toward"
    }

    fn messages(&mut self, view: &AdversaryView<'_>) -> Result<AttackMessages> {
        if self.target.len() != view.dim() {
            return Err(Error::DimensionMismatch { expected: view.dim(), actual: self.target.len() });
        }
        let mut per_receiver: BTreeMap<usize, Vector> = BTreeMap::new();
        let mut out = AttackMessages::new();
        for (f, g) in view.attack_edges() {
            let msg = per_receiver.entry(g).or_insert_with(|| {
                let range = view.receiver_good_range(g);
                Vector::from(
                    self.target
                        .iter()
                        .zip(range)
                        .map(|(t, (lo, hi))| t.clamp(lo, hi))
                        .collect::<Vec<f64>>(),
                )
            });
            out.insert((f, g), msg.clone());
        }
        Ok(out)
    }
}

/// Where [`PullToward`] pulls.
#[derive(Debug, Clone, PartialEq)]
pub enum PullTarget {
    ThetaStar,
    Fixed(Vec<f64>),
}

/// Configuration-level description of an attack.
#[derive(Debug, Clone, PartialEq)]
pub enum AdversarySpec {
    None,
    Gaussian { sigma: f64 },
    Extreme { margin: f64, directions: Option<Vec<f64>> },
    PullToward { target: PullTarget },
}

impl AdversarySpec {
    pub fn build(&self, theta_star: &Vector, rng: StreamRng) -> Result<Box<dyn AdversaryStrategy>> {
        Ok(match self {
            AdversarySpec::None => Box::new(NoAttack),
            AdversarySpec::Gaussian { sigma } => Box::new(GaussianNoise::new(*sigma, rng)?),
            AdversarySpec::Extreme { margin, directions } => {
                Box::new(ExtremeCoordinate::new(directions.clone(), *margin)?)
            }
            AdversarySpec::PullToward { target } => {
                let t = match target {
                    PullTarget::ThetaStar => theta_star.clone(),
                    PullTarget::Fixed(v) => Vector::new(v.clone())?,
                };
                Box::new(PullToward::new(t)?)
            }
        })
    }
}

/// Randomised helper for tests and benches: a uniform vector in `[-r, r]^d`.
pub fn uniform_vector<R: Rng + ?Sized>(d: usize, r: f64, rng: &mut R) -> Vector {
    Vector::from((0..d).map(|_| rng.random_range(-r..=r)).collect::<Vec<f64>>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::{coordinate_trimmed_aggregate, MessageSet};
    use crate::rng::{SeedTree, Stream};

    struct Fixture {
        theta: Vector,
        z: BTreeMap<usize, Vector>,
        x: BTreeMap<usize, Vector>,
        topo: Topology,
        faulty: Vec<usize>,
    }

    impl Fixture {
        fn new(good: usize, faulty: usize, d: usize, seed: u64) -> Self {
            let mut rng = SeedTree::new(seed).stream(Stream::Aux(0));
            let z = (0..good).map(|i| (i, uniform_vector(d, 1.0, &mut rng))).collect();
            let x = (0..good).map(|i| (i, Vector::zeros(d))).collect();
            Fixture {
                theta: Vector::zeros(d),
                z,
                x,
                topo: Topology::complete(good + faulty),
                faulty: (good..good + faulty).collect(),
            }
        }

        fn view(&self, b: usize) -> AdversaryView<'_> {
            AdversaryView {
                theta_star: &self.theta,
                all_good_z: &self.z,
                all_good_x: &self.x,
                round: 1,
                topology: &self.topo,
                faulty: &self.faulty,
                b,
            }
        }

        fn aggregate_at(&self, receiver: usize, attack: &AttackMessages, b: usize) -> Vector {
            let mut msgs = MessageSet::new(self.theta.len());
            for (i, z) in &self.z {
                msgs.push(*i, z.clone()).unwrap();
            }
            for ((f, g), v) in attack {
                if *g == receiver {
                    msgs.push(*f, v.clone()).unwrap();
                }
            }
            coordinate_trimmed_aggregate(&msgs, b).unwrap()
        }
    }

    fn rng() -> StreamRng {
        SeedTree::new(9).stream(Stream::Adversary)
    }

    #[test]
    fn covers_exactly_the_attack_edges() {
        let fx = Fixture::new(5, 2, 3, 1);
        let view = fx.view(2);
        let strategies: Vec<Box<dyn AdversaryStrategy>> = vec![
            Box::new(GaussianNoise::new(3.0, rng()).unwrap()),
            Box::new(ExtremeCoordinate::new(None, 10.0).unwrap()),
            Box::new(PullToward::new(Vector::zeros(3)).unwrap()),
        ];
        for mut s in strategies {
            let msgs = s.messages(&view).unwrap();
            let keys: Vec<_> = msgs.keys().copied().collect();
            assert_eq!(keys, view.attack_edges(), "{}", s.name());
            assert_eq!(keys.len(), 10);
        }
    }

    #[test]
    fn gaussian_conflicting_and_reproducible() {
        let fx = Fixture::new(4, 1, 5, 2);
        let view = fx.view(1);
        let a = GaussianNoise::new(3.0, rng()).unwrap().messages(&view).unwrap();
        let b = GaussianNoise::new(3.0, rng()).unwrap().messages(&view).unwrap();
        assert_eq!(a, b);
        assert_ne!(a[&(4, 0)], a[&(4, 1)]);
        let tiny = GaussianNoise::new(1e-12, rng()).unwrap().messages(&view).unwrap();
        assert!(tiny.values().all(|v| v.linf_norm() < 1e-9));
        assert!(GaussianNoise::new(0.0, rng()).is_err());
    }

    #[test]
    fn extreme_confined_when_within_budget() {
        let fx = Fixture::new(7, 2, 4, 3);
        let b = 2;
        let attack = ExtremeCoordinate::new(None, 1e6).unwrap().messages(&fx.view(b)).unwrap();
        let range = fx.view(b).global_good_range();
        for g in 0..7 {
            let agg = fx.aggregate_at(g, &attack, b);
            for (k, v) in agg.iter().enumerate() {
                assert!(*v >= range[k].0 && *v <= range[k].1);
            }
        }
    }

    #[test]
    fn extreme_survives_beyond_budget() {
        // Three faulty agents pushing up, trimming only removes b = 2 of them.
        let fx = Fixture::new(5, 3, 1, 4);
        let attack =
            ExtremeCoordinate::new(Some(vec![1.0]), 1e3).unwrap().messages(&fx.view(2)).unwrap();
        let agg = fx.aggregate_at(0, &attack, 2);
        assert!(agg[0] > fx.view(2).global_good_range()[0].1);
    }

    #[test]
    fn no_faulty_agents_means_no_messages() {
        let fx = Fixture::new(3, 0, 2, 5);
        assert!(ExtremeCoordinate::new(None, 1.0).unwrap().messages(&fx.view(1)).unwrap().is_empty());
        assert!(NoAttack.messages(&fx.view(1)).unwrap().is_empty());
        let fx = Fixture::new(3, 1, 2, 5);
        assert!(NoAttack.messages(&fx.view(1)).is_err());
    }

    #[test]
    fn pull_toward_stays_in_range() {
        let fx = Fixture::new(6, 2, 3, 6);
        let view = fx.view(2);
        let target = Vector::from(vec![10.0, -10.0, 0.0]);
        let msgs = PullToward::new(target).unwrap().messages(&view).unwrap();
        for ((_, g), v) in &msgs {
            let range = view.receiver_good_range(*g);
            for (k, val) in v.iter().enumerate() {
                assert!(*val >= range[k].0 && *val <= range[k].1);
            }
            assert_eq!(v[0], range[0].1);
            assert_eq!(v[1], range[1].0);
        }
    }

    #[test]
    fn spec_builds_each_strategy() {
        let theta = Vector::from(vec![0.1, 0.2]);
        let specs = [
            AdversarySpec::None,
            AdversarySpec::Gaussian { sigma: 3.0 },
            AdversarySpec::Extreme { margin: 5.0, directions: None },
            AdversarySpec::PullToward { target: PullTarget::ThetaStar },
            AdversarySpec::PullToward { target: PullTarget::Fixed(vec![1.0, 1.0]) },
        ];
        let names: Vec<_> = specs.iter().map(|s| s.build(&theta, rng()).unwrap().name()).collect();
        assert_eq!(names, ["none", "gaussian", "extreme", "pull_toward", "pull_toward"]);
        assert!(AdversarySpec::Gaussian { sigma: -1.0 }.build(&theta, rng()).is_err());
    }
}
