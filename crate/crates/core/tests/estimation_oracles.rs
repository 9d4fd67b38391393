//! Gradient, noise-series and contraction-rate code against independent
//! reference computations.

use byzest_core::analysis::{check_assumption_1, compute_rho, cumulative_noise_series};
use byzest_core::observation::MeasurementAccumulator;
use byzest_core::{Matrix, NoiseSpec, ObservationModel, Vector};
use byzest_oracles::{oracle_cumulative_noise, oracle_empirical_loss, oracle_gradient_full_history};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..rows).map(|_| (0..cols).map(|_| rng.random_range(-scale..scale)).collect()).collect()
}

#[test]
fn running_mean_gradient_matches_full_history() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for _ in 0..1000 {
        let d = rng.random_range(1..=6);
        let rows = rng.random_range(1..=5);
        let h = random_rows(&mut rng, rows, d, 2.0);
        let t = rng.random_range(1..=30);
        let ys = random_rows(&mut rng, t, rows, 5.0);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-3.0..3.0)).collect();

        let model = ObservationModel::new(0, Matrix::from_rows(&h).unwrap(), NoiseSpec::Zero).unwrap();
        let mut acc = MeasurementAccumulator::new(rows);
        for y in &ys {
            acc.push(&Vector::from(y.clone())).unwrap();
        }
        let got = model.empirical_gradient(&acc, &Vector::from(x.clone())).unwrap();
        let want = oracle_gradient_full_history(&h, &ys, &x);
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-9 * (1.0 + w.abs()), "got {g} want {w}");
        }
    }
}

#[test]
fn gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let step = 1e-6;
    for _ in 0..200 {
        let d = rng.random_range(1..=5);
        let rows = rng.random_range(1..=4);
        let h = random_rows(&mut rng, rows, d, 1.0);
        let t = rng.random_range(1..=10);
        let ys = random_rows(&mut rng, t, rows, 2.0);
        let x: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();

        let model = ObservationModel::new(0, Matrix::from_rows(&h).unwrap(), NoiseSpec::Zero).unwrap();
        let mut acc = MeasurementAccumulator::new(rows);
        for y in &ys {
            acc.push(&Vector::from(y.clone())).unwrap();
        }
        let grad = model.empirical_gradient(&acc, &Vector::from(x.clone())).unwrap();
        for k in 0..d {
            let mut up = x.clone();
            let mut down = x.clone();
            up[k] += step;
            down[k] -= step;
            let fd = (oracle_empirical_loss(&h, &ys, &up) - oracle_empirical_loss(&h, &ys, &down)) / (2.0 * step);
            let scale = grad[k].abs().max(1e-3);
            assert!((fd - grad[k]).abs() / scale <= 1e-5, "k={k} fd={fd} grad={}", grad[k]);
        }
    }
}

#[test]
fn gradient_vanishes_at_truth_without_noise() {
    let theta = Vector::from(vec![0.3, -0.7, 1.1]);
    let h = Matrix::from_rows(&[vec![1.0, 2.0, 0.0], vec![0.0, -1.0, 0.5]]).unwrap();
    let model = ObservationModel::new(0, h, NoiseSpec::Zero).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut acc = MeasurementAccumulator::new(2);
    for _ in 0..5 {
        acc.push(&model.sample_measurement(&theta, &mut rng).unwrap()).unwrap();
    }
    assert!(model.empirical_gradient(&acc, &theta).unwrap().linf_norm() < 1e-12);
}

#[test]
fn noise_series_matches_raw_history() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for _ in 0..300 {
        let t = rng.random_range(1..=40);
        let dim = rng.random_range(1..=4);
        let lambda = rng.random_range(0.05..0.95);
        let noise = random_rows(&mut rng, t, dim, 1.0);
        let mut acc = MeasurementAccumulator::new(dim);
        let mut norms = Vec::new();
        for w in &noise {
            acc.push(&Vector::from(w.clone())).unwrap();
            norms.push(acc.mean().l2_norm());
        }
        let got = cumulative_noise_series(&norms, lambda).unwrap();
        let want = oracle_cumulative_noise(&noise, lambda);
        assert!((got - want).abs() <= 1e-10 * (1.0 + want), "got {got} want {want}");
    }
}

#[test]
fn rho_below_one_iff_first_assumption_holds() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    let mut seen = [0usize; 2];
    for _ in 0..2000 {
        let d = rng.random_range(1..=4);
        let phi = rng.random_range(2..=6);
        let b = rng.random_range(0..phi);
        let models: Vec<ObservationModel> = (0..phi)
            .map(|i| {
                // Mix of selections and scaled rows so both verdicts show up.
                let rows: Vec<Vec<f64>> = (0..rng.random_range(1..=d))
                    .map(|_| {
                        let mut r = vec![0.0; d];
                        r[rng.random_range(0..d)] = if rng.random_bool(0.7) { 1.0 } else { rng.random_range(0.0..1.4) };
                        r
                    })
                    .collect();
                ObservationModel::new(i, Matrix::from_rows(&rows).unwrap(), NoiseSpec::Zero).unwrap()
            })
            .collect();
        let holds = check_assumption_1(&models, b).unwrap();
        assert_eq!(compute_rho(&models, b).unwrap() < 1.0, holds);
        seen[usize::from(holds)] += 1;
    }
    assert!(seen[0] > 100 && seen[1] > 100, "{seen:?}");
}
