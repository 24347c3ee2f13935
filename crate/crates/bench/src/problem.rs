//! Synthetic Lasso instances.

use std::sync::Arc;

use anyhow::Result;
use fastl1_core::{synthesize_scenario_with_shape, DenseDictionary, Dictionary};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone)]
pub struct Problem {
    pub dict: Arc<DenseDictionary>,
    pub y: Vec<f64>,
    pub x_true: Vec<f64>,
}

/// The dictionary shared by every trial of a configuration; depends on `seed` only.
pub fn build_dictionary(cfg: &ExperimentConfig) -> Result<DenseDictionary> {
    Ok(synthesize_scenario_with_shape(cfg.factor_shape()?, cfg.scenario, cfg.seed)?)
}

/// Bernoulli(`p`)-Gaussian `x_true` and `y = A x_true / ‖A x_true‖`.
///
/// Empty draws (and the measure-zero `A x = 0`) are rejected and redrawn.
/// With `p = 0` every draw is empty, so a single uniformly chosen atom is
/// activated instead. The stream depends on `(seed, trial)` only.
pub fn draw_signal(a: &DenseDictionary, p: f64, seed: u64, trial: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial + 1);
    loop {
        let mut x: Vec<f64> = (0..a.ncols())
            .map(|_| if rng.random::<f64>() < p { StandardNormal.sample(&mut rng) } else { 0.0 })
            .collect();
        if x.iter().all(|v| *v == 0.0) {
            if p > 0.0 {
                continue;
            }
            x[rng.random_range(0..a.ncols())] = StandardNormal.sample(&mut rng);
        }
        let mut y = a.matvec(&x).expect("length matches");
        let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        y.iter_mut().for_each(|v| *v /= norm);
        let x_true = x.into_iter().map(|v| v / norm).collect();
        return (y, x_true);
    }
}

pub fn generate_problem(cfg: &ExperimentConfig, trial: u64) -> Result<Problem> {
    let dict = Arc::new(build_dictionary(cfg)?);
    let (y, x_true) = draw_signal(&dict, cfg.bernoulli_p, cfg.seed, trial);
    Ok(Problem { dict, y, x_true })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> ExperimentConfig {
        ExperimentConfig { n: 36, k: 100, ..Default::default() }
    }

    #[test]
    fn unit_norm_and_consistent() {
        for trial in 0..20 {
            let p = generate_problem(&small(), trial).unwrap();
            let norm = p.y.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - 1.0).abs() <= 1e-12);
            let ax = p.dict.matvec(&p.x_true).unwrap();
            assert!(ax.iter().zip(&p.y).all(|(a, b)| (a - b).abs() <= 1e-12));
        }
    }

    #[test]
    fn deterministic_in_seed_and_trial() {
        let a = build_dictionary(&small()).unwrap();
        assert_eq!(draw_signal(&a, 0.05, 3, 7), draw_signal(&a, 0.05, 3, 7));
        assert_ne!(draw_signal(&a, 0.05, 3, 7).0, draw_signal(&a, 0.05, 3, 8).0);
        assert_ne!(draw_signal(&a, 0.05, 3, 7).0, draw_signal(&a, 0.05, 4, 7).0);
    }

    #[test]
    fn degenerate_probabilities_still_yield_a_signal() {
        let a = build_dictionary(&small()).unwrap();
        let (_, x) = draw_signal(&a, 1e-4, 0, 0);
        assert!(x.iter().any(|v| *v != 0.0));
        let (y, x) = draw_signal(&a, 0.0, 0, 0);
        assert_eq!(x.iter().filter(|v| **v != 0.0).count(), 1);
        assert!((y.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() <= 1e-12);
    }
}
