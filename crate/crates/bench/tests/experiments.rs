use std::sync::Arc;

use fastl1_bench::sweep::{build_sequence, solve_one};
use fastl1_bench::{draw_signal, generate_problem, ExperimentConfig};
use fastl1_core::fastl1::Variant;
use fastl1_core::screening::lambda_max;
use fastl1_core::{DenseDictionary, Dictionary};

#[test]
fn bernoulli_support_has_the_expected_mean_size() {
    // only x is of interest here, so a 2-row dictionary is enough
    let k = 10_000;
    let data = (0..2 * k).map(|i| if i % 2 == 0 { 1.0 } else { (i as f64).cos() }).collect();
    let a = DenseDictionary::from_col_major(2, k, data).unwrap();
    let draws = 1000;
    let total: usize = (0..draws)
        .map(|trial| draw_signal(&a, 0.02, 11, trial).1.iter().filter(|v| **v != 0.0).count())
        .sum();
    let mean = total as f64 / draws as f64;
    assert!((190.0..=210.0).contains(&mean), "{mean}");
}

fn primal(a: &DenseDictionary, y: &[f64], lambda: f64, x: &[f64]) -> f64 {
    let ax = a.matvec(x).unwrap();
    let r2: f64 = ax.iter().zip(y).map(|(p, q)| (q - p).powi(2)).sum();
    0.5 * r2 + lambda * x.iter().map(|v| v.abs()).sum::<f64>()
}

#[test]
fn the_three_variants_reach_the_same_objective() {
    let cfg = ExperimentConfig { n: 64, k: 256, ranks: vec![1, 2, 3], tol: 1e-9, ..Default::default() };
    for trial in 0..4 {
        let p = generate_problem(&cfg, trial).unwrap();
        let seq = build_sequence(&cfg, Arc::clone(&p.dict)).unwrap();
        for ratio in [0.05, 0.3, 0.8] {
            let lambda = ratio * lambda_max(p.dict.as_ref(), &p.y).unwrap();
            let values: Vec<f64> = Variant::ALL
                .iter()
                .map(|&v| {
                    let out = solve_one(&seq, v, &p.y, lambda, &cfg.switch_config()).unwrap();
                    assert!(out.converged());
                    primal(&p.dict, &p.y, lambda, &out.x)
                })
                .collect();
            let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(values.iter().all(|v| v - lo <= 1e-9), "{values:?}");
        }
    }
}

#[test]
fn flops_of_an_exact_only_sequence_follow_the_screened_formula() {
    let cfg = ExperimentConfig { n: 36, k: 100, ranks: vec![], ..Default::default() };
    let p = generate_problem(&cfg, 0).unwrap();
    let seq = build_sequence(&cfg, Arc::clone(&p.dict)).unwrap();
    assert_eq!(seq.len(), 1);
    let lambda = 0.2 * lambda_max(p.dict.as_ref(), &p.y).unwrap();
    let fast = solve_one(&seq, Variant::FastL1, &p.y, lambda, &cfg.switch_config()).unwrap();
    let scr = solve_one(&seq, Variant::Screened, &p.y, lambda, &cfg.switch_config()).unwrap();
    assert_eq!(fast.ledger.total, scr.ledger.total);
    assert_eq!(fast.x, scr.x);
}
