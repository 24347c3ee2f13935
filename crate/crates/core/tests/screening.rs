mod common;

use std::sync::Arc;

use fastl1_core::dictionary::{ApproxDictionary, Operator};
use fastl1_core::linalg::{dot, norm2, norm_inf};
use fastl1_core::screening::{
    build_sphere, dual_point_dynamic, dual_scale, lambda_max, screen, sphere_test, stable_ball_test,
    stable_dual_scale, stable_lambda_max, stable_zone_test, AtomBounds, AtomZone, DualPoints, SphereInputs,
};
use fastl1_core::solver::LassoProblem;
use fastl1_core::{
    build_sukro_sequence_with_shape, synthesize_scenario_with_shape, ApproxSequence, DenseDictionary, Dictionary,
    Rule, SafeSphere, Scenario, SukroShape,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gauss(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let v = gauss(rng, n);
    let s = norm2(&v);
    v.iter().map(|x| x / s).collect()
}

/// uniform-ish point in B(c, R): random direction, random radius
fn in_ball(rng: &mut ChaCha8Rng, c: &[f64], r: f64) -> Vec<f64> {
    let d = unit(rng, c.len());
    let t = r * rng.random::<f64>().powf(1.0 / c.len() as f64);
    c.iter().zip(&d).map(|(ci, di)| ci + t * di).collect()
}

fn small_sequence(seed: u64) -> (Arc<DenseDictionary>, ApproxSequence) {
    let shape = SukroShape::new(5, 10, 10, 12).unwrap();
    let a = Arc::new(synthesize_scenario_with_shape(shape, Scenario::Moderate, seed).unwrap());
    let seq = build_sukro_sequence_with_shape(a.clone(), shape, &[1, 2, 3]).unwrap();
    (a, seq)
}

#[test]
fn lambda_max_matches_brute_force() {
    for seed in 0..20 {
        let a = common::random_dense(7, 13, seed);
        let y = common::random_vec(7, seed + 100);
        let direct = (0..13).map(|j| dot(a.col(j), &y).abs()).fold(0.0, f64::max);
        assert_eq!(lambda_max(&a, &y).unwrap(), direct);
    }
}

#[test]
fn sphere_test_is_the_supremum() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..20 {
        let n = 6;
        let a = gauss(&mut rng, n);
        let c = gauss(&mut rng, n);
        let r = rng.random::<f64>();
        let s = SafeSphere { center: c.clone(), radius: r };
        let v = sphere_test(&a, &s);
        // attained at c + sign(aᵀc) R a/‖a‖
        let sgn = dot(&a, &c).signum();
        let na = norm2(&a);
        let best: Vec<f64> = c.iter().zip(&a).map(|(ci, ai)| ci + sgn * r * ai / na).collect();
        assert!((dot(&a, &best).abs() - v).abs() <= 1e-12);
        for _ in 0..100_000 / 20 {
            let th = in_ball(&mut rng, &c, r);
            assert!(dot(&a, &th).abs() <= v + 1e-12);
        }
    }
}

#[test]
fn zone_test_dominates_exact_sphere_test_on_10k_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for _ in 0..10_000 {
        let n = 1 + rng.random_range(0..12);
        let a = gauss(&mut rng, n);
        let e = gauss(&mut rng, n);
        let scale = rng.random::<f64>() * 0.5;
        let approx: Vec<f64> = a.iter().zip(&e).map(|(p, q)| p + scale * q).collect();
        let eps = norm2(&a.iter().zip(&approx).map(|(p, q)| p - q).collect::<Vec<_>>()) * (1.0 + rng.random::<f64>());
        let s = SafeSphere { center: gauss(&mut rng, n), radius: rng.random::<f64>() * 2.0 };
        let zone = AtomZone { approx_atom: &approx, error_radius: eps, exact_atom_norm: norm2(&a) };
        assert!(stable_zone_test(&zone, &s) >= sphere_test(&a, &s) - 1e-12);
        assert!(stable_ball_test(&approx, eps, &s) >= sphere_test(&a, &s) - 1e-12);
    }
}

#[test]
fn ball_test_bounds_double_sampled_supremum() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let n = 4;
        let approx = gauss(&mut rng, n);
        let eps = rng.random::<f64>() * 0.5;
        let s = SafeSphere { center: gauss(&mut rng, n), radius: rng.random::<f64>() };
        let bound = stable_ball_test(&approx, eps, &s);
        for _ in 0..2000 {
            let a = in_ball(&mut rng, &approx, eps);
            let th = in_ball(&mut rng, &s.center, s.radius);
            assert!(dot(&a, &th).abs() <= bound + 1e-12);
        }
    }
}

#[test]
fn zone_test_with_zero_center_and_radius() {
    let atom = [0.3, -0.2, 0.9];
    let zone = AtomZone { approx_atom: &atom, error_radius: 0.4, exact_atom_norm: 1.0 };
    let s = SafeSphere { center: vec![0.0; 3], radius: 0.0 };
    assert_eq!(stable_zone_test(&zone, &s), 0.0);
}

#[test]
fn stable_dual_scale_example_and_zero_approximation() {
    let a = Arc::new(DenseDictionary::from_rows(&[vec![2.0, 0.0], vec![0.0, 2.0]]).unwrap());
    let ident = Operator::Dense(Arc::new(DenseDictionary::identity(2)));
    let approx = ApproxDictionary::certify(ident, &a).unwrap();
    assert_eq!(approx.atom_error_bounds(), &[1.0, 1.0]);
    assert_eq!(stable_dual_scale(&[2.0, 0.0], &approx).unwrap(), vec![0.5, 0.0]);

    // Ã = 0 with ε_j = ‖a_j‖
    let zero = Operator::Dense(Arc::new(DenseDictionary::from_col_major(2, 2, vec![0.0; 4]).unwrap()));
    let z = ApproxDictionary::certify(zero, &a).unwrap();
    let y = [0.3, -0.4];
    assert!((stable_lambda_max(&z, &y).unwrap() - norm2(&y) * 2.0).abs() < 1e-15);
}

#[test]
fn static_rule_at_lambda_max_screens_strictly_smaller_correlations() {
    let a = common::random_dense(10, 30, 4);
    let y = common::random_vec(10, 5);
    let lmax = lambda_max(&a, &y).unwrap();
    let seq = ApproxSequence::exact_only(Arc::new(a.clone()));
    let exact = seq.get(0);
    let active: Vec<usize> = (0..30).collect();
    let bounds = AtomBounds::gather(exact, &active);
    let dp = DualPoints {
        theta_prime: vec![0.0; 10],
        theta_tilde: vec![0.0; 10],
        scale_prime: 0.0,
        scale_tilde: 0.0,
        base_correlations: vec![],
    };
    let inputs = SphereInputs {
        y: &y,
        lambda: lmax,
        lambda_max: lmax,
        dual: &dp,
        primal: 0.0,
        residual_norm: 0.0,
        x_l1: 0.0,
        operator_error: 0.0,
    };
    let s = build_sphere(Rule::Static, &inputs);
    assert_eq!(s.radius, 0.0);
    let aty = a.adjoint_matvec(&y).unwrap();
    let corr: Vec<f64> = aty.iter().map(|v| v / lmax).collect();
    let out = screen(exact, &active, &s, &bounds, false, Some(&corr)).unwrap();
    for j in 0..30 {
        let expect_keep = !(aty[j].abs() / lmax < 1.0);
        assert_eq!(out.keep[j], expect_keep, "atom {j}");
    }
    assert!(!out.preserved.is_empty());
}

#[test]
fn huge_radius_keeps_everything() {
    let (a, seq) = small_sequence(1);
    let active: Vec<usize> = (0..120).collect();
    let c = common::random_vec(50, 2);
    let min_norm = a.atom_norms().iter().copied().fold(f64::INFINITY, f64::min);
    let max_norm = a.atom_norms().iter().copied().fold(0.0, f64::max);
    let r = 1.0 / min_norm + norm2(&c) * max_norm;
    let s = SafeSphere { center: c, radius: r };
    for d in seq.iter() {
        let b = AtomBounds::gather(d, &active);
        for stable in [false, true] {
            assert_eq!(screen(d, &active, &s, &b, stable, None).unwrap().preserved, active);
        }
    }
}

#[test]
fn gap_sphere_shrinks_at_converged_pair() {
    let a = common::random_dense(20, 50, 6);
    let y = common::sparse_signal(&a, 0.05, 7);
    let lambda = 0.3 * lambda_max(&a, &y).unwrap();
    let o = common::solve(&a, &y, lambda, 1e-13);
    let seq = ApproxSequence::exact_only(Arc::new(a.clone()));
    let d = seq.get(0);
    let active: Vec<usize> = (0..50).collect();
    let p = LassoProblem::new(&a, &y, lambda).unwrap();
    let rho = p.residual(&o.x);
    let corr = a.adjoint_matvec(&rho).unwrap();
    let dp = dual_point_dynamic(d, &active, &rho, &corr, &vec![0.0; 50], &y, lambda).unwrap();
    let x_l1: f64 = o.x.iter().map(|v| v.abs()).sum();
    let primal = 0.5 * dot(&rho, &rho) + lambda * x_l1;
    let inputs = SphereInputs {
        y: &y,
        lambda,
        lambda_max: 0.0,
        dual: &dp,
        primal,
        residual_norm: norm2(&rho),
        x_l1,
        operator_error: 0.0,
    };
    let gap = primal - fastl1_core::solver::dual_value(&dp.theta_tilde, &y, lambda);
    assert!(gap <= lambda * lambda * 1e-8 / 2.0);
    assert!(build_sphere(Rule::Gap, &inputs).radius <= 1e-4);
}

fn rule_inputs_for(seed: u64, ratio: f64) -> (Vec<f64>, f64, Arc<DenseDictionary>) {
    let a = Arc::new(common::random_dense(12, 25, seed));
    let y = common::random_vec(12, seed + 1);
    let lambda = ratio * lambda_max(a.as_ref(), &y).unwrap();
    (y, lambda, a)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn stable_lambda_max_dominates(seed in 0u64..5000) {
        let (a, seq) = small_sequence(seed);
        let y = common::sparse_signal(&a, 0.05, seed + 11);
        let lmax = lambda_max(a.as_ref(), &y).unwrap();
        for d in seq.iter() {
            prop_assert!(stable_lambda_max(d, &y).unwrap() >= lmax - 1e-12);
        }
        prop_assert_eq!(stable_lambda_max(seq.get(seq.last_index()), &y).unwrap(), lmax);
    }

    #[test]
    fn dual_points_are_feasible(seed in 0u64..5000, ratio in 0.05f64..1.0) {
        let (a, seq) = small_sequence(seed);
        let y = common::sparse_signal(&a, 0.05, seed + 3);
        let lambda = ratio * lambda_max(a.as_ref(), &y).unwrap();
        let x = common::random_vec(120, seed + 4).iter().map(|v| if v.abs() > 1.5 { *v } else { 0.0 }).collect::<Vec<_>>();
        let active: Vec<usize> = (0..120).collect();
        for d in seq.iter() {
            let mut rho = d.matvec(&x).unwrap();
            rho.iter_mut().zip(&y).for_each(|(r, yi)| *r = yi - *r);
            let corr = d.adjoint_matvec(&rho).unwrap();
            let dp = dual_point_dynamic(d, &active, &rho, &corr, d.atom_error_bounds(), &y, lambda).unwrap();
            prop_assert!(norm_inf(&a.adjoint_matvec(&dp.theta_prime).unwrap()) <= 1.0 + 1e-12);
            prop_assert!(norm_inf(&d.adjoint_matvec(&dp.theta_prime).unwrap()) <= 1.0 + 1e-12);
            prop_assert!(norm_inf(&d.adjoint_matvec(&dp.theta_tilde).unwrap()) <= 1.0 + 1e-12);
            let z = common::random_vec(50, seed + 5);
            prop_assert!(norm_inf(&a.adjoint_matvec(&dual_scale(&z, a.as_ref()).unwrap()).unwrap()) <= 1.0 + 1e-12);
            let s = stable_dual_scale(&z, d).unwrap();
            prop_assert!(norm_inf(&a.adjoint_matvec(&s).unwrap()) <= 1.0 + 1e-12);
            prop_assert!(norm_inf(&d.adjoint_matvec(&s).unwrap()) <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn stable_rules_collapse_without_error(seed in 0u64..5000, ratio in 0.05f64..0.99) {
        let (y, lambda, a) = rule_inputs_for(seed, ratio);
        let seq = ApproxSequence::exact_only(a.clone());
        let d = seq.get(0);
        let active: Vec<usize> = (0..25).collect();
        let x: Vec<f64> = common::random_vec(25, seed + 2).iter().map(|v| v * 0.1).collect();
        let mut rho = d.matvec(&x).unwrap();
        rho.iter_mut().zip(&y).for_each(|(r, yi)| *r = yi - *r);
        let corr = d.adjoint_matvec(&rho).unwrap();
        let dp = dual_point_dynamic(d, &active, &rho, &corr, d.atom_error_bounds(), &y, lambda).unwrap();
        let x_l1: f64 = x.iter().map(|v| v.abs()).sum();
        let lmax = lambda_max(a.as_ref(), &y).unwrap();
        let inputs = |lm| SphereInputs {
            y: &y, lambda, lambda_max: lm, dual: &dp,
            primal: 0.5 * dot(&rho, &rho) + lambda * x_l1,
            residual_norm: norm2(&rho), x_l1, operator_error: d.operator_error_bound(),
        };
        let bounds = AtomBounds::gather(d, &active);
        for rule in [Rule::Static, Rule::Dynamic, Rule::Gap] {
            let stable_lm = stable_lambda_max(d, &y).unwrap();
            let conv = build_sphere(rule, &inputs(lmax));
            let stab = build_sphere(rule.stable(), &inputs(stable_lm));
            prop_assert!((conv.radius - stab.radius).abs() <= 1e-12);
            prop_assert!(conv.center.iter().zip(&stab.center).all(|(p, q)| (p - q).abs() <= 1e-12));
            let tc = screen(d, &active, &conv, &bounds, false, None).unwrap();
            let ts = screen(d, &active, &stab, &bounds, true, None).unwrap();
            prop_assert!(tc.test_values.iter().zip(&ts.test_values).all(|(p, q)| (p - q).abs() <= 1e-12));
        }
    }
}
