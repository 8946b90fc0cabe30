//! Property tests over generated problems. Each case integrates an ODE and
//! scans it, so case counts are kept small.

use morse_sturm::focal::{self, FocalScan};
use morse_sturm::problem::{self, Perturbation, Targets};
use morse_sturm::{solver, MetricForm, MorseSturmProblem, Tolerances};
use proptest::prelude::*;

fn tol() -> Tolerances {
    Tolerances::default()
}

fn scan(p: &MorseSturmProblem) -> FocalScan {
    focal::scan_problem(p, &tol()).expect("scan succeeds")
}

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig { cases, ..ProptestConfig::default() }
}

proptest! {
    #![proptest_config(config(24))]

    #[test]
    fn positive_definite_signature_equals_multiplicity(seed in 0u64..10_000) {
        let p = problem::random_riemannian(seed);
        let s = scan(&p);
        for f in &s.instants {
            prop_assert_eq!(f.signature, f.multiplicity as i64, "t = {}", f.t);
        }
        if !s.endpoint_focal {
            let total: usize = s.instants.iter().map(|f| f.multiplicity).sum();
            prop_assert_eq!(focal::maslov_index(&s).unwrap(), total as i64);
        }
    }

    #[test]
    fn instants_are_consistent(seed in 0u64..10_000) {
        let p = problem::random_lorentzian(seed);
        let s = scan(&p);
        for w in s.instants.windows(2) {
            prop_assert!(w[0].t < w[1].t);
        }
        for f in &s.instants {
            prop_assert!(f.t > 0.0 && f.t <= 1.0);
            prop_assert!(f.multiplicity >= 1);
            prop_assert_eq!(f.jperp_basis.ncols(), f.multiplicity);
            prop_assert_eq!(f.kernel_basis.ncols(), f.multiplicity);
            prop_assert!(f.signature.unsigned_abs() as usize <= f.multiplicity);
        }
    }

    #[test]
    fn signature_prefix_sums_are_nonnegative(seed in 0u64..10_000) {
        let p = problem::random_lorentzian(seed);
        let s = scan(&p);
        prop_assume!(s.instants.iter().all(|f| !f.degenerate));
        let mut partial = 0i64;
        for f in &s.instants {
            partial += f.signature;
            prop_assert!(partial >= 0, "prefix sum {} at t = {}", partial, f.t);
        }
    }

    #[test]
    fn scaling_the_metric_changes_nothing(seed in 0u64..10_000, c in 0.1f64..10.0) {
        let p = problem::random_lorentzian(seed);
        let mut q = p.clone();
        q.g = MetricForm::new(p.g.entries() * c).unwrap();
        let (a, b) = (scan(&p), scan(&q));
        prop_assert_eq!(a.instants.len(), b.instants.len());
        for (x, y) in a.instants.iter().zip(&b.instants) {
            prop_assert!((x.t - y.t).abs() < 1e-6);
            prop_assert_eq!(x.multiplicity, y.multiplicity);
            prop_assert_eq!(x.signature, y.signature);
        }
    }

    #[test]
    fn wronskian_is_conserved(seed in 0u64..10_000) {
        let p = problem::random_lorentzian(seed);
        let fund = solver::solve_fundamental(&p, &tol()).unwrap();
        let scale = fund.samples().map(|(_, m, mp)| m.amax().max(mp.amax())).fold(1.0, f64::max);
        prop_assert!(solver::wronskian_drift(&fund, &p.g) < 1e-8 * scale * scale);
    }

    #[test]
    fn perturbation_stays_small_and_valid(seed in 0u64..10_000, eps in 1e-6f64..1e-3) {
        let p = problem::random_lorentzian(seed);
        let q = problem::perturb(&p, &Perturbation { eps, seed, targets: Targets::ALL }, &tol()).unwrap();
        prop_assert!(problem::coefficient_distance(&p, &q, 64) <= eps * (1.0 + 1e-12));
        prop_assert!(problem::validate(&q, &tol()).is_empty());
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn timelike_2d_problems_have_no_focal_instants(seed in 0u64..10_000, lambda in -2.0f64..2.0) {
        let p = problem::generate_timelike_2d(&problem::random_timelike_curve(seed), lambda).unwrap();
        let s = scan(&p);
        prop_assert!(s.instants.is_empty(), "instants at {:?}", s.instants.iter().map(|f| f.t).collect::<Vec<_>>());
    }
}
