mod common;

use common::{dense_max, mixed_instance};
use htmax::construct::{from_elementary, random_ht};
use htmax::maxnorm::{
    adaptive_maxnorm, power_iteration_rayleigh, power_iteration_ritz, IterationConfig, Truncation,
};
use htmax::oracle::{dense_maxnorm_argmax, densify};
use htmax::{binary_search_argmax, search_iteration_bound, Algorithm};

fn exact(iters: usize) -> IterationConfig {
    IterationConfig {
        max_iters: iters,
        truncation: Truncation::Exact,
        ..IterationConfig::default()
    }
}

#[test]
fn every_algorithm_stays_below_the_maximum() {
    for i in 0..12 {
        let a = mixed_instance(900 + i, 2_000);
        let truth = dense_max(&a);
        for alg in [
            Algorithm::Rayleigh,
            Algorithm::PowerIteration,
            Algorithm::Ritz,
            Algorithm::Squaring,
            Algorithm::Adaptive,
        ] {
            let est = alg.run(&a, &exact(20)).unwrap();
            assert!(
                est.value <= truth * (1.0 + 1e-10),
                "{alg:?} instance {i}: {} > {truth}",
                est.value
            );
        }
    }
}

#[test]
fn ritz_dominates_rayleigh_quotients() {
    let cfg = IterationConfig {
        ritz_every_step: true,
        ..exact(15)
    };
    for seed in 0..6 {
        let a = random_ht(3, 5, 2, 40 + seed).unwrap();
        let ritz = power_iteration_ritz(&a, &cfg).unwrap();
        let ray = power_iteration_rayleigh(&a, &cfg).unwrap();
        for (r, q) in ritz.trace.records.iter().zip(&ray.trace.records) {
            assert!(
                r.estimate >= q.estimate - 1e-10,
                "step {}: {} < {}",
                r.iter,
                r.estimate,
                q.estimate
            );
        }
    }
}

#[test]
fn adaptive_is_exact_on_rank_one() {
    let a = from_elementary(&[vec![0.5, -2.0, 1.0], vec![3.0, 1.0]]).unwrap();
    let est = adaptive_maxnorm(&a, &IterationConfig::default()).unwrap();
    assert!((est.value - 6.0).abs() < 1e-12);
}

#[test]
fn argmax_agrees_with_dense_oracle() {
    for i in 0..10 {
        let a = mixed_instance(950 + i, 5_000);
        let (truth, _) = dense_maxnorm_argmax(&densify(&a).unwrap()).unwrap();
        let r = binary_search_argmax(&a, &IterationConfig::default()).unwrap();
        assert_eq!(r.value, a.entry(&r.index).unwrap());
        assert!(r.iterations_used <= search_iteration_bound(a.mode_sizes()));
        if (r.estimated_maxnorm - truth).abs() < 1e-6 * truth {
            assert!(
                (r.value.abs() - truth).abs() <= 1e-12 * truth,
                "instance {i}: {} vs {truth}",
                r.value
            );
        }
    }
}

#[test]
fn csv_trace_has_one_row_per_record() {
    let a = random_ht(3, 4, 2, 3).unwrap();
    let est = Algorithm::Squaring.run(&a, &exact(10)).unwrap();
    let csv = est.trace.to_csv();
    assert_eq!(csv.lines().count(), est.trace.records.len() + 1);
    assert!(csv.starts_with("iter,estimate"));
}
