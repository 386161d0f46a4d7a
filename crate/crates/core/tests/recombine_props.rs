//! Randomized and property tests for the reduction engine: mass and moment
//! preservation, exact index-subset supports, round counts, and agreement
//! between the two algorithms at the moment level.

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use recomb_core::polybasis::MonomialBasis;
use recomb_core::recombine::{
    moment_sums, reduce_algorithm1, reduce_algorithm2, reduce_algorithm2_indexed,
    reduce_measure_indexed, ReductionAlgorithm,
};
use recomb_core::ParticleMeasure;

fn random_measure(rng: &mut ChaCha8Rng, n_hat: usize, dim: usize, spread: f64) -> ParticleMeasure {
    let points: Vec<Vec<f64>> = (0..n_hat)
        .map(|_| (0..dim).map(|_| rng.gen_range(-spread..spread)).collect())
        .collect();
    let weights: Vec<f64> = (0..n_hat).map(|_| rng.gen_range(0.05..1.0)).collect();
    ParticleMeasure::new(points, weights)
}

fn max_rel_moment_gap(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs() / x.abs().max(1.0))
        .fold(0.0, f64::max)
}

#[test]
fn randomized_reductions_preserve_mass_and_moments() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for (n_hat, dim, degree) in [
        (200usize, 1usize, 3u32),
        (500, 2, 2),
        (300, 3, 4),
        (2000, 5, 1),
        (2000, 8, 2),
        (10_000, 5, 2),
    ] {
        let mu = random_measure(&mut rng, n_hat, dim, 1.5);
        let center = vec![0.0; dim];
        let basis = MonomialBasis::new(dim, degree, &center, 1.5);
        let before = moment_sums(&mu, &basis);
        for alg in [ReductionAlgorithm::Algorithm1, ReductionAlgorithm::Algorithm2] {
            // Algorithm 1 walks the full support one particle at a time;
            // keep it off the largest instance.
            if alg == ReductionAlgorithm::Algorithm1 && n_hat > 2000 {
                continue;
            }
            let (red, indices, report) = reduce_measure_indexed(&mu, &basis, alg).unwrap();
            assert!(red.len() <= basis.len() + 1, "support bound violated");
            assert!(red.weights().iter().all(|&w| w > 0.0));
            let mass_gap = (red.total_mass() - mu.total_mass()).abs() / mu.total_mass();
            assert!(mass_gap < 1e-12, "mass gap {mass_gap:e}");
            let after = moment_sums(&red, &basis);
            let gap = max_rel_moment_gap(&before, &after);
            assert!(gap < 1e-8, "{alg:?} n_hat={n_hat} dim={dim}: moment gap {gap:e}");
            assert!(report.max_moment_error < 1e-8);
            // exact index-subset support
            for (i, &k) in indices.iter().enumerate() {
                assert_eq!(red.point(i), mu.point(k));
            }
        }
    }
}

#[test]
fn algorithms_agree_at_the_moment_level() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..5 {
        let mu = random_measure(&mut rng, 300, 2, 2.0);
        let basis = MonomialBasis::new(2, 2, &[0.0, 0.0], 2.0);
        let (r1, _) = recomb_core::recombine::reduce_measure(&mu, &basis, ReductionAlgorithm::Algorithm1).unwrap();
        let (r2, _) = recomb_core::recombine::reduce_measure(&mu, &basis, ReductionAlgorithm::Algorithm2).unwrap();
        let m1 = moment_sums(&r1, &basis);
        let m2 = moment_sums(&r2, &basis);
        assert!(max_rel_moment_gap(&m1, &m2) < 2e-8);
    }
}

#[test]
fn round_count_on_power_of_two_family() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for n in [2usize, 5, 10] {
        for j in 1..=7u32 {
            let n_hat = n << j;
            let mu = random_measure(&mut rng, n_hat, n, 1.0);
            let (red, _, report) = reduce_algorithm2_indexed(&mu).unwrap();
            assert_eq!(
                report.procedure_a_calls, j as usize,
                "n={n} n_hat={n_hat}: expected {j} rounds"
            );
            assert!(red.len() <= n + 1);
        }
    }
}

#[test]
fn degenerate_geometry_reduces_below_ambient_bound() {
    // points on a line in R^3: affine dimension 1 caps the support at 2
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    let points: Vec<Vec<f64>> = (0..50)
        .map(|_| {
            let t: f64 = rng.gen_range(-1.0..1.0);
            vec![1.0 + t, 2.0 - 0.5 * t, t]
        })
        .collect();
    let weights = vec![0.02; 50];
    let mu = ParticleMeasure::new(points, weights);
    let com = mu.center_of_mass();
    for result in [reduce_algorithm1(&mu).unwrap(), reduce_algorithm2(&mu).unwrap()] {
        let (red, _) = result;
        assert!(red.len() <= 2, "affine refinement should cap at 2, got {}", red.len());
        let new_com = red.center_of_mass();
        for (a, b) in new_com.iter().zip(com.iter()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn reduction_postconditions_hold(
        seed in 0u64..1000,
        n_hat in 10usize..400,
        dim in 1usize..5,
        degree in 1u32..4,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(&mut rng, n_hat, dim, 1.0);
        let basis = MonomialBasis::new(dim, degree, &vec![0.0; dim], 1.0);
        let before = moment_sums(&mu, &basis);
        let (red, indices, _) =
            reduce_measure_indexed(&mu, &basis, ReductionAlgorithm::Algorithm2).unwrap();

        prop_assert!(red.len() <= basis.len() + 1);
        prop_assert!(red.weights().iter().all(|&w| w > 0.0));
        prop_assert!((red.total_mass() - mu.total_mass()).abs() / mu.total_mass() < 1e-12);
        let after = moment_sums(&red, &basis);
        prop_assert!(max_rel_moment_gap(&before, &after) < 1e-8);
        for (i, &k) in indices.iter().enumerate() {
            prop_assert_eq!(red.point(i), mu.point(k));
        }
    }

    #[test]
    fn merge_duplicates_is_idempotent(
        seed in 0u64..1000,
        n_hat in 1usize..60,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // coarse lattice coordinates force plenty of exact duplicates
        let points: Vec<Vec<f64>> = (0..n_hat)
            .map(|_| vec![rng.gen_range(-2i32..3) as f64, rng.gen_range(-2i32..3) as f64])
            .collect();
        let weights: Vec<f64> = (0..n_hat).map(|_| rng.gen_range(0.1..1.0)).collect();
        let mu = ParticleMeasure::new(points, weights);
        let once = mu.merge_duplicates(0.0);
        let twice = once.merge_duplicates(0.0);
        prop_assert_eq!(&once, &twice);
        prop_assert!((once.total_mass() - mu.total_mass()).abs() < 1e-12 * mu.total_mass());
    }

    #[test]
    fn center_of_mass_is_translation_equivariant(
        seed in 0u64..1000,
        shift in -5.0f64..5.0,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mu = random_measure(&mut rng, 40, 3, 1.0);
        let shifted = ParticleMeasure::new(
            mu.points()
                .iter()
                .map(|p| p.iter().map(|x| x + shift).collect())
                .collect(),
            mu.weights().to_vec(),
        );
        let a = mu.center_of_mass();
        let b = shifted.center_of_mass();
        for (x, y) in a.iter().zip(b.iter()) {
            prop_assert!((x + shift - y).abs() < 1e-12);
        }
    }
}
