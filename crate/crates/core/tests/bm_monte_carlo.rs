//! Monte-Carlo validation of the Brownian expected-signature oracle.
//!
//! Brownian paths are simulated on a uniform grid and their piecewise-linear
//! interpolations pushed through the (independently quadrature-checked)
//! signature code; sample means of the word coefficients estimate the
//! expected Stratonovich iterated integrals. The fast test is a seeded guard
//! that runs on every `cargo test`; the `#[ignore]`d test is the full
//! million-path validation (run it in release mode).

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use recomb_core::cubature::{
    bm_expected_iterated_integrals, signature, word_degree, words_up_to_degree, BVPath, Segment,
};

struct WordStats {
    word: Vec<u8>,
    sum: f64,
    sum_sq: f64,
}

/// Mean and stderr of each word coefficient over `n_paths` simulated
/// Brownian paths with `grid` segments on `[0, 1]`.
fn simulate(d: usize, depth: usize, n_paths: usize, grid: usize, seed: u64) -> Vec<WordStats> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let words = words_up_to_degree(d, depth);
    let mut stats: Vec<WordStats> = words
        .iter()
        .map(|w| WordStats {
            word: w.clone(),
            sum: 0.0,
            sum_sq: 0.0,
        })
        .collect();

    let dt = 1.0 / grid as f64;
    let sd = dt.sqrt();
    for _ in 0..n_paths {
        let segments: Vec<Segment> = (0..grid)
            .map(|_| Segment {
                duration: dt,
                increment: (0..d)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        sd * z
                    })
                    .collect(),
            })
            .collect();
        let sig = signature(&BVPath::new(d, segments), depth);
        for s in stats.iter_mut() {
            let c = sig.coeff(&s.word);
            s.sum += c;
            s.sum_sq += c * c;
        }
    }
    stats
}

fn check_against_oracle(d: usize, stats: &[WordStats], n_paths: usize, abs_tol: f64) {
    let expected = bm_expected_iterated_integrals(d, 4, 1.0).unwrap();
    for s in stats {
        let mean = s.sum / n_paths as f64;
        let var = (s.sum_sq / n_paths as f64 - mean * mean).max(0.0);
        let stderr = (var / n_paths as f64).sqrt();
        let target = expected.coeff(&s.word);
        let tol = abs_tol.max(5.0 * stderr);
        assert!(
            (mean - target).abs() <= tol,
            "d={d} word {:?} (degree {}): mc {mean:.5} vs oracle {target:.5} (stderr {stderr:.1e})",
            s.word,
            word_degree(&s.word),
        );
    }
}

#[test]
fn bm_oracle_monte_carlo_guard() {
    // quick seeded sanity check: catches any misplaced generator term
    let n = 40_000;
    let stats = simulate(1, 4, n, 64, 2024);
    check_against_oracle(1, &stats, n, 0.02);

    let n2 = 10_000;
    let stats2 = simulate(2, 4, n2, 48, 2025);
    check_against_oracle(2, &stats2, n2, 0.04);
}

/// Full validation: one million paths, agreement to about three digits on
/// every word of degree at most four. Run with
/// `cargo test -p recomb-core --release -- --ignored bm_oracle_monte_carlo_full`.
#[test]
#[ignore]
fn bm_oracle_monte_carlo_full() {
    let n = 1_000_000;
    let stats = simulate(1, 4, n, 512, 90210);
    check_against_oracle(1, &stats, n, 2.5e-3);

    let stats2 = simulate(2, 4, n, 128, 90211);
    check_against_oracle(2, &stats2, n, 2.5e-3);
}
