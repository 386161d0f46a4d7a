//! Time partitions, localization-radius schedules and the recombination
//! cost model for the iterated method.

use alloc::vec::Vec;

/// A partition `0 = t_0 < ... < t_k = T` with its step lengths
/// `s_j = t_j - t_{j-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub times: Vec<f64>,
    pub steps: Vec<f64>,
}

/// The uneven family `t_j = T (1 - (1 - j/k)^gamma)`: steps shrink towards
/// `T` for `gamma > 1` and the partition is uniform at `gamma = 1`.
pub fn make_partition(t_final: f64, k: usize, gamma: f64) -> Partition {
    assert!(t_final > 0.0 && t_final.is_finite());
    assert!(k >= 1);
    assert!(gamma > 0.0 && gamma.is_finite());
    let times: Vec<f64> = (0..=k)
        .map(|j| t_final * (1.0 - libm::pow(1.0 - j as f64 / k as f64, gamma)))
        .collect();
    let steps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    for s in &steps {
        assert!(*s > 0.0, "partition is not strictly increasing");
    }
    Partition { times, steps }
}

/// `ceil(m / p)` for positive integers.
pub fn ceil_div(m: u32, p: u32) -> u32 {
    (m + p - 1) / p
}

/// Radius schedule `u_j = s_j^(p/2 - a)`, `a = (p - 1) / (2 (ceil(m/p) + 1))`,
/// for the interior steps `j = 2, ..., k-1`.
///
/// `steps` is the full list `s_1, ..., s_k`; the result has length `k - 2`
/// (empty when `k <= 2`, where no recombination happens).
pub fn radius_schedule_example1(steps: &[f64], p: u32, m: u32) -> Vec<f64> {
    assert!(p >= 1 && m >= 1);
    let a = (p as f64 - 1.0) / (2.0 * (ceil_div(m, p) as f64 + 1.0));
    let exponent = p as f64 / 2.0 - a;
    interior(steps).map(|s| libm::pow(s, exponent)).collect()
}

/// Mismatched degrees for the matched-error schedule, which requires the
/// reduction degree to equal the cubature degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeMismatch {
    pub cubature_degree: u32,
    pub reduction_degree: u32,
}

impl core::fmt::Display for DegreeMismatch {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "the matched-error radius schedule requires m = r (got m = {}, r = {})",
            self.cubature_degree, self.reduction_degree
        )
    }
}

impl core::error::Error for DegreeMismatch {}

/// Radius schedule `u_j = (s_j^(m+1) / (T - t_j)^(m - r p))^(1 / (2 (r+1)))`
/// for the interior steps, matching the reduction error to the one-step
/// cubature error. Requires `m = r`.
///
/// `steps` is `s_1, ..., s_k` and `times` is `t_0, ..., t_k`.
pub fn radius_schedule_example2(
    steps: &[f64],
    times: &[f64],
    t_final: f64,
    m: u32,
    r: u32,
    p: u32,
) -> Result<Vec<f64>, DegreeMismatch> {
    if m != r {
        return Err(DegreeMismatch {
            cubature_degree: m,
            reduction_degree: r,
        });
    }
    assert_eq!(times.len(), steps.len() + 1);
    assert!(p >= 1);
    let exponent = 1.0 / (2.0 * (r as f64 + 1.0));
    let power = m as f64 - (r * p) as f64;
    Ok(interior(steps)
        .zip(times[2..times.len() - 1].iter())
        .map(|(s, &t_j)| {
            let remaining = t_final - t_j;
            assert!(remaining > 0.0, "interior time at or beyond the horizon");
            libm::pow(libm::pow(s, m as f64 + 1.0) / libm::pow(remaining, power), exponent)
        })
        .collect())
}

/// The interior steps `s_2, ..., s_{k-1}`; empty for `k <= 2`.
fn interior(steps: &[f64]) -> impl Iterator<Item = f64> + '_ {
    let k = steps.len();
    let range = if k > 2 { 1..k - 1 } else { 0..0 };
    steps[range].iter().copied()
}

/// `C(r + N, N)` as a float.
fn patch_functions(n_dim: usize, r: u32) -> f64 {
    crate::polybasis::full_polynomial_space_dim(n_dim, r) as f64
}

/// Order-of-magnitude operation count of one localized recombination:
/// `(D/delta)^N C(r+N, N)^4 log2(n_hat) + n_hat C(r+N, N)`.
///
/// The logarithm is base two, matching the round count of the hierarchical
/// algorithm that the term models.
pub fn cost_model(diameter: f64, delta: f64, n_dim: usize, r: u32, n_hat: usize) -> f64 {
    assert!(diameter > 0.0 && delta > 0.0 && n_dim >= 1 && n_hat >= 1);
    let balls = libm::pow(diameter / delta, n_dim as f64);
    let c = patch_functions(n_dim, r);
    balls * c * c * c * c * libm::log2(n_hat as f64) + n_hat as f64 * c
}

/// Radius delivering integration error `eps` for a degree-`r` reduction
/// when the relevant derivative bound is `c_next`:
/// `delta = (eps (r+1)! / c_next)^(1/(r+1))`.
pub fn delta_for_error(eps: f64, r: u32, c_next: f64) -> f64 {
    assert!(eps > 0.0 && c_next > 0.0);
    let mut factorial = 1.0f64;
    for i in 2..=(r + 1) {
        factorial *= i as f64;
    }
    libm::pow(eps * factorial / c_next, 1.0 / (r as f64 + 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn uniform_partition_at_gamma_one() {
        let p = make_partition(2.0, 4, 1.0);
        for (j, t) in p.times.iter().enumerate() {
            assert!((t - 0.5 * j as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn quadratic_partition_values() {
        let p = make_partition(1.0, 2, 2.0);
        assert_eq!(p.times, vec![0.0, 0.75, 1.0]);

        let p = make_partition(1.0, 4, 2.0);
        let expect = [0.0, 7.0 / 16.0, 3.0 / 4.0, 15.0 / 16.0, 1.0];
        for (t, e) in p.times.iter().zip(expect.iter()) {
            assert!((t - e).abs() < 1e-15);
        }
        assert!((p.steps.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn example1_exponents() {
        // p = 1: a = 0, u = sqrt(s)
        let steps = [0.4, 0.3, 0.2, 0.1];
        let u = radius_schedule_example1(&steps, 1, 3);
        assert_eq!(u.len(), 2);
        assert!((u[0] - libm::sqrt(0.3)).abs() < 1e-15);
        assert!((u[1] - libm::sqrt(0.2)).abs() < 1e-15);

        // p = 2, m = 3: ceil(3/2) = 2, a = 1/6, exponent 5/6
        let u = radius_schedule_example1(&steps, 2, 3);
        assert!((u[0] - libm::pow(0.3, 5.0 / 6.0)).abs() < 1e-15);

        // s = 1 gives u = 1 for any p, m
        let u = radius_schedule_example1(&[1.0, 1.0, 1.0], 7, 5);
        assert_eq!(u, vec![1.0]);
    }

    #[test]
    fn example2_matched_schedule() {
        // m = r, p = 1: m - rp = 0, u = s^((m+1)/(2(r+1))) = sqrt(s)
        let steps = [0.5, 0.25, 0.25];
        let times = [0.0, 0.5, 0.75, 1.0];
        let u = radius_schedule_example2(&steps, &times, 1.0, 3, 3, 1).unwrap();
        assert_eq!(u.len(), 1);
        assert!((u[0] - libm::sqrt(0.25)).abs() < 1e-15);

        // pinned arithmetic: s = 1/4, T - t = 1/2, m = r = 3, p = 1
        // u = ((1/4)^4 / (1/2)^0)^(1/8) = 1/2
        let u = radius_schedule_example2(
            &[0.25, 0.25, 0.5],
            &[0.0, 0.25, 0.5, 1.0],
            1.0,
            3,
            3,
            1,
        )
        .unwrap();
        assert!((u[0] - 0.5).abs() < 1e-15);

        assert!(radius_schedule_example2(&steps, &times, 1.0, 3, 2, 1).is_err());
    }

    #[test]
    fn example2_shrinks_with_steps() {
        let m = 3;
        let mut prev = f64::INFINITY;
        for s in [0.4, 0.2, 0.1, 0.05] {
            let u = radius_schedule_example2(&[0.1, s, 0.1], &[0.0, 0.1, 0.1 + s, 0.2 + s], 1.0, m, m, 2)
                .unwrap();
            assert!(u[0] < prev);
            prev = u[0];
        }
    }

    #[test]
    fn cost_model_values() {
        // D=10, delta=1, N=2, r=2, n_hat=1000:
        // 100 * 6^4 * log2(1000) + 1000 * 6
        let c = cost_model(10.0, 1.0, 2, 2, 1000);
        let expect = 100.0 * 1296.0 * libm::log2(1000.0) + 6000.0;
        assert!((c - expect).abs() < 1e-9 * expect);

        // delta = D: single patch
        let c = cost_model(3.0, 3.0, 4, 2, 1 << 10);
        let functions = 15.0; // C(6, 4)
        assert!((c - (functions * functions * functions * functions * 10.0 + 1024.0 * functions)).abs() < 1e-9);
    }

    #[test]
    fn delta_for_error_value() {
        // eps = 1e-4, r = 1, c_2 = 2: (1e-4 * 2 / 2)^(1/2) = 0.01
        assert!((delta_for_error(1e-4, 1, 2.0) - 0.01).abs() < 1e-15);
    }
}
