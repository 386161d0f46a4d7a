//! Discrete measures with strictly positive weights on `R^N`.
//!
//! A [`ParticleMeasure`] is the basic object of the whole crate: a finite
//! weighted point cloud. Reduction never moves points, so particle order and
//! particle indices are significant and preserved by every operation here;
//! downstream tie-breaking is defined in terms of the lowest original index.

use alloc::vec::Vec;

use crate::polybasis::MonomialBasis;

/// A finite discrete measure `sum_i lambda_i delta_{z_i}` on `R^N`.
///
/// Invariants enforced at construction:
/// - at least one particle, all in the same dimension `N >= 1`,
/// - all coordinates finite,
/// - all weights strictly positive and finite (zero weights are dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleMeasure {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    dim: usize,
}

impl ParticleMeasure {
    /// Builds a measure from points and weights.
    ///
    /// Particles with weight exactly `0.0` are dropped. Panics if the lists
    /// have mismatched lengths, a weight is negative or non-finite, a
    /// coordinate is non-finite, the dimension is zero, or no particle with
    /// positive weight remains.
    pub fn new(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Self {
        assert_eq!(
            points.len(),
            weights.len(),
            "points and weights must have equal length"
        );
        assert!(!points.is_empty(), "a measure needs at least one particle");
        let dim = points[0].len();
        assert!(dim >= 1, "particles must live in dimension >= 1");

        let mut kept_points = Vec::with_capacity(points.len());
        let mut kept_weights = Vec::with_capacity(weights.len());
        for (z, &w) in points.into_iter().zip(weights.iter()) {
            assert_eq!(z.len(), dim, "all particles must share one dimension");
            assert!(z.iter().all(|c| c.is_finite()), "coordinates must be finite");
            assert!(w.is_finite() && w >= 0.0, "weights must be finite and >= 0");
            if w > 0.0 {
                kept_points.push(z);
                kept_weights.push(w);
            }
        }
        assert!(
            !kept_points.is_empty(),
            "all weights were zero; a measure needs positive mass"
        );
        ParticleMeasure {
            points: kept_points,
            weights: kept_weights,
            dim,
        }
    }

    /// The point mass `delta_x` (weight one).
    pub fn dirac(x: Vec<f64>) -> Self {
        ParticleMeasure::new(alloc::vec![x], alloc::vec![1.0])
    }

    /// Number of particles in the support.
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least one particle by construction
    }

    /// Ambient dimension `N`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i]
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Total mass `sum_i lambda_i`. Strictly positive.
    pub fn total_mass(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Weighted mean of the points, `sum_i lambda_i z_i / sum_i lambda_i`.
    ///
    /// For a probability measure this is the centre of mass; for general
    /// positive mass the sum is normalized by the mass.
    pub fn center_of_mass(&self) -> Vec<f64> {
        let mass = self.total_mass();
        let mut com = alloc::vec![0.0; self.dim];
        for (z, &w) in self.points.iter().zip(self.weights.iter()) {
            for (c, &zi) in com.iter_mut().zip(z.iter()) {
                *c += w * zi;
            }
        }
        for c in com.iter_mut() {
            *c /= mass;
        }
        com
    }

    /// Law of the evaluation map `z -> (p_1(z), ..., p_n(z))`.
    ///
    /// Weights are untouched and particle `i` of the output is the basis
    /// evaluation at particle `i` of the input, so the index mapping back to
    /// the original support is the identity.
    pub fn pushforward_by_basis(&self, basis: &MonomialBasis) -> ParticleMeasure {
        assert_eq!(
            basis.dimension(),
            self.dim,
            "basis dimension must match the measure"
        );
        assert!(!basis.is_empty(), "cannot push forward by an empty basis");
        let points = self.points.iter().map(|z| basis.evaluate(z)).collect();
        ParticleMeasure {
            points,
            weights: self.weights.clone(),
            dim: basis.len(),
        }
    }

    /// Combines particles at max-norm distance `<= tol` into one.
    ///
    /// See [`merge_duplicates_indexed`](Self::merge_duplicates_indexed); this
    /// drops the index map.
    pub fn merge_duplicates(&self, tol: f64) -> ParticleMeasure {
        self.merge_duplicates_indexed(tol).0
    }

    /// Combines near-duplicate particles and reports where they came from.
    ///
    /// Points are sorted lexicographically and grouped by a linear scan: a
    /// point joins the current group when its max-norm distance to the group
    /// anchor is `<= tol`. Each group becomes one particle at the coordinates
    /// of its lowest-index member, with the group's summed weight. Output
    /// particles are ordered by that representative index, so `tol = 0` on
    /// distinct points is the identity.
    ///
    /// Returns `(merged, representative)` where `representative[j]` is the
    /// index in `self` of output particle `j`'s representative.
    pub fn merge_duplicates_indexed(&self, tol: f64) -> (ParticleMeasure, Vec<usize>) {
        assert!(tol >= 0.0 && tol.is_finite(), "tol must be finite and >= 0");
        let n = self.len();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            let (pa, pb) = (&self.points[a], &self.points[b]);
            pa.partial_cmp(pb).expect("finite coordinates are comparable")
        });

        // group[i] = id of the group particle i belongs to
        let mut group = alloc::vec![usize::MAX; n];
        let mut n_groups = 0usize;
        let mut anchor: usize = usize::MAX;
        for &i in &order {
            let is_new = anchor == usize::MAX || max_norm_dist(&self.points[anchor], &self.points[i]) > tol;
            if is_new {
                anchor = i;
                n_groups += 1;
            }
            group[i] = n_groups - 1;
        }

        // representative = lowest original index in the group
        let mut rep = alloc::vec![usize::MAX; n_groups];
        let mut mass = alloc::vec![0.0f64; n_groups];
        for i in 0..n {
            let g = group[i];
            if rep[g] == usize::MAX || i < rep[g] {
                rep[g] = i;
            }
        }
        // accumulate weights in ascending original-index order (deterministic)
        for i in 0..n {
            mass[group[i]] += self.weights[i];
        }

        let mut groups: Vec<usize> = (0..n_groups).collect();
        groups.sort_by_key(|&g| rep[g]);

        let mut points = Vec::with_capacity(n_groups);
        let mut weights = Vec::with_capacity(n_groups);
        let mut representative = Vec::with_capacity(n_groups);
        for &g in &groups {
            points.push(self.points[rep[g]].clone());
            weights.push(mass[g]);
            representative.push(rep[g]);
        }
        (
            ParticleMeasure {
                points,
                weights,
                dim: self.dim,
            },
            representative,
        )
    }

    /// New measure keeping the listed particles with the given weights.
    ///
    /// Used by the reduction algorithms to materialize an index-subset
    /// support; weights of exactly zero are dropped as usual.
    pub fn select(&self, indices: &[usize], weights: &[f64]) -> ParticleMeasure {
        assert_eq!(indices.len(), weights.len());
        let points = indices.iter().map(|&i| self.points[i].clone()).collect();
        ParticleMeasure::new(points, weights.to_vec())
    }
}

fn max_norm_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polybasis::MonomialBasis;
    use alloc::vec;

    fn m1(points: &[f64], weights: &[f64]) -> ParticleMeasure {
        ParticleMeasure::new(
            points.iter().map(|&x| vec![x]).collect(),
            weights.to_vec(),
        )
    }

    #[test]
    fn total_mass_examples() {
        assert_eq!(m1(&[0.0, 1.0], &[0.5, 0.5]).total_mass(), 1.0);
        assert_eq!(m1(&[3.0], &[2.0]).total_mass(), 2.0);
        let m = m1(&[0.0, 1.0, 2.0, 3.0], &[0.1, 0.2, 0.3, 0.4]);
        assert!((m.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn center_of_mass_examples() {
        let com = m1(&[0.0, 2.0], &[0.5, 0.5]).center_of_mass();
        assert_eq!(com, vec![1.0]);

        let m = ParticleMeasure::new(
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, -1.0]],
            vec![1.0 / 3.0; 3],
        );
        let com = m.center_of_mass();
        assert!(com[0].abs() < 1e-16 && com[1].abs() < 1e-16);

        // 0*0.1 + 1*0.2 + 2*0.3 + 4*0.4 = 2.4
        let m = m1(&[0.0, 1.0, 2.0, 4.0], &[0.1, 0.2, 0.3, 0.4]);
        assert!((m.center_of_mass()[0] - 2.4).abs() < 1e-15);
    }

    #[test]
    fn zero_weights_dropped_on_construction() {
        let m = m1(&[0.0, 1.0, 2.0], &[0.5, 0.0, 0.5]);
        assert_eq!(m.len(), 2);
        assert_eq!(m.points(), &[vec![0.0], vec![2.0]]);
    }

    #[test]
    #[should_panic]
    fn negative_weight_rejected() {
        let _ = m1(&[0.0], &[-1.0]);
    }

    #[test]
    fn pushforward_examples() {
        // identity basis {x}
        let b = MonomialBasis::new(1, 1, &[0.0], 1.0);
        let m = m1(&[3.0, 5.0], &[0.5, 0.5]);
        let p = m.pushforward_by_basis(&b);
        assert_eq!(p.points(), &[vec![3.0], vec![5.0]]);
        assert_eq!(p.weights(), m.weights());

        // {x, x^2} on {-1, 2}
        let b = MonomialBasis::new(1, 2, &[0.0], 1.0);
        let p = m1(&[-1.0, 2.0], &[0.5, 0.5]).pushforward_by_basis(&b);
        assert_eq!(p.points(), &[vec![-1.0, 1.0], vec![2.0, 4.0]]);

        // {x^2} on {-1, 1}: collision
        let b = MonomialBasis::with_exponents(1, &[vec![2]], &[0.0], 1.0);
        let p = m1(&[-1.0, 1.0], &[0.5, 0.5]).pushforward_by_basis(&b);
        assert_eq!(p.points(), &[vec![1.0], vec![1.0]]);
    }

    #[test]
    fn merge_duplicates_examples() {
        // 1 + 1e-16 rounds to 1.0 in f64: exact duplicate
        let m = m1(&[1.0, 1.0 + 1e-16, 2.0], &[0.2, 0.3, 0.5]);
        let merged = m.merge_duplicates(1e-12);
        assert_eq!(merged.points(), &[vec![1.0], vec![2.0]]);
        assert!((merged.weight(0) - 0.5).abs() < 1e-16);
        assert!((merged.weight(1) - 0.5).abs() < 1e-16);

        // tol 0, distinct points: unchanged
        let m = m1(&[3.0, 1.0, 2.0], &[0.2, 0.3, 0.5]);
        assert_eq!(m.merge_duplicates(0.0), m);

        let m = ParticleMeasure::new(
            vec![vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 1.0]],
            vec![0.25, 0.25, 0.5],
        );
        let merged = m.merge_duplicates(0.0);
        assert_eq!(merged.len(), 2);
        assert_eq!(merged.weights(), &[0.5, 0.5]);
        assert_eq!(merged.points()[0], vec![0.0, 0.0]);
    }

    #[test]
    fn merge_is_idempotent_and_mass_preserving() {
        let m = m1(&[1.0, 1.0, 1.0 + 1e-13, 5.0, 5.0], &[0.1, 0.2, 0.3, 0.15, 0.25]);
        let once = m.merge_duplicates(1e-12);
        let twice = once.merge_duplicates(1e-12);
        assert_eq!(once, twice);
        assert!((once.total_mass() - m.total_mass()).abs() < 1e-15);
    }

    #[test]
    fn merge_keeps_lowest_index_representative_order() {
        // representatives 0 (group {0, 2}) and 1 (group {1}), in that order
        let m = m1(&[7.0, 3.0, 7.0], &[0.25, 0.5, 0.25]);
        let (merged, reps) = m.merge_duplicates_indexed(0.0);
        assert_eq!(reps, vec![0, 1]);
        assert_eq!(merged.points(), &[vec![7.0], vec![3.0]]);
        assert_eq!(merged.weights(), &[0.5, 0.5]);
    }

    #[test]
    fn com_of_pushforward_matches_moment_sums() {
        let b = MonomialBasis::new(2, 3, &[0.1, -0.2], 1.5);
        let m = ParticleMeasure::new(
            vec![
                vec![0.3, 1.2],
                vec![-0.7, 0.4],
                vec![2.0, -1.0],
                vec![0.0, 0.0],
            ],
            vec![0.1, 0.4, 0.2, 0.3],
        );
        let p = m.pushforward_by_basis(&b);
        let com = p.center_of_mass();
        for (j, c) in com.iter().enumerate() {
            let direct: f64 = m
                .points()
                .iter()
                .zip(m.weights())
                .map(|(z, &w)| w * b.evaluate(z)[j])
                .sum();
            assert!((c - direct / m.total_mass()).abs() < 1e-14);
        }
    }
}
