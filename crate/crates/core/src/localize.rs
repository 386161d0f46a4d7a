//! Localization: split a measure into patches supported in radius-`u`
//! balls, reduce each patch against a degree-`r` basis centered on the
//! patch, and reassemble.
//!
//! Patches come from axis-aligned grid cells of side `2u / sqrt(N)`, so a
//! whole cell fits inside a ball of radius `u` around its geometric center.
//! The grid origin is the coordinate origin and patches are ordered by
//! their cell key, which makes the cover reproducible. Patch reductions are
//! independent of one another; [`reduce_localized`] runs them in patch
//! order, and a parallel caller can map [`reduce_patch`] over the patches
//! and feed the results to [`assemble_patches`] for the identical output.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::measure::ParticleMeasure;
use crate::polybasis::MonomialBasis;
use crate::recombine::{
    reduce_measure_indexed, NumericalDegeneracy, ReductionAlgorithm, ReductionReport,
};

/// Where a patch's basis is centered.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchCentering {
    /// Geometric center of the grid cell; every member particle is within
    /// `u` of it.
    CellCenter,
    /// Center of mass of the patch; better conditioned but the containment
    /// guarantee relaxes to `2u`.
    CenterOfMass,
}

/// One patch of a localization: a ball center, the localization radius and
/// the member particles (indices into the covered measure).
#[derive(Debug, Clone, PartialEq)]
pub struct Patch {
    pub center: Vec<f64>,
    pub radius: f64,
    pub indices: Vec<usize>,
}

/// A disjoint, exhaustive assignment of particles to radius-`u` patches.
#[derive(Debug, Clone, PartialEq)]
pub struct Localization {
    patches: Vec<Patch>,
    centering: PatchCentering,
    radius: f64,
}

impl Localization {
    pub fn patches(&self) -> &[Patch] {
        &self.patches
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn centering(&self) -> PatchCentering {
        self.centering
    }

    /// The containment guarantee: member particles lie within this factor
    /// times `u` of their patch center.
    pub fn containment_factor(&self) -> f64 {
        match self.centering {
            PatchCentering::CellCenter => 1.0,
            PatchCentering::CenterOfMass => 2.0,
        }
    }

    /// Largest Euclidean distance from a particle to its patch center.
    pub fn max_center_distance(&self, mu: &ParticleMeasure) -> f64 {
        let mut worst = 0.0f64;
        for p in &self.patches {
            for &i in &p.indices {
                let d2: f64 = mu
                    .point(i)
                    .iter()
                    .zip(p.center.iter())
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                worst = worst.max(libm::sqrt(d2));
            }
        }
        worst
    }
}

/// Grid cover with cell-centered patches. See [`cover_support_with`].
pub fn cover_support(mu: &ParticleMeasure, u: f64) -> Localization {
    cover_support_with(mu, u, PatchCentering::CellCenter)
}

/// Buckets the particles into grid cells of side `2u / sqrt(N)` (diameter
/// of a cell is then at most `2u`, so a cell fits in a radius-`u` ball).
/// Empty cells produce no patch; every particle lands in exactly one patch.
pub fn cover_support_with(mu: &ParticleMeasure, u: f64, centering: PatchCentering) -> Localization {
    assert!(u > 0.0 && u.is_finite(), "localization radius must be positive");
    let dim = mu.dim();
    let side = 2.0 * u / libm::sqrt(dim as f64);

    let mut cells: BTreeMap<Vec<i64>, Vec<usize>> = BTreeMap::new();
    for i in 0..mu.len() {
        let key: Vec<i64> = mu
            .point(i)
            .iter()
            .map(|&x| {
                let c = libm::floor(x / side);
                assert!(
                    c.abs() < 9.0e18,
                    "grid cell index overflow; radius too small for the data scale"
                );
                c as i64
            })
            .collect();
        cells.entry(key).or_default().push(i);
    }

    let mut patches: Vec<Patch> = cells
        .into_iter()
        .map(|(key, indices)| {
            let center = match centering {
                PatchCentering::CellCenter => key
                    .iter()
                    .map(|&c| (c as f64 + 0.5) * side)
                    .collect::<Vec<f64>>(),
                PatchCentering::CenterOfMass => {
                    let mass: f64 = indices.iter().map(|&i| mu.weight(i)).sum();
                    let mut com = alloc::vec![0.0; dim];
                    for &i in &indices {
                        for (c, &x) in com.iter_mut().zip(mu.point(i)) {
                            *c += mu.weight(i) * x;
                        }
                    }
                    com.iter().map(|c| c / mass).collect()
                }
            };
            Patch {
                center,
                radius: u,
                indices,
            }
        })
        .collect();
    // patch order follows the lowest member index, so a cover of singleton
    // patches reassembles in the original particle order
    patches.sort_by_key(|p| p.indices[0]);

    Localization {
        patches,
        centering,
        radius: u,
    }
}

/// A numerical failure inside one patch reduction.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalizeError {
    pub patch: usize,
    pub source: NumericalDegeneracy,
}

impl core::fmt::Display for LocalizeError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "reduction failed on patch {}: {}", self.patch, self.source)
    }
}

impl core::error::Error for LocalizeError {
    fn source(&self) -> Option<&(dyn core::error::Error + 'static)> {
        Some(&self.source)
    }
}

/// Survivors of one patch: global particle indices and their new weights.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchReduced {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
    pub report: ReductionReport,
}

/// Reduces one patch of `mu` against a degree-`r` basis centered at the
/// patch center and scaled by the patch radius.
///
/// The patch sub-measure is renormalized to unit mass for the reduction and
/// the surviving weights are scaled back, so the patch mass is preserved.
/// Patches too small to gain from reduction (fewer than `basis size + 2`
/// particles) pass through unchanged.
pub fn reduce_patch(
    mu: &ParticleMeasure,
    patch_id: usize,
    patch: &Patch,
    r: u32,
    algorithm: ReductionAlgorithm,
) -> Result<PatchReduced, LocalizeError> {
    let k = patch.indices.len();
    let weights: Vec<f64> = patch.indices.iter().map(|&i| mu.weight(i)).collect();
    let basis = MonomialBasis::new(mu.dim(), r, &patch.center, patch.radius);
    if k < basis.len() + 2 {
        return Ok(PatchReduced {
            indices: patch.indices.clone(),
            weights,
            report: ReductionReport {
                input_support: k,
                output_support: k,
                procedure_a_calls: 0,
                elimination_steps: 0,
                max_moment_error: 0.0,
            },
        });
    }

    let mass: f64 = weights.iter().sum();
    let points: Vec<Vec<f64>> = patch.indices.iter().map(|&i| mu.point(i).to_vec()).collect();
    let normalized: Vec<f64> = weights.iter().map(|w| w / mass).collect();
    let sub = ParticleMeasure::new(points, normalized);

    let (reduced, local_indices, report) = reduce_measure_indexed(&sub, &basis, algorithm)
        .map_err(|source| LocalizeError {
            patch: patch_id,
            source,
        })?;

    Ok(PatchReduced {
        indices: local_indices.iter().map(|&l| patch.indices[l]).collect(),
        weights: reduced.weights().iter().map(|w| w * mass).collect(),
        report,
    })
}

/// Concatenates per-patch survivors (in patch order) into the reduced
/// measure. Returns the measure, the surviving global indices and the
/// per-patch reports.
pub fn assemble_patches(
    mu: &ParticleMeasure,
    pieces: Vec<PatchReduced>,
) -> (ParticleMeasure, Vec<usize>, Vec<ReductionReport>) {
    let mut indices = Vec::new();
    let mut weights = Vec::new();
    let mut reports = Vec::with_capacity(pieces.len());
    for piece in pieces {
        indices.extend_from_slice(&piece.indices);
        weights.extend_from_slice(&piece.weights);
        reports.push(piece.report);
    }
    (mu.select(&indices, &weights), indices, reports)
}

/// Covers the support with radius-`u` patches and reduces each against a
/// degree-`r` centered basis. The output support is at most
/// `patch count * (basis size + 1)` and is an index-subset of the input;
/// per-patch moments and the global mass are preserved by the reduction
/// guarantees.
pub fn reduce_localized(
    mu: &ParticleMeasure,
    u: f64,
    r: u32,
    algorithm: ReductionAlgorithm,
) -> Result<(ParticleMeasure, Vec<usize>, Vec<ReductionReport>), LocalizeError> {
    assert!(r >= 1, "localized reduction needs a degree >= 1 basis");
    let cover = cover_support(mu, u);
    let mut pieces = Vec::with_capacity(cover.len());
    for (id, patch) in cover.patches().iter().enumerate() {
        pieces.push(reduce_patch(mu, id, patch, r, algorithm)?);
    }
    Ok(assemble_patches(mu, pieces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn m1(points: &[f64], weights: &[f64]) -> ParticleMeasure {
        ParticleMeasure::new(points.iter().map(|&x| vec![x]).collect(), weights.to_vec())
    }

    #[test]
    fn grid_cover_line_example() {
        // u = 1 in R^1: cell side 2; {0, 0.5} and {3} split
        let m = m1(&[0.0, 0.5, 3.0], &[0.3, 0.3, 0.4]);
        let cover = cover_support(&m, 1.0);
        assert_eq!(cover.len(), 2);
        assert_eq!(cover.patches()[0].indices, vec![0, 1]);
        assert_eq!(cover.patches()[1].indices, vec![2]);
        assert_eq!(cover.patches()[0].center, vec![1.0]);
        assert_eq!(cover.patches()[1].center, vec![3.0]);
        assert!(cover.max_center_distance(&m) <= 1.0);
    }

    #[test]
    fn single_cell_cover() {
        let m = m1(&[0.1, 0.2, 0.3], &[0.5, 0.25, 0.25]);
        let cover = cover_support(&m, 5.0);
        assert_eq!(cover.len(), 1);
    }

    #[test]
    fn cover_is_disjoint_and_exhaustive() {
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|i| {
                let t = i as f64;
                vec![libm::sin(t * 0.7) * 3.0, libm::cos(t * 1.3) * 2.0 - 1.0]
            })
            .collect();
        let m = ParticleMeasure::new(pts, vec![1.0 / 200.0; 200]);
        let cover = cover_support(&m, 0.4);
        let mut seen = alloc::vec![false; m.len()];
        for p in cover.patches() {
            for &i in &p.indices {
                assert!(!seen[i], "particle {i} in two patches");
                seen[i] = true;
            }
        }
        assert!(seen.iter().all(|&s| s));
        assert!(cover.max_center_distance(&m) <= 0.4 * cover.containment_factor() + 1e-12);

        let patch_mass: f64 = cover
            .patches()
            .iter()
            .map(|p| p.indices.iter().map(|&i| m.weight(i)).sum::<f64>())
            .sum();
        assert!((patch_mass - m.total_mass()).abs() < 1e-14);
    }

    #[test]
    fn com_centering_relaxes_containment() {
        let m = m1(&[0.0, 1.9], &[0.5, 0.5]);
        let cover = cover_support_with(&m, 1.0, PatchCentering::CenterOfMass);
        assert_eq!(cover.len(), 1);
        assert_eq!(cover.containment_factor(), 2.0);
        assert!(cover.max_center_distance(&m) <= 2.0);
    }

    #[test]
    fn tiny_radius_returns_measure_unchanged() {
        let m = m1(&[0.0, 1.0, 2.5, -3.0], &[0.25; 4]);
        let (red, indices, _) =
            reduce_localized(&m, 1e-6, 2, ReductionAlgorithm::Algorithm2).unwrap();
        assert_eq!(red, m);
        assert_eq!(indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn localized_reduction_preserves_patch_mass_and_moments() {
        let pts: Vec<Vec<f64>> = (0..600)
            .map(|i| {
                let t = i as f64 * 0.11;
                vec![libm::sin(t) * 1.5, libm::cos(1.7 * t)]
            })
            .collect();
        let ws: Vec<f64> = (0..600).map(|i| 1.0 + ((i * 13) % 7) as f64 * 0.3).collect();
        let total: f64 = ws.iter().sum();
        let m = ParticleMeasure::new(pts, ws);
        let u = 0.5;
        let r = 2;
        let cover = cover_support(&m, u);
        let (red, indices, reports) =
            reduce_localized(&m, u, r, ReductionAlgorithm::Algorithm2).unwrap();

        // support bound: patches * (basis size + 1)
        let basis_size = MonomialBasis::new(2, r, &[0.0, 0.0], u).len();
        assert!(red.len() <= cover.len() * (basis_size + 1));
        assert!((red.total_mass() - total).abs() < 1e-12 * total);
        assert_eq!(reports.len(), cover.len());

        // index subset with identical coordinates
        for (i, &k) in indices.iter().enumerate() {
            assert_eq!(red.point(i), m.point(k));
        }

        // per-patch centered moments
        for (patch, piece_report) in cover.patches().iter().zip(&reports) {
            assert!(piece_report.max_moment_error < 1e-8);
            let basis = MonomialBasis::new(2, r, &patch.center, u);
            let before: Vec<f64> = patch.indices.iter().fold(vec![0.0; basis.len()], |mut acc, &i| {
                for (a, v) in acc.iter_mut().zip(basis.evaluate(m.point(i))) {
                    *a += m.weight(i) * v;
                }
                acc
            });
            let after: Vec<f64> = indices
                .iter()
                .zip(red.weights())
                .filter(|(&k, _)| patch.indices.contains(&k))
                .fold(vec![0.0; basis.len()], |mut acc, (&k, &w)| {
                    for (a, v) in acc.iter_mut().zip(basis.evaluate(m.point(k))) {
                        *a += w * v;
                    }
                    acc
                });
            for (b, a) in before.iter().zip(after.iter()) {
                assert!((a - b).abs() / b.abs().max(1.0) < 1e-8);
            }
        }
    }
}
