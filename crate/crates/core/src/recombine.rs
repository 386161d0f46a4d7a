//! Carathéodory support reduction for discrete measures.
//!
//! Given a measure with `n_hat` particles in `R^n` and `n_hat > n + 1`, any
//! `n + 2` points admit a nontrivial relation `sum_i u_i x_i = 0`,
//! `sum_i u_i = 0`. Moving the weights along `u` until one hits zero
//! eliminates a particle without changing mass or centre of mass. Repeating
//! this is the sequential algorithm ([`reduce_algorithm1`]). The
//! hierarchical algorithm ([`reduce_algorithm2`]) instead eliminates whole
//! near-equal blocks of particles through their centres of mass, which
//! halves the support per round and needs only `ceil(lg(n_hat/n))` rounds.
//!
//! The relation systems are singular by construction, so null vectors come
//! from a one-sided Jacobi SVD of the stacked constraint matrix; Gaussian
//! elimination is kept as a debug path ([`null_vector_gaussian_debug`]).
//! Points are translated by their centre and scaled by their max norm
//! before every solve to condition the system. All tie-breaks take the
//! lowest-index particle, so reductions are reproducible.

use alloc::vec::Vec;

use crate::linalg;
use crate::measure::ParticleMeasure;
use crate::polybasis::MonomialBasis;

/// Relative singular-value cutoff for affine-dimension decisions inside the
/// reduction algorithms.
const AFFINE_TOL: f64 = 1e-10;

/// Residual bound factor for accepting a null vector.
const NULL_RESIDUAL_TOL: f64 = 1e-10;

/// Weights at or below `SNAP_TOL * window mass` after an elimination step
/// are snapped to exact zero.
const SNAP_TOL: f64 = 1e-14;

/// No vector met the residual bound for the elimination relation; the input
/// is catastrophically scaled or otherwise numerically degenerate. Rescale
/// or re-center the points and retry.
#[derive(Debug, Clone, PartialEq)]
pub struct NumericalDegeneracy {
    pub residual: f64,
    pub bound: f64,
}

impl core::fmt::Display for NumericalDegeneracy {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "no null vector met the residual bound ({:e} > {:e})",
            self.residual, self.bound
        )
    }
}

impl core::error::Error for NumericalDegeneracy {}

/// Which of the two admissible weight moves an elimination step takes.
///
/// Both are always admissible (`sum u_i = 0` forces both signs to occur in
/// `u`); they differ in which particles lose their weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EliminationDirection {
    /// Scale by `min_{u_i > 0} (w_i / u_i)` and subtract `c u`.
    Subtract,
    /// Scale by `min_{u_i < 0} (-w_i / u_i)` and add `c u`.
    Add,
}

/// Reduction choice for [`reduce_measure`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReductionAlgorithm {
    /// Sequential single-particle elimination.
    Algorithm1,
    /// Hierarchical block elimination with a final Algorithm-1 cleanup.
    Algorithm2,
}

/// Diagnostics of one reduction run.
#[derive(Debug, Clone, PartialEq)]
pub struct ReductionReport {
    pub input_support: usize,
    pub output_support: usize,
    /// Block-elimination rounds (each is one Procedure-A application).
    pub procedure_a_calls: usize,
    /// Total single elimination steps, including those inside Procedure A.
    pub elimination_steps: usize,
    /// Max over test functions of the relative deviation of the preserved
    /// moment sums, `|after - before| / max(1, |before|)`.
    pub max_moment_error: f64,
}

impl ReductionReport {
    fn unchanged(n: usize) -> Self {
        ReductionReport {
            input_support: n,
            output_support: n,
            procedure_a_calls: 0,
            elimination_steps: 0,
            max_moment_error: 0.0,
        }
    }
}

/// A nontrivial solution of `sum_i u_i x_i = 0`, `sum_i u_i = 0` for exactly
/// `n + 2` points in `R^n`.
///
/// The vector has unit Euclidean norm and its first nonzero entry is
/// positive. Before the solve the points are translated by their mean and
/// scaled by their max norm (both leave the solution set unchanged); the
/// residuals of the returned vector are checked against the original points
/// at `1e-10 * (1 + max |x_i|)`.
pub fn null_vector(points: &[Vec<f64>]) -> Result<Vec<f64>, NumericalDegeneracy> {
    let m = points.len();
    assert!(m >= 2, "need at least two points for a relation");
    let n = m - 2;
    for p in points {
        assert_eq!(p.len(), n, "expected exactly n + 2 points in R^n");
    }
    let views: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    conditioned_null_vector(&views)
}

/// Gaussian-elimination route for the same system; debug path only.
pub fn null_vector_gaussian_debug(points: &[Vec<f64>]) -> Result<Vec<f64>, NumericalDegeneracy> {
    let m = points.len();
    assert!(m >= 2);
    let n = m - 2;
    for p in points {
        assert_eq!(p.len(), n);
    }
    let views: Vec<&[f64]> = points.iter().map(|p| p.as_slice()).collect();
    let (mean, scale) = window_conditioning(&views);
    let mut rows: Vec<Vec<f64>> = (0..n)
        .map(|k| views.iter().map(|p| (p[k] - mean[k]) / scale).collect())
        .collect();
    rows.push(alloc::vec![1.0; m]);
    let u = linalg::null_vector_gaussian(rows, m);
    match u {
        Some(mut u) => {
            fix_sign(&mut u);
            check_residuals(&views, &u)?;
            Ok(u)
        }
        None => Err(NumericalDegeneracy {
            residual: f64::INFINITY,
            bound: 0.0,
        }),
    }
}

fn window_conditioning(points: &[&[f64]]) -> (Vec<f64>, f64) {
    let m = points.len();
    let n = points[0].len();
    let mut mean = alloc::vec![0.0; n];
    for p in points {
        for (mk, &xk) in mean.iter_mut().zip(p.iter()) {
            *mk += xk;
        }
    }
    for mk in mean.iter_mut() {
        *mk /= m as f64;
    }
    let mut scale = 0.0f64;
    for p in points {
        for (k, &xk) in p.iter().enumerate() {
            scale = scale.max((xk - mean[k]).abs());
        }
    }
    if scale == 0.0 {
        scale = 1.0;
    }
    (mean, scale)
}

fn fix_sign(u: &mut [f64]) {
    for &x in u.iter() {
        if x.abs() > 1e-12 {
            if x < 0.0 {
                for y in u.iter_mut() {
                    *y = -*y;
                }
            }
            return;
        }
    }
}

fn check_residuals(points: &[&[f64]], u: &[f64]) -> Result<(), NumericalDegeneracy> {
    let n = points[0].len();
    let max_abs = points
        .iter()
        .flat_map(|p| p.iter())
        .fold(0.0f64, |a, &x| a.max(x.abs()));
    let bound = NULL_RESIDUAL_TOL * (1.0 + max_abs);
    let mut residual = u.iter().sum::<f64>().abs();
    for k in 0..n {
        let r: f64 = points.iter().zip(u.iter()).map(|(p, &ui)| ui * p[k]).sum();
        residual = residual.max(r.abs());
    }
    if residual <= bound {
        Ok(())
    } else {
        Err(NumericalDegeneracy { residual, bound })
    }
}

fn conditioned_null_vector(points: &[&[f64]]) -> Result<Vec<f64>, NumericalDegeneracy> {
    let m = points.len();
    let n = points[0].len();
    let (mean, scale) = window_conditioning(points);
    // columns of the stacked (n+1) x m constraint matrix
    let cols: Vec<Vec<f64>> = points
        .iter()
        .map(|p| {
            let mut c: Vec<f64> = (0..n).map(|k| (p[k] - mean[k]) / scale).collect();
            c.push(1.0);
            c
        })
        .collect();
    let mut u = linalg::min_singular_right_vector(cols);
    fix_sign(&mut u);
    debug_assert_eq!(u.len(), m);
    check_residuals(points, &u)?;
    Ok(u)
}

/// Weights after moving along `u` in the given direction, with the
/// eliminated entries set to exact zero. Entries at or below
/// `1e-14 * mass` are snapped to zero as well.
fn directed_weights(weights: &[f64], u: &[f64], direction: EliminationDirection) -> Vec<f64> {
    let snap = SNAP_TOL * weights.iter().sum::<f64>();
    let mut c = f64::INFINITY;
    match direction {
        EliminationDirection::Subtract => {
            for (&w, &ui) in weights.iter().zip(u.iter()) {
                if ui > 0.0 {
                    c = c.min(w / ui);
                }
            }
        }
        EliminationDirection::Add => {
            for (&w, &ui) in weights.iter().zip(u.iter()) {
                if ui < 0.0 {
                    c = c.min(-w / ui);
                }
            }
        }
    }
    assert!(c.is_finite(), "sum u_i = 0 guarantees both signs occur in u");
    weights
        .iter()
        .zip(u.iter())
        .map(|(&w, &ui)| {
            let hits_zero = match direction {
                EliminationDirection::Subtract => ui > 0.0 && w / ui == c,
                EliminationDirection::Add => ui < 0.0 && -w / ui == c,
            };
            if hits_zero {
                return 0.0;
            }
            let nw = match direction {
                EliminationDirection::Subtract => w - c * ui,
                EliminationDirection::Add => w + c * ui,
            };
            if nw <= snap {
                0.0
            } else {
                nw
            }
        })
        .collect()
}

/// One elimination step in a chosen direction. See [`caratheodory_step`].
pub fn caratheodory_step_directed(
    points: &[Vec<f64>],
    weights: &[f64],
    direction: EliminationDirection,
) -> Result<Vec<f64>, NumericalDegeneracy> {
    assert_eq!(points.len(), weights.len());
    assert!(weights.iter().all(|&w| w > 0.0), "weights must be positive");
    let u = null_vector(points)?;
    Ok(directed_weights(weights, &u, direction))
}

/// One Carathéodory elimination step on exactly `n + 2` points in `R^n`.
///
/// Returns nonnegative weights with the same sum and the same weighted
/// point sum, at least one of them exactly zero. Of the two admissible
/// directions the one eliminating more particles is taken; on a tie, the
/// subtract direction.
pub fn caratheodory_step(
    points: &[Vec<f64>],
    weights: &[f64],
) -> Result<Vec<f64>, NumericalDegeneracy> {
    assert_eq!(points.len(), weights.len());
    assert!(weights.iter().all(|&w| w > 0.0), "weights must be positive");
    let u = null_vector(points)?;
    Ok(choose_direction(weights, &u))
}

fn choose_direction(weights: &[f64], u: &[f64]) -> Vec<f64> {
    let sub = directed_weights(weights, u, EliminationDirection::Subtract);
    let add = directed_weights(weights, u, EliminationDirection::Add);
    let zeros = |w: &[f64]| w.iter().filter(|&&x| x == 0.0).count();
    if zeros(&add) > zeros(&sub) {
        add
    } else {
        sub
    }
}

/// Live subset of an ambient support: ascending positions and their weights.
struct LiveSet {
    idx: Vec<usize>,
    w: Vec<f64>,
}

impl LiveSet {
    fn full(weights: &[f64]) -> Self {
        LiveSet {
            idx: (0..weights.len()).collect(),
            w: weights.to_vec(),
        }
    }

    fn len(&self) -> usize {
        self.idx.len()
    }

    fn drop_zeros(&mut self) {
        let mut k = 0;
        for i in 0..self.idx.len() {
            if self.w[i] > 0.0 {
                self.idx[k] = self.idx[i];
                self.w[k] = self.w[i];
                k += 1;
            }
        }
        self.idx.truncate(k);
        self.w.truncate(k);
    }
}

/// Repeatedly eliminates on windows of the first `dim + 2` live particles
/// (coordinates looked up in `points`) until at most `target` remain or the
/// window no longer fits.
fn window_eliminate(
    points: &[Vec<f64>],
    live: &mut LiveSet,
    dim: usize,
    target: usize,
    steps: &mut usize,
) -> Result<(), NumericalDegeneracy> {
    let m = dim + 2;
    while live.len() > target && live.len() >= m {
        let window: Vec<&[f64]> = live.idx[..m].iter().map(|&i| points[i].as_slice()).collect();
        let u = conditioned_null_vector(&window)?;
        let new_w = choose_direction(&live.w[..m], &u);
        live.w[..m].copy_from_slice(&new_w);
        *steps += 1;
        live.drop_zeros();
    }
    Ok(())
}

/// Further elimination in an orthonormal basis of the affine hull of the
/// live points, until the live points are affinely independent.
fn affine_refine(
    points: &[Vec<f64>],
    live: &mut LiveSet,
    steps: &mut usize,
) -> Result<(), NumericalDegeneracy> {
    loop {
        let live_pts: Vec<Vec<f64>> = live.idx.iter().map(|&i| points[i].clone()).collect();
        let rank = linalg::affine_rank(&live_pts, AFFINE_TOL);
        if live.len() <= rank + 1 {
            return Ok(());
        }
        let projected = linalg::affine_coordinates(&live_pts, AFFINE_TOL);
        let mut local = LiveSet {
            idx: (0..live.len()).collect(),
            w: live.w.clone(),
        };
        // one round: eliminate at least one particle, then re-measure the hull
        window_eliminate(&projected, &mut local, rank, live.len() - 1, steps)?;
        live.idx = local.idx.iter().map(|&p| live.idx[p]).collect();
        live.w = local.w;
    }
}

/// Sequential reduction: windowed elimination to `n + 1` particles, then
/// affine-hull refinement down to `n_tilde + 1` where `n_tilde` is the
/// affine dimension of the surviving points.
///
/// Returns the reduced measure together with the indices of the surviving
/// particles in the input.
pub fn reduce_algorithm1_indexed(
    mu: &ParticleMeasure,
) -> Result<(ParticleMeasure, Vec<usize>, ReductionReport), NumericalDegeneracy> {
    let n = mu.dim();
    let mut live = LiveSet::full(mu.weights());
    let mut steps = 0usize;
    window_eliminate(mu.points(), &mut live, n, n + 1, &mut steps)?;
    affine_refine(mu.points(), &mut live, &mut steps)?;
    let reduced = mu.select(&live.idx, &live.w);
    let report = ReductionReport {
        input_support: mu.len(),
        output_support: reduced.len(),
        procedure_a_calls: 0,
        elimination_steps: steps,
        max_moment_error: coordinate_moment_error(mu, &reduced),
    };
    Ok((reduced, live.idx, report))
}

/// See [`reduce_algorithm1_indexed`].
pub fn reduce_algorithm1(
    mu: &ParticleMeasure,
) -> Result<(ParticleMeasure, ReductionReport), NumericalDegeneracy> {
    reduce_algorithm1_indexed(mu).map(|(m, _, r)| (m, r))
}

/// Reduces a measure with exactly `2(n + 1)` particles in `R^n` to at most
/// `n + 1`, realized as up to `n + 1` sequential elimination steps.
pub fn procedure_a(mu: &ParticleMeasure) -> Result<ParticleMeasure, NumericalDegeneracy> {
    let n = mu.dim();
    assert_eq!(
        mu.len(),
        2 * (n + 1),
        "procedure A takes exactly 2(n+1) particles"
    );
    let mut live = LiveSet::full(mu.weights());
    let mut steps = 0usize;
    window_eliminate(mu.points(), &mut live, n, n + 1, &mut steps)?;
    Ok(mu.select(&live.idx, &live.w))
}

/// Smallest `t >= 0` with `n * 2^t >= n_hat`; the exact Procedure-A round
/// count of the hierarchical algorithm.
fn lg_ceil_ratio(n_hat: usize, n: usize) -> usize {
    let mut t = 0usize;
    let mut cap = n as u128;
    while cap < n_hat as u128 {
        cap <<= 1;
        t += 1;
    }
    t
}

/// Hierarchical reduction.
///
/// When `n_hat > n + 1` the algorithm runs exactly `ceil(lg(n_hat / n))`
/// block rounds. Each round partitions the surviving particles, in index
/// order, into `2(n + 1)` contiguous blocks of near-equal count, eliminates
/// block centres of mass down to `n + 1` blocks (one Procedure-A
/// application), and rescales the weights of each surviving block `j` by
/// `new_mass_j / old_mass_j`. A final Algorithm-1 cleanup then enforces the
/// `n + 1` (and affine-dimension) support bound.
pub fn reduce_algorithm2_indexed(
    mu: &ParticleMeasure,
) -> Result<(ParticleMeasure, Vec<usize>, ReductionReport), NumericalDegeneracy> {
    let n = mu.dim();
    let n_hat = mu.len();
    if n_hat <= n + 1 {
        return Ok((
            mu.clone(),
            (0..n_hat).collect(),
            ReductionReport::unchanged(n_hat),
        ));
    }

    let rounds = lg_ceil_ratio(n_hat, n);
    let mut live = LiveSet::full(mu.weights());
    let mut steps = 0usize;

    for _ in 0..rounds {
        block_round(mu.points(), &mut live, n, &mut steps)?;
    }
    window_eliminate(mu.points(), &mut live, n, n + 1, &mut steps)?;
    affine_refine(mu.points(), &mut live, &mut steps)?;

    let reduced = mu.select(&live.idx, &live.w);
    let report = ReductionReport {
        input_support: n_hat,
        output_support: reduced.len(),
        procedure_a_calls: rounds,
        elimination_steps: steps,
        max_moment_error: coordinate_moment_error(mu, &reduced),
    };
    Ok((reduced, live.idx, report))
}

/// See [`reduce_algorithm2_indexed`].
pub fn reduce_algorithm2(
    mu: &ParticleMeasure,
) -> Result<(ParticleMeasure, ReductionReport), NumericalDegeneracy> {
    reduce_algorithm2_indexed(mu).map(|(m, _, r)| (m, r))
}

/// One block round of the hierarchical algorithm.
fn block_round(
    points: &[Vec<f64>],
    live: &mut LiveSet,
    n: usize,
    steps: &mut usize,
) -> Result<(), NumericalDegeneracy> {
    let c = live.len();
    let n_blocks = (2 * (n + 1)).min(c);
    let base = c / n_blocks;
    let extra = c % n_blocks;

    let dim = points[0].len();
    let mut block_pts: Vec<Vec<f64>> = Vec::with_capacity(n_blocks);
    let mut block_mass: Vec<f64> = Vec::with_capacity(n_blocks);
    let mut bounds: Vec<(usize, usize)> = Vec::with_capacity(n_blocks);
    let mut start = 0usize;
    for b in 0..n_blocks {
        let size = base + usize::from(b < extra);
        let end = start + size;
        let mut mass = 0.0f64;
        let mut com = alloc::vec![0.0f64; dim];
        for pos in start..end {
            let w = live.w[pos];
            mass += w;
            for (ck, &xk) in com.iter_mut().zip(points[live.idx[pos]].iter()) {
                *ck += w * xk;
            }
        }
        for ck in com.iter_mut() {
            *ck /= mass;
        }
        block_pts.push(com);
        block_mass.push(mass);
        bounds.push((start, end));
        start = end;
    }
    debug_assert_eq!(start, c);

    let mut blocks = LiveSet::full(&block_mass);
    window_eliminate(&block_pts, &mut blocks, n, n + 1, steps)?;

    let mut new_idx = Vec::with_capacity(c);
    let mut new_w = Vec::with_capacity(c);
    for (pos, &b) in blocks.idx.iter().enumerate() {
        let factor = blocks.w[pos] / block_mass[b];
        let (s, e) = bounds[b];
        for p in s..e {
            let w = live.w[p] * factor;
            if w > 0.0 {
                new_idx.push(live.idx[p]);
                new_w.push(w);
            }
        }
    }
    live.idx = new_idx;
    live.w = new_w;
    Ok(())
}

fn coordinate_moment_error(before: &ParticleMeasure, after: &ParticleMeasure) -> f64 {
    let dim = before.dim();
    let mut worst = 0.0f64;
    for k in 0..dim {
        let b: f64 = before
            .points()
            .iter()
            .zip(before.weights())
            .map(|(p, &w)| w * p[k])
            .sum();
        let a: f64 = after
            .points()
            .iter()
            .zip(after.weights())
            .map(|(p, &w)| w * p[k])
            .sum();
        worst = worst.max((a - b).abs() / b.abs().max(1.0));
    }
    worst
}

/// Reduces `mu` against the basis: at most `basis.len() + 1` particles, an
/// index-subset of the support, with every basis moment preserved.
///
/// Pipeline: push forward by the basis, combine coincident evaluation
/// vectors, reduce in `R^n`, pull the surviving weights back to the original
/// points through the retained index maps. An empty basis reduces to the
/// single lowest-index particle carrying the total mass.
pub fn reduce_measure_indexed(
    mu: &ParticleMeasure,
    basis: &MonomialBasis,
    algorithm: ReductionAlgorithm,
) -> Result<(ParticleMeasure, Vec<usize>, ReductionReport), NumericalDegeneracy> {
    let n = basis.len();
    let n_hat = mu.len();
    if n_hat <= n + 1 {
        return Ok((
            mu.clone(),
            (0..n_hat).collect(),
            ReductionReport::unchanged(n_hat),
        ));
    }
    if basis.is_empty() {
        // no test functions: mass on the lowest-index particle
        let reduced = mu.select(&[0], &[mu.total_mass()]);
        let report = ReductionReport {
            input_support: n_hat,
            output_support: 1,
            procedure_a_calls: 0,
            elimination_steps: 0,
            max_moment_error: 0.0,
        };
        return Ok((reduced, alloc::vec![0], report));
    }

    let pushed = mu.pushforward_by_basis(basis);
    let (merged, representative) = pushed.merge_duplicates_indexed(0.0);
    let (reduced_pushed, kept, mut report) = match algorithm {
        ReductionAlgorithm::Algorithm1 => reduce_algorithm1_indexed(&merged)?,
        ReductionAlgorithm::Algorithm2 => reduce_algorithm2_indexed(&merged)?,
    };

    let indices: Vec<usize> = kept.iter().map(|&p| representative[p]).collect();
    let reduced = mu.select(&indices, reduced_pushed.weights());
    report.input_support = n_hat;
    report.output_support = reduced.len();
    report.max_moment_error = basis_moment_error(mu, &reduced, basis);
    Ok((reduced, indices, report))
}

/// See [`reduce_measure_indexed`].
pub fn reduce_measure(
    mu: &ParticleMeasure,
    basis: &MonomialBasis,
    algorithm: ReductionAlgorithm,
) -> Result<(ParticleMeasure, ReductionReport), NumericalDegeneracy> {
    reduce_measure_indexed(mu, basis, algorithm).map(|(m, _, r)| (m, r))
}

/// Moment sums `sum_i w_i p_j(z_i)` for every basis function.
pub fn moment_sums(mu: &ParticleMeasure, basis: &MonomialBasis) -> Vec<f64> {
    let mut sums = alloc::vec![0.0f64; basis.len()];
    for (z, &w) in mu.points().iter().zip(mu.weights()) {
        for (s, v) in sums.iter_mut().zip(basis.evaluate(z)) {
            *s += w * v;
        }
    }
    sums
}

fn basis_moment_error(before: &ParticleMeasure, after: &ParticleMeasure, basis: &MonomialBasis) -> f64 {
    moment_sums(before, basis)
        .iter()
        .zip(moment_sums(after, basis).iter())
        .map(|(b, a)| (a - b).abs() / b.abs().max(1.0))
        .fold(0.0, f64::max)
}

/// Dimension of the lowest-dimensional affine subspace containing the
/// points: singular values of the centered point matrix above
/// `tol * sigma_max` are counted.
pub fn affine_dimension(points: &[Vec<f64>], tol: f64) -> usize {
    assert!(!points.is_empty(), "affine dimension needs at least one point");
    linalg::affine_rank(points, tol)
}

/// Probability that `k` i.i.d. uniform points on the unit sphere of `R^N`
/// contain the origin in their convex hull:
/// `P_{N,k} = 1 - 2^{-k+1} * sum_{j=0}^{N-1} C(k-1, j)`.
///
/// The binomial sum is accumulated exactly (every intermediate is an
/// integer below 2^53 for any feasible argument range) and scaled by an
/// exact power of two, so identities like `P_{N,2N} = 1/2` hold exactly.
pub fn wendel_probability(n_dim: u32, k: u32) -> f64 {
    assert!(n_dim >= 1 && k >= 1, "both arguments must be >= 1");
    let mut sum = 0.0f64;
    let mut binom = 1.0f64; // C(k-1, 0)
    for j in 0..n_dim {
        if j > k - 1 {
            break; // C(k-1, j) = 0 beyond the top row entry
        }
        if j > 0 {
            binom = binom * (k - j) as f64 / j as f64;
        }
        sum += binom;
    }
    1.0 - libm::ldexp(sum, 1 - k as i32)
}
