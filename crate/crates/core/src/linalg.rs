//! Small dense linear algebra used by the reduction engine.
//!
//! The elimination step needs null vectors of short wide matrices that are
//! singular by construction, so the solver of choice is a one-sided Jacobi
//! SVD (Hestenes): rotate columns until mutually orthogonal, accumulating
//! the right rotations. Column norms are the singular values and the
//! accumulated rotation columns are the right singular vectors, so the
//! column of smallest norm hands us the null direction directly. Matrices
//! here are column-major `Vec<Vec<f64>>`.

use alloc::vec::Vec;

const MAX_SWEEPS: usize = 48;
const ORTHO_EPS: f64 = 1e-15;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm2(a: &[f64]) -> f64 {
    libm::sqrt(dot(a, a))
}

fn rotate_pair(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    // col_p' = c col_p - s col_q ; col_q' = s col_p + c col_q
    let (lo, hi) = cols.split_at_mut(q);
    let (cp, cq) = (&mut lo[p], &mut hi[0]);
    for (xp, xq) in cp.iter_mut().zip(cq.iter_mut()) {
        let (a, b) = (*xp, *xq);
        *xp = c * a - s * b;
        *xq = s * a + c * b;
    }
}

/// Orthogonalizes the columns in place by cyclic Jacobi sweeps. When `v` is
/// given it must hold the identity; the same rotations are accumulated so
/// that `original * v = cols` afterwards.
pub(crate) fn jacobi_orthogonalize(cols: &mut [Vec<f64>], mut v: Option<&mut [Vec<f64>]>) {
    let m = cols.len();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let app = dot(&cols[p], &cols[p]);
                let aqq = dot(&cols[q], &cols[q]);
                let apq = dot(&cols[p], &cols[q]);
                if apq.abs() <= ORTHO_EPS * libm::sqrt(app * aqq) {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (2.0 * apq);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                rotate_pair(cols, p, q, c, s);
                if let Some(vc) = v.as_deref_mut() {
                    rotate_pair(vc, p, q, c, s);
                }
            }
        }
        if !rotated {
            return;
        }
    }
}

fn identity(m: usize) -> Vec<Vec<f64>> {
    (0..m)
        .map(|j| {
            let mut e = alloc::vec![0.0; m];
            e[j] = 1.0;
            e
        })
        .collect()
}

/// Right singular vector for the smallest singular value of the matrix with
/// the given columns. The result has unit Euclidean norm.
pub(crate) fn min_singular_right_vector(mut cols: Vec<Vec<f64>>) -> Vec<f64> {
    let m = cols.len();
    assert!(m >= 1);
    let mut v = identity(m);
    jacobi_orthogonalize(&mut cols, Some(&mut v));
    let (mut best, mut best_norm) = (0usize, f64::INFINITY);
    for (j, col) in cols.iter().enumerate() {
        let n = norm2(col);
        if n < best_norm {
            best = j;
            best_norm = n;
        }
    }
    let mut u = core::mem::take(&mut v[best]);
    let n = norm2(&u);
    for x in u.iter_mut() {
        *x /= n;
    }
    u
}

/// Null vector by Gaussian elimination with partial pivoting; the debug
/// counterpart of the SVD route. `rows` is the constraint matrix row-major.
/// Returns a unit-norm element of the kernel, or `None` when elimination
/// finds no free column (numerically full column rank).
pub(crate) fn null_vector_gaussian(mut rows: Vec<Vec<f64>>, ncols: usize) -> Option<Vec<f64>> {
    let nrows = rows.len();
    let scale = rows
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |a, &x| a.max(x.abs()))
        .max(1.0);
    let tol = 1e-13 * scale;

    let mut pivot_of_row: Vec<usize> = Vec::new();
    let mut is_pivot_col = alloc::vec![false; ncols];
    let mut r = 0usize;
    for c in 0..ncols {
        // partial pivoting on column c
        let (mut imax, mut vmax) = (r, 0.0f64);
        for i in r..nrows {
            if rows[i][c].abs() > vmax {
                imax = i;
                vmax = rows[i][c].abs();
            }
        }
        if vmax <= tol {
            continue; // free column
        }
        rows.swap(r, imax);
        for i in 0..nrows {
            if i != r && rows[i][c] != 0.0 {
                let f = rows[i][c] / rows[r][c];
                for j in c..ncols {
                    let sub = f * rows[r][j];
                    rows[i][j] -= sub;
                }
                rows[i][c] = 0.0;
            }
        }
        pivot_of_row.push(c);
        is_pivot_col[c] = true;
        r += 1;
        if r == nrows {
            break;
        }
    }

    let free = (0..ncols).find(|&c| !is_pivot_col[c])?;
    let mut u = alloc::vec![0.0; ncols];
    u[free] = 1.0;
    for (i, &c) in pivot_of_row.iter().enumerate() {
        // reduced rows have zeros in all other pivot columns
        u[c] = -rows[i][free] / rows[i][c];
    }
    let n = norm2(&u);
    for x in u.iter_mut() {
        *x /= n;
    }
    Some(u)
}

/// Mean-centers `points` and returns the coordinate matrix column-major
/// (one column of length `points.len()` per coordinate).
fn centered_coordinate_columns(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let k = points.len();
    let dim = points.first().map_or(0, |p| p.len());
    let mut cols = alloc::vec![alloc::vec![0.0; k]; dim];
    for j in 0..dim {
        let mean: f64 = points.iter().map(|p| p[j]).sum::<f64>() / k as f64;
        for (i, p) in points.iter().enumerate() {
            cols[j][i] = p[j] - mean;
        }
    }
    cols
}

/// Dimension of the lowest-dimensional affine subspace containing the
/// points: the rank at relative tolerance `tol` of the centered matrix.
pub(crate) fn affine_rank(points: &[Vec<f64>], tol: f64) -> usize {
    let mut cols = centered_coordinate_columns(points);
    if cols.is_empty() {
        return 0;
    }
    jacobi_orthogonalize(&mut cols, None);
    let sigmas: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    let smax = sigmas.iter().fold(0.0f64, |a, &s| a.max(s));
    if smax == 0.0 {
        return 0;
    }
    sigmas.iter().filter(|&&s| s > tol * smax).count()
}

/// Coordinates of the points in an orthonormal basis of their affine hull
/// (directions with singular value `> tol * sigma_max`). Output has one row
/// per point, of length [`affine_rank`].
pub(crate) fn affine_coordinates(points: &[Vec<f64>], tol: f64) -> Vec<Vec<f64>> {
    let k = points.len();
    let mut cols = centered_coordinate_columns(points);
    if cols.is_empty() {
        return alloc::vec![Vec::new(); k];
    }
    jacobi_orthogonalize(&mut cols, None);
    let sigmas: Vec<f64> = cols.iter().map(|c| norm2(c)).collect();
    let smax = sigmas.iter().fold(0.0f64, |a, &s| a.max(s));
    let kept: Vec<usize> = (0..cols.len())
        .filter(|&j| smax > 0.0 && sigmas[j] > tol * smax)
        .collect();
    (0..k)
        .map(|i| kept.iter().map(|&j| cols[j][i]).collect())
        .collect()
}
