//! Monomial test-function bases of bounded degree.
//!
//! A basis holds all monomials `p_e(x) = prod_j ((x_j - c_j)/s)^{e_j}` with
//! `1 <= |e| <= r`. The constant is excluded: reduction preserves the weight
//! sum through its own `sum u_i = 0` constraint, and a constant coordinate
//! would make the pushforward law degenerate. Centering at a patch center
//! and scaling by the patch radius keeps evaluations on the patch inside
//! `[-1, 1]^N`, which conditions the reduction's linear systems.

use alloc::vec::Vec;

/// Centered and scaled monomials of total degree `1..=r` in `N` variables,
/// in graded order (total degree, then `x_1`-major within a degree).
#[derive(Debug, Clone, PartialEq)]
pub struct MonomialBasis {
    dim: usize,
    degree: u32,
    center: Vec<f64>,
    scale: f64,
    exponents: Vec<Vec<u32>>,
}

impl MonomialBasis {
    /// All monomials of degree `1..=r`, centered at `center`, scaled by `scale`.
    ///
    /// The basis has `C(N + r, N) - 1` functions; `r = 0` yields an empty
    /// basis. Panics unless `N >= 1`, `scale > 0` and `center.len() == N`.
    pub fn new(dim: usize, degree: u32, center: &[f64], scale: f64) -> Self {
        assert!(dim >= 1, "basis dimension must be >= 1");
        assert_eq!(center.len(), dim, "center must have the basis dimension");
        assert!(scale > 0.0 && scale.is_finite(), "scale must be positive");

        let mut exponents = Vec::new();
        let mut current = alloc::vec![0u32; dim];
        for total in 1..=degree {
            push_degree(&mut exponents, &mut current, 0, total);
        }
        MonomialBasis {
            dim,
            degree,
            center: center.to_vec(),
            scale,
            exponents,
        }
    }

    /// A basis from an explicit exponent list (e.g. odd monomials only).
    ///
    /// The list order is kept as given. Panics on a constant (all-zero)
    /// exponent or a length mismatch.
    pub fn with_exponents(dim: usize, exponents: &[Vec<u32>], center: &[f64], scale: f64) -> Self {
        assert!(dim >= 1);
        assert_eq!(center.len(), dim);
        assert!(scale > 0.0 && scale.is_finite());
        let mut degree = 0;
        for e in exponents {
            assert_eq!(e.len(), dim, "exponent arity must match the dimension");
            let total: u32 = e.iter().sum();
            assert!(total >= 1, "the constant monomial is excluded");
            degree = degree.max(total);
        }
        MonomialBasis {
            dim,
            degree,
            center: center.to_vec(),
            scale,
            exponents: exponents.to_vec(),
        }
    }

    /// Number of basis functions.
    pub fn len(&self) -> usize {
        self.exponents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exponents.is_empty()
    }

    /// Ambient dimension `N`.
    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Maximal total degree `r`.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn exponents(&self) -> &[Vec<u32>] {
        &self.exponents
    }

    /// Evaluates every basis function at `x`, in basis order.
    ///
    /// Powers of the shifted/scaled coordinates are accumulated once and
    /// reused across monomials.
    pub fn evaluate(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.dim, "point dimension must match the basis");
        // pows[j * (r+1) + k] = ((x_j - c_j)/s)^k
        let r = self.degree as usize;
        let mut pows = alloc::vec![1.0f64; self.dim * (r + 1)];
        for j in 0..self.dim {
            let y = (x[j] - self.center[j]) / self.scale;
            for k in 1..=r {
                pows[j * (r + 1) + k] = pows[j * (r + 1) + k - 1] * y;
            }
        }
        self.exponents
            .iter()
            .map(|e| {
                let mut v = 1.0;
                for (j, &ej) in e.iter().enumerate() {
                    if ej > 0 {
                        v *= pows[j * (r + 1) + ej as usize];
                    }
                }
                v
            })
            .collect()
    }
}

/// Emits all exponents of the given remaining total degree, `x_1`-major.
fn push_degree(out: &mut Vec<Vec<u32>>, current: &mut Vec<u32>, pos: usize, remaining: u32) {
    if pos + 1 == current.len() {
        current[pos] = remaining;
        out.push(current.clone());
        current[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        current[pos] = e;
        push_degree(out, current, pos + 1, remaining - e);
        current[pos] = 0;
    }
}

/// `C(n + r, n)` as a usize; the basis size is this minus one.
pub fn full_polynomial_space_dim(dim: usize, degree: u32) -> usize {
    let mut c: u128 = 1;
    for i in 1..=dim as u128 {
        c = c * (degree as u128 + i) / i;
    }
    usize::try_from(c).expect("polynomial space dimension overflows usize")
}
