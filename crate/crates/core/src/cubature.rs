//! Cubature formulas on Wiener space and truncated path signatures.
//!
//! Paths are piecewise linear in `R^d` with an implicit time coordinate
//! (letter `0`) advancing at unit rate, so a segment of duration `dt` and
//! spatial increment `dw` contributes the level-one letters
//! `(dt, dw_1, ..., dw_d)`. The signature of a linear segment is the tensor
//! exponential of those letters, and segment signatures combine by
//! truncated tensor multiplication (Chen's identity), which makes signature
//! computation exact up to floating point.
//!
//! A [`WienerCubature`] is a weighted family of such paths over `[0, 1]`
//! whose signature average matches the expected Stratonovich signature of
//! Brownian motion for every multi-index of degree at most `m`, where the
//! degree of a word counts its length plus one extra for every time letter.
//! The Brownian targets come from [`bm_expected_iterated_integrals`]: the
//! tensor exponential of `T e_0 + (T/2) sum_i e_i e_i`.

use alloc::string::String;
use alloc::vec::Vec;

/// Degree of a multi-index: word length plus the number of `0` letters
/// (time counts twice).
pub fn word_degree(word: &[u8]) -> usize {
    word.len() + word.iter().filter(|&&l| l == 0).count()
}

/// One linear piece of a path: a strictly positive duration and a spatial
/// increment in `R^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub duration: f64,
    pub increment: Vec<f64>,
}

/// A piecewise-linear bounded-variation path in `R^d`, starting at zero,
/// with the time coordinate advancing linearly at unit rate.
#[derive(Debug, Clone, PartialEq)]
pub struct BVPath {
    d: usize,
    segments: Vec<Segment>,
}

impl BVPath {
    /// Panics on an empty segment list, a non-positive or non-finite
    /// duration, or an increment of the wrong dimension.
    pub fn new(d: usize, segments: Vec<Segment>) -> Self {
        assert!(d >= 1, "driving dimension must be >= 1");
        assert!(!segments.is_empty(), "a path needs at least one segment");
        for s in &segments {
            assert!(
                s.duration > 0.0 && s.duration.is_finite(),
                "segment durations must be positive"
            );
            assert_eq!(s.increment.len(), d, "increment dimension mismatch");
            assert!(s.increment.iter().all(|x| x.is_finite()));
        }
        BVPath { d, segments }
    }

    /// Straight segment over `[0, duration]` with the given increment.
    pub fn linear(duration: f64, increment: Vec<f64>) -> Self {
        let d = increment.len();
        BVPath::new(d, alloc::vec![Segment { duration, increment }])
    }

    pub fn driving_dim(&self) -> usize {
        self.d
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    /// Total variation of the spatial components (sum of increment norms).
    pub fn length(&self) -> f64 {
        self.segments
            .iter()
            .map(|s| libm::sqrt(s.increment.iter().map(|x| x * x).sum()))
            .sum()
    }

    /// Concatenation: this path followed by `other`.
    pub fn concat(&self, other: &BVPath) -> BVPath {
        assert_eq!(self.d, other.d);
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        BVPath {
            d: self.d,
            segments,
        }
    }
}

/// Coefficients of all words over the alphabet `{0, 1, ..., d}` up to a
/// fixed length, stored densely level by level. The level-`k` coefficient
/// of word `(w_1, ..., w_k)` sits at index `sum_j w_j (d+1)^(k-j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TruncatedSignature {
    d: usize,
    levels: Vec<Vec<f64>>,
}

impl TruncatedSignature {
    /// The unit of the tensor algebra (empty-word coefficient one).
    pub fn one(d: usize, depth: usize) -> Self {
        let mut levels = Vec::with_capacity(depth + 1);
        let mut size = 1usize;
        for k in 0..=depth {
            levels.push(if k == 0 {
                alloc::vec![1.0]
            } else {
                alloc::vec![0.0; size]
            });
            size = size
                .checked_mul(d + 1)
                .expect("signature level size overflow");
        }
        TruncatedSignature { d, levels }
    }

    pub fn driving_dim(&self) -> usize {
        self.d
    }

    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    /// Coefficient of a word (letters in `0..=d`, length at most the depth).
    pub fn coeff(&self, word: &[u8]) -> f64 {
        assert!(word.len() <= self.depth(), "word longer than the truncation");
        let mut idx = 0usize;
        for &l in word {
            assert!((l as usize) <= self.d, "letter out of alphabet");
            idx = idx * (self.d + 1) + l as usize;
        }
        self.levels[word.len()][idx]
    }

    pub fn level(&self, k: usize) -> &[f64] {
        &self.levels[k]
    }

    /// Truncated tensor product.
    pub fn mul(&self, other: &TruncatedSignature) -> TruncatedSignature {
        assert_eq!(self.d, other.d);
        assert_eq!(self.depth(), other.depth());
        let depth = self.depth();
        let base = self.d + 1;
        let mut out = TruncatedSignature::one(self.d, depth);
        for k in 0..=depth {
            let mut lvl = alloc::vec![0.0f64; self.levels[k].len()];
            for i in 0..=k {
                let j = k - i;
                let (a, b) = (&self.levels[i], &other.levels[j]);
                let shift = base.pow(j as u32);
                for (ia, &ca) in a.iter().enumerate() {
                    if ca == 0.0 {
                        continue;
                    }
                    let off = ia * shift;
                    for (ib, &cb) in b.iter().enumerate() {
                        lvl[off + ib] += ca * cb;
                    }
                }
            }
            out.levels[k] = lvl;
        }
        out
    }

    /// Restriction to words of length at most `depth` (exact truncation).
    pub fn truncate(&self, depth: usize) -> TruncatedSignature {
        assert!(depth <= self.depth());
        TruncatedSignature {
            d: self.d,
            levels: self.levels[..=depth].to_vec(),
        }
    }

    /// Signature of one linear segment: `exp(dt e_0 + sum_i dw_i e_i)`,
    /// whose word coefficient is the product of its letters' increments
    /// over the factorial of its length.
    pub fn segment_exponential(d: usize, depth: usize, duration: f64, increment: &[f64]) -> Self {
        assert_eq!(increment.len(), d);
        let base = d + 1;
        let mut letters = Vec::with_capacity(base);
        letters.push(duration);
        letters.extend_from_slice(increment);

        let mut sig = TruncatedSignature::one(d, depth);
        for k in 1..=depth {
            let prev = sig.levels[k - 1].clone();
            let lvl = &mut sig.levels[k];
            for (ia, &ca) in prev.iter().enumerate() {
                let off = ia * base;
                for (l, &xl) in letters.iter().enumerate() {
                    lvl[off + l] = ca * xl / k as f64;
                }
            }
        }
        sig
    }

    /// Multiplies every word coefficient by `T^(degree/2)`; the Brownian
    /// scaling law expressed on the coefficients.
    pub fn brownian_rescale(&self, t: f64) -> TruncatedSignature {
        assert!(t > 0.0);
        let base = self.d + 1;
        let sqrt_t = libm::sqrt(t);
        let mut out = self.clone();
        for k in 1..=out.depth() {
            for idx in 0..out.levels[k].len() {
                let zeros = count_zero_letters(idx, k, base);
                let degree = k + zeros;
                out.levels[k][idx] *= powi(sqrt_t, degree as i32);
            }
        }
        out
    }
}

fn powi(x: f64, n: i32) -> f64 {
    let mut acc = 1.0f64;
    let mut b = x;
    let mut e = n as u32;
    while e > 0 {
        if e & 1 == 1 {
            acc *= b;
        }
        b *= b;
        e >>= 1;
    }
    acc
}

fn count_zero_letters(mut idx: usize, len: usize, base: usize) -> usize {
    let mut zeros = 0;
    for _ in 0..len {
        if idx % base == 0 {
            zeros += 1;
        }
        idx /= base;
    }
    zeros
}

fn decode_word(mut idx: usize, len: usize, base: usize) -> Vec<u8> {
    let mut word = alloc::vec![0u8; len];
    for pos in (0..len).rev() {
        word[pos] = (idx % base) as u8;
        idx /= base;
    }
    word
}

/// All words with degree at most `m`, in (level, index) order, starting
/// with the empty word.
pub fn words_up_to_degree(d: usize, m: usize) -> Vec<Vec<u8>> {
    let base = d + 1;
    let mut out = alloc::vec![Vec::new()];
    for k in 1..=m {
        for idx in 0..base.pow(k as u32) {
            if k + count_zero_letters(idx, k, base) <= m {
                out.push(decode_word(idx, k, base));
            }
        }
    }
    out
}

/// Truncated signature of a piecewise-linear path: the ordered product of
/// its segment exponentials.
pub fn signature(path: &BVPath, depth: usize) -> TruncatedSignature {
    assert!(depth >= 1);
    let mut sig = TruncatedSignature::one(path.driving_dim(), depth);
    for s in path.segments() {
        let seg =
            TruncatedSignature::segment_exponential(path.driving_dim(), depth, s.duration, &s.increment);
        sig = sig.mul(&seg);
    }
    sig
}

/// Requested truncation degree is beyond the supported bound.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnsupportedDepth {
    pub requested: usize,
    pub max: usize,
}

impl core::fmt::Display for UnsupportedDepth {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "truncation degree {} exceeds the supported bound {}",
            self.requested, self.max
        )
    }
}

impl core::error::Error for UnsupportedDepth {}

const MAX_BM_DEGREE: usize = 8;

/// Expected Stratonovich signature of `(t, B^1, ..., B^d)` over `[0, T]`,
/// truncated at word length `m`.
///
/// Computed as the tensor exponential of the degree-two generator
/// `e_0 + (1/2) sum_i e_i e_i` at `T = 1`, then rescaled word by word with
/// the exact `T^(degree/2)` law, so the scaling identity holds by
/// construction.
pub fn bm_expected_iterated_integrals(
    d: usize,
    m: usize,
    t: f64,
) -> Result<TruncatedSignature, UnsupportedDepth> {
    if m > MAX_BM_DEGREE {
        return Err(UnsupportedDepth {
            requested: m,
            max: MAX_BM_DEGREE,
        });
    }
    assert!(m >= 1);
    assert!(t > 0.0 && t.is_finite());
    let base = d + 1;

    // generator at T = 1
    let mut gen = TruncatedSignature::one(d, m);
    gen.levels[0][0] = 0.0;
    gen.levels[1][0] = 1.0; // e_0
    if m >= 2 {
        for i in 1..=d {
            gen.levels[2][i * base + i] = 0.5; // e_i e_i / 2
        }
    }

    // exp(gen) = sum_k gen^k / k!
    let mut sum = TruncatedSignature::one(d, m);
    let mut term = TruncatedSignature::one(d, m);
    for k in 1..=m {
        term = term.mul(&gen);
        let factor = 1.0 / k as f64;
        for lvl in 0..=m {
            for c in term.levels[lvl].iter_mut() {
                *c *= factor;
            }
        }
        for lvl in 0..=m {
            for (sc, &tc) in sum.levels[lvl].iter_mut().zip(term.levels[lvl].iter()) {
                *sc += tc;
            }
        }
    }

    Ok(if t == 1.0 { sum } else { sum.brownian_rescale(t) })
}

/// Outcome of checking a formula against the Brownian targets.
#[derive(Debug, Clone, PartialEq)]
pub struct CubatureCheck {
    pub max_abs_deviation: f64,
    pub worst_word: Vec<u8>,
    pub tol: f64,
}

impl CubatureCheck {
    pub fn passes(&self) -> bool {
        self.max_abs_deviation <= self.tol
    }
}

/// Construction errors for [`WienerCubature`].
#[derive(Debug, Clone, PartialEq)]
pub enum CubatureError {
    /// Structural invariant broken (weights, durations, dimensions).
    InvalidStructure(String),
    /// The formula does not integrate its declared degree.
    DegreeCheckFailed(CubatureCheck),
    /// Declared degree beyond the Brownian-oracle bound.
    UnsupportedDegree(UnsupportedDepth),
}

impl core::fmt::Display for CubatureError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            CubatureError::InvalidStructure(msg) => write!(f, "invalid cubature structure: {msg}"),
            CubatureError::DegreeCheckFailed(c) => write!(
                f,
                "formula misses its declared degree: |deviation| = {:e} > {:e} at word {:?}",
                c.max_abs_deviation, c.tol, c.worst_word
            ),
            CubatureError::UnsupportedDegree(e) => write!(f, "{e}"),
        }
    }
}

impl core::error::Error for CubatureError {}

/// A degree-`m` cubature measure on Wiener space over the unit interval:
/// weighted bounded-variation paths matching all Brownian expected iterated
/// Stratonovich integrals of degree at most `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerCubature {
    d: usize,
    degree: usize,
    paths: Vec<BVPath>,
    weights: Vec<f64>,
}

impl WienerCubature {
    /// Validates structure and verifies the cubature property at tolerance
    /// `tol` before returning the formula.
    pub fn new(
        d: usize,
        degree: usize,
        paths: Vec<BVPath>,
        weights: Vec<f64>,
        tol: f64,
    ) -> Result<Self, CubatureError> {
        if d < 1 || degree < 1 {
            return Err(CubatureError::InvalidStructure(String::from(
                "dimension and degree must be >= 1",
            )));
        }
        if paths.is_empty() || paths.len() != weights.len() {
            return Err(CubatureError::InvalidStructure(String::from(
                "need equally many paths and weights, at least one",
            )));
        }
        if weights.iter().any(|&w| !(w > 0.0) || !w.is_finite()) {
            return Err(CubatureError::InvalidStructure(String::from(
                "weights must be strictly positive",
            )));
        }
        for p in &paths {
            if p.driving_dim() != d {
                return Err(CubatureError::InvalidStructure(String::from(
                    "path dimension mismatch",
                )));
            }
            if (p.total_duration() - 1.0).abs() > 1e-12 {
                return Err(CubatureError::InvalidStructure(String::from(
                    "path durations must sum to one",
                )));
            }
        }
        let formula = WienerCubature {
            d,
            degree,
            paths,
            weights,
        };
        let check = verify_cubature(&formula, tol).map_err(CubatureError::UnsupportedDegree)?;
        if check.passes() {
            Ok(formula)
        } else {
            Err(CubatureError::DegreeCheckFailed(check))
        }
    }

    pub fn driving_dim(&self) -> usize {
        self.d
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn paths(&self) -> &[BVPath] {
        &self.paths
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn n_paths(&self) -> usize {
        self.paths.len()
    }

    /// Longest spatial variation among the support paths.
    pub fn max_path_length(&self) -> f64 {
        self.paths.iter().map(|p| p.length()).fold(0.0, f64::max)
    }
}

/// Max over words of degree `<= m` of the gap between the weighted
/// signature sum and the Brownian target.
pub fn verify_cubature(formula: &WienerCubature, tol: f64) -> Result<CubatureCheck, UnsupportedDepth> {
    let (d, m) = (formula.d, formula.degree);
    let expected = bm_expected_iterated_integrals(d, m, 1.0)?;
    let sigs: Vec<TruncatedSignature> = formula
        .paths
        .iter()
        .map(|p| signature(p, m))
        .collect();

    let mut worst = CubatureCheck {
        max_abs_deviation: 0.0,
        worst_word: Vec::new(),
        tol,
    };
    for word in words_up_to_degree(d, m) {
        let sum: f64 = sigs
            .iter()
            .zip(formula.weights.iter())
            .map(|(s, &w)| w * s.coeff(&word))
            .sum();
        let dev = (sum - expected.coeff(&word)).abs();
        if dev > worst.max_abs_deviation {
            worst.max_abs_deviation = dev;
            worst.worst_word = word;
        }
    }
    Ok(worst)
}

/// The classical degree-3 construction: `2d` straight lines with increments
/// `±sqrt(d) e_i` and uniform weights `1/(2d)`. Verified at `1e-10` during
/// construction.
pub fn degree3_formula(d: usize) -> WienerCubature {
    assert!(d >= 1);
    let mut paths = Vec::with_capacity(2 * d);
    let mut weights = Vec::with_capacity(2 * d);
    let step = libm::sqrt(d as f64);
    for i in 0..d {
        for sign in [1.0, -1.0] {
            let mut inc = alloc::vec![0.0; d];
            inc[i] = sign * step;
            paths.push(BVPath::linear(1.0, inc));
            weights.push(1.0 / (2 * d) as f64);
        }
    }
    WienerCubature::new(d, 3, paths, weights, 1e-10)
        .expect("the degree-3 construction verifies by symmetry")
}

/// Rescales the unit-interval formula paths to `[0, T]`: durations scale by
/// `T`, spatial increments by `sqrt(T)`, weights are unchanged.
pub fn rescale(formula: &WienerCubature, t: f64) -> Vec<BVPath> {
    assert!(t > 0.0 && t.is_finite());
    let sqrt_t = libm::sqrt(t);
    formula
        .paths
        .iter()
        .map(|p| {
            let segments = p
                .segments()
                .iter()
                .map(|s| Segment {
                    duration: s.duration * t,
                    increment: s.increment.iter().map(|x| x * sqrt_t).collect(),
                })
                .collect();
            BVPath::new(p.driving_dim(), segments)
        })
        .collect()
}
