//! Vector-field models for the Stratonovich SDE
//! `d xi = V_0(xi) dt + sum_i V_i(xi) o dB^i`, plus payoff functions and
//! closed-form expectation oracles for the registry models.
//!
//! The Hörmander step `p` and the field bound are declared per model, not
//! verified: they are analysis inputs consumed by the radius schedules and
//! the growth bounds.

use alloc::vec::Vec;

/// Registry of concrete driving fields.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelKind {
    /// `V_i(x) = c_i`, constant vectors (index 0 is the drift field).
    Constant { fields: Vec<Vec<f64>> },
    /// `V_i(x) = A_i x`, row-major square matrices.
    Linear { mats: Vec<Vec<Vec<f64>>> },
    /// Scalar Black–Scholes martingale: `V_0(x) = -sigma^2 x / 2`,
    /// `V_1(x) = sigma x`.
    Gbm { sigma: f64 },
    /// `N = 2`, `d = 1`: `V_0 = 0`, `V_1(x) = (1, x_1)`; the second
    /// coordinate accumulates `int xi_1 o dB`.
    Heisenberg,
}

/// Driving fields `V_0, ..., V_d` on `R^N` with their declared regularity
/// data.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldModel {
    state_dim: usize,
    driving_dim: usize,
    kind: ModelKind,
    hormander_step: u32,
    field_bound: Option<f64>,
}

impl VectorFieldModel {
    pub fn constant(fields: Vec<Vec<f64>>) -> Self {
        assert!(fields.len() >= 2, "need V_0 and at least one driving field");
        let state_dim = fields[0].len();
        assert!(state_dim >= 1);
        for f in &fields {
            assert_eq!(f.len(), state_dim);
            assert!(f.iter().all(|c| c.is_finite()));
        }
        let bound = fields
            .iter()
            .map(|f| libm::sqrt(f.iter().map(|c| c * c).sum()))
            .fold(0.0, f64::max);
        VectorFieldModel {
            state_dim,
            driving_dim: fields.len() - 1,
            kind: ModelKind::Constant { fields },
            hormander_step: 1,
            field_bound: Some(bound),
        }
    }

    pub fn linear(mats: Vec<Vec<Vec<f64>>>) -> Self {
        assert!(mats.len() >= 2, "need A_0 and at least one driving matrix");
        let state_dim = mats[0].len();
        assert!(state_dim >= 1);
        for a in &mats {
            assert_eq!(a.len(), state_dim);
            for row in a {
                assert_eq!(row.len(), state_dim);
                assert!(row.iter().all(|c| c.is_finite()));
            }
        }
        VectorFieldModel {
            state_dim,
            driving_dim: mats.len() - 1,
            kind: ModelKind::Linear { mats },
            hormander_step: 1,
            field_bound: None,
        }
    }

    pub fn gbm(sigma: f64) -> Self {
        assert!(sigma > 0.0 && sigma.is_finite());
        VectorFieldModel {
            state_dim: 1,
            driving_dim: 1,
            kind: ModelKind::Gbm { sigma },
            hormander_step: 1,
            field_bound: None, // violates bounded fields; kept for its oracle
        }
    }

    pub fn heisenberg() -> Self {
        VectorFieldModel {
            state_dim: 2,
            driving_dim: 1,
            kind: ModelKind::Heisenberg,
            hormander_step: 2,
            field_bound: None,
        }
    }

    /// Overrides the declared Hörmander step.
    pub fn with_hormander_step(mut self, p: u32) -> Self {
        assert!(p >= 1);
        self.hormander_step = p;
        self
    }

    pub fn with_field_bound(mut self, bound: f64) -> Self {
        assert!(bound > 0.0);
        self.field_bound = Some(bound);
        self
    }

    pub fn state_dim(&self) -> usize {
        self.state_dim
    }

    pub fn driving_dim(&self) -> usize {
        self.driving_dim
    }

    pub fn hormander_step(&self) -> u32 {
        self.hormander_step
    }

    pub fn field_bound(&self) -> Option<f64> {
        self.field_bound
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    /// Evaluates `V_i(x)` into `out` (`i = 0` is the drift field).
    pub fn eval_field(&self, i: usize, x: &[f64], out: &mut [f64]) {
        debug_assert!(i <= self.driving_dim);
        debug_assert_eq!(x.len(), self.state_dim);
        debug_assert_eq!(out.len(), self.state_dim);
        match &self.kind {
            ModelKind::Constant { fields } => out.copy_from_slice(&fields[i]),
            ModelKind::Linear { mats } => {
                for (o, row) in out.iter_mut().zip(mats[i].iter()) {
                    *o = row.iter().zip(x.iter()).map(|(a, b)| a * b).sum();
                }
            }
            ModelKind::Gbm { sigma } => {
                out[0] = if i == 0 {
                    -0.5 * sigma * sigma * x[0]
                } else {
                    sigma * x[0]
                };
            }
            ModelKind::Heisenberg => {
                if i == 0 {
                    out[0] = 0.0;
                    out[1] = 0.0;
                } else {
                    out[0] = 1.0;
                    out[1] = x[0];
                }
            }
        }
    }

    /// Closed-form `E f(xi_{T,x})` where available; `None` when the model
    /// and payoff have no registered oracle.
    pub fn exact_expectation(&self, payoff: &Payoff, x0: &[f64], t: f64) -> Option<f64> {
        assert_eq!(x0.len(), self.state_dim);
        assert!(t > 0.0);
        match (&self.kind, payoff) {
            (_, Payoff::One) => Some(1.0),
            (ModelKind::Gbm { .. }, Payoff::Coordinate(0)) => Some(x0[0]), // martingale
            (ModelKind::Gbm { sigma }, Payoff::Call { strike }) => {
                Some(black_scholes_call(x0[0], *strike, *sigma, t))
            }
            (ModelKind::Gbm { sigma }, Payoff::AbsSpread { strike }) => {
                // |S - K| = 2 (S - K)^+ - (S - K), and E S_T = x0
                Some(2.0 * black_scholes_call(x0[0], *strike, *sigma, t) - (x0[0] - strike))
            }
            (ModelKind::Constant { fields }, Payoff::Coordinate(j)) => {
                (*j < self.state_dim).then(|| x0[*j] + fields[0][*j] * t)
            }
            (ModelKind::Constant { fields }, Payoff::Call { strike }) => {
                let mean = x0[0] + fields[0][0] * t;
                let var: f64 = t * fields[1..].iter().map(|f| f[0] * f[0]).sum::<f64>();
                Some(gaussian_call(mean, libm::sqrt(var), *strike))
            }
            (ModelKind::Constant { fields }, Payoff::AbsSpread { strike }) => {
                let mean = x0[0] + fields[0][0] * t;
                let var: f64 = t * fields[1..].iter().map(|f| f[0] * f[0]).sum::<f64>();
                Some(2.0 * gaussian_call(mean, libm::sqrt(var), *strike) - (mean - strike))
            }
            (ModelKind::Linear { mats }, Payoff::Coordinate(j)) => {
                // E xi solves m' = (A_0 + 1/2 sum A_i^2) m
                if *j >= self.state_dim {
                    return None;
                }
                let n = self.state_dim;
                let mut gen = mats[0].clone();
                for a in &mats[1..] {
                    let a2 = mat_mul(a, a);
                    for (gr, ar) in gen.iter_mut().zip(a2.iter()) {
                        for (g, &v) in gr.iter_mut().zip(ar.iter()) {
                            *g += 0.5 * v;
                        }
                    }
                }
                for row in gen.iter_mut() {
                    for g in row.iter_mut() {
                        *g *= t;
                    }
                }
                let e = mat_exp(&gen);
                Some((0..n).map(|k| e[*j][k] * x0[k]).sum())
            }
            (ModelKind::Heisenberg, Payoff::Coordinate(0)) => Some(x0[0]),
            (ModelKind::Heisenberg, Payoff::Coordinate(1)) => Some(x0[1] + 0.5 * t),
            (ModelKind::Heisenberg, Payoff::Call { strike }) => {
                // xi_1 ~ N(x_1, T)
                Some(gaussian_call(x0[0], libm::sqrt(t), *strike))
            }
            _ => None,
        }
    }
}

/// Payoff functions `f(x)` applied to the terminal state.
#[derive(Debug, Clone, PartialEq)]
pub enum Payoff {
    /// `f == 1`; integrates to the total mass.
    One,
    /// A single coordinate; `Coordinate(0)` is the identity for scalar
    /// models.
    Coordinate(usize),
    /// `(x_1 - K)^+`.
    Call { strike: f64 },
    /// `|x_1 - K|`, a Lipschitz kink without the call's one-sided flatness.
    AbsSpread { strike: f64 },
}

impl Payoff {
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        match self {
            Payoff::One => 1.0,
            Payoff::Coordinate(j) => x[*j],
            Payoff::Call { strike } => (x[0] - strike).max(0.0),
            Payoff::AbsSpread { strike } => (x[0] - strike).abs(),
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + libm::erf(z / libm::sqrt(2.0)))
}

fn normal_pdf(z: f64) -> f64 {
    libm::exp(-0.5 * z * z) / libm::sqrt(2.0 * core::f64::consts::PI)
}

/// Zero-rate Black–Scholes call price on a martingale GBM.
pub fn black_scholes_call(spot: f64, strike: f64, sigma: f64, t: f64) -> f64 {
    assert!(spot > 0.0 && strike > 0.0 && sigma > 0.0 && t > 0.0);
    let sd = sigma * libm::sqrt(t);
    let d1 = (libm::log(spot / strike) + 0.5 * sd * sd) / sd;
    let d2 = d1 - sd;
    spot * normal_cdf(d1) - strike * normal_cdf(d2)
}

/// `E (Z - K)^+` for `Z ~ N(mean, sd^2)`.
pub fn gaussian_call(mean: f64, sd: f64, strike: f64) -> f64 {
    if sd == 0.0 {
        return (mean - strike).max(0.0);
    }
    let z = (mean - strike) / sd;
    (mean - strike) * normal_cdf(z) + sd * normal_pdf(z)
}

fn mat_mul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut c = alloc::vec![alloc::vec![0.0; n]; n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i][k];
            if aik == 0.0 {
                continue;
            }
            for j in 0..n {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

/// Matrix exponential by scaling-and-squaring on the Taylor series; meant
/// for the small systems of the registry oracles.
fn mat_exp(m: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = m.len();
    let norm: f64 = m
        .iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0f64;
    while norm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let a: Vec<Vec<f64>> = m
        .iter()
        .map(|row| row.iter().map(|&x| x * scale).collect())
        .collect();

    let mut result: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut term = result.clone();
    for k in 1..=24 {
        term = mat_mul(&term, &a);
        let f = 1.0 / k as f64;
        for row in term.iter_mut() {
            for x in row.iter_mut() {
                *x *= f;
            }
        }
        for (rr, tr) in result.iter_mut().zip(term.iter()) {
            for (r, &tv) in rr.iter_mut().zip(tr.iter()) {
                *r += tv;
            }
        }
    }
    for _ in 0..squarings {
        result = mat_mul(&result, &result);
    }
    result
}
