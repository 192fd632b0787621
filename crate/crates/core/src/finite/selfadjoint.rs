//! Numerical self-adjointness test of `𝓛 = −Δ∂²` on the finite-line domain.
//!
//! Trial doublets are random polynomials of degree 7 in `x/d`, projected onto
//! the null space of the linear domain conditions. With a junction, a trial
//! doublet carries the boundary coordinate `w = α (n·U_d)` and `𝓛` acts on it
//! as `σ (n·ΔU′_d)`; the inner product adds `w₁ w₂ / α`.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::secular::SecularProblem;
use super::FiniteError;
use crate::linalg::{gauss_legendre, null_space, orthogonal_complement};

const DEGREE: usize = 7;

/// Which inner product the residual is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InnerProduct {
    /// Line integral plus the junction term `w₁ w₂ / α`.
    Full,
    /// Line integral only (negative control).
    DropBoundary,
}

/// Polynomial trial doublet: `coeffs[f][p]` multiplies `(x/d)^p` in
/// function `f` (`U_0..U_{N−1}`, then `V_0..V_{N−1}`).
#[derive(Debug, Clone)]
struct Trial {
    coeffs: Vec<Vec<f64>>,
}

impl Trial {
    /// Value and first two x-derivatives of function `f` at `x`.
    fn eval(&self, f: usize, x: f64, d: f64) -> (f64, f64, f64) {
        let xi = x / d;
        let c = &self.coeffs[f];
        let (mut v, mut dv, mut ddv) = (0.0, 0.0, 0.0);
        for p in (0..c.len()).rev() {
            v = v * xi + c[p];
        }
        for p in (1..c.len()).rev() {
            dv = dv * xi + p as f64 * c[p];
        }
        for p in (2..c.len()).rev() {
            ddv = ddv * xi + (p * (p - 1)) as f64 * c[p];
        }
        (v, dv / d, ddv / (d * d))
    }
}

/// Rows of the domain conditions acting on the stacked coefficients.
fn domain_constraints(problem: &SecularProblem) -> DMatrix<f64> {
    let n = problem.n_lines();
    let np = DEGREE + 1;
    let cols = 2 * n * np;
    let d = problem.d;
    let idx = |f: usize, p: usize| f * np + p;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    // V(0) − Y U(0)
    for i in 0..n {
        let mut r = vec![0.0; cols];
        r[idx(n + i, 0)] += 1.0;
        for j in 0..n {
            r[idx(j, 0)] -= problem.y[(i, j)];
        }
        rows.push(r);
    }
    // ΔU′(0) − Y V′(0)
    for i in 0..n {
        let mut r = vec![0.0; cols];
        r[idx(i, 1)] += problem.delta[i] / d;
        for j in 0..n {
            r[idx(n + j, 1)] -= problem.y[(i, j)] / d;
        }
        rows.push(r);
    }
    // ΔU′_d as functionals, one per line
    let flux_row = |i: usize| {
        let mut r = vec![0.0; cols];
        for p in 1..np {
            r[idx(i, p)] = problem.delta[i] * p as f64 / d;
        }
        r
    };
    let value_row = |f: usize| {
        let mut r = vec![0.0; cols];
        for p in 0..np {
            r[idx(f, p)] = 1.0;
        }
        r
    };
    if problem.has_junction() {
        let nv = problem.n_vector.as_ref().expect("junction has a line vector");
        let perp = orthogonal_complement(nv);
        for c in perp.column_iter() {
            let mut r = vec![0.0; cols];
            for i in 0..n {
                for (dst, src) in r.iter_mut().zip(flux_row(i)) {
                    *dst += c[i] * src;
                }
            }
            rows.push(r);
        }
    } else {
        for i in 0..n {
            rows.push(flux_row(i));
        }
    }
    for i in 0..n {
        rows.push(value_row(n + i));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    DMatrix::from_row_slice(rows.len(), cols, &flat)
}

fn random_trials(problem: &SecularProblem, count: usize, seed: u64) -> Vec<Trial> {
    let n = problem.n_lines();
    let np = DEGREE + 1;
    let basis = null_space(&domain_constraints(problem), 1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let g = DVector::from_fn(basis.ncols(), |_, _| rng.gen_range(-1.0..1.0));
            let c = &basis * g;
            Trial { coeffs: (0..2 * n).map(|f| c.rows(f * np, np).iter().copied().collect()).collect() }
        })
        .collect()
}

/// Field samples of a trial doublet and of `𝓛` applied to it, together
/// with their boundary coordinates.
struct Sampled {
    w: Vec<DVector<f64>>,
    lw: Vec<DVector<f64>>,
    wb: f64,
    lwb: f64,
}

fn sample(problem: &SecularProblem, t: &Trial, xs: &[f64]) -> Sampled {
    let n = problem.n_lines();
    let d = problem.d;
    let mut w = Vec::with_capacity(xs.len());
    let mut lw = Vec::with_capacity(xs.len());
    for &x in xs {
        let mut a = DVector::zeros(2 * n);
        let mut b = DVector::zeros(2 * n);
        for f in 0..2 * n {
            let (v, _, dd) = t.eval(f, x, d);
            a[f] = v;
            b[f] = -problem.delta[f % n] * dd;
        }
        w.push(a);
        lw.push(b);
    }
    let (wb, lwb) = match (&problem.n_vector, problem.has_junction()) {
        (Some(nv), true) => {
            let mut ud = 0.0;
            let mut flux = 0.0;
            for i in 0..n {
                let (v, dv, _) = t.eval(i, d, d);
                ud += nv[i] * v;
                flux += nv[i] * problem.delta[i] * dv;
            }
            (problem.alpha_value() * ud, problem.closure_sign * flux)
        }
        _ => (0.0, 0.0),
    };
    Sampled { w, lw, wb, lwb }
}

fn inner(problem: &SecularProblem, a: &[DVector<f64>], ab: f64, b: &[DVector<f64>], bb: f64, ws: &[f64], ip: InnerProduct) -> f64 {
    let n = problem.n_lines();
    let mut acc = 0.0;
    for ((x, y), w) in a.iter().zip(b).zip(ws) {
        let mut s = 0.0;
        for f in 0..n {
            s += x[f] * y[f] + x[n + f] * y[n + f] / problem.delta[f];
        }
        acc += w * s;
    }
    if ip == InnerProduct::Full && problem.has_junction() {
        acc += ab * bb / problem.alpha_value();
    }
    acc
}

/// Max over `pairs` random trial pairs of
/// `|⟨𝓛W₁,W₂⟩ − ⟨W₁,𝓛W₂⟩| / (‖𝓛W₁‖‖W₂‖ + ‖W₁‖‖𝓛W₂‖)`.
pub fn selfadjointness_residual(problem: &SecularProblem, pairs: usize, seed: u64, ip: InnerProduct) -> f64 {
    let trials = random_trials(problem, 2 * pairs, seed);
    let (xs, ws) = gauss_legendre(16, 0.0, problem.d);
    let sampled: Vec<Sampled> = trials.iter().map(|t| sample(problem, t, &xs)).collect();
    let mut worst: f64 = 0.0;
    for p in 0..pairs {
        let s1 = &sampled[2 * p];
        let s2 = &sampled[2 * p + 1];
        let l1w2 = inner(problem, &s1.lw, s1.lwb, &s2.w, s2.wb, &ws, ip);
        let w1l2 = inner(problem, &s1.w, s1.wb, &s2.lw, s2.lwb, &ws, ip);
        let norm = |w: &[DVector<f64>], b: f64| inner(problem, w, b, w, b, &ws, ip).abs().sqrt();
        let scale = norm(&s1.lw, s1.lwb) * norm(&s2.w, s2.wb) + norm(&s1.w, s1.wb) * norm(&s2.lw, s2.lwb);
        worst = worst.max((l1w2 - w1l2).abs() / scale.max(f64::MIN_POSITIVE));
    }
    worst
}

/// Outcome of settling the sign of the junction action.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosureReport {
    /// `(σ, residual)` for every sign tried, in order.
    pub tried: Vec<(f64, f64)>,
    pub accepted_sign: f64,
    pub residual: f64,
}

pub const CLOSURE_TOLERANCE: f64 = 1e-9;

/// Keep the current closure sign if the operator is self-adjoint with it,
/// otherwise flip it and re-check.
pub fn resolve_closure(problem: &mut SecularProblem, pairs: usize, seed: u64) -> Result<ClosureReport, FiniteError> {
    let first = selfadjointness_residual(problem, pairs, seed, InnerProduct::Full);
    let mut tried = vec![(problem.closure_sign, first)];
    if first < CLOSURE_TOLERANCE || !problem.has_junction() {
        return Ok(ClosureReport { tried, accepted_sign: problem.closure_sign, residual: first });
    }
    problem.closure_sign = -problem.closure_sign;
    let second = selfadjointness_residual(problem, pairs, seed, InnerProduct::Full);
    tried.push((problem.closure_sign, second));
    if second < CLOSURE_TOLERANCE {
        return Ok(ClosureReport { tried, accepted_sign: problem.closure_sign, residual: second });
    }
    problem.closure_sign = -problem.closure_sign;
    let (minus, plus) = if first_sign_negative(&tried) { (first, second) } else { (second, first) };
    Err(FiniteError::Closure { minus, plus })
}

fn first_sign_negative(tried: &[(f64, f64)]) -> bool {
    tried[0].0 < 0.0
}
