//! Doubled flux/charge eigenbasis of semi-infinite lines joined by a
//! nonreciprocal element at `x = 0`.
//!
//! In rescaled units the lines obey `Φ̇ = Q′`, `Q̇ = ΔΦ′` with boundary
//! condition `V(0) = Y U(0)`, `ΔU′(0) = Y V′(0)` on doublets `W = (U, V)`.
//! With `Ỹ = Δ^{-1/2} Y Δ^{-1/2}` and the symmetric positive matrix
//! `M = Δ^{-1/2} + Ỹᵀ Δ^{1/2} Ỹ`, every eigenvector `e_λ` of `M` gives two
//! delta-normalized doublets per frequency:
//!
//! ```text
//! u:  √(2/(π m_λ)) cos(ω x Δ^{-1/2}) (Δ^{-1/2} e_λ ; Δ^{1/2} Ỹ e_λ)
//! v:  √(2/(π m_λ)) sin(ω x Δ^{-1/2}) (Ỹ e_λ ; e_λ)
//! ```
//!
//! Orthonormality reduces to the quadratic form `M ⊕ M` on the coefficient
//! vectors, so it is checked algebraically, never by quadrature over the
//! half line.

use nalgebra::{Complex, DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::linalg::{frobenius, is_skew, symmetric_eigen_sorted};
use crate::netlist::RescaledSpec;

pub type C64 = Complex<f64>;

#[derive(Debug, Error, PartialEq)]
pub enum SpectralError {
    #[error("admittance is not skew-symmetric")]
    NotSkew,
    #[error("the nonreciprocal element has no admittance form")]
    NoImmittance,
    #[error("reduced descriptions require a reciprocal circuit")]
    NonReciprocal,
    #[error("circuit lines must be semi-infinite")]
    NotSemiInfinite,
    #[error("dimension mismatch: Δ has {delta} entries, Y is {y}×{y}")]
    Dimension { delta: usize, y: usize },
    #[error("velocity matrix entries must be positive")]
    BadDelta,
    #[error("frequencies must be positive, got {0}")]
    BadFrequency(f64),
    #[error("mode vectors depend on ω: boundary residual {residual:.3e} at ω = {omega}")]
    OmegaDependence { omega: f64, residual: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisKind {
    SemiInfinite,
    ReducedFlux,
    ReducedCharge,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    U,
    V,
}

impl Branch {
    pub fn label(self) -> &'static str {
        match self {
            Branch::U => "u",
            Branch::V => "v",
        }
    }
}

/// Doublet whose line `j` components are trigonometric in `k_j x`:
/// `U_j = phase (u_cos_j cos k_j x + u_sin_j sin k_j x)`, likewise `V_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct TrigDoublet {
    pub omega: f64,
    pub k: DVector<f64>,
    pub u_cos: DVector<f64>,
    pub u_sin: DVector<f64>,
    pub v_cos: DVector<f64>,
    pub v_sin: DVector<f64>,
    pub phase: C64,
}

impl TrigDoublet {
    pub fn zero(omega: f64, delta: &DVector<f64>) -> Self {
        let n = delta.len();
        Self {
            omega,
            k: delta.map(|d| omega / d.sqrt()),
            u_cos: DVector::zeros(n),
            u_sin: DVector::zeros(n),
            v_cos: DVector::zeros(n),
            v_sin: DVector::zeros(n),
            phase: C64::new(1.0, 0.0),
        }
    }

    /// Real-valued `(U(x), V(x))` without the phase factor.
    pub fn eval_real(&self, x: f64) -> (DVector<f64>, DVector<f64>) {
        let n = self.k.len();
        let mut u = DVector::zeros(n);
        let mut v = DVector::zeros(n);
        for j in 0..n {
            let (s, c) = (self.k[j] * x).sin_cos();
            u[j] = self.u_cos[j] * c + self.u_sin[j] * s;
            v[j] = self.v_cos[j] * c + self.v_sin[j] * s;
        }
        (u, v)
    }

    /// `(U(x), V(x))` including the phase.
    pub fn eval(&self, x: f64) -> (Vec<C64>, Vec<C64>) {
        let (u, v) = self.eval_real(x);
        (u.iter().map(|a| self.phase * a).collect(), v.iter().map(|a| self.phase * a).collect())
    }

    /// `(U′(x), V′(x))` without the phase factor.
    pub fn derivative_real(&self, x: f64) -> (DVector<f64>, DVector<f64>) {
        let n = self.k.len();
        let mut du = DVector::zeros(n);
        let mut dv = DVector::zeros(n);
        for j in 0..n {
            let k = self.k[j];
            let (s, c) = (k * x).sin_cos();
            du[j] = k * (-self.u_cos[j] * s + self.u_sin[j] * c);
            dv[j] = k * (-self.v_cos[j] * s + self.v_sin[j] * c);
        }
        (du, dv)
    }

    pub fn scaled(&self, factor: C64) -> Self {
        let mut out = self.clone();
        out.phase *= factor;
        out
    }

    /// Coefficient of `δ(ω − ω′)` in `∫₀^∞ (U†U′ + V†Δ⁻¹V′) dx` for two
    /// doublets at the same frequency.
    pub fn delta_inner(&self, other: &TrigDoublet, delta: &DVector<f64>) -> C64 {
        let mut acc = 0.0;
        for j in 0..delta.len() {
            let sd = delta[j].sqrt();
            acc += sd * (self.u_cos[j] * other.u_cos[j] + self.u_sin[j] * other.u_sin[j]);
            acc += (self.v_cos[j] * other.v_cos[j] + self.v_sin[j] * other.v_sin[j]) / sd;
        }
        self.phase.conj() * other.phase * (std::f64::consts::FRAC_PI_2 * acc)
    }
}

/// `𝒯W = −i (V′ ; ΔU′)`, in closed form on trigonometric doublets.
pub fn telegrapher_apply(w: &TrigDoublet, delta: &DVector<f64>) -> TrigDoublet {
    let n = delta.len();
    let mut out = TrigDoublet::zero(w.omega, delta);
    out.k = w.k.clone();
    for j in 0..n {
        let k = w.k[j];
        out.u_cos[j] = k * w.v_sin[j];
        out.u_sin[j] = -k * w.v_cos[j];
        out.v_cos[j] = delta[j] * k * w.u_sin[j];
        out.v_sin[j] = -delta[j] * k * w.u_cos[j];
    }
    out.phase = w.phase * C64::new(0.0, -1.0);
    out
}

/// Eigenbasis data shared by all frequencies.
#[derive(Debug, Clone)]
pub struct ModeBasis {
    pub kind: BasisKind,
    pub frequencies: Vec<f64>,
    pub m_values: Vec<f64>,
    /// Columns are the `e_λ`.
    pub e_vectors: DMatrix<f64>,
    pub y: DMatrix<f64>,
    pub y_tilde: DMatrix<f64>,
    pub delta: DVector<f64>,
}

/// `M = Δ^{-1/2} + Ỹᵀ Δ^{1/2} Ỹ` and its eigenpairs, `m` descending.
pub fn build_m_matrix(
    delta: &DVector<f64>,
    y: &DMatrix<f64>,
) -> Result<(DMatrix<f64>, Vec<f64>, DMatrix<f64>), SpectralError> {
    let n = delta.len();
    if y.nrows() != n || y.ncols() != n {
        return Err(SpectralError::Dimension { delta: n, y: y.nrows() });
    }
    if delta.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
        return Err(SpectralError::BadDelta);
    }
    if !is_skew(y, 1e-10) {
        return Err(SpectralError::NotSkew);
    }
    let yt = y_tilde(delta, y);
    let m = DMatrix::from_diagonal(&delta.map(|d| 1.0 / d.sqrt()))
        + yt.transpose() * DMatrix::from_diagonal(&delta.map(f64::sqrt)) * &yt;
    let (vals, vecs) = symmetric_eigen_sorted(&m, 1e-10);
    Ok((m, vals, vecs))
}

/// `Ỹ = Δ^{-1/2} Y Δ^{-1/2}`.
pub fn y_tilde(delta: &DVector<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let s = DMatrix::from_diagonal(&delta.map(|d| 1.0 / d.sqrt()));
    &s * y * &s
}

fn check_grid(grid: &[f64]) -> Result<(), SpectralError> {
    match grid.iter().find(|w| !(w.is_finite() && **w > 0.0)) {
        Some(w) => Err(SpectralError::BadFrequency(*w)),
        None => Ok(()),
    }
}

/// Basis from explicit `Δ` and rescaled `Y`.
pub fn basis_from_matrices(delta: &DVector<f64>, y: &DMatrix<f64>, grid: &[f64]) -> Result<ModeBasis, SpectralError> {
    check_grid(grid)?;
    let (_, m_values, e_vectors) = build_m_matrix(delta, y)?;
    let basis = ModeBasis {
        kind: BasisKind::SemiInfinite,
        frequencies: grid.to_vec(),
        m_values,
        e_vectors,
        y: y.clone(),
        y_tilde: y_tilde(delta, y),
        delta: delta.clone(),
    };
    basis.assert_omega_independent(1e-10)?;
    Ok(basis)
}

/// Doubled eigenbasis on the given frequency grid.
pub fn semi_infinite_basis(spec: &RescaledSpec, grid: &[f64]) -> Result<ModeBasis, SpectralError> {
    if spec.length.is_some() {
        return Err(SpectralError::NotSemiInfinite);
    }
    let y = spec.y.as_ref().ok_or(SpectralError::NoImmittance)?;
    basis_from_matrices(&spec.delta, y, grid)
}

/// Reduced (flux-only or charge-only) basis of reciprocal lines.
pub fn reduced_basis(spec: &RescaledSpec, grid: &[f64], kind: BasisKind) -> Result<ModeBasis, SpectralError> {
    if spec.has_element {
        return Err(SpectralError::NonReciprocal);
    }
    if spec.length.is_some() {
        return Err(SpectralError::NotSemiInfinite);
    }
    reduced_from_delta(&spec.delta, grid, kind)
}

pub fn reduced_from_delta(delta: &DVector<f64>, grid: &[f64], kind: BasisKind) -> Result<ModeBasis, SpectralError> {
    check_grid(grid)?;
    let n = delta.len();
    let zero = DMatrix::zeros(n, n);
    let (_, m_values, e_vectors) = build_m_matrix(delta, &zero)?;
    Ok(ModeBasis {
        kind,
        frequencies: grid.to_vec(),
        m_values,
        e_vectors,
        y: zero.clone(),
        y_tilde: zero,
        delta: delta.clone(),
    })
}

impl ModeBasis {
    pub fn n_lines(&self) -> usize {
        self.delta.len()
    }

    pub fn e(&self, lambda: usize) -> DVector<f64> {
        self.e_vectors.column(lambda).into_owned()
    }

    /// Branches carried by this basis.
    pub fn branches(&self) -> Vec<Branch> {
        match self.kind {
            BasisKind::SemiInfinite => vec![Branch::U, Branch::V],
            BasisKind::ReducedFlux => vec![Branch::U],
            BasisKind::ReducedCharge => vec![Branch::V],
        }
    }

    /// The mode function `W_{ω(branch, λ)}`.
    pub fn mode(&self, omega: f64, branch: Branch, lambda: usize) -> TrigDoublet {
        let mut w = TrigDoublet::zero(omega, &self.delta);
        let e = self.e(lambda);
        match self.kind {
            BasisKind::SemiInfinite => {
                let norm = (2.0 / (std::f64::consts::PI * self.m_values[lambda])).sqrt();
                let ye = &self.y_tilde * &e;
                match branch {
                    Branch::U => {
                        w.u_cos = e.zip_map(&self.delta, |a, d| norm * a / d.sqrt());
                        w.v_cos = ye.zip_map(&self.delta, |a, d| norm * a * d.sqrt());
                    }
                    Branch::V => {
                        w.u_sin = ye * norm;
                        w.v_sin = e * norm;
                    }
                }
            }
            BasisKind::ReducedFlux => {
                w.u_cos = e.zip_map(&self.delta, |a, d| a * (2.0 / (std::f64::consts::PI * d.sqrt())).sqrt());
            }
            BasisKind::ReducedCharge => {
                w.v_sin = e.zip_map(&self.delta, |a, d| a * (2.0 * d.sqrt() / std::f64::consts::PI).sqrt());
            }
        }
        w
    }

    /// `(‖V(0) − Y U(0)‖, ‖ΔU′(0) − Y V′(0)‖)`.
    pub fn boundary_residuals(&self, w: &TrigDoublet) -> (f64, f64) {
        let (u0, v0) = w.eval_real(0.0);
        let (du0, dv0) = w.derivative_real(0.0);
        let r1 = (&v0 - &self.y * &u0).norm();
        let r2 = (du0.component_mul(&self.delta) - &self.y * &dv0).norm();
        (r1 * w.phase.norm(), r2 * w.phase.norm())
    }

    /// Largest boundary residual over the grid, all branches and all `λ`.
    pub fn max_boundary_residual(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for &omega in &self.frequencies {
            for b in self.branches() {
                for l in 0..self.n_lines() {
                    let (r1, r2) = self.boundary_residuals(&self.mode(omega, b, l));
                    worst = worst.max(r1).max(r2);
                }
            }
        }
        worst
    }

    /// The `e_λ` are computed once; fail if they stop satisfying the boundary
    /// conditions somewhere on the grid.
    pub fn assert_omega_independent(&self, tol: f64) -> Result<(), SpectralError> {
        for &omega in &self.frequencies {
            for b in self.branches() {
                for l in 0..self.n_lines() {
                    let (r1, r2) = self.boundary_residuals(&self.mode(omega, b, l));
                    let r = r1.max(r2 / omega.max(1.0));
                    if r > tol {
                        return Err(SpectralError::OmegaDependence { omega, residual: r });
                    }
                }
            }
        }
        Ok(())
    }

    /// The quadratic form `𝓜 = M ⊕ M` acting on `(cos-coefficient ; sin-coefficient)`.
    pub fn script_m(&self) -> DMatrix<f64> {
        let n = self.n_lines();
        let m = DMatrix::from_diagonal(&self.delta.map(|d| 1.0 / d.sqrt()))
            + self.y_tilde.transpose() * DMatrix::from_diagonal(&self.delta.map(f64::sqrt)) * &self.y_tilde;
        let mut out = DMatrix::zeros(2 * n, 2 * n);
        out.view_mut((0, 0), (n, n)).copy_from(&m);
        out.view_mut((n, n), (n, n)).copy_from(&m);
        out
    }

    fn labels(&self) -> Vec<(Branch, usize)> {
        let mut out = Vec::new();
        for b in self.branches() {
            for l in 0..self.n_lines() {
                out.push((b, l));
            }
        }
        out
    }

    /// `max |(π/2) 𝒩_ε 𝒩_ε′ (e,r)_εᵀ 𝓜 (e,r)_ε′ − δ_εε′|` over all label pairs.
    pub fn algebraic_orthonormality(&self) -> f64 {
        let n = self.n_lines();
        // for reduced bases Ỹ = 0 and the form is Δ^{-1/2} on the carried branch
        let big_m = self.script_m();
        let coeff = |b: Branch, l: usize| -> DVector<f64> {
            let mut c = DVector::zeros(2 * n);
            let e = self.e(l);
            match b {
                Branch::U => c.rows_mut(0, n).copy_from(&e),
                Branch::V => c.rows_mut(n, n).copy_from(&e),
            }
            c
        };
        let norm = |l: usize| (2.0 / (std::f64::consts::PI * self.m_values[l])).sqrt();
        let labels = self.labels();
        let mut worst: f64 = 0.0;
        for (i, &(b1, l1)) in labels.iter().enumerate() {
            for (j, &(b2, l2)) in labels.iter().enumerate() {
                let c1 = coeff(b1, l1);
                let c2 = coeff(b2, l2);
                let val = std::f64::consts::FRAC_PI_2 * norm(l1) * norm(l2) * c1.dot(&(&big_m * &c2));
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((val - target).abs());
            }
        }
        worst
    }

    /// Delta-coefficient Gram matrix at one frequency, from the closed-form
    /// integrals of the mode functions themselves.
    pub fn gram_at(&self, omega: f64) -> DMatrix<C64> {
        let modes: Vec<TrigDoublet> = self.labels().iter().map(|&(b, l)| self.mode(omega, b, l)).collect();
        DMatrix::from_fn(modes.len(), modes.len(), |i, j| modes[i].delta_inner(&modes[j], &self.delta))
    }

    /// `A_εε′ = ⟨W_ε, 𝒯 W_ε′⟩` at one frequency (coefficient of the delta).
    pub fn telegrapher_representation(&self, omega: f64) -> DMatrix<C64> {
        let modes: Vec<TrigDoublet> = self.labels().iter().map(|&(b, l)| self.mode(omega, b, l)).collect();
        let tw: Vec<TrigDoublet> = modes.iter().map(|w| telegrapher_apply(w, &self.delta)).collect();
        DMatrix::from_fn(modes.len(), modes.len(), |i, j| modes[i].delta_inner(&tw[j], &self.delta))
    }
}

/// Pauli `σ_y ⊗ 1_N` in (u-block, v-block) ordering.
pub fn sigma_y_kron(n: usize) -> DMatrix<C64> {
    let mut m = DMatrix::from_element(2 * n, 2 * n, C64::new(0.0, 0.0));
    for i in 0..n {
        m[(i, n + i)] = C64::new(0.0, -1.0);
        m[(n + i, i)] = C64::new(0.0, 1.0);
    }
    m
}

/// The matrix `t` with `⟨W_ε, 𝒯 W_ε′⟩ = ω t_ε′ε`, and how well it matches the
/// expected structure.
#[derive(Debug, Clone)]
pub struct TelegrapherMatrix {
    pub t: DMatrix<C64>,
    /// `t = sign · σ_y ⊗ 1_N`.
    pub sign: i8,
    /// Max elementwise deviation of `t` from `sign · σ_y ⊗ 1_N` across the grid.
    pub deviation: f64,
    /// Max elementwise spread of `A/ω` across the grid.
    pub spread: f64,
    /// `‖t² − 1‖_max`.
    pub square_deviation: f64,
    /// `‖t − t†‖_max`, zero for an imaginary antisymmetric matrix.
    pub hermitian_deviation: f64,
}

fn max_abs(m: &DMatrix<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn telegrapher_matrix(basis: &ModeBasis) -> TelegrapherMatrix {
    let n = basis.n_lines();
    let dim = 2 * n;
    let mut first: Option<DMatrix<C64>> = None;
    let mut spread: f64 = 0.0;
    for &omega in &basis.frequencies {
        let a = basis.telegrapher_representation(omega).map(|z| z / omega);
        match &first {
            None => first = Some(a),
            Some(f) => spread = spread.max(max_abs(&(&a - f))),
        }
    }
    let a = first.unwrap_or_else(|| DMatrix::from_element(dim, dim, C64::new(0.0, 0.0)));
    let t = a.transpose();
    let sy = sigma_y_kron(n);
    let dev_plus = max_abs(&(&t - &sy));
    let dev_minus = max_abs(&(&t + &sy));
    let (sign, deviation) = if dev_minus <= dev_plus { (-1, dev_minus) } else { (1, dev_plus) };
    let id = DMatrix::<C64>::identity(dim, dim);
    let square_deviation = max_abs(&(&t * &t - id));
    let hermitian_deviation = max_abs(&(&t - t.adjoint()));
    TelegrapherMatrix { t, sign, deviation: deviation.max(spread), spread, square_deviation, hermitian_deviation }
}

/// One sampled row of a mode table.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSample {
    pub omega: f64,
    pub branch: Branch,
    pub lambda: usize,
    pub x: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

/// Sample every mode of the basis at the given positions (real parts; all
/// basis functions are real).
pub fn sample_modes(basis: &ModeBasis, xs: &[f64]) -> Vec<ModeSample> {
    let mut out = Vec::new();
    for &omega in &basis.frequencies {
        for b in basis.branches() {
            for l in 0..basis.n_lines() {
                let w = basis.mode(omega, b, l);
                for &x in xs {
                    let (u, v) = w.eval_real(x);
                    out.push(ModeSample {
                        omega,
                        branch: b,
                        lambda: l + 1,
                        x,
                        u: u.iter().copied().collect(),
                        v: v.iter().copied().collect(),
                    });
                }
            }
        }
    }
    out
}

/// Relative Frobenius deviation of `M` from symmetric positive definiteness,
/// used by the validation report.
pub fn m_matrix_report(delta: &DVector<f64>, y: &DMatrix<f64>) -> Result<(f64, f64), SpectralError> {
    let (m, vals, _) = build_m_matrix(delta, y)?;
    let asym = frobenius(&(&m - m.transpose())) / frobenius(&m);
    Ok((asym, vals.last().copied().unwrap_or(0.0)))
}
