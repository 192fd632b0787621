//! The homogeneous boundary system whose nontrivial solutions are eigenmodes.
//!
//! Line `j` carries `U_j = a_j cos k_j x + b̂_j Ŝ_j(x)` and
//! `V_j = c_j cos k_j x + ŝ_j Ŝ_j(x)` with `k_j = ω/√δ_j` and
//! `Ŝ_j(x) = (1 + k_j) sin(k_j x)/k_j` (equal to `x` at `k = 0`). The factor
//! `1 + k` keeps the columns comparable at high frequency. The unknown vector
//! is `(a, b̂, c, ŝ)`.
//!
//! Rows: `V(0) − Y U(0)` and `ΔU′(0) − Y V′(0)` at the element. At an open
//! far end `ΔU′_d = 0` and `V_d = 0`. With a junction on the line selected by
//! the unit vector `n`, the components orthogonal to `n` keep the open
//! conditions, `n·V_d = 0`, and the closure row reads
//! `σ (n·ΔU′_d) = ω² α (n·U_d)`.

use nalgebra::{DMatrix, DVector};

use super::FiniteError;
use crate::linalg::orthogonal_complement;
use crate::netlist::RescaledSpec;

#[derive(Debug, Clone)]
pub struct SecularProblem {
    pub delta: DVector<f64>,
    pub y: DMatrix<f64>,
    pub d: f64,
    /// Boundary weight `α`; `None` or zero means an open far end.
    pub alpha: Option<f64>,
    /// Unit vector of the junction line.
    pub n_vector: Option<DVector<f64>>,
    /// Sign `σ` of the boundary component of `𝓛`.
    pub closure_sign: f64,
}

/// Values `(C, C′, Ŝ, Ŝ′)` of the two column functions of one line.
pub(crate) fn column_functions(k: f64, x: f64) -> (f64, f64, f64, f64) {
    if k == 0.0 {
        return (1.0, 0.0, x, 1.0);
    }
    let (s, c) = (k * x).sin_cos();
    (c, -k * s, (1.0 + k) * s / k, (1.0 + k) * c)
}

/// Determinant of the row-normalized condition matrix as `sign · exp(log_abs)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaledDet {
    pub sign: f64,
    pub log_abs: f64,
}

impl ScaledDet {
    pub fn value(&self) -> f64 {
        self.sign * self.log_abs.exp()
    }
}

impl SecularProblem {
    /// Open far end.
    pub fn open(delta: DVector<f64>, y: DMatrix<f64>, d: f64) -> Result<Self, FiniteError> {
        let p = Self { delta, y, d, alpha: None, n_vector: None, closure_sign: 1.0 };
        p.check()?;
        Ok(p)
    }

    /// Junction of weight `alpha` on line `line`. The closure sign starts at
    /// the literal `−1`; [`super::resolve_closure`] settles it.
    pub fn with_junction(
        delta: DVector<f64>,
        y: DMatrix<f64>,
        d: f64,
        alpha: f64,
        line: usize,
    ) -> Result<Self, FiniteError> {
        let n = delta.len();
        if line >= n {
            return Err(FiniteError::BadParameter(format!("junction line {line} out of range")));
        }
        if !(alpha.is_finite() && alpha >= 0.0) {
            return Err(FiniteError::BadParameter(format!("α must be non-negative, got {alpha}")));
        }
        let mut nv = DVector::zeros(n);
        nv[line] = 1.0;
        let p = Self { delta, y, d, alpha: Some(alpha), n_vector: Some(nv), closure_sign: -1.0 };
        p.check()?;
        Ok(p)
    }

    /// From a rescaled circuit. `alpha` overrides the junction's `α_s`.
    pub fn from_spec(spec: &RescaledSpec, alpha: Option<f64>) -> Result<Self, FiniteError> {
        let d = spec.length.ok_or(FiniteError::NotFinite)?;
        let y = spec.y.clone().ok_or(FiniteError::NoImmittance)?;
        match &spec.junction {
            None => Self::open(spec.delta.clone(), y, d),
            Some(j) => Self::with_junction(spec.delta.clone(), y, d, alpha.unwrap_or(j.alpha_s), j.line_index),
        }
    }

    fn check(&self) -> Result<(), FiniteError> {
        let n = self.delta.len();
        if n == 0 || self.y.shape() != (n, n) {
            return Err(FiniteError::BadParameter("Y must be N×N".into()));
        }
        if self.delta.iter().any(|d| !(d.is_finite() && *d > 0.0)) {
            return Err(FiniteError::BadParameter("Δ must be positive".into()));
        }
        if !(self.d.is_finite() && self.d > 0.0) {
            return Err(FiniteError::BadParameter("length must be positive".into()));
        }
        Ok(())
    }

    pub fn n_lines(&self) -> usize {
        self.delta.len()
    }

    /// Whether the far end carries a junction with `α > 0`.
    pub fn has_junction(&self) -> bool {
        matches!(self.alpha, Some(a) if a > 0.0) && self.n_vector.is_some()
    }

    pub fn alpha_value(&self) -> f64 {
        self.alpha.unwrap_or(0.0)
    }

    pub fn wavenumbers(&self, omega: f64) -> DVector<f64> {
        self.delta.map(|d| omega / d.sqrt())
    }

    /// Row functionals (over the 4N unknowns) for `U_d`, `ΔU′_d`, `V_d`.
    fn far_functionals(&self, omega: f64) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let n = self.n_lines();
        let k = self.wavenumbers(omega);
        let mut fu = DMatrix::zeros(n, 4 * n);
        let mut fdu = DMatrix::zeros(n, 4 * n);
        let mut fv = DMatrix::zeros(n, 4 * n);
        for i in 0..n {
            let (c, dc, s, ds) = column_functions(k[i], self.d);
            fu[(i, i)] = c;
            fu[(i, n + i)] = s;
            fdu[(i, i)] = self.delta[i] * dc;
            fdu[(i, n + i)] = self.delta[i] * ds;
            fv[(i, 2 * n + i)] = c;
            fv[(i, 3 * n + i)] = s;
        }
        (fu, fdu, fv)
    }

    /// The raw `4N × 4N` condition matrix.
    pub fn condition_matrix(&self, omega: f64) -> DMatrix<f64> {
        let n = self.n_lines();
        let k = self.wavenumbers(omega);
        let mut a = DMatrix::zeros(4 * n, 4 * n);
        for i in 0..n {
            // V(0) − Y U(0)
            a[(i, 2 * n + i)] = 1.0;
            for j in 0..n {
                a[(i, j)] -= self.y[(i, j)];
            }
            // ΔU′(0) − Y V′(0)
            a[(n + i, n + i)] = self.delta[i] * (1.0 + k[i]);
            for j in 0..n {
                a[(n + i, 3 * n + j)] -= self.y[(i, j)] * (1.0 + k[j]);
            }
        }
        let (fu, fdu, fv) = self.far_functionals(omega);
        if self.has_junction() {
            let nv = self.n_vector.as_ref().expect("junction has a line vector");
            let perp = orthogonal_complement(nv);
            let m = perp.ncols();
            let pd = perp.transpose() * &fdu;
            let pv = perp.transpose() * &fv;
            a.view_mut((2 * n, 0), (m, 4 * n)).copy_from(&pd);
            a.view_mut((2 * n + m, 0), (m, 4 * n)).copy_from(&pv);
            let nvrow = nv.transpose() * &fv;
            a.view_mut((2 * n + 2 * m, 0), (1, 4 * n)).copy_from(&nvrow);
            let closure = (nv.transpose() * &fdu) * self.closure_sign
                - (nv.transpose() * &fu) * (omega * omega * self.alpha_value());
            a.view_mut((2 * n + 2 * m + 1, 0), (1, 4 * n)).copy_from(&closure);
        } else {
            a.view_mut((2 * n, 0), (n, 4 * n)).copy_from(&fdu);
            a.view_mut((3 * n, 0), (n, 4 * n)).copy_from(&fv);
        }
        a
    }

    /// Condition matrix with every row scaled to unit 2-norm.
    pub fn normalized_matrix(&self, omega: f64) -> DMatrix<f64> {
        let mut a = self.condition_matrix(omega);
        for mut row in a.row_iter_mut() {
            let norm = row.norm();
            if norm > 0.0 {
                row /= norm;
            }
        }
        a
    }

    /// Singular values of the normalized matrix, descending.
    pub fn singular_values(&self, omega: f64) -> Vec<f64> {
        crate::linalg::singular_values(&self.normalized_matrix(omega))
    }

    /// Smallest singular value of the normalized matrix.
    pub fn sigma_min(&self, omega: f64) -> f64 {
        self.singular_values(omega).last().copied().unwrap_or(0.0)
    }
}

/// Sign-tracked log-determinant of the normalized condition matrix; it
/// vanishes exactly at the eigenfrequencies.
pub fn secular_determinant(problem: &SecularProblem, omega: f64) -> ScaledDet {
    let lu = problem.normalized_matrix(omega).lu();
    let u = lu.u();
    let mut sign = 1.0;
    let mut log_abs = 0.0;
    for i in 0..u.nrows() {
        let p = u[(i, i)];
        if p == 0.0 {
            return ScaledDet { sign: 0.0, log_abs: f64::NEG_INFINITY };
        }
        if p < 0.0 {
            sign = -sign;
        }
        log_abs += p.abs().ln();
    }
    if lu.p().len() % 2 == 1 {
        sign = -sign;
    }
    ScaledDet { sign, log_abs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn open_line_determinant_vanishes_at_textbook_roots() {
        let p = SecularProblem::open(DVector::from_element(1, 4.0), DMatrix::zeros(1, 1), 1.0).unwrap();
        for n in 1..5 {
            let w = n as f64 * PI * 2.0;
            assert!(p.sigma_min(w) < 1e-14, "σ_min at root {}", p.sigma_min(w));
            assert!(p.sigma_min(w + 0.3) > 1e-3);
        }
    }

    #[test]
    fn determinant_is_continuous_and_signed() {
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let p = SecularProblem::with_junction(DVector::from_element(2, 1.0), y, 1.0, 0.5, 0).unwrap();
        let a = secular_determinant(&p, 0.7);
        let b = secular_determinant(&p, 0.7 + 1e-7);
        assert_eq!(a.sign, b.sign);
        assert!((a.value() - b.value()).abs() < 1e-5);
    }

    #[test]
    fn junction_rows_reduce_to_open_at_zero_alpha() {
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let delta = DVector::from_element(2, 1.0);
        let open = SecularProblem::open(delta.clone(), y.clone(), 1.0).unwrap();
        let junction = SecularProblem::with_junction(delta, y, 1.0, 0.0, 1).unwrap();
        assert!(!junction.has_junction());
        assert!((open.condition_matrix(1.3) - junction.condition_matrix(1.3)).norm() < 1e-15);
    }
}
