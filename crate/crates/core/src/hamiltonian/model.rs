//! Junction Hamiltonian of a finite line:
//! `Ĥ = Q̂²/2C_J − E_J cos φ̂ + Σ ħω_n a†a + ξ Q̂ Σ (r* a + r a†)` with
//! `r_nλ = √(ħω_n/2)(u_{nuλ} + i u_{nvλ})`.
//!
//! Each eigenfunction of the finite problem is one `(n, λ)`: `n` is its
//! eigenspace (0 for `ω = 0`), `λ` its position inside it. The eigenspaces
//! are rotated so that the junction couples to their first member only, so
//! `u_v = 0` throughout.

use nalgebra::DMatrix;
use serde::Serialize;

use super::HamiltonianError;
use crate::finite::table::{tail_corrected_sum, TailFit};
use crate::finite::SpectrumTable;
use crate::netlist::RescaledJunction;

/// Smallest truncation accepted by [`lamb_shift`].
pub const MIN_MODES: usize = 50;

const ALPHA_REL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coupling {
    pub n: usize,
    pub lambda: usize,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HamiltonianModel {
    /// One entry per eigenfunction.
    pub omegas: Vec<f64>,
    pub couplings: Vec<Coupling>,
    pub u_u: Vec<f64>,
    pub u_v: Vec<f64>,
    pub xi: f64,
    pub c_j: f64,
    pub e_j: f64,
    /// Charging coefficient `1/(2C_J)` of `Q̂²`.
    pub charging: f64,
    pub hbar: f64,
    pub alpha: f64,
    pub k: usize,
    /// Tail-corrected `Σ|r|²/ω`.
    pub chi: f64,
    pub chi_fit: TailFit,
    /// Largest entry of `C⁻¹_XX − 1`; zero means no mode-mode terms.
    pub mode_mode_max: f64,
}

/// Kinetic matrix over `(φ_J √C_Σ, X_1, …, X_K)`:
/// `[[1, −γuᵀ], [−γu, 1 + (C_c/c_δ − α) uuᵀ]]` with `γ = C_c/√(C_Σ c_δ)`.
pub fn kinetic_matrix(u: &[f64], alpha: f64, junction: &RescaledJunction) -> DMatrix<f64> {
    let k = u.len();
    let c_sigma = junction.c_c + junction.c_j;
    let gamma = junction.c_c / (c_sigma * junction.c_delta).sqrt();
    let beta = junction.c_c / junction.c_delta - alpha;
    DMatrix::from_fn(k + 1, k + 1, |i, j| match (i, j) {
        (0, 0) => 1.0,
        (0, j) => -gamma * u[j - 1],
        (i, 0) => -gamma * u[i - 1],
        (i, j) => (if i == j { 1.0 } else { 0.0 }) + beta * u[i - 1] * u[j - 1],
    })
}

/// `max |(C⁻¹)_XX − 1|` of a kinetic matrix.
pub fn mode_mode_coupling(c: &DMatrix<f64>) -> f64 {
    let k = c.nrows() - 1;
    let inv = c.clone().lu().try_inverse().expect("kinetic matrix is positive definite");
    let block = inv.view((1, 1), (k, k));
    (block - DMatrix::<f64>::identity(k, k)).amax()
}

/// Hamiltonian data from the first `k` eigenfunctions of `spectrum`.
pub fn assemble_hamiltonian(
    spectrum: &SpectrumTable,
    junction: &RescaledJunction,
    k: usize,
    hbar: f64,
) -> Result<HamiltonianModel, HamiltonianError> {
    let u_all = spectrum.u.as_ref().ok_or(HamiltonianError::NoCoupling)?;
    if (spectrum.alpha - junction.alpha_s).abs() > ALPHA_REL_TOL * junction.alpha_s.abs() {
        return Err(HamiltonianError::WrongAlpha { spectrum: spectrum.alpha, expected: junction.alpha_s });
    }
    if k > spectrum.modes.len() {
        return Err(HamiltonianError::TooFewModes { k: spectrum.modes.len(), min: k });
    }
    let modes = &spectrum.modes[..k];
    let u_u: Vec<f64> = u_all[..k].to_vec();
    let u_v = vec![0.0; k];
    let mut couplings = Vec::with_capacity(k);
    let mut lambda = 0;
    for (i, m) in modes.iter().enumerate() {
        if i > 0 && modes[i - 1].eigenspace == m.eigenspace {
            lambda += 1;
        } else {
            lambda = 0;
        }
        let s = (hbar * m.omega / 2.0).sqrt();
        couplings.push(Coupling { n: m.eigenspace, lambda, re: s * u_u[i], im: s * u_v[i] });
    }
    let terms = chi_terms(&u_u, &u_v, hbar);
    let chi_fit = tail_corrected_sum(&terms);
    let mode_mode_max = mode_mode_coupling(&kinetic_matrix(&u_u, spectrum.alpha, junction));
    Ok(HamiltonianModel {
        omegas: modes.iter().map(|m| m.omega).collect(),
        couplings,
        u_u,
        u_v,
        xi: junction.xi,
        c_j: junction.c_j,
        e_j: junction.e_j,
        charging: 1.0 / (2.0 * junction.c_j),
        hbar,
        alpha: spectrum.alpha,
        k,
        chi: chi_fit.estimate,
        chi_fit,
        mode_mode_max,
    })
}

/// `|r|²/ω = (ħ/2)(u_u² + u_v²)`, which also fixes the `ω = 0` term.
fn chi_terms(u_u: &[f64], u_v: &[f64], hbar: f64) -> Vec<f64> {
    u_u.iter().zip(u_v).map(|(a, b)| 0.5 * hbar * (a * a + b * b)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct LambShift {
    pub partial_sums: Vec<f64>,
    pub fit: TailFit,
    pub extrapolated: f64,
    /// `ħ/(2α)`.
    pub target: f64,
    pub relative_error: f64,
    /// Whether every partial sum stays below `ħ/(2α)(1 + 1e-9)`.
    pub bounded: bool,
    pub monotone: bool,
}

pub fn lamb_shift(model: &HamiltonianModel) -> Result<LambShift, HamiltonianError> {
    if model.k < MIN_MODES {
        return Err(HamiltonianError::TooFewModes { k: model.k, min: MIN_MODES });
    }
    let terms = chi_terms(&model.u_u, &model.u_v, model.hbar);
    let partial_sums: Vec<f64> = terms
        .iter()
        .scan(0.0, |acc, t| {
            *acc += t;
            Some(*acc)
        })
        .collect();
    let fit = tail_corrected_sum(&terms);
    let target = model.hbar / (2.0 * model.alpha);
    let bounded = partial_sums.iter().all(|s| *s <= target * (1.0 + 1e-9));
    let monotone = partial_sums.windows(2).all(|w| w[1] >= w[0]);
    Ok(LambShift {
        partial_sums,
        fit,
        extrapolated: fit.estimate,
        target,
        relative_error: (fit.estimate - target).abs() / target,
        bounded,
        monotone,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::finite::{eigenfrequencies_count, resolve_closure, SecularProblem};
    use nalgebra::DVector;

    fn junction(c_c: f64, c_j: f64, c_delta: f64) -> RescaledJunction {
        let c_sigma = c_c + c_j;
        RescaledJunction {
            line_index: 0,
            c_c,
            c_j,
            e_j: 2.0,
            c_delta,
            alpha_s: c_c * c_j / (c_delta * c_sigma),
            xi: c_c / (c_sigma * c_delta.sqrt()),
        }
    }

    fn circulator_spectrum(alpha: f64, count: usize) -> SpectrumTable {
        let y = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, -1.0, 0.0]);
        let mut p = SecularProblem::with_junction(DVector::from_element(3, 1.0), y, 1.0, alpha, 0).unwrap();
        resolve_closure(&mut p, 10, 1).unwrap();
        eigenfrequencies_count(&p, count, None).unwrap()
    }

    #[test]
    fn equal_capacitances_give_half_values() {
        let j = junction(2.0, 2.0, 4.0);
        assert!((j.xi - 1.0 / (2.0 * 2.0)).abs() < 1e-15);
        assert!((j.alpha_s - 2.0 / (2.0 * 4.0)).abs() < 1e-15);
    }

    #[test]
    fn alpha_s_removes_mode_mode_terms_and_other_alpha_does_not() {
        let j = junction(1.0, 1.0, 1.0);
        let u = [0.5, 0.3, -0.2, 0.1];
        assert!(mode_mode_coupling(&kinetic_matrix(&u, j.alpha_s, &j)) < 1e-14);
        assert!(mode_mode_coupling(&kinetic_matrix(&u, 0.9 * j.alpha_s, &j)) > 1e-3);
    }

    #[test]
    fn couplings_follow_u_and_lamb_shift_converges() {
        let j = junction(1.0, 1.0, 1.0);
        let table = circulator_spectrum(j.alpha_s, 200);
        let model = assemble_hamiltonian(&table, &j, 200, 1.0).unwrap();
        for (c, (w, u)) in model.couplings.iter().zip(model.omegas.iter().zip(&model.u_u)) {
            let r2 = c.re * c.re + c.im * c.im;
            assert!((r2 - w / 2.0 * u * u).abs() < 1e-14);
        }
        assert_eq!(model.couplings[0].n, 0);
        assert!(model.mode_mode_max < 1e-10);
        let ls = lamb_shift(&model).unwrap();
        assert!(ls.monotone && ls.bounded);
        assert!(ls.relative_error < 5e-3, "χ relative error {}", ls.relative_error);
    }

    #[test]
    fn wrong_alpha_and_short_truncation_are_rejected() {
        let j = junction(1.0, 1.0, 1.0);
        let table = circulator_spectrum(0.4, 60);
        assert!(matches!(assemble_hamiltonian(&table, &j, 60, 1.0), Err(HamiltonianError::WrongAlpha { .. })));
        let table = circulator_spectrum(j.alpha_s, 60);
        let model = assemble_hamiltonian(&table, &j, 40, 1.0).unwrap();
        assert!(matches!(lamb_shift(&model), Err(HamiltonianError::TooFewModes { k: 40, .. })));
    }

    #[test]
    fn decoupling_limit() {
        let j = junction(1e-12, 1.0, 1.0);
        assert!(j.xi < 1e-11);
    }
}
