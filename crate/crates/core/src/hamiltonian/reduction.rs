//! Per `(ω, λ)` the mode Lagrangian `½(Ḟ² + Ġ²) + ½ b (Ġ F − Ḟ G)` with
//! `b = κ ω`, `κ = −i t_{uλ,vλ}`, gives
//! `H = ½[(Π + bG/2)² + (P − bF/2)²]`. The map
//! `F̃ = F/2 − P/b`, `Π̃ = Π + bG/2`, `G̃ = G/2 − Π/b`, `P̃ = P + bF/2`
//! brings it to `½(Π̃² + ω² F̃²)` and leaves `(G̃, P̃)` without dynamics.
//!
//! Phase-space vectors are ordered `(F, G, Π, P)` and `(F̃, G̃, Π̃, P̃)`, with
//! `J = [[0, 1], [−1, 0]]` in 2×2 blocks.

use nalgebra::{DMatrix, Matrix4};
use serde::Serialize;

use super::HamiltonianError;
use crate::spectral::{sigma_y_kron, C64};

/// Largest elementwise distance of `t` from `±σ_y ⊗ 1_N`.
pub const T_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Serialize)]
pub struct ModeBlock {
    pub omega: f64,
    pub lambda: usize,
    /// Magnetic coefficient `b = κ ω`.
    pub b: f64,
    #[serde(skip)]
    pub transform: Matrix4<f64>,
    /// Quadratic form of `H` in `(F, G, Π, P)`.
    #[serde(skip)]
    pub h_original: Matrix4<f64>,
    /// Quadratic form of `H` in `(Π̃, F̃, P̃, G̃)`.
    #[serde(skip)]
    pub h_final: Matrix4<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeSpaceModel {
    pub n: usize,
    pub frequencies: Vec<f64>,
    /// `t = κ̄ σ_y ⊗ 1_N` with `κ̄ = ±1`.
    pub t_sign: i8,
    #[serde(skip)]
    pub blocks: Vec<ModeBlock>,
    /// `max ‖TᵀJT − J‖` and `max ‖TJTᵀ − J‖`.
    pub symplectic_deviation: f64,
    /// `max ‖H̃ − diag(1, ω², 0, 0)‖`.
    pub final_form_deviation: f64,
    /// Largest coefficient in the Hamilton equations of `G̃` and `P̃`.
    pub nondynamical_residual: f64,
    pub dynamical_pairs_per_frequency: usize,
}

fn symplectic_j() -> Matrix4<f64> {
    let mut j = Matrix4::zeros();
    j[(0, 2)] = 1.0;
    j[(1, 3)] = 1.0;
    j[(2, 0)] = -1.0;
    j[(3, 1)] = -1.0;
    j
}

fn block(omega: f64, lambda: usize, kappa: f64) -> ModeBlock {
    let b = kappa * omega;
    #[rustfmt::skip]
    let transform = Matrix4::new(
        0.5,     0.0,     0.0,      -1.0 / b,
        0.0,     0.5,     -1.0 / b, 0.0,
        0.0,     b / 2.0, 1.0,      0.0,
        b / 2.0, 0.0,     0.0,      1.0,
    );
    let a1 = nalgebra::Vector4::new(0.0, b / 2.0, 1.0, 0.0);
    let a2 = nalgebra::Vector4::new(-b / 2.0, 0.0, 0.0, 1.0);
    let h_original = a1 * a1.transpose() + a2 * a2.transpose();
    let inv = transform.try_inverse().expect("transform is invertible for ω > 0");
    let h_tilde = inv.transpose() * h_original * inv;
    // (F̃, G̃, Π̃, P̃) → (Π̃, F̃, P̃, G̃)
    let order = [2, 0, 3, 1];
    let h_final = Matrix4::from_fn(|i, j| h_tilde[(order[i], order[j])]);
    ModeBlock { omega, lambda, b, transform, h_original, h_final }
}

/// Eliminate the nondynamical pair at every `(ω, λ)` of the grid.
pub fn mode_space_reduction(t: &DMatrix<C64>, frequencies: &[f64]) -> Result<ModeSpaceModel, HamiltonianError> {
    let dim = t.nrows();
    if dim == 0 || dim % 2 == 1 || t.ncols() != dim {
        return Err(HamiltonianError::UnexpectedT { deviation: f64::INFINITY });
    }
    if frequencies.is_empty() || frequencies.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
        return Err(HamiltonianError::BadGrid);
    }
    let n = dim / 2;
    let sy = sigma_y_kron(n);
    let dev = |s: f64| t.iter().zip(sy.iter()).fold(0.0f64, |acc, (a, b)| acc.max((a - b * s).norm()));
    let (t_sign, deviation) = if dev(-1.0) <= dev(1.0) { (-1i8, dev(-1.0)) } else { (1i8, dev(1.0)) };
    if deviation > T_TOLERANCE {
        return Err(HamiltonianError::UnexpectedT { deviation });
    }
    let j = symplectic_j();
    let mut blocks = Vec::with_capacity(frequencies.len() * n);
    let (mut symp, mut form, mut nondyn): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for &omega in frequencies {
        for lambda in 0..n {
            let kappa = (C64::new(0.0, -1.0) * t[(lambda, n + lambda)]).re;
            let blk = block(omega, lambda, kappa);
            let tt = &blk.transform;
            symp = symp.max((tt.transpose() * j * tt - j).amax()).max((tt * j * tt.transpose() - j).amax());
            let target = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, omega * omega, 0.0, 0.0));
            form = form.max((blk.h_final - target).amax() / omega.max(1.0).powi(2));
            // d z̃/dt = J H̃ z̃ in (F̃, G̃, Π̃, P̃) order: rows of G̃ and P̃
            let inv = tt.try_inverse().expect("transform is invertible for ω > 0");
            let flow = j * (inv.transpose() * blk.h_original * inv);
            nondyn = nondyn.max(flow.row(1).amax()).max(flow.row(3).amax());
            blocks.push(blk);
        }
    }
    Ok(ModeSpaceModel {
        n,
        frequencies: frequencies.to_vec(),
        t_sign,
        blocks,
        symplectic_deviation: symp,
        final_form_deviation: form,
        nondynamical_residual: nondyn,
        dynamical_pairs_per_frequency: n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_reaches_oscillator_form() {
        let t = sigma_y_kron(1).map(|z| -z);
        let m = mode_space_reduction(&t, &[1.7]).unwrap();
        let h = m.blocks[0].h_final;
        let target = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.7 * 1.7, 0.0, 0.0));
        assert!((h - target).amax() < 1e-14);
        assert!(m.symplectic_deviation < 1e-15);
        assert!(m.nondynamical_residual < 1e-14);
        assert_eq!(m.blocks[0].b, 1.7);
    }

    #[test]
    fn either_sign_of_t_is_accepted() {
        let grid = [0.3, 1.0, 4.0];
        for s in [1.0, -1.0] {
            let t = sigma_y_kron(3).map(|z| z * s);
            let m = mode_space_reduction(&t, &grid).unwrap();
            assert_eq!(m.blocks.len(), 9);
            assert_eq!(m.dynamical_pairs_per_frequency, 3);
            assert!(m.final_form_deviation < 1e-14);
            assert!(m.symplectic_deviation < 1e-14);
        }
    }

    #[test]
    fn wrong_t_is_rejected() {
        let mut t = sigma_y_kron(2);
        t[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(mode_space_reduction(&t, &[1.0]), Err(HamiltonianError::UnexpectedT { .. })));
        let id = DMatrix::<C64>::identity(4, 4);
        assert!(matches!(mode_space_reduction(&id, &[1.0]), Err(HamiltonianError::UnexpectedT { .. })));
    }
}
