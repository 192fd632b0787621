//! Time reversal `(Φ, Q) → (Φ, −Q)` in a semi-infinite mode basis.
//!
//! `Σ_{ωλa, ω′λ′a′} = ⟨W_{ωλa}, σ^z W_{ω′λ′a′}⟩` splits into a part along
//! `δ(ω − ω′)` and a principal-value kernel. With
//! `Q_λλ′ = e_λᵀ Ỹᵀ Δ^{1/2} Ỹ e_λ′ / √(m_λ m_λ′)` the first is
//! `(δ_λλ′ − 2Q_λλ′) σ^z`; the kernel is
//! `−4/(π√(m_λ m_λ′)) · e_λᵀỸe_λ′ · [[0, ω′], [ω, 0]] / (ω² − ω′²)`,
//! set to zero at `ω = ω′`.
//!
//! Entries are stored with the `(u, v)` index innermost, so every `(λ, λ′)`
//! pair is a 2×2 block.

use nalgebra::{DMatrix, Matrix2};
use serde::Serialize;

use super::reduction::ModeSpaceModel;
use crate::spectral::{ModeBasis, C64};

#[derive(Debug, Clone, Serialize)]
pub struct SigmaMatrix {
    pub grid: Vec<f64>,
    pub n: usize,
    /// Coefficient of `δ(ω − ω′)`, `2N × 2N`, one per grid frequency.
    #[serde(skip)]
    pub delta_part: Vec<DMatrix<f64>>,
    /// Kernel values, `2NG × 2NG` with grid index outermost.
    #[serde(skip)]
    pub kernel: DMatrix<f64>,
    /// The kernel is a principal value and vanishes on the diagonal.
    pub principal_value: bool,
}

impl SigmaMatrix {
    fn index(&self, g: usize, lambda: usize, a: usize) -> usize {
        (g * self.n + lambda) * 2 + a
    }

    /// 2×2 kernel block between `(ω_g, λ)` and `(ω_h, μ)`.
    pub fn kernel_block(&self, g: usize, lambda: usize, h: usize, mu: usize) -> Matrix2<f64> {
        let i = self.index(g, lambda, 0);
        let j = self.index(h, mu, 0);
        Matrix2::new(self.kernel[(i, j)], self.kernel[(i, j + 1)], self.kernel[(i + 1, j)], self.kernel[(i + 1, j + 1)])
    }

    /// 2×2 block of the `δ` part at one frequency.
    pub fn delta_block(&self, g: usize, lambda: usize, mu: usize) -> Matrix2<f64> {
        let d = &self.delta_part[g];
        let (i, j) = (2 * lambda, 2 * mu);
        Matrix2::new(d[(i, j)], d[(i, j + 1)], d[(i + 1, j)], d[(i + 1, j + 1)])
    }
}

pub fn trs_sigma(basis: &ModeBasis, grid: &[f64]) -> SigmaMatrix {
    let n = basis.n_lines();
    let sqrt_delta = DMatrix::from_diagonal(&basis.delta.map(f64::sqrt));
    let yt = &basis.y_tilde;
    let q_mat = yt.transpose() * sqrt_delta * yt;
    let norm = |l: usize, m: usize| (basis.m_values[l] * basis.m_values[m]).sqrt();
    let mut delta = DMatrix::zeros(2 * n, 2 * n);
    let mut cross = DMatrix::zeros(n, n);
    for l in 0..n {
        for m in 0..n {
            let (el, em) = (basis.e(l), basis.e(m));
            let q = el.dot(&(&q_mat * &em)) / norm(l, m);
            let diag = if l == m { 1.0 } else { 0.0 } - 2.0 * q;
            delta[(2 * l, 2 * m)] = diag;
            delta[(2 * l + 1, 2 * m + 1)] = -diag;
            cross[(l, m)] = -4.0 / (std::f64::consts::PI * norm(l, m)) * el.dot(&(yt * &em));
        }
    }
    let g = grid.len();
    let mut kernel = DMatrix::zeros(2 * n * g, 2 * n * g);
    for (a, &w) in grid.iter().enumerate() {
        for (b, &wp) in grid.iter().enumerate() {
            if a == b || w == wp {
                continue;
            }
            let den = w * w - wp * wp;
            for l in 0..n {
                for m in 0..n {
                    let c = cross[(l, m)] / den;
                    let i = (a * n + l) * 2;
                    let j = (b * n + m) * 2;
                    kernel[(i, j + 1)] = c * wp;
                    kernel[(i + 1, j)] = c * w;
                }
            }
        }
    }
    SigmaMatrix { grid: grid.to_vec(), n, delta_part: vec![delta; g], kernel, principal_value: true }
}

#[derive(Debug, Clone, Serialize)]
pub struct TrsReport {
    pub grid_consistent: bool,
    /// Max norm of `{Σ, ωσ^y}` over the `δ` blocks.
    pub delta_anticommutator: f64,
    /// Max norm of `Σ ω′σ^y + ωσ^y Σ` over kernel blocks.
    pub kernel_anticommutator: f64,
    pub anticommutator: f64,
    /// Largest distance from the reciprocal pattern `σ^z ⊗ 1` (kernel zero).
    pub off_pattern: f64,
    /// `‖D Dᵀ − 1‖` of the `δ` part; the kernel's contribution to `ΣΣᵀ` is
    /// not included.
    pub delta_orthogonality: f64,
    pub breaks_trs: bool,
}

fn pauli_y() -> Matrix2<C64> {
    Matrix2::new(C64::new(0.0, 0.0), C64::new(0.0, -1.0), C64::new(0.0, 1.0), C64::new(0.0, 0.0))
}

fn complex(m: &Matrix2<f64>) -> Matrix2<C64> {
    m.map(|x| C64::new(x, 0.0))
}

fn max_norm(m: &Matrix2<C64>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Anticommutator tolerance separating the two cases.
const TRS_TOLERANCE: f64 = 1e-12;

pub fn trs_check(model: &ModeSpaceModel, sigma: &SigmaMatrix) -> TrsReport {
    let grid_consistent = model.frequencies == sigma.grid && model.n == sigma.n;
    let sy = pauli_y();
    let n = sigma.n;
    let (mut d_anti, mut k_anti, mut off, mut orth): (f64, f64, f64, f64) = (0.0, 0.0, 0.0, 0.0);
    for (g, &w) in sigma.grid.iter().enumerate() {
        for l in 0..n {
            for m in 0..n {
                let b = complex(&sigma.delta_block(g, l, m));
                let anti = b * sy * C64::new(w, 0.0) + sy * b * C64::new(w, 0.0);
                d_anti = d_anti.max(max_norm(&anti));
                let pattern = if l == m { Matrix2::new(1.0, 0.0, 0.0, -1.0) } else { Matrix2::zeros() };
                off = off.max((sigma.delta_block(g, l, m) - pattern).amax());
            }
        }
        let d = &sigma.delta_part[g];
        orth = orth.max((d * d.transpose() - DMatrix::<f64>::identity(2 * n, 2 * n)).amax());
        for (h, &wp) in sigma.grid.iter().enumerate() {
            for l in 0..n {
                for m in 0..n {
                    let kb = sigma.kernel_block(g, l, h, m);
                    off = off.max(kb.amax());
                    let b = complex(&kb);
                    let anti = b * sy * C64::new(wp, 0.0) + sy * b * C64::new(w, 0.0);
                    k_anti = k_anti.max(max_norm(&anti));
                }
            }
        }
    }
    let anticommutator = d_anti.max(k_anti);
    TrsReport {
        grid_consistent,
        delta_anticommutator: d_anti,
        kernel_anticommutator: k_anti,
        anticommutator,
        off_pattern: off,
        delta_orthogonality: orth,
        breaks_trs: anticommutator > TRS_TOLERANCE,
    }
}
