//! Mode-space Hamiltonians: elimination of the nondynamical pairs, the
//! junction Hamiltonian of a finite line, its Lamb shift, and the
//! time-reversal matrix `Σ` of a semi-infinite basis.

mod model;
mod reduction;
mod trs;

pub use model::{
    assemble_hamiltonian, kinetic_matrix, lamb_shift, mode_mode_coupling, Coupling, HamiltonianModel, LambShift,
    MIN_MODES,
};
pub use reduction::{mode_space_reduction, ModeBlock, ModeSpaceModel, T_TOLERANCE};
pub use trs::{trs_check, trs_sigma, SigmaMatrix, TrsReport};

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HamiltonianError {
    #[error("telegrapher matrix is not ±σ_y ⊗ 1 (deviation {deviation:.3e})")]
    UnexpectedT { deviation: f64 },
    #[error("spectrum computed with α = {spectrum}, junction requires α_s = {expected}")]
    WrongAlpha { spectrum: f64, expected: f64 },
    #[error("{k} modes given, at least {min} needed")]
    TooFewModes { k: usize, min: usize },
    #[error("spectrum has no coupling vector")]
    NoCoupling,
    #[error("frequency grid must be positive and nonempty")]
    BadGrid,
}
