//! Finite lines of common length `d`: nonreciprocal element at `x = 0`, open
//! end or capacitively coupled junction at `x = d`.
//!
//! On each line the eigenfunctions of `𝓛 = −Δ∂²` are trigonometric, so the
//! eigenproblem reduces to a `4N × 4N` homogeneous system in the
//! per-line amplitudes ([`secular`]). Its roots are located by scanning the
//! smallest singular value and refined to machine precision ([`table`]).
//! The junction boundary adds a degree of freedom `w = α (n·U_d)` whose
//! action is fixed by checking self-adjointness ([`selfadjoint`]).

pub mod secular;
pub mod selfadjoint;
pub mod table;

use thiserror::Error;

pub use secular::{secular_determinant, ScaledDet, SecularProblem};
pub use selfadjoint::{resolve_closure, selfadjointness_residual, ClosureReport, InnerProduct};
pub use table::{coupling_vector, eigenfrequencies, eigenfrequencies_count, FiniteMode, SpectrumTable};

#[derive(Debug, Error, PartialEq)]
pub enum FiniteError {
    #[error("the nonreciprocal element has no admittance form")]
    NoImmittance,
    #[error("circuit lines must be finite")]
    NotFinite,
    #[error("scan too coarse: roots near ω = {omega} are not resolved; refine the scan")]
    ScanTooCoarse { omega: f64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("neither closure sign passes the self-adjointness check (residuals {minus:.3e}, {plus:.3e})")]
    Closure { minus: f64, plus: f64 },
}
