//! Closed-form fields for the unit gyrator `Y = [[0, 1], [−1, 0]]` between
//! two lines with `Δ = 1`:
//! `Φ₁ = f(t−x) + g(t+x)`, `Φ₂ = g(t−x) − f(t+x)`,
//! `Q₁ = −f(t−x) + g(t+x)`, `Q₂ = −g(t−x) − f(t+x)`.
//!
//! Initial pulses fix `f` and `g`: a left mover `G` on line 1 contributes
//! `g(s) = G(s)`, a right mover `F` on line 1 `f(s) = F(−s)`, a left mover on
//! line 2 `f(s) = −G(s)` and a right mover on line 2 `g(s) = F(−s)`.

use nalgebra::DMatrix;

use super::{Direction, Pulse, TdError};

const CONFIG_TOL: f64 = 1e-12;

/// `[(Φ₁, Q₁), (Φ₂, Q₂)]` at `(x, t)`.
pub fn dalembert_reference(
    pulses: &[Pulse],
    y: &DMatrix<f64>,
    delta: &[f64],
    x: f64,
    t: f64,
) -> Result<[(f64, f64); 2], TdError> {
    let unit = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
    if y.shape() != (2, 2) || (y - unit).amax() > CONFIG_TOL {
        return Err(TdError::Unsupported("reference needs the unit gyrator".into()));
    }
    if delta.len() != 2 || delta.iter().any(|d| (d - 1.0).abs() > CONFIG_TOL) {
        return Err(TdError::Unsupported("reference needs Δ = 1".into()));
    }
    let f = |s: f64| -> f64 {
        pulses
            .iter()
            .map(|p| match (p.line, p.direction) {
                (0, Direction::Right) => p.profile(-s),
                (1, Direction::Left) => -p.profile(s),
                _ => 0.0,
            })
            .sum()
    };
    let g = |s: f64| -> f64 {
        pulses
            .iter()
            .map(|p| match (p.line, p.direction) {
                (0, Direction::Left) => p.profile(s),
                (1, Direction::Right) => p.profile(-s),
                _ => 0.0,
            })
            .sum()
    };
    let (fm, fp, gm, gp) = (f(t - x), f(t + x), g(t - x), g(t + x));
    Ok([(fm + gp, -fm + gp), (gm - fp, -gm - fp)])
}

/// `∫ ½(Φ̇² + Q̇²/δ) dx = δ A² √π / (2σ)` for a single travelling Gaussian.
pub fn gaussian_energy(p: &Pulse, delta: f64) -> f64 {
    delta * p.amplitude * p.amplitude * std::f64::consts::PI.sqrt() / (2.0 * p.width)
}
