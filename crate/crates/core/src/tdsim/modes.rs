//! Projection of a simulated field onto the eigenfunctions of the matching
//! finite-line problem, `X_m = ∫(U_m·Φ + V_m·Δ⁻¹Q) dx`, with mode energy
//! `½ ω_m² X_m²`.

use serde::Serialize;

use super::{FarEnd, FieldState, TdError};
use crate::finite::{SecularProblem, SpectrumTable};

#[derive(Debug, Clone, Serialize)]
pub struct ModeEnergies {
    pub omegas: Vec<f64>,
    pub coefficients: Vec<f64>,
    pub energies: Vec<f64>,
    /// `(ω, energy)` summed over each eigenspace, zero modes first.
    pub eigenspace_energies: Vec<(f64, f64)>,
    pub total: f64,
    pub field_energy: f64,
}

const GEOMETRY_TOL: f64 = 1e-12;

pub fn mode_energy_spectrum(
    state: &FieldState,
    problem: &SecularProblem,
    table: &SpectrumTable,
) -> Result<ModeEnergies, TdError> {
    if problem.has_junction() {
        return Err(TdError::Geometry("simulated lines have no junction".into()));
    }
    if state.far_end != FarEnd::Open {
        return Err(TdError::Geometry("mode projection needs an open far end".into()));
    }
    if (problem.d - state.length).abs() > GEOMETRY_TOL * problem.d || problem.n_lines() != state.n {
        return Err(TdError::Geometry(format!("length {} vs {}", problem.d, state.length)));
    }
    if problem.delta.iter().zip(&state.delta).any(|(a, b)| (a - b).abs() > GEOMETRY_TOL * a)
        || (&problem.y - &state.y).amax() > GEOMETRY_TOL
    {
        return Err(TdError::Geometry("Δ or Y differ".into()));
    }
    let q = state.q_at_phi_time();
    let (m, h) = (state.cells, state.h);
    let mut coefficients = Vec::with_capacity(table.modes.len());
    for mode in &table.modes {
        let mut x = 0.0;
        for i in 0..=m {
            let w = if i == 0 || i == m { 0.5 * h } else { h };
            let (u, _) = mode.eval(state.node_x(i));
            for j in 0..state.n {
                x += w * u[j] * state.phi[j][i];
            }
        }
        for i in 0..m {
            let (_, v) = mode.eval(state.half_x(i));
            for j in 0..state.n {
                x += h * v[j] * q[j][i] / state.delta[j];
            }
        }
        coefficients.push(x);
    }
    let omegas: Vec<f64> = table.modes.iter().map(|md| md.omega).collect();
    let energies: Vec<f64> = omegas.iter().zip(&coefficients).map(|(w, x)| 0.5 * w * w * x * x).collect();
    let mut grouped: Vec<(usize, f64, f64)> = Vec::new();
    for (md, e) in table.modes.iter().zip(&energies) {
        match grouped.last_mut() {
            Some(last) if last.0 == md.eigenspace => last.2 += e,
            _ => grouped.push((md.eigenspace, md.omega, *e)),
        }
    }
    let eigenspace_energies = grouped.into_iter().map(|(_, w, e)| (w, e)).collect();
    Ok(ModeEnergies {
        omegas,
        coefficients,
        energies: energies.clone(),
        eigenspace_energies,
        total: energies.iter().sum(),
        field_energy: state.energy(),
    })
}
