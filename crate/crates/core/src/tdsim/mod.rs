//! Time-domain integration of the rescaled telegrapher system
//! `Φ̇ = Q′`, `Q̇ = ΔΦ′` on `N` lines joined at `x = 0` by `Q₀ = YΦ₀`.
//!
//! Flux lives on nodes `x_i = i h` (`i = 0..=M`) at integer times, charge on
//! half nodes at half times. The end nodes carry half cells: at `x = 0`
//! `(h/2) Φ̇₀ = Q_{1/2} − YΦ₀`, integrated by the trapezoidal rule (a Cayley
//! rotation since `Y` is skew); at an open far end `(h/2) Φ̇_M = −Q_{M−1/2}`.
//! An absorbing far end adds matched damping `−sΦ`, `−sQ` over the last
//! [`ABSORBING_CELLS`] cells.
//!
//! With node weights `w` and the leapfrog pairing, the quantity
//! `½(‖Ṗ‖²_w + Ṙⁿ⁻¹·Ṙⁿ/Δ)` built from time differences of the fields is an
//! exact invariant of the lossless scheme and approximates the field energy
//! `½∫(Φ̇² + Q̇²/Δ) dx`.

mod modes;
mod reference;

pub use modes::{mode_energy_spectrum, ModeEnergies};
pub use reference::{dalembert_reference, gaussian_energy};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::netlist::RescaledSpec;

/// Cells in the graded absorbing layer.
pub const ABSORBING_CELLS: usize = 20;
/// Smallest accepted grid.
pub const MIN_CELLS: usize = 16;
/// Largest relative energy growth per step before a run is aborted.
pub const BLOWUP_GROWTH: f64 = 1e-6;
/// Pulses must sit this many widths away from either end.
pub const PULSE_CLEARANCE: f64 = 3.0;

#[derive(Debug, Error, PartialEq)]
pub enum TdError {
    #[error("timestep {dt} exceeds the CFL limit {limit}")]
    Cfl { dt: f64, limit: f64 },
    #[error("at least {MIN_CELLS} cells are needed, got {0}")]
    TooFewCells(usize),
    #[error("pulse on line {line} at {center} is within {PULSE_CLEARANCE}σ of a boundary")]
    PulseOverlap { line: usize, center: f64 },
    #[error("line index {0} out of range")]
    BadLine(usize),
    #[error("semi-infinite lines need a simulation length")]
    NoLength,
    #[error("the element has no admittance presentation")]
    NoAdmittance,
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("geometry mismatch: {0}")]
    Geometry(String),
    #[error("energy grew by {growth:.3e} (relative) at step {step}")]
    BlowUp { step: usize, growth: f64 },
    #[error("invalid parameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FarEnd {
    Open,
    Absorbing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Toward the element at `x = 0`.
    Left,
    Right,
}

/// Gaussian `A exp(−(x − x₀)²/(2σ²))` in `Φ`, travelling on one line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pulse {
    pub line: usize,
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
    pub direction: Direction,
}

impl Pulse {
    pub fn profile(&self, s: f64) -> f64 {
        let z = (s - self.center) / self.width;
        self.amplitude * (-0.5 * z * z).exp()
    }

    /// Free travelling-wave `(Φ, Q)` at `(x, t)` for velocity `v = √δ`.
    pub fn free_field(&self, v: f64, x: f64, t: f64) -> (f64, f64) {
        match self.direction {
            Direction::Right => {
                let f = self.profile(x - v * t);
                (f, -v * f)
            }
            Direction::Left => {
                let f = self.profile(x + v * t);
                (f, v * f)
            }
        }
    }
}

/// Initial data.
#[derive(Debug, Clone, PartialEq)]
pub enum InitialData {
    Zero,
    Pulses(Vec<Pulse>),
    /// Sampled `Φ` on nodes and `Q` on half nodes, both at `t = 0`.
    Fields { phi: Vec<Vec<f64>>, q: Vec<Vec<f64>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub cells: usize,
    /// Simulated length; required for semi-infinite lines, overrides the
    /// netlist length otherwise.
    pub length: Option<f64>,
    /// `dt = cfl · h / max √δ` unless `dt` is given.
    pub cfl: f64,
    pub dt: Option<f64>,
    pub far_end: FarEnd,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { cells: 512, length: None, cfl: 0.5, dt: None, far_end: FarEnd::Open }
    }
}

#[derive(Debug, Clone)]
pub struct FieldState {
    pub n: usize,
    pub cells: usize,
    pub h: f64,
    pub dt: f64,
    /// Time of `phi`; `q` is at `t + dt/2`.
    pub t: f64,
    pub steps: usize,
    pub length: f64,
    pub delta: Vec<f64>,
    pub y: DMatrix<f64>,
    pub far_end: FarEnd,
    /// `[line][node]`.
    pub phi: Vec<Vec<f64>>,
    /// `[line][half node]`.
    pub q: Vec<Vec<f64>>,
    phi_prev: Vec<Vec<f64>>,
    q_prev: Vec<Vec<f64>>,
    q_prev2: Vec<Vec<f64>>,
    /// Damping rate per line on nodes and on half nodes.
    s_node: Vec<Vec<f64>>,
    s_half: Vec<Vec<f64>>,
    cn_forward: (DMatrix<f64>, DMatrix<f64>),
    cn_backward: (DMatrix<f64>, DMatrix<f64>),
}

fn cayley_pair(y: &DMatrix<f64>, r: f64) -> Result<(DMatrix<f64>, DMatrix<f64>), TdError> {
    let n = y.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let inv = (&id + y * r).try_inverse().ok_or(TdError::NoAdmittance)?;
    Ok((inv, &id - y * r))
}

/// Build the initial state on `config.cells` cells.
pub fn init_state(spec: &RescaledSpec, config: &SimConfig, initial: &InitialData) -> Result<FieldState, TdError> {
    let m = config.cells;
    if m < MIN_CELLS {
        return Err(TdError::TooFewCells(m));
    }
    let length = config.length.or(spec.length).ok_or(TdError::NoLength)?;
    if !(length.is_finite() && length > 0.0) {
        return Err(TdError::BadParameter(format!("length must be positive, got {length}")));
    }
    let y = spec.y.clone().ok_or(TdError::NoAdmittance)?;
    let n = spec.n;
    let h = length / m as f64;
    let vmax = spec.delta.iter().map(|d| d.sqrt()).fold(0.0, f64::max);
    let limit = h / vmax;
    let dt = config.dt.unwrap_or(config.cfl * limit);
    if !(dt.is_finite() && dt > 0.0) {
        return Err(TdError::BadParameter(format!("timestep must be positive, got {dt}")));
    }
    if dt > limit * (1.0 + 1e-12) {
        return Err(TdError::Cfl { dt, limit });
    }
    let delta: Vec<f64> = spec.delta.iter().copied().collect();

    let (s_node, s_half) = damping_profiles(&delta, m, h, config.far_end);
    let usable = match config.far_end {
        FarEnd::Open => length,
        FarEnd::Absorbing => length - ABSORBING_CELLS as f64 * h,
    };

    let mut state = FieldState {
        n,
        cells: m,
        h,
        dt,
        t: 0.0,
        steps: 0,
        length,
        delta: delta.clone(),
        y: y.clone(),
        far_end: config.far_end,
        phi: vec![vec![0.0; m + 1]; n],
        q: vec![vec![0.0; m]; n],
        phi_prev: vec![vec![0.0; m + 1]; n],
        q_prev: vec![vec![0.0; m]; n],
        q_prev2: vec![vec![0.0; m]; n],
        s_node,
        s_half,
        cn_forward: cayley_pair(&y, dt / h)?,
        cn_backward: cayley_pair(&y, -dt / h)?,
    };

    match initial {
        InitialData::Zero => {}
        InitialData::Pulses(pulses) => {
            for p in pulses {
                if p.line >= n {
                    return Err(TdError::BadLine(p.line));
                }
                if !(p.width > 0.0) {
                    return Err(TdError::BadParameter(format!("pulse width must be positive, got {}", p.width)));
                }
                if p.center - PULSE_CLEARANCE * p.width < 0.0 || p.center + PULSE_CLEARANCE * p.width > usable {
                    return Err(TdError::PulseOverlap { line: p.line, center: p.center });
                }
                let v = delta[p.line].sqrt();
                for i in 0..=m {
                    state.phi[p.line][i] += p.free_field(v, i as f64 * h, 0.0).0;
                }
                for i in 0..m {
                    state.q[p.line][i] += p.free_field(v, (i as f64 + 0.5) * h, 0.5 * dt).1;
                }
            }
        }
        InitialData::Fields { phi, q } => {
            if phi.len() != n || q.len() != n || phi.iter().any(|p| p.len() != m + 1) || q.iter().any(|p| p.len() != m) {
                return Err(TdError::Geometry("field arrays must be N × (M+1) and N × M".into()));
            }
            // Q^{1/2} = Q⁰ + (dt/2) ΔΦ′
            for j in 0..n {
                state.phi[j] = phi[j].clone();
                for i in 0..m {
                    state.q[j][i] = q[j][i] + 0.5 * dt * delta[j] * (phi[j][i + 1] - phi[j][i]) / h;
                }
            }
        }
    }
    state.rebuild_history();
    Ok(state)
}

fn damping_profiles(delta: &[f64], m: usize, h: f64, far_end: FarEnd) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let n = delta.len();
    let mut s_node = vec![vec![0.0; m + 1]; n];
    let mut s_half = vec![vec![0.0; m]; n];
    if far_end == FarEnd::Absorbing {
        let layer = ABSORBING_CELLS.min(m / 2) as f64 * h;
        let start = m as f64 * h - layer;
        // one-way amplitude attenuation exp(−s_max L/(3v)) = 1e-6
        let base = 3.0 * (1e6f64).ln() / layer;
        for j in 0..n {
            let s_max = base * delta[j].sqrt();
            let s = |x: f64| if x > start { s_max * ((x - start) / layer).powi(2) } else { 0.0 };
            for i in 0..=m {
                s_node[j][i] = s(i as f64 * h);
            }
            for i in 0..m {
                s_half[j][i] = s((i as f64 + 0.5) * h);
            }
        }
    }
    (s_node, s_half)
}

impl FieldState {
    pub fn node_x(&self, i: usize) -> f64 {
        i as f64 * self.h
    }

    pub fn half_x(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h
    }

    fn node_weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.cells {
            0.5 * self.h
        } else {
            self.h
        }
    }

    /// Flux update `Φⁿ → Φⁿ⁺¹` from the charge `q` (at `n + 1/2`).
    fn advance_phi(&self, phi: &[Vec<f64>], q: &[Vec<f64>], forward: bool) -> Vec<Vec<f64>> {
        let (m, h) = (self.cells, self.h);
        let dt = if forward { self.dt } else { -self.dt };
        let mut out = phi.to_vec();
        for j in 0..self.n {
            for i in 1..m {
                let s = self.s_node[j][i] * dt / 2.0;
                out[j][i] = ((1.0 - s) * phi[j][i] + dt * (q[j][i] - q[j][i - 1]) / h) / (1.0 + s);
            }
            let s = self.s_node[j][m] * dt / 2.0;
            out[j][m] = ((1.0 - s) * phi[j][m] - 2.0 * dt * q[j][m - 1] / h) / (1.0 + s);
        }
        let (inv, minus) = if forward { &self.cn_forward } else { &self.cn_backward };
        let p0 = DVector::from_iterator(self.n, phi.iter().map(|p| p[0]));
        let q0 = DVector::from_iterator(self.n, q.iter().map(|c| c[0]));
        let new0 = inv * (minus * p0 + q0 * (2.0 * dt / h));
        for j in 0..self.n {
            out[j][0] = new0[j];
        }
        out
    }

    /// Charge update `Q^{n−1/2} → Q^{n+1/2}` from `Φⁿ`.
    fn advance_q(&self, q: &[Vec<f64>], phi: &[Vec<f64>], forward: bool) -> Vec<Vec<f64>> {
        let dt = if forward { self.dt } else { -self.dt };
        let mut out = q.to_vec();
        for j in 0..self.n {
            for i in 0..self.cells {
                let s = self.s_half[j][i] * dt / 2.0;
                out[j][i] =
                    ((1.0 - s) * q[j][i] + dt * self.delta[j] * (phi[j][i + 1] - phi[j][i]) / self.h) / (1.0 + s);
            }
        }
        out
    }

    /// Recreate `Φⁿ⁻¹`, `Q^{n−1/2}`, `Q^{n−3/2}` by stepping backwards.
    fn rebuild_history(&mut self) {
        self.q_prev = self.advance_q(&self.q, &self.phi, false);
        self.phi_prev = self.advance_phi(&self.phi, &self.q_prev, false);
        self.q_prev2 = self.advance_q(&self.q_prev, &self.phi_prev, false);
    }

    /// One leapfrog step.
    pub fn step(&mut self) -> Result<(), TdError> {
        let before = self.energy();
        let phi_new = self.advance_phi(&self.phi, &self.q, true);
        let q_new = self.advance_q(&self.q, &phi_new, true);
        self.q_prev2 = std::mem::replace(&mut self.q_prev, std::mem::replace(&mut self.q, q_new));
        self.phi_prev = std::mem::replace(&mut self.phi, phi_new);
        self.t += self.dt;
        self.steps += 1;
        let after = self.energy();
        if before > 0.0 {
            let growth = (after - before) / before;
            if growth > BLOWUP_GROWTH || !after.is_finite() {
                return Err(TdError::BlowUp { step: self.steps, growth });
            }
        }
        Ok(())
    }

    pub fn run(&mut self, steps: usize) -> Result<(), TdError> {
        for _ in 0..steps {
            self.step()?;
        }
        Ok(())
    }

    /// Energy carried by one line.
    pub fn line_energy(&self, j: usize) -> f64 {
        let dt = self.dt;
        let mut e = 0.0;
        for i in 0..=self.cells {
            let p = (self.phi[j][i] - self.phi_prev[j][i]) / dt;
            e += self.node_weight(i) * p * p;
        }
        for i in 0..self.cells {
            let r1 = (self.q_prev[j][i] - self.q_prev2[j][i]) / dt;
            let r2 = (self.q[j][i] - self.q_prev[j][i]) / dt;
            e += self.h * r1 * r2 / self.delta[j];
        }
        0.5 * e
    }

    /// Discrete field energy, conserved exactly by the lossless scheme.
    pub fn energy(&self) -> f64 {
        (0..self.n).map(|j| self.line_energy(j)).sum()
    }

    /// Energy on line `j` between `a` and `b`.
    pub fn window_energy(&self, j: usize, a: f64, b: f64) -> f64 {
        let dt = self.dt;
        let mut e = 0.0;
        for i in 0..=self.cells {
            let x = self.node_x(i);
            if x >= a && x <= b {
                let p = (self.phi[j][i] - self.phi_prev[j][i]) / dt;
                e += self.node_weight(i) * p * p;
            }
        }
        for i in 0..self.cells {
            let x = self.half_x(i);
            if x >= a && x <= b {
                let r1 = (self.q_prev[j][i] - self.q_prev2[j][i]) / dt;
                let r2 = (self.q[j][i] - self.q_prev[j][i]) / dt;
                e += self.h * r1 * r2 / self.delta[j];
            }
        }
        0.5 * e
    }

    /// Charge at the flux time `t`, averaged from the neighbouring half steps.
    pub fn q_at_phi_time(&self) -> Vec<Vec<f64>> {
        self.q.iter().zip(&self.q_prev).map(|(a, b)| a.iter().zip(b).map(|(x, y)| 0.5 * (x + y)).collect()).collect()
    }

    /// Snapshot rows `(x, Φ_1…Φ_N, Q_1…Q_N)` on the nodes, with `Q` interpolated
    /// to nodes and to the flux time.
    pub fn snapshot_rows(&self) -> Vec<Vec<f64>> {
        let q = self.q_at_phi_time();
        (0..=self.cells)
            .map(|i| {
                let mut row = vec![self.node_x(i)];
                row.extend((0..self.n).map(|j| self.phi[j][i]));
                for qj in q.iter() {
                    let val = if i == 0 {
                        qj[0]
                    } else if i == self.cells {
                        qj[self.cells - 1]
                    } else {
                        0.5 * (qj[i - 1] + qj[i])
                    };
                    row.push(val);
                }
                row
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::{rescale, CircuitSpec, LineLength};

    fn spec(n: usize, y: Option<DMatrix<f64>>, delta: f64) -> RescaledSpec {
        let c = CircuitSpec::uniform(n, LineLength::Finite(10.0), 1.0, 1.0 / delta);
        let mut r = rescale(&c);
        if let Some(y) = y {
            r.y = Some(y);
        }
        r
    }

    fn left_pulse(line: usize) -> Pulse {
        Pulse { line, center: 5.0, width: 0.5, amplitude: 1.0, direction: Direction::Left }
    }

    #[test]
    fn zero_data_stay_zero() {
        let s = spec(2, None, 1.0);
        let mut st = init_state(&s, &SimConfig { cells: 64, ..Default::default() }, &InitialData::Zero).unwrap();
        st.run(10).unwrap();
        assert_eq!(st.energy(), 0.0);
        assert!(st.phi.iter().flatten().all(|v| *v == 0.0));
    }

    #[test]
    fn pulse_energy_matches_closed_form() {
        let delta = 2.0;
        let s = spec(1, None, delta);
        let p = Pulse { direction: Direction::Right, ..left_pulse(0) };
        let mut errs = Vec::new();
        for cells in [200, 400] {
            let st = init_state(&s, &SimConfig { cells, ..Default::default() }, &InitialData::Pulses(vec![p])).unwrap();
            errs.push((st.energy() - gaussian_energy(&p, delta)).abs() / gaussian_energy(&p, delta));
        }
        assert!(errs[1] < 1e-3);
        assert!(errs[0] / errs[1] > 3.0, "{errs:?}");
    }

    #[test]
    fn guards() {
        let s = spec(1, None, 1.0);
        let near = Pulse { center: 1.0, ..left_pulse(0) };
        assert!(matches!(
            init_state(&s, &SimConfig { cells: 64, ..Default::default() }, &InitialData::Pulses(vec![near])),
            Err(TdError::PulseOverlap { .. })
        ));
        assert!(matches!(
            init_state(&s, &SimConfig { cells: 64, dt: Some(1.0), ..Default::default() }, &InitialData::Zero),
            Err(TdError::Cfl { .. })
        ));
        assert!(matches!(
            init_state(&s, &SimConfig { cells: 8, ..Default::default() }, &InitialData::Zero),
            Err(TdError::TooFewCells(8))
        ));
    }

    #[test]
    fn open_end_reflects_with_flux_sign() {
        let s = spec(1, None, 1.0);
        let cfg = SimConfig { cells: 400, ..Default::default() };
        let mut st = init_state(&s, &cfg, &InitialData::Pulses(vec![left_pulse(0)])).unwrap();
        let steps = (10.0 / st.dt).round() as usize;
        st.run(steps).unwrap();
        // after t = 10 the pulse is back at x = 5, moving right, same sign
        let i = (5.0 / st.h).round() as usize;
        assert!((st.phi[0][i] - 1.0).abs() < 1e-2, "{}", st.phi[0][i]);
    }

    #[test]
    fn gyrator_conserves_energy_exactly() {
        let y = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let s = spec(2, Some(y), 1.0);
        let cfg = SimConfig { cells: 256, ..Default::default() };
        let mut st = init_state(&s, &cfg, &InitialData::Pulses(vec![left_pulse(0)])).unwrap();
        let e0 = st.energy();
        st.run(2000).unwrap();
        assert!((st.energy() - e0).abs() / e0 < 1e-12);
    }

    #[test]
    fn absorbing_layer_removes_outgoing_pulse() {
        let s = spec(1, None, 1.0);
        let cfg = SimConfig { cells: 640, far_end: FarEnd::Absorbing, ..Default::default() };
        let p = Pulse { center: 4.0, width: 0.25, amplitude: 1.0, direction: Direction::Right, line: 0 };
        let mut st = init_state(&s, &cfg, &InitialData::Pulses(vec![p])).unwrap();
        let e0 = st.energy();
        let steps = (12.0 / st.dt).round() as usize;
        st.run(steps).unwrap();
        assert!(st.energy() / e0 < 1e-4, "{}", st.energy() / e0);
    }
}
