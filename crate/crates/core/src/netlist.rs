//! JSON netlists: parsing, validation and the field rescaling.
//!
//! A netlist lists the lines, the nonreciprocal element joining them at
//! `x = 0`, and optionally a junction capacitively coupled to one line at
//! `x = d`:
//!
//! ```json
//! {
//!   "lines": [{"length": 1.0, "c_delta": 1.0, "l_delta": 1.0}, ...],
//!   "nr_element": {"kind": "S", "matrix": [0, 1, -1, 0], "R": 1.0},
//!   "junction": {"line": 0, "C_c": 1.0, "C_J": 1.0, "E_J": 0.0},
//!   "hbar": 1.0
//! }
//! ```
//!
//! `length` is a number or the string `"inf"`. Matrices are row-major, either
//! flat or nested. Internally the fields are rescaled as `√c_δ Φ → Φ` and
//! `Q/√c_δ → Q`, after which the lines obey `Φ̇ = Q′`, `Q̇ = Δ Φ′` with the
//! diagonal velocity matrix `Δ = diag(1/(l_δ c_δ))`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::nrcore::{NrElement, NrError, NrTolerances};

#[derive(Debug, Error)]
pub enum NetlistError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("physical violation: {0}")]
    Physical(String),
    #[error("nonreciprocal element has {got} ports but the circuit has {expected} lines")]
    Dimension { expected: usize, got: usize },
    #[error("nonreciprocal element: {0}")]
    Element(#[from] NrError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LineLength {
    Finite(f64),
    SemiInfinite,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LineSpec {
    pub length: LineLength,
    pub c_delta: f64,
    pub l_delta: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct JunctionSpec {
    pub line_index: usize,
    pub c_c: f64,
    pub c_j: f64,
    pub e_j: f64,
}

impl JunctionSpec {
    pub fn c_sigma(&self) -> f64 {
        self.c_c + self.c_j
    }

    /// Series capacitance `C_c C_J / (C_c + C_J)`.
    pub fn c_series(&self) -> f64 {
        self.c_c * self.c_j / self.c_sigma()
    }
}

/// A validated circuit.
#[derive(Debug, Clone)]
pub struct CircuitSpec {
    pub lines: Vec<LineSpec>,
    pub nr_element: Option<NrElement>,
    pub junction: Option<JunctionSpec>,
    pub hbar: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawNetlist {
    lines: Vec<RawLine>,
    #[serde(default)]
    nr_element: Option<RawElement>,
    #[serde(default)]
    junction: Option<RawJunction>,
    #[serde(default)]
    hbar: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLine {
    length: Value,
    c_delta: f64,
    l_delta: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum RawMatrix {
    Flat(Vec<f64>),
    Nested(Vec<Vec<f64>>),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawElement {
    kind: ElementKind,
    matrix: RawMatrix,
    #[serde(rename = "R")]
    r: f64,
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
pub enum ElementKind {
    S,
    Y,
    Z,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawJunction {
    line: usize,
    #[serde(rename = "C_c")]
    c_c: f64,
    #[serde(rename = "C_J")]
    c_j: f64,
    #[serde(rename = "E_J")]
    e_j: f64,
}

fn square_matrix(raw: RawMatrix) -> Result<DMatrix<f64>, NetlistError> {
    match raw {
        RawMatrix::Flat(v) => {
            let n = (v.len() as f64).sqrt().round() as usize;
            if n == 0 || n * n != v.len() {
                return Err(NetlistError::Schema(format!("matrix with {} entries is not square", v.len())));
            }
            Ok(DMatrix::from_row_slice(n, n, &v))
        }
        RawMatrix::Nested(rows) => {
            let n = rows.len();
            if n == 0 || rows.iter().any(|r| r.len() != n) {
                return Err(NetlistError::Schema("nested matrix is not square".into()));
            }
            let flat: Vec<f64> = rows.into_iter().flatten().collect();
            Ok(DMatrix::from_row_slice(n, n, &flat))
        }
    }
}

fn parse_length(v: &Value) -> Result<LineLength, NetlistError> {
    match v {
        Value::Number(n) => {
            let d = n.as_f64().ok_or_else(|| NetlistError::Schema("length is not a real number".into()))?;
            if !(d.is_finite() && d > 0.0) {
                return Err(NetlistError::Physical(format!("line length must be positive, got {d}")));
            }
            Ok(LineLength::Finite(d))
        }
        Value::String(s) if s == "inf" => Ok(LineLength::SemiInfinite),
        other => Err(NetlistError::Schema(format!("length must be a number or \"inf\", got {other}"))),
    }
}

/// Parse and validate a JSON netlist with default element tolerances.
pub fn parse_netlist(text: &str) -> Result<CircuitSpec, NetlistError> {
    parse_netlist_with(text, &NrTolerances::default())
}

pub fn parse_netlist_with(text: &str, tol: &NrTolerances) -> Result<CircuitSpec, NetlistError> {
    let raw: RawNetlist = serde_json::from_str(text).map_err(|e| NetlistError::Schema(e.to_string()))?;
    let mut lines = Vec::with_capacity(raw.lines.len());
    for l in &raw.lines {
        lines.push(LineSpec { length: parse_length(&l.length)?, c_delta: l.c_delta, l_delta: l.l_delta });
    }
    let nr_element = match raw.nr_element {
        None => None,
        Some(el) => {
            let m = square_matrix(el.matrix)?;
            if m.nrows() != lines.len() {
                return Err(NetlistError::Dimension { expected: lines.len(), got: m.nrows() });
            }
            Some(match el.kind {
                ElementKind::S => NrElement::from_scattering(m, el.r, tol)?,
                ElementKind::Y => NrElement::from_admittance(m, el.r, tol)?,
                ElementKind::Z => NrElement::from_impedance(m, el.r, tol)?,
            })
        }
    };
    let junction = raw.junction.map(|j| JunctionSpec { line_index: j.line, c_c: j.c_c, c_j: j.c_j, e_j: j.e_j });
    let spec = CircuitSpec { lines, nr_element, junction, hbar: raw.hbar.unwrap_or(1.0) };
    spec.validate()?;
    Ok(spec)
}

impl CircuitSpec {
    /// `n` identical lines without element or junction.
    pub fn uniform(n: usize, length: LineLength, c_delta: f64, l_delta: f64) -> Self {
        Self {
            lines: vec![LineSpec { length, c_delta, l_delta }; n],
            nr_element: None,
            junction: None,
            hbar: 1.0,
        }
    }

    pub fn n_lines(&self) -> usize {
        self.lines.len()
    }

    /// Common length, `None` for semi-infinite lines.
    pub fn length(&self) -> Option<f64> {
        match self.lines.first().map(|l| l.length) {
            Some(LineLength::Finite(d)) => Some(d),
            _ => None,
        }
    }

    pub fn is_semi_infinite(&self) -> bool {
        matches!(self.lines.first().map(|l| l.length), Some(LineLength::SemiInfinite))
    }

    pub fn validate(&self) -> Result<(), NetlistError> {
        if self.lines.is_empty() {
            return Err(NetlistError::Schema("at least one line is required".into()));
        }
        for (i, l) in self.lines.iter().enumerate() {
            if !(l.c_delta.is_finite() && l.c_delta > 0.0) {
                return Err(NetlistError::Physical(format!("line {i}: c_delta must be positive, got {}", l.c_delta)));
            }
            if !(l.l_delta.is_finite() && l.l_delta > 0.0) {
                return Err(NetlistError::Physical(format!("line {i}: l_delta must be positive, got {}", l.l_delta)));
            }
            if let LineLength::Finite(d) = l.length {
                if !(d.is_finite() && d > 0.0) {
                    return Err(NetlistError::Physical(format!("line {i}: length must be positive, got {d}")));
                }
            }
        }
        let first = self.lines[0].length;
        for (i, l) in self.lines.iter().enumerate().skip(1) {
            match (first, l.length) {
                (LineLength::SemiInfinite, LineLength::SemiInfinite) => {}
                (LineLength::Finite(a), LineLength::Finite(b)) => {
                    if (a - b).abs() > 1e-12 * a.abs().max(b.abs()) {
                        return Err(NetlistError::Physical(format!(
                            "line {i}: all finite lines must share one length ({a} vs {b})"
                        )));
                    }
                }
                _ => {
                    return Err(NetlistError::Physical("finite and semi-infinite lines cannot be mixed".into()));
                }
            }
        }
        if let Some(el) = &self.nr_element {
            if el.ports() != self.n_lines() {
                return Err(NetlistError::Dimension { expected: self.n_lines(), got: el.ports() });
            }
        }
        if let Some(j) = &self.junction {
            if j.line_index >= self.n_lines() {
                return Err(NetlistError::Physical(format!(
                    "junction line {} out of range for {} lines",
                    j.line_index,
                    self.n_lines()
                )));
            }
            if !(j.c_c.is_finite() && j.c_c > 0.0) || !(j.c_j.is_finite() && j.c_j > 0.0) {
                return Err(NetlistError::Physical("junction capacitances must be positive".into()));
            }
            if !(j.e_j.is_finite() && j.e_j >= 0.0) {
                return Err(NetlistError::Physical("E_J must be non-negative".into()));
            }
            if self.is_semi_infinite() {
                return Err(NetlistError::Physical("a junction requires finite lines".into()));
            }
        }
        if !(self.hbar.is_finite() && self.hbar > 0.0) {
            return Err(NetlistError::Physical(format!("hbar must be positive, got {}", self.hbar)));
        }
        Ok(())
    }
}

/// Junction data in rescaled units.
#[derive(Debug, Clone, PartialEq)]
pub struct RescaledJunction {
    pub line_index: usize,
    pub c_c: f64,
    pub c_j: f64,
    pub e_j: f64,
    /// `c_δ` of the junction line.
    pub c_delta: f64,
    /// `α_s = C_c C_J / (c_δ (C_c + C_J))`, the boundary weight that removes
    /// mode-mode couplings.
    pub alpha_s: f64,
    /// `ξ = C_c / ((C_c + C_J) √c_δ)`.
    pub xi: f64,
}

/// The circuit in rescaled units.
#[derive(Debug, Clone)]
pub struct RescaledSpec {
    pub n: usize,
    /// Diagonal of the velocity matrix `Δ`.
    pub delta: DVector<f64>,
    /// Per-line `√c_δ`, kept for the inverse map.
    pub sqrt_c: DVector<f64>,
    pub length: Option<f64>,
    /// Rescaled admittance `c_δ^{-1/2} Ȳ c_δ^{-1/2}`; zero when there is no element.
    pub y: Option<DMatrix<f64>>,
    /// Rescaled impedance `√c_δ Z̄ √c_δ`, when it exists.
    pub z: Option<DMatrix<f64>>,
    pub has_element: bool,
    pub junction: Option<RescaledJunction>,
    pub hbar: f64,
}

/// Apply the field rescaling.
pub fn rescale(spec: &CircuitSpec) -> RescaledSpec {
    let n = spec.n_lines();
    let delta = DVector::from_iterator(n, spec.lines.iter().map(|l| 1.0 / (l.l_delta * l.c_delta)));
    let sqrt_c = DVector::from_iterator(n, spec.lines.iter().map(|l| l.c_delta.sqrt()));
    let inv_sqrt = DMatrix::from_diagonal(&sqrt_c.map(|s| 1.0 / s));
    let sq = DMatrix::from_diagonal(&sqrt_c);
    let (y, z) = match &spec.nr_element {
        None => (Some(DMatrix::zeros(n, n)), None),
        Some(el) => (
            el.y_bar.as_ref().map(|yb| &inv_sqrt * yb * &inv_sqrt),
            el.z_bar.as_ref().map(|zb| &sq * zb * &sq),
        ),
    };
    let junction = spec.junction.as_ref().map(|j| {
        let c = spec.lines[j.line_index].c_delta;
        RescaledJunction {
            line_index: j.line_index,
            c_c: j.c_c,
            c_j: j.c_j,
            e_j: j.e_j,
            c_delta: c,
            alpha_s: j.c_series() / c,
            xi: j.c_c / (j.c_sigma() * c.sqrt()),
        }
    });
    RescaledSpec {
        n,
        delta,
        sqrt_c,
        length: spec.length(),
        y,
        z,
        has_element: spec.nr_element.is_some(),
        junction,
        hbar: spec.hbar,
    }
}

impl RescaledSpec {
    pub fn delta_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&self.delta)
    }

    /// Map a rescaled admittance back to physical units.
    pub fn unscale_admittance(&self, y: &DMatrix<f64>) -> DMatrix<f64> {
        let sq = DMatrix::from_diagonal(&self.sqrt_c);
        &sq * y * &sq
    }

    /// Map a rescaled impedance back to physical units.
    pub fn unscale_impedance(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let inv = DMatrix::from_diagonal(&self.sqrt_c.map(|s| 1.0 / s));
        &inv * z * &inv
    }
}
