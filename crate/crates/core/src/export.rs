//! Output files: CSV tables, the Hamiltonian JSON and run manifests.
//!
//! Everything written here is a pure function of its inputs. The crate
//! version appears only in the manifest.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

use crate::finite::{SecularProblem, SpectrumTable};
use crate::hamiltonian::{Coupling, HamiltonianModel};
use crate::spectral::ModeSample;
use crate::tdsim::FieldState;

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("i/o: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ExportError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_rows(path: &Path, header: &[String], rows: impl Iterator<Item = Vec<String>>) -> Result<(), ExportError> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush()?;
    Ok(())
}

fn num(x: f64) -> String {
    format!("{x:e}")
}

/// The exported Hamiltonian. Field names are fixed for downstream tools.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HamiltonianJson {
    pub omegas: Vec<f64>,
    pub couplings: Vec<Coupling>,
    pub xi: f64,
    #[serde(rename = "C_J")]
    pub c_j: f64,
    #[serde(rename = "E_J")]
    pub e_j: f64,
    pub chi: f64,
    pub alpha: f64,
    #[serde(rename = "K")]
    pub k: usize,
}

impl HamiltonianJson {
    pub fn from_model(m: &HamiltonianModel) -> Self {
        Self {
            omegas: m.omegas.clone(),
            couplings: m.couplings.clone(),
            xi: m.xi,
            c_j: m.c_j,
            e_j: m.e_j,
            chi: m.chi,
            alpha: m.alpha,
            k: m.k,
        }
    }

    /// A circuit without junction: bare line modes, no couplings.
    pub fn uncoupled(omegas: Vec<f64>) -> Self {
        let k = omegas.len();
        Self { omegas, couplings: Vec::new(), xi: 0.0, c_j: 0.0, e_j: 0.0, chi: 0.0, alpha: 0.0, k }
    }
}

/// Conventions and settings of one run.
#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub input: String,
    /// `t = t_sign · σ_y ⊗ 1_N`, when a semi-infinite basis was built.
    pub t_sign: Option<i8>,
    /// Sign of the junction term in the finite-line operator.
    pub closure_sign: Option<f64>,
    pub tolerances: BTreeMap<String, f64>,
    pub parameters: BTreeMap<String, serde_json::Value>,
    pub seed: u64,
    pub outputs: Vec<String>,
}

impl Manifest {
    pub fn new(subcommand: &str, input: &str, seed: u64) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            input: input.to_string(),
            t_sign: None,
            closure_sign: None,
            tolerances: BTreeMap::new(),
            parameters: BTreeMap::new(),
            seed,
            outputs: Vec::new(),
        }
    }
}

/// One row per eigenfunction: `index, eigenspace, lambda, omega, u`.
pub fn write_spectrum_csv(path: &Path, table: &SpectrumTable) -> Result<(), ExportError> {
    let header = ["index", "eigenspace", "lambda", "omega", "u"].map(String::from);
    let mut lambda = 0;
    let rows = table.modes.iter().enumerate().map(|(i, m)| {
        if i > 0 && table.modes[i - 1].eigenspace == m.eigenspace {
            lambda += 1;
        } else {
            lambda = 0;
        }
        let u = table.u.as_ref().map(|u| num(u[i])).unwrap_or_default();
        vec![i.to_string(), m.eigenspace.to_string(), lambda.to_string(), num(m.omega), u]
    });
    write_rows(path, &header, rows)
}

/// Finite-line eigenfunctions sampled at `xs`: `index, omega, x, U_1…, V_1…`.
pub fn write_finite_modes_csv(path: &Path, table: &SpectrumTable, problem: &SecularProblem, xs: &[f64]) -> Result<(), ExportError> {
    let n = problem.n_lines();
    let mut header = vec!["index".to_string(), "omega".into(), "x".into()];
    header.extend((1..=n).map(|j| format!("U_{j}")));
    header.extend((1..=n).map(|j| format!("V_{j}")));
    let rows = table.modes.iter().enumerate().flat_map(|(i, m)| {
        xs.iter().map(move |&x| {
            let (u, v) = m.eval(x);
            let mut r = vec![i.to_string(), num(m.omega), num(x)];
            r.extend(u.iter().chain(v.iter()).map(|z| num(*z)));
            r
        })
    });
    write_rows(path, &header, rows)
}

/// Semi-infinite basis samples: `omega, branch, lambda, x, U_1…, V_1…`.
pub fn write_mode_samples_csv(path: &Path, samples: &[ModeSample], n: usize) -> Result<(), ExportError> {
    let mut header = vec!["omega".to_string(), "branch".into(), "lambda".into(), "x".into()];
    header.extend((1..=n).map(|j| format!("U_{j}")));
    header.extend((1..=n).map(|j| format!("V_{j}")));
    let rows = samples.iter().map(|s| {
        let mut r = vec![num(s.omega), s.branch.label().to_string(), s.lambda.to_string(), num(s.x)];
        r.extend(s.u.iter().chain(&s.v).map(|z| num(*z)));
        r
    });
    write_rows(path, &header, rows)
}

/// Field snapshot: `x, Phi_1…, Q_1…` on the nodes.
pub fn write_snapshot_csv(path: &Path, state: &FieldState) -> Result<(), ExportError> {
    let mut header = vec!["x".to_string()];
    header.extend((1..=state.n).map(|j| format!("Phi_{j}")));
    header.extend((1..=state.n).map(|j| format!("Q_{j}")));
    write_rows(path, &header, state.snapshot_rows().into_iter().map(|r| r.into_iter().map(num).collect()))
}

/// Generic numeric table.
pub fn write_table_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<(), ExportError> {
    let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
    write_rows(path, &header, rows.iter().map(|r| r.iter().map(|x| num(*x)).collect()))
}
