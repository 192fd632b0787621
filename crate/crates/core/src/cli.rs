//! Command-line front end.
//!
//! Exit codes: 0 on success, 2 for invalid input (schema, physical
//! parameters, CFL), 3 for numerical failures and failed checks.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use nalgebra::DMatrix;
use serde::Serialize;
use serde_json::{json, Value};

use crate::export::{self, ExportError, HamiltonianJson, Manifest};
use crate::finite::{
    eigenfrequencies, eigenfrequencies_count, resolve_closure, selfadjointness_residual, FiniteError, InnerProduct,
    SecularProblem, SpectrumTable,
};
use crate::finite::selfadjoint::CLOSURE_TOLERANCE;
use crate::finite::table::{decay_exponent, tail_corrected_sum, NULL_THRESHOLD};
use crate::hamiltonian::{
    assemble_hamiltonian, lamb_shift, mode_space_reduction, trs_check, trs_sigma, HamiltonianError, MIN_MODES,
    T_TOLERANCE,
};
use crate::netlist::{parse_netlist_with, rescale, CircuitSpec, NetlistError, RescaledSpec};
use crate::nrcore::{admittance_to_scattering, scattering_to_admittance, NrTolerances};
use crate::spectral::{sample_modes, semi_infinite_basis, telegrapher_matrix, ModeBasis, SpectralError};
use crate::tdsim::{init_state, mode_energy_spectrum, Direction, FarEnd, InitialData, Pulse, SimConfig, TdError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

/// Pairs of random trial doublets used by the self-adjointness checks.
const TRIAL_PAIRS: usize = 100;

#[derive(Debug, Parser)]
#[command(name = "tlquant", version, about = "Quantize transmission lines coupled by nonreciprocal elements")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    #[arg(long = "tol-unitary", global = true, default_value_t = 1e-10)]
    pub tol_unitary: f64,
    #[arg(long = "tol-skew", global = true, default_value_t = 1e-10)]
    pub tol_skew: f64,
    #[arg(long = "tol-eigen", global = true, default_value_t = 1e-8)]
    pub tol_eigen: f64,
    /// Pass threshold for boundary residuals and orthonormality in `validate`.
    #[arg(long = "tol-residual", global = true, default_value_t = 1e-10)]
    pub tol_residual: f64,
    /// Largest frequency for finite spectra and semi-infinite grids.
    #[arg(long = "omega-max", global = true)]
    pub omega_max: Option<f64>,
    /// Number of frequencies in the semi-infinite grid.
    #[arg(long, global = true, default_value_t = 8)]
    pub grid: usize,
    /// Scan step of the finite-line root search.
    #[arg(long = "scan-step", global = true)]
    pub scan_step: Option<f64>,
    /// Number of finite-line eigenfunctions kept.
    #[arg(long = "trunc-K", global = true)]
    pub trunc_k: Option<usize>,
    /// Seed of the random trial functions.
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Eigenfrequencies and coupling vector (finite lines) or the mode basis
    /// (semi-infinite lines).
    Spectrum { netlist: PathBuf },
    /// Junction Hamiltonian as JSON.
    Quantize { netlist: PathBuf },
    /// Time-domain simulation of the lines.
    Simulate {
        netlist: PathBuf,
        #[command(flatten)]
        sim: SimOpts,
    },
    /// Invariant checks with a PASS/FAIL report.
    Validate {
        netlist: PathBuf,
        /// Perturb the computed modes before checking (negative control).
        #[arg(long)]
        perturb: bool,
    },
    /// Eigenfunctions sampled in space.
    Modes {
        netlist: PathBuf,
        /// Sample points per line.
        #[arg(long, default_value_t = 101)]
        samples: usize,
        /// Sampling range for semi-infinite lines.
        #[arg(long = "x-max", default_value_t = 10.0)]
        x_max: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FarEndArg {
    Open,
    Absorbing,
}

#[derive(Debug, Clone, Args)]
pub struct SimOpts {
    #[arg(long, default_value_t = 512)]
    pub cells: usize,
    #[arg(long, default_value_t = 0.5)]
    pub cfl: f64,
    /// Explicit timestep; overrides `--cfl`.
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated length, required for semi-infinite lines.
    #[arg(long)]
    pub length: Option<f64>,
    #[arg(long, value_enum)]
    pub far_end: Option<FarEndArg>,
    /// Simulated time; defaults to the time for a pulse to reach the element
    /// and return to its starting point.
    #[arg(long = "t-end")]
    pub t_end: Option<f64>,
    /// `line:center:width:amplitude:left|right`, lines counted from 1.
    #[arg(long = "pulse")]
    pub pulses: Vec<String>,
    /// Steps between snapshots; 0 writes only the final state.
    #[arg(long = "snapshot-stride", default_value_t = 0)]
    pub snapshot_stride: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => EXIT_INPUT,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<NetlistError> for CliError {
    fn from(e: NetlistError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<ExportError> for CliError {
    fn from(e: ExportError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FiniteError> for CliError {
    fn from(e: FiniteError) -> Self {
        match e {
            FiniteError::BadParameter(_) | FiniteError::NotFinite => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<SpectralError> for CliError {
    fn from(e: SpectralError) -> Self {
        match e {
            SpectralError::NotSemiInfinite | SpectralError::BadFrequency(_) => CliError::Input(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

impl From<HamiltonianError> for CliError {
    fn from(e: HamiltonianError) -> Self {
        CliError::Numerical(e.to_string())
    }
}

impl From<TdError> for CliError {
    fn from(e: TdError) -> Self {
        match e {
            TdError::BlowUp { .. } | TdError::NoAdmittance => CliError::Numerical(e.to_string()),
            _ => CliError::Input(e.to_string()),
        }
    }
}

/// Parse arguments, run, and return the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cli: &Cli) -> Result<i32, CliError> {
    let g = &cli.global;
    for (name, v) in [("tol-unitary", g.tol_unitary), ("tol-skew", g.tol_skew), ("tol-eigen", g.tol_eigen), ("tol-residual", g.tol_residual)] {
        positive(name, v)?;
    }
    if let Some(w) = g.omega_max {
        positive("omega-max", w)?;
    }
    if let Some(s) = g.scan_step {
        positive("scan-step", s)?;
    }
    if g.grid == 0 {
        return Err(CliError::Input("--grid must be positive".into()));
    }
    fs::create_dir_all(&g.out).map_err(|e| CliError::Input(format!("cannot create {}: {e}", g.out.display())))?;
    match &cli.command {
        Command::Spectrum { netlist } => cmd_spectrum(g, netlist),
        Command::Quantize { netlist } => cmd_quantize(g, netlist),
        Command::Simulate { netlist, sim } => cmd_simulate(g, netlist, sim),
        Command::Validate { netlist, perturb } => cmd_validate(g, netlist, *perturb),
        Command::Modes { netlist, samples, x_max } => cmd_modes(g, netlist, *samples, *x_max),
    }
}

fn positive(name: &str, v: f64) -> Result<(), CliError> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(CliError::Input(format!("--{name} must be positive, got {v}")))
    }
}

impl GlobalOpts {
    fn nr_tolerances(&self) -> NrTolerances {
        NrTolerances { unitary: self.tol_unitary, skew: self.tol_skew, eigen_detect: self.tol_eigen }
    }

    fn manifest(&self, sub: &str, input: &Path) -> Manifest {
        let mut m = Manifest::new(sub, &input.display().to_string(), self.seed);
        let t = &mut m.tolerances;
        t.insert("unitary".into(), self.tol_unitary);
        t.insert("skew".into(), self.tol_skew);
        t.insert("eigen_detect".into(), self.tol_eigen);
        t.insert("residual".into(), self.tol_residual);
        t.insert("null_threshold".into(), NULL_THRESHOLD);
        t.insert("closure".into(), CLOSURE_TOLERANCE);
        t.insert("t_matrix".into(), T_TOLERANCE);
        m.parameters.insert("grid".into(), json!(self.grid));
        m.parameters.insert("omega_max".into(), json!(self.omega_max));
        m.parameters.insert("scan_step".into(), json!(self.scan_step));
        m.parameters.insert("trunc_K".into(), json!(self.trunc_k));
        m
    }

    fn frequency_grid(&self) -> Vec<f64> {
        let top = self.omega_max.unwrap_or(10.0);
        (1..=self.grid).map(|i| top * i as f64 / self.grid as f64).collect()
    }
}

fn load(g: &GlobalOpts, path: &Path) -> Result<(CircuitSpec, RescaledSpec), CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let spec = parse_netlist_with(&text, &g.nr_tolerances())?;
    let r = rescale(&spec);
    Ok((spec, r))
}

fn finish(g: &GlobalOpts, mut manifest: Manifest, outputs: &[&str]) -> Result<(), CliError> {
    manifest.outputs = outputs.iter().map(|s| s.to_string()).collect();
    export::write_json(&g.out.join("manifest.json"), &manifest)?;
    Ok(())
}

/// Finite problem with the closure sign settled.
fn finite_problem(g: &GlobalOpts, r: &RescaledSpec) -> Result<SecularProblem, CliError> {
    let mut p = SecularProblem::from_spec(r, None)?;
    resolve_closure(&mut p, TRIAL_PAIRS, g.seed)?;
    Ok(p)
}

fn finite_table(g: &GlobalOpts, p: &SecularProblem, default_count: usize) -> Result<SpectrumTable, CliError> {
    let table = match (g.omega_max, g.trunc_k) {
        (Some(w), None) => eigenfrequencies(p, w, g.scan_step)?,
        (_, k) => eigenfrequencies_count(p, k.unwrap_or(default_count), g.scan_step)?,
    };
    Ok(table)
}

fn matrix_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn cmd_spectrum(g: &GlobalOpts, path: &Path) -> Result<i32, CliError> {
    let (_, r) = load(g, path)?;
    let mut manifest = g.manifest("spectrum", path);
    if r.length.is_none() {
        let basis = semi_infinite_basis(&r, &g.frequency_grid())?;
        let tm = telegrapher_matrix(&basis);
        manifest.t_sign = Some(tm.sign);
        let doc = json!({
            "kind": basis.kind,
            "frequencies": basis.frequencies,
            "m_values": basis.m_values,
            "e_vectors": matrix_rows(&basis.e_vectors),
            "t_sign": tm.sign,
            "t_deviation": tm.deviation,
        });
        export::write_json(&g.out.join("spectrum.json"), &doc)?;
        finish(g, manifest, &["spectrum.json"])?;
        println!("semi-infinite basis: {} lines, m = {:?}, t sign {}", r.n, basis.m_values, tm.sign);
        return Ok(EXIT_OK);
    }
    let p = finite_problem(g, &r)?;
    manifest.closure_sign = Some(p.closure_sign);
    let table = finite_table(g, &p, 50)?;
    let sum_rule = table.u.as_ref().map(|u| {
        let fit = tail_corrected_sum(&u.iter().map(|x| x * x).collect::<Vec<_>>());
        json!({"partial": fit.partial, "estimate": fit.estimate, "target": 1.0 / table.alpha})
    });
    let doc = json!({
        "omegas": table.omegas,
        "multiplicities": table.multiplicities,
        "zero_modes": table.zero_modes,
        "modes": table.n_modes(),
        "alpha": table.alpha,
        "closure_sign": table.closure_sign,
        "has_junction": table.has_junction,
        "u": table.u,
        "sum_rule": sum_rule,
        "omega_max": table.omega_max,
        "scan_resolution": table.scan_resolution,
        "density_expected": table.density_expected,
    });
    export::write_spectrum_csv(&g.out.join("spectrum.csv"), &table)?;
    export::write_json(&g.out.join("spectrum.json"), &doc)?;
    finish(g, manifest, &["spectrum.csv", "spectrum.json"])?;
    println!("{} eigenfunctions, {} distinct positive frequencies", table.n_modes(), table.omegas.len());
    for (w, m) in table.omegas.iter().zip(&table.multiplicities).take(10) {
        println!("  ω = {w:.12}  ×{m}");
    }
    Ok(EXIT_OK)
}

fn cmd_quantize(g: &GlobalOpts, path: &Path) -> Result<i32, CliError> {
    let (_, r) = load(g, path)?;
    let mut manifest = g.manifest("quantize", path);
    let k = g.trunc_k.unwrap_or(500);
    let Some(junction) = r.junction.clone() else {
        let p = SecularProblem::from_spec(&r, None)?;
        manifest.closure_sign = Some(p.closure_sign);
        let table = eigenfrequencies_count(&p, k, g.scan_step)?;
        let doc = HamiltonianJson::uncoupled(table.modes.iter().map(|m| m.omega).collect());
        export::write_json(&g.out.join("hamiltonian.json"), &doc)?;
        finish(g, manifest, &["hamiltonian.json"])?;
        println!("no junction: {} bare modes, no couplings", doc.k);
        return Ok(EXIT_OK);
    };
    if k < MIN_MODES {
        return Err(HamiltonianError::TooFewModes { k, min: MIN_MODES }.into());
    }
    let p = finite_problem(g, &r)?;
    manifest.closure_sign = Some(p.closure_sign);
    let table = eigenfrequencies_count(&p, k, g.scan_step)?;
    let model = assemble_hamiltonian(&table, &junction, k, r.hbar)?;
    let ls = lamb_shift(&model)?;
    export::write_json(&g.out.join("hamiltonian.json"), &HamiltonianJson::from_model(&model))?;
    let rows: Vec<Vec<f64>> = ls.partial_sums.iter().enumerate().map(|(i, s)| vec![(i + 1) as f64, *s]).collect();
    export::write_table_csv(&g.out.join("lamb_shift.csv"), &["K", "chi_partial"], &rows)?;
    let report = json!({
        "chi_extrapolated": ls.extrapolated,
        "chi_partial": ls.fit.partial,
        "target": ls.target,
        "relative_error": ls.relative_error,
        "bounded": ls.bounded,
        "monotone": ls.monotone,
        "decay_exponent": decay_exponent(&model.u_u, 2),
        "mode_mode_max": model.mode_mode_max,
    });
    export::write_json(&g.out.join("quantize_report.json"), &report)?;
    finish(g, manifest, &["hamiltonian.json", "lamb_shift.csv", "quantize_report.json"])?;
    println!("{:>8}  {:>16}  {:>16}", "K", "χ partial", "ħ/(2α)");
    let mut marks: Vec<usize> = (1..=10).map(|i| i * k / 10).filter(|m| *m > 0).collect();
    marks.dedup();
    for m in marks {
        println!("{:>8}  {:>16.10}  {:>16.10}", m, ls.partial_sums[m - 1], ls.target);
    }
    println!("{:>8}  {:>16.10}  {:>16.10}  (rel. error {:.2e})", "tail", ls.extrapolated, ls.target, ls.relative_error);
    Ok(EXIT_OK)
}

fn parse_pulse(s: &str) -> Result<Pulse, CliError> {
    let bad = || CliError::Input(format!("pulse must be line:center:width:amplitude:left|right, got {s}"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 5 {
        return Err(bad());
    }
    let line: usize = parts[0].parse().map_err(|_| bad())?;
    if line == 0 {
        return Err(bad());
    }
    let f = |i: usize| parts[i].parse::<f64>().map_err(|_| bad());
    let direction = match parts[4] {
        "left" => Direction::Left,
        "right" => Direction::Right,
        _ => return Err(bad()),
    };
    Ok(Pulse { line: line - 1, center: f(1)?, width: f(2)?, amplitude: f(3)?, direction })
}

#[derive(Debug, Serialize)]
struct SimReport {
    steps: usize,
    dt: f64,
    h: f64,
    t_end: f64,
    initial_energy: f64,
    final_energy: f64,
    max_relative_drift: f64,
    line_energies: Vec<f64>,
    /// Final energy per line over the initial energy.
    line_fractions: Vec<f64>,
    /// Share of the initial energy found on lines that carried no pulse.
    transmitted_fraction: f64,
    energy_trace: Vec<(f64, f64)>,
    mode_spectrum: Option<Vec<(f64, f64)>>,
}

fn cmd_simulate(g: &GlobalOpts, path: &Path, o: &SimOpts) -> Result<i32, CliError> {
    let (_, r) = load(g, path)?;
    if r.junction.is_some() {
        return Err(TdError::Unsupported("the time-domain simulation has no junction model".into()).into());
    }
    let far_end = match o.far_end {
        Some(FarEndArg::Open) => FarEnd::Open,
        Some(FarEndArg::Absorbing) => FarEnd::Absorbing,
        None if r.length.is_none() => FarEnd::Absorbing,
        None => FarEnd::Open,
    };
    let config = SimConfig { cells: o.cells, length: o.length, cfl: o.cfl, dt: o.dt, far_end };
    let length = o.length.or(r.length).ok_or(TdError::NoLength)?;
    let mut pulses = o.pulses.iter().map(|s| parse_pulse(s)).collect::<Result<Vec<_>, _>>()?;
    if pulses.is_empty() {
        pulses.push(Pulse { line: 0, center: 0.5 * length, width: length / 32.0, amplitude: 1.0, direction: Direction::Left });
    }
    let mut state = init_state(&r, &config, &InitialData::Pulses(pulses.clone()))?;
    let vmin = r.delta.iter().fold(f64::INFINITY, |a, d| a.min(d.sqrt()));
    let t_end = o.t_end.unwrap_or_else(|| pulses.iter().map(|p| 2.0 * p.center).fold(0.0, f64::max) / vmin);
    positive("t-end", t_end)?;
    let steps = (t_end / state.dt).round() as usize;
    let initial = state.energy();
    let mut manifest = g.manifest("simulate", path);
    manifest.parameters.insert("sim".into(), serde_json::to_value(&config).map_err(ExportError::from)?);
    manifest.parameters.insert("pulses".into(), serde_json::to_value(&pulses).map_err(ExportError::from)?);
    let mut outputs = vec!["simulate_report.json".to_string(), "snapshot_final.csv".to_string()];
    let mut trace = vec![(state.t, initial)];
    let mut drift: f64 = 0.0;
    let trace_every = (steps / 200).max(1);
    for s in 1..=steps {
        state.step()?;
        if far_end == FarEnd::Open {
            drift = drift.max((state.energy() - initial).abs() / initial.max(f64::MIN_POSITIVE));
        }
        if s % trace_every == 0 || s == steps {
            trace.push((state.t, state.energy()));
        }
        if o.snapshot_stride > 0 && s % o.snapshot_stride == 0 {
            let name = format!("snapshot_{s:08}.csv");
            export::write_snapshot_csv(&g.out.join(&name), &state)?;
            outputs.push(name);
        }
    }
    export::write_snapshot_csv(&g.out.join("snapshot_final.csv"), &state)?;
    let line_energies: Vec<f64> = (0..state.n).map(|j| state.line_energy(j)).collect();
    let denom = initial.max(f64::MIN_POSITIVE);
    let sources: Vec<usize> = pulses.iter().map(|p| p.line).collect();
    let transmitted: f64 = line_energies.iter().enumerate().filter(|(j, _)| !sources.contains(j)).fold(0.0, |a, (_, e)| a + e);
    let mode_spectrum = if r.length.is_some() && far_end == FarEnd::Open && o.length.is_none() {
        let p = SecularProblem::from_spec(&r, None)?;
        let table = eigenfrequencies_count(&p, g.trunc_k.unwrap_or(40), g.scan_step)?;
        Some(mode_energy_spectrum(&state, &p, &table)?.eigenspace_energies)
    } else {
        None
    };
    let report = SimReport {
        steps,
        dt: state.dt,
        h: state.h,
        t_end: state.t,
        initial_energy: initial,
        final_energy: state.energy(),
        max_relative_drift: drift,
        line_fractions: line_energies.iter().map(|e| e / denom).collect(),
        line_energies,
        transmitted_fraction: transmitted / denom,
        energy_trace: trace,
        mode_spectrum,
    };
    export::write_json(&g.out.join("simulate_report.json"), &report)?;
    let refs: Vec<&str> = outputs.iter().map(|s| s.as_str()).collect();
    finish(g, manifest, &refs)?;
    println!("{} steps of dt = {:.4e} to t = {:.4}", steps, state.dt, state.t);
    for (j, f) in report.line_fractions.iter().enumerate() {
        println!("  line {}: energy fraction {:.7}", j + 1, f);
    }
    println!("  transmitted fraction {:.7}", report.transmitted_fraction);
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    /// `below`: passes when `value < tolerance`; `above`: when `value > tolerance`.
    pub expect: &'static str,
    pub pass: bool,
}

fn below(name: &str, value: f64, tolerance: f64) -> Check {
    Check { name: name.into(), value, tolerance, expect: "below", pass: value < tolerance }
}

fn above(name: &str, value: f64, tolerance: f64) -> Check {
    Check { name: name.into(), value, tolerance, expect: "above", pass: value > tolerance }
}

fn element_checks(g: &GlobalOpts, spec: &CircuitSpec, checks: &mut Vec<Check>) {
    let Some(el) = &spec.nr_element else { return };
    let tol = g.nr_tolerances();
    if let (Some(s), Some(y)) = (&el.s, &el.y_bar) {
        if let Ok(back) = admittance_to_scattering(y, el.r) {
            checks.push(below("element_round_trip_S_Y_S", (back - s).amax(), 1e-10));
        }
        if let Ok(y2) = scattering_to_admittance(s, el.r, &tol) {
            checks.push(below("element_admittance_skew", (&y2 + y2.transpose()).amax(), 1e-10));
        }
    }
    let p = &el.projector_p1;
    checks.push(below("element_projector_idempotent", (p * p - p).amax(), 1e-12));
}

fn semi_infinite_checks(g: &GlobalOpts, basis: &ModeBasis, checks: &mut Vec<Check>, manifest: &mut Manifest) -> Result<Value, CliError> {
    checks.push(below("boundary_residual", basis.max_boundary_residual(), g.tol_residual));
    checks.push(below("algebraic_orthonormality", basis.algebraic_orthonormality(), g.tol_residual));
    let tm = telegrapher_matrix(basis);
    manifest.t_sign = Some(tm.sign);
    checks.push(below("telegrapher_matrix_deviation", tm.deviation, g.tol_residual));
    checks.push(below("telegrapher_matrix_square", tm.square_deviation, g.tol_residual));
    let mut trs = Value::Null;
    if tm.deviation < T_TOLERANCE {
        let model = mode_space_reduction(&tm.t, &basis.frequencies)?;
        checks.push(below("symplectic_deviation", model.symplectic_deviation, 1e-12));
        checks.push(below("final_form_deviation", model.final_form_deviation, 1e-12));
        checks.push(below("nondynamical_residual", model.nondynamical_residual, 1e-12));
        let sigma = trs_sigma(basis, &basis.frequencies);
        let report = trs_check(&model, &sigma);
        if report.breaks_trs {
            checks.push(above("trs_off_pattern", report.off_pattern, 1e-6));
        } else {
            checks.push(below("trs_anticommutator", report.anticommutator, 1e-12));
            checks.push(below("trs_delta_orthogonality", report.delta_orthogonality, 1e-12));
        }
        trs = serde_json::to_value(&report).map_err(ExportError::from)?;
    }
    Ok(trs)
}

fn finite_checks(
    g: &GlobalOpts,
    p: &SecularProblem,
    table: &SpectrumTable,
    checks: &mut Vec<Check>,
) {
    checks.push(below("boundary_residual", table.max_boundary_residual(p), g.tol_residual));
    let count = table.n_modes().min(20);
    let gram = table.gram(p, count);
    let gram_dev = (gram - DMatrix::<f64>::identity(count, count)).amax();
    checks.push(below("gram_first_20", gram_dev, 1e-8));
    checks.push(below(
        "self_adjointness",
        selfadjointness_residual(p, TRIAL_PAIRS, g.seed, InnerProduct::Full),
        CLOSURE_TOLERANCE,
    ));
    if p.has_junction() {
        checks.push(above(
            "self_adjointness_without_boundary_term",
            selfadjointness_residual(p, TRIAL_PAIRS, g.seed, InnerProduct::DropBoundary),
            1e-3,
        ));
    }
}

fn cmd_validate(g: &GlobalOpts, path: &Path, perturb: bool) -> Result<i32, CliError> {
    let (spec, r) = load(g, path)?;
    let mut manifest = g.manifest("validate", path);
    manifest.parameters.insert("perturb".into(), json!(perturb));
    let mut checks = Vec::new();
    element_checks(g, &spec, &mut checks);
    let mut extra = BTreeMap::new();
    if r.length.is_none() {
        let mut basis = semi_infinite_basis(&r, &g.frequency_grid())?;
        if perturb {
            basis.e_vectors[(0, 0)] += 1e-3;
        }
        let trs = semi_infinite_checks(g, &basis, &mut checks, &mut manifest)?;
        extra.insert("trs", trs);
    } else {
        let p = finite_problem(g, &r)?;
        manifest.closure_sign = Some(p.closure_sign);
        let mut table = finite_table(g, &p, 40)?;
        if perturb {
            if let Some(m) = table.modes.iter_mut().find(|m| m.omega > 0.0) {
                for c in m.u_cos.iter_mut().chain(m.v_sin.iter_mut()) {
                    *c *= 1.001;
                }
                m.u_cos[0] += 1e-3;
            }
        }
        finite_checks(g, &p, &table, &mut checks);
    }
    let all_pass = checks.iter().all(|c| c.pass);
    let doc = json!({"pass": all_pass, "checks": checks, "details": extra});
    export::write_json(&g.out.join("validate.json"), &doc)?;
    finish(g, manifest, &["validate.json"])?;
    for c in &checks {
        println!("{} {:<44} {:.3e} ({} {:.1e})", if c.pass { "PASS" } else { "FAIL" }, c.name, c.value, c.expect, c.tolerance);
    }
    Ok(if all_pass { EXIT_OK } else { EXIT_NUMERICAL })
}

fn cmd_modes(g: &GlobalOpts, path: &Path, samples: usize, x_max: f64) -> Result<i32, CliError> {
    if samples < 2 {
        return Err(CliError::Input("--samples must be at least 2".into()));
    }
    positive("x-max", x_max)?;
    let (_, r) = load(g, path)?;
    let mut manifest = g.manifest("modes", path);
    let top = r.length.unwrap_or(x_max);
    let xs: Vec<f64> = (0..samples).map(|i| top * i as f64 / (samples - 1) as f64).collect();
    if r.length.is_none() {
        let basis = semi_infinite_basis(&r, &g.frequency_grid())?;
        manifest.t_sign = Some(telegrapher_matrix(&basis).sign);
        export::write_mode_samples_csv(&g.out.join("modes.csv"), &sample_modes(&basis, &xs), r.n)?;
    } else {
        let p = finite_problem(g, &r)?;
        manifest.closure_sign = Some(p.closure_sign);
        let table = finite_table(g, &p, 20)?;
        export::write_finite_modes_csv(&g.out.join("modes.csv"), &table, &p, &xs)?;
    }
    finish(g, manifest, &["modes.csv"])?;
    println!("wrote {}", g.out.join("modes.csv").display());
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_argument() {
        let p = parse_pulse("2:5.5:0.25:-1:left").unwrap();
        assert_eq!(p.line, 1);
        assert_eq!(p.direction, Direction::Left);
        assert_eq!((p.center, p.width, p.amplitude), (5.5, 0.25, -1.0));
        assert!(parse_pulse("0:1:1:1:left").is_err());
        assert!(parse_pulse("1:1:1:1:up").is_err());
        assert!(parse_pulse("1:1:1").is_err());
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(CliError::from(TdError::Cfl { dt: 1.0, limit: 0.5 }).exit_code(), EXIT_INPUT);
        assert_eq!(CliError::from(HamiltonianError::TooFewModes { k: 10, min: 50 }).exit_code(), EXIT_NUMERICAL);
        assert_eq!(CliError::from(NetlistError::Schema("x".into())).exit_code(), EXIT_INPUT);
        assert_eq!(CliError::from(FiniteError::ScanTooCoarse { omega: 1.0 }).exit_code(), EXIT_NUMERICAL);
    }

    #[test]
    fn global_flags_parse() {
        let cli = Cli::try_parse_from(["tlquant", "--trunc-K", "60", "quantize", "a.json", "--out", "x"]).unwrap();
        assert_eq!(cli.global.trunc_k, Some(60));
        assert_eq!(cli.global.out, PathBuf::from("x"));
        assert!(matches!(cli.command, Command::Quantize { .. }));
    }
}
