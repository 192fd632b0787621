//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

mod common;

use std::f64::consts::PI;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use tlquant::finite::table::decay_exponent;
use tlquant::finite::{
    eigenfrequencies_count, resolve_closure, selfadjointness_residual, InnerProduct, SecularProblem, SpectrumTable,
};
use tlquant::hamiltonian::{assemble_hamiltonian, lamb_shift, mode_space_reduction, trs_check, trs_sigma};
use tlquant::netlist::{parse_netlist, rescale, CircuitSpec, LineLength, RescaledSpec};
use tlquant::nrcore::{admittance_to_scattering, scattering_to_admittance, NrElement, NrTolerances};
use tlquant::spectral::{basis_from_matrices, telegrapher_apply, telegrapher_matrix, Branch, ModeBasis};
use tlquant::tdsim::{dalembert_reference, init_state, Direction, FarEnd, InitialData, Pulse, SimConfig};
use tlquant::finite::table::tail_corrected_sum;

use common::ladder::{distinct, ladder_frequencies};
use common::{circulator_y, netlist_path, unit_gyrator};

type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

/// The desk instance: three unit lines of length 1 on a cyclic circulator,
/// junction with `C_c = C_J = 1` on line 1, so `α_s = 1/2`.
struct Desk {
    spec: RescaledSpec,
    problem: SecularProblem,
    table: SpectrumTable,
}

fn desk() -> Desk {
    let text = std::fs::read_to_string(netlist_path("circulator_junction.json")).expect("desk netlist");
    let spec = rescale(&parse_netlist(&text).expect("desk netlist parses"));
    let mut problem = SecularProblem::from_spec(&spec, None).expect("finite problem");
    resolve_closure(&mut problem, 100, 7).expect("closure");
    let table = eigenfrequencies_count(&problem, 500, None).expect("500 modes");
    Desk { spec, problem, table }
}

fn c1_reciprocal_spectrum() -> Outcome {
    let (delta, d) = (2.0, 1.3);
    let p = SecularProblem::open(DVector::from_element(1, delta), DMatrix::zeros(1, 1), d).unwrap();
    let table = eigenfrequencies_count(&p, 44, None).unwrap();
    let mut worst: f64 = 0.0;
    for n in 1..=20 {
        let exact = n as f64 * PI * delta.sqrt() / d;
        worst = worst.max((table.omegas[n - 1] - exact).abs() / exact);
    }
    outcome(worst < 1e-10, format!("max rel. error {worst:.2e} for n ≤ 20 (< 1e-10)"))
}

fn c2_gyrator_spectrum() -> Outcome {
    let d = 1.7;
    let p = SecularProblem::open(DVector::from_element(2, 1.0), unit_gyrator(), d).unwrap();
    let table = eigenfrequencies_count(&p, 30, None).unwrap();
    let mut worst: f64 = 0.0;
    let mut mult_ok = true;
    for m in 0..=10 {
        let exact = (2 * m + 1) as f64 * PI / (4.0 * d);
        worst = worst.max((table.omegas[m] - exact).abs() / exact);
        mult_ok &= table.multiplicities[m] == 2;
    }
    let ladder = distinct(&ladder_frequencies(&[1.0, 1.0], &unit_gyrator(), d, 400), 1e-3, 1e-7);
    let ladder_err = ladder
        .iter()
        .take(5)
        .zip(&table.omegas)
        .map(|(l, w)| (l.0 - w).abs() / w)
        .fold(0.0, f64::max);
    outcome(
        worst < 1e-9 && mult_ok && ladder_err < 1e-4,
        format!("roots rel. error {worst:.2e} (< 1e-9), multiplicity 2: {mult_ok}, ladder M=400 rel. error {ladder_err:.2e} (< 1e-4)"),
    )
}

fn semi_infinite(delta: &[f64], y: &DMatrix<f64>) -> ModeBasis {
    let grid: Vec<f64> = (1..=8).map(|i| 0.75 * i as f64).collect();
    basis_from_matrices(&DVector::from_vec(delta.to_vec()), y, &grid).unwrap()
}

fn c3_boundary_residuals(desk: &Desk) -> Outcome {
    let semi = [
        semi_infinite(&[1.0, 1.0], &unit_gyrator()),
        semi_infinite(&[0.5, 0.5, 4.0], &circulator_y()),
        semi_infinite(&[1.0, 3.0], &DMatrix::from_row_slice(2, 2, &[0.0, 0.4, -0.4, 0.0])),
    ];
    let semi_worst = semi.iter().map(|b| b.max_boundary_residual()).fold(0.0, f64::max);
    let gyr = SecularProblem::open(DVector::from_element(2, 1.0), unit_gyrator(), 1.0).unwrap();
    let gyr_table = eigenfrequencies_count(&gyr, 60, None).unwrap();
    let finite_worst = desk.table.max_boundary_residual(&desk.problem).max(gyr_table.max_boundary_residual(&gyr));
    let worst = semi_worst.max(finite_worst);
    outcome(worst < 1e-10, format!("semi-infinite {semi_worst:.2e}, finite {finite_worst:.2e} (< 1e-10)"))
}

fn c4_orthonormality(desk: &Desk) -> Outcome {
    let algebraic = [
        semi_infinite(&[1.0, 1.0], &unit_gyrator()),
        semi_infinite(&[0.5, 0.5, 4.0], &circulator_y()),
    ]
    .iter()
    .map(|b| b.algebraic_orthonormality())
    .fold(0.0, f64::max);
    let gram = desk.table.gram(&desk.problem, 20);
    let gram_dev = (gram - DMatrix::<f64>::identity(20, 20)).amax();
    outcome(
        algebraic < 1e-10 && gram_dev < 1e-8,
        format!("algebraic {algebraic:.2e} (< 1e-10), finite Gram of 20 modes {gram_dev:.2e} (< 1e-8)"),
    )
}

fn c5_telegrapher_matrix() -> Outcome {
    let mut dev: f64 = 0.0;
    let mut sq: f64 = 0.0;
    let mut t2: f64 = 0.0;
    for basis in [semi_infinite(&[1.0, 1.0], &unit_gyrator()), semi_infinite(&[0.5, 0.5, 4.0], &circulator_y())] {
        let tm = telegrapher_matrix(&basis);
        dev = dev.max(tm.deviation);
        sq = sq.max(tm.square_deviation);
        for &omega in &basis.frequencies {
            for b in [Branch::U, Branch::V] {
                for l in 0..basis.n_lines() {
                    let w = basis.mode(omega, b, l);
                    let tw = telegrapher_apply(&telegrapher_apply(&w, &basis.delta), &basis.delta);
                    for x in [0.0, 0.37, 1.9, 5.2] {
                        let (u, v) = w.eval(x);
                        let (tu, tv) = tw.eval(x);
                        for (a, b) in tu.iter().chain(&tv).zip(u.iter().chain(&v)) {
                            t2 = t2.max((a - b * omega * omega).norm() / (omega * omega));
                        }
                    }
                }
            }
        }
    }
    outcome(
        dev < 1e-10 && sq < 1e-10 && t2 < 1e-10,
        format!("t vs ±σ_y⊗1 {dev:.2e}, t²−1 {sq:.2e}, 𝒯²W−ω²W {t2:.2e} (all < 1e-10)"),
    )
}

fn c6_sum_rule(desk: &Desk) -> Outcome {
    let alpha = desk.spec.junction.as_ref().unwrap().alpha_s;
    let u = desk.table.u.as_ref().unwrap();
    let terms: Vec<f64> = u.iter().map(|x| x * x).collect();
    let mut partial = 0.0;
    let mut bounded = true;
    let mut monotone = true;
    for t in &terms {
        monotone &= *t >= 0.0;
        partial += t;
        bounded &= partial <= (1.0 + 1e-9) / alpha;
    }
    let fit = tail_corrected_sum(&terms);
    let rel = (fit.estimate * alpha - 1.0).abs();
    outcome(
        rel < 1e-2 && bounded && monotone,
        format!(
            "K = {}: partial {:.6}, tail-corrected {:.6} vs 1/α_s = {:.6}, rel. error {rel:.2e} (< 1e-2), monotone {monotone}, bounded {bounded}",
            terms.len(),
            partial,
            fit.estimate,
            1.0 / alpha
        ),
    )
}

fn c7_lamb_shift(desk: &Desk) -> Outcome {
    let junction = desk.spec.junction.as_ref().unwrap();
    let model = assemble_hamiltonian(&desk.table, junction, 500, desk.spec.hbar).unwrap();
    let ls = lamb_shift(&model).unwrap();
    let slope = decay_exponent(&model.u_u, 2);
    outcome(
        ls.relative_error < 5e-3 && (slope + 1.0).abs() < 0.05,
        format!(
            "χ = {:.6} vs ħ/(2α_s) = {:.6}, rel. error {:.2e} (< 5e-3); u decay exponent {slope:.4} (−1 ± 0.05)",
            ls.extrapolated, ls.target, ls.relative_error
        ),
    )
}

fn gyrator_spec(length: LineLength) -> RescaledSpec {
    let mut spec = CircuitSpec::uniform(2, length, 1.0, 1.0);
    spec.nr_element = Some(NrElement::from_admittance(unit_gyrator(), 1.0, &NrTolerances::default()).unwrap());
    rescale(&spec)
}

fn c8_time_domain() -> Outcome {
    let length = 8.0;
    let spec = gyrator_spec(LineLength::Finite(length));
    let pulse = Pulse { line: 0, center: 4.0, width: 0.5, amplitude: 1.0, direction: Direction::Left };
    let t_final = 6.0;
    let mut errors = Vec::new();
    let mut reflected: f64 = 0.0;
    for cells in [128, 256, 512] {
        let cfg = SimConfig { cells, far_end: FarEnd::Absorbing, ..Default::default() };
        let mut st = init_state(&spec, &cfg, &InitialData::Pulses(vec![pulse])).unwrap();
        let e0 = st.energy();
        st.run((t_final / st.dt).round() as usize).unwrap();
        let mut err: f64 = 0.0;
        for i in 0..=cells {
            let x = st.node_x(i);
            let [(p1, _), (p2, _)] = dalembert_reference(&[pulse], &spec.y.clone().unwrap(), &[1.0, 1.0], x, st.t).unwrap();
            err = err.max((st.phi[0][i] - p1).abs()).max((st.phi[1][i] - p2).abs());
        }
        errors.push(err);
        reflected = reflected.max(st.line_energy(0) / e0);
    }
    let order = (errors[0] / errors[2]).log2() / 2.0;

    // lossless configuration, 10⁴ steps
    let spec = gyrator_spec(LineLength::Finite(4.0));
    let cfg = SimConfig { cells: 256, ..Default::default() };
    let p = Pulse { line: 1, center: 2.0, width: 0.25, amplitude: 1.0, direction: Direction::Right };
    let mut st = init_state(&spec, &cfg, &InitialData::Pulses(vec![p])).unwrap();
    let e0 = st.energy();
    st.run(10_000).unwrap();
    let drift = (st.energy() - e0).abs() / e0;

    outcome(
        (order - 2.0).abs() < 0.2 && reflected < 1e-4 && drift < 1e-6,
        format!(
            "L∞ errors {:.2e}/{:.2e}/{:.2e} at M = 128/256/512, order {order:.3} (2 ± 0.2); back-reflected energy {reflected:.2e} (< 1e-4); drift over 10⁴ steps {drift:.2e} (< 1e-6)",
            errors[0], errors[1], errors[2]
        ),
    )
}

fn trs_for(delta: &[f64], y: &DMatrix<f64>) -> tlquant::hamiltonian::TrsReport {
    let basis = semi_infinite(delta, y);
    let tm = telegrapher_matrix(&basis);
    let model = mode_space_reduction(&tm.t, &basis.frequencies).unwrap();
    let sigma = trs_sigma(&basis, &basis.frequencies);
    trs_check(&model, &sigma)
}

fn c9_trs() -> Outcome {
    let reciprocal = trs_for(&[1.0, 2.5], &DMatrix::zeros(2, 2));
    let gyrator = trs_for(&[1.0, 1.0], &unit_gyrator());
    let pass = reciprocal.off_pattern < 1e-12
        && reciprocal.anticommutator < 1e-12
        && !reciprocal.breaks_trs
        && gyrator.off_pattern > 1e-6
        && gyrator.breaks_trs;
    outcome(
        pass,
        format!(
            "reciprocal: off σ^z pattern {:.2e}, anticommutator {:.2e} (< 1e-12); gyrator: off-pattern {:.3} (> 1e-6)",
            reciprocal.off_pattern, reciprocal.anticommutator, gyrator.off_pattern
        ),
    )
}

fn c10_self_adjointness(desk: &Desk) -> Outcome {
    let full = selfadjointness_residual(&desk.problem, 100, 11, InnerProduct::Full);
    let dropped = selfadjointness_residual(&desk.problem, 100, 11, InnerProduct::DropBoundary);
    outcome(
        full < 1e-9 && dropped > 1e-3,
        format!("residual {full:.2e} (< 1e-9) on 100 pairs; without the w-term {dropped:.2e} (> 1e-3)"),
    )
}

fn c11_nr_algebra() -> Outcome {
    let tol = NrTolerances::default();
    let s = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
    let r = 50.0;
    let id = DMatrix::<f64>::identity(3, 3);
    let independent = (&id - &s) * (&id + &s).try_inverse().unwrap() / r;
    let y = scattering_to_admittance(&s, r, &tol).unwrap();
    let entry = (&y - independent).amax();
    let back = admittance_to_scattering(&y, r).unwrap();
    let round = (&back - &s).amax();
    let y2 = scattering_to_admittance(&back, r, &tol).unwrap();
    let round = round.max((&y2 - &y).amax());
    // eigenvalue −1: no admittance, reduced description instead
    let degenerate = -&s;
    let el = NrElement::from_scattering(degenerate, r, &tol).unwrap();
    let p = &el.projector_p1;
    let idem = (p * p - p).amax();
    let routed = el.y_bar.is_none() && p.trace().round() as usize == 1;
    outcome(
        entry < 1e-12 && round < 1e-10 && idem < 1e-12 && routed,
        format!("S→Y entrywise {entry:.2e} (< 1e-12), round trip {round:.2e} (< 1e-10), degenerate S reduced: {routed}, P₁²−P₁ {idem:.2e} (< 1e-12)"),
    )
}

fn main() {
    let start = Instant::now();
    let desk = desk();
    let criteria: Vec<Criterion> = vec![
        ("reciprocal spectrum exactness", Box::new(c1_reciprocal_spectrum)),
        ("gyrator finite-line spectrum", Box::new(c2_gyrator_spectrum)),
        ("boundary-condition residuals", Box::new(|| c3_boundary_residuals(&desk))),
        ("orthonormality", Box::new(|| c4_orthonormality(&desk))),
        ("telegrapher matrix", Box::new(c5_telegrapher_matrix)),
        ("sum rule", Box::new(|| c6_sum_rule(&desk))),
        ("Lamb shift", Box::new(|| c7_lamb_shift(&desk))),
        ("time domain vs d'Alembert", Box::new(c8_time_domain)),
        ("time-reversal dichotomy", Box::new(c9_trs)),
        ("self-adjointness", Box::new(|| c10_self_adjointness(&desk))),
        ("nonreciprocal algebra", Box::new(c11_nr_algebra)),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} {:>2} {:<30} {} [{:.1} s]",
            if o.pass { "PASS" } else { "FAIL" },
            i + 1,
            name,
            o.detail,
            t.elapsed().as_secs_f64()
        );
    }
    println!("{} of {} criteria passed in {:.1} s", criteria.len() - failed, criteria.len(), start.elapsed().as_secs_f64());
    if failed > 0 {
        std::process::exit(1);
    }
}
