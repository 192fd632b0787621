//! Discrete spectrum of a [`SecularProblem`] and its normalized eigenfunctions.
//!
//! Roots are located as local minima of the smallest singular value of the
//! row-normalized condition matrix on a uniform scan, then refined by
//! golden-section search. Most roots of these problems are double (every
//! eigenfunction has a duality partner at the same frequency), so the
//! determinant need not change sign; the sign is still used as a parity check
//! against the measured multiplicity.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::secular::{column_functions, secular_determinant, SecularProblem};
use super::FiniteError;
use crate::linalg::{composite_gauss, fix_sign, orthogonal_complement};

/// Relative singular-value threshold for multiplicity and root acceptance.
pub const NULL_THRESHOLD: f64 = 1e-8;

/// A normalized eigenfunction. On line `j`:
/// `U_j = u_cos_j cos k_j x + u_sin_j sin k_j x + u_lin_j x`, likewise `V_j`.
/// The linear terms only occur at `ω = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteMode {
    pub omega: f64,
    /// Index of the eigenspace: 0 for `ω = 0`, then 1, 2, … by frequency.
    pub eigenspace: usize,
    pub k: Vec<f64>,
    pub u_cos: Vec<f64>,
    pub u_sin: Vec<f64>,
    pub u_lin: Vec<f64>,
    pub v_cos: Vec<f64>,
    pub v_sin: Vec<f64>,
    pub v_lin: Vec<f64>,
}

impl FiniteMode {
    fn from_coefficients(omega: f64, eigenspace: usize, k: &DVector<f64>, z: &DVector<f64>) -> Self {
        let n = k.len();
        let mut m = FiniteMode {
            omega,
            eigenspace,
            k: k.iter().copied().collect(),
            u_cos: vec![0.0; n],
            u_sin: vec![0.0; n],
            u_lin: vec![0.0; n],
            v_cos: vec![0.0; n],
            v_sin: vec![0.0; n],
            v_lin: vec![0.0; n],
        };
        for j in 0..n {
            m.u_cos[j] = z[j];
            m.v_cos[j] = z[2 * n + j];
            if k[j] == 0.0 {
                m.u_lin[j] = z[n + j];
                m.v_lin[j] = z[3 * n + j];
            } else {
                let f = (1.0 + k[j]) / k[j];
                m.u_sin[j] = z[n + j] * f;
                m.v_sin[j] = z[3 * n + j] * f;
            }
        }
        m
    }

    pub fn n_lines(&self) -> usize {
        self.k.len()
    }

    pub fn eval(&self, x: f64) -> (DVector<f64>, DVector<f64>) {
        let n = self.n_lines();
        let mut u = DVector::zeros(n);
        let mut v = DVector::zeros(n);
        for j in 0..n {
            let (s, c) = (self.k[j] * x).sin_cos();
            u[j] = self.u_cos[j] * c + self.u_sin[j] * s + self.u_lin[j] * x;
            v[j] = self.v_cos[j] * c + self.v_sin[j] * s + self.v_lin[j] * x;
        }
        (u, v)
    }

    pub fn derivative(&self, x: f64) -> (DVector<f64>, DVector<f64>) {
        let n = self.n_lines();
        let mut du = DVector::zeros(n);
        let mut dv = DVector::zeros(n);
        for j in 0..n {
            let k = self.k[j];
            let (s, c) = (k * x).sin_cos();
            du[j] = k * (-self.u_cos[j] * s + self.u_sin[j] * c) + self.u_lin[j];
            dv[j] = k * (-self.v_cos[j] * s + self.v_sin[j] * c) + self.v_lin[j];
        }
        (du, dv)
    }

    pub fn second_derivative(&self, x: f64) -> (DVector<f64>, DVector<f64>) {
        let (u, v) = self.eval(x);
        let n = self.n_lines();
        let mut ddu = DVector::zeros(n);
        let mut ddv = DVector::zeros(n);
        for j in 0..n {
            let k2 = self.k[j] * self.k[j];
            ddu[j] = -k2 * (u[j] - self.u_lin[j] * x);
            ddv[j] = -k2 * (v[j] - self.v_lin[j] * x);
        }
        (ddu, ddv)
    }

    fn scale(&mut self, f: f64) {
        for v in [&mut self.u_cos, &mut self.u_sin, &mut self.u_lin, &mut self.v_cos, &mut self.v_sin, &mut self.v_lin] {
            v.iter_mut().for_each(|a| *a *= f);
        }
    }

    fn combine(modes: &[FiniteMode], weights: &[f64]) -> FiniteMode {
        let mut out = modes[0].clone();
        out.scale(0.0);
        for (m, w) in modes.iter().zip(weights) {
            let fields = [
                (&mut out.u_cos, &m.u_cos),
                (&mut out.u_sin, &m.u_sin),
                (&mut out.u_lin, &m.u_lin),
                (&mut out.v_cos, &m.v_cos),
                (&mut out.v_sin, &m.v_sin),
                (&mut out.v_lin, &m.v_lin),
            ];
            for (dst, src) in fields {
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
        out
    }
}

/// `∫₀^d` of products of `(cos, sin, x)` terms at a common wavenumber `k`.
fn same_k_integrals(k: f64, d: f64) -> [[f64; 3]; 3] {
    if k == 0.0 {
        // (1, 0, x): the sin slot is unused at k = 0
        return [[d, 0.0, d * d / 2.0], [0.0, 0.0, 0.0], [d * d / 2.0, 0.0, d * d * d / 3.0]];
    }
    let s2 = (2.0 * k * d).sin();
    let skd = (k * d).sin();
    let cc = d / 2.0 + s2 / (4.0 * k);
    let ss = d / 2.0 - s2 / (4.0 * k);
    let cs = skd * skd / (2.0 * k);
    [[cc, cs, 0.0], [cs, ss, 0.0], [0.0, 0.0, 0.0]]
}

/// Inner product `∫ (U₁ᵀU₂ + V₁ᵀΔ⁻¹V₂) dx + α (n·U₁_d)(n·U₂_d)` of two modes
/// sharing one frequency, in closed form.
pub fn same_frequency_inner(a: &FiniteMode, b: &FiniteMode, problem: &SecularProblem) -> f64 {
    let mut acc = 0.0;
    for j in 0..a.n_lines() {
        let t = same_k_integrals(a.k[j], problem.d);
        let ua = [a.u_cos[j], a.u_sin[j], a.u_lin[j]];
        let ub = [b.u_cos[j], b.u_sin[j], b.u_lin[j]];
        let va = [a.v_cos[j], a.v_sin[j], a.v_lin[j]];
        let vb = [b.v_cos[j], b.v_sin[j], b.v_lin[j]];
        for p in 0..3 {
            for q in 0..3 {
                acc += t[p][q] * (ua[p] * ub[q] + va[p] * vb[q] / problem.delta[j]);
            }
        }
    }
    acc + boundary_term(a, b, problem)
}

fn boundary_term(a: &FiniteMode, b: &FiniteMode, problem: &SecularProblem) -> f64 {
    match (&problem.n_vector, problem.has_junction()) {
        (Some(n), true) => {
            let ua = n.dot(&a.eval(problem.d).0);
            let ub = n.dot(&b.eval(problem.d).0);
            problem.alpha_value() * ua * ub
        }
        _ => 0.0,
    }
}

/// The same inner product by composite Gauss quadrature; valid across
/// different frequencies.
pub fn quadrature_inner(a: &FiniteMode, b: &FiniteMode, problem: &SecularProblem) -> f64 {
    let kmax = a.k.iter().chain(&b.k).fold(0.0f64, |m, k| m.max(*k));
    let panels = 8.max((kmax * problem.d / std::f64::consts::PI).ceil() as usize * 2);
    let (xs, ws) = composite_gauss(16, panels, 0.0, problem.d);
    let mut acc = 0.0;
    for (x, w) in xs.iter().zip(&ws) {
        let (ua, va) = a.eval(*x);
        let (ub, vb) = b.eval(*x);
        let mut s = ua.dot(&ub);
        for j in 0..va.len() {
            s += va[j] * vb[j] / problem.delta[j];
        }
        acc += w * s;
    }
    acc + boundary_term(a, b, problem)
}

/// Largest absolute violation of the boundary conditions by one mode.
pub fn mode_boundary_residual(m: &FiniteMode, problem: &SecularProblem) -> f64 {
    let (u0, v0) = m.eval(0.0);
    let (du0, dv0) = m.derivative(0.0);
    let mut worst = (&v0 - &problem.y * &u0).amax();
    worst = worst.max((du0.component_mul(&problem.delta) - &problem.y * &dv0).amax());
    let (ud, vd) = m.eval(problem.d);
    let (dud, _) = m.derivative(problem.d);
    let flux = dud.component_mul(&problem.delta);
    if problem.has_junction() {
        let n = problem.n_vector.as_ref().expect("junction has a line vector");
        let perp = orthogonal_complement(n);
        worst = worst.max((perp.transpose() * &flux).amax());
        worst = worst.max(vd.amax());
        let closure = problem.closure_sign * n.dot(&flux) - m.omega * m.omega * problem.alpha_value() * n.dot(&ud);
        worst = worst.max(closure.abs());
    } else {
        worst = worst.max(flux.amax()).max(vd.amax());
    }
    worst
}

/// Discrete spectrum with normalized eigenfunctions.
#[derive(Debug, Clone, Serialize)]
pub struct SpectrumTable {
    /// Distinct positive eigenfrequencies, ascending.
    pub omegas: Vec<f64>,
    pub multiplicities: Vec<usize>,
    /// Number of independent `ω = 0` modes.
    pub zero_modes: usize,
    /// All eigenfunctions: zero modes first, then by frequency.
    pub modes: Vec<FiniteMode>,
    /// `u = n·U(d)` per mode, when a junction line is defined.
    pub u: Option<Vec<f64>>,
    pub alpha: f64,
    pub closure_sign: f64,
    pub has_junction: bool,
    pub omega_max: f64,
    pub scan_resolution: f64,
    /// Expected eigenfunction count below `omega_max` from the asymptotic
    /// density `(2 ω d / π) Σ_j δ_j^{-1/2}`.
    pub density_expected: f64,
}

impl SpectrumTable {
    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Positive frequencies repeated by multiplicity.
    pub fn omegas_with_multiplicity(&self) -> Vec<f64> {
        self.modes.iter().filter(|m| m.omega > 0.0).map(|m| m.omega).collect()
    }

    pub fn max_boundary_residual(&self, problem: &SecularProblem) -> f64 {
        self.modes.iter().map(|m| mode_boundary_residual(m, problem)).fold(0.0, f64::max)
    }

    /// Quadrature Gram matrix of the first `count` modes.
    pub fn gram(&self, problem: &SecularProblem, count: usize) -> DMatrix<f64> {
        let c = count.min(self.modes.len());
        DMatrix::from_fn(c, c, |i, j| quadrature_inner(&self.modes[i], &self.modes[j], problem))
    }

    /// Keep the first `count` eigenfunctions.
    pub fn truncate(&mut self, count: usize) {
        self.modes.truncate(count);
        if let Some(u) = &mut self.u {
            u.truncate(count);
        }
        let last = self.modes.iter().filter(|m| m.omega > 0.0).map(|m| m.eigenspace).max();
        let keep = last.unwrap_or(0);
        self.omegas.truncate(keep);
        self.multiplicities.truncate(keep);
        if let Some(l) = last {
            self.multiplicities[l - 1] = self.modes.iter().filter(|m| m.omega > 0.0 && m.eigenspace == l).count();
        }
        self.zero_modes = self.zero_modes.min(count);
    }
}

/// `u_nε = n·U_nε(d)`, when the problem selects a line.
pub fn coupling_vector(table: &SpectrumTable) -> Option<Vec<f64>> {
    table.u.clone()
}

/// Relative distance below which two root estimates are one root.
const MERGE_TOLERANCE: f64 = 1e-9;

/// Bisection on the determinant sign down to adjacent floating-point values.
fn bisect_sign(problem: &SecularProblem, mut lo: f64, mut hi: f64, lo_sign: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let s = secular_determinant(problem, mid).sign;
        if s == 0.0 {
            return mid;
        }
        if s == lo_sign {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if problem.sigma_min(lo) < problem.sigma_min(hi) {
        lo
    } else {
        hi
    }
}

fn golden_min<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, rel: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..300 {
        if (b - a).abs() <= rel * b.abs().max(f64::MIN_POSITIVE) {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        c
    } else {
        d
    }
}

/// Orthonormal eigenfunctions spanning the null space at `omega`.
fn eigenspace_modes(
    problem: &SecularProblem,
    omega: f64,
    index: usize,
) -> Vec<FiniteMode> {
    let sv = problem.singular_values(omega);
    let dim = sv.iter().filter(|s| **s <= NULL_THRESHOLD * sv[0]).count();
    // the null vectors come from the unnormalized rows, which minimizes the
    // absolute boundary residual left by the finite precision of ω
    let svd = problem.condition_matrix(omega).svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|a, b| svd.singular_values[*a].total_cmp(&svd.singular_values[*b]));
    let k = problem.wavenumbers(omega);
    let mut raw: Vec<FiniteMode> = Vec::new();
    for &i in order.iter().take(dim) {
        {
            let mut z: DVector<f64> = v_t.row(i).transpose();
            fix_sign(&mut z);
            raw.push(FiniteMode::from_coefficients(omega, index, &k, &z));
        }
    }
    if raw.is_empty() {
        return raw;
    }
    // Löwdin-free Gram–Schmidt in the problem's inner product
    let mut out: Vec<FiniteMode> = Vec::new();
    for m in raw {
        let mut v = m;
        for _ in 0..2 {
            for o in &out {
                let c = same_frequency_inner(o, &v, problem);
                v = FiniteMode::combine(&[v.clone(), o.clone()], &[1.0, -c]);
            }
        }
        let norm = same_frequency_inner(&v, &v, problem).sqrt();
        if norm > 0.0 {
            v.scale(1.0 / norm);
            out.push(v);
        }
    }
    // concentrate the junction coupling in the first member of the eigenspace
    if let (Some(n), true) = (&problem.n_vector, out.len() > 1) {
        let u = DVector::from_iterator(out.len(), out.iter().map(|m| n.dot(&m.eval(problem.d).0)));
        let norm = u.norm();
        if norm > 1e-14 {
            let q = &u / norm;
            let comp = orthogonal_complement(&q);
            let mut rotated = vec![FiniteMode::combine(&out, q.as_slice())];
            for c in comp.column_iter() {
                let w: Vec<f64> = c.iter().copied().collect();
                rotated.push(FiniteMode::combine(&out, &w));
            }
            out = rotated;
        }
    }
    if let Some(n) = &problem.n_vector {
        for m in out.iter_mut() {
            if n.dot(&m.eval(problem.d).0) < 0.0 {
                m.scale(-1.0);
            }
        }
    }
    out
}

/// All eigenfrequencies in `(0, omega_max]`, plus the `ω = 0` modes.
pub fn eigenfrequencies(
    problem: &SecularProblem,
    omega_max: f64,
    scan_resolution: Option<f64>,
) -> Result<SpectrumTable, FiniteError> {
    if !(omega_max.is_finite() && omega_max > 0.0) {
        return Err(FiniteError::BadParameter(format!("omega_max must be positive, got {omega_max}")));
    }
    let step = scan_resolution.unwrap_or_else(|| default_scan_step(problem));
    if !(step.is_finite() && step > 0.0) {
        return Err(FiniteError::BadParameter(format!("scan resolution must be positive, got {step}")));
    }

    let mut modes = eigenspace_modes(problem, 0.0, 0);
    let zero_modes = modes.len();

    let samples = (omega_max / step).ceil() as usize + 2;
    let grid: Vec<f64> = (0..=samples).map(|i| i as f64 * step).collect();
    let sig: Vec<f64> = grid.iter().map(|&w| problem.sigma_min(w)).collect();
    let signs: Vec<f64> = grid.iter().map(|&w| secular_determinant(problem, w).sign).collect();

    // (root, σ_min at root, sign change across the root's cell)
    let mut candidates: Vec<f64> = Vec::new();
    let mut sign_changes = 0usize;
    // last nonzero sign and where it was seen; a grid point can hit a root exactly
    let mut last: Option<(usize, f64)> = None;
    for i in 1..grid.len() {
        if signs[i] == 0.0 {
            candidates.push(grid[i]);
            continue;
        }
        if let Some((j, sj)) = last {
            if sj != signs[i] {
                sign_changes += 1;
                if j + 1 == i {
                    candidates.push(bisect_sign(problem, grid[j], grid[i], sj));
                }
            }
        }
        last = Some((i, signs[i]));
    }
    for i in 1..grid.len() - 1 {
        if sig[i] <= sig[i - 1] && sig[i] < sig[i + 1] {
            let (lo, hi) = (grid[i - 1], grid[i + 1]);
            let gm = golden_min(|w| problem.sigma_min(w), lo.max(step * 1e-3), hi, 4.0 * f64::EPSILON);
            candidates.push(gm);
        }
    }
    candidates.sort_by(|a, b| a.total_cmp(b));

    let mut roots: Vec<(f64, usize)> = Vec::new();
    for w in candidates {
        let sv = problem.singular_values(w);
        let smax = sv[0];
        let smin = *sv.last().unwrap();
        if smin > NULL_THRESHOLD * smax {
            continue;
        }
        let mult = sv.iter().filter(|s| **s <= NULL_THRESHOLD * smax).count();
        match roots.last_mut() {
            Some(last) if (w - last.0).abs() <= MERGE_TOLERANCE * w => {
                // same root from both searches: keep the sharper estimate
                if smin < problem.sigma_min(last.0) {
                    *last = (w, mult);
                }
            }
            _ => roots.push((w, mult)),
        }
    }
    let odd = roots.iter().filter(|r| r.1 % 2 == 1).count();
    if odd != sign_changes {
        let at = roots.iter().find(|r| r.1 % 2 == 1).map(|r| r.0).unwrap_or(0.0);
        return Err(FiniteError::ScanTooCoarse { omega: at });
    }

    let mut omegas = Vec::new();
    let mut multiplicities = Vec::new();
    for (root, mult) in roots.into_iter().filter(|r| r.0 <= omega_max) {
        let index = omegas.len() + 1;
        let ms = eigenspace_modes(problem, root, index);
        if ms.len() != mult {
            return Err(FiniteError::ScanTooCoarse { omega: root });
        }
        omegas.push(root);
        multiplicities.push(mult);
        modes.extend(ms);
    }

    let u = problem.n_vector.as_ref().map(|n| modes.iter().map(|m| n.dot(&m.eval(problem.d).0)).collect());
    let density_expected =
        2.0 * omega_max * problem.d / std::f64::consts::PI * problem.delta.iter().map(|d| 1.0 / d.sqrt()).sum::<f64>();
    Ok(SpectrumTable {
        omegas,
        multiplicities,
        zero_modes,
        modes,
        u,
        alpha: problem.alpha_value(),
        closure_sign: problem.closure_sign,
        has_junction: problem.has_junction(),
        omega_max,
        scan_resolution: step,
        density_expected,
    })
}

/// Halvings of the scan step tried by [`eigenfrequencies_count`] before giving up.
pub const MAX_REFINEMENTS: usize = 6;

/// `min_j π√δ_j / d / 20`.
pub fn default_scan_step(problem: &SecularProblem) -> f64 {
    problem
        .delta
        .iter()
        .map(|d| std::f64::consts::PI * d.sqrt() / problem.d)
        .fold(f64::INFINITY, f64::min)
        / 20.0
}

/// The first `count` eigenfunctions (zero modes included). The scan step is
/// halved whenever two roots share a scan cell.
pub fn eigenfrequencies_count(
    problem: &SecularProblem,
    count: usize,
    scan_resolution: Option<f64>,
) -> Result<SpectrumTable, FiniteError> {
    let density = 2.0 * problem.d / std::f64::consts::PI * problem.delta.iter().map(|d| 1.0 / d.sqrt()).sum::<f64>();
    let mut omega_max = (count as f64 + 2.0 * problem.n_lines() as f64) / density * 1.02;
    let mut step = scan_resolution;
    let mut refinements = 0;
    loop {
        match eigenfrequencies(problem, omega_max, step) {
            Ok(mut table) => {
                if table.n_modes() >= count {
                    table.truncate(count);
                    return Ok(table);
                }
                omega_max *= 1.1;
            }
            Err(FiniteError::ScanTooCoarse { omega }) => {
                refinements += 1;
                if refinements > MAX_REFINEMENTS {
                    return Err(FiniteError::ScanTooCoarse { omega });
                }
                let current = step.unwrap_or_else(|| default_scan_step(problem));
                step = Some(current / 2.0);
            }
            Err(e) => return Err(e),
        }
    }
}

/// Series `Σ t_n` with a `c/n²` tail fitted on the last decade of terms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailFit {
    pub partial: f64,
    pub c: f64,
    pub tail: f64,
    pub estimate: f64,
}

pub fn tail_corrected_sum(terms: &[f64]) -> TailFit {
    let k = terms.len();
    let partial: f64 = terms.iter().sum();
    if k == 0 {
        return TailFit { partial, c: 0.0, tail: 0.0, estimate: partial };
    }
    let start = (k / 10).max(1);
    let (mut num, mut den) = (0.0, 0.0);
    for (i, t) in terms.iter().enumerate().skip(start - 1) {
        let n = (i + 1) as f64;
        num += t / (n * n);
        den += 1.0 / n.powi(4);
    }
    let c = if den > 0.0 { num / den } else { 0.0 };
    let kf = k as f64;
    // Euler–Maclaurin for Σ_{n>K} 1/n²
    let tail = c * (1.0 / kf - 1.0 / (2.0 * kf * kf) + 1.0 / (6.0 * kf * kf * kf));
    TailFit { partial, c, tail, estimate: partial + tail }
}

/// Slope of `log |u|` against `log n` over the last decade, with `|u|` taken
/// as the rms over consecutive groups of `group` modes.
pub fn decay_exponent(u: &[f64], group: usize) -> f64 {
    let g = group.max(1);
    let bins = u.len() / g;
    let mut pts = Vec::new();
    for b in 0..bins {
        let chunk = &u[b * g..(b + 1) * g];
        let rms = (chunk.iter().map(|x| x * x).sum::<f64>() / g as f64).sqrt();
        let center = (b * g) as f64 + (g as f64 + 1.0) / 2.0;
        if rms > 0.0 {
            pts.push((center.ln(), rms.ln()));
        }
    }
    let n_last = u.len() as f64;
    let pts: Vec<(f64, f64)> = pts.into_iter().filter(|(x, _)| x.exp() >= n_last / 10.0).collect();
    let m = pts.len() as f64;
    if m < 2.0 {
        return f64::NAN;
    }
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Values at `x = d` of the column functions, exposed for the ladder oracle
/// and diagnostics.
pub fn far_end_columns(k: f64, d: f64) -> (f64, f64, f64, f64) {
    column_functions(k, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn gyrator() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
    }

    #[test]
    fn open_line_roots_and_zero_mode() {
        let delta = 2.5;
        let d = 1.7;
        let p = SecularProblem::open(DVector::from_element(1, delta), DMatrix::zeros(1, 1), d).unwrap();
        let t = eigenfrequencies(&p, 6.0 * PI * delta.sqrt() / d, None).unwrap();
        assert_eq!(t.zero_modes, 1);
        assert_eq!(t.omegas.len(), 6);
        for (i, w) in t.omegas.iter().enumerate() {
            let exact = (i + 1) as f64 * PI * delta.sqrt() / d;
            assert!(((w - exact) / exact).abs() < 1e-12, "{w} vs {exact}");
            assert_eq!(t.multiplicities[i], 2);
        }
        assert!(t.max_boundary_residual(&p) < 1e-10);
        let g = t.gram(&p, t.n_modes());
        assert!((g - DMatrix::identity(t.n_modes(), t.n_modes())).amax() < 1e-10);
    }

    #[test]
    fn gyrator_roots_quarter_wave() {
        let p = SecularProblem::open(DVector::from_element(2, 1.0), gyrator(), 1.0).unwrap();
        let t = eigenfrequencies(&p, 5.5 * PI / 4.0, None).unwrap();
        assert_eq!(t.zero_modes, 0);
        let expected = [PI / 4.0, 3.0 * PI / 4.0, 5.0 * PI / 4.0];
        assert_eq!(t.omegas.len(), 3);
        for (w, e) in t.omegas.iter().zip(expected) {
            assert!(((w - e) / e).abs() < 1e-12);
        }
        assert!(t.multiplicities.iter().all(|m| *m == 2));
    }

    #[test]
    fn tail_fit_on_exact_series() {
        let terms: Vec<f64> = (1..=200).map(|n| 3.0 / (n as f64 * n as f64)).collect();
        let f = tail_corrected_sum(&terms);
        let exact = 3.0 * PI * PI / 6.0;
        assert!((f.c - 3.0).abs() < 1e-12);
        assert!(((f.estimate - exact) / exact).abs() < 1e-8);
    }

    #[test]
    fn decay_of_pure_power() {
        let u: Vec<f64> = (1..=600).map(|n| 2.0 / n as f64).collect();
        assert!((decay_exponent(&u, 1) + 1.0).abs() < 1e-12);
        assert!((decay_exponent(&u, 6) + 1.0).abs() < 0.01);
    }
}
