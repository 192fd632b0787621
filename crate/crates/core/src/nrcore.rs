//! Algebra of ideal (lossless, frequency-independent) nonreciprocal elements.
//!
//! An element is given by a real orthogonal scattering matrix `S` and a
//! reference resistance `R`, with constitutive law
//! `(1 − S) Φ̇₀ = R (1 + S) Q̇₀` at its ports. When `−1` is not in the
//! spectrum of `S` the law collapses to an admittance `Q̇₀ = Ȳ Φ̇₀`; when `+1`
//! is not in the spectrum, to an impedance `Z̄ Q̇₀ = Φ̇₀`. Both are real and
//! skew-symmetric. When `−1` *is* an eigenvalue the port fluxes obey a
//! constraint and only a reduced admittance survives on the complement.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{fix_sign, frobenius, is_skew, null_space, symmetric_eigen_sorted};

#[derive(Debug, Error, PartialEq)]
pub enum NrError {
    #[error("scattering matrix is not unitary: ‖SᵀS − 1‖ = {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    #[error("−1 is an eigenvalue of S (σ_min(1+S) = {sigma_min:.3e}); use the degenerate reduction")]
    DegenerateMinusOne { sigma_min: f64 },
    #[error("+1 is an eigenvalue of S (σ_min(1−S) = {sigma_min:.3e}); no impedance form")]
    DegeneratePlusOne { sigma_min: f64 },
    #[error("−1 is not an eigenvalue of S; use the plain admittance conversion")]
    NotDegenerate,
    #[error("matrix is not skew-symmetric: ‖M + Mᵀ‖/‖M‖ = {ratio:.3e}")]
    NotSkew { ratio: f64 },
    #[error("matrix must be square, got {rows}×{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("reference resistance must be positive, got {0}")]
    BadResistance(f64),
    #[error("matrix (1 + R·Ȳ) is singular")]
    Singular,
}

/// Tolerances for the unitary/skew checks and the eigenvalue ±1 detection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NrTolerances {
    pub unitary: f64,
    pub skew: f64,
    /// Relative threshold on the smallest singular value of `1 ± S`.
    pub eigen_detect: f64,
}

impl Default for NrTolerances {
    fn default() -> Self {
        Self { unitary: 1e-10, skew: 1e-10, eigen_detect: 1e-8 }
    }
}

/// The presentation in which an element was supplied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Presentation {
    S,
    Y,
    Z,
}

/// An ideal nonreciprocal element with all presentations that exist for it.
#[derive(Debug, Clone, PartialEq)]
pub struct NrElement {
    pub presentation: Presentation,
    pub r: f64,
    pub s: Option<DMatrix<f64>>,
    pub y_bar: Option<DMatrix<f64>>,
    pub z_bar: Option<DMatrix<f64>>,
    /// Projector on the −1 eigenspace of `S` (zero when that space is trivial).
    pub projector_p1: DMatrix<f64>,
    /// Admittance on the range of `Q₁ = 1 − P₁`, expressed in an orthonormal
    /// basis of that range (`reduced_basis` columns).
    pub reduced_y: DMatrix<f64>,
    pub reduced_basis: DMatrix<f64>,
}

impl NrElement {
    pub fn ports(&self) -> usize {
        self.projector_p1.nrows()
    }

    /// Build from a scattering matrix, deriving every presentation that exists.
    pub fn from_scattering(s: DMatrix<f64>, r: f64, tol: &NrTolerances) -> Result<Self, NrError> {
        check_square(&s)?;
        check_resistance(r)?;
        check_unitary(&s, tol)?;
        let n = s.nrows();
        let (y_bar, projector_p1, reduced_y, reduced_basis) = match scattering_to_admittance(&s, r, tol) {
            Ok(y) => (Some(y.clone()), DMatrix::zeros(n, n), y, DMatrix::identity(n, n)),
            Err(NrError::DegenerateMinusOne { .. }) => {
                let red = degenerate_reduction(&s, r, tol)?;
                (None, red.projector_p1, red.reduced_y, red.reduced_basis)
            }
            Err(e) => return Err(e),
        };
        let z_bar = match scattering_to_impedance(&s, r, tol) {
            Ok(z) => Some(z),
            Err(NrError::DegeneratePlusOne { .. }) => None,
            Err(e) => return Err(e),
        };
        Ok(Self { presentation: Presentation::S, r, s: Some(s), y_bar, z_bar, projector_p1, reduced_y, reduced_basis })
    }

    /// Build from a physical admittance `Ȳ`.
    pub fn from_admittance(y: DMatrix<f64>, r: f64, tol: &NrTolerances) -> Result<Self, NrError> {
        check_square(&y)?;
        check_resistance(r)?;
        check_skew(&y, tol.skew)?;
        let s = admittance_to_scattering(&y, r)?;
        let mut el = Self::from_scattering(s, r, tol)?;
        el.presentation = Presentation::Y;
        el.y_bar = Some(y);
        Ok(el)
    }

    /// Build from a physical impedance `Z̄`.
    pub fn from_impedance(z: DMatrix<f64>, r: f64, tol: &NrTolerances) -> Result<Self, NrError> {
        check_square(&z)?;
        check_resistance(r)?;
        check_skew(&z, tol.skew)?;
        let n = z.nrows();
        let id = DMatrix::<f64>::identity(n, n);
        // S = (Z − R)(Z + R)⁻¹
        let plus = &z + &id * r;
        let inv = plus.try_inverse().ok_or(NrError::Singular)?;
        let s = (&z - &id * r) * inv;
        let mut el = Self::from_scattering(s, r, tol)?;
        el.presentation = Presentation::Z;
        el.z_bar = Some(z);
        Ok(el)
    }

    /// Whether a full (non-reduced) admittance exists.
    pub fn has_admittance(&self) -> bool {
        self.y_bar.is_some()
    }
}

fn check_square(m: &DMatrix<f64>) -> Result<(), NrError> {
    if m.is_square() {
        Ok(())
    } else {
        Err(NrError::NotSquare { rows: m.nrows(), cols: m.ncols() })
    }
}

fn check_resistance(r: f64) -> Result<(), NrError> {
    if r.is_finite() && r > 0.0 {
        Ok(())
    } else {
        Err(NrError::BadResistance(r))
    }
}

fn check_skew(m: &DMatrix<f64>, tol: f64) -> Result<(), NrError> {
    if is_skew(m, tol) {
        Ok(())
    } else {
        let ratio = frobenius(&(m + m.transpose())) / frobenius(m).max(f64::MIN_POSITIVE);
        Err(NrError::NotSkew { ratio })
    }
}

fn check_unitary(s: &DMatrix<f64>, tol: &NrTolerances) -> Result<(), NrError> {
    let n = s.nrows();
    let deviation = frobenius(&(s.transpose() * s - DMatrix::identity(n, n)));
    if deviation > tol.unitary * (n as f64).sqrt() {
        return Err(NrError::NotUnitary { deviation });
    }
    Ok(())
}

fn sigma_min(m: &DMatrix<f64>) -> f64 {
    m.clone().svd(false, false).singular_values.min()
}

/// `Ȳ = R⁻¹ (1 + S)⁻¹ (1 − S)`.
pub fn scattering_to_admittance(s: &DMatrix<f64>, r: f64, tol: &NrTolerances) -> Result<DMatrix<f64>, NrError> {
    check_square(s)?;
    check_resistance(r)?;
    check_unitary(s, tol)?;
    let n = s.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let plus = &id + s;
    let smin = sigma_min(&plus);
    if smin < tol.eigen_detect * frobenius(s).max(1.0) {
        return Err(NrError::DegenerateMinusOne { sigma_min: smin });
    }
    let y = plus.lu().solve(&(&id - s)).ok_or(NrError::DegenerateMinusOne { sigma_min: smin })? / r;
    check_skew(&y, tol.skew.max(1e-9))?;
    Ok(y)
}

/// `Z̄ = R (1 − S)⁻¹ (1 + S)`.
pub fn scattering_to_impedance(s: &DMatrix<f64>, r: f64, tol: &NrTolerances) -> Result<DMatrix<f64>, NrError> {
    check_square(s)?;
    check_resistance(r)?;
    check_unitary(s, tol)?;
    let n = s.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let minus = &id - s;
    let smin = sigma_min(&minus);
    if smin < tol.eigen_detect * frobenius(s).max(1.0) {
        return Err(NrError::DegeneratePlusOne { sigma_min: smin });
    }
    let z = minus.lu().solve(&(&id + s)).ok_or(NrError::DegeneratePlusOne { sigma_min: smin })? * r;
    check_skew(&z, tol.skew.max(1e-9))?;
    Ok(z)
}

/// Inverse of [`scattering_to_admittance`]: `S = (1 − RȲ)(1 + RȲ)⁻¹`.
pub fn admittance_to_scattering(y: &DMatrix<f64>, r: f64) -> Result<DMatrix<f64>, NrError> {
    check_square(y)?;
    let n = y.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let ry = y * r;
    let inv = (&id + &ry).try_inverse().ok_or(NrError::Singular)?;
    Ok((&id - &ry) * inv)
}

/// Result of projecting out the −1 eigenspace of `S`.
#[derive(Debug, Clone, PartialEq)]
pub struct DegenerateReduction {
    /// Orthogonal projector on the −1 eigenspace; the ports obey `P₁ Φ̇₀ = 0`.
    pub projector_p1: DMatrix<f64>,
    /// Orthonormal basis of `range(Q₁)` (N × (N − k)).
    pub reduced_basis: DMatrix<f64>,
    /// Skew admittance acting on `range(Q₁)` in the `reduced_basis` coordinates.
    pub reduced_y: DMatrix<f64>,
    pub rank: usize,
}

/// `Ỹ = R⁻¹ (Q₁(1+S)Q₁)⁻¹ Q₁(1−S)Q₁` restricted to `range(Q₁)`.
pub fn degenerate_reduction(s: &DMatrix<f64>, r: f64, tol: &NrTolerances) -> Result<DegenerateReduction, NrError> {
    check_square(s)?;
    check_resistance(r)?;
    check_unitary(s, tol)?;
    let n = s.nrows();
    let id = DMatrix::<f64>::identity(n, n);
    let plus = &id + s;
    // S is orthogonal hence normal: the −1 eigenspace is ker(1 + S) and its
    // orthogonal projector is built from an orthonormal kernel basis.
    let kernel = null_space(&plus, tol.eigen_detect);
    let rank = kernel.ncols();
    if rank == 0 {
        return Err(NrError::NotDegenerate);
    }
    let mut kernel_cols: Vec<DVector<f64>> = kernel.column_iter().map(|c| c.into_owned()).collect();
    for c in kernel_cols.iter_mut() {
        fix_sign(c);
    }
    let kernel = DMatrix::from_columns(&kernel_cols);
    let p1 = &kernel * kernel.transpose();
    let q1 = &id - &p1;

    let (vals, vecs) = symmetric_eigen_sorted(&q1, 1e-8);
    let cols: Vec<DVector<f64>> = vals
        .iter()
        .enumerate()
        .filter(|(_, v)| **v > 0.5)
        .map(|(i, _)| vecs.column(i).into_owned())
        .collect();
    let dim = n - rank;
    let basis = if cols.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&cols) };
    debug_assert_eq!(basis.ncols(), dim);
    let reduced_y = if dim == 0 {
        DMatrix::zeros(0, 0)
    } else {
        let a = basis.transpose() * &plus * &basis;
        let b = basis.transpose() * (&id - s) * &basis;
        a.lu().solve(&b).ok_or(NrError::Singular)? / r
    };
    Ok(DegenerateReduction { projector_p1: p1, reduced_basis: basis, reduced_y, rank })
}

/// Real canonical form of a skew-symmetric matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SkewCanonical {
    /// Orthogonal change of basis.
    pub o: DMatrix<f64>,
    /// `Oᵀ Y O`: 2×2 blocks `[[0, y_i], [−y_i, 0]]` then zeros.
    pub j: DMatrix<f64>,
    /// Block values `y_i > 0`, descending.
    pub blocks: Vec<f64>,
}

/// Orthogonal reduction of a skew-symmetric matrix to 2×2 blocks and zeros.
///
/// Works from the symmetric matrix `−Y²` whose eigenvalues are the squared
/// block values; each block is completed from its leading vector `a` by
/// `b = −Y a / y`, which makes `aᵀ Y b = y`.
pub fn skew_canonical_form(y: &DMatrix<f64>, tol: f64) -> Result<SkewCanonical, NrError> {
    check_square(y)?;
    check_skew(y, tol)?;
    let n = y.nrows();
    let y = (y - y.transpose()) * 0.5;
    let neg_sq = -(&y * &y);
    let (vals, vecs) = symmetric_eigen_sorted(&neg_sq, 1e-9);
    let scale = vals.first().copied().unwrap_or(0.0).max(0.0);
    let zero_cut = 1e-12 * scale.max(f64::MIN_POSITIVE) + 1e-300;

    let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(n);
    let mut blocks = Vec::new();
    let orth = |v: &mut DVector<f64>, chosen: &[DVector<f64>]| {
        for _ in 0..2 {
            for c in chosen {
                let o = c.dot(v);
                v.axpy(-o, c, 1.0);
            }
        }
    };
    for (i, &lam) in vals.iter().enumerate() {
        if lam <= zero_cut.max(1e-10 * scale) {
            continue;
        }
        let mut a = vecs.column(i).into_owned();
        orth(&mut a, &chosen);
        let norm = a.norm();
        if norm < 1e-6 {
            continue;
        }
        a /= norm;
        fix_sign(&mut a);
        let yval = lam.sqrt();
        let mut b = -(&y * &a) / yval;
        orth(&mut b, &chosen);
        b.normalize_mut();
        chosen.push(a);
        chosen.push(b);
        blocks.push(yval);
    }
    // zero block: complete with projected unit vectors in index order
    for idx in 0..n {
        if chosen.len() == n {
            break;
        }
        let mut v = DVector::zeros(n);
        v[idx] = 1.0;
        orth(&mut v, &chosen);
        let norm = v.norm();
        if norm > 1e-6 {
            v /= norm;
            orth(&mut v, &chosen);
            v.normalize_mut();
            fix_sign(&mut v);
            chosen.push(v);
        }
    }
    let o = DMatrix::from_columns(&chosen);
    let mut j = o.transpose() * &y * &o;
    // clean the structural zeros
    for r in 0..n {
        for c in 0..n {
            let in_block = r / 2 == c / 2 && r / 2 < blocks.len() && r != c;
            if !in_block {
                j[(r, c)] = 0.0;
            }
        }
    }
    Ok(SkewCanonical { o, j, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> NrTolerances {
        NrTolerances::default()
    }

    fn gyrator_s() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
    }

    fn cyclic_s() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    }

    #[test]
    fn identity_scattering_is_open() {
        let y = scattering_to_admittance(&DMatrix::identity(3, 3), 1.0, &tol()).unwrap();
        assert!(y.norm() < 1e-15);
    }

    #[test]
    fn gyrator_admittance() {
        let y = scattering_to_admittance(&gyrator_s(), 1.0, &tol()).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        assert!((y - expected).norm() < 1e-14);
    }

    #[test]
    fn circulator_admittance() {
        let y = scattering_to_admittance(&cyclic_s(), 1.0, &tol()).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, -1.0, 0.0]);
        assert!((y - expected).norm() < 1e-14);
    }

    #[test]
    fn resistance_scales_admittance() {
        let y1 = scattering_to_admittance(&gyrator_s(), 1.0, &tol()).unwrap();
        let y50 = scattering_to_admittance(&gyrator_s(), 50.0, &tol()).unwrap();
        assert!((y1 / 50.0 - y50).norm() < 1e-15);
    }

    #[test]
    fn impedance_forms() {
        let minus_one = -DMatrix::<f64>::identity(2, 2);
        let z = scattering_to_impedance(&minus_one, 1.0, &tol()).unwrap();
        assert!(z.norm() < 1e-15);

        let z = scattering_to_impedance(&gyrator_s(), 1.0, &tol()).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        assert!((z - expected).norm() < 1e-14);

        let err = scattering_to_impedance(&cyclic_s(), 1.0, &tol()).unwrap_err();
        assert!(matches!(err, NrError::DegeneratePlusOne { .. }));
    }

    #[test]
    fn non_unitary_rejected() {
        let s = DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]);
        assert!(matches!(scattering_to_admittance(&s, 1.0, &tol()), Err(NrError::NotUnitary { .. })));
    }

    #[test]
    fn minus_one_routes_to_reduction() {
        let s = -DMatrix::<f64>::identity(1, 1);
        assert!(matches!(scattering_to_admittance(&s, 1.0, &tol()), Err(NrError::DegenerateMinusOne { .. })));
        let red = degenerate_reduction(&s, 1.0, &tol()).unwrap();
        assert_eq!(red.rank, 1);
        assert_eq!(red.reduced_y.nrows(), 0);
        assert!((red.projector_p1[(0, 0)] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn block_reduction() {
        let mut s = DMatrix::zeros(3, 3);
        s[(0, 0)] = -1.0;
        s.view_mut((1, 1), (2, 2)).copy_from(&gyrator_s());
        let red = degenerate_reduction(&s, 1.0, &tol()).unwrap();
        assert_eq!(red.rank, 1);
        let p1_expected = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0, 0.0]));
        assert!((&red.projector_p1 - p1_expected).norm() < 1e-12);
        // in the (e2, e3) basis the reduced admittance is the gyrator's
        let y_full = &red.reduced_basis * &red.reduced_y * red.reduced_basis.transpose();
        let mut expected = DMatrix::zeros(3, 3);
        expected[(1, 2)] = -1.0;
        expected[(2, 1)] = 1.0;
        assert!((y_full - expected).norm() < 1e-12);
    }

    #[test]
    fn reflective_pair_reduces_to_zero() {
        let s = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, -1.0, 0.0]);
        let red = degenerate_reduction(&s, 1.0, &tol()).unwrap();
        assert_eq!(red.rank, 1);
        assert_eq!(red.reduced_y.shape(), (1, 1));
        assert!(red.reduced_y[(0, 0)].abs() < 1e-14);
        assert!((&red.projector_p1 * &red.projector_p1 - &red.projector_p1).norm() < 1e-14);
    }

    #[test]
    fn not_degenerate_error() {
        assert_eq!(degenerate_reduction(&gyrator_s(), 1.0, &tol()).unwrap_err(), NrError::NotDegenerate);
    }

    #[test]
    fn canonical_form_examples() {
        let zero = skew_canonical_form(&DMatrix::zeros(3, 3), 1e-10).unwrap();
        assert!(zero.blocks.is_empty());
        assert!((zero.o - DMatrix::<f64>::identity(3, 3)).norm() < 1e-15);

        let y = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, -2.0, 0.0]);
        let c = skew_canonical_form(&y, 1e-10).unwrap();
        assert_eq!(c.blocks.len(), 1);
        assert!((c.blocks[0] - 2.0).abs() < 1e-14);
        assert!((&c.j - &y).norm() < 1e-14);

        let circ = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, -1.0, 0.0]);
        let c = skew_canonical_form(&circ, 1e-10).unwrap();
        assert_eq!(c.blocks.len(), 1);
        assert!((c.blocks[0] - 3f64.sqrt()).abs() < 1e-12);
        assert!((c.o.transpose() * &circ * &c.o - &c.j).norm() < 1e-12);
        assert!(c.j.row(2).norm() < 1e-15);
    }

    #[test]
    fn element_constructors_agree() {
        let from_s = NrElement::from_scattering(gyrator_s(), 1.0, &tol()).unwrap();
        let y = from_s.y_bar.clone().unwrap();
        let from_y = NrElement::from_admittance(y.clone(), 1.0, &tol()).unwrap();
        assert!((from_y.s.unwrap() - gyrator_s()).norm() < 1e-14);
        let z = from_s.z_bar.clone().unwrap();
        let from_z = NrElement::from_impedance(z, 1.0, &tol()).unwrap();
        assert!((from_z.y_bar.unwrap() - y).norm() < 1e-13);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn skew_from(entries: &[f64], n: usize) -> DMatrix<f64> {
            let mut y = DMatrix::zeros(n, n);
            let mut k = 0;
            for i in 0..n {
                for j in (i + 1)..n {
                    y[(i, j)] = entries[k];
                    y[(j, i)] = -entries[k];
                    k += 1;
                }
            }
            y
        }

        proptest! {
            #[test]
            fn scattering_admittance_round_trip(
                n in 2usize..6,
                entries in proptest::collection::vec(-3.0f64..3.0, 15),
                r in 0.1f64..100.0,
            ) {
                // Cayley transform of a random skew generator is orthogonal
                // without −1 eigenvalue
                let a = skew_from(&entries, n);
                let id = DMatrix::<f64>::identity(n, n);
                let s = (&id - &a) * (&id + &a).try_inverse().unwrap();
                let y = scattering_to_admittance(&s, r, &tol()).unwrap();
                prop_assert!(is_skew(&y, 1e-9));
                let back = admittance_to_scattering(&y, r).unwrap();
                prop_assert!((back - &s).norm() < 1e-10 * (n as f64));
                let v = DVector::from_iterator(n, entries.iter().take(n).copied());
                prop_assert!((v.dot(&(&y * &v))).abs() < 1e-9 * y.norm() * v.norm_squared().max(1.0));
            }

            #[test]
            fn canonical_form_reconstructs(
                n in 1usize..7,
                entries in proptest::collection::vec(-3.0f64..3.0, 21),
            ) {
                let y = skew_from(&entries, n);
                let c = skew_canonical_form(&y, 1e-10).unwrap();
                let id = DMatrix::<f64>::identity(n, n);
                prop_assert!((c.o.transpose() * &c.o - id).norm() < 1e-10);
                prop_assert!((c.o.transpose() * &y * &c.o - &c.j).norm() < 1e-9 * y.norm().max(1.0));
                for w in c.blocks.windows(2) {
                    prop_assert!(w[0] >= w[1] - 1e-12);
                }
                let mut ev: Vec<f64> = (-(&y * &y)).symmetric_eigen().eigenvalues.iter().copied().collect();
                ev.sort_by(|a, b| b.total_cmp(a));
                for (i, b) in c.blocks.iter().enumerate() {
                    prop_assert!((b * b - ev[2 * i]).abs() < 1e-9 * ev[0].max(1.0));
                }
            }
        }
    }
}
