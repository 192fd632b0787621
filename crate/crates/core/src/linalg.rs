//! Small dense linear-algebra helpers shared by the spectral and boundary solvers.
//!
//! Everything here works on `nalgebra::DMatrix<f64>`. The eigen helpers add a
//! deterministic treatment of degenerate eigenspaces, which nalgebra leaves to
//! the whims of the underlying QR iteration.

use nalgebra::{DMatrix, DVector};

/// Frobenius norm.
pub fn frobenius(m: &DMatrix<f64>) -> f64 {
    m.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// `‖M + Mᵀ‖ ≤ tol · ‖M‖` (an all-zero matrix is skew).
pub fn is_skew(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let sym = m + m.transpose();
    frobenius(&sym) <= tol * frobenius(m).max(f64::MIN_POSITIVE)
}

/// `‖M − Mᵀ‖ ≤ tol · ‖M‖`.
pub fn is_symmetric(m: &DMatrix<f64>, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let asym = m - m.transpose();
    frobenius(&asym) <= tol * frobenius(m).max(f64::MIN_POSITIVE)
}

/// Flip `v` so that its first non-negligible component is positive.
pub fn fix_sign(v: &mut DVector<f64>) {
    let scale = v.amax();
    if scale == 0.0 {
        return;
    }
    if let Some(first) = v.iter().find(|x| x.abs() > 1e-10 * scale) {
        if *first < 0.0 {
            v.neg_mut();
        }
    }
}

/// Eigen-decomposition of a real symmetric matrix with reproducible output.
///
/// Eigenvalues come back in descending order. Eigenvalues closer than
/// `cluster_tol · max(|λ|, 1)` form one degenerate cluster; inside a cluster the
/// basis is built by Gram–Schmidt on the projected unit vectors `e_1, e_2, …`
/// in index order, and each vector gets the first-nonzero-positive sign.
pub fn symmetric_eigen_sorted(m: &DMatrix<f64>, cluster_tol: f64) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let scale = eig.eigenvalues.iter().fold(1.0_f64, |acc, x| acc.max(x.abs()));
    let mut values = Vec::with_capacity(n);
    let mut vectors = DMatrix::zeros(n, n);
    let mut col = 0;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n
            && (eig.eigenvalues[order[start]] - eig.eigenvalues[order[end]]).abs()
                <= cluster_tol * scale
        {
            end += 1;
        }
        let cluster: Vec<usize> = order[start..end].to_vec();
        let mean = cluster.iter().map(|&i| eig.eigenvalues[i]).sum::<f64>() / cluster.len() as f64;

        // projector onto the cluster eigenspace
        let mut basis = DMatrix::zeros(n, cluster.len());
        for (j, &i) in cluster.iter().enumerate() {
            basis.set_column(j, &eig.eigenvectors.column(i));
        }
        let proj = &basis * basis.transpose();

        let mut chosen: Vec<DVector<f64>> = Vec::with_capacity(cluster.len());
        for idx in 0..n {
            if chosen.len() == cluster.len() {
                break;
            }
            let mut v = proj.column(idx).into_owned();
            for c in &chosen {
                let overlap = c.dot(&v);
                v.axpy(-overlap, c, 1.0);
            }
            let norm = v.norm();
            if norm > 1e-6 {
                v /= norm;
                // second pass keeps orthogonality tight
                for c in &chosen {
                    let overlap = c.dot(&v);
                    v.axpy(-overlap, c, 1.0);
                }
                v.normalize_mut();
                fix_sign(&mut v);
                chosen.push(v);
            }
        }
        for v in chosen {
            vectors.set_column(col, &v);
            values.push(mean);
            col += 1;
        }
        start = end;
    }
    (values, vectors)
}

/// Singular values of `m`, descending.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Orthonormal basis of the (numerical) null space of `m`.
///
/// Singular values below `rel_tol · σ_max` count as zero. Rectangular inputs
/// with fewer rows than columns are padded with zero rows so that the full
/// right-singular basis is available.
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    let rows = m.nrows().max(cols);
    let mut padded = DMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested right singular vectors");
    let smax = svd.singular_values.max();
    let mut picked: Vec<DVector<f64>> = Vec::new();
    for (i, s) in svd.singular_values.iter().enumerate() {
        if *s <= rel_tol * smax.max(f64::MIN_POSITIVE) {
            picked.push(v_t.row(i).transpose());
        }
    }
    if picked.is_empty() {
        return DMatrix::zeros(cols, 0);
    }
    DMatrix::from_columns(&picked)
}

/// Orthonormal basis (as columns) of the complement of the unit vector `n`.
pub fn orthogonal_complement(n: &DVector<f64>) -> DMatrix<f64> {
    let dim = n.len();
    let unit = n.normalize();
    let proj = DMatrix::identity(dim, dim) - &unit * unit.transpose();
    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(dim.saturating_sub(1));
    for i in 0..dim {
        if cols.len() + 1 == dim {
            break;
        }
        let mut v = proj.column(i).into_owned();
        for c in &cols {
            let overlap = c.dot(&v);
            v.axpy(-overlap, c, 1.0);
        }
        let norm = v.norm();
        if norm > 1e-8 {
            cols.push(v / norm);
        }
    }
    if cols.is_empty() {
        DMatrix::zeros(dim, 0)
    } else {
        DMatrix::from_columns(&cols)
    }
}

/// Gauss–Legendre nodes and weights on `[a, b]`.
pub fn gauss_legendre(order: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    for i in 0..order.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if order == 0 { 1.0 } else { p1 };
            let p_prev = p0;
            dp = order as f64 * (x * p - p_prev) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = mid - half * x;
        nodes[order - 1 - i] = mid + half * x;
        weights[i] = half * w;
        weights[order - 1 - i] = half * w;
    }
    (nodes, weights)
}

/// Composite Gauss–Legendre rule: `panels` equal panels of `order` points each.
pub fn composite_gauss(order: usize, panels: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(order * panels);
    let mut ws = Vec::with_capacity(order * panels);
    let h = (b - a) / panels as f64;
    for p in 0..panels {
        let (x, w) = gauss_legendre(order, a + p as f64 * h, a + (p + 1) as f64 * h);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials_exactly() {
        let (x, w) = gauss_legendre(6, 0.0, 2.0);
        let integral: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(11)).sum();
        assert!((integral - 2f64.powi(12) / 12.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_cluster_is_index_ordered() {
        let m = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 2.0, 1.0]));
        let (vals, vecs) = symmetric_eigen_sorted(&m, 1e-10);
        assert_eq!(vals.len(), 3);
        assert!((vecs[(0, 0)] - 1.0).abs() < 1e-12);
        assert!((vecs[(1, 1)] - 1.0).abs() < 1e-12);
        assert!((vecs[(2, 2)] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_space_of_wide_matrix() {
        let m = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let ns = null_space(&m, 1e-10);
        assert_eq!(ns.ncols(), 2);
        assert!((&m * &ns).norm() < 1e-12);
    }

    #[test]
    fn complement_is_orthonormal() {
        let n = DVector::from_vec(vec![1.0, 0.0, 0.0]);
        let c = orthogonal_complement(&n);
        assert_eq!(c.ncols(), 2);
        assert!((c.transpose() * &c - DMatrix::identity(2, 2)).norm() < 1e-12);
        assert!((c.transpose() * n).norm() < 1e-12);
    }
}
