//! Lumped LC ladder: every line is cut into `m` cells of unit capacitance
//! per length and inductance `1/δ` per length, the ports at `x = 0` are tied
//! by the lumped constraint `I = Y φ̇`, and the far ends are left open.
//!
//! With `q = W^{1/2} φ` (`W` the node capacitances), `a = q̇` and edge
//! variables `b = L q`, the equations of motion are `ż = A z` with the real
//! skew matrix `A = [[−G, −Lᵀ], [L, 0]]`, so the frequencies are the square
//! roots of the eigenvalues of `AᵀA`.

use nalgebra::{DMatrix, SymmetricEigen};

pub fn ladder_frequencies(delta: &[f64], y: &DMatrix<f64>, d: f64, m: usize) -> Vec<f64> {
    let n = delta.len();
    let h = d / m as f64;
    let nodes = n * (m + 1);
    let edges = n * m;
    let node = |j: usize, i: usize| j * (m + 1) + i;
    let weight = |i: usize| if i == 0 || i == m { 0.5 * h } else { h };
    let mut l = DMatrix::zeros(edges, nodes);
    for j in 0..n {
        let k = (delta[j] / h).sqrt();
        for i in 0..m {
            let e = j * m + i;
            l[(e, node(j, i + 1))] = k / weight(i + 1).sqrt();
            l[(e, node(j, i))] = -k / weight(i).sqrt();
        }
    }
    let mut g = DMatrix::zeros(nodes, nodes);
    for a in 0..n {
        for b in 0..n {
            g[(node(a, 0), node(b, 0))] = y[(a, b)] / weight(0);
        }
    }
    let dim = nodes + edges;
    let mut big = DMatrix::zeros(dim, dim);
    big.view_mut((0, 0), (nodes, nodes)).copy_from(&(-&g));
    big.view_mut((0, nodes), (nodes, edges)).copy_from(&(-l.transpose()));
    big.view_mut((nodes, 0), (edges, nodes)).copy_from(&l);
    let ata = big.transpose() * &big;
    let mut w: Vec<f64> = SymmetricEigen::new(ata).eigenvalues.iter().map(|v| v.max(0.0).sqrt()).collect();
    w.sort_by(|a, b| a.total_cmp(b));
    w
}

/// Distinct positive values with their multiplicities, clustered at `rel`.
pub fn distinct(values: &[f64], floor: f64, rel: f64) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &v in values.iter().filter(|v| **v > floor) {
        match out.last_mut() {
            Some(last) if (v - last.0).abs() <= rel * v => last.1 += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}
