#![allow(dead_code)]

pub mod ladder;

use nalgebra::DMatrix;

pub fn unit_gyrator() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
}

/// Rescaled admittance of the cyclic circulator `S = [[0,0,1],[1,0,0],[0,1,0]]`
/// with `R = 1` and unit lines.
pub fn circulator_y() -> DMatrix<f64> {
    DMatrix::from_row_slice(3, 3, &[0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 1.0, -1.0, 0.0])
}

pub fn netlist_path(name: &str) -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../netlists").join(name)
}
