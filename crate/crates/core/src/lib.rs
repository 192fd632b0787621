//! Canonical quantization of transmission lines terminated by ideal
//! nonreciprocal elements.
//!
//! The pipeline runs from a JSON netlist ([`netlist`]) through the algebra of
//! the nonreciprocal element ([`nrcore`]) to the doubled flux/charge eigenbasis
//! of semi-infinite lines ([`spectral`]) or the discrete spectrum of finite
//! lines with an optional junction boundary ([`finite`]). The mode-space
//! reduction and the exported Hamiltonian live in [`hamiltonian`]; [`tdsim`]
//! integrates the telegrapher's equations directly as an independent check.

pub mod cli;
pub mod export;
pub mod finite;
pub mod hamiltonian;
pub mod linalg;
pub mod netlist;
pub mod nrcore;
pub mod spectral;
pub mod tdsim;
