//! Toolkit for weakly nonlinear wave systems on truncated Fourier lattices:
//! exact resonance enumeration and clustering, effective / interaction /
//! original dynamics with damping and stochastic forcing, closed-form
//! beta-plane cluster oracles, and a wave-kinetic solver.

pub mod chm_cluster;
pub mod field;
pub mod integrate;
pub mod kinetic;
pub mod lattice;
pub mod resonance;
pub mod stats;

#[cfg(test)]
pub(crate) mod testutil;
