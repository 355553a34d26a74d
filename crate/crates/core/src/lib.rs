//! Inoue-Bombieri surfaces: construction, leafwise Laplace solver and normalized Chern-Ricci flow.

pub mod algebra;
pub mod fft;
pub mod grid;
pub mod surface;
pub mod fields;
pub mod slab;
pub mod sm_ops;
pub mod slf;
pub mod potentials;
pub mod flow;
pub mod cli;
