//! Differentiable finite-volume training toolkit for the 2D shallow water
//! equations on unstructured meshes.
//!
//! The crate combines a well-balanced Roe finite-volume discretisation with a
//! Fourier-feature MLP surrogate: the cell-wise finite-volume residual of the
//! network's predictions becomes a training loss, optionally guided by sparse
//! measurements, dense anchor snapshots, or an in-loop forward-solver teacher.

pub mod ad;
pub mod cli;
pub mod config;
pub mod mesh;
pub mod diagnostics;
pub mod losses;
pub mod network;
pub mod output;
pub mod physics;
pub mod reference;
pub mod teacher;
pub mod training;
