//! Exact-arithmetic workbench for the computational side of perturbative
//! quantum field theory at desk scale: Gaussian integrals and Wick calculus,
//! Feynman-diagram expansions with automorphism weights, ribbon-graph genus
//! expansions of matrix integrals, tree-counting theorems, one-dimensional
//! Euclidean correlators, divergence counting, and the operator algebra of
//! free 2d conformal fields.
//!
//! Everything exact is computed over arbitrary-precision rationals and
//! cross-checked against independent brute-force or numerical oracles; the
//! `acceptance` module runs the whole battery.

pub mod scalar;
pub mod series;
pub mod poly;
pub mod graphs;
pub mod la;
pub mod gaussian;
pub mod feynman;
pub mod asymptotics;
pub mod trees;
pub mod matrixmodels;
pub mod qm1d;
pub mod renorm;

pub use scalar::Rat;
