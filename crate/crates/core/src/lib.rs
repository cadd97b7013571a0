//! Discrete spectra of complex banded operators via matrix-valued Jost functions.
//!
//! A banded operator of order `p` is a semi-infinite matrix `D = (d_ij)` with
//! `d_ij = 0` for `|i-j| > p` and nonvanishing extreme diagonals `|i-j| = p`.
//! When the entries stabilize (`d_{i,i±p} -> 1`, inner diagonals `-> 0`), `D`
//! is a compact perturbation of the standard band operator `D0 = S^p + (S*)^p`
//! with essential spectrum `[-2, 2]`, and its discrete spectrum consists of the
//! points `λ = z + 1/z` where the determinant `γ(z) = det Δ(z)` of the matrix
//! Jost function vanishes inside the unit disk.
//!
//! The crate computes the Jost function two independent ways (successive
//! approximations and Taylor-coefficient recurrences), locates the zeros of
//! `γ` by winding-number subdivision plus Newton refinement, certifies
//! spectrum-free regions, and cross-checks everything against dense
//! finite-section eigenvalues. Doubly-infinite operators are handled through
//! the doubling transform, and asymptotically periodic Jacobi matrices through
//! the Burchnall-Chaundy reduction.

pub mod bi;
pub mod coeffs;
pub mod cserde;
pub mod eig;
pub mod error;
pub mod generators;
pub mod jost;
pub mod json;
pub mod linalg;
pub mod operator;
pub mod oracle;
pub mod periodic;
pub mod pipeline;
pub mod spectrum;

pub use bi::{double, BiBandedOperator};
pub use coeffs::{normalize, NormalizeOptions, NormalizedCoefficients};
pub use error::{Error, Result};
pub use jost::{jost_error_bound, jost_iterate, jost_taylor, JostEvaluation, TaylorTable};
pub use operator::{BandedOperator, BlockCoefficients, DiagonalProvider, Tail};
pub use oracle::{dense_eigenvalues, match_spectra, truncate, FiniteSection, MatchTable};
pub use periodic::{
    analyze_asymptotic, bc_polynomial, naiman_check, spectral_arcs, AsymptoticallyPeriodicJacobi,
    BcPolynomial, PeriodicBackground,
};
pub use pipeline::{analyze_bi_operator, analyze_operator, AnalysisConfig, AnalysisReport};
pub use spectrum::{
    enclosure, find_zeros, omega_constant, zhukovsky, zhukovsky_preimages, ContourConfig,
    Eigenvalue, EnclosureOutcome, EnclosureVerdict, SpectralReport,
};

/// Complex scalar used throughout; stored data must stay finite.
pub type C64 = num_complex::Complex64;

/// Dense complex matrix (used for `p x p` blocks and finite sections).
pub type CMat = nalgebra::DMatrix<C64>;
