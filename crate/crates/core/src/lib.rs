//! Deterministic simulator for a spin-1 contextuality test.
//!
//! The crate builds spin-1 observables in arbitrary directions, the maximal
//! Kochen-Specker operators assembled from their squares, and the
//! two-particle spin-one singlet. From those it computes exact joint
//! Born-rule distributions for two interlinked measurement contexts, checks
//! which coincidences are forbidden, and reproduces the same numbers by
//! seeded Monte Carlo sampling.
//!
//! Module map:
//! - [`linalg`]: dense complex matrices and kets, Jacobi eigensolver.
//! - [`spin`]: `J(θ, φ)`, its square, rotation operators.
//! - [`ks`]: Kochen-Specker operators and their contexts.
//! - [`logic`]: Greechie diagrams and the GDL text format.
//! - [`experiment`]: singlet, joint distributions, sampling, checks.
//! - [`cli`]: command-line runner used by the `qctx` binary.

pub mod acceptance;
pub mod cli;
pub mod error;
pub mod experiment;
pub mod ks;
pub mod linalg;
pub mod logic;
pub mod output;
pub mod spin;
pub mod tolerance;

pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use tolerance::Tolerances;

/// The bundled two-context Greechie diagram in GDL form.
pub const BUNDLED_DIAGRAM: &str = include_str!("../data/fig1.gdl");
