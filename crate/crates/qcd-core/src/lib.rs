//! Numerical toolbox for quantum channel discrimination at desk scale.
//!
//! The crate covers the full pipeline from linear-algebra primitives to
//! finite-copy guarantees:
//!
//! - [`qlinalg`]: validated density matrices, channels (Kraus/Choi), tensor
//!   manipulation, and JSON encodings.
//! - [`divergences`]: relative entropy, fidelity and sine distance, max- and
//!   smoothed-max-divergence, Petz and geometric Rényi families, and the
//!   moment statistics behind second-order expansions.
//! - [`hypothesis`]: optimal binary tests for states (SDP and Neyman–Pearson
//!   bisection routes) and the parallel channel-discrimination program.
//! - [`symsdp`]: permutation-symmetry reduction of the parallel program from
//!   exponential to polynomial size.
//! - [`adaptive`]: adaptive-protocol simulation, amortization bookkeeping,
//!   and parallel-input-state construction.
//! - [`bounds`]: the inequality calculus connecting all of the above into
//!   finite-copy parallelization guarantees, plus second-order brackets.
//! - [`example`]: a concrete channel family where the adaptive-vs-parallel
//!   gap is visible, with a data pipeline for rate-comparison curves.
//! - [`sampling`]: seeded random states and channels for property tests.
//!
//! Conventions: all logarithms and rates are base 2; divergences that can be
//! infinite return [`extended::ExtendedReal`]; solver-backed operations take
//! [`sdp::SolverOptions`] and re-certify returned optimizers independently.

pub mod adaptive;
pub mod bounds;
pub mod divergences;
pub mod error;
pub mod example;
pub mod extended;
pub mod hypothesis;
pub mod qlinalg;
pub mod sampling;
pub mod sdp;
pub mod symsdp;

pub use error::{Error, Result};
pub use extended::ExtendedReal;
pub use qlinalg::{Channel, ComplexMatrix, DensityMatrix, PositiveOperator, PureState};
pub use sdp::SolverOptions;
