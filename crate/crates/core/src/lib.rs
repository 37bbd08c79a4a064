//! Spectral solver for a second-order boundary value problem with a retarded
//! argument on `[0, π/2) ∪ (π/2, π]`,
//!
//! ```text
//! y″(x) + q(x)·y(x − Δ(x)) + λ·y(x) = 0,
//! y(0)·cos α + y′(0)·sin α = 0,      y(π)·cos β + y′(π)·sin β = 0,
//! y(π/2 − 0) = λ^{1/3}·δ·y(π/2 + 0), y′(π/2 − 0) = λ^{1/3}·δ·y′(π/2 + 0),
//! ```
//!
//! together with closed-form asymptotics for its eigenvalues and
//! eigenfunctions and tooling to measure how well they hold.
//!
//! Modules, bottom-up:
//! - [`expr`]: coefficient expressions of `x`.
//! - [`problem`]: problem instances and their structural checks.
//! - [`dde`]: RK4 shooting with dense output for the retarded term.
//! - [`picard`]: an independent solution via the equivalent Volterra equations.
//! - [`spectral`]: characteristic function, root search, simplicity checks.
//! - [`asymptotics`]: eigenvalue/eigenfunction predictions and rate fits.

pub mod asymptotics;
pub mod dde;
pub mod expr;
pub mod picard;
pub mod problem;
pub mod quadrature;
pub mod segment;
pub mod spectral;

pub use dde::{shoot, Shooter, ShootingResult, SolverError};
pub use expr::Expr;
pub use problem::{ProblemConfig, ProblemSpec, Side};
pub use segment::SolutionSegment;
