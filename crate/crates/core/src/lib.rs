//! Intrusive uncertainty quantification for 1D hyperbolic conservation laws:
//! stochastic Galerkin, entropy-based (IPM) closures, moment filters, and the
//! finite-volume schemes that combine them.

pub mod basis;
pub mod closure;
pub mod entropy;
pub mod filters;
pub mod moments;

pub use basis::{eigenvalue, gauss_rule, BasisError, BasisSet, Family, QuadratureRule, Vandermonde};
pub use closure::{
    closure_eval, cold_start, reconstruct_moments, solve_dual, DualError, DualProblem, DualSolution,
    DualSolverConfig, StochasticSpace,
};
pub use entropy::{BoundedLogEntropy, EntropyError, EntropyModel, EulerEntropy, LogEntropy};
pub use filters::{FilterError, FilterKind, FilterSpec};
pub use moments::{DualMatrix, MomentMatrix};
pub mod euler;
pub mod fv;
pub mod riemann;
pub mod realizability;
pub mod stats;
