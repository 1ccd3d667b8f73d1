//! Entropy-based (IPM) closure: the dual objective, its derivatives, and a
//! damped Newton solver.
//!
//! For moments `û` the dual problem is
//!
//! ```text
//! min_v̂  Σ_q w_q s_*(v̂ᵀφ(ξ_q)) − v̂·û + (η/2)‖v̂‖²
//! ```
//!
//! and the closure ansatz is `u(ξ) = s'_*(v̂ᵀφ(ξ))`. With `η = 0` this is the
//! plain IPM problem, solvable only for realizable moments; `η > 0` makes the
//! problem strictly convex and coercive for every `û`.

use nalgebra::DMatrix;
use thiserror::Error;

use crate::basis::{BasisError, BasisSet, QuadratureRule, Vandermonde};
use crate::entropy::{EntropyError, EntropyModel};
use crate::moments::{DualMatrix, MomentMatrix};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DualError {
    #[error(transparent)]
    Entropy(#[from] EntropyError),
    #[error(transparent)]
    Basis(#[from] BasisError),
    #[error("dual Hessian is not positive definite")]
    NotPositiveDefinite,
    #[error("dual solve did not converge after {iterations} iterations (gradient norm {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },
    #[error("invalid dual solver configuration: {0}")]
    Config(String),
}

/// Stochastic discretization shared by every cell: basis, quadrature, and
/// the basis values at the quadrature nodes.
#[derive(Debug, Clone)]
pub struct StochasticSpace {
    basis: BasisSet,
    quad: QuadratureRule,
    table: Vandermonde,
}

impl StochasticSpace {
    pub fn new(basis: BasisSet, quad: QuadratureRule) -> Self {
        let table = basis.vandermonde(&quad);
        Self { basis, quad, table }
    }

    /// Legendre basis of degree `degree` with an `nodes`-point Gauss rule.
    pub fn legendre(degree: usize, nodes: usize) -> Result<Self, BasisError> {
        Ok(Self::new(
            BasisSet::legendre(degree),
            crate::basis::gauss_rule(nodes)?,
        ))
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn quadrature(&self) -> &QuadratureRule {
        &self.quad
    }

    pub fn table(&self) -> &Vandermonde {
        &self.table
    }

    /// Number of moments per component, `N + 1`.
    pub fn moments(&self) -> usize {
        self.basis.len()
    }

    pub fn nodes(&self) -> usize {
        self.quad.len()
    }

    /// Moments `⟨φ u⟩` of node values `states[q*m..(q+1)*m]`.
    pub fn project_nodes(&self, states: &[f64], comps: usize) -> MomentMatrix {
        let mut out = MomentMatrix::zeros(self.moments(), comps);
        for (q, &w) in self.quad.weights().iter().enumerate() {
            out.accumulate_node(&self.table, q, w, &states[q * comps..(q + 1) * comps]);
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualSolverConfig {
    /// Stop once the dual gradient norm falls below this value.
    pub tolerance: f64,
    /// Regularization strength `η`.
    pub regularization: f64,
    pub max_iterations: usize,
    /// Step contraction factor of the backtracking line search.
    pub contraction: f64,
    /// Armijo sufficient-decrease constant.
    pub sufficient_decrease: f64,
    pub max_backtracks: usize,
}

impl Default for DualSolverConfig {
    fn default() -> Self {
        Self {
            tolerance: 1e-7,
            regularization: 0.0,
            max_iterations: 200,
            contraction: 0.5,
            sufficient_decrease: 1e-4,
            max_backtracks: 50,
        }
    }
}

impl DualSolverConfig {
    pub fn with_regularization(mut self, eta: f64) -> Self {
        self.regularization = eta;
        self
    }

    pub fn with_tolerance(mut self, tau: f64) -> Self {
        self.tolerance = tau;
        self
    }

    pub fn validate(&self) -> Result<(), DualError> {
        if !(self.tolerance > 0.0) {
            return Err(DualError::Config(format!("tolerance {} must be positive", self.tolerance)));
        }
        if !(self.regularization >= 0.0) || !self.regularization.is_finite() {
            return Err(DualError::Config(format!(
                "regularization {} must be finite and non-negative",
                self.regularization
            )));
        }
        if !(self.contraction > 0.0 && self.contraction < 1.0) {
            return Err(DualError::Config("contraction must lie in (0, 1)".into()));
        }
        if !(self.sufficient_decrease > 0.0 && self.sufficient_decrease < 0.5) {
            return Err(DualError::Config("sufficient decrease must lie in (0, 1/2)".into()));
        }
        Ok(())
    }
}

/// Dual objective for fixed moments `û` and regularization `η`.
pub struct DualProblem<'a, E: EntropyModel + ?Sized> {
    space: &'a StochasticSpace,
    model: &'a E,
    moments: &'a MomentMatrix,
    eta: f64,
}

impl<'a, E: EntropyModel + ?Sized> DualProblem<'a, E> {
    pub fn new(space: &'a StochasticSpace, model: &'a E, moments: &'a MomentMatrix, eta: f64) -> Self {
        debug_assert_eq!(moments.rows(), space.moments());
        debug_assert_eq!(moments.comps(), model.dim());
        Self {
            space,
            model,
            moments,
            eta,
        }
    }

    fn dim(&self) -> usize {
        self.model.dim()
    }

    pub fn objective(&self, duals: &DualMatrix) -> Result<f64, DualError> {
        let m = self.dim();
        let mut v = vec![0.0; m];
        let mut total = 0.0;
        for (q, &w) in self.space.quad.weights().iter().enumerate() {
            duals.expand_at(self.space.table.row(q), &mut v);
            total += w * self.model.dual_entropy(&v)?;
        }
        Ok(total - duals.dot(self.moments) + 0.5 * self.eta * duals.norm_squared())
    }

    pub fn gradient(&self, duals: &DualMatrix) -> Result<MomentMatrix, DualError> {
        let mut g = reconstruct_moments(duals, self.space, self.model)?;
        g.axpy(-1.0, self.moments);
        g.axpy(self.eta, duals);
        Ok(g)
    }

    /// Dense Hessian indexed by `i*m + k`.
    pub fn hessian(&self, duals: &DualMatrix) -> Result<DMatrix<f64>, DualError> {
        let m = self.dim();
        let n = self.space.moments();
        let size = n * m;
        let mut h = DMatrix::<f64>::zeros(size, size);
        let mut v = vec![0.0; m];
        let mut jac = vec![0.0; m * m];
        for (q, &w) in self.space.quad.weights().iter().enumerate() {
            let phi = self.space.table.row(q);
            duals.expand_at(phi, &mut v);
            self.model.ansatz_jacobian(&v, &mut jac)?;
            for i in 0..n {
                let wi = w * phi[i];
                for j in 0..=i {
                    let wij = wi * phi[j];
                    for k in 0..m {
                        for l in 0..m {
                            h[(i * m + k, j * m + l)] += wij * jac[k * m + l];
                        }
                    }
                }
            }
        }
        for r in 0..size {
            for c in (r + 1)..size {
                h[(r, c)] = h[(c, r)];
            }
            h[(r, r)] += self.eta;
        }
        Ok(h)
    }

    /// Objective and gradient in one pass over the nodes.
    fn value_and_gradient(&self, duals: &DualMatrix) -> Result<(f64, MomentMatrix), DualError> {
        let m = self.dim();
        let mut v = vec![0.0; m];
        let mut u = vec![0.0; m];
        let mut total = 0.0;
        let mut g = MomentMatrix::zeros(self.space.moments(), m);
        for (q, &w) in self.space.quad.weights().iter().enumerate() {
            duals.expand_at(self.space.table.row(q), &mut v);
            total += w * self.model.dual_entropy(&v)?;
            self.model.ansatz(&v, &mut u)?;
            g.accumulate_node(&self.space.table, q, w, &u);
        }
        g.axpy(-1.0, self.moments);
        g.axpy(self.eta, duals);
        let f = total - duals.dot(self.moments) + 0.5 * self.eta * duals.norm_squared();
        Ok((f, g))
    }
}

/// Result of a converged dual solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DualSolution {
    pub duals: DualMatrix,
    pub iterations: usize,
    pub grad_norm: f64,
    /// Objective value after each accepted iterate, starting with the initial guess.
    pub objective_trace: Vec<f64>,
}

/// Starting point for a cell without history: row 0 holds `s'` of the mean
/// state, higher rows are zero. Falls back to zero entropy variables when the
/// mean state is not admissible.
pub fn cold_start<E: EntropyModel + ?Sized>(moments: &MomentMatrix, model: &E) -> DualMatrix {
    let m = model.dim();
    let mut start = DualMatrix::zeros(moments.rows(), m);
    let mut v = vec![0.0; m];
    if model.entropy_variables(moments.row(0), &mut v).is_ok() && v.iter().all(|x| x.is_finite()) {
        start.row_mut(0).copy_from_slice(&v);
    } else if m == 3 {
        // neutral Euler state ρ = 1, v = 0, p = γ - 1
        let fallback = [1.0, 0.0, 1.0];
        if model.entropy_variables(&fallback, &mut v).is_ok() {
            start.row_mut(0).copy_from_slice(&v);
        }
    }
    start
}

/// Newton's method with Armijo backtracking on the dual objective.
///
/// Newton directions come from a Cholesky factorization of the Hessian. If
/// the factorization fails the steepest-descent direction is used instead.
/// Once objective differences reach rounding level the Armijo test is
/// meaningless, so a trial step is also accepted when the objective is
/// unchanged up to rounding and the gradient norm decreases.
pub fn solve_dual<E: EntropyModel + ?Sized>(
    moments: &MomentMatrix,
    start: &DualMatrix,
    config: &DualSolverConfig,
    space: &StochasticSpace,
    model: &E,
) -> Result<DualSolution, DualError> {
    config.validate()?;
    let problem = DualProblem::new(space, model, moments, config.regularization);

    let mut duals = start.clone();
    let (mut f, mut g) = match problem.value_and_gradient(&duals) {
        Ok(fg) => fg,
        Err(_) => {
            duals = cold_start(moments, model);
            problem.value_and_gradient(&duals)?
        }
    };
    let mut grad_norm = g.norm();
    let mut trace = vec![f];

    for iteration in 0..config.max_iterations {
        if grad_norm < config.tolerance {
            return Ok(DualSolution {
                duals,
                iterations: iteration,
                grad_norm,
                objective_trace: trace,
            });
        }

        let direction = newton_direction(&problem, &duals, &g)
            .unwrap_or_else(|| {
                let mut d = g.clone();
                d.scale(-1.0);
                d
            });
        let slope = g.dot(&direction);

        let mut step = 1.0;
        let mut accepted = None;
        let rounding = 64.0 * f64::EPSILON * (1.0 + f.abs());
        for _ in 0..config.max_backtracks {
            let mut trial = duals.clone();
            trial.axpy(step, &direction);
            if let Ok((ft, gt)) = problem.value_and_gradient(&trial) {
                let armijo = ft <= f + config.sufficient_decrease * step * slope;
                let flat = ft <= f + rounding && gt.norm() < grad_norm;
                if armijo || flat {
                    accepted = Some((trial, ft, gt));
                    break;
                }
            }
            step *= config.contraction;
        }

        match accepted {
            Some((next, ft, gt)) => {
                duals = next;
                f = ft;
                grad_norm = gt.norm();
                g = gt;
                trace.push(f);
            }
            None => {
                return Err(DualError::NotConverged {
                    iterations: iteration,
                    grad_norm,
                })
            }
        }
    }

    if grad_norm < config.tolerance {
        Ok(DualSolution {
            duals,
            iterations: config.max_iterations,
            grad_norm,
            objective_trace: trace,
        })
    } else {
        Err(DualError::NotConverged {
            iterations: config.max_iterations,
            grad_norm,
        })
    }
}

fn newton_direction<E: EntropyModel + ?Sized>(
    problem: &DualProblem<'_, E>,
    duals: &DualMatrix,
    gradient: &MomentMatrix,
) -> Option<MomentMatrix> {
    let hessian = problem.hessian(duals).ok()?;
    let chol = hessian.cholesky()?;
    let rhs = nalgebra::DVector::from_iterator(gradient.as_slice().len(), gradient.as_slice().iter().map(|g| -g));
    let sol = chol.solve(&rhs);
    if !sol.iter().all(|x| x.is_finite()) {
        return None;
    }
    Some(MomentMatrix::from_rows(
        gradient.rows(),
        gradient.comps(),
        sol.iter().copied().collect(),
    ))
}

/// Check that a Hessian admits a Cholesky factorization.
pub fn factorize_hessian(h: DMatrix<f64>) -> Result<nalgebra::linalg::Cholesky<f64, nalgebra::Dyn>, DualError> {
    h.cholesky().ok_or(DualError::NotPositiveDefinite)
}

/// Ansatz state `s'_*(v̂ᵀφ(ξ))` at an arbitrary point `ξ ∈ [-1, 1]`.
pub fn closure_eval<E: EntropyModel + ?Sized>(
    duals: &DualMatrix,
    xi: f64,
    basis: &BasisSet,
    model: &E,
) -> Result<Vec<f64>, DualError> {
    if !(-1.0..=1.0).contains(&xi) {
        return Err(BasisError::PointOutOfRange(xi).into());
    }
    let mut phi = vec![0.0; basis.len()];
    basis.eval_all(xi, &mut phi);
    let mut v = vec![0.0; model.dim()];
    duals.expand_at(&phi, &mut v);
    let mut u = vec![0.0; model.dim()];
    model.ansatz(&v, &mut u)?;
    Ok(u)
}

/// Ansatz states at every quadrature node, row-major `N_q × m`.
pub fn node_states<E: EntropyModel + ?Sized>(
    duals: &DualMatrix,
    space: &StochasticSpace,
    model: &E,
) -> Result<Vec<f64>, DualError> {
    let m = model.dim();
    let mut out = vec![0.0; space.nodes() * m];
    let mut v = vec![0.0; m];
    for q in 0..space.nodes() {
        duals.expand_at(space.table.row(q), &mut v);
        model.ansatz(&v, &mut out[q * m..(q + 1) * m])?;
    }
    Ok(out)
}

/// Moments `⟨φ s'_*(v̂ᵀφ)⟩` of the ansatz under the quadrature measure.
pub fn reconstruct_moments<E: EntropyModel + ?Sized>(
    duals: &DualMatrix,
    space: &StochasticSpace,
    model: &E,
) -> Result<MomentMatrix, DualError> {
    let states = node_states(duals, space, model)?;
    Ok(space.project_nodes(&states, model.dim()))
}
