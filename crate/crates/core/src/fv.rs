//! First-order finite-volume schemes for the moment system with explicit
//! Euler time stepping: stochastic Galerkin (optionally filtered) and the
//! entropy-based closure with a realizability-preserving or a regularized
//! filter step.

use std::fmt::Write as _;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::basis::{legendre_values, BasisSet};
use crate::closure::{node_states, reconstruct_moments, solve_dual, DualError, DualSolverConfig, StochasticSpace};
use crate::entropy::EntropyModel;
use crate::euler::{ConservationLaw, GasParams, PhysicsError, Primitive, MAX_DIM};
use crate::filters::{FilterError, FilterKind, FilterSpec};
use crate::moments::{DualMatrix, MomentMatrix};

#[derive(Debug, Error)]
pub enum FvError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error("incompatible scheme settings: {0}")]
    Incompatible(String),
    #[error(transparent)]
    Filter(#[from] FilterError),
    #[error("dual solve failed in cell {cell} at step {step}: {source}")]
    Dual {
        cell: usize,
        step: usize,
        #[source]
        source: DualError,
    },
    #[error("stochastic Galerkin ansatz inadmissible in cell {cell} at node {node} (step {step}): {state:?}")]
    SgBreakdown {
        cell: usize,
        node: usize,
        step: usize,
        state: Vec<f64>,
    },
    #[error("flux evaluation failed in cell {cell} at step {step}: {source}")]
    Physics {
        cell: usize,
        step: usize,
        #[source]
        source: PhysicsError,
    },
    #[error("non-positive time step {dt:e} at step {step}")]
    TimeStep { step: usize, dt: f64 },
}

/// Moment closure used by the scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Closure {
    Sg,
    FilteredSg,
    Ipm,
    /// Filter, dual solve without regularization, reconstruct, update.
    FilteredRealizable,
    /// Filter, regularized dual solve, update from the filtered moments.
    FilteredRegularized,
}

impl Closure {
    pub fn name(self) -> &'static str {
        match self {
            Closure::Sg => "SG",
            Closure::FilteredSg => "fSG",
            Closure::Ipm => "IPM",
            Closure::FilteredRealizable => "fIPM-realizable",
            Closure::FilteredRegularized => "fIPM-regularized",
        }
    }

    pub fn is_galerkin(self) -> bool {
        matches!(self, Closure::Sg | Closure::FilteredSg)
    }

    /// Settings that the closure cannot be combined with.
    pub fn check(self, filter: &FilterSpec, eta: f64) -> Result<(), FvError> {
        let bad = |msg: &str| Err(FvError::Incompatible(format!("{}: {msg}", self.name())));
        match self {
            Closure::Sg | Closure::Ipm if filter.kind != FilterKind::None => bad("takes no filter"),
            Closure::Sg if eta != 0.0 => bad("has no regularization"),
            Closure::FilteredSg if eta != 0.0 => bad("has no regularization"),
            Closure::Ipm if eta != 0.0 => bad("solves the unregularized dual (eta = 0)"),
            Closure::FilteredRealizable if filter.kind != FilterKind::FokkerPlanck => {
                bad("needs the fokker-planck filter")
            }
            Closure::FilteredRealizable if eta != 0.0 => bad("needs eta = 0"),
            Closure::FilteredRegularized if !(eta > 0.0) => bad("needs eta > 0"),
            _ => Ok(()),
        }
    }
}

impl FromStr for Closure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "sg" => Ok(Closure::Sg),
            "fsg" => Ok(Closure::FilteredSg),
            "ipm" => Ok(Closure::Ipm),
            "fipm-realizable" => Ok(Closure::FilteredRealizable),
            "fipm-regularized" => Ok(Closure::FilteredRegularized),
            other => Err(format!("unknown closure `{other}`")),
        }
    }
}

impl std::fmt::Display for Closure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridConfig {
    pub a: f64,
    pub b: f64,
    pub cells: usize,
    pub t_end: f64,
    pub cfl: f64,
}

impl GridConfig {
    pub fn validate(&self) -> Result<(), FvError> {
        if self.cells < 3 {
            return Err(FvError::Grid(format!("need at least 3 cells, got {}", self.cells)));
        }
        if !(self.b > self.a) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(FvError::Grid(format!("empty domain [{}, {}]", self.a, self.b)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(FvError::Grid(format!("bad end time {}", self.t_end)));
        }
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return Err(FvError::Grid(format!("CFL number {} outside (0, 1]", self.cfl)));
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        (self.b - self.a) / self.cells as f64
    }

    /// Center of extended cell `j`, where `0` and `cells + 1` are ghosts.
    pub fn extended_center(&self, j: usize) -> f64 {
        self.a + (j as f64 - 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (1..=self.cells).map(|j| self.extended_center(j)).collect()
    }
}

/// Two constant states separated by an interface at `x0 + σξ`, `ξ ~ U(-1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertainShockIC {
    pub left: Vec<f64>,
    pub right: Vec<f64>,
    pub x0: f64,
    pub sigma: f64,
}

impl UncertainShockIC {
    pub fn from_primitive(left: Primitive, right: Primitive, x0: f64, sigma: f64, gas: GasParams) -> Self {
        Self {
            left: left.to_conserved(gas).to_array().to_vec(),
            right: right.to_conserved(gas).to_array().to_vec(),
            x0,
            sigma,
        }
    }

    pub fn validate(&self, grid: &GridConfig) -> Result<(), FvError> {
        if self.left.len() != self.right.len() {
            return Err(FvError::Grid("left and right states differ in size".into()));
        }
        if !(self.sigma >= 0.0) {
            return Err(FvError::Grid(format!("sigma must be non-negative, got {}", self.sigma)));
        }
        if !(grid.a < self.x0 - self.sigma && self.x0 + self.sigma < grid.b) {
            return Err(FvError::Grid(format!(
                "interface range [{}, {}] must lie inside ({}, {})",
                self.x0 - self.sigma,
                self.x0 + self.sigma,
                grid.a,
                grid.b
            )));
        }
        Ok(())
    }

    /// Exact moments `⟨φ u_IC(x, ·)⟩` at a point.
    pub fn moments_at(&self, x: f64, degree: usize) -> MomentMatrix {
        let xi_star = if self.sigma > 0.0 {
            ((x - self.x0) / self.sigma).clamp(-1.0, 1.0)
        } else if x < self.x0 {
            -1.0
        } else {
            1.0
        };
        let comps = self.left.len();
        let mut p = vec![0.0; degree + 2];
        legendre_values(xi_star, &mut p);
        let mut out = MomentMatrix::zeros(degree + 1, comps);
        for k in 0..comps {
            let (ul, ur) = (self.left[k], self.right[k]);
            // u = u_R for ξ < ξ*, u_L for ξ > ξ*
            out[(0, k)] = ur + (ul - ur) * (1.0 - xi_star) / 2.0;
            for i in 1..=degree {
                let fi = (2 * i + 1) as f64;
                out[(i, k)] = 0.5 * fi.sqrt() * (ur - ul) * (p[i + 1] - p[i - 1]) / fi;
            }
        }
        out
    }
}

/// Moments in every cell including one ghost cell per side.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentField {
    /// Extended cells; index `0` and `len - 1` are the ghost cells.
    pub cells: Vec<MomentMatrix>,
    /// Dual variables of the last solve per extended cell, empty for
    /// Galerkin closures.
    pub duals: Vec<DualMatrix>,
    /// Frozen ghost moments.
    pub boundary: [MomentMatrix; 2],
}

impl MomentField {
    pub fn interior(&self) -> &[MomentMatrix] {
        &self.cells[1..self.cells.len() - 1]
    }

    pub fn interior_sum(&self) -> MomentMatrix {
        let first = &self.cells[1];
        let mut sum = MomentMatrix::zeros(first.rows(), first.comps());
        for c in self.interior() {
            sum.axpy(1.0, c);
        }
        sum
    }
}

/// Cell-center projection of the initial condition, ghosts included.
pub fn project_ic(ic: &UncertainShockIC, grid: &GridConfig, basis: &BasisSet) -> MomentField {
    let cells: Vec<MomentMatrix> = (0..grid.cells + 2)
        .map(|j| ic.moments_at(grid.extended_center(j), basis.degree()))
        .collect();
    let boundary = [cells[0].clone(), cells[grid.cells + 1].clone()];
    MomentField {
        cells,
        duals: Vec::new(),
        boundary,
    }
}

/// Kinetic flux `Σ_q w_q φ(ξ_q) f*(u_L(ξ_q), u_R(ξ_q))` from node states.
pub fn kinetic_flux_nodes(
    left: &[f64],
    right: &[f64],
    space: &StochasticSpace,
    law: &dyn ConservationLaw,
) -> Result<MomentMatrix, PhysicsError> {
    let m = law.dim();
    let mut out = MomentMatrix::zeros(space.moments(), m);
    let mut f = [0.0; MAX_DIM];
    for (q, &w) in space.quadrature().weights().iter().enumerate() {
        let r = q * m..(q + 1) * m;
        law.numerical_flux(&left[r.clone()], &right[r], &mut f[..m])?;
        out.accumulate_node(space.table(), q, w, &f[..m]);
    }
    Ok(out)
}

/// Kinetic flux between two entropy ansätze given by their duals.
pub fn kinetic_flux(
    left: &DualMatrix,
    right: &DualMatrix,
    space: &StochasticSpace,
    model: &dyn EntropyModel,
    law: &dyn ConservationLaw,
) -> Result<MomentMatrix, FvError> {
    let eval = |d: &DualMatrix| node_states(d, space, model).map_err(|source| FvError::Dual { cell: 0, step: 0, source });
    let (l, r) = (eval(left)?, eval(right)?);
    kinetic_flux_nodes(&l, &r, space, law).map_err(|source| FvError::Physics { cell: 0, step: 0, source })
}

/// Per-step diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct StepReport {
    pub step: usize,
    /// Time after the step.
    pub t: f64,
    pub dt: f64,
    pub total_newton_iters: usize,
    pub max_newton_iters: usize,
    pub max_grad_norm: f64,
    /// Sum over interior cells of the moments the update started from.
    pub base_sum: MomentMatrix,
    /// Fluxes through the left and right domain boundary.
    pub boundary_flux: [MomentMatrix; 2],
}

impl StepReport {
    /// `Σ_j û^{n+1}_j − base_sum + Δt/Δx (F_right − F_left)`, which vanishes
    /// for a conservative update.
    pub fn conservation_defect(&self, field: &MomentField, dx: f64) -> MomentMatrix {
        let mut d = field.interior_sum();
        d.axpy(-1.0, &self.base_sum);
        d.axpy(self.dt / dx, &self.boundary_flux[1]);
        d.axpy(-self.dt / dx, &self.boundary_flux[0]);
        d
    }
}

/// A finite-volume scheme for one conservation law and closure.
pub struct Scheme {
    pub grid: GridConfig,
    pub closure: Closure,
    pub filter: FilterSpec,
    pub solver: DualSolverConfig,
    space: StochasticSpace,
    law: Box<dyn ConservationLaw>,
    model: Box<dyn EntropyModel>,
}

/// Output of [`Scheme::prepare`]: the moments the update starts from and
/// the ansatz at every quadrature node, per extended cell.
struct Prepared {
    base: Vec<MomentMatrix>,
    states: Vec<Vec<f64>>,
    duals: Vec<DualMatrix>,
    iterations: Vec<usize>,
    grad_norms: Vec<f64>,
}

impl Scheme {
    pub fn new(
        grid: GridConfig,
        closure: Closure,
        filter: FilterSpec,
        solver: DualSolverConfig,
        space: StochasticSpace,
        law: Box<dyn ConservationLaw>,
        model: Box<dyn EntropyModel>,
    ) -> Result<Self, FvError> {
        grid.validate()?;
        filter.validate()?;
        solver.validate().map_err(|e| FvError::Incompatible(e.to_string()))?;
        closure.check(&filter, solver.regularization)?;
        if law.dim() != model.dim() || law.dim() > MAX_DIM {
            return Err(FvError::Incompatible(format!(
                "law has {} components, entropy {}",
                law.dim(),
                model.dim()
            )));
        }
        Ok(Self {
            grid,
            closure,
            filter,
            solver,
            space,
            law,
            model,
        })
    }

    pub fn space(&self) -> &StochasticSpace {
        &self.space
    }

    pub fn model(&self) -> &dyn EntropyModel {
        self.model.as_ref()
    }

    pub fn law(&self) -> &dyn ConservationLaw {
        self.law.as_ref()
    }

    fn filter_spec(&self) -> FilterSpec {
        match self.closure {
            Closure::Sg | Closure::Ipm => FilterSpec::none(),
            _ => self.filter,
        }
    }

    /// Solve the dual problem of the initial moments so that the first step
    /// has warm starts and a lagged time-step estimate. No-op for Galerkin.
    pub fn initialize(&self, field: &mut MomentField) -> Result<(), FvError> {
        if self.closure.is_galerkin() {
            field.duals.clear();
            return Ok(());
        }
        let duals: Result<Vec<DualMatrix>, FvError> = field
            .cells
            .par_iter()
            .enumerate()
            .map(|(j, u)| {
                let start = crate::closure::cold_start(u, self.model());
                solve_dual(u, &start, &self.solver, &self.space, self.model())
                    .map(|s| s.duals)
                    .map_err(|source| FvError::Dual { cell: j, step: 0, source })
            })
            .collect();
        field.duals = duals?;
        Ok(())
    }

    fn polynomial_states(&self, u: &MomentMatrix) -> Vec<f64> {
        let m = u.comps();
        let mut out = vec![0.0; self.space.nodes() * m];
        for q in 0..self.space.nodes() {
            u.expand_at(self.space.table().row(q), &mut out[q * m..(q + 1) * m]);
        }
        out
    }

    /// Largest wavespeed over the given node states.
    fn max_speed(&self, states: &[Vec<f64>], step: usize) -> Result<f64, FvError> {
        let m = self.law.dim();
        states
            .par_iter()
            .enumerate()
            .map(|(j, s)| {
                let mut a: f64 = 0.0;
                for (q, u) in s.chunks(m).enumerate() {
                    if self.closure.is_galerkin() && !self.law.is_admissible(u) {
                        return Err(FvError::SgBreakdown {
                            cell: j,
                            node: q,
                            step,
                            state: u.to_vec(),
                        });
                    }
                    a = a.max(
                        self.law
                            .max_wavespeed(u)
                            .map_err(|source| FvError::Physics { cell: j, step, source })?,
                    );
                }
                Ok(a)
            })
            .try_reduce(|| 0.0, |a, b| Ok(a.max(b)))
    }

    fn cfl_dt(&self, speed: f64) -> f64 {
        if speed > 0.0 {
            self.grid.cfl * self.grid.dx() / speed
        } else {
            f64::INFINITY
        }
    }

    /// Time step the scheme would take from `field`, estimated from the
    /// current ansatz. Used ahead of filtering by time-step-coupled filters.
    pub fn estimate_dt(&self, field: &MomentField, step: usize) -> Result<f64, FvError> {
        let states: Vec<Vec<f64>> = if self.closure.is_galerkin() {
            field.cells.par_iter().map(|u| self.polynomial_states(u)).collect()
        } else {
            field
                .duals
                .par_iter()
                .enumerate()
                .map(|(j, d)| {
                    node_states(d, &self.space, self.model()).map_err(|source| FvError::Dual { cell: j, step, source })
                })
                .collect::<Result<_, _>>()?
        };
        Ok(self.cfl_dt(self.max_speed(&states, step)?))
    }

    fn prepare(&self, field: &MomentField, dt: f64, step: usize) -> Result<Prepared, FvError> {
        let spec = self.filter_spec();
        let gains = spec.checked_gains(self.space.basis().degree(), if spec.dt_coupled { dt } else { 1.0 })?;
        let filtered: Vec<MomentMatrix> = field
            .cells
            .par_iter()
            .map(|u| crate::filters::apply_gains(&gains, u))
            .collect();

        if self.closure.is_galerkin() {
            let states: Vec<Vec<f64>> = filtered.par_iter().map(|u| self.polynomial_states(u)).collect();
            let m = self.law.dim();
            for (j, s) in states.iter().enumerate() {
                if let Some(q) = s.chunks(m).position(|u| !self.law.is_admissible(u)) {
                    return Err(FvError::SgBreakdown {
                        cell: j,
                        node: q,
                        step,
                        state: s[q * m..(q + 1) * m].to_vec(),
                    });
                }
            }
            let n = states.len();
            return Ok(Prepared {
                base: filtered,
                states,
                duals: Vec::new(),
                iterations: vec![0; n],
                grad_norms: vec![0.0; n],
            });
        }

        let model = self.model();
        let reconstruct = matches!(self.closure, Closure::Ipm | Closure::FilteredRealizable);
        let solved: Vec<(DualMatrix, MomentMatrix, Vec<f64>, usize, f64)> = filtered
            .into_par_iter()
            .enumerate()
            .map(|(j, ubar)| {
                let err = |source| FvError::Dual { cell: j, step, source };
                let start = field.duals.get(j).cloned().unwrap_or_else(|| crate::closure::cold_start(&ubar, model));
                let sol = solve_dual(&ubar, &start, &self.solver, &self.space, model).map_err(err)?;
                let states = node_states(&sol.duals, &self.space, model).map_err(err)?;
                let base = if reconstruct {
                    self.space.project_nodes(&states, model.dim())
                } else {
                    ubar
                };
                Ok((sol.duals, base, states, sol.iterations, sol.grad_norm))
            })
            .collect::<Result<_, FvError>>()?;

        let mut out = Prepared {
            base: Vec::with_capacity(solved.len()),
            states: Vec::with_capacity(solved.len()),
            duals: Vec::with_capacity(solved.len()),
            iterations: Vec::with_capacity(solved.len()),
            grad_norms: Vec::with_capacity(solved.len()),
        };
        for (d, b, s, it, g) in solved {
            out.duals.push(d);
            out.base.push(b);
            out.states.push(s);
            out.iterations.push(it);
            out.grad_norms.push(g);
        }
        Ok(out)
    }

    /// Advance `field` by one step of at most `max_dt`. Returns the step
    /// report; `field` is left untouched on error.
    pub fn step(&self, field: &mut MomentField, step: usize, t: f64, max_dt: f64) -> Result<StepReport, FvError> {
        let coupled = self.filter_spec().dt_coupled;
        let mut dt = f64::INFINITY;
        if coupled {
            if !self.closure.is_galerkin() && field.duals.len() != field.cells.len() {
                self.initialize(field)?;
            }
            dt = self.estimate_dt(field, step)?.min(max_dt);
        }
        let prepared = self.prepare(field, dt, step)?;
        if !coupled {
            dt = self.cfl_dt(self.max_speed(&prepared.states, step)?).min(max_dt);
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(FvError::TimeStep { step, dt });
        }

        let n = field.cells.len();
        let fluxes: Vec<MomentMatrix> = (0..n - 1)
            .into_par_iter()
            .map(|j| {
                kinetic_flux_nodes(&prepared.states[j], &prepared.states[j + 1], &self.space, self.law())
                    .map_err(|source| FvError::Physics { cell: j, step, source })
            })
            .collect::<Result<_, _>>()?;

        let ratio = dt / self.grid.dx();
        let mut cells = prepared.base.clone();
        cells[1..n - 1].par_iter_mut().enumerate().for_each(|(i, u)| {
            // interior cell i + 1 sits between interfaces i and i + 1
            u.axpy(-ratio, &fluxes[i + 1]);
            u.axpy(ratio, &fluxes[i]);
        });
        cells[0] = field.boundary[0].clone();
        cells[n - 1] = field.boundary[1].clone();

        let mut base_sum = MomentMatrix::zeros(cells[0].rows(), cells[0].comps());
        for b in &prepared.base[1..n - 1] {
            base_sum.axpy(1.0, b);
        }

        field.cells = cells;
        field.duals = prepared.duals;
        Ok(StepReport {
            step,
            t: t + dt,
            dt,
            total_newton_iters: prepared.iterations.iter().sum(),
            max_newton_iters: prepared.iterations.iter().copied().max().unwrap_or(0),
            max_grad_norm: prepared.grad_norms.iter().copied().fold(0.0, f64::max),
            base_sum,
            boundary_flux: [fluxes[0].clone(), fluxes[n - 2].clone()],
        })
    }

    /// March from `t = 0` to `t_end`, landing exactly on `t_end` and on every
    /// requested snapshot time.
    pub fn run(&self, mut field: MomentField, snapshot_times: &[f64]) -> Result<RunOutput, FvError> {
        let t_end = self.grid.t_end;
        let mut stops: Vec<f64> = snapshot_times.iter().copied().filter(|&s| s > 0.0 && s < t_end).collect();
        stops.sort_by(f64::total_cmp);
        stops.dedup();
        stops.push(t_end);

        let mut out = RunOutput {
            t: 0.0,
            reports: Vec::new(),
            snapshots: Vec::new(),
            field: field.clone(),
        };
        if snapshot_times.contains(&0.0) {
            out.snapshots.push((0.0, field.clone()));
        }
        self.initialize(&mut field)?;

        let mut t = 0.0;
        let mut step = 0;
        for &stop in &stops {
            while t < stop {
                step += 1;
                let report = self.step(&mut field, step, t, stop - t)?;
                // avoid a sliver step from rounding
                t = if stop - report.t <= 1e-12 * stop.max(1.0) { stop } else { report.t };
                out.reports.push(StepReport { t, ..report });
            }
            if stop < t_end || snapshot_times.contains(&t_end) {
                out.snapshots.push((stop, field.clone()));
            }
        }
        out.t = t;
        out.field = field;
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub field: MomentField,
    pub t: f64,
    pub reports: Vec<StepReport>,
    pub snapshots: Vec<(f64, MomentField)>,
}

/// `x,u{k}_mom{i}` table of the interior cells.
pub fn snapshot_csv(x: &[f64], field: &MomentField) -> String {
    let cells = field.interior();
    let (rows, comps) = (cells[0].rows(), cells[0].comps());
    let mut out = String::from("x");
    for k in 0..comps {
        for i in 0..rows {
            let _ = write!(out, ",u{k}_mom{i}");
        }
    }
    out.push('\n');
    for (xj, u) in x.iter().zip(cells) {
        let _ = write!(out, "{xj:e}");
        for k in 0..comps {
            for i in 0..rows {
                let _ = write!(out, ",{:e}", u[(i, k)]);
            }
        }
        out.push('\n');
    }
    out
}

pub fn telemetry_csv(reports: &[StepReport]) -> String {
    let mut out = String::from("step,t,dt,total_newton_iters,max_newton_iters,max_grad_norm\n");
    for r in reports {
        let _ = writeln!(
            out,
            "{},{:e},{:e},{},{},{:e}",
            r.step, r.t, r.dt, r.total_newton_iters, r.max_newton_iters, r.max_grad_norm
        );
    }
    out
}

/// Moments of every cell after a solve with the given duals, i.e. the
/// quadrature-realizable projection of the ansatz.
pub fn realizable_projection(
    duals: &[DualMatrix],
    space: &StochasticSpace,
    model: &dyn EntropyModel,
) -> Result<Vec<MomentMatrix>, DualError> {
    duals.iter().map(|d| reconstruct_moments(d, space, model)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entropy::{EulerEntropy, LogEntropy};
    use crate::euler::{Euler1d, LinearAdvection};

    fn grid(cells: usize, t_end: f64, cfl: f64) -> GridConfig {
        GridConfig {
            a: 0.0,
            b: 1.0,
            cells,
            t_end,
            cfl,
        }
    }

    fn sod_ic(sigma: f64) -> UncertainShockIC {
        UncertainShockIC::from_primitive(
            Primitive::new(1.0, 0.0, 1.0),
            Primitive::new(0.125, 0.0, 0.1),
            0.5,
            sigma,
            GasParams::default(),
        )
    }

    fn euler_scheme(closure: Closure, filter: FilterSpec, eta: f64, g: GridConfig, degree: usize) -> Scheme {
        Scheme::new(
            g,
            closure,
            filter,
            DualSolverConfig::default().with_regularization(eta),
            StochasticSpace::legendre(degree, 2 * degree + 4).unwrap(),
            Box::new(Euler1d::new(GasParams::default())),
            Box::new(EulerEntropy::default()),
        )
        .unwrap()
    }

    #[test]
    fn ic_projection_fixtures() {
        let ic = sod_ic(0.05);
        let far = ic.moments_at(0.2, 4);
        assert_eq!(far.row(0), ic.left.as_slice());
        assert!((1..5).all(|i| far.row(i).iter().all(|v| *v == 0.0)));
        let mid = ic.moments_at(0.5, 4);
        for k in 0..3 {
            assert!((mid[(0, k)] - 0.5 * (ic.left[k] + ic.right[k])).abs() < 1e-15);
        }
        // the moments agree with Gauss quadrature of the ξ-step
        let space = StochasticSpace::legendre(4, 200).unwrap();
        let x = 0.52;
        let xi_star = (x - 0.5) / 0.05;
        let exact = ic.moments_at(x, 4);
        let f = |xi: f64, k: usize, i: usize| {
            let mut phi = vec![0.0; 5];
            space.basis().eval_all(xi, &mut phi);
            let u = if xi > xi_star { ic.left[k] } else { ic.right[k] };
            phi[i] * u
        };
        for i in 0..5 {
            // integrate piecewise to keep the rule exact
            let lo = gauss_on(-1.0, xi_star, |xi| f(xi, 0, i));
            let hi = gauss_on(xi_star, 1.0, |xi| f(xi, 0, i));
            assert!((exact[(i, 0)] - (lo + hi)).abs() < 1e-13, "i={i}");
        }
        let step = sod_ic(0.0);
        assert_eq!(step.moments_at(0.49, 3).row(0), step.left.as_slice());
        assert_eq!(step.moments_at(0.51, 3).row(0), step.right.as_slice());
    }

    fn gauss_on(a: f64, b: f64, f: impl Fn(f64) -> f64) -> f64 {
        let q = crate::basis::gauss_rule(20).unwrap();
        q.nodes()
            .iter()
            .zip(q.weights())
            .map(|(x, w)| w * (b - a) * f(a + (b - a) * (x + 1.0) / 2.0))
            .sum::<f64>()
            / 2.0
    }

    #[test]
    fn kinetic_flux_consistency() {
        let space = StochasticSpace::legendre(3, 10).unwrap();
        let model = EulerEntropy::default();
        let law = Euler1d::new(GasParams::default());
        let mut v = vec![0.0; 3];
        model.entropy_variables(&[1.0, 0.3, 2.0], &mut v).unwrap();
        let mut d = DualMatrix::zeros(4, 3);
        d.row_mut(0).copy_from_slice(&v);
        let f = kinetic_flux(&d, &d, &space, &model, &law).unwrap();
        let mut exact = [0.0; 3];
        law.flux(&[1.0, 0.3, 2.0], &mut exact).unwrap();
        for k in 0..3 {
            assert!((f[(0, k)] - exact[k]).abs() < 1e-12);
        }
        assert!((1..4).all(|i| f.row(i).iter().all(|x| x.abs() < 1e-12)));
    }

    #[test]
    fn kinetic_flux_matches_direct_quadrature_for_advection() {
        let space = StochasticSpace::legendre(3, 8).unwrap();
        let law = LinearAdvection { velocity: -0.7 };
        let l: Vec<f64> = space.quadrature().nodes().iter().map(|x| 1.0 + x * x).collect();
        let r: Vec<f64> = space.quadrature().nodes().iter().map(|x| x.sin()).collect();
        let f = kinetic_flux_nodes(&l, &r, &space, &law).unwrap();
        let mut phi = vec![0.0; 4];
        for i in 0..4 {
            let mut direct = 0.0;
            for (q, (&x, &w)) in space.quadrature().nodes().iter().zip(space.quadrature().weights()).enumerate() {
                space.basis().eval_all(x, &mut phi);
                direct += w * phi[i] * (-0.7 * r[q]);
            }
            assert!((f[(i, 0)] - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_field_is_steady() {
        let ic = UncertainShockIC::from_primitive(
            Primitive::new(0.7, 0.2, 0.9),
            Primitive::new(0.7, 0.2, 0.9),
            0.5,
            0.1,
            GasParams::default(),
        );
        let g = grid(20, 0.05, 0.5);
        for (closure, filter, eta) in [
            (Closure::Ipm, FilterSpec::none(), 0.0),
            (Closure::FilteredRealizable, FilterSpec::fokker_planck(0.0), 0.0),
            (Closure::FilteredRegularized, FilterSpec::l2(0.0), 1e-7),
            (Closure::Sg, FilterSpec::none(), 0.0),
        ] {
            let s = euler_scheme(closure, filter, eta, g, 3);
            let field = project_ic(&ic, &g, s.space().basis());
            let out = s.run(field.clone(), &[]).unwrap();
            assert!((out.t - 0.05).abs() < 1e-15);
            for (a, b) in out.field.cells.iter().zip(&field.cells) {
                for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
                    assert!((x - y).abs() < 1e-7, "{closure}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn zero_end_time_returns_ic() {
        let g = grid(10, 0.0, 0.5);
        let s = euler_scheme(Closure::Ipm, FilterSpec::none(), 0.0, g, 2);
        let field = project_ic(&sod_ic(0.05), &g, s.space().basis());
        let out = s.run(field.clone(), &[]).unwrap();
        assert_eq!(out.field.cells, field.cells);
        assert!(out.reports.is_empty());
    }

    #[test]
    fn conservative_update_for_every_closure() {
        let g = grid(40, 0.02, 0.5);
        for (closure, filter, eta) in [
            (Closure::Ipm, FilterSpec::none(), 0.0),
            (Closure::FilteredRealizable, FilterSpec::fokker_planck(1e-3), 0.0),
            (Closure::FilteredRegularized, FilterSpec::exponential(2.0, 10.0), 1e-7),
        ] {
            let s = euler_scheme(closure, filter, eta, g, 3);
            let mut field = project_ic(&sod_ic(0.05), &g, s.space().basis());
            s.initialize(&mut field).unwrap();
            let mut t = 0.0;
            for n in 1..=5 {
                let r = s.step(&mut field, n, t, 1.0).unwrap();
                t = r.t;
                let d = r.conservation_defect(&field, g.dx());
                assert!(d.as_slice().iter().all(|x| x.abs() < 1e-11), "{closure}: {d:?}");
            }
        }
    }

    #[test]
    fn sg_advection_is_an_exact_shift_at_unit_cfl() {
        let g = grid(30, 0.1, 1.0);
        let space = StochasticSpace::legendre(2, 6).unwrap();
        let s = Scheme::new(
            g,
            Closure::Sg,
            FilterSpec::none(),
            DualSolverConfig::default(),
            space,
            Box::new(LinearAdvection { velocity: 1.0 }),
            Box::new(LogEntropy),
        )
        .unwrap();
        let ic = UncertainShockIC {
            left: vec![2.0],
            right: vec![1.0],
            x0: 0.3,
            sigma: 0.1,
        };
        let field = project_ic(&ic, &g, s.space().basis());
        let out = s.run(field.clone(), &[]).unwrap();
        assert_eq!(out.reports.len(), 3);
        // each moment row is transported independently by three cells
        for j in 4..=30 {
            let (a, b) = (&out.field.cells[j], &field.cells[j - 3]);
            // exact up to the rounding of the quadrature projection
            assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| (x - y).abs() < 1e-14));
        }
        let fsg = Scheme::new(
            g,
            Closure::FilteredSg,
            FilterSpec::none(),
            DualSolverConfig::default(),
            StochasticSpace::legendre(2, 6).unwrap(),
            Box::new(LinearAdvection { velocity: 1.0 }),
            Box::new(LogEntropy),
        )
        .unwrap();
        assert_eq!(fsg.run(field, &[]).unwrap().field, out.field);
    }

    #[test]
    fn sg_breaks_down_on_sod() {
        let g = grid(100, 0.14, 0.5);
        let s = euler_scheme(Closure::Sg, FilterSpec::none(), 0.0, g, 5);
        let field = project_ic(&sod_ic(0.05), &g, s.space().basis());
        match s.run(field, &[]) {
            Err(FvError::SgBreakdown { step, .. }) => assert!(step <= 2),
            other => panic!("expected breakdown, got {:?}", other.map(|o| o.t)),
        }
    }

    #[test]
    fn regularized_without_filter_tracks_ipm() {
        let g = grid(40, 0.02, 0.5);
        let ipm = euler_scheme(Closure::Ipm, FilterSpec::none(), 0.0, g, 3);
        let reg = euler_scheme(Closure::FilteredRegularized, FilterSpec::none(), 1e-7, g, 3);
        let field = project_ic(&sod_ic(0.05), &g, ipm.space().basis());
        let a = ipm.run(field.clone(), &[]).unwrap();
        let b = reg.run(field, &[]).unwrap();
        for (x, y) in a.field.cells.iter().zip(&b.field.cells) {
            for (p, q) in x.as_slice().iter().zip(y.as_slice()) {
                assert!((p - q).abs() < 1e-5, "{p} vs {q}");
            }
        }
    }

    #[test]
    fn incompatible_settings_are_rejected() {
        assert!(Closure::FilteredRealizable.check(&FilterSpec::exponential(1.0, 2.0), 0.0).is_err());
        assert!(Closure::FilteredRegularized.check(&FilterSpec::l2(1.0), 0.0).is_err());
        assert!(Closure::Ipm.check(&FilterSpec::l2(1.0), 0.0).is_err());
        assert!(Closure::FilteredRealizable.check(&FilterSpec::fokker_planck(1.0), 0.0).is_ok());
        assert_eq!("fIPM-regularized".parse::<Closure>().unwrap(), Closure::FilteredRegularized);
        assert!(GridConfig { cells: 2, ..grid(10, 1.0, 0.5) }.validate().is_err());
        assert!(GridConfig { cfl: 1.5, ..grid(10, 1.0, 0.5) }.validate().is_err());
        assert!(sod_ic(0.6).validate(&grid(10, 1.0, 0.5)).is_err());
    }

    #[test]
    fn snapshots_and_csv() {
        let g = grid(10, 0.02, 0.5);
        let s = euler_scheme(Closure::Ipm, FilterSpec::none(), 0.0, g, 2);
        let field = project_ic(&sod_ic(0.05), &g, s.space().basis());
        let out = s.run(field, &[0.0, 0.01, 0.02]).unwrap();
        let times: Vec<f64> = out.snapshots.iter().map(|s| s.0).collect();
        assert_eq!(times, vec![0.0, 0.01, 0.02]);
        assert!(out.reports.iter().any(|r| r.t == 0.01));
        let csv = snapshot_csv(&g.centers(), &out.field);
        assert!(csv.starts_with("x,u0_mom0,u0_mom1,u0_mom2,u1_mom0"));
        assert_eq!(csv.lines().count(), 11);
        let tel = telemetry_csv(&out.reports);
        assert!(tel.starts_with("step,t,dt,total_newton_iters,max_newton_iters,max_grad_norm\n"));
    }
}
