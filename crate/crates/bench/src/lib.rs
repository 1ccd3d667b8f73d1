//! Shared fixtures for the benchmarks.

use fipm_core::euler::{Euler1d, GasParams, Primitive};
use fipm_core::fv::{project_ic, Closure, GridConfig, MomentField, Scheme, UncertainShockIC};
use fipm_core::{DualSolverConfig, EulerEntropy, FilterSpec, StochasticSpace};

/// Uncertain Sod problem on `cells` cells with an initialized dual field.
pub fn sod_scheme(cells: usize, degree: usize, quad_nodes: usize, closure: Closure, filter: FilterSpec, eta: f64) -> (Scheme, MomentField) {
    let gas = GasParams::default();
    let grid = GridConfig {
        a: 0.0,
        b: 1.0,
        cells,
        t_end: 0.14,
        cfl: 0.5,
    };
    let scheme = Scheme::new(
        grid,
        closure,
        filter,
        DualSolverConfig::default().with_regularization(eta),
        StochasticSpace::legendre(degree, quad_nodes).expect("valid rule"),
        Box::new(Euler1d::new(gas)),
        Box::new(EulerEntropy::new(gas.gamma)),
    )
    .expect("valid scheme");
    let ic = UncertainShockIC::from_primitive(
        Primitive::new(1.0, 0.0, 1.0),
        Primitive::new(0.125, 0.0, 0.1),
        0.5,
        0.05,
        gas,
    );
    let mut field = project_ic(&ic, &grid, scheme.space().basis());
    scheme.initialize(&mut field).expect("initial dual solve");
    (scheme, field)
}
