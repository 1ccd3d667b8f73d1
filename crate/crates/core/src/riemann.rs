//! Exact Riemann solver for the 1D Euler equations (ideal gas) and the
//! reference statistics of an uncertain shock tube built from it.

use thiserror::Error;

use crate::basis::gauss_rule;
use crate::euler::{GasParams, Primitive};
use crate::stats::StatField;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RiemannError {
    #[error("initial states must have positive density and pressure")]
    InvalidState,
    #[error("the initial data generate vacuum")]
    Vacuum,
    #[error("star-pressure iteration did not converge (last change {0:e})")]
    NotConverged(f64),
}

const MAX_ITERATIONS: usize = 100;
const PRESSURE_TOLERANCE: f64 = 1e-12;

/// Pressure and velocity in the star region between the nonlinear waves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StarRegion {
    pub pressure: f64,
    pub velocity: f64,
}

/// Shock or rarefaction branch of the pressure function for one side,
/// returning `(f_K(p), f_K'(p))`.
fn side_function(p: f64, side: &Primitive, gamma: f64) -> (f64, f64) {
    let c = side.sound_speed(GasParams { gamma });
    if p > side.pressure {
        let a = 2.0 / ((gamma + 1.0) * side.density);
        let b = (gamma - 1.0) / (gamma + 1.0) * side.pressure;
        let q = (a / (p + b)).sqrt();
        let f = (p - side.pressure) * q;
        let df = q * (1.0 - (p - side.pressure) / (2.0 * (b + p)));
        (f, df)
    } else {
        let ratio = p / side.pressure;
        let f = 2.0 * c / (gamma - 1.0) * (ratio.powf((gamma - 1.0) / (2.0 * gamma)) - 1.0);
        let df = ratio.powf(-(gamma + 1.0) / (2.0 * gamma)) / (side.density * c);
        (f, df)
    }
}

/// `f_L(p) + f_R(p) + (v_R − v_L)`, whose root is the star pressure.
pub fn pressure_function(p: f64, left: &Primitive, right: &Primitive, gamma: f64) -> f64 {
    side_function(p, left, gamma).0 + side_function(p, right, gamma).0 + right.velocity - left.velocity
}

fn check_states(left: &Primitive, right: &Primitive, gamma: f64) -> Result<(), RiemannError> {
    let ok = |w: &Primitive| w.density > 0.0 && w.pressure > 0.0 && w.density.is_finite() && w.pressure.is_finite();
    if !ok(left) || !ok(right) {
        return Err(RiemannError::InvalidState);
    }
    let gas = GasParams { gamma };
    let critical = 2.0 / (gamma - 1.0) * (left.sound_speed(gas) + right.sound_speed(gas));
    if critical <= right.velocity - left.velocity {
        return Err(RiemannError::Vacuum);
    }
    Ok(())
}

/// Newton iteration for the star pressure, started from the
/// two-rarefaction approximation.
pub fn star_region(left: &Primitive, right: &Primitive, gamma: f64) -> Result<StarRegion, RiemannError> {
    check_states(left, right, gamma)?;
    let gas = GasParams { gamma };
    let (cl, cr) = (left.sound_speed(gas), right.sound_speed(gas));
    let z = (gamma - 1.0) / (2.0 * gamma);
    let du = right.velocity - left.velocity;
    let guess = ((cl + cr - 0.5 * (gamma - 1.0) * du) / (cl / left.pressure.powf(z) + cr / right.pressure.powf(z)))
        .powf(1.0 / z);
    let mut p = guess.max(1e-12);
    let mut change = f64::INFINITY;
    for _ in 0..MAX_ITERATIONS {
        let (fl, dfl) = side_function(p, left, gamma);
        let (fr, dfr) = side_function(p, right, gamma);
        let mut next = p - (fl + fr + du) / (dfl + dfr);
        if next <= 0.0 {
            next = 0.5 * p;
        }
        change = 2.0 * (next - p).abs() / (next + p);
        p = next;
        if change < PRESSURE_TOLERANCE {
            let (fl, _) = side_function(p, left, gamma);
            let (fr, _) = side_function(p, right, gamma);
            let velocity = 0.5 * (left.velocity + right.velocity) + 0.5 * (fr - fl);
            return Ok(StarRegion { pressure: p, velocity });
        }
    }
    Err(RiemannError::NotConverged(change))
}

/// Self-similar solution `W(x/t)` of the Riemann problem at `zeta = x/t`.
pub fn exact_riemann(left: &Primitive, right: &Primitive, zeta: f64, gamma: f64) -> Result<Primitive, RiemannError> {
    let star = star_region(left, right, gamma)?;
    Ok(sample(left, right, &star, zeta, gamma))
}

/// Evaluate the wave pattern for a known star region.
pub fn sample(left: &Primitive, right: &Primitive, star: &StarRegion, s: f64, gamma: f64) -> Primitive {
    let gas = GasParams { gamma };
    let g1 = (gamma - 1.0) / (2.0 * gamma);
    let g2 = (gamma + 1.0) / (2.0 * gamma);
    let g4 = 2.0 / (gamma - 1.0);
    let g5 = 2.0 / (gamma + 1.0);
    let g6 = (gamma - 1.0) / (gamma + 1.0);
    let g7 = (gamma - 1.0) / 2.0;
    let (ps, us) = (star.pressure, star.velocity);

    if s <= us {
        let w = left;
        let c = w.sound_speed(gas);
        let ratio = ps / w.pressure;
        if ps > w.pressure {
            let shock = w.velocity - c * (g2 * ratio + g1).sqrt();
            if s <= shock {
                *w
            } else {
                Primitive::new(w.density * (ratio + g6) / (ratio * g6 + 1.0), us, ps)
            }
        } else {
            let head = w.velocity - c;
            if s <= head {
                return *w;
            }
            let c_star = c * ratio.powf(g1);
            let tail = us - c_star;
            if s > tail {
                Primitive::new(w.density * ratio.powf(1.0 / gamma), us, ps)
            } else {
                let base = g5 + g6 / c * (w.velocity - s);
                Primitive::new(
                    w.density * base.powf(g4),
                    g5 * (c + g7 * w.velocity + s),
                    w.pressure * base.powf(g4 * gamma),
                )
            }
        }
    } else {
        let w = right;
        let c = w.sound_speed(gas);
        let ratio = ps / w.pressure;
        if ps > w.pressure {
            let shock = w.velocity + c * (g2 * ratio + g1).sqrt();
            if s >= shock {
                *w
            } else {
                Primitive::new(w.density * (ratio + g6) / (ratio * g6 + 1.0), us, ps)
            }
        } else {
            let head = w.velocity + c;
            if s >= head {
                return *w;
            }
            let c_star = c * ratio.powf(g1);
            let tail = us + c_star;
            if s <= tail {
                Primitive::new(w.density * ratio.powf(1.0 / gamma), us, ps)
            } else {
                let base = g5 - g6 / c * (w.velocity - s);
                Primitive::new(
                    w.density * base.powf(g4),
                    g5 * (-c + g7 * w.velocity + s),
                    w.pressure * base.powf(g4 * gamma),
                )
            }
        }
    }
}

/// Mean and variance of the conserved variables of the shock tube whose
/// interface sits at `x0 + σξ`, `ξ ~ U(-1, 1)`, evaluated at the points `xs`
/// and time `t` with an `n_ref`-point Gauss-Legendre rule in `ξ`.
pub fn reference_statistics(
    xs: &[f64],
    t: f64,
    x0: f64,
    sigma: f64,
    left: &Primitive,
    right: &Primitive,
    n_ref: usize,
    gamma: f64,
) -> Result<StatField, RiemannError> {
    let star = star_region(left, right, gamma)?;
    let quad = gauss_rule(n_ref.max(1)).expect("non-empty rule");
    let gas = GasParams { gamma };
    let mut field = StatField::zeros(xs.to_vec(), 3);
    let mut samples = vec![[0.0; 3]; quad.len()];
    for (j, &x) in xs.iter().enumerate() {
        for (q, &xi) in quad.nodes().iter().enumerate() {
            let offset = x - x0 - sigma * xi;
            let w = if t > 0.0 {
                sample(left, right, &star, offset / t, gamma)
            } else if offset < 0.0 {
                *left
            } else {
                *right
            };
            samples[q] = w.to_conserved(gas).to_array();
        }
        for k in 0..3 {
            let mean: f64 = quad.weights().iter().zip(&samples).map(|(w, s)| w * s[k]).sum();
            let var: f64 = quad
                .weights()
                .iter()
                .zip(&samples)
                .map(|(w, s)| w * (s[k] - mean).powi(2))
                .sum();
            field.mean[k][j] = mean;
            field.variance[k][j] = var;
        }
    }
    Ok(field)
}

#[cfg(test)]
mod tests {
    use super::*;

    const G: f64 = 1.4;

    fn sod() -> (Primitive, Primitive) {
        (Primitive::new(1.0, 0.0, 1.0), Primitive::new(0.125, 0.0, 0.1))
    }

    /// Bisection on the pressure function, independent of the Newton path.
    fn bisect_star_pressure(l: &Primitive, r: &Primitive) -> f64 {
        let (mut lo, mut hi) = (1e-10, 10.0);
        assert!(pressure_function(lo, l, r, G) < 0.0 && pressure_function(hi, l, r, G) > 0.0);
        while hi - lo > 1e-10 {
            let mid = 0.5 * (lo + hi);
            if pressure_function(mid, l, r, G) > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn sod_star_pressure_matches_bisection() {
        let (l, r) = sod();
        let star = star_region(&l, &r, G).unwrap();
        let oracle = bisect_star_pressure(&l, &r);
        assert!((star.pressure - oracle).abs() < 1e-6);
        assert!((oracle - 0.30313).abs() < 1e-5);
        assert!((star.velocity - 0.92745).abs() < 1e-5);
    }

    #[test]
    fn uniform_state_is_preserved() {
        let w = Primitive::new(0.7, 0.3, 0.9);
        for s in [-5.0, -0.1, 0.0, 0.3, 10.0] {
            let got = exact_riemann(&w, &w, s, G).unwrap();
            assert!((got.density - w.density).abs() < 1e-12);
            assert!((got.velocity - w.velocity).abs() < 1e-12);
            assert!((got.pressure - w.pressure).abs() < 1e-12);
        }
    }

    #[test]
    fn far_field_returns_inputs() {
        let (l, r) = sod();
        assert_eq!(exact_riemann(&l, &r, -1e6, G).unwrap(), l);
        assert_eq!(exact_riemann(&l, &r, 1e6, G).unwrap(), r);
    }

    #[test]
    fn vacuum_and_invalid_states() {
        let l = Primitive::new(1.0, -20.0, 0.1);
        let r = Primitive::new(1.0, 20.0, 0.1);
        assert_eq!(star_region(&l, &r, G), Err(RiemannError::Vacuum));
        let bad = Primitive::new(-1.0, 0.0, 1.0);
        assert_eq!(star_region(&bad, &l, G), Err(RiemannError::InvalidState));
    }

    #[test]
    fn shock_and_contact_jump_conditions() {
        let (l, r) = sod();
        let gas = GasParams { gamma: G };
        let star = star_region(&l, &r, G).unwrap();
        // contact: pressure and velocity continuous
        let eps = 1e-9;
        let a = sample(&l, &r, &star, star.velocity - eps, G);
        let b = sample(&l, &r, &star, star.velocity + eps, G);
        assert!((a.pressure - b.pressure).abs() < 1e-8);
        assert!((a.velocity - b.velocity).abs() < 1e-8);
        assert!((a.density - b.density).abs() > 0.1);

        // right shock: s [u] = [f(u)]
        let c = r.sound_speed(gas);
        let ratio = star.pressure / r.pressure;
        let speed = r.velocity + c * ((G + 1.0) / (2.0 * G) * ratio + (G - 1.0) / (2.0 * G)).sqrt();
        let behind = sample(&l, &r, &star, speed - eps, G).to_conserved(gas);
        let ahead = sample(&l, &r, &star, speed + eps, G).to_conserved(gas);
        let fb = crate::euler::physical_flux(behind, gas).unwrap();
        let fa = crate::euler::physical_flux(ahead, gas).unwrap();
        let (ub, ua) = (behind.to_array(), ahead.to_array());
        for k in 0..3 {
            assert!((speed * (ub[k] - ua[k]) - (fb[k] - fa[k])).abs() < 1e-8, "component {k}");
        }
    }

    #[test]
    fn reference_statistics_basics() {
        let (l, r) = sod();
        let xs: Vec<f64> = (0..50).map(|j| (j as f64 + 0.5) / 50.0).collect();
        let det = reference_statistics(&xs, 0.14, 0.5, 0.0, &l, &r, 100, G).unwrap();
        assert!(det.variance.iter().flatten().all(|v| v.abs() < 1e-14));

        let unc = reference_statistics(&xs, 0.14, 0.5, 0.05, &l, &r, 100, G).unwrap();
        // far left of every wave
        assert!((unc.mean[0][0] - 1.0).abs() < 1e-14);
        assert!(unc.variance[0][0].abs() < 1e-14);
        let last = xs.len() - 1;
        assert!((unc.mean[0][last] - 0.125).abs() < 1e-14);
        // variance lives only where waves have passed
        let gas = GasParams { gamma: G };
        let head = -l.sound_speed(gas) * 0.14 + 0.5 - 0.05;
        for (j, &x) in xs.iter().enumerate() {
            if x < head - 0.02 {
                assert!(unc.variance[0][j] < 1e-14);
            }
        }
        assert!(unc.variance[0].iter().any(|v| *v > 1e-3));
    }
}
