//! The explicit realizable set of the scalar second-order moment problem on
//! `[-1, 1]`, scans of filter images, and samplers of realizable moments.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::basis::{gauss_rule, BasisSet};
use crate::filters::FilterSpec;
use crate::moments::MomentMatrix;

const SQRT3: f64 = 1.732_050_807_568_877_2;
const SQRT5: f64 = 2.236_067_977_499_79;

/// Legendre moments `(û0, û1, û2)` of a scalar density under the uniform
/// probability measure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTriple {
    pub gpc: [f64; 3],
}

impl MomentTriple {
    pub fn new(u0: f64, u1: f64, u2: f64) -> Self {
        Self { gpc: [u0, u1, u2] }
    }

    /// From monomial moments `m_k = E[ξ^k]` (scaled by the total mass).
    pub fn from_monomial(m: [f64; 3]) -> Self {
        Self::new(m[0], SQRT3 * m[1], SQRT5 * (3.0 * m[2] - m[0]) / 2.0)
    }

    pub fn monomial(&self) -> [f64; 3] {
        let [u0, u1, u2] = self.gpc;
        [u0, u1 / SQRT3, (2.0 * u2 / SQRT5 + u0) / 3.0]
    }

    pub fn from_moments(m: &MomentMatrix) -> Self {
        assert!(m.rows() >= 3 && m.comps() == 1, "need scalar moments of order >= 2");
        Self::new(m[(0, 0)], m[(1, 0)], m[(2, 0)])
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::new(c * self.gpc[0], c * self.gpc[1], c * self.gpc[2])
    }

    pub fn filtered(&self, gains: [f64; 3]) -> Self {
        Self::new(gains[0] * self.gpc[0], gains[1] * self.gpc[1], gains[2] * self.gpc[2])
    }
}

/// Smallest slack of the three defining inequalities; positive iff realizable.
pub fn realizability_margin(t: MomentTriple) -> f64 {
    let [m0, m1, m2] = t.monomial();
    (m0 - m2).min(m2).min(m0 * m2 - m1 * m1)
}

/// `m0 > m2 > 0` and `m0·m2 > m1²`.
pub fn is_realizable_n2(t: MomentTriple) -> bool {
    let [m0, m1, m2] = t.monomial();
    m0 > m2 && m2 > 0.0 && m0 * m2 > m1 * m1
}

/// Uniform grid over the `û0 = 1` slice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanGrid {
    pub n1: usize,
    pub n2: usize,
    pub u1: (f64, f64),
    pub u2: (f64, f64),
}

impl Default for ScanGrid {
    /// The bounding box of the whole slice: `|m1| < 1` and `m1² < m2 < 1`.
    fn default() -> Self {
        Self {
            n1: 400,
            n2: 400,
            u1: (-SQRT3, SQRT3),
            u2: (-SQRT5 / 2.0, SQRT5),
        }
    }
}

impl ScanGrid {
    fn coord(range: (f64, f64), n: usize, k: usize) -> f64 {
        // cell centers, so the degenerate boundary itself is never sampled
        range.0 + (range.1 - range.0) * (k as f64 + 0.5) / n as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub u1: f64,
    pub u2: f64,
    pub inside_before: bool,
    pub inside_after: bool,
}

/// Filter `(1, û1, û2)` at every grid point with diagonal `gains`.
pub fn filter_image_scan(gains: [f64; 3], grid: &ScanGrid) -> Vec<ScanPoint> {
    (0..grid.n2)
        .into_par_iter()
        .flat_map_iter(|b| {
            let u2 = ScanGrid::coord(grid.u2, grid.n2, b);
            (0..grid.n1).map(move |a| {
                let u1 = ScanGrid::coord(grid.u1, grid.n1, a);
                let t = MomentTriple::new(1.0, u1, u2);
                ScanPoint {
                    u1,
                    u2,
                    inside_before: is_realizable_n2(t),
                    inside_after: is_realizable_n2(t.filtered(gains)),
                }
            })
        })
        .collect()
}

/// Gains `(g0, g1, g2)` of a filter for `N = 2`, `exponent_dt` multiplying
/// the strength of time-step-coupled filters.
pub fn scan_gains(spec: &FilterSpec, exponent_dt: f64) -> [f64; 3] {
    let g = spec.gains(2, exponent_dt);
    [g[0], g[1], g[2]]
}

/// Points that were realizable and left the set under the filter.
pub fn count_escapes(points: &[ScanPoint]) -> usize {
    points.iter().filter(|p| p.inside_before && !p.inside_after).count()
}

pub fn scan_csv(points: &[ScanPoint]) -> String {
    let mut out = String::from("u1,u2,inside_before,inside_after\n");
    for p in points {
        let _ = writeln!(out, "{:e},{:e},{},{}", p.u1, p.u2, p.inside_before as u8, p.inside_after as u8);
    }
    out
}

/// Bound on the coefficients of the generating log-density.
pub const SAMPLE_COEFF_BOUND: f64 = 1.5;

/// Moments of `n` densities `exp(Σ c_i φ_i)` with `c_i` uniform in
/// `[-1.5, 1.5]`, integrated with a 64-node Gauss rule.
pub fn sample_realizable(n: usize, order: usize, seed: u64) -> Vec<MomentMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let c: Vec<f64> = (0..=order)
                .map(|_| rng.gen_range(-SAMPLE_COEFF_BOUND..=SAMPLE_COEFF_BOUND))
                .collect();
            moments_of_exponential(&c, order)
        })
        .collect()
}

/// `⟨φ exp(cᵀφ)⟩` for a scalar density, truncated at `order`.
pub fn moments_of_exponential(c: &[f64], order: usize) -> MomentMatrix {
    let basis = BasisSet::legendre(order.max(c.len().saturating_sub(1)));
    let quad = gauss_rule(64).expect("64-node rule");
    let mut phi = vec![0.0; basis.len()];
    let mut out = MomentMatrix::zeros(order + 1, 1);
    for (&xi, &w) in quad.nodes().iter().zip(quad.weights()) {
        basis.eval_all(xi, &mut phi);
        let u = phi.iter().zip(c).map(|(p, ci)| p * ci).sum::<f64>().exp();
        for i in 0..=order {
            out.as_mut_slice()[i] += w * phi[i] * u;
        }
    }
    out
}
