//! Convex entropies `s(u)` and their Legendre duals `s_*(v)`.
//!
//! The closure ansatz is `u = s'_*(v) = (s')⁻¹(v)`, evaluated pointwise at
//! quadrature nodes with `v = v̂ᵀφ(ξ)`. Every model reports points outside
//! the domain of `s_*` as [`EntropyError::DualDomain`] so that line searches
//! can back off.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EntropyError {
    #[error("entropy variables {0:?} lie outside the dual domain")]
    DualDomain(Vec<f64>),
    #[error("state {0:?} is not admissible")]
    Inadmissible(Vec<f64>),
}

pub trait EntropyModel: Sync + Send {
    /// State dimension `m`.
    fn dim(&self) -> usize;

    fn entropy(&self, u: &[f64]) -> Result<f64, EntropyError>;

    /// Entropy variables `v = s'(u)`.
    fn entropy_variables(&self, u: &[f64], v: &mut [f64]) -> Result<(), EntropyError>;

    /// Legendre dual `s_*(v)`.
    fn dual_entropy(&self, v: &[f64]) -> Result<f64, EntropyError>;

    /// `u = s'_*(v)`.
    fn ansatz(&self, v: &[f64], u: &mut [f64]) -> Result<(), EntropyError>;

    /// Row-major `m × m` Jacobian of `s'_*` (the Hessian of `s_*`).
    fn ansatz_jacobian(&self, v: &[f64], jac: &mut [f64]) -> Result<(), EntropyError>;

    fn is_admissible(&self, u: &[f64]) -> bool;
}

/// Scalar `s(u) = u ln u` on `u > 0`; `s_*(v) = e^{v-1}`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LogEntropy;

impl EntropyModel for LogEntropy {
    fn dim(&self) -> usize {
        1
    }

    fn entropy(&self, u: &[f64]) -> Result<f64, EntropyError> {
        if !self.is_admissible(u) {
            return Err(EntropyError::Inadmissible(u.to_vec()));
        }
        Ok(u[0] * u[0].ln())
    }

    fn entropy_variables(&self, u: &[f64], v: &mut [f64]) -> Result<(), EntropyError> {
        if !self.is_admissible(u) {
            return Err(EntropyError::Inadmissible(u.to_vec()));
        }
        v[0] = u[0].ln() + 1.0;
        Ok(())
    }

    fn dual_entropy(&self, v: &[f64]) -> Result<f64, EntropyError> {
        finite_exp(v[0] - 1.0, v)
    }

    fn ansatz(&self, v: &[f64], u: &mut [f64]) -> Result<(), EntropyError> {
        u[0] = finite_exp(v[0] - 1.0, v)?;
        Ok(())
    }

    fn ansatz_jacobian(&self, v: &[f64], jac: &mut [f64]) -> Result<(), EntropyError> {
        jac[0] = finite_exp(v[0] - 1.0, v)?;
        Ok(())
    }

    fn is_admissible(&self, u: &[f64]) -> bool {
        u[0] > 0.0 && u[0].is_finite()
    }
}

fn finite_exp(x: f64, v: &[f64]) -> Result<f64, EntropyError> {
    let e = x.exp();
    if e.is_finite() && e > 0.0 {
        Ok(e)
    } else {
        Err(EntropyError::DualDomain(v.to_vec()))
    }
}

/// Scalar `s(u) = (u-a) ln(u-a) + (b-u) ln(b-u)` on `a < u < b`.
///
/// `s'_*(v) = a + (b-a) σ(v)` with the logistic `σ`, so every ansatz value
/// respects the bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundedLogEntropy {
    pub lower: f64,
    pub upper: f64,
}

impl BoundedLogEntropy {
    pub fn new(lower: f64, upper: f64) -> Self {
        assert!(lower < upper, "bounded entropy needs lower < upper");
        Self { lower, upper }
    }

    fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

fn logistic(v: f64) -> f64 {
    if v >= 0.0 {
        1.0 / (1.0 + (-v).exp())
    } else {
        let e = v.exp();
        e / (1.0 + e)
    }
}

fn softplus(v: f64) -> f64 {
    if v > 0.0 {
        v + (-v).exp().ln_1p()
    } else {
        v.exp().ln_1p()
    }
}

impl EntropyModel for BoundedLogEntropy {
    fn dim(&self) -> usize {
        1
    }

    fn entropy(&self, u: &[f64]) -> Result<f64, EntropyError> {
        if !self.is_admissible(u) {
            return Err(EntropyError::Inadmissible(u.to_vec()));
        }
        let (l, r) = (u[0] - self.lower, self.upper - u[0]);
        Ok(l * l.ln() + r * r.ln())
    }

    fn entropy_variables(&self, u: &[f64], v: &mut [f64]) -> Result<(), EntropyError> {
        if !self.is_admissible(u) {
            return Err(EntropyError::Inadmissible(u.to_vec()));
        }
        v[0] = ((u[0] - self.lower) / (self.upper - u[0])).ln();
        Ok(())
    }

    fn dual_entropy(&self, v: &[f64]) -> Result<f64, EntropyError> {
        if !v[0].is_finite() {
            return Err(EntropyError::DualDomain(v.to_vec()));
        }
        Ok(self.lower * v[0] + self.width() * (softplus(v[0]) - self.width().ln()))
    }

    fn ansatz(&self, v: &[f64], u: &mut [f64]) -> Result<(), EntropyError> {
        if !v[0].is_finite() {
            return Err(EntropyError::DualDomain(v.to_vec()));
        }
        u[0] = self.lower + self.width() * logistic(v[0]);
        Ok(())
    }

    fn ansatz_jacobian(&self, v: &[f64], jac: &mut [f64]) -> Result<(), EntropyError> {
        if !v[0].is_finite() {
            return Err(EntropyError::DualDomain(v.to_vec()));
        }
        let s = logistic(v[0]);
        jac[0] = self.width() * s * (1.0 - s);
        Ok(())
    }

    fn is_admissible(&self, u: &[f64]) -> bool {
        u[0] > self.lower && u[0] < self.upper
    }
}

/// Entropy of the 1D Euler equations in conserved variables `(ρ, ρv, ρE)`:
///
/// `s(u) = -ρ ln(ρ^{-γ} ε)` with internal energy density `ε = ρE - (ρv)²/(2ρ)`.
///
/// With `v = s'(u)`:
///
/// * `v₃ = -ρ/ε`, `v₂ = ρv/ε`, so velocity is `-v₂/v₃`
/// * `(γ-1) ln ρ = v₁ - γ - ln(-v₃) - v₂²/(2v₃)`
/// * `s_*(v) = (γ-1) ρ(v)`
///
/// The dual domain is `v₃ < 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerEntropy {
    pub gamma: f64,
}

impl EulerEntropy {
    pub fn new(gamma: f64) -> Self {
        assert!(gamma > 1.0, "gamma must exceed 1");
        Self { gamma }
    }

    fn log_density(&self, v: &[f64]) -> Result<f64, EntropyError> {
        let (v1, v2, v3) = (v[0], v[1], v[2]);
        if !(v3 < 0.0) || !v1.is_finite() || !v2.is_finite() {
            return Err(EntropyError::DualDomain(v.to_vec()));
        }
        let l = (v1 - self.gamma - (-v3).ln() - v2 * v2 / (2.0 * v3)) / (self.gamma - 1.0);
        // keep ρ and ρE representable
        if !(l.is_finite() && l.abs() < 600.0) {
            return Err(EntropyError::DualDomain(v.to_vec()));
        }
        Ok(l)
    }

    fn internal_energy(u: &[f64]) -> f64 {
        u[2] - u[1] * u[1] / (2.0 * u[0])
    }
}

impl Default for EulerEntropy {
    fn default() -> Self {
        Self::new(1.4)
    }
}

impl EntropyModel for EulerEntropy {
    fn dim(&self) -> usize {
        3
    }

    fn entropy(&self, u: &[f64]) -> Result<f64, EntropyError> {
        if !self.is_admissible(u) {
            return Err(EntropyError::Inadmissible(u.to_vec()));
        }
        let eps = Self::internal_energy(u);
        Ok(self.gamma * u[0] * u[0].ln() - u[0] * eps.ln())
    }

    fn entropy_variables(&self, u: &[f64], v: &mut [f64]) -> Result<(), EntropyError> {
        if !self.is_admissible(u) {
            return Err(EntropyError::Inadmissible(u.to_vec()));
        }
        let (rho, m) = (u[0], u[1]);
        let eps = Self::internal_energy(u);
        v[0] = self.gamma * rho.ln() + self.gamma - eps.ln() - m * m / (2.0 * rho * eps);
        v[1] = m / eps;
        v[2] = -rho / eps;
        Ok(())
    }

    fn dual_entropy(&self, v: &[f64]) -> Result<f64, EntropyError> {
        Ok((self.gamma - 1.0) * self.log_density(v)?.exp())
    }

    fn ansatz(&self, v: &[f64], u: &mut [f64]) -> Result<(), EntropyError> {
        let rho = self.log_density(v)?.exp();
        let vel = -v[1] / v[2];
        u[0] = rho;
        u[1] = rho * vel;
        u[2] = -rho / v[2] + 0.5 * rho * vel * vel;
        Ok(())
    }

    fn ansatz_jacobian(&self, v: &[f64], jac: &mut [f64]) -> Result<(), EntropyError> {
        // s_* = (γ-1) e^ℓ  ⇒  ∇²s_* = (γ-1) ρ (∇ℓ ∇ℓᵀ + ∇²ℓ)
        let rho = self.log_density(v)?.exp();
        let (v2, v3) = (v[1], v[2]);
        let g1 = self.gamma - 1.0;
        let grad = [
            1.0 / g1,
            -v2 / (v3 * g1),
            (-1.0 / v3 + v2 * v2 / (2.0 * v3 * v3)) / g1,
        ];
        let mut hess = [0.0; 9];
        hess[4] = -1.0 / (v3 * g1);
        hess[5] = v2 / (v3 * v3 * g1);
        hess[7] = hess[5];
        hess[8] = (1.0 / (v3 * v3) - v2 * v2 / (v3 * v3 * v3)) / g1;
        for a in 0..3 {
            for b in 0..3 {
                jac[3 * a + b] = g1 * rho * (grad[a] * grad[b] + hess[3 * a + b]);
            }
        }
        Ok(())
    }

    fn is_admissible(&self, u: &[f64]) -> bool {
        u[0] > 0.0 && Self::internal_energy(u) > 0.0 && u.iter().all(|x| x.is_finite())
    }
}
