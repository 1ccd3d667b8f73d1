//! Deterministic physics: the 1D compressible Euler equations and a scalar
//! linear advection law, both behind [`ConservationLaw`].

use thiserror::Error;

/// Largest state dimension handled with stack scratch space.
pub const MAX_DIM: usize = 4;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhysicsError {
    #[error("inadmissible state {state:?}: {reason}")]
    Inadmissible { state: Vec<f64>, reason: &'static str },
}

fn inadmissible(u: &[f64], reason: &'static str) -> PhysicsError {
    PhysicsError::Inadmissible {
        state: u.to_vec(),
        reason,
    }
}

/// A hyperbolic conservation law `∂_t u + ∂_x f(u) = 0`.
pub trait ConservationLaw: Sync + Send {
    fn dim(&self) -> usize;

    fn flux(&self, u: &[f64], out: &mut [f64]) -> Result<(), PhysicsError>;

    /// Largest absolute characteristic speed at `u`.
    fn max_wavespeed(&self, u: &[f64]) -> Result<f64, PhysicsError>;

    fn is_admissible(&self, u: &[f64]) -> bool;

    /// Local Lax-Friedrichs (Rusanov) flux
    /// `½(f(u_L) + f(u_R)) − ½ max(a_L, a_R) (u_R − u_L)`.
    fn numerical_flux(&self, left: &[f64], right: &[f64], out: &mut [f64]) -> Result<(), PhysicsError> {
        let m = self.dim();
        let mut fl = [0.0; MAX_DIM];
        let mut fr = [0.0; MAX_DIM];
        self.flux(left, &mut fl[..m])?;
        self.flux(right, &mut fr[..m])?;
        let a = self.max_wavespeed(left)?.max(self.max_wavespeed(right)?);
        for k in 0..m {
            out[k] = 0.5 * (fl[k] + fr[k]) - 0.5 * a * (right[k] - left[k]);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GasParams {
    pub gamma: f64,
}

impl Default for GasParams {
    fn default() -> Self {
        Self { gamma: 1.4 }
    }
}

/// Conserved Euler state `(ρ, ρv, ρE)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedState {
    pub density: f64,
    pub momentum: f64,
    pub energy: f64,
}

impl ConservedState {
    pub fn new(density: f64, momentum: f64, energy: f64) -> Self {
        Self {
            density,
            momentum,
            energy,
        }
    }

    pub fn from_slice(u: &[f64]) -> Self {
        Self::new(u[0], u[1], u[2])
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.density, self.momentum, self.energy]
    }
}

/// Primitive Euler state `(ρ, v, p)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub density: f64,
    pub velocity: f64,
    pub pressure: f64,
}

impl Primitive {
    pub fn new(density: f64, velocity: f64, pressure: f64) -> Self {
        Self {
            density,
            velocity,
            pressure,
        }
    }

    pub fn to_conserved(self, gas: GasParams) -> ConservedState {
        let m = self.density * self.velocity;
        let e = self.pressure / (gas.gamma - 1.0) + 0.5 * m * self.velocity;
        ConservedState::new(self.density, m, e)
    }

    pub fn from_conserved(u: ConservedState, gas: GasParams) -> Result<Self, PhysicsError> {
        let p = pressure(u, gas)?;
        Ok(Self::new(u.density, u.momentum / u.density, p))
    }

    pub fn sound_speed(&self, gas: GasParams) -> f64 {
        (gas.gamma * self.pressure / self.density).sqrt()
    }
}

/// `p = (γ−1)(ρE − (ρv)²/(2ρ))`. Fails for non-positive density only; a
/// negative pressure is returned as is.
pub fn pressure(u: ConservedState, gas: GasParams) -> Result<f64, PhysicsError> {
    if !(u.density > 0.0) {
        return Err(inadmissible(&u.to_array(), "non-positive density"));
    }
    Ok((gas.gamma - 1.0) * (u.energy - u.momentum * u.momentum / (2.0 * u.density)))
}

fn admissible_pressure(u: ConservedState, gas: GasParams) -> Result<f64, PhysicsError> {
    let p = pressure(u, gas)?;
    if !(p > 0.0) || !p.is_finite() {
        return Err(inadmissible(&u.to_array(), "non-positive pressure"));
    }
    Ok(p)
}

/// `(ρv, ρv² + p, v(ρE + p))`
pub fn physical_flux(u: ConservedState, gas: GasParams) -> Result<[f64; 3], PhysicsError> {
    let p = admissible_pressure(u, gas)?;
    let v = u.momentum / u.density;
    Ok([u.momentum, u.momentum * v + p, v * (u.energy + p)])
}

/// `|v| + √(γp/ρ)`
pub fn max_wavespeed(u: ConservedState, gas: GasParams) -> Result<f64, PhysicsError> {
    let p = admissible_pressure(u, gas)?;
    Ok((u.momentum / u.density).abs() + (gas.gamma * p / u.density).sqrt())
}

pub fn numerical_flux(left: ConservedState, right: ConservedState, gas: GasParams) -> Result<[f64; 3], PhysicsError> {
    let mut out = [0.0; 3];
    Euler1d::new(gas).numerical_flux(&left.to_array(), &right.to_array(), &mut out)?;
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Euler1d {
    pub gas: GasParams,
}

impl Euler1d {
    pub fn new(gas: GasParams) -> Self {
        Self { gas }
    }
}

impl ConservationLaw for Euler1d {
    fn dim(&self) -> usize {
        3
    }

    fn flux(&self, u: &[f64], out: &mut [f64]) -> Result<(), PhysicsError> {
        out.copy_from_slice(&physical_flux(ConservedState::from_slice(u), self.gas)?);
        Ok(())
    }

    fn max_wavespeed(&self, u: &[f64]) -> Result<f64, PhysicsError> {
        max_wavespeed(ConservedState::from_slice(u), self.gas)
    }

    fn is_admissible(&self, u: &[f64]) -> bool {
        let s = ConservedState::from_slice(u);
        u.iter().all(|x| x.is_finite())
            && matches!(pressure(s, self.gas), Ok(p) if p > 0.0)
    }
}

/// Scalar `∂_t u + a ∂_x u = 0`. Every finite state is admissible.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearAdvection {
    pub velocity: f64,
}

impl ConservationLaw for LinearAdvection {
    fn dim(&self) -> usize {
        1
    }

    fn flux(&self, u: &[f64], out: &mut [f64]) -> Result<(), PhysicsError> {
        out[0] = self.velocity * u[0];
        Ok(())
    }

    fn max_wavespeed(&self, _u: &[f64]) -> Result<f64, PhysicsError> {
        Ok(self.velocity.abs())
    }

    fn is_admissible(&self, u: &[f64]) -> bool {
        u[0].is_finite()
    }
}
