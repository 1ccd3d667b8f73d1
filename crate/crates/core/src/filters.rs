//! Diagonal moment filters. A filter scales moment row `i` by a gain
//! `g_i ∈ (0, 1]`, identically for every state component.

use thiserror::Error;

use crate::basis::{eigenvalue, Family};
use crate::moments::MomentMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FilterError {
    #[error("unknown filter kind `{0}`")]
    UnknownKind(String),
    #[error("filter strength must be finite and non-negative, got {0}")]
    BadStrength(f64),
    #[error("filter order must be at least 1, got {0}")]
    BadOrder(f64),
    #[error("time-step-coupled filter needs a positive time step, got {0}")]
    BadTimeStep(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterKind {
    None,
    /// `1 / (1 + λ i²(i+1)²)`
    L2,
    /// `exp(c (i/N)^α)^{λΔt}` with `c = ln ε_M`
    Exponential,
    /// `[½ erfc(2√α (i/N − ½))]^{λΔt}`
    Erfc,
    /// `exp(μ_i λ)`, realizability preserving
    FokkerPlanck,
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            FilterKind::None => "none",
            FilterKind::L2 => "l2",
            FilterKind::Exponential => "exponential",
            FilterKind::Erfc => "erfc",
            FilterKind::FokkerPlanck => "fokker-planck",
        }
    }
}

impl std::str::FromStr for FilterKind {
    type Err = FilterError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(FilterKind::None),
            "l2" => Ok(FilterKind::L2),
            "exponential" | "exp" => Ok(FilterKind::Exponential),
            "erfc" => Ok(FilterKind::Erfc),
            "fokker-planck" | "fokkerplanck" | "fp" => Ok(FilterKind::FokkerPlanck),
            other => Err(FilterError::UnknownKind(other.to_string())),
        }
    }
}

impl std::fmt::Display for FilterKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// `ln ε_M` for double precision.
pub fn machine_log_epsilon() -> f64 {
    f64::EPSILON.ln()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterSpec {
    pub kind: FilterKind,
    pub strength: f64,
    pub order: f64,
    /// Exponential and Erfc raise their base function to `λΔt` instead of `λ`.
    pub dt_coupled: bool,
}

impl FilterSpec {
    pub fn none() -> Self {
        Self {
            kind: FilterKind::None,
            strength: 0.0,
            order: 1.0,
            dt_coupled: false,
        }
    }

    pub fn l2(strength: f64) -> Self {
        Self {
            kind: FilterKind::L2,
            strength,
            ..Self::none()
        }
    }

    pub fn fokker_planck(strength: f64) -> Self {
        Self {
            kind: FilterKind::FokkerPlanck,
            strength,
            ..Self::none()
        }
    }

    pub fn exponential(strength: f64, order: f64) -> Self {
        Self {
            kind: FilterKind::Exponential,
            strength,
            order,
            dt_coupled: true,
        }
    }

    pub fn erfc(strength: f64, order: f64) -> Self {
        Self {
            kind: FilterKind::Erfc,
            strength,
            order,
            dt_coupled: true,
        }
    }

    pub fn validate(&self) -> Result<(), FilterError> {
        if !(self.strength.is_finite() && self.strength >= 0.0) {
            return Err(FilterError::BadStrength(self.strength));
        }
        if matches!(self.kind, FilterKind::Exponential | FilterKind::Erfc)
            && !(self.order >= 1.0)
        {
            return Err(FilterError::BadOrder(self.order));
        }
        Ok(())
    }

    fn exponent(&self, dt: f64) -> f64 {
        if self.dt_coupled {
            self.strength * dt
        } else {
            self.strength
        }
    }

    /// Gain `g_i` for moment order `i` out of `max_order = N`. `dt` only
    /// matters for time-step-coupled Exponential and Erfc filters.
    pub fn gain(&self, i: usize, max_order: usize, dt: f64) -> f64 {
        let fi = i as f64;
        match self.kind {
            FilterKind::None => 1.0,
            FilterKind::L2 => 1.0 / (1.0 + self.strength * fi * fi * (fi + 1.0) * (fi + 1.0)),
            FilterKind::FokkerPlanck => (eigenvalue(Family::Legendre, i) * self.strength).exp(),
            FilterKind::Exponential => {
                let zeta = relative_order(i, max_order);
                (self.exponent(dt) * machine_log_epsilon() * zeta.powf(self.order)).exp()
            }
            FilterKind::Erfc => {
                let zeta = relative_order(i, max_order);
                let h = 0.5 * libm::erfc(2.0 * self.order.sqrt() * (zeta.abs() - 0.5));
                (self.exponent(dt) * h.ln()).exp()
            }
        }
    }

    pub fn gains(&self, max_order: usize, dt: f64) -> Vec<f64> {
        (0..=max_order).map(|i| self.gain(i, max_order, dt)).collect()
    }

    /// Scale row `i` of `moments` by `g_i`.
    pub fn apply(&self, moments: &MomentMatrix, dt: f64) -> MomentMatrix {
        let gains = self.gains(moments.rows() - 1, dt);
        apply_gains(&gains, moments)
    }

    pub fn checked_gains(&self, max_order: usize, dt: f64) -> Result<Vec<f64>, FilterError> {
        self.validate()?;
        if self.dt_coupled
            && matches!(self.kind, FilterKind::Exponential | FilterKind::Erfc)
            && !(dt > 0.0)
        {
            return Err(FilterError::BadTimeStep(dt));
        }
        Ok(self.gains(max_order, dt))
    }
}

fn relative_order(i: usize, max_order: usize) -> f64 {
    if max_order == 0 {
        0.0
    } else {
        i as f64 / max_order as f64
    }
}

pub fn apply_gains(gains: &[f64], moments: &MomentMatrix) -> MomentMatrix {
    debug_assert_eq!(gains.len(), moments.rows());
    let mut out = moments.clone();
    for (i, &g) in gains.iter().enumerate() {
        out.row_mut(i).iter_mut().for_each(|v| *v *= g);
    }
    out
}
