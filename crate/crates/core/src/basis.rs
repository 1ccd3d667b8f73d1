//! Orthonormal Legendre polynomial chaos basis for a uniform random variable
//! on `[-1, 1]`, together with Gauss-Legendre quadrature of the probability
//! measure `dξ / 2`.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BasisError {
    #[error("basis order {order} outside 0..={max}")]
    OrderOutOfRange { order: usize, max: usize },
    #[error("evaluation point {0} outside [-1, 1]")]
    PointOutOfRange(f64),
    #[error("quadrature needs at least one node")]
    EmptyQuadrature,
    #[error("{0:?} basis is only available through its eigenvalues")]
    Unsupported(Family),
}

/// Polynomial families whose Sturm-Liouville eigenvalues are tabulated.
/// Only Legendre is supported for evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Legendre,
    Chebyshev,
    Hermite,
    Laguerre,
}

/// Eigenvalue `μ_i` of the Sturm-Liouville operator whose eigenfunctions are
/// the polynomials of `family`.
pub fn eigenvalue(family: Family, i: usize) -> f64 {
    let i = i as f64;
    match family {
        Family::Legendre => -i * (i + 1.0),
        Family::Chebyshev => -i * i,
        Family::Hermite => -2.0 * i,
        Family::Laguerre => -i,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasisSet {
    family: Family,
    degree: usize,
    eigenvalues: Vec<f64>,
}

impl BasisSet {
    pub fn legendre(degree: usize) -> Self {
        Self::new(Family::Legendre, degree)
    }

    pub fn new(family: Family, degree: usize) -> Self {
        let eigenvalues = (0..=degree).map(|i| eigenvalue(family, i)).collect();
        Self {
            family,
            degree,
            eigenvalues,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    /// Highest polynomial degree `N`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Number of basis functions, `N + 1`.
    pub fn len(&self) -> usize {
        self.degree + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal basis function `φ_i(ξ) = √(2i+1) P_i(ξ)`.
    pub fn eval(&self, i: usize, xi: f64) -> Result<f64, BasisError> {
        if self.family != Family::Legendre {
            return Err(BasisError::Unsupported(self.family));
        }
        if i > self.degree {
            return Err(BasisError::OrderOutOfRange {
                order: i,
                max: self.degree,
            });
        }
        if !(-1.0..=1.0).contains(&xi) {
            return Err(BasisError::PointOutOfRange(xi));
        }
        let mut p = vec![0.0; i + 1];
        legendre_values(xi, &mut p);
        Ok(p[i] * ((2 * i + 1) as f64).sqrt())
    }

    /// All orthonormal basis values at `xi`, written into `out[0..=N]`.
    pub fn eval_all(&self, xi: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), self.len());
        legendre_values(xi, out);
        for (i, v) in out.iter_mut().enumerate() {
            *v *= ((2 * i + 1) as f64).sqrt();
        }
    }

    /// Evaluation table `Φ[k][i] = φ_i(ξ_k)`, stored row-major.
    pub fn vandermonde(&self, quad: &QuadratureRule) -> Vandermonde {
        let cols = self.len();
        let mut data = vec![0.0; quad.len() * cols];
        for (k, &xi) in quad.nodes().iter().enumerate() {
            self.eval_all(xi, &mut data[k * cols..(k + 1) * cols]);
        }
        Vandermonde {
            rows: quad.len(),
            cols,
            data,
        }
    }
}

/// Unnormalized Legendre values `P_0(x) .. P_{len-1}(x)` by the three-term
/// recurrence `(n+1) P_{n+1} = (2n+1) x P_n - n P_{n-1}`.
pub fn legendre_values(x: f64, out: &mut [f64]) {
    if out.is_empty() {
        return;
    }
    out[0] = 1.0;
    if out.len() > 1 {
        out[1] = x;
    }
    for n in 1..out.len().saturating_sub(1) {
        let nf = n as f64;
        out[n + 1] = ((2.0 * nf + 1.0) * x * out[n] - nf * out[n - 1]) / (nf + 1.0);
    }
}

/// `P_n(x)` and `P_n'(x)`.
fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p1 = x;
    for k in 1..n {
        let kf = k as f64;
        let p2 = ((2.0 * kf + 1.0) * x * p1 - kf * p0) / (kf + 1.0);
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = nf * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Gauss-Legendre rule with weights normalized to the uniform probability
/// measure, so that `Σ w_k = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// `⟨f⟩ ≈ Σ_k w_k f(ξ_k)`.
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Probability-normalized `count`-point Gauss-Legendre rule. Nodes are the
/// roots of `P_count`, found by Newton iteration from Chebyshev-like guesses,
/// and returned in ascending order.
pub fn gauss_rule(count: usize) -> Result<QuadratureRule, BasisError> {
    if count == 0 {
        return Err(BasisError::EmptyQuadrature);
    }
    let n = count;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for k in 0..half {
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        // Standard weight 2 / ((1 - x²) P_n'²), halved for the probability measure.
        let w = 1.0 / ((1.0 - x * x) * dp * dp);
        nodes[k] = -x;
        nodes[n - 1 - k] = x;
        weights[k] = w;
        weights[n - 1 - k] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Dense table of basis values at quadrature nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Vandermonde {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Vandermonde {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Basis values `(φ_0(ξ_k), .., φ_N(ξ_k))` at node `k`.
    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }

    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.data[k * self.cols + i]
    }
}
