//! Expectation and variance of moment fields, oscillation metrics based on
//! second differences of the error, and CSV export.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::moments::MomentMatrix;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("grids do not match: {0}")]
    GridMismatch(String),
    #[error("metric region [{0}, {1}] is empty or outside the grid")]
    BadRegion(f64, f64),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Per-cell expectation and variance of every state component.
#[derive(Debug, Clone, PartialEq)]
pub struct StatField {
    /// Cell centers.
    pub x: Vec<f64>,
    /// `mean[k][j]` for component `k`, cell `j`.
    pub mean: Vec<Vec<f64>>,
    pub variance: Vec<Vec<f64>>,
}

impl StatField {
    pub fn zeros(x: Vec<f64>, comps: usize) -> Self {
        let n = x.len();
        Self {
            x,
            mean: vec![vec![0.0; n]; comps],
            variance: vec![vec![0.0; n]; comps],
        }
    }

    pub fn comps(&self) -> usize {
        self.mean.len()
    }

    pub fn cells(&self) -> usize {
        self.x.len()
    }

    fn check_compatible(&self, other: &StatField) -> Result<(), StatsError> {
        if self.cells() != other.cells() || self.comps() != other.comps() {
            return Err(StatsError::GridMismatch(format!(
                "{}x{} vs {}x{}",
                self.cells(),
                self.comps(),
                other.cells(),
                other.comps()
            )));
        }
        let spacing = grid_spacing(&self.x).max(f64::MIN_POSITIVE);
        if let Some(j) = self
            .x
            .iter()
            .zip(&other.x)
            .position(|(a, b)| (a - b).abs() > 1e-9 * spacing.max(1.0))
        {
            return Err(StatsError::GridMismatch(format!("cell {j} centers differ")));
        }
        Ok(())
    }
}

/// Column labels for state components.
pub fn component_names(comps: usize) -> Vec<String> {
    if comps == 3 {
        vec!["rho".into(), "m".into(), "E".into()]
    } else {
        (0..comps).map(|k| format!("u{k}")).collect()
    }
}

fn grid_spacing(x: &[f64]) -> f64 {
    if x.len() < 2 {
        1.0
    } else {
        (x[x.len() - 1] - x[0]) / (x.len() - 1) as f64
    }
}

/// `E_k = û_0k`, `Var_k = Σ_{i≥1} û_ik²` for an orthonormal basis.
pub fn stats_from_moments(x: &[f64], field: &[MomentMatrix]) -> StatField {
    let comps = field.first().map_or(0, |m| m.comps());
    let mut out = StatField::zeros(x.to_vec(), comps);
    for (j, m) in field.iter().enumerate() {
        for k in 0..comps {
            out.mean[k][j] = m[(0, k)];
            out.variance[k][j] = (1..m.rows()).map(|i| m[(i, k)].powi(2)).sum();
        }
    }
    out
}

/// Oscillation metrics of one component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaMetrics {
    pub delta_mean: f64,
    pub delta_variance: f64,
}

/// `√(Σ_j Δx (∂_xx e_j)²)` over cells whose centers lie in `[lo, hi]`, with
/// the central second difference `(e_{j-1} − 2e_j + e_{j+1}) / Δx²`. Cells
/// at either end of the grid, where the difference would be one-sided, are
/// skipped.
pub fn second_difference_norm(x: &[f64], error: &[f64], lo: f64, hi: f64) -> Result<f64, StatsError> {
    let n = x.len();
    if n < 3 || error.len() != n {
        return Err(StatsError::GridMismatch("need at least three matching cells".into()));
    }
    let dx = grid_spacing(x);
    let mut sum = 0.0;
    let mut used = 0;
    for j in 1..n - 1 {
        if x[j] < lo || x[j] > hi {
            continue;
        }
        let d2 = (error[j - 1] - 2.0 * error[j] + error[j + 1]) / (dx * dx);
        sum += dx * d2 * d2;
        used += 1;
    }
    if used == 0 {
        return Err(StatsError::BadRegion(lo, hi));
    }
    Ok(sum.sqrt())
}

/// `δ_E` and `δ_Var` of component `comp` over `region`, with the error taken
/// as reference minus numeric.
pub fn delta_metrics(
    numeric: &StatField,
    reference: &StatField,
    region: (f64, f64),
    comp: usize,
) -> Result<DeltaMetrics, StatsError> {
    numeric.check_compatible(reference)?;
    let e_mean: Vec<f64> = reference.mean[comp].iter().zip(&numeric.mean[comp]).map(|(r, n)| r - n).collect();
    let e_var: Vec<f64> = reference.variance[comp]
        .iter()
        .zip(&numeric.variance[comp])
        .map(|(r, n)| r - n)
        .collect();
    Ok(DeltaMetrics {
        delta_mean: second_difference_norm(&numeric.x, &e_mean, region.0, region.1)?,
        delta_variance: second_difference_norm(&numeric.x, &e_var, region.0, region.1)?,
    })
}

/// Summary comparison of one component against a reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Comparison {
    pub delta: DeltaMetrics,
    pub l1_mean: f64,
    pub l2_mean: f64,
    pub l1_var: f64,
    pub l2_var: f64,
}

pub fn compare(numeric: &StatField, reference: &StatField, region: (f64, f64), comp: usize) -> Result<Comparison, StatsError> {
    let delta = delta_metrics(numeric, reference, region, comp)?;
    let dx = grid_spacing(&numeric.x);
    let norms = |a: &[f64], b: &[f64]| {
        let l1: f64 = a.iter().zip(b).map(|(x, y)| dx * (x - y).abs()).sum();
        let l2: f64 = a.iter().zip(b).map(|(x, y)| dx * (x - y).powi(2)).sum::<f64>().sqrt();
        (l1, l2)
    };
    let (l1_mean, l2_mean) = norms(&reference.mean[comp], &numeric.mean[comp]);
    let (l1_var, l2_var) = norms(&reference.variance[comp], &numeric.variance[comp]);
    Ok(Comparison {
        delta,
        l1_mean,
        l2_mean,
        l1_var,
        l2_var,
    })
}

/// `x,mean_*,var_*` table.
pub fn stats_csv(field: &StatField) -> String {
    let names = component_names(field.comps());
    let mut out = String::from("x");
    for n in &names {
        let _ = write!(out, ",mean_{n},var_{n}");
    }
    out.push('\n');
    for j in 0..field.cells() {
        let _ = write!(out, "{:e}", field.x[j]);
        for k in 0..field.comps() {
            let _ = write!(out, ",{:e},{:e}", field.mean[k][j], field.variance[k][j]);
        }
        out.push('\n');
    }
    out
}

/// `x,err_mean_*,err_var_*` table of reference minus numeric.
pub fn errors_csv(numeric: &StatField, reference: &StatField) -> Result<String, StatsError> {
    numeric.check_compatible(reference)?;
    let names = component_names(numeric.comps());
    let mut out = String::from("x");
    for n in &names {
        let _ = write!(out, ",err_mean_{n},err_var_{n}");
    }
    out.push('\n');
    for j in 0..numeric.cells() {
        let _ = write!(out, "{:e}", numeric.x[j]);
        for k in 0..numeric.comps() {
            let _ = write!(
                out,
                ",{:e},{:e}",
                reference.mean[k][j] - numeric.mean[k][j],
                reference.variance[k][j] - numeric.variance[k][j]
            );
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn summary_csv(c: &Comparison) -> String {
    format!(
        "deltaE,deltaVar,l1_mean,l2_mean,l1_var,l2_var\n{:e},{:e},{:e},{:e},{:e},{:e}\n",
        c.delta.delta_mean, c.delta.delta_variance, c.l1_mean, c.l2_mean, c.l1_var, c.l2_var
    )
}

/// Write `reference.csv` and, when a numeric field is given, `stats.csv`,
/// `errors.csv`, and `summary.csv` (for component 0) into `dir`.
pub fn compare_and_export(
    numeric: Option<&StatField>,
    reference: &StatField,
    region: (f64, f64),
    dir: &Path,
) -> Result<Option<Comparison>, StatsError> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("reference.csv"), stats_csv(reference))?;
    let Some(numeric) = numeric else {
        return Ok(None);
    };
    std::fs::write(dir.join("stats.csv"), stats_csv(numeric))?;
    std::fs::write(dir.join("errors.csv"), errors_csv(numeric, reference)?)?;
    let cmp = compare(numeric, reference, region, 0)?;
    std::fs::write(dir.join("summary.csv"), summary_csv(&cmp))?;
    Ok(Some(cmp))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::BasisSet;
    use crate::closure::StochasticSpace;
    use proptest::prelude::*;

    fn grid(n: usize, a: f64, b: f64) -> Vec<f64> {
        let dx = (b - a) / n as f64;
        (0..n).map(|j| a + (j as f64 + 0.5) * dx).collect()
    }

    #[test]
    fn parseval_variance() {
        let m = MomentMatrix::from_rows(3, 1, vec![1.0, 0.3, 0.4]);
        let s = stats_from_moments(&[0.5], &[m]);
        assert_eq!(s.mean[0][0], 1.0);
        assert!((s.variance[0][0] - 0.25).abs() < 1e-15);
        let flat = stats_from_moments(&[0.5], &[MomentMatrix::constant(4, &[2.0, 3.0])]);
        assert_eq!(flat.variance, vec![vec![0.0], vec![0.0]]);
    }

    #[test]
    fn variance_matches_sampling() {
        let b = BasisSet::legendre(10);
        let space = StochasticSpace::legendre(10, 100).unwrap();
        let coeffs: Vec<f64> = (0..11).map(|i| ((i * 7 + 3) % 11) as f64 / 10.0 - 0.5).collect();
        let m = MomentMatrix::from_rows(11, 1, coeffs.clone());
        let q = space.quadrature();
        let mut phi = vec![0.0; 11];
        let samples: Vec<f64> = q
            .nodes()
            .iter()
            .map(|&xi| {
                b.eval_all(xi, &mut phi);
                phi.iter().zip(&coeffs).map(|(p, c)| p * c).sum()
            })
            .collect();
        let mean: f64 = q.weights().iter().zip(&samples).map(|(w, s)| w * s).sum();
        let var: f64 = q.weights().iter().zip(&samples).map(|(w, s)| w * (s - mean).powi(2)).sum();
        let s = stats_from_moments(&[0.0], &[m]);
        assert!((s.mean[0][0] - mean).abs() < 1e-12);
        assert!((s.variance[0][0] - var).abs() < 1e-12);
    }

    #[test]
    fn delta_fixtures() {
        let x = grid(100, 0.0, 1.0);
        let zero = vec![0.0; 100];
        assert_eq!(second_difference_norm(&x, &zero, 0.0, 1.0).unwrap(), 0.0);
        let lin: Vec<f64> = x.iter().map(|v| 3.0 * v - 1.0).collect();
        assert!(second_difference_norm(&x, &lin, 0.0, 1.0).unwrap() < 1e-9);
        // e = x² has second difference exactly 2; region [0.7, 0.8] holds 10 cells.
        let quad: Vec<f64> = x.iter().map(|v| v * v).collect();
        let d = second_difference_norm(&x, &quad, 0.7, 0.8).unwrap();
        assert!((d - 2.0 * 0.1f64.sqrt()).abs() < 1e-6, "{d}");
        assert!(second_difference_norm(&x, &quad, 2.0, 3.0).is_err());
    }

    #[test]
    fn delta_metrics_need_matching_grids() {
        let a = StatField::zeros(grid(10, 0.0, 1.0), 1);
        let b = StatField::zeros(grid(12, 0.0, 1.0), 1);
        assert!(matches!(delta_metrics(&a, &b, (0.0, 1.0), 0), Err(StatsError::GridMismatch(_))));
        let c = StatField::zeros(grid(10, 0.0, 2.0), 1);
        assert!(matches!(delta_metrics(&a, &c, (0.0, 1.0), 0), Err(StatsError::GridMismatch(_))));
        let m = delta_metrics(&a, &a, (0.0, 1.0), 0).unwrap();
        assert_eq!(m.delta_mean, 0.0);
        assert_eq!(m.delta_variance, 0.0);
    }

    #[test]
    fn export_identical_fields() {
        let mut f = StatField::zeros(grid(20, 0.0, 1.0), 3);
        for j in 0..20 {
            f.mean[0][j] = j as f64;
            f.variance[2][j] = 0.1 * j as f64;
        }
        let dir = std::env::temp_dir().join(format!("fipm-stats-{}", std::process::id()));
        let cmp = compare_and_export(Some(&f), &f, (0.0, 1.0), &dir).unwrap().unwrap();
        assert_eq!(cmp.l1_mean + cmp.l2_var + cmp.delta.delta_mean, 0.0);
        let errors = std::fs::read_to_string(dir.join("errors.csv")).unwrap();
        assert!(errors.starts_with("x,err_mean_rho,err_var_rho,err_mean_m"));
        for line in errors.lines().skip(1) {
            assert!(line.split(',').skip(1).all(|v| v.parse::<f64>().unwrap() == 0.0));
        }
        let only_ref = dir.join("ref-only");
        assert!(compare_and_export(None, &f, (0.0, 1.0), &only_ref).unwrap().is_none());
        assert!(only_ref.join("reference.csv").exists());
        assert!(!only_ref.join("stats.csv").exists());
        std::fs::remove_dir_all(&dir).unwrap();
    }

    proptest! {
        #[test]
        fn delta_is_absolutely_homogeneous(
            e in proptest::collection::vec(-1.0f64..1.0, 30), c in -5.0f64..5.0
        ) {
            let x = grid(30, 0.0, 1.0);
            let scaled: Vec<f64> = e.iter().map(|v| c * v).collect();
            let d = second_difference_norm(&x, &e, 0.0, 1.0).unwrap();
            let ds = second_difference_norm(&x, &scaled, 0.0, 1.0).unwrap();
            prop_assert!((ds - c.abs() * d).abs() <= 1e-9 * (1.0 + ds));
        }

        #[test]
        fn variance_ignores_sign_flips(
            rows in proptest::collection::vec(-2.0f64..2.0, 6), mask in 0u32..64
        ) {
            let m = MomentMatrix::from_rows(6, 1, rows.clone());
            let flipped: Vec<f64> = rows
                .iter()
                .enumerate()
                .map(|(i, v)| if i > 0 && mask & (1 << i) != 0 { -v } else { *v })
                .collect();
            let f = MomentMatrix::from_rows(6, 1, flipped);
            let a = stats_from_moments(&[0.0], &[m]);
            let b = stats_from_moments(&[0.0], &[f]);
            prop_assert_eq!(a.variance, b.variance);
            prop_assert_eq!(a.mean, b.mean);
        }
    }
}
