//! Flat `key = value` experiment configuration.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use fipm_core::euler::{GasParams, Primitive};
use fipm_core::fv::{Closure, GridConfig, UncertainShockIC};
use fipm_core::{FilterKind, FilterSpec};
use thiserror::Error;

/// Where a value came from, for error messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Override,
    Default,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Override => f.write_str("--set"),
            Origin::Default => f.write_str("default"),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("{origin}: expected `key = value`, got `{text}`")]
    Syntax { origin: Origin, text: String },
    #[error("{origin}: unknown key `{key}`")]
    UnknownKey { origin: Origin, key: String },
    #[error("{origin}: key `{key}` given twice")]
    Duplicate { origin: Origin, key: String },
    #[error("missing required key `{key}`")]
    Missing { key: String },
    #[error("{origin}: key `{key}`: {message}")]
    Invalid { origin: Origin, key: String, message: String },
    #[error("unknown preset or unreadable config `{0}`")]
    NotFound(String),
}

/// Every accepted key with its default; `None` marks required keys.
pub const KEYS: &[(&str, Option<&str>)] = &[
    ("name", Some("run")),
    ("a", Some("0")),
    ("b", Some("1")),
    ("cells", None),
    ("t_end", None),
    ("cfl", Some("0.5")),
    ("x0", Some("0.5")),
    ("sigma", Some("0.05")),
    ("rho_l", Some("1")),
    ("u_l", Some("0")),
    ("p_l", Some("1")),
    ("rho_r", Some("0.125")),
    ("u_r", Some("0")),
    ("p_r", Some("0.1")),
    ("gamma", Some("1.4")),
    ("degree", None),
    ("quad_nodes", None),
    ("closure", None),
    ("filter", Some("none")),
    ("filter_strength", Some("0")),
    ("filter_order", Some("2")),
    ("eta", Some("0")),
    ("tau", Some("1e-7")),
    ("max_iterations", Some("200")),
    ("output_root", Some("output")),
    ("seed", Some("0")),
    ("delta_region", Some("0.7,0.8")),
    ("reference_nodes", Some("100")),
    ("snapshots", Some("")),
    ("scan_filters", Some("exponential,fokker-planck")),
    ("scan_lambdas", Some("0.05,0.1,0.2,0.3")),
    ("scan_dt", Some("1")),
    ("scan_grid", Some("400")),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ScanConfig {
    pub filters: Vec<FilterKind>,
    /// Filter strengths; time-step-coupled filters raise their base function
    /// to `strength · dt`.
    pub lambdas: Vec<f64>,
    pub dt: f64,
    pub resolution: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub name: String,
    pub grid: GridConfig,
    pub left: Primitive,
    pub right: Primitive,
    pub x0: f64,
    pub sigma: f64,
    pub gas: GasParams,
    pub degree: usize,
    pub quad_nodes: usize,
    pub closure: Closure,
    pub filter: FilterSpec,
    /// Kept apart from `filter`, which drops it for order-free kinds.
    pub filter_order: f64,
    pub eta: f64,
    pub tau: f64,
    pub max_iterations: usize,
    pub output_root: PathBuf,
    pub seed: u64,
    pub delta_region: (f64, f64),
    pub reference_nodes: usize,
    pub snapshots: Vec<f64>,
    pub scan: ScanConfig,
}

type Entries = BTreeMap<String, (String, Origin)>;

fn insert(entries: &mut Entries, key: &str, value: &str, origin: Origin, allow_replace: bool) -> Result<(), ConfigError> {
    if !KEYS.iter().any(|(k, _)| *k == key) {
        return Err(ConfigError::UnknownKey {
            origin,
            key: key.to_string(),
        });
    }
    if !allow_replace && entries.contains_key(key) {
        return Err(ConfigError::Duplicate {
            origin,
            key: key.to_string(),
        });
    }
    entries.insert(key.to_string(), (value.to_string(), origin));
    Ok(())
}

fn split_pair(text: &str, origin: Origin) -> Result<(&str, &str), ConfigError> {
    match text.split_once('=') {
        Some((k, v)) if !k.trim().is_empty() => Ok((k.trim(), v.trim())),
        _ => Err(ConfigError::Syntax {
            origin,
            text: text.to_string(),
        }),
    }
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_config_with(text, &[])
}

/// Parse `text`, then apply `key=value` overrides on top.
pub fn parse_config_with(text: &str, overrides: &[String]) -> Result<ExperimentConfig, ConfigError> {
    let mut entries = Entries::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let origin = Origin::Line(n + 1);
        let (k, v) = split_pair(line, origin)?;
        insert(&mut entries, k, v, origin, false)?;
    }
    for o in overrides {
        let (k, v) = split_pair(o, Origin::Override)?;
        insert(&mut entries, k, v, Origin::Override, true)?;
    }
    build(&entries)
}

struct Reader<'a> {
    entries: &'a Entries,
}

impl Reader<'_> {
    fn raw(&self, key: &str) -> Result<(&str, Origin), ConfigError> {
        if let Some((v, o)) = self.entries.get(key) {
            return Ok((v.as_str(), *o));
        }
        match KEYS.iter().find(|(k, _)| *k == key) {
            Some((_, Some(d))) => Ok((d, Origin::Default)),
            _ => Err(ConfigError::Missing { key: key.to_string() }),
        }
    }

    fn invalid(&self, key: &str, message: impl Into<String>) -> ConfigError {
        let origin = self.entries.get(key).map_or(Origin::Default, |(_, o)| *o);
        ConfigError::Invalid {
            origin,
            key: key.to_string(),
            message: message.into(),
        }
    }

    fn parse<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<T, ConfigError> {
        let (v, _) = self.raw(key)?;
        v.parse().map_err(|_| self.invalid(key, format!("expected {what}, got `{v}`")))
    }

    fn float(&self, key: &str) -> Result<f64, ConfigError> {
        let x: f64 = self.parse(key, "a number")?;
        if x.is_finite() {
            Ok(x)
        } else {
            Err(self.invalid(key, "must be finite"))
        }
    }

    fn positive(&self, key: &str) -> Result<f64, ConfigError> {
        let x = self.float(key)?;
        if x > 0.0 {
            Ok(x)
        } else {
            Err(self.invalid(key, format!("must be positive, got {x}")))
        }
    }

    fn non_negative(&self, key: &str) -> Result<f64, ConfigError> {
        let x = self.float(key)?;
        if x >= 0.0 {
            Ok(x)
        } else {
            Err(self.invalid(key, format!("must be non-negative, got {x}")))
        }
    }

    fn list<T: std::str::FromStr>(&self, key: &str, what: &str) -> Result<Vec<T>, ConfigError> {
        let (v, _) = self.raw(key)?;
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|_| self.invalid(key, format!("expected a list of {what}, got `{s}`"))))
            .collect()
    }
}

fn build(entries: &Entries) -> Result<ExperimentConfig, ConfigError> {
    let r = Reader { entries };

    let a = r.float("a")?;
    let b = r.float("b")?;
    if !(b > a) {
        return Err(r.invalid("b", format!("domain [{a}, {b}] is empty")));
    }
    let cells: usize = r.parse("cells", "an integer")?;
    if cells < 3 {
        return Err(r.invalid("cells", "need at least 3 cells"));
    }
    let t_end = r.non_negative("t_end")?;
    let cfl = r.positive("cfl")?;
    if cfl > 1.0 {
        return Err(r.invalid("cfl", "must not exceed 1"));
    }

    let gamma = r.float("gamma")?;
    if !(gamma > 1.0) {
        return Err(r.invalid("gamma", "must exceed 1"));
    }
    let left = Primitive::new(r.positive("rho_l")?, r.float("u_l")?, r.positive("p_l")?);
    let right = Primitive::new(r.positive("rho_r")?, r.float("u_r")?, r.positive("p_r")?);
    let x0 = r.float("x0")?;
    let sigma = r.non_negative("sigma")?;
    if !(a < x0 - sigma && x0 + sigma < b) {
        return Err(r.invalid("sigma", format!("interface range [{}, {}] leaves the domain", x0 - sigma, x0 + sigma)));
    }

    let degree: usize = r.parse("degree", "an integer")?;
    let quad_nodes: usize = r.parse("quad_nodes", "an integer")?;
    if quad_nodes < degree + 1 {
        return Err(r.invalid("quad_nodes", format!("need at least degree + 1 = {} nodes", degree + 1)));
    }

    let closure: Closure = {
        let (v, _) = r.raw("closure")?;
        v.parse().map_err(|e: String| r.invalid("closure", e))?
    };
    let kind: FilterKind = {
        let (v, _) = r.raw("filter")?;
        v.parse().map_err(|e: fipm_core::FilterError| r.invalid("filter", e.to_string()))?
    };
    let strength = r.non_negative("filter_strength")?;
    let order = r.float("filter_order")?;
    let filter = filter_spec(kind, strength, order);
    if matches!(kind, FilterKind::Exponential | FilterKind::Erfc) && !(order >= 1.0) {
        return Err(r.invalid("filter_order", "must be at least 1"));
    }
    let eta = r.non_negative("eta")?;
    closure
        .check(&filter, eta)
        .map_err(|e| r.invalid("closure", e.to_string()))?;

    let tau = r.positive("tau")?;
    let max_iterations: usize = r.parse("max_iterations", "an integer")?;
    if max_iterations == 0 {
        return Err(r.invalid("max_iterations", "must be positive"));
    }

    let region: Vec<f64> = r.list("delta_region", "numbers")?;
    let delta_region = match region.as_slice() {
        [lo, hi] if lo < hi => (*lo, *hi),
        _ => return Err(r.invalid("delta_region", "expected `lo,hi` with lo < hi")),
    };
    let reference_nodes: usize = r.parse("reference_nodes", "an integer")?;
    if reference_nodes == 0 {
        return Err(r.invalid("reference_nodes", "must be positive"));
    }
    let snapshots: Vec<f64> = r.list("snapshots", "times")?;
    if snapshots.iter().any(|&s| !(0.0..=t_end).contains(&s)) {
        return Err(r.invalid("snapshots", "times must lie in [0, t_end]"));
    }

    let scan_filters: Vec<FilterKind> = {
        let (v, _) = r.raw("scan_filters")?;
        v.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| s.parse().map_err(|e: fipm_core::FilterError| r.invalid("scan_filters", e.to_string())))
            .collect::<Result<_, _>>()?
    };
    let scan_lambdas: Vec<f64> = r.list("scan_lambdas", "numbers")?;
    if scan_lambdas.iter().any(|l| !(*l >= 0.0)) {
        return Err(r.invalid("scan_lambdas", "strengths must be non-negative"));
    }
    let resolution: usize = r.parse("scan_grid", "an integer")?;
    if resolution == 0 {
        return Err(r.invalid("scan_grid", "must be positive"));
    }

    let name = r.raw("name")?.0.to_string();
    if name.is_empty() || name.contains(['/', '\\']) {
        return Err(r.invalid("name", "must be a non-empty plain file name"));
    }

    Ok(ExperimentConfig {
        name,
        grid: GridConfig { a, b, cells, t_end, cfl },
        left,
        right,
        x0,
        sigma,
        gas: GasParams { gamma },
        degree,
        quad_nodes,
        closure,
        filter,
        filter_order: order,
        eta,
        tau,
        max_iterations,
        output_root: PathBuf::from(r.raw("output_root")?.0),
        seed: r.parse("seed", "an unsigned integer")?,
        delta_region,
        reference_nodes,
        snapshots,
        scan: ScanConfig {
            filters: scan_filters,
            lambdas: scan_lambdas,
            dt: r.positive("scan_dt")?,
            resolution,
        },
    })
}

pub fn filter_spec(kind: FilterKind, strength: f64, order: f64) -> FilterSpec {
    match kind {
        FilterKind::None => FilterSpec::none(),
        FilterKind::L2 => FilterSpec::l2(strength),
        FilterKind::FokkerPlanck => FilterSpec::fokker_planck(strength),
        FilterKind::Exponential => FilterSpec::exponential(strength, order),
        FilterKind::Erfc => FilterSpec::erfc(strength, order),
    }
}

fn join<T: fmt::Display>(items: &[T]) -> String {
    items.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

impl ExperimentConfig {
    pub fn initial_condition(&self) -> UncertainShockIC {
        UncertainShockIC::from_primitive(self.left, self.right, self.x0, self.sigma, self.gas)
    }

    /// Canonical text of every key; parsing it reproduces `self`.
    pub fn to_text(&self) -> String {
        let pairs: Vec<(&str, String)> = vec![
            ("name", self.name.clone()),
            ("a", self.grid.a.to_string()),
            ("b", self.grid.b.to_string()),
            ("cells", self.grid.cells.to_string()),
            ("t_end", self.grid.t_end.to_string()),
            ("cfl", self.grid.cfl.to_string()),
            ("x0", self.x0.to_string()),
            ("sigma", self.sigma.to_string()),
            ("rho_l", self.left.density.to_string()),
            ("u_l", self.left.velocity.to_string()),
            ("p_l", self.left.pressure.to_string()),
            ("rho_r", self.right.density.to_string()),
            ("u_r", self.right.velocity.to_string()),
            ("p_r", self.right.pressure.to_string()),
            ("gamma", self.gas.gamma.to_string()),
            ("degree", self.degree.to_string()),
            ("quad_nodes", self.quad_nodes.to_string()),
            ("closure", self.closure.to_string()),
            ("filter", self.filter.kind.to_string()),
            ("filter_strength", self.filter.strength.to_string()),
            ("filter_order", self.filter_order.to_string()),
            ("eta", self.eta.to_string()),
            ("tau", self.tau.to_string()),
            ("max_iterations", self.max_iterations.to_string()),
            ("output_root", self.output_root.display().to_string()),
            ("seed", self.seed.to_string()),
            ("delta_region", format!("{},{}", self.delta_region.0, self.delta_region.1)),
            ("reference_nodes", self.reference_nodes.to_string()),
            ("snapshots", join(&self.snapshots)),
            ("scan_filters", join(&self.scan.filters)),
            ("scan_lambdas", join(&self.scan.lambdas)),
            ("scan_dt", self.scan.dt.to_string()),
            ("scan_grid", self.scan.resolution.to_string()),
        ];
        debug_assert_eq!(pairs.len(), KEYS.len());
        pairs.into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}
