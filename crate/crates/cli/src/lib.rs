//! Configuration, presets, and experiment drivers behind the `fipm` binary.

pub mod config;
pub mod experiment;
pub mod plot;

pub use config::{parse_config, parse_config_with, ConfigError, ExperimentConfig};
pub use experiment::{run_experiment, scan_figure1, simulate, sweep, RunError, Simulation};

/// Bundled preset configurations.
pub const PRESETS: &[(&str, &str)] = &[
    ("sod-ipm", include_str!("../presets/sod-ipm.cfg")),
    ("sod-ipm-desk", include_str!("../presets/sod-ipm-desk.cfg")),
    ("sod-ipm-regularized", include_str!("../presets/sod-ipm-regularized.cfg")),
    ("sod-ipm-regularized-desk", include_str!("../presets/sod-ipm-regularized-desk.cfg")),
    ("sod-fipm-exp", include_str!("../presets/sod-fipm-exp.cfg")),
    ("sod-fipm-exp-desk", include_str!("../presets/sod-fipm-exp-desk.cfg")),
    ("sod-fipm-fp", include_str!("../presets/sod-fipm-fp.cfg")),
    ("sod-fipm-fp-desk", include_str!("../presets/sod-fipm-fp-desk.cfg")),
    ("sod-highdensity", include_str!("../presets/sod-highdensity.cfg")),
    ("figure1-scan", include_str!("../presets/figure1-scan.cfg")),
];

pub fn preset(name: &str) -> Option<&'static str> {
    PRESETS.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}

/// Text of a config given as a file path or a preset name.
pub fn load_config_text(source: &str) -> Result<String, ConfigError> {
    match std::fs::read_to_string(source) {
        Ok(text) => Ok(text),
        Err(_) => preset(source)
            .map(str::to_string)
            .ok_or_else(|| ConfigError::NotFound(source.to_string())),
    }
}
