use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use fipm_cli::config::parse_config;
use fipm_cli::experiment::{sweep, OUTPUT_ROOT_ENV};
use fipm_cli::{parse_config_with, preset, PRESETS};
use fipm_core::fv::Closure;
use fipm_core::FilterKind;
use proptest::prelude::*;

fn scratch(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("fipm-cli-{tag}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn fipm(args: &[&str], root: &PathBuf) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fipm"))
        .args(args)
        .env(OUTPUT_ROOT_ENV, root)
        .output()
        .unwrap()
}

#[test]
fn every_preset_parses() {
    for (name, text) in PRESETS {
        let cfg = parse_config(text).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(&cfg.name, name);
    }
}

#[test]
fn sod_ipm_golden_values() {
    let cfg = parse_config(preset("sod-ipm").unwrap()).unwrap();
    assert_eq!((cfg.grid.a, cfg.grid.b, cfg.grid.cells, cfg.grid.t_end), (0.0, 1.0, 2000, 0.14));
    assert_eq!((cfg.x0, cfg.sigma), (0.5, 0.05));
    assert_eq!((cfg.left.density, cfg.left.velocity, cfg.left.pressure), (1.0, 0.0, 1.0));
    assert_eq!((cfg.right.density, cfg.right.velocity, cfg.right.pressure), (0.125, 0.0, 0.1));
    assert_eq!(cfg.gas.gamma, 1.4);
    assert_eq!((cfg.degree, cfg.quad_nodes, cfg.tau), (10, 30, 1e-7));
    assert_eq!(cfg.closure, Closure::Ipm);
    assert_eq!(cfg.filter.kind, FilterKind::None);
    assert_eq!(cfg.eta, 0.0);
}

#[test]
fn filtered_presets_keep_their_filters() {
    let exp = parse_config(preset("sod-fipm-exp").unwrap()).unwrap();
    assert_eq!(exp.filter.kind, FilterKind::Exponential);
    assert_eq!(exp.closure, Closure::FilteredRegularized);
    let fp = parse_config(preset("sod-fipm-fp").unwrap()).unwrap();
    assert_eq!(fp.filter.kind, FilterKind::FokkerPlanck);
    assert_eq!(fp.closure, Closure::FilteredRealizable);
    let scan = parse_config(preset("figure1-scan").unwrap()).unwrap();
    assert_eq!(scan.filter_order, 7.0);
}

#[test]
fn dry_run_echoes_config() {
    let root = scratch("dry");
    let out = fipm(&["run", "sod-ipm", "--set", "cells=100", "--dry-run"], &root);
    assert!(out.status.success());
    let echoed = String::from_utf8(out.stdout).unwrap();
    let cfg = parse_config(&echoed).unwrap();
    assert_eq!(cfg.grid.cells, 100);
    assert!(fs::read_dir(&root).unwrap().next().is_none(), "dry run wrote files");
}

#[test]
fn bad_config_exits_2() {
    let root = scratch("bad");
    let out = fipm(&["run", "sod-ipm", "--set", "eta=-1", "--dry-run"], &root);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("eta"), "{err}");

    let out = fipm(&["run", "no-such-preset"], &root);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn stochastic_galerkin_breakdown_exits_3() {
    let root = scratch("sg");
    let out = fipm(&["run", "sod-ipm-desk", "--set", "closure=SG"], &root);
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("solver aborted"), "{err}");
}

#[test]
fn small_run_writes_artifacts() {
    let root = scratch("run");
    let out = fipm(
        &[
            "run",
            "sod-ipm-desk",
            "--set",
            "cells=60",
            "--set",
            "degree=2",
            "--set",
            "quad_nodes=6",
            "--set",
            "t_end=0.02",
            "--set",
            "snapshots=0.01",
        ],
        &root,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = root.join("sod-ipm-desk");
    for f in [
        "config.cfg",
        "moments.csv",
        "snapshot_t0.01.csv",
        "telemetry.csv",
        "stats.csv",
        "reference.csv",
        "errors.csv",
        "summary.csv",
        "plot.gp",
    ] {
        assert!(dir.join(f).is_file(), "missing {f}");
    }
    let stats = fs::read_to_string(dir.join("stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 61);
    let echoed = parse_config(&fs::read_to_string(dir.join("config.cfg")).unwrap()).unwrap();
    assert_eq!(echoed.grid.cells, 60);
}

#[test]
fn empty_sweep_is_fine() {
    let root = scratch("sweep-empty");
    let rows = sweep(preset("sod-ipm-desk").unwrap(), &[], "filter_strength", &[], &root).unwrap();
    assert!(rows.is_empty());
    let csv = fs::read_to_string(root.join("sweep.csv")).unwrap();
    assert_eq!(csv, "value,deltaE,deltaVar,runtime\n");

    let out = fipm(&["sweep", "sod-ipm-desk", "--key", "cells", "--values", ""], &root);
    assert!(out.status.success());
}

#[test]
fn sweep_records_failures() {
    let root = scratch("sweep-fail");
    let text = preset("sod-ipm-desk").unwrap();
    let base = ["cells=40", "degree=2", "quad_nodes=6", "t_end=0.01"].map(String::from);
    let rows = sweep(text, &base, "closure", &["IPM".into(), "SG".into()], &root).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].error.is_none() && rows[0].delta_e.is_finite());
    assert!(rows[1].error.is_some() && rows[1].delta_e.is_nan());

    let err = sweep(text, &base, "eta", &["-1".into()], &root).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn echo_is_a_fixed_point(
        cells in 3usize..5000,
        cfl in 0.05f64..1.0,
        sigma in 0.0f64..0.2,
        degree in 0usize..12,
        extra in 0usize..10,
        strength in 0.0f64..10.0,
        order in 1.0f64..16.0,
        eta in 1e-12f64..1.0,
    ) {
        let overrides: Vec<String> = vec![
            format!("cells={cells}"),
            format!("cfl={cfl}"),
            format!("sigma={sigma}"),
            format!("degree={degree}"),
            format!("quad_nodes={}", degree + 1 + extra),
            "closure=fIPM-regularized".into(),
            "filter=exponential".into(),
            format!("filter_strength={strength}"),
            format!("filter_order={order}"),
            format!("eta={eta}"),
        ];
        let cfg = parse_config_with(preset("sod-ipm").unwrap(), &overrides).unwrap();
        let again = parse_config(&cfg.to_text()).unwrap();
        prop_assert_eq!(&cfg, &again);
        prop_assert_eq!(again.to_text(), cfg.to_text());
    }
}
