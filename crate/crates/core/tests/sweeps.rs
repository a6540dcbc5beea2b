//! Sweep output shape, determinism, and the shipped figure recipes.

use std::path::{Path, PathBuf};

use aoi_cr::config_file::load_config;
use aoi_cr::par::Execution;
use aoi_cr::sim::Mode;
use aoi_cr::sweep::{run_sweep, write_csv, Engine, Param, SeedPolicy, SweepSpec, CSV_COLUMNS};
use aoi_cr::{Scheme, System, SystemConfig};

fn recipes() -> Vec<PathBuf> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../recipes");
    let mut out = Vec::new();
    for fig in std::fs::read_dir(&root).unwrap() {
        let fig = fig.unwrap().path();
        if fig.is_dir() {
            for f in std::fs::read_dir(&fig).unwrap() {
                let f = f.unwrap().path();
                if f.extension().is_some_and(|e| e == "conf") {
                    out.push(f);
                }
            }
        }
    }
    out.sort();
    out
}

fn small_spec() -> SweepSpec {
    let mut spec = SweepSpec::new(SystemConfig::default(), "p:0.1:0.9:5".parse().unwrap());
    spec.engines = Engine::ALL.to_vec();
    spec.slots = 50_000;
    spec.warmup = 1_000;
    spec.seed = 7;
    spec
}

fn csv_of(spec: &SweepSpec, exec: Execution) -> String {
    let rows = run_sweep(spec, exec).unwrap();
    let mut buf = Vec::new();
    write_csv(&rows, spec.with_exposure, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn every_recipe_parses_and_covers_figures_three_to_nine() {
    let all = recipes();
    for fig in 3..=9 {
        assert!(
            all.iter().any(|p| p.parent().unwrap().ends_with(format!("fig{fig}"))),
            "no recipe for figure {fig}"
        );
    }
    for path in &all {
        let rc = load_config(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        assert!(rc.sweep.is_some(), "{} has no sweep", path.display());
        assert_eq!(rc.system.n0_dbm, -80.0);
    }
}

#[test]
fn every_recipe_runs_analytically() {
    for path in recipes() {
        let rc = load_config(&path).unwrap();
        let mut spec = SweepSpec::new(rc.system, rc.sweep.unwrap());
        spec.engines = vec![Engine::Analytic, Engine::Asymptotic];
        spec.with_exposure = rc.with_exposure.unwrap_or(false);
        let rows = run_sweep(&spec, Execution::default()).unwrap();
        assert_eq!(rows.len(), spec.axis.steps * 2 * 2 * 2, "{}", path.display());
        for r in rows {
            assert!(r.breakdown.avg_peak >= 1.0, "{}: {r:?}", path.display());
        }
    }
}

#[test]
fn rows_are_ordered_by_point_scheme_engine_system() {
    let spec = small_spec();
    let rows = run_sweep(&spec, Execution::default()).unwrap();
    assert_eq!(rows.len(), 5 * 2 * 3 * 2);
    let mut i = 0;
    for v in spec.axis.values() {
        for scheme in Scheme::BOTH {
            for engine in Engine::ALL {
                for system in System::BOTH {
                    let r = &rows[i];
                    assert_eq!((r.value, r.scheme, r.engine, r.system), (v, scheme, engine, system));
                    assert_eq!(r.param, Param::P);
                    assert_eq!(r.stderr.is_some(), engine == Engine::Simulate);
                    i += 1;
                }
            }
        }
    }
}

#[test]
fn csv_is_byte_stable_and_independent_of_execution() {
    let spec = small_spec();
    let a = csv_of(&spec, Execution::default());
    let b = csv_of(&spec, Execution::default());
    let c = csv_of(&spec, Execution::Sequential);
    assert_eq!(a, b);
    assert_eq!(a, c);
    assert_eq!(a.lines().next().unwrap(), CSV_COLUMNS.join(","));
    // Analytic rows leave stderr and seed empty.
    let analytic = a.lines().find(|l| l.contains(",analytic,")).unwrap();
    assert!(analytic.ends_with(",,"), "{analytic}");
}

#[test]
fn seed_policy_controls_point_seeds() {
    let mut spec = small_spec();
    spec.engines = vec![Engine::Simulate];
    spec.schemes = vec![Scheme::Overlay];
    let seeds = |spec: &SweepSpec| -> Vec<u64> {
        run_sweep(spec, Execution::default())
            .unwrap()
            .iter()
            .step_by(2)
            .map(|r| r.seed.unwrap())
            .collect()
    };
    assert_eq!(seeds(&spec), vec![7, 8, 9, 10, 11]);
    spec.seed_policy = SeedPolicy::Fixed;
    assert_eq!(seeds(&spec), vec![7; 5]);
}

#[test]
fn exposure_column_is_opt_in() {
    let mut spec = small_spec();
    spec.mode = Mode::Abstract;
    let plain = csv_of(&spec, Execution::default());
    assert!(!plain.lines().next().unwrap().contains("exposure"));
    spec.with_exposure = true;
    let with = csv_of(&spec, Execution::default());
    let mut lines = with.lines();
    assert!(lines.next().unwrap().ends_with(",exposure"));
    for line in lines {
        let last = line.rsplit(',').next().unwrap();
        if line.contains(",overlay,analytic,") {
            assert_eq!(last, "0");
        }
        if line.contains(",asymptotic,") {
            assert_eq!(last, "");
        }
    }
}

#[test]
fn invalid_specs_are_rejected() {
    let mut spec = small_spec();
    spec.schemes.clear();
    assert!(run_sweep(&spec, Execution::default()).unwrap_err().is_validation());

    let mut spec = small_spec();
    spec.slots = spec.warmup;
    assert!(run_sweep(&spec, Execution::default()).unwrap_err().is_validation());

    // The grid leaves the valid rate range.
    let spec = SweepSpec::new(SystemConfig::default(), "q:0.5:1.5:3".parse().unwrap());
    assert!(run_sweep(&spec, Execution::default()).is_err());

    for bad in ["p:0.9:0.1:5", "p:0.1:0.9:1", "nope:0:1:3", "p:0.1:0.9"] {
        assert!(bad.parse::<aoi_cr::sweep::SweepAxis>().is_err(), "{bad}");
    }
}
