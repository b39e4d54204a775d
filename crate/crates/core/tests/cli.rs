//! End-to-end runs of the command-line front end on small configurations.

use std::fs;
use std::path::Path;

use serde_json::Value;
use superadiabatic::cli::{main_with_args, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK};
use tempfile::TempDir;

fn run(experiment: &str, out: &Path, flags: &[&str]) -> i32 {
    let mut args = vec!["superadiabatic".to_string(), experiment.to_string(), "-o".into(), out.display().to_string()];
    args.extend(flags.iter().map(|s| s.to_string()));
    main_with_args(args)
}

fn summary(dir: &Path) -> Value {
    serde_json::from_slice(&fs::read(dir.join("summary.json")).unwrap()).unwrap()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn validate(instance: &Value) {
    let schema: Value =
        serde_json::from_str(include_str!(concat!(env!("CARGO_MANIFEST_DIR"), "/schema/summary.schema.json"))).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(instance).map(|e| format!("{} at {}", e, e.instance_path)).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}\n{instance:#}");
}

/// Subcommand, flags, and each CSV file with its header.
type Case = (&'static str, &'static [&'static str], &'static [(&'static str, &'static str)]);

/// Small configurations covering every subcommand.
const CASES: &[Case] = &[
    ("spectrum", &["--points", "11"], &[("spectrum.csv", "tau,e1,e2,e3")]),
    (
        "controls",
        &["--points", "601"],
        &[("controls.csv", "tau,re_h12,im_h12,re_h23,im_h23,re_h13,im_h13")],
    ),
    (
        "controls",
        &["--model", "two-level", "--points", "21", "--tau-start", "-5", "--tau-end", "5"],
        &[("controls.csv", "tau,re_h12,im_h12")],
    ),
    ("tails", &[], &[("tails.csv", "tau,abs_h12,abs_h23,abs_h13")]),
    (
        "evolve",
        &["--epsilon", "2", "--control", "exact", "--tau-start", "-15", "--tau-end", "15", "--step", "0.005"],
        &[
            ("nonadiabaticity.csv", "tau,nonadiabaticity"),
            ("populations.csv", "tau,p1,p2,p3"),
            ("states.csv", "tau,re_c1,im_c1,re_c2,im_c2,re_c3,im_c3"),
        ],
    ),
    (
        "sweep-eps",
        &["--epsilons", "8,10,12,14,16", "--threshold-eps", "none", "--oscillation-count", "0"],
        &[("sweep.csv", "epsilon,separated-matrix,separated-field")],
    ),
    ("asym-tails", &["--points", "200"], &[("asym_tails.csv", "tau,abs_h13")]),
    ("lz-check", &["--tau-start", "-60", "--tau-end", "60"], &[("lz.csv", "tau,nonadiabaticity")]),
];

#[test]
fn every_subcommand_writes_valid_outputs() {
    for (experiment, flags, files) in CASES {
        let dir = TempDir::new().unwrap();
        let out = dir.path().join("out");
        assert_eq!(run(experiment, &out, flags), EXIT_OK, "{experiment} {flags:?}");
        let s = summary(&out);
        assert_eq!(s["experiment"], *experiment);
        validate(&s);
        for (name, expected) in *files {
            assert_eq!(header(&out.join(name)), *expected, "{experiment}: {name}");
        }
        let mut listed: Vec<_> = fs::read_dir(&out).unwrap().map(|e| e.unwrap().file_name()).collect();
        listed.sort();
        assert_eq!(listed.len(), files.len() + 1, "{experiment}: {listed:?}");
    }
}

#[test]
fn default_checks_pass_for_cheap_experiments() {
    for (experiment, flags) in [("tails", &[][..]), ("controls", &["--points", "601"][..]), ("asym-tails", &[][..])] {
        let dir = TempDir::new().unwrap();
        assert_eq!(run(experiment, dir.path(), flags), EXIT_OK);
        let s = summary(dir.path());
        let checks = s["checks"].as_array().unwrap();
        assert!(!checks.is_empty());
        assert!(checks.iter().all(|c| c["pass"] == true), "{experiment}: {s:#}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    let flags = ["--epsilon", "3", "--tau-start", "-10", "--tau-end", "10", "--step", "0.005"];
    assert_eq!(run("evolve", a.path(), &flags), EXIT_OK);
    assert_eq!(run("evolve", b.path(), &flags), EXIT_OK);
    for name in ["summary.json", "nonadiabaticity.csv", "populations.csv", "states.csv"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = TempDir::new().unwrap();
    let config = dir.path().join("run.cfg");
    fs::write(&config, "# small grid\nepsilon = 4\ndelta = 0.25\ntau-start = -8\ntau_end = 8\npoints = 5\n").unwrap();
    let out = dir.path().join("out");
    let code = run("spectrum", &out, &["-c", config.to_str().unwrap(), "--points", "7"]);
    assert_eq!(code, EXIT_OK);
    let s = summary(&out);
    assert_eq!(s["params"]["epsilon"], 4.0);
    assert_eq!(s["params"]["delta"], 0.25);
    assert_eq!(s["params"]["points"], 7);
    assert_eq!(s["params"]["window"], serde_json::json!([-8.0, 8.0]));
    let rows = fs::read_to_string(out.join("spectrum.csv")).unwrap();
    assert_eq!(rows.lines().count(), 8);
    assert!(rows.lines().nth(1).unwrap().starts_with("-8.0,"));
}

#[test]
fn configuration_errors_exit_2_without_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    let bad: &[(&str, &[&str])] = &[
        ("spectrum", &["--alpha", "0"]),
        ("spectrum", &["--delta", "-1"]),
        ("spectrum", &["--points", "2"]),
        ("spectrum", &["--epsilon", "abc"]),
        ("tails", &["--model", "two-level"]),
        ("tails", &["--fit-start", "10"]),
        ("asym-tails", &["--delta-alpha", "0"]),
        ("lz-check", &["--control", "separated-matrix"]),
        ("evolve", &["--control", "bogus"]),
        ("evolve", &["--initial-level", "3"]),
        ("sweep-eps", &["--epsilons", "1,-2"]),
        ("sweep-eps", &["--control", "exact"]),
        ("spectrum", &["--no-such-flag", "1"]),
    ];
    for (experiment, flags) in bad {
        assert_eq!(run(experiment, &out, flags), EXIT_CONFIG, "{experiment} {flags:?}");
        assert!(!out.join("summary.json").exists(), "{experiment} {flags:?}");
    }

    let config = dir.path().join("bad.cfg");
    fs::write(&config, "epsilon = 1\nbogus_key = 3\n").unwrap();
    assert_eq!(run("spectrum", &out, &["-c", config.to_str().unwrap()]), EXIT_CONFIG);
    assert_eq!(run("spectrum", &out, &["-c", dir.path().join("missing.cfg").to_str().unwrap()]), EXIT_CONFIG);
    assert!(!out.exists());
}

#[test]
fn numerical_failures_exit_3_without_outputs() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("out");
    // step * |H| far above the stability limit
    let too_large = ["--tau-start", "-50", "--tau-end", "50", "--step", "0.5"];
    assert_eq!(run("evolve", &out, &too_large), EXIT_NUMERICAL);
    // uncoupled levels cross exactly at tau = -2
    let degenerate = ["--epsilon", "2", "--delta", "0", "--control", "exact", "--tau-start", "-2", "--tau-end", "2"];
    assert_eq!(run("controls", &out, &[&degenerate[..], &["--points", "5"]].concat()), EXIT_NUMERICAL);
    // a coarse step that fails the halving comparison
    let halving = [
        "--model", "two-level", "--alpha", "100", "--delta", "2", "--control", "none", "--tau-start", "-0.05",
        "--tau-end", "0.05", "--step", "0.03", "--verify-step-halving", "true",
    ];
    assert_eq!(run("evolve", &out, &halving), EXIT_NUMERICAL);
    assert!(!out.exists());
}

#[test]
fn unwritable_output_leaves_no_partial_files() {
    let dir = TempDir::new().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "not a directory").unwrap();
    assert_eq!(run("spectrum", &blocker.join("out"), &["--points", "5"]), EXIT_CONFIG);

    // summary.json is written last; a directory in its place makes that write fail
    let out = dir.path().join("out");
    fs::create_dir_all(out.join("summary.json")).unwrap();
    assert_eq!(run("spectrum", &out, &["--points", "5"]), EXIT_CONFIG);
    assert!(!out.join("spectrum.csv").exists());
}

#[test]
fn help_and_version_exit_0() {
    assert_eq!(main_with_args(["superadiabatic", "--help"]), EXIT_OK);
    assert_eq!(main_with_args(["superadiabatic", "--version"]), EXIT_OK);
    assert_eq!(main_with_args(["superadiabatic"]), EXIT_CONFIG);
}
