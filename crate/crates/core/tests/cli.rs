use std::fs;
use std::path::Path;
use std::process::Command;

use eelab::cli::{parse_args, parse_config_text, CliError, EXIT_CONFIG, EXIT_OK};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_eelab"))
}

fn small_line_args(dir: &Path) -> Vec<String> {
    [
        "--half-width",
        "24",
        "--realizations",
        "12",
        "--m-list",
        "3,6",
        "--t-list",
        "2,5",
        "--t-grid",
        "1,2",
        "--r-max",
        "6",
        "--pairs",
        "1:-1,3:-1,5:-1",
        "--hcr-samples",
        "2000",
        "--output-dir",
    ]
    .iter()
    .map(|s| s.to_string())
    .chain([dir.display().to_string()])
    .collect()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string()
}

#[test]
fn config_file_syntax() {
    let v =
        parse_config_text("# comment\nhalf_width = 40  # trailing\n\nrealizations=10\n").unwrap();
    assert_eq!(v["half_width"], "40");
    assert_eq!(v["realizations"], "10");
    assert!(parse_config_text("no_such_key = 1").is_err());
    assert!(parse_config_text("half_width 40").is_err());
}

#[test]
fn flags_override_file_which_overrides_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("run.cfg");
    fs::write(&file, "half_width = 120\nrealizations = 10\n").unwrap();
    let cfg = parse_args([
        "eelab",
        "variance-scan",
        "--config",
        file.to_str().unwrap(),
        "--realizations",
        "7",
    ])
    .unwrap();
    assert_eq!(cfg.ensemble.geometry.half_width(), 120);
    assert_eq!(cfg.ensemble.realizations, 7);
    assert_eq!(cfg.ensemble.fermi_energy, 1.0);
    assert_eq!(cfg.m_list, vec![25, 50, 100]);
}

#[test]
fn bad_values_are_config_errors() {
    for args in [
        vec!["eelab", "variance-scan", "--realizations", "1"],
        vec!["eelab", "variance-scan", "--dimension", "3"],
        vec!["eelab", "variance-scan", "--fermi-energy", "-1"],
        vec!["eelab", "fractional-moments", "--s", "1.5"],
        vec!["eelab", "fractional-moments", "--eta", "0"],
        vec!["eelab", "variance-scan", "--density", "cauchy"],
    ] {
        match parse_args(&args) {
            Err(CliError::Run(e)) => assert_eq!(eelab::cli::exit_code(&e), EXIT_CONFIG, "{args:?}"),
            other => panic!("{args:?} gave {other:?}"),
        }
    }
    assert!(matches!(
        parse_args(["eelab", "variance-scan", "--bogus", "1"]),
        Err(CliError::Usage(_))
    ));
}

#[test]
fn help_lists_commands_and_keys() {
    let out = bin().arg("--help").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for c in eelab::cli::Command::ALL {
        assert!(text.contains(c.name()), "{}", c.name());
    }
    for k in eelab::cli::KEYS {
        assert!(text.contains(k.name), "{}", k.name);
    }
}

#[test]
fn binary_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let status = bin()
        .args(["variance-scan", "--realizations", "1"])
        .arg("--output-dir")
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_CONFIG));

    let status = bin()
        .arg("variance-scan")
        .args(small_line_args(dir.path()))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(EXIT_OK));
    assert!(dir.path().join("variance_scan.csv").exists());
    assert!(dir.path().join("variance-scan.manifest.json").exists());
}

#[test]
fn every_command_writes_its_files() {
    let dir = tempfile::tempdir().unwrap();
    let expected = [
        ("variance-scan", "variance_scan.csv", "M,L,n,mean_S,var_S,var_S_ci_lo,var_S_ci_hi,two_var_Sminus,A_bound"),
        ("shift-decay", "shift_decay.csv", "t,n,mean_St,ci_lo,ci_hi,eps_t"),
        ("hcr-bound", "hcr_bound.csv", "t,F,eps,A"),
        ("splitting", "splitting.csv", "M,n,median_abs_residual,mean_residual,ci_lo,ci_hi"),
        ("projection-decay", "projection_decay.csv", "r,n,mean_abs_P,ci_lo,ci_hi"),
        (
            "resolvent-check",
            "resolvent_check.csv",
            "realization,rank_one_rel_gap,weyl_residual,weyl_recurrence,decoupling_plus,decoupling_minus",
        ),
        ("fractional-moments", "fractional_moments.csv", "x,y,n,mean,ci_lo,ci_hi"),
        ("density-check", "density_check.csv", "t,F,J,jensen_bound,toy_lhs,toy_rhs,toy_stderr,toy_holds"),
    ];
    for (command, file, head) in expected {
        let mut args = vec!["eelab".to_string(), command.to_string()];
        args.extend(small_line_args(dir.path()));
        assert_eq!(eelab::cli::main_with_args(&args), EXIT_OK, "{command}");
        assert_eq!(header(&dir.path().join(file)), head);
        let manifest: serde_json::Value = serde_json::from_str(
            &fs::read_to_string(dir.path().join(format!("{command}.manifest.json"))).unwrap(),
        )
        .unwrap();
        assert_eq!(manifest["command"], command);
        assert_eq!(manifest["config"]["half_width"], "24");
    }
    assert!(dir.path().join("fractional_shift.csv").exists());

    let args = [
        "eelab",
        "area-law-2d",
        "--dimension",
        "2",
        "--half-width",
        "4",
        "--realizations",
        "6",
        "--m-list",
        "1,2",
        "--output-dir",
        dir.path().to_str().unwrap(),
    ];
    assert_eq!(eelab::cli::main_with_args(args), EXIT_OK);
    assert_eq!(
        header(&dir.path().join("area_law_2d.csv")),
        "M,L,n,mean_S_per_L,ci_lo,ci_hi,var_S_per_L,var_ci_lo,var_ci_hi"
    );
    let rows = fs::read_to_string(dir.path().join("area_law_2d.csv")).unwrap();
    assert_eq!(rows.lines().count(), 3);
}

#[test]
fn reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, threads) in [(a.path(), "1"), (b.path(), "4")] {
        let mut args = vec!["eelab".to_string(), "splitting".to_string()];
        args.extend(small_line_args(dir));
        args.extend(["--threads".to_string(), threads.to_string()]);
        assert_eq!(eelab::cli::main_with_args(&args), EXIT_OK);
    }
    assert_eq!(
        fs::read(a.path().join("splitting.csv")).unwrap(),
        fs::read(b.path().join("splitting.csv")).unwrap()
    );
}

#[test]
fn sample_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    for (command, file) in [
        ("variance-scan", "headline.cfg"),
        ("area-law-2d", "area_law_2d.cfg"),
    ] {
        let path = dir.join(file);
        let cfg = parse_args(["eelab", command, "--config", path.to_str().unwrap()]).unwrap();
        assert_eq!(cfg.ensemble.master_seed, 20240917);
    }
}
