use std::path::Path;
use std::process::{Command, Output};

use catqts::cli::{exit_code, RunConfig, SimSection, EXIT_CONFIG, EXIT_NUMERICAL};
use catqts::Error;
use proptest::prelude::*;

const SMALL: &str = "\
[sim]
g_t_int = 0.1
t_int_s = 1e-6
kappa_tau_c = 0.5
beta_sq = 0.3
mean_atoms = 2
n_max = 12
seed = 5
burn_in_s = 1e-5
duration_s = 4e-5
";

fn catqts(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_catqts")).args(args).current_dir(dir).output().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn config_text_round_trips(
        g in 0.01f64..0.5,
        beta_sq in 0.01f64..0.49,
        kt in prop::option::of(1e-4f64..1.0),
        atoms in 0.5f64..10.0,
        n_max in prop::option::of(4usize..80),
        seed in any::<u64>(),
        mode in prop::option::of(prop::sample::select(vec!["poisson", "paired", "staggered"])),
    ) {
        let mut cfg = RunConfig::default();
        cfg.sim = SimSection {
            g_t_int: Some(g),
            t_int_s: Some(1e-6),
            kappa_tau_c: kt,
            beta_sq: Some(beta_sq),
            mean_atoms: Some(atoms),
            n_max,
            seed: Some(seed),
            injection_mode: mode.map(String::from),
            ..Default::default()
        };
        let text = cfg.serialize();
        let back = RunConfig::parse(&text).unwrap();
        prop_assert_eq!(&back.sim, &cfg.sim);
        prop_assert_eq!(back.serialize(), text);
    }
}

#[test]
fn unknown_key_reports_its_line() {
    let err = RunConfig::parse("[sim]\nbeta_sq = 0.3\nbeta = 0.2\n").unwrap_err();
    match err {
        Error::Config { line, .. } => assert_eq!(line, 3),
        e => panic!("unexpected {e:?}"),
    }
}

#[test]
fn error_classes_map_to_exit_codes() {
    assert_eq!(exit_code(&Error::Config { line: 1, msg: String::new() }), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::InvalidParameter(String::new())), EXIT_CONFIG);
    assert_eq!(exit_code(&Error::VacuumSubtraction), 1);
    assert_eq!(exit_code(&Error::Positivity(-1e-3)), EXIT_NUMERICAL);
}

#[test]
fn invalid_pump_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), SMALL.replace("beta_sq = 0.3", "beta_sq = 0.55")).unwrap();
    let out = catqts(tmp.path(), &["steady", "--config", "c.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 5"));
}

#[test]
fn missing_config_exits_with_config_code() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(catqts(tmp.path(), &["herald"]).status.code(), Some(2));
}

#[test]
fn steady_writes_data_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    std::fs::write(tmp.path().join("c.toml"), SMALL).unwrap();
    let out = catqts(tmp.path(), &["steady", "--config", "c.toml", "--trajectories", "3", "--seed", "9"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let dir = tmp.path().join("out");
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "steady");
    assert_eq!(manifest["master_seed"], 9);
    assert_eq!(manifest["trajectory_seeds"].as_array().unwrap().len(), 3);
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    for f in manifest["outputs"].as_array().unwrap() {
        assert!(dir.join(f.as_str().unwrap()).is_file(), "{f}");
    }
    let steady = std::fs::read_to_string(dir.join("steady.csv")).unwrap();
    assert_eq!(steady.lines().count(), 2);
}

#[test]
fn table1_needs_no_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = catqts(tmp.path(), &["table1"]);
    assert!(out.status.success());
    let csv = std::fs::read_to_string(tmp.path().join("out/table1.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);
}
