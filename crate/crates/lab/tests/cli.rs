use std::collections::BTreeSet;
use std::path::Path;
use std::process::Command as Process;

use sqg_lab::artifacts::read_spectral;
use sqg_lab::{run, Command, RunConfig};

const SMALL: &str = "m = 6\nT = 0.5\ndt = 0.01\nladder = 4, 6, 8\nreference = 16\ndecay_ladder = 16, 32, 64\nenvelope_modes = 256\nrk4_dts = 0.01, 0.005\n";

fn sqg(args: &[&str]) -> std::process::Output {
    Process::new(env!("CARGO_BIN_EXE_sqg")).args(args).output().expect("spawn sqg")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("run.cfg");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn help_lists_every_subcommand() {
    let out = sqg(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for c in Command::ALL {
        assert!(text.contains(c.name()), "{} missing from help", c.name());
    }
}

#[test]
fn simulate_writes_artifacts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    let out = dir.path().join("sim");
    let status = sqg(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    for f in ["trajectory.csv", "initial_state.csv", "final_state.csv", "final_field.csv", "summary.txt", "config.echo"] {
        assert!(out.join(f).is_file(), "{f} not written");
    }
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert!(summary.starts_with("# sqg simulate\n"));
    assert!(summary.contains("PASS simulate.finite"));
    assert!(summary.trim_end().ends_with("result: PASS (1 of 1 assertions passed)"));
    let final_state = read_spectral(&out.join("final_state.csv")).unwrap();
    assert_eq!(final_state.len(), 6);
}

#[test]
fn echo_reparses_to_the_same_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m = 5\nT = 2\ndt = 0.05\nintegrator = rk4\nseed = 9\ns = 0.5\n");
    let out = dir.path().join("o");
    assert!(sqg(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]).status.success());
    let echoed = RunConfig::from_path(&out.join("config.echo")).unwrap();
    let mut original = RunConfig::from_path(Path::new(&cfg)).unwrap();
    original.out = out.clone();
    assert_eq!(echoed.echo(), original.echo());
    assert_eq!(echoed.seed, 9);
}

#[test]
fn single_mode_is_steady() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m = 10\nT = 1\ndt = 0.02\ninitial = mode\nmode_p = 2\nmode_q = 1\n");
    let out = dir.path().join("o");
    let run = sqg(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}");
    assert!(stdout.contains("PASS simulate.steady_state"), "{stdout}");
    let a = read_spectral(&out.join("initial_state.csv")).unwrap();
    let b = read_spectral(&out.join("final_state.csv")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn gamma_reports_cross_method_at_m10() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m = 10\nT = 1\ndt = 0.1\n");
    let out = dir.path().join("g");
    let run = sqg(&["gamma", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(run.status.success(), "{stdout}");
    assert!(stdout.contains("PASS galerkin.cross_method"));
    let tensor = std::fs::read_to_string(out.join("tensor.csv")).unwrap();
    assert_eq!(tensor.lines().next(), Some("j,k,l,gamma"));
    let basis = std::fs::read_to_string(out.join("basis.csv")).unwrap();
    assert_eq!(basis.lines().count(), 1 + 40);
}

#[test]
fn converge_writes_study_tables() {
    let dir = tempfile::tempdir().unwrap();
    let c: RunConfig = SMALL.parse().unwrap();
    let out = dir.path().join("c");
    let summary = run(Command::Converge, &c, &out).unwrap();
    assert!(summary.get("convergence.hamiltonian_constancy").unwrap().passed());
    assert!(summary.get("convergence.weak_residual_linear").unwrap().passed());
    let study = std::fs::read_to_string(out.join("study.csv")).unwrap();
    assert_eq!(study.lines().next(), Some("m,quantity,t_or_pair,value"));
    for q in ["energy", "hamiltonian", "cauchy_psi_difference", "weak_residual", "coefficient_envelope_l3"] {
        assert!(study.lines().any(|l| l.split(',').nth(1) == Some(q)), "{q} missing");
    }
    let decay = std::fs::read_to_string(out.join("decay_table.csv")).unwrap();
    assert_eq!(decay.lines().next(), Some("k,m,error,relative,weighted_max_l3"));
    assert_eq!(decay.lines().count(), 1 + 3 * 3);
}

#[test]
fn bad_config_exits_with_two_and_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m = 8\nT = 1\ndt = 0.01\nintegrator = euler\n");
    let run = sqg(&["simulate", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&run.stderr);
    assert!(stderr.contains("line 4"), "{stderr}");
    assert!(!dir.path().join("x").exists());
}

#[test]
fn failed_assertion_exits_with_one() {
    // the single-mode distance ladder decays like d², far outside a factor-10 spread
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "m = 4\nT = 1\ndt = 0.01\ninitial = mode\nseeds = 2\n");
    let out = dir.path().join("c");
    let run = sqg(&["commutators", "--config", &cfg, "--out", out.to_str().unwrap()]);
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap();
    assert_eq!(run.status.code(), Some(1), "{summary}");
    assert!(summary.contains("FAIL commutator.distance_ladder_bounded"));
    assert!(summary.trim_end().ends_with("assertions passed)"));
}

#[test]
fn assertion_names_are_unique_across_commands() {
    let dir = tempfile::tempdir().unwrap();
    let c: RunConfig = SMALL.parse().unwrap();
    let mut seen = BTreeSet::new();
    for command in Command::ALL {
        let summary = run(command, &c, &dir.path().join(command.name())).unwrap();
        for check in &summary.checks {
            assert!(seen.insert(check.name.clone()), "{} reported twice", check.name);
        }
    }
    assert!(seen.len() > 40);
}

#[test]
fn shipped_configs_parse() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut n = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        RunConfig::from_path(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
        n += 1;
    }
    assert!(n > 0);
}

#[test]
fn artifacts_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL);
    for command in ["converge", "heat-oracle"] {
        let [one, three] = ["1", "3"].map(|t| {
            let out = dir.path().join(format!("{command}-{t}"));
            sqg(&[command, "--config", &cfg, "--out", out.to_str().unwrap(), "--threads", t]);
            out
        });
        for entry in std::fs::read_dir(&one).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "csv") {
                let other = three.join(path.file_name().unwrap());
                assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&other).unwrap(), "{}", path.display());
            }
        }
    }
}
