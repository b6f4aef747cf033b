use std::path::Path;
use std::process::{Command, Output};

const SHARED_PATH: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/tests/data/shared_path.toml");

fn patrol(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_patrol"))
        .args(args)
        .env_remove("PATROL_CONFIG")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_orienteering_writes_a_verified_solution() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.toml");
    let sol = dir.path().join("sol.toml");
    assert!(patrol(&["generate", "--n", "10", "--seed", "4", "--out", s(&inst)]).status.success());

    let out = patrol(&["solve", s(&inst), "--algo", "orienteering", "--out", s(&sol), "--format", "machine"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).starts_with("algorithm=orienteering\trobots="));

    let check = patrol(&["verify", s(&inst), s(&sol)]);
    assert_eq!(check.status.code(), Some(0));
    assert!(stdout(&check).contains("verdict pass"));
}

#[test]
fn every_algorithm_output_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.toml");
    assert!(patrol(&["generate", "--n", "8", "--seed", "1", "--out", s(&inst)]).status.success());
    for algo in ["approx", "greedy", "recursive", "orienteering", "bicriterion"] {
        let sol = dir.path().join(format!("{algo}.toml"));
        assert!(patrol(&["solve", s(&inst), "--algo", algo, "--out", s(&sol)]).status.success(), "{algo}");
        let stretch = if algo == "bicriterion" { "2" } else { "1" };
        assert_eq!(patrol(&["verify", s(&inst), s(&sol), "--stretch", stretch]).status.code(), Some(0), "{algo}");
    }
}

#[test]
fn corrupted_solution_fails_verify() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.toml");
    let sol = dir.path().join("sol.toml");
    assert!(patrol(&["generate", "--n", "6", "--out", s(&inst)]).status.success());
    assert!(patrol(&["solve", s(&inst), "--algo", "greedy", "--out", s(&sol)]).status.success());
    let text = std::fs::read_to_string(&sol).unwrap();
    std::fs::write(&sol, &text[..text.len() / 2]).unwrap();
    let out = patrol(&["verify", s(&inst), s(&sol)]);
    assert_ne!(out.status.code(), Some(0));
}

#[test]
fn tightened_instance_fails_verify_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.toml");
    let sol = dir.path().join("sol.toml");
    assert!(patrol(&["generate", "--n", "6", "--seed", "2", "--out", s(&inst)]).status.success());
    assert!(patrol(&["solve", s(&inst), "--algo", "minmax", "--robots", "1", "--out", s(&sol)]).status.success());
    let out = patrol(&["verify", s(&inst), s(&sol), "--stretch", "0.001"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("verdict fail"));
}

#[test]
fn oracle_on_the_shared_walk_example() {
    let out = patrol(&["oracle", SHARED_PATH, "--robots", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("verdict feasible"));

    let out = patrol(&["oracle", SHARED_PATH, "--robots", "3", "--partitioned"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).starts_with("verdict infeasible"));

    let out = patrol(&["oracle", SHARED_PATH, "--robots", "2", "--state-cap", "3"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(patrol(&["solve"]).status.code(), Some(1));
    assert_eq!(patrol(&["solve", SHARED_PATH, "--algo", "nope"]).status.code(), Some(1));
    assert_eq!(patrol(&["--no-such-flag"]).status.code(), Some(1));
}

#[test]
fn config_file_is_read_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.toml");
    std::fs::write(&cfg, "unknown_knob = 1\n").unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_patrol"))
        .args(["solve", SHARED_PATH, "--algo", "greedy"])
        .env("PATROL_CONFIG", &cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown_knob"));
}

#[test]
fn generate_and_bench_are_deterministic() {
    let a = stdout(&patrol(&["generate", "--n", "7", "--seed", "11"]));
    let b = stdout(&patrol(&["generate", "--n", "7", "--seed", "11"]));
    assert_eq!(a, b);

    let dir = tempfile::tempdir().unwrap();
    let (x, y) = (dir.path().join("x"), dir.path().join("y"));
    for d in [&x, &y] {
        let out = patrol(&["bench", "--sizes", "5", "--seeds", "2", "--out", s(d)]);
        assert_eq!(out.status.code(), Some(0));
    }
    for f in ["rows.csv", "summary.csv", "long.csv"] {
        assert_eq!(std::fs::read(x.join(f)).unwrap(), std::fs::read(y.join(f)).unwrap(), "{f}");
    }
}
