use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_pressqubo"));
    c.env_remove("PRESSQUBO_OUT");
    c
}

fn run(dir: &Path, args: &[&str]) -> Output {
    bin().current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/data/instances")
        .join(name)
}

#[test]
fn gen_is_deterministic_and_reports_size() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--json", "gen", "--toolkits", "3", "--machines", "2", "--capacity-bits", "8", "--seed", "7"];
    let a = run(dir.path(), &[&args[..], &["-o", "a.json"]].concat());
    let b = run(dir.path(), &[&args[..], &["-o", "b.json"]].concat());
    assert!(a.status.success() && b.status.success(), "{}", stderr(&a));
    let summary: serde_json::Value = serde_json::from_str(stdout(&a).trim()).unwrap();
    assert_eq!(summary["qubits"], 22);
    assert_eq!(
        std::fs::read(dir.path().join("a.json")).unwrap(),
        std::fs::read(dir.path().join("b.json")).unwrap()
    );
}

#[test]
fn missing_required_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["gen", "--toolkits", "3", "--machines", "2", "--capacity-bits", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn build_honours_out_dir_and_warns_off_grid() {
    let dir = tempfile::tempdir().unwrap();
    let inst = bundled("t03-m2-q16.json");
    let o = bin()
        .current_dir(dir.path())
        .env("PRESSQUBO_OUT", "out")
        .args(["build", inst.to_str().unwrap(), "--variant", "rounded"])
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stderr(&o).is_empty());
    assert!(dir.path().join("out/t03-m2-q16.rounded.coo").exists());
    assert!(dir.path().join("out/t03-m2-q16.rounded.coo.varmap.json").exists());

    let o = run(dir.path(), &["build", inst.to_str().unwrap(), "--variant", "scaled", "--ls", "0.3", "-o", "s.coo"]);
    assert!(o.status.success());
    assert!(stderr(&o).contains("off the default penalty grid"));
}

#[test]
fn bad_instance_and_bad_params_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.json"), "{\"toolkits\": 3}").unwrap();
    let o = run(dir.path(), &["build", "bad.json", "--variant", "rounded"]);
    assert_eq!(o.status.code(), Some(2));

    let inst = bundled("t03-m2-q16.json");
    run(dir.path(), &["build", inst.to_str().unwrap(), "--variant", "rounded", "-o", "q.coo"]);
    let o = run(dir.path(), &["solve", "q.coo", "--solver", "sa", "--shots", "5"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_file_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(dir.path(), &["stats", "nope.coo"]);
    assert_eq!(o.status.code(), Some(5));
}

#[test]
fn brute_force_refuses_large_qubo() {
    let dir = tempfile::tempdir().unwrap();
    let inst = bundled("t09-m2-q36.json");
    run(dir.path(), &["build", inst.to_str().unwrap(), "--variant", "rounded", "-o", "q.coo"]);
    let o = run(dir.path(), &["solve", "q.coo", "--solver", "brute"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
}

#[test]
fn brute_force_solves_small_qubo() {
    let dir = tempfile::tempdir().unwrap();
    let inst = bundled("t03-m2-q16.json");
    run(dir.path(), &["build", inst.to_str().unwrap(), "--variant", "rounded", "-o", "q.coo"]);
    let o = run(dir.path(), &["--json", "solve", "q.coo", "--solver", "brute", "-o", "s.csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(summary["best_bits"].as_str().unwrap().len(), 16);
    assert!(dir.path().join("s.csv").exists());
}

#[test]
fn solve_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let inst = bundled("t03-m2-q16.json");
    run(dir.path(), &["build", inst.to_str().unwrap(), "--variant", "rounded", "-o", "q.coo"]);
    for out in ["a.csv", "b.csv"] {
        let o = run(
            dir.path(),
            &["solve", "q.coo", "--solver", "lrqaoa", "--p", "2", "--shots", "200", "--seed", "9", "--postprocess", "-o", out],
        );
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(
        std::fs::read(dir.path().join("a.csv")).unwrap(),
        std::fs::read(dir.path().join("b.csv")).unwrap()
    );
}

#[test]
fn sweep_then_select_best() {
    let dir = tempfile::tempdir().unwrap();
    let plan = serde_json::json!({
        "instances": [bundled("t03-m2-q16.json")],
        "variants": ["rounded", "scaled"],
        "solvers": [{"name": "sa", "params": {"steps": 100, "restarts": 50}}, {"name": "random", "params": {"shots": 100}}],
        "seeds": [0, 1],
    });
    std::fs::write(dir.path().join("plan.json"), plan.to_string()).unwrap();
    let o = run(dir.path(), &["sweep", "plan.json", "-o", "rep", "--workers", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    for f in ["runs.csv", "metrics.csv", "report.json"] {
        assert!(dir.path().join("rep").join(f).exists(), "{f}");
    }
    let runs = std::fs::read_to_string(dir.path().join("rep/runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 1 + 3 * 2 * 2);
    assert!(!runs.lines().next().unwrap().contains("wall_time"));

    let o = run(dir.path(), &["report", "rep", "--select-best"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.starts_with("toolkits,variant,solver"));
    assert_eq!(table.lines().count(), 1 + 2 * 2);
    assert_eq!(table, std::fs::read_to_string(dir.path().join("rep/best.csv")).unwrap());
}

#[test]
fn stats_prints_one_row_per_depth() {
    let dir = tempfile::tempdir().unwrap();
    let inst = bundled("t03-m2-q16.json");
    run(dir.path(), &["build", inst.to_str().unwrap(), "--variant", "rounded", "-o", "q.coo"]);
    let o = run(dir.path(), &["stats", "q.coo"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    assert!(lines[1].starts_with("16,"));
    let o = run(dir.path(), &["stats", "q.coo", "--p", "3"]);
    assert_eq!(stdout(&o).lines().count(), 2);
}
