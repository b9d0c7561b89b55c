use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn dapmlm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dapmlm"))
        .args(args)
        .output()
        .unwrap()
}

fn iris() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../data/iris.csv")
        .display()
        .to_string()
}

fn write_config(dir: &Path, extra: &str) -> String {
    let path = dir.join("run.conf");
    std::fs::write(
        &path,
        format!(
            "# small run\ndatasets = {}\nepsilon_grid = 0.5, 1, 2\nmodes = clean, dp_both\ntrials = 2\nseed = 7\nout = {}\n{extra}",
            iris(),
            dir.join("out").display()
        ),
    )
    .unwrap();
    path.display().to_string()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_all_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let o = dapmlm(&["run", "--config", &cfg]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["results.csv", "summary.csv", "wilcoxon.csv", "manifest.json"] {
        assert!(dir.path().join("out").join(f).exists(), "{f}");
    }
    assert!(stdout(&o).contains("iris"));
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    let out = dir.path().join("other");
    let o = dapmlm(&[
        "run",
        "--config",
        &cfg,
        "--trials",
        "1",
        "--epsilon-grid",
        "1",
        "--mode",
        "dp_data",
        "--noise-per-row",
        "--count-noise-scale",
        "0.5",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 2);
    assert!(results.contains(",1,dp_data,0,"));
    let manifest = std::fs::read_to_string(out.join("manifest.json")).unwrap();
    assert!(manifest.contains("\"noise_layout\": \"per-row\""));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "datasets = x.csv\ntrials = 0\n").unwrap();
    assert_eq!(dapmlm(&["run", "--config", bad.to_str().unwrap()]).status.code(), Some(2));
    let cfg = write_config(dir.path(), "");
    assert_eq!(dapmlm(&["run", "--config", &cfg, "--split", "1.5"]).status.code(), Some(2));
    assert_eq!(
        dapmlm(&["run", "--dataset", "/nonexistent/data.csv"]).status.code(),
        Some(2)
    );
}

#[test]
fn compare_a_run_with_itself() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "");
    assert!(dapmlm(&["run", "--config", &cfg]).status.success());
    let run = dir.path().join("out");
    let table = dir.path().join("cmp.csv");
    let o = dapmlm(&[
        "compare",
        "--a",
        run.to_str().unwrap(),
        "--b",
        run.to_str().unwrap(),
        "--out",
        table.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).matches("insufficient paired data").count(), 8);
    assert!(std::fs::read_to_string(table).unwrap().starts_with("dataset,metric"));

    let o = dapmlm(&[
        "compare",
        "--a",
        run.to_str().unwrap(),
        "--b",
        "/nonexistent",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn trace_then_audit() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.tsv");
    let o = dapmlm(&[
        "trace",
        "--dataset",
        &iris(),
        "--epsilon",
        "1",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let o = dapmlm(&["audit", "--trace", trace.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("audit passed"));

    let clean = dir.path().join("clean.tsv");
    let o = dapmlm(&[
        "trace",
        "--dataset",
        &iris(),
        "--mode",
        "clean",
        "--out",
        clean.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = dapmlm(&["audit", "--trace", clean.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("unperturbed"));

    let junk = dir.path().join("junk.tsv");
    std::fs::write(&junk, "not a trace").unwrap();
    assert_eq!(dapmlm(&["audit", "--trace", junk.to_str().unwrap()]).status.code(), Some(2));
}
