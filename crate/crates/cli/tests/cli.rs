use std::process::{Command, Output};

fn coljoin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coljoin"))
        .args(args)
        .env_remove("COLJOIN_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn csv_field(line: &str, header: &str, name: &str) -> String {
    let idx = header.split(',').position(|h| h == name).unwrap();
    line.split(',').nth(idx).unwrap().to_string()
}

#[test]
fn join_emits_one_median_row_with_throughput() {
    let out = coljoin(&[
        "bench", "join", "--algo", "phj", "--pattern", "gftr", "--r-rows", "4096", "--s-rows", "8192", "--payloads",
        "2", "--match", "1.0", "--reps", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 2);
    let total: f64 = csv_field(lines[1], lines[0], "total_ns").parse().unwrap();
    let tps: f64 = csv_field(lines[1], lines[0], "throughput_tps").parse().unwrap();
    let expected = 3.0 * 4096.0 / (total * 1e-9);
    assert!((tps - expected).abs() <= 1e-6 * expected);
}

#[test]
fn all_reps_and_out_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rows.csv");
    let out = coljoin(&[
        "bench", "join", "--r-rows", "1024", "--s-rows", "1024", "--reps", "2", "--all-reps", "--out",
        path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    // four variants, two repetitions each
    assert_eq!(text.lines().count(), 1 + 8);

    let report = coljoin(&["report", path.to_str().unwrap()]);
    assert!(report.status.success());
    let md = stdout(&report);
    assert_eq!(md.lines().filter(|l| l.starts_with("| smj") || l.starts_with("| phj")).count(), 4);
}

#[test]
fn workers_flag_beats_environment() {
    let run = |env: Option<&str>, flag: Option<&str>| {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_coljoin"));
        cmd.args(["bench", "join", "--algo", "smj", "--pattern", "gfur", "--r-rows", "512", "--s-rows", "512", "--reps", "1"]);
        cmd.env_remove("COLJOIN_WORKERS");
        if let Some(e) = env {
            cmd.env("COLJOIN_WORKERS", e);
        }
        if let Some(f) = flag {
            cmd.args(["--workers", f]);
        }
        let text = String::from_utf8(cmd.output().unwrap().stdout).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        csv_field(lines[1], lines[0], "workers")
    };
    assert_eq!(run(None, None), "1");
    assert_eq!(run(Some("3"), None), "3");
    assert_eq!(run(Some("3"), Some("5")), "5");
}

#[test]
fn usage_errors_exit_two_runtime_errors_exit_one() {
    assert_eq!(coljoin(&["bench", "join", "--algo", "nlj"]).status.code(), Some(2));
    assert_eq!(coljoin(&["bench", "join", "--key-bytes", "3"]).status.code(), Some(2));
    assert_eq!(coljoin(&["frobnicate"]).status.code(), Some(2));
    let bad = coljoin(&["bench", "join", "--match", "1.5", "--reps", "1"]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).starts_with("error:"));
}

#[test]
fn report_of_empty_csv_is_empty() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("empty.csv");
    std::fs::write(&path, "").unwrap();
    let out = coljoin(&["report", path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());

    std::fs::write(&path, "a,b\n1,2\n").unwrap();
    assert_eq!(coljoin(&["report", path.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn verify_passes_and_catches_injected_fault() {
    let common = ["verify", "--sizes", "512,2048", "--zipf", "0,2", "--stability-cases", "50"];
    let ok = coljoin(&common);
    assert!(ok.status.success(), "{}\n{}", stdout(&ok), String::from_utf8_lossy(&ok.stderr));
    assert!(stdout(&ok).contains("oracle"));

    let mut faulty = common.to_vec();
    faulty.push("--inject-fault");
    let bad = coljoin(&faulty);
    assert_eq!(bad.status.code(), Some(1));
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("seed=42") && err.contains("|R|=512"), "{err}");
}

#[test]
fn gen_exports_both_relations() {
    let dir = tempfile::tempdir().unwrap();
    let out = coljoin(&["gen", "--r-rows", "100", "--s-rows", "300", "--payloads", "2", "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success());
    let s = coljoin::workloads::import_relation(&dir.path().join("S")).unwrap();
    assert_eq!((s.len(), s.arity()), (300, 3));
}

#[test]
fn gather_and_select() {
    let out = coljoin(&["bench", "gather", "--items", "50000", "--reps", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains(",clustered,") && text.contains(",unclustered,"));
    assert_eq!(stdout(&coljoin(&["select", "--payloads", "1", "--zipf", "2"])).trim(), "PHJ-OM");
    assert_eq!(stdout(&coljoin(&["select", "--payloads", "3", "--match", "0.1"])).trim(), "PHJ-UM");
}
