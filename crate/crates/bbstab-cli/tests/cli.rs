//! End-to-end checks of the command-line surface: subcommands, exit codes,
//! and the CSV files they leave behind.

use std::process::Command;

fn bbstab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bbstab"))
}

#[test]
fn solve_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let output = bbstab()
        .args([
            "solve",
            "--problem",
            "diag:1..10",
            "--rule",
            "bb1",
            "--delta",
            "auto:0.25",
            "--x0",
            "const:-3",
            "--out",
        ])
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("problem,n,solver,status"));
    assert!(stdout.contains("Converged"));
    assert!(out.join("summary.csv").exists());
    assert!(out.join("trace_bb1_auto0.25.csv").exists());
    let trace = std::fs::read_to_string(out.join("trace_bb1_auto0.25.csv")).unwrap();
    assert!(trace.starts_with("k,g_norm,s_norm,alpha,branch,region,q_k"));
}

#[test]
fn solve_reports_cycles_from_an_explicit_pair() {
    // The four-point cycle start: x0 = -(sqrt(5)+3), x1 = -(sqrt(5)-1).
    let output = bbstab()
        .args([
            "solve",
            "--problem",
            "counterexample",
            "--rule",
            "bb1",
            "--x0",
            "vec:-5.23606797749979",
            "--x1",
            "vec:-1.2360679774997896",
            "--maxit",
            "200",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("IterationLimit"), "{stdout}");
    assert!(stdout.contains("cycles with period 4"), "{stdout}");
}

#[test]
fn bench_and_profile_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let spec_path = dir.path().join("exp.txt");
    let out = dir.path().join("bench");
    std::fs::write(
        &spec_path,
        "# small benchmark\nproblem = diag:1..6\nx0 = const:-2\nsolver = bb1\nsolver = bb1 delta=auto:0.25\n",
    )
    .unwrap();
    let output = bbstab()
        .arg("bench")
        .arg(&spec_path)
        .arg("--out")
        .arg(&out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let summary = out.join("summary.csv");
    assert!(summary.exists());

    let profile_out = dir.path().join("profile.csv");
    let output = bbstab()
        .arg("profile")
        .arg(&summary)
        .arg("--out")
        .arg(&profile_out)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let profile = std::fs::read_to_string(&profile_out).unwrap();
    assert!(profile.starts_with("solver,tau,fraction"));
    assert!(profile.contains("bb1stab_c0p25"));
}

#[test]
fn check_subcommand_passes_and_filters() {
    let output = bbstab().args(["check", "stepsize"]).output().unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stdout));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("PASS stepsize/oracle_agreement"));
    assert!(!stdout.contains("gradients/"));
}

#[test]
fn solve_on_a_matrix_file() {
    let data = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../bbstab/data/chain_n25.mtx");
    let output = bbstab()
        .args(["solve", "--rule", "bb2", "--delta", "0.5"])
        .arg("--matrix")
        .arg(&data)
        .output()
        .unwrap();
    assert!(output.status.success(), "{}", String::from_utf8_lossy(&output.stderr));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("chain_n25"), "{stdout}");
    assert!(stdout.contains("Converged"), "{stdout}");
}

#[test]
fn bad_arguments_fail_loudly() {
    let output = bbstab()
        .args(["solve", "--problem", "nosuch:n=3", "--rule", "bb1"])
        .output()
        .unwrap();
    assert!(!output.status.success());

    let output = bbstab()
        .args(["solve", "--problem", "diag:1..4", "--rule", "bb3"])
        .output()
        .unwrap();
    assert!(!output.status.success());

    let output = bbstab().args(["profile"]).output().unwrap();
    assert!(!output.status.success());
}
