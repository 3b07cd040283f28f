use std::process::Command;

fn dibm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dibm"))
}

#[test]
fn h_study_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("h.csv");
    let vtk = dir.path().join("vtk");
    let status = dibm()
        .args(["--study", "h", "--n-list", "8,16", "--single-thread", "--csv-out"])
        .arg(&csv)
        .arg("--vtk-out")
        .arg(&vtk)
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,l2,eoc_l2,h1,eoc_h1,delta,kappa,dofs,iters");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("2.50000000000e-1,"));
    assert_eq!(std::fs::read_dir(&vtk).unwrap().count(), 2);
}

#[test]
fn eps_study_to_stdout() {
    let out = dibm()
        .args(["--study", "eps", "--n", "12", "--eps-list", "0.5,0.25,0.125", "--region", "all"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert!(text.starts_with("eps,"));
}

#[test]
fn repeated_runs_are_identical() {
    let run = || {
        dibm()
            .args(["--study", "h", "--n-list", "8,16,24", "--single-thread", "--literal-outer-zero"])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}

#[test]
fn invalid_input_fails() {
    let out = dibm().args(["--study", "h", "--n-list", "16,8"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("increasing"));
    let out = dibm().args(["--study", "nope"]).output().unwrap();
    assert!(!out.status.success());
    let out = dibm().args(["--study", "eps", "--n", "8", "--tol", "-1"]).output().unwrap();
    assert!(!out.status.success());
}

#[test]
fn library_error_gives_nonzero_exit() {
    let out = dibm().args(["--study", "h", "--n-list", "0"]).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("dibm: "));
}
