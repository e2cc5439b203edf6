use std::process::Command;

fn algoboard(args: &[&str], out: &std::path::Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_algoboard"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .args(["-k", "1500", "-m", "8", "--balls", "2000"])
        .output()
        .unwrap()
}

#[test]
fn simulate_then_decode_from_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let out = algoboard(&["simulate"], &data);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let pos = data.join("positions.csv");
    let spk = data.join("spikes.csv");
    let res = dir.path().join("res");
    let out = algoboard(
        &["evaluate", "--source", "csv", "--positions", pos.to_str().unwrap(), "--spikes", spk.to_str().unwrap()],
        &res,
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(res.join("metrics_x.csv").is_file());
    assert!(res.join("report.json").is_file());
}

#[test]
fn run_all_then_replot() {
    let dir = tempfile::tempdir().unwrap();
    assert!(algoboard(&["run-all"], dir.path()).status.success());
    std::fs::remove_file(dir.path().join("galton.svg")).unwrap();
    let out = algoboard(&["plot"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("galton.svg").is_file());
}

#[test]
fn failures_exit_nonzero_with_stage_tag() {
    let dir = tempfile::tempdir().unwrap();
    let out = algoboard(&["decode", "--source", "csv"], dir.path());
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("config stage failed"));

    let out = algoboard(&["plot"], &dir.path().join("nothing-here"));
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("plot stage failed"));

    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[correction]\nn_max = 99\n").unwrap();
    let out = algoboard(&["run-all", "--config", bad.to_str().unwrap()], dir.path());
    assert!(!out.status.success());
}
