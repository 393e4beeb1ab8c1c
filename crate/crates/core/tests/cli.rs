use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sma-bimorph"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env("RUST_LOG", "error")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn simulate_is_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[drive]\nfrequency_hz = 5.0\n[run]\nduration_s = 6.0\n[metrology]\nsteady_window_s = 3.0\n");
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(run(&["simulate", "--config", &cfg], &a).status.success());
    assert!(run(&["simulate", "--config", &cfg, "--threads", "3"], &b).status.success());
    let ta = std::fs::read(a.join("trace.csv")).unwrap();
    let tb = std::fs::read(b.join("trace.csv")).unwrap();
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    assert!(text.starts_with("t_s,delta_mm,delta_filt_mm\n"));
    assert_eq!(text.lines().count(), 1 + 12_000);
}

#[test]
fn power_reproduces_the_drive_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["power"], dir.path());
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("peak p_a = 278.1250 mW"), "{stdout}");
    assert!(stdout.contains("mean p_a = 55.6250 mW"), "{stdout}");
}

#[test]
fn calibrate_writes_a_report() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[calibration]\nbudget = 6\nfree = [{ param = \"g_tip\", lower = 0.004, upper = 0.012 }]\n",
    );
    let o = run(&["calibrate", "--config", &cfg], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("calibration.toml")).unwrap();
    assert!(text.contains("evaluations = "));
    assert!(text.contains("param = \"g_tip\""));
    assert!(text.contains("[[residuals]]"));
}

#[test]
fn swim_writes_trajectory_and_scan() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["swim"], dir.path());
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let traj = std::fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("t_s,x_mm,y_mm,psi_deg,v_mm_s\n"));
    let scan = std::fs::read_to_string(dir.path().join("speed_scan.csv")).unwrap();
    assert_eq!(scan.lines().count(), 5);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let typo = write_config(dir.path(), "[drive]\nfrequency_hx = 1.0\n");
    let o = run(&["power", "--config", &typo], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("drive.frequency_hx"));

    let over = write_config(dir.path(), "[drive]\ni_on = 0.3\n");
    assert_eq!(run(&["power", "--config", &over], dir.path()).status.code(), Some(2));

    let missing = dir.path().join("nope.toml");
    let o = run(&["power", "--config", missing.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));

    // 1.33 Hz over 30 s is not a whole number of periods.
    let partial = write_config(dir.path(), "[drive]\nfrequency_hz = 1.33\n");
    assert_eq!(run(&["power", "--config", &partial], dir.path()).status.code(), Some(3));

    let warn = write_config(dir.path(), "[drive]\ndc_pct = 11.0\n");
    let o = Command::new(env!("CARGO_BIN_EXE_sma-bimorph"))
        .args(["power", "--config", &warn, "--out"])
        .arg(dir.path())
        .env("RUST_LOG", "warn")
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8_lossy(&o.stderr).contains("stuck"));
}
