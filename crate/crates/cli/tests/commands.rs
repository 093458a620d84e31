use std::path::Path;
use std::process::{Command, Output};

fn vvs(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vvs"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .arg("--quiet")
        .output()
        .expect("spawn vvs")
}

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_config_gives_zero_state() {
    let dir = tempfile::tempdir().unwrap();
    let o = vvs(&["solve", configs().join("zero.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("zero_state.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x1,x2,Phi,u1,u2,rho,mu,Pi"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 17 * 17);
    assert!(rows.iter().all(|r| r[2] == 0.0 && r[3] == 0.0 && r[4] == 0.0 && r[7].abs() < 1e-12));
    let report = read_json(&dir.path().join("zero_report.json"));
    assert_eq!(report["run"]["converged"], true);
}

#[test]
fn repeated_solves_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = configs().join("zero.json");
    for d in [&a, &b] {
        assert_eq!(vvs(&["solve", cfg.to_str().unwrap()], d.path()).status.code(), Some(0));
    }
    let read = |d: &tempfile::TempDir| std::fs::read(d.path().join("zero_state.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn malformed_config_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ \"grid\": { \"nx\": 9, ").unwrap();
    assert_eq!(vvs(&["solve", cfg.to_str().unwrap()], dir.path()).status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    assert_eq!(vvs(&["solve", missing.to_str().unwrap()], dir.path()).status.code(), Some(1));
    assert_eq!(vvs(&["frobnicate"], dir.path()).status.code(), Some(1));
}

#[test]
fn mms_needs_two_levels() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(vvs(&["mms", "--levels", "1"], dir.path()).status.code(), Some(1));
    let o = vvs(&["mms", "--levels", "2", "--base", "9"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let table = read_json(&dir.path().join("mms.json"));
    assert_eq!(table["levels"].as_array().unwrap().len(), 2);
}

#[test]
fn symmetric_couette_reports_constants() {
    let dir = tempfile::tempdir().unwrap();
    let o = vvs(&["symmetric", "couette", "--a-minus", "1", "--a-plus", "2", "--c1", "0"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&dir.path().join("couette_report.json"));
    assert_eq!((r["C"].as_f64(), r["C2"].as_f64()), (Some(-4.0), Some(3.0)));
    assert!(r["residual"].as_f64().unwrap() < 1e-8);
    let csv = std::fs::read_to_string(dir.path().join("couette_profile.csv")).unwrap();
    assert!(csv.starts_with("coordinate,value,derivative\n"));
}

#[test]
fn symmetric_concentric_rigid_rotation_has_no_shear() {
    let dir = tempfile::tempdir().unwrap();
    let o = vvs(&["symmetric", "concentric", "--g-minus", "0.5", "--g-plus", "0.5"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&dir.path().join("concentric_report.json"));
    assert_eq!(r["C"].as_f64(), Some(0.0));
    assert_eq!(r["max_shear"].as_f64(), Some(0.0));
}

#[test]
fn symmetric_radial_reports_example() {
    let dir = tempfile::tempdir().unwrap();
    let o = vvs(&["symmetric", "radial"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let r = read_json(&dir.path().join("radial_report.json"));
    assert!((r["h_right"].as_f64().unwrap() + 1.25 * std::f64::consts::PI).abs() < 1e-14);
    assert!(r["bvp_max_error"].as_f64().unwrap() <= 1e-6);
    let mid = &r["samples"][1];
    assert_eq!(mid["mu"].as_f64(), Some(1.0));
}

#[test]
fn verify_subset_and_unknown_criterion() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(vvs(&["verify", "--only", "1,2"], dir.path()).status.code(), Some(0));
    let r = read_json(&dir.path().join("verify_report.json"));
    assert_eq!(r.as_array().unwrap().len(), 2);
    assert_eq!(vvs(&["verify", "--only", "12"], dir.path()).status.code(), Some(1));
}

#[test]
fn unwritable_output_directory_exits_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = vvs(&["verify", "--only", "1"], &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn shipped_couette_config_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = vvs(&["solve", configs().join("couette.json").to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(dir.path().join("couette_state.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    // 65 nodes per row, the last duplicating the first on the periodic grid.
    let (nx, ny) = (65, 129);
    assert_eq!(rows.len(), nx * ny);
    let exact = |y: f64| if y <= 0.0 { -2.0 * y * y + 3.0 } else { -y * y + 3.0 };
    let (mut num, mut den) = (0.0, 0.0);
    for j in 0..ny {
        let row = &rows[j * nx..(j + 1) * nx - 1];
        let mean = row.iter().map(|r| r[3]).sum::<f64>() / row.len() as f64;
        let e = exact(row[0][1]);
        num += (mean - e).powi(2);
        den += e * e;
    }
    assert!((num / den).sqrt() < 0.05, "{}", (num / den).sqrt());
}
