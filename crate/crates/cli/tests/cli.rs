use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nirenberg::harmonics::{eval_ylm, read_coeffs, SpherePoint};
use nirenberg::rigor::{Precision, Scalar};

fn nirenberg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nirenberg")).args(args).output().expect("run binary")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_zero(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("zero.json");
    fs::write(&p, r#"{"format":"nirenberg-coeffs/1","max_degree":0,"mode":"approx","coefficients":["0"]}"#).unwrap();
    p
}

#[test]
fn solve_writes_candidate_with_metadata() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.json");
    let o = nirenberg(&["solve", "--K", "Y32", "--N", "8", "--seed", "S3", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let file = read_coeffs(&out).unwrap();
    assert_eq!(file.max_degree, 8);
    let meta = file.metadata.unwrap();
    assert_eq!(meta["seed"], "S3");
    assert!(meta["residual_estimate"].as_str().unwrap().parse::<f64>().unwrap() < 1e-10);
}

#[test]
fn solve_into_missing_directory_fails_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("c.json");
    let o = nirenberg(&["solve", "--N", "8", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn zero_candidate_fails_at_fixed_point_stage() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_zero(dir.path());
    let cert = dir.path().join("cert.json");
    let o = nirenberg(&["certify", path(&input), "--group", "Td", "--out", path(&cert)]);
    assert_eq!(o.status.code(), Some(6), "{}", stdout(&o));
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&cert).unwrap()).unwrap();
    assert_eq!(json["verdict"], false);
    assert_eq!(json["failed_stage"], "fixed-point");
    let hi: f64 = json["bounds"]["residual"]["total"]["hi"].as_str().unwrap().parse().unwrap();
    assert!((hi - (4.0 * std::f64::consts::PI + 1.0).sqrt()).abs() < 1e-6, "{hi}");
}

#[test]
fn table_round_trips_through_certificate() {
    let dir = tempfile::tempdir().unwrap();
    let cand = dir.path().join("c.json");
    let cert = dir.path().join("cert.json");
    assert_eq!(nirenberg(&["solve", "--N", "16", "--seed", "Td", "--out", path(&cand)]).status.code(), Some(0));
    let o = nirenberg(&["certify", path(&cand), "--L", "16", "--table", "--out", path(&cert)]);
    // The degree-16 candidate is too coarse for a proof; the exit code names
    // the failing stage.
    assert!(matches!(o.status.code(), Some(4..=7)), "{:?}", o.status);
    let again = nirenberg(&["print-table", path(&cert)]);
    assert_eq!(again.status.code(), Some(0));
    assert_eq!(stdout(&o), stdout(&again));
    let names: Vec<String> = stdout(&o).lines().skip(1).map(|l| l.split("  ").next().unwrap().to_string()).collect();
    assert_eq!(names[..3], ["C_emb".to_string(), "xi".into(), "N".into()]);
    assert!(stdout(&o).contains("verdict: FALSE"));
}

#[test]
fn reference_table_lists_rows_in_order() {
    let o = nirenberg(&["print-table", "--digits", "4"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let order = ["C_emb", "xi", "N", "||K||_L2", "L", "gamma", "alpha_inv", "C_injectivity", "r", "C_contraction"];
    let pos: Vec<usize> = order.iter().map(|n| text.find(&format!("\n{n} ")).unwrap()).collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));
    assert!(text.contains("30.5927") && text.contains("409.1437"));
}

#[test]
fn export_grid_matches_direct_evaluation() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_zero(dir.path());
    let out = dir.path().join("grid.csv");
    let o = nirenberg(&["export-grid", path(&input), "--ntheta", "6", "--nphi", "10", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,phi,u0,K"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 60);
    for r in rows.iter().step_by(17).take(4) {
        let y = eval_ylm(3, 2, SpherePoint::new(r[0], r[1]), Precision::DOUBLE).unwrap();
        assert!((y.mid() - r[3]).abs() < 1e-12);
        assert_eq!(r[2], 0.0);
    }
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "degree = 6\nseed = \"Td\"\n").unwrap();
    let out = dir.path().join("c.json");
    let o = nirenberg(&["--config", path(&cfg), "solve", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_coeffs(&out).unwrap().max_degree, 6);
    let o = nirenberg(&["--config", path(&cfg), "solve", "--N", "7", "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(read_coeffs(&out).unwrap().max_degree, 7);
    fs::write(&cfg, "degre = 6\n").unwrap();
    assert_eq!(nirenberg(&["--config", path(&cfg), "solve", "--out", path(&out)]).status.code(), Some(1));
}

#[test]
fn rejects_unknown_group_and_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_zero(dir.path());
    assert_eq!(nirenberg(&["certify", path(&input), "--group", "Oh"]).status.code(), Some(1));
    let out = dir.path().join("c.json");
    assert_eq!(nirenberg(&["solve", "--K", "Y20", "--out", path(&out)]).status.code(), Some(1));
}
