use std::fs;
use std::io::BufReader;
use std::process::Command;

use cylcover::config::{CommandKind, Quantity};
use cylcover::io::read_net;
use cylcover::{execute, parse_config, CliError};
use cylcover_core::net::{build_net, GeometrySpec};

fn args(s: &str) -> Vec<String> {
    std::iter::once("cylcover".to_string())
        .chain(s.split_whitespace().map(String::from))
        .collect()
}

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_cylcover"))
}

#[test]
fn valid_cover_config() {
    let c = parse_config(args("cover --d 2 --box 0,0,1,1 --rho 0.2 --reps 100 --seed 7")).unwrap();
    assert_eq!(c.command, CommandKind::Cover);
    assert_eq!(c.d, vec![2]);
    assert_eq!(c.rho, Some(0.2));
    assert_eq!(c.reps, 100);
    assert_eq!(c.seed, 7);
    assert_eq!(
        c.geometry,
        Some(GeometrySpec::Box {
            lo: vec![0.0, 0.0],
            hi: vec![1.0, 1.0]
        })
    );
}

#[test]
fn missing_d_names_field() {
    match parse_config(args("cover --box 0,0,1,1 --rho 0.2")) {
        Err(CliError::Usage(m)) => assert!(m.starts_with("d:"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "reps = 100\nseed = 3\nd = 2\nbox = [0.0, 0.0, 2.0, 2.0]\nrho = 0.3\n").unwrap();
    let c = parse_config(args(&format!("cover --config {} --reps 10", path.display()))).unwrap();
    assert_eq!(c.reps, 10);
    assert_eq!(c.seed, 3);
    assert_eq!(c.rho, Some(0.3));
}

#[test]
fn unknown_file_key_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    fs::write(&path, "d = 2\nrepz = 5\n").unwrap();
    let e = parse_config(args(&format!("verify --config {}", path.display()))).unwrap_err();
    assert!(matches!(e, CliError::Usage(_)), "{e:?}");
}

#[test]
fn rho_and_schedule_conflict() {
    let e = parse_config(args("tightness --d 2 --box 0,0,1,1 --n-list 8,16 --rho 0.2 --schedule-d 2")).unwrap_err();
    match e {
        CliError::Usage(m) => assert!(m.contains("rho"), "{m}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn measure_json() {
    let c = parse_config(args("measure --pair-hit --r 0.5 --d 3")).unwrap();
    assert_eq!(c.quantity, Quantity::PairHit);
    let out = execute(&c).unwrap();
    let v: serde_json::Value = serde_json::from_str(&out.stdout).unwrap();
    assert_eq!(v["method"], "quadrature");
    assert!(v["abs_error"].as_f64().unwrap() <= 1e-8);
    let value = v["value"].as_f64().unwrap();
    assert!(value > 0.0 && value < 1.0);
    let c = parse_config(args("measure --pair-hit --r 0.5 --d 3 --oracle 400000 --seed 2")).unwrap();
    let mc: serde_json::Value = serde_json::from_str(&execute(&c).unwrap().stdout).unwrap();
    let (m, se) = (mc["value"].as_f64().unwrap(), mc["abs_error"].as_f64().unwrap());
    assert!((m - value).abs() < 4.0 * se, "{m} ± {se} vs {value}");
}

#[test]
fn verify_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let st = bin()
        .args(["verify", "--d", "2", "--d", "3", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["tool"], "cylcover");
    assert_eq!(report["config"]["d"], serde_json::json!([2, 3]));
    assert!(report["result"]["suite"]["checks"].as_array().unwrap().len() >= 5);
}

#[test]
fn exit_codes() {
    let st = bin().args(["cover", "--rho", "0.2"]).output().unwrap();
    assert_eq!(st.status.code(), Some(1));
    let st = bin()
        .args(["cover", "--d", "2", "--box", "0,0,10,10", "--rho", "0.3", "--max-lines", "3"])
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(2), "{}", String::from_utf8_lossy(&st.stderr));
    let st = bin().arg("--help").output().unwrap();
    assert_eq!(st.status.code(), Some(0));
}

fn cover_csv(dir: &std::path::Path, workers: &str) -> Vec<u8> {
    let st = bin()
        .args([
            "cover", "--d", "2", "--box", "0,0,3,3", "--rho-list", "0.4,0.2", "--reps", "20", "--seed", "7", "--workers",
            workers, "--out",
        ])
        .arg(dir)
        .output()
        .unwrap();
    assert_eq!(st.status.code(), Some(0), "{}", String::from_utf8_lossy(&st.stderr));
    fs::read(dir.join("cover.csv")).unwrap()
}

#[test]
fn cover_csv_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let x = cover_csv(a.path(), "1");
    let y = cover_csv(b.path(), "3");
    assert_eq!(x, y);
    let text = String::from_utf8(x).unwrap();
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "seed,rho,n_points,t_d,t_w,lines_used");
    assert_eq!(rows.len(), 1 + 40);
    assert!(text.starts_with("# cylcover "));
}

#[test]
fn gumbel_csv_schema_and_determinism() {
    let run = || {
        let dir = tempfile::tempdir().unwrap();
        let c = parse_config(args(&format!(
            "gumbel --d 2 --family grid --rho 0.5 --n-list 2,3 --reps 25 --seed 1 --out {}",
            dir.path().display()
        )))
        .unwrap();
        execute(&c).unwrap();
        fs::read_to_string(dir.path().join("gumbel.csv")).unwrap()
    };
    let a = run();
    assert_eq!(a, run());
    let rows: Vec<&str> = a.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "n,rep,centered_td,centered_tw");
    assert_eq!(rows.len(), 1 + 50);
}

#[test]
fn net_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let c = parse_config(args(&format!("net --d 2 --ball 0,0,2 --rho 0.3 --out {}", dir.path().display()))).unwrap();
    execute(&c).unwrap();
    let f = read_net(BufReader::new(fs::File::open(dir.path().join("net.csv")).unwrap())).unwrap();
    let net = build_net(c.geometry.as_ref().unwrap(), 0.3, c.k).unwrap();
    assert_eq!((f.rho, f.k, f.d), (0.3, 8, 2));
    let want: Vec<Vec<f64>> = net.points().map(<[f64]>::to_vec).collect();
    assert_eq!(f.points, want);
}

#[test]
fn dim_reports_fit() {
    let c = parse_config(args("dim --d 2 --box 0,0,1,1 --rho-list 0.2,0.1,0.05")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&execute(&c).unwrap().stdout).unwrap();
    let slope = v["fit"]["slope"].as_f64().unwrap();
    assert!((1.7..2.3).contains(&slope), "{slope}");
}

#[test]
fn tightness_small_run() {
    let c = parse_config(args("tightness --d 2 --box 0,0,1,1 --n-list 2,4 --reps 20 --workers 2")).unwrap();
    let v: serde_json::Value = serde_json::from_str(&execute(&c).unwrap().stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["band_drifts"].as_array().unwrap().len(), 4);
}
