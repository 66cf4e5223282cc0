use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const MINIMAL: &str = r#"{"k":6.2832,"p":2,"m_e":16,"s":8,"N":257,"R":8,"rule":"lattice-pod",
 "field":{"n0":1,"amplitude":0.2,"theta":4,"s":8},"p0":0.5,"p1":0.6,"delta":0.1,"seed":42}"#;

fn hqmc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hqmc")).args(args).output().unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// Header and records of a CSV with `#` comment lines.
fn parse_csv(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

#[test]
fn minimal_config_parses_and_constants_has_one_row_per_kl() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MINIMAL);
    let o = hqmc(&[
        "constants",
        "-c",
        cfg.to_str().unwrap(),
        "--set",
        "study.kl_list=[1,10,100]",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let (header, rows) = parse_csv(&text);
    assert_eq!(header[0], "kL");
    assert_eq!(rows.len(), 3);
    let kl: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(kl, vec![1.0, 10.0, 100.0]);
    // the coercivity constant does not depend on kL
    assert!(rows.iter().all(|r| r[1] == rows[0][1]));
}

#[test]
fn degree_one_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &MINIMAL.replace("\"p\":2", "\"p\":1"));
    let o = hqmc(&["solve", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("p: spline degree 1"), "{}", stderr(&o));
}

#[test]
fn unknown_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        &MINIMAL.replace("\"seed\":42", "\"seed\":42,\"meshh\":3"),
    );
    let o = hqmc(&["solve", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("meshh"), "{}", stderr(&o));
    // nested blocks are strict as well
    let o = hqmc(&["solve", "-c", cfg.to_str().unwrap(), "--set", "study.bogus=1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_subcommand_and_missing_file() {
    let o = hqmc(&["frobnicate", "-c", "x.json"]);
    assert_eq!(o.status.code(), Some(2));
    let o = hqmc(&["solve", "-c", "/nonexistent/c.json"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn envelope_violation_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MINIMAL);
    let o = hqmc(&["check-field", "-c", cfg.to_str().unwrap(), "--set", "field.amplitude=5"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("n_min"), "{}", stderr(&o));
    let o = hqmc(&["check-field", "-c", cfg.to_str().unwrap()]);
    assert!(o.status.success());
    let (h, rows) = parse_csv(&String::from_utf8(o.stdout).unwrap());
    let i = h.iter().position(|c| c == "n_min").unwrap();
    assert!(rows[0][i].parse::<f64>().unwrap() > 0.0);
}

#[test]
fn study_csv_reparses_is_deterministic_and_reproducible_from_its_header() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MINIMAL);
    let out1 = dir.path().join("a");
    let out2 = dir.path().join("b");
    let args = |out: &Path| {
        vec![
            "trunc-study".to_string(),
            "-c".into(),
            cfg.to_str().unwrap().into(),
            "--out".into(),
            out.to_str().unwrap().into(),
            "--set".into(),
            "N=31".into(),
            "--set".into(),
            "m_e=6".into(),
            "--set".into(),
            "study.s_ref=32".into(),
        ]
    };
    let run = |out: &Path| {
        let a = args(out);
        let o = hqmc(&a.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", stderr(&o));
        std::fs::read_to_string(out.join("trunc-study.csv")).unwrap()
    };
    let a = run(&out1);
    let b = run(&out2);
    assert_eq!(a, b);
    let (h, rows) = parse_csv(&a);
    assert!(h.contains(&"slope".to_string()));
    assert_eq!(rows.len(), 5);
    let slope: f64 = rows[0][h.iter().position(|c| c == "slope").unwrap()].parse().unwrap();
    assert!(slope < -1.5, "slope {slope}");

    // the echoed config alone reproduces the file
    let echoed = a.lines().next().unwrap().strip_prefix("# config: ").unwrap();
    let cfg2 = write_config(dir.path(), "echo.json", echoed);
    let out3 = dir.path().join("c");
    let o = hqmc(&[
        "trunc-study",
        "-c",
        cfg2.to_str().unwrap(),
        "--out",
        out3.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(out3.join("trunc-study.csv")).unwrap(), a);
}

#[test]
fn qmc_convergence_reports_a_slope() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MINIMAL);
    let o = hqmc(&[
        "qmc-convergence",
        "-c",
        cfg.to_str().unwrap(),
        "--set",
        "rule=interlaced-spod",
        "--set",
        "N=16",
        "--set",
        "integrand=product",
        "--set",
        "study.m_list=[4,5,6,7,8]",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = parse_csv(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rows.len(), 5);
    let i = h.iter().position(|c| c == "slope").unwrap();
    assert!(rows[0][i].parse::<f64>().unwrap() < -1.0);
}

#[test]
fn rule_export_import_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MINIMAL);
    let rule = dir.path().join("rule.txt");
    let base = [
        "-c",
        cfg.to_str().unwrap(),
        "--set",
        "N=31",
        "--set",
        "integrand=product",
    ];
    let mut a = vec!["cbc-construct"];
    a.extend(base);
    let weights = dir.path().join("w.csv");
    a.extend([
        "--export-rule",
        rule.to_str().unwrap(),
        "--export-weights",
        weights.to_str().unwrap(),
    ]);
    let o = hqmc(&a);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&rule).unwrap();
    assert!(text.starts_with("lattice N=31 s=8"));
    let (h, rows) = parse_csv(&std::fs::read_to_string(&weights).unwrap());
    assert_eq!(h, ["u", "gamma"]);
    // |u| <= 3 over 8 dimensions
    assert_eq!(rows.len(), 8 + 28 + 56);

    let mut b = vec!["cbc-construct"];
    b.extend(base);
    b.extend(["--import-rule", rule.to_str().unwrap()]);
    let o = hqmc(&b);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = parse_csv(&String::from_utf8(o.stdout).unwrap());
    let v: f64 = rows[0][h.iter().position(|c| c == "value").unwrap()].parse().unwrap();
    assert!((v - 1.0).abs() < 1e-2, "{v}");

    std::fs::write(&rule, "lattice N=31\nz 1 2\n").unwrap();
    let o = hqmc(&b);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn dump_system_writes_matrix_market() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MINIMAL);
    let out = dir.path().join("sys");
    let o = hqmc(&[
        "solve",
        "-c",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--set",
        "m_e=4",
        "--dump-system",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(out.join("system.mtx")).unwrap();
    let (n, entries) = hqmc::spline_fem::mm::read_matrix(&text).unwrap();
    assert_eq!(n, 36);
    assert!(!entries.is_empty());
    assert!(std::fs::read_to_string(out.join("rhs.mtx"))
        .unwrap()
        .starts_with("%%MatrixMarket"));
    let (h, rows) = parse_csv(&std::fs::read_to_string(out.join("solve.csv")).unwrap());
    let r: f64 = rows[0][h.iter().position(|c| c == "residual").unwrap()]
        .parse()
        .unwrap();
    assert!(r < 1e-10);
}

#[test]
fn fem_convergence_switches_to_manufactured_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MINIMAL);
    let o = hqmc(&[
        "fem-convergence",
        "-c",
        cfg.to_str().unwrap(),
        "--set",
        "study.meshes=[4,8,16,32]",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().next().unwrap().contains("\"data\":\"manufactured\""));
    let (_, rows) = parse_csv(&text);
    assert_eq!(rows.len(), 8);
    assert!(rows.iter().any(|r| r[0] == "fem-functional"));
}

#[test]
fn regularity_check_passes_on_default_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", MINIMAL);
    let o = hqmc(&[
        "regularity-check",
        "-c",
        cfg.to_str().unwrap(),
        "--set",
        "m_e=6",
        "--set",
        "study.max_order=2",
        "--set",
        "study.n_y=2",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let (h, rows) = parse_csv(&String::from_utf8(o.stdout).unwrap());
    // nu = 0, 4 first and 10 second order indices at 2 points
    assert_eq!(rows.len(), 2 * 15);
    let i = h.iter().position(|c| c == "pass").unwrap();
    assert!(rows.iter().all(|r| r[i] == "true"));
}
