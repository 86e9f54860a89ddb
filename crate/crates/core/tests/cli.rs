use std::process::{Command, Output};

fn halfline(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfline")).args(args).output().unwrap()
}

fn data_rows(out: &Output) -> Vec<String> {
    String::from_utf8(out.stdout.clone()).unwrap().lines().filter(|l| !l.starts_with('#')).map(String::from).collect()
}

#[test]
fn evolve_without_potential_matches_kernel() {
    let grid = ["--grid", "1e-6,30,40,8"];
    let k = halfline(&[&["kernel", "--kappa", "0", "--t", "0.5"], &grid[..]].concat());
    let e = halfline(&[&["evolve", "--kappa", "0", "--t", "0.5", "--omega", "zero"], &grid[..]].concat());
    assert_eq!(k.status.code(), Some(0));
    assert_eq!(e.status.code(), Some(0));
    let (a, b) = (data_rows(&k), data_rows(&e));
    assert_eq!(a[0], "x,value_re");
    assert_eq!(a.len(), 321);
    assert_eq!(a, b);
    let text = String::from_utf8(e.stdout).unwrap();
    assert!(text.contains("# version=") && text.contains("\"omega\":\"zero\""));
}

#[test]
fn classify_reports_case_and_config() {
    let out = halfline(&["classify", "--alpha", "0", "--a", "0", "--b", "0", "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["case"], "c3");
    assert_eq!(v["result"]["boundary_exponent"], 0.0);
    assert_eq!(v["metadata"]["config"]["parameters"]["n"], 1.0);
    assert!(v["metadata"]["version"].is_string());
    assert!(String::from_utf8(out.stdout).unwrap().contains("\"case\": \"c3\""));
}

#[test]
fn exit_codes() {
    let bad_alpha = halfline(&["classify", "--alpha", "2", "--a", "0", "--b", "0", "--n", "1"]);
    assert_eq!(bad_alpha.status.code(), Some(2));
    assert!(String::from_utf8(bad_alpha.stderr).unwrap().contains("2"));
    assert_eq!(halfline(&["kernel", "--no-such-flag"]).status.code(), Some(2));
    assert_eq!(halfline(&["verify", "--suite", "no_such_check"]).status.code(), Some(2));
    assert_eq!(halfline(&["verify", "--suite", "bessel_golden"]).status.code(), Some(0));
    assert_eq!(halfline(&["verify", "--suite", "bessel_golden", "--tol", "1e-300"]).status.code(), Some(1));
    assert_eq!(halfline(&["classify", "--config", "/nonexistent/c.toml"]).status.code(), Some(3));
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("missing").join("x.json");
    let r = halfline(&["bessel", "--nu", "0.5", "--x", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(3));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "alpha = 0\na = 0\nb = 0\nn = 0.5\n").unwrap();
    let out = halfline(&["classify", "--config", cfg.to_str().unwrap(), "--n", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["result"]["case"], "c3");
    assert_eq!(v["metadata"]["config"]["overrides"][0], "n");
    std::fs::write(&cfg, "alpha = 0\ncolour = 1\n").unwrap();
    assert_eq!(halfline(&["classify", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn csv_output_reads_back() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.csv");
    let out = halfline(&["resolvent", "--kappa", "0.3", "--lambda", "2", "--grid", "1e-6,30,30,8", "--out", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let f: halfline::spaces::GridFunction<f64> =
        halfline::spaces::read_csv(std::io::BufReader::new(std::fs::File::open(&path).unwrap())).unwrap();
    assert_eq!(f.values().len(), 240);
    assert!(f.values().iter().all(|v| *v >= -1e-14));
    let again = dir.path().join("e.csv");
    let init = format!("csv:{}", path.display());
    let e = halfline(&["evolve", "--t", "0.1", "--omega", "const:1", "--steps", "2", "--init", &init, "--out", again.to_str().unwrap()]);
    assert_eq!(e.status.code(), Some(0));
}
