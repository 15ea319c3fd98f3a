use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn utm(args: &[&str]) -> Output {
    utm_env(args, &[])
}

fn utm_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_utm"));
    cmd.args(args).env_remove("UTM_THREADS");
    for (k, v) in env {
        cmd.env(k, v);
    }
    cmd.output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Rows of a solution CSV as `(x, t, re, im, trunc)`.
fn rows(csv: &str) -> Vec<[f64; 5]> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("x,t,re_q,im_q,trunc_est"));
    lines
        .map(|l| {
            let v: Vec<f64> = l.split(',').map(|c| c.parse().unwrap()).collect();
            [v[0], v[1], v[2], v[3], v[4]]
        })
        .collect()
}

#[test]
fn validate_multipoint_fixture() {
    let o = utm(&["validate", "--problem", path_str(&fixture("three_point_heat.json"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(out.lines().all(|l| l.starts_with("PASS")), "{}", out);
}

#[test]
fn incompatible_data_fail_validation() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(fixture("three_point_heat.json")).unwrap().replace("1/6 + x*(1-x)", "x*(1-x)");
    let p = dir.path().join("bad.json");
    std::fs::write(&p, text).unwrap();
    let o = utm(&["validate", "--problem", path_str(&p)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL compatibility"));
}

#[test]
fn malformed_file_is_a_validation_failure() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("p.json");
    std::fs::write(&p, "{\"order\": 2}").unwrap();
    assert_eq!(code(&utm(&["validate", "--problem", path_str(&p)])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&utm(&["validate", "--problem", path_str(&missing)])), 1);
}

#[test]
fn schroedinger_type_problem_is_refused() {
    let o = utm(&["solve", "--problem", path_str(&fixture("schroedinger.json")), "--tgrid", "0.1:0.1:1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("Schrödinger"), "{}", stderr(&o));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(code(&utm(&["solve", "--bogus"])), 1);
    assert_eq!(code(&utm(&["frobnicate"])), 1);
    assert_eq!(code(&utm(&["--help"])), 0);
    let dirichlet = fixture("dirichlet_heat.json");
    let o = utm(&["solve", "--problem", path_str(&dirichlet), "--tgrid", "0.1:0.2"]);
    assert_eq!(code(&o), 1);
    let o = utm_env(&["validate", "--problem", path_str(&dirichlet)], &[("UTM_THREADS", "0")]);
    assert_eq!(code(&o), 1);
}

#[test]
fn solve_matches_the_exact_mode_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let p = fixture("dirichlet_heat.json");
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |out: &Path| -> Vec<String> {
        ["solve", "--problem", path_str(&p), "--xgrid", "0.1:0.9:5", "--tgrid", "0.05:0.5:4", "--out", path_str(out)]
            .iter()
            .map(|s| s.to_string())
            .collect()
    };
    let args_a = args(&a);
    let args_b = args(&b);
    let o = utm_env(&args_a.iter().map(|s| s.as_str()).collect::<Vec<_>>(), &[("UTM_THREADS", "1")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let o = utm_env(&args_b.iter().map(|s| s.as_str()).collect::<Vec<_>>(), &[("UTM_THREADS", "3")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let rs = rows(&String::from_utf8(ta).unwrap());
    assert_eq!(rs.len(), 20);
    for [x, t, re, im, _] in rs {
        let exact = (-PI * PI * t).exp() * (PI * x).sin();
        assert!((re - exact).abs() <= 1e-6 && im.abs() <= 1e-6, "x {} t {}: {}", x, t, re);
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "solve");
    assert_eq!(manifest["exit_code"], 0);
    assert_eq!(manifest["threads"], 1);
    assert_eq!(manifest["parameters"]["tau"], 1.0);
    let digest = manifest["input_sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
}

#[test]
fn numbers_carry_seventeen_digits() {
    let o = utm(&["solve", "--problem", path_str(&fixture("dirichlet_heat.json")), "--xgrid", "0.5:0.5:1", "--tgrid", "0.1:0.1:1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let line = text.lines().nth(1).unwrap();
    for cell in line.split(',') {
        let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
        assert_eq!(mantissa.replace('.', "").len(), 17, "{}", cell);
    }
}

#[test]
fn compare_on_the_dirichlet_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.json");
    let o = utm(&[
        "compare",
        "--problem",
        path_str(&fixture("dirichlet_heat.json")),
        "--tgrid",
        "0.05:0.5:4",
        "--manifest",
        path_str(&m),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&m).unwrap()).unwrap();
    let dev = manifest["parameters"]["max_dev"].as_f64().unwrap();
    assert!(dev <= 1e-4, "{}", dev);
    assert!(manifest["parameters"]["mean_dev"].as_f64().unwrap() <= dev);
    // an unreachable tolerance turns the comparison into a failure
    let o = utm(&["compare", "--problem", path_str(&fixture("dirichlet_heat.json")), "--tgrid", "0.05:0.5:4", "--tol", "1e-12"]);
    assert_eq!(code(&o), 3);
}

#[test]
fn oracle_needs_grid_nodes() {
    let p = fixture("three_point_heat.json");
    let o = utm(&["oracle", "--problem", path_str(&p), "--tgrid", "0.05:0.05:1", "--N", "40", "--dt", "1e-3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let rs = rows(&String::from_utf8(o.stdout).unwrap());
    assert_eq!(rs.len(), 11);
    assert!(rs.iter().all(|r| r[4].is_nan()));
    let o = utm(&["oracle", "--problem", path_str(&p), "--xgrid", "0:1:7", "--tgrid", "0.05:0.05:1", "--N", "40"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn reduce_writes_a_solvable_multipoint_problem() {
    let dir = tempfile::tempdir().unwrap();
    let reduced = dir.path().join("reduced.json");
    let audit = dir.path().join("audit.txt");
    let nonlocal = fixture("two_integral_nonlocal.json");
    let o = utm(&["reduce", "--problem", path_str(&nonlocal), "--out", path_str(&reduced), "--audit", path_str(&audit)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(std::fs::read_to_string(&audit).unwrap().contains("row 1"));
    assert_eq!(code(&utm(&["validate", "--problem", path_str(&reduced)])), 0);
    // the reduced file and the nonlocal file describe the same solution
    let grid = ["--xgrid", "0:0.5:21", "--tgrid", "0.02:0.02:1"];
    let a = utm(&[&["solve", "--problem", path_str(&reduced)][..], &grid].concat());
    let b = utm(&[&["solve", "--problem", path_str(&nonlocal)][..], &grid].concat());
    assert_eq!(code(&a), 0, "{}", stderr(&a));
    assert_eq!(code(&b), 0, "{}", stderr(&b));
    assert_eq!(a.stdout, b.stdout);
    // the first integral condition: ∫₀^{1/2} q = 0, by Simpson's rule
    let rs = rows(&String::from_utf8(a.stdout).unwrap());
    let h = 0.5 / 20.0;
    let integral: f64 = rs
        .iter()
        .enumerate()
        .map(|(i, r)| r[2] * if i == 0 || i == 20 { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 })
        .sum::<f64>()
        * h
        / 3.0;
    let scale = rs.iter().map(|r| r[2].abs()).fold(0.0, f64::max);
    assert!(integral.abs() <= 1e-4 * scale, "{:e} vs {:e}", integral, scale);
    // a multipoint file has nothing to reduce
    let o = utm(&["reduce", "--problem", path_str(&fixture("dirichlet_heat.json")), "--out", path_str(&reduced)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn zeros_of_the_three_point_determinant() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("z.csv");
    let o = utm(&[
        "zeros",
        "--problem",
        path_str(&fixture("three_point_heat.json")),
        "--region",
        "0.5:3:-1:1",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("re,im,abs_delta,region"));
    let zs: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|c| c.parse().unwrap()).collect()).collect();
    assert_eq!(zs.len(), 1);
    // cos(λ/2) = (c₀ + c₁)/2 = 0.4
    assert!((zs[0][0] - 2.0 * 0.4f64.acos()).abs() < 1e-8, "{:?}", zs);
    assert!(zs[0][2] < 1e-8);
}

#[test]
fn wellposedness_depends_on_the_sign_of_a() {
    let good = fixture("third_order.json");
    let o = utm(&["check-wellposed", "--problem", path_str(&good)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("admissible: yes"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let text = std::fs::read_to_string(&good).unwrap().replace("\"im\": -1", "\"im\": 1");
    std::fs::write(&bad, text).unwrap();
    let o = utm(&["check-wellposed", "--problem", path_str(&bad)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("admissible: no"));
}

#[test]
fn manifest_goes_to_stderr_without_an_output_file() {
    let o = utm(&["validate", "--problem", path_str(&fixture("dirichlet_heat.json"))]);
    let err = stderr(&o);
    assert!(err.contains("\"subcommand\": \"validate\""), "{}", err);
    assert!(err.contains("\"exit_code\": 0"));
}
