use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use freeclt::Measure;
use freeclt_cli::svg::svg_from_csv;

const BIN: &str = env!("CARGO_BIN_EXE_freeclt");

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(format!("{name}.json"));
    let prefix = dir.join(name);
    let text = body.replace("PREFIX", prefix.to_str().unwrap());
    std::fs::write(&path, text).unwrap();
    path
}

fn freeclt(sub: &str, config: &Path, extra: &[&str]) -> Output {
    Command::new(BIN).args(["run", sub, "--config"]).arg(config).args(extra).output().unwrap()
}

fn read(dir: &Path, file: &str) -> String {
    std::fs::read_to_string(dir.join(file)).unwrap()
}

#[test]
fn sweep_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "rad", r#"{"family": "rademacher", "n_values": [1, 2, 4], "epsilons": [0.5, 1], "g_spec": 1, "output_prefix": "PREFIX"}"#);
    let out = freeclt("clt-sweep", &cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(dir.path(), "rad.csv");
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,delta,rhs_cg,rhs_thm3_eps0.5,rhs_thm3_eps1,rhs_thm4,rhs_cor,fitted_c,mass_defect,wall_ms");
    assert_eq!(lines.len(), 4);
    let cells: Vec<Vec<&str>> = lines[1..].iter().map(|l| l.split(',').collect()).collect();
    // n = 1 is the Rademacher law itself
    let d1: f64 = cells[0][1].parse().unwrap();
    assert!((d1 - 0.30449).abs() < 1e-3);
    for (row, n) in cells.iter().zip([1.0f64, 2.0, 4.0]) {
        let cor: f64 = row[6].parse().unwrap();
        assert!((cor - n.powf(-0.25)).abs() < 1e-8);
        assert_eq!(row[9], "0");
        for c in row[1..9].iter().filter(|c| **c != "0") {
            let digits = c.chars().filter(char::is_ascii_digit).collect::<String>();
            assert_eq!(digits.trim_start_matches('0').len(), 9, "{c}");
        }
    }
    let deltas: Vec<f64> = cells.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(deltas.windows(2).all(|w| w[1] < w[0]));
    // the plot is a function of the CSV alone
    assert_eq!(read(dir.path(), "rad.svg"), svg_from_csv(&csv, "rademacher sweep").unwrap());
}

#[test]
fn timing_is_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "t", r#"{"family": {"uniform": {"half_width": 1}}, "n_values": [2], "epsilons": [1], "output_prefix": "PREFIX"}"#);
    assert!(freeclt("bounds-report", &cfg, &["--timing"]).status.success());
    let csv = read(dir.path(), "t.csv");
    let wall: f64 = csv.lines().nth(1).unwrap().rsplit(',').next().unwrap().parse().unwrap();
    assert!(wall > 0.0);
    let json: serde_json::Value = serde_json::from_str(&read(dir.path(), "t.json")).unwrap();
    assert_eq!(json[0]["n"], 2);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.json");
    assert_eq!(freeclt("clt-sweep", &missing, &[]).status.code(), Some(2));
    let empty = write_config(dir.path(), "e", r#"{"family": "rademacher", "n_values": [], "output_prefix": "PREFIX"}"#);
    assert_eq!(freeclt("lindeberg", &empty, &[]).status.code(), Some(2));
    let unknown = write_config(dir.path(), "u", r#"{"family": "rademacher", "n_values": [2], "colour": "red", "output_prefix": "PREFIX"}"#);
    assert_eq!(freeclt("clt-sweep", &unknown, &[]).status.code(), Some(2));
    let threads = write_config(dir.path(), "th", r#"{"family": "rademacher", "n_values": [1], "output_prefix": "PREFIX"}"#);
    assert_eq!(freeclt("clt-sweep", &threads, &["--threads", "0"]).status.code(), Some(2));
    let strict = write_config(dir.path(), "s", r#"{"family": "rademacher", "n_values": [3], "conv_params": {"mass_defect_limit": 1e-15}, "output_prefix": "PREFIX"}"#);
    let out = freeclt("clt-sweep", &strict, &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n = 3"));
    assert!(!dir.path().join("s.csv").exists());
}

#[test]
fn lindeberg_demo() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad", r#"{"family": "lindeberg_counterexample", "n_values": [2, 4, 8, 16], "epsilons": [0.5], "conv_params": {"grid_points": 1024}, "output_prefix": "PREFIX"}"#);
    let out = freeclt("lindeberg", &bad, &[]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("Lindeberg violated"));
    let csv = read(dir.path(), "bad.csv");
    assert_eq!(csv.lines().next().unwrap(), "n,delta,lambda_eps0.5");
    for line in csv.lines().skip(1) {
        let l: f64 = line.split(',').nth(2).unwrap().parse().unwrap();
        assert!(l >= 0.3);
    }
    let good = write_config(dir.path(), "good", r#"{"family": {"mixed": [{"uniform": {"half_width": 0.5}}, {"uniform": {"half_width": 1}}, {"uniform": {"half_width": 1.5}}]}, "n_values": [3, 9, 24, 30], "epsilons": [0.5], "conv_params": {"grid_points": 1024}, "output_prefix": "PREFIX"}"#);
    let out = freeclt("lindeberg", &good, &[]);
    assert!(out.status.success());
    assert!(!String::from_utf8_lossy(&out.stdout).contains("violated"));
    let csv = read(dir.path(), "good.csv");
    let last: Vec<f64> = csv.lines().last().unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert_eq!(last[2], 0.0);
}

#[test]
fn oracle_single_summand() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "o", r#"{"family": {"uniform": {"half_width": 1}}, "n_values": [1], "oracle_spec": {"matrix_size": 100, "trials": 2}, "output_prefix": "PREFIX"}"#);
    assert!(freeclt("oracle-check", &cfg, &["--seed", "4"]).status.success());
    let csv = read(dir.path(), "o.csv");
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let d: f64 = row[1].parse().unwrap();
    assert!(d <= 1.0 / 200.0 + 1e-6);
    assert_eq!(row[2], "0");
}

#[test]
fn convolve_two_measures() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c", r#"{"measures": [{"atoms": [[-1, 0.5], [1, 0.5]], "grid": [], "density": []}, {"atoms": [[-1, 0.5], [1, 0.5]], "grid": [], "density": []}], "output_prefix": "PREFIX"}"#);
    let out = freeclt("convolve", &cfg, &[]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let m: Measure = serde_json::from_str(&read(dir.path(), "c.json")).unwrap();
    // arcsine law on [-2, 2]
    let f = |x: f64| 0.5 + (x / 2.0).asin() / std::f64::consts::PI;
    for x in [-1.9, -1.0, 0.0, 0.7, 1.99] {
        assert!((m.cdf(x) - f(x)).abs() < 5e-3);
    }
}

#[test]
fn outputs_do_not_depend_on_threads() {
    let dir = tempfile::tempdir().unwrap();
    let runs = [
        ("clt-sweep", r#"{"family": {"two_point": {"p": 0.25, "centered": true}}, "n_values": [1, 2, 3], "g_spec": 0.5, "conv_params": {"grid_points": 1024}, "output_prefix": "PREFIX"}"#, "csv"),
        ("lindeberg", r#"{"family": "lindeberg_counterexample", "n_values": [2, 3, 5], "conv_params": {"grid_points": 1024}, "output_prefix": "PREFIX"}"#, "csv"),
        ("oracle-check", r#"{"family": "rademacher", "n_values": [2], "oracle_spec": {"matrix_size": 64, "trials": 4, "seed": 3}, "output_prefix": "PREFIX"}"#, "csv"),
    ];
    for (sub, body, ext) in runs {
        let mut outputs = Vec::new();
        for t in ["1", "4"] {
            let name = format!("{sub}-{t}");
            let cfg = write_config(dir.path(), &name, body);
            let out = freeclt(sub, &cfg, &["--threads", t, "--seed", "8"]);
            assert!(out.status.success(), "{sub}: {}", String::from_utf8_lossy(&out.stderr));
            outputs.push(std::fs::read(dir.path().join(format!("{name}.{ext}"))).unwrap());
        }
        assert_eq!(outputs[0], outputs[1], "{sub}");
    }
}
