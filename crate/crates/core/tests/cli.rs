//! End-to-end tests of the `specmeasure` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use specmeasure::cli::{parse_csv, sidecar_path};
use specmeasure::RationalKernel;

fn exe() -> Command {
    Command::new(env!("CARGO_BIN_EXE_specmeasure"))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/configs").join(name)
}

fn run(args: &[&str]) -> Output {
    exe().args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.json");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn constant_multiplication_matches_shifted_kernel() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("golden.csv");
    let cfg = config_path("constant_multiplication.json");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("x,mu,err_est,dofs_max\n"));
    assert!(!text.contains('\r'));
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.len(), 41);
    assert_eq!(rows[0].x, -1.5);
    assert_eq!(rows[40].x, 2.5);
    let k = RationalKernel::equispaced(4).unwrap();
    for r in rows {
        let expected = k.scaled(r.x - 0.5, 0.1).unwrap();
        assert!((r.mu - expected).abs() < 1e-12, "x = {}: {} vs {expected}", r.x, r.mu);
    }
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(out.to_str().unwrap())).unwrap()).unwrap();
    assert_eq!(meta["kernel_order"], 4);
    assert_eq!(meta["poles"].as_array().unwrap().len(), 4);
    assert_eq!(meta["residues"].as_array().unwrap().len(), 4);
    assert!(meta["normalization_constant"].as_f64().unwrap() > 0.0);
    assert!(meta["warnings"].as_array().unwrap().is_empty());
    assert!(meta["wall_time_seconds"].as_f64().unwrap() >= 0.0);
}

#[test]
fn malformed_json_exits_1_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never.csv");
    let cfg = write_config(dir.path(), "{\"problem\": {\"mode\": ");
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    assert!(!sidecar_path(out.to_str().unwrap()).exists());
}

#[test]
fn schema_errors_name_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(config_path("constant_multiplication.json"))
        .unwrap()
        .replace("\"epsilon\": 0.1", "\"epsilon\": -1");
    let cfg = write_config(dir.path(), &text);
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("`epsilon`"));
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    let cfg = config_path("constant_multiplication.json");
    let o = run(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--epsilon",
        "1e-1.5",
        "--order",
        "2",
        "--grid",
        "-1:1:5",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(rows.iter().map(|r| r.x).collect::<Vec<_>>(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
    let k = RationalKernel::equispaced(2).unwrap();
    let eps = 10f64.powf(-1.5);
    assert!((rows[3].mu - k.scaled(0.0, eps).unwrap()).abs() < 1e-10);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(out.to_str().unwrap())).unwrap()).unwrap();
    assert_eq!(meta["kernel_order"], 2);
    assert_eq!(meta["epsilon"].as_f64().unwrap(), eps);
}

#[test]
fn bad_flags_exit_1() {
    let cfg = config_path("constant_multiplication.json");
    let cfg = cfg.to_str().unwrap();
    for extra in [["--grid", "1:2"], ["--epsilon", "-3"], ["--order", "0"]] {
        let mut args = vec!["run", "--config", cfg];
        args.extend(extra);
        assert_eq!(run(&args).status.code(), Some(1), "{extra:?}");
    }
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn unconverged_run_exits_2_with_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial.csv");
    let text = r#"{
      "problem": {"mode": "operator", "backend": "realline", "terms": [{"kind": "derivative", "order": 2}]},
      "f": {"expr": "1/(1+x^2)"},
      "kernel": {"order": 2},
      "epsilon": 1e-8,
      "grid": {"min": 1, "max": 1, "n": 1},
      "solver": {"max_dofs": 1024},
      "output": {"path": "OUT"}
    }"#
    .replace("OUT", out.to_str().unwrap());
    let cfg = write_config(dir.path(), &text);
    let o = run(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(parse_csv(&std::fs::read_to_string(&out).unwrap()).unwrap().len(), 1);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(sidecar_path(out.to_str().unwrap())).unwrap()).unwrap();
    assert_eq!(meta["warnings"][0]["kind"], "no_convergence");
}

#[test]
fn csv_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("constant_multiplication.json");
    let mut outputs = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(format!("t{threads}.csv"));
        let o = exe()
            .args(["run", "--config", cfg.to_str().unwrap(), "--output", out.to_str().unwrap()])
            .env("RAYON_NUM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0));
        outputs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn json_output_format() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.json");
    let text = std::fs::read_to_string(config_path("constant_multiplication.json"))
        .unwrap()
        .replace("\"path\": \"constant_multiplication.csv\"", "\"path\": \"OUT\", \"format\": \"json\"")
        .replace("OUT", out.to_str().unwrap());
    let cfg = write_config(dir.path(), &text);
    assert_eq!(run(&["run", "--config", cfg.to_str().unwrap()]).status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["mu"].as_array().unwrap().len(), 41);
    assert_eq!(v["dofs_max"].as_array().unwrap().len(), 41);
}

#[test]
fn sweep_needs_three_epsilons() {
    let cfg = config_path("wave_packet_sweep.json");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--epsilons", "1e-1,1e-2", "--point", "1", "--reference", "laplacian"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_fits_the_second_order_rate() {
    let cfg = config_path("wave_packet_sweep.json");
    let o = run(&[
        "sweep",
        "--config",
        cfg.to_str().unwrap(),
        "--epsilons",
        "1e-1,1e-1.5,1e-2,1e-2.5",
        "--point",
        "1",
        "--reference",
        "laplacian",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let slope: f64 = stdout.lines().last().unwrap().strip_prefix("slope,").unwrap().parse().unwrap();
    assert!((slope - 2.0).abs() <= 0.5, "{stdout}");
}

#[test]
fn dense_reference_sweep_agrees_with_engine() {
    let cfg = config_path("rank_one_plus.json");
    let o = run(&["sweep", "--config", cfg.to_str().unwrap(), "--epsilons", "1e-1,1e-1.5,1e-2", "--point", "0.5", "--reference", "dense"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    for line in stdout.lines().skip(1).filter(|l| !l.starts_with("slope")) {
        let rel: f64 = line.split(',').nth(3).unwrap().parse().unwrap();
        assert!(rel < 1e-8, "{line}");
    }
}
