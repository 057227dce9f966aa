use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_abp-verify"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn equality_config_passes_and_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = run(&configs().join("equality-cases.conf"), tmp.path(), &["--jobs", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    for f in ["report.json", "tables.csv", "disk_isoperimetric.convergence.svg"] {
        assert!(tmp.path().join(f).exists(), "{f}");
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(tmp.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], true);
    for s in report["scenarios"].as_array().unwrap() {
        let last = s["levels"].as_array().unwrap().last().unwrap();
        let ratio = last["report"]["ratio"].as_f64().unwrap();
        assert!((ratio - 1.0).abs() < 5e-3, "{}: {ratio}", s["name"]);
    }
    let series = &report["scenarios"][0]["series"][0];
    assert_eq!(series["curves"][0]["points"].as_array().unwrap().len(), 5);
    assert!((series["slope"].as_f64().unwrap() - 2.0).abs() < 0.2);
}

#[test]
fn unknown_check_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.conf", "[x]\ncheck = banach_tarski\n");
    let out = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("banach_tarski") && err.contains("line 2"), "{err}");
}

#[test]
fn codimension_one_michael_simon_fails_but_batch_continues() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "ms.conf",
        "[ms_sphere]\ncheck = michael_simon\nshape = icosphere\nlevels = 1\n\n[square]\ncheck = isoperimetric\nshape = square\nlevels = 1\n",
    );
    let out = run(&cfg, &tmp.path().join("out"), &[]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("FAIL  ms_sphere") && stdout.contains("m >= 2"), "{stdout}");
    assert!(stdout.contains("PASS  square"), "{stdout}");
}

#[test]
fn list_prints_every_check_and_json() {
    let text = String::from_utf8(bin().arg("list").output().unwrap().stdout).unwrap();
    for id in [
        "sobolev_euclidean",
        "isoperimetric",
        "fwc",
        "michael_simon",
        "log_sobolev",
        "riemannian_isoperimetric",
        "riemannian_fwc",
        "heintze_karcher",
        "riccati_suite",
        "coverage_suite",
    ] {
        assert!(text.contains(id), "{id}");
    }
    let json = bin().args(["list", "--json"]).output().unwrap();
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 10);
    assert!(v.as_array().unwrap().iter().all(|e| e["theorem"].as_str().unwrap().contains(':')));
}

#[test]
fn plot_is_deterministic_and_rejects_unknown_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.conf", "[ric]\ncheck = riccati_suite\ncount = 4\n");
    let out_dir = tmp.path().join("out");
    assert!(run(&cfg, &out_dir, &[]).status.success());
    let report = out_dir.join("report.json");
    let plot = |name: &str, out: &Path| {
        bin()
            .args(["plot", "--series", name, "--report"])
            .arg(&report)
            .arg("--out")
            .arg(out)
            .output()
            .unwrap()
    };
    let (a, b) = (tmp.path().join("a.svg"), tmp.path().join("b.svg"));
    assert!(plot("ric.sobolev_equality", &a).status.success());
    assert!(plot("ric.sobolev_equality", &b).status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let bad = plot("missing", &a);
    assert_eq!(bad.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("unknown series"));
}

#[test]
fn riccati_equality_profile_is_flat() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "r.conf", "[ric]\ncheck = riccati_suite\ncount = 2\n");
    let out_dir = tmp.path().join("out");
    assert!(run(&cfg, &out_dir, &[]).status.success());
    let csv = std::fs::read_to_string(out_dir.join("ric.sobolev_equality.csv")).unwrap();
    let g: Vec<f64> = csv
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse().unwrap())
        .collect();
    assert!(g.len() > 100);
    assert!(g.iter().all(|v| (v - g[0]).abs() < 1e-9 * g[0].abs().max(1.0)));
}
