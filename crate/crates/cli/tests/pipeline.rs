use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn spe(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_spe")).args(args).output().expect("spe runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn qubit_config(seed: u64) -> Value {
    json!({
        "property": "purity",
        "reference_prior": "primitive",
        "property_prior": "induced",
        "data": {"counts": [2, 10, 11, 13]},
        "sampler": {"n_points": 4000, "seed": seed},
        "iteration": {"rounds": 1},
        "threshold": 0.5,
        "outputs": "unused"
    })
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn report(config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["report", "--config", config.to_str().unwrap(), "--outputs", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    spe(&args)
}

fn files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn report_is_byte_reproducible() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "q.json", &qubit_config(7));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&report(&cfg, &a, &[])), 0);
    assert_eq!(code(&report(&cfg, &b, &[])), 0);
    let (fa, fb) = (files(&a), files(&b));
    assert!(fa.len() >= 7, "{:?}", fa.iter().map(|f| &f.0).collect::<Vec<_>>());
    assert_eq!(fa, fb);
}

#[test]
fn every_output_carries_the_config_hash() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "q.json", &qubit_config(7));
    let out = tmp.path().join("out");
    assert_eq!(code(&report(&cfg, &out, &[])), 0);
    let summary: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    let hash = summary["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    for (name, bytes) in files(&out) {
        let text = String::from_utf8(bytes).unwrap();
        if name.ends_with(".json") {
            let v: Value = serde_json::from_str(&text).unwrap();
            assert_eq!(v["config_hash"], hash.as_str(), "{name}");
        } else {
            assert_eq!(text.lines().next().unwrap(), format!("# config_hash: {hash}"), "{name}");
        }
    }
}

#[test]
fn stagewise_run_matches_full_report() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "q.json", &qubit_config(11));
    let (full, staged) = (tmp.path().join("full"), tmp.path().join("staged"));
    assert_eq!(code(&report(&cfg, &full, &[])), 0);
    for stage in ["marginal", "intervals", "report"] {
        let out = spe(&[stage, "--config", cfg.to_str().unwrap(), "--outputs", staged.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{stage}: {}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(files(&full), files(&staged));
}

#[test]
fn stale_stage_files_are_recomputed() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let first = write_config(tmp.path(), "a.json", &qubit_config(7));
    assert_eq!(code(&report(&first, &out, &[])), 0);
    let before = fs::read(out.join("marginal.json")).unwrap();
    let second = write_config(tmp.path(), "b.json", &qubit_config(8));
    assert_eq!(code(&report(&second, &out, &[])), 0);
    let after: Value = serde_json::from_slice(&fs::read(out.join("marginal.json")).unwrap()).unwrap();
    let summary: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    assert_ne!(fs::read(out.join("marginal.json")).unwrap(), before);
    assert_eq!(after["config_hash"], summary["config_hash"]);
}

#[test]
fn seed_flag_matches_seed_in_config() {
    let tmp = TempDir::new().unwrap();
    let base = write_config(tmp.path(), "a.json", &qubit_config(7));
    let direct = write_config(tmp.path(), "b.json", &qubit_config(21));
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert_eq!(code(&report(&base, &a, &["--seed", "21"])), 0);
    assert_eq!(code(&report(&direct, &b, &[])), 0);
    assert_eq!(files(&a), files(&b));
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("out");
    let mut unknown = qubit_config(7);
    unknown["bogus"] = json!(1);
    let mut bad_level = qubit_config(7);
    bad_level["credibilities"] = json!([0.5, 1.5]);
    let mut wrong_counts = qubit_config(7);
    wrong_counts["data"] = json!({"counts": [1, 2, 3]});
    let mut mismatched = qubit_config(7);
    mismatched["scheme"] = json!("tat");
    for (name, cfg) in [("unknown", unknown), ("level", bad_level), ("counts", wrong_counts), ("scheme", mismatched)] {
        let path = write_config(tmp.path(), &format!("{name}.json"), &cfg);
        let run = report(&path, &out, &[]);
        assert_eq!(code(&run), 2, "{name}: {}", String::from_utf8_lossy(&run.stderr));
    }
    assert_eq!(code(&report(&tmp.path().join("missing.json"), &out, &[])), 2);
    assert_eq!(code(&spe(&["report"])), 2);
}

#[test]
fn vanishing_likelihood_exits_with_three() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "q.json", &qubit_config(7));
    let out = tmp.path().join("out");
    let args = ["marginal", "--config", cfg.to_str().unwrap(), "--outputs", out.to_str().unwrap()];
    assert_eq!(code(&spe(&args)), 0);
    // Corrupt the stage file while keeping its hash, so it is reused.
    let path = out.join("marginal.json");
    let mut doc: Value = serde_json::from_slice(&fs::read(&path).unwrap()).unwrap();
    doc["data"]["likelihood"]["scale"] = json!(0.0);
    fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let run = spe(&["intervals", "--config", cfg.to_str().unwrap(), "--outputs", out.to_str().unwrap()]);
    assert_eq!(code(&run), 3, "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn no_data_gives_flat_likelihood_and_full_range() {
    let tmp = TempDir::new().unwrap();
    let cfg = json!({
        "property": "fidelity",
        "reference_prior": "primitive",
        "property_prior": "flat",
        "data": {"counts": [0, 0, 0, 0]},
        "sampler": {"n_points": 3000, "seed": 5},
        "iteration": {"rounds": 1},
        "outputs": "unused"
    });
    let path = write_config(tmp.path(), "zero.json", &cfg);
    let out = tmp.path().join("out");
    assert_eq!(code(&report(&path, &out, &[])), 0);
    let m: Value = serde_json::from_slice(&fs::read(out.join("marginal.json")).unwrap()).unwrap();
    for v in m["data"]["likelihood"]["values"].as_array().unwrap() {
        assert!((v.as_f64().unwrap() - 1.0).abs() < 1e-12);
    }
    let s: Value = serde_json::from_slice(&fs::read(out.join("summary.json")).unwrap()).unwrap();
    let p = &s["data"]["plausible"];
    assert_eq!(p["interval"]["segments"], json!([[0.0, 1.0]]));
    assert!((p["c"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn simulated_counts_follow_the_seed() {
    let tmp = TempDir::new().unwrap();
    let mut cfg = qubit_config(7);
    cfg["data"] = json!({"simulate": {"true_state": {"bloch": [0.0, 0.0, 0.9]}, "n": 200, "seed": 3}});
    let path = write_config(tmp.path(), "sim.json", &cfg);
    let run = |dir: &str, extra: &[&str]| {
        let out = tmp.path().join(dir);
        let mut args = vec!["simulate", "--config", path.to_str().unwrap(), "--outputs", out.to_str().unwrap()];
        args.extend_from_slice(extra);
        assert_eq!(code(&spe(&args)), 0);
        let v: Value = serde_json::from_slice(&fs::read(out.join("counts.json")).unwrap()).unwrap();
        v["data"].clone()
    };
    let a = run("a", &[]);
    let counts: Vec<u64> = serde_json::from_value(a["counts"].clone()).unwrap();
    assert_eq!(counts.iter().sum::<u64>(), 200);
    assert_eq!(a, run("b", &[]));
    assert_ne!(a["counts"], run("c", &["--seed", "99"])["counts"]);
}

#[test]
fn pom_info_reports_the_span() {
    let tetra = spe(&["pom-info", "--scheme", "tetrahedron"]);
    assert_eq!(code(&tetra), 0);
    let text = String::from_utf8(tetra.stdout).unwrap();
    assert!(text.contains("span rank    4 of 4 (tomographically complete)"), "{text}");
    let tat = String::from_utf8(spe(&["pom-info", "--scheme", "tat"]).stdout).unwrap();
    assert!(tat.contains("span rank    9 of 16\n"), "{tat}");
    assert_eq!(code(&spe(&["pom-info", "--scheme", "hexagon"])), 2);
}

#[test]
fn jaynes_writes_stamped_tables() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("j");
    let run = spe(&["jaynes", "--times", "12,14,16", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let doc: Value = serde_json::from_slice(&fs::read(out.join("jaynes.json")).unwrap()).unwrap();
    let rows = doc["data"]["rows"].as_array().unwrap();
    let methods: Vec<&str> = rows.iter().map(|r| r["method"].as_str().unwrap()).collect();
    assert_eq!(methods, ["ci_type1", "ci_type2", "sci_flat"]);
    // The credible interval ends at the earliest failure.
    assert_eq!(rows[2]["upper"].as_f64().unwrap(), 12.0);
    let csv = fs::read_to_string(out.join("jaynes.csv")).unwrap();
    let hash = doc["config_hash"].as_str().unwrap();
    assert!(csv.starts_with(&format!("# config_hash: {hash}\nlower,upper,coverage\n")), "{csv}");
}
