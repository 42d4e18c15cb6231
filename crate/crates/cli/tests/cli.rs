use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn synthdim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_synthdim")).args(args).env_remove("SYNTHDIM_THREADS").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    let mut r = csv::Reader::from_path(path).unwrap();
    let mut v = vec![r.headers().unwrap().iter().map(String::from).collect()];
    v.extend(r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()));
    v
}

#[test]
fn list_prints_every_scenario() {
    let o = synthdim(&["list"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 20);
    assert!(text.lines().next().unwrap().starts_with("fig2a"));
}

#[test]
fn unknown_scenario_names_valid_ids() {
    let dir = tempfile::tempdir().unwrap();
    let o = synthdim(&["run", "fig9z", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("fig9z") && err.contains("fig2a") && err.contains("figS3b"), "{err}");
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(code(&synthdim(&["run", "fig2a", "--out", out])), 1);
    assert_eq!(code(&synthdim(&["run", "fig2a", "--set", "nn=2", "--out", out])), 1);
    assert_eq!(code(&synthdim(&["run", "fig2a", "--set", "n", "--out", out])), 1);
    assert_eq!(code(&synthdim(&["run", "fig2a", "--format", "png"])), 1);
    assert_eq!(code(&synthdim(&["frobnicate"])), 1);
    assert_eq!(code(&synthdim(&["--help"])), 0);
    let o = Command::new(env!("CARGO_BIN_EXE_synthdim"))
        .args(["run", "fig2b", "--out", out])
        .env("SYNTHDIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&o), 1);
}

#[test]
fn fig2a_first_row_starts_excited() {
    let dir = tempfile::tempdir().unwrap();
    let o = synthdim(&["run", "fig2a", "--set", "n=2", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = rows(&dir.path().join("fig2a/full.csv"));
    assert_eq!(r[0][0], "t");
    assert!(r[0].iter().any(|h| h == "m<-3>"));
    let e = r[0].iter().position(|h| h == "atom_e").unwrap();
    assert_eq!(r[1][0], "0");
    assert_eq!(r[1][e], "1");
    assert!(dir.path().join("fig2a/real_space.csv").exists());
    assert!(dir.path().join("fig2a/observables.json").exists());
}

#[test]
fn reruns_and_metadata_reproduce_csv() {
    let dir = tempfile::tempdir().unwrap();
    let p = |s: &str| dir.path().join(s).to_str().unwrap().to_string();
    assert_eq!(code(&synthdim(&["run", "fig3a", "--out", &p("a")])), 0);
    assert_eq!(code(&synthdim(&["run", "fig3a", "--out", &p("b")])), 0);
    let a = fs::read(dir.path().join("a/fig3a/aux.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/fig3a/aux.csv")).unwrap());

    let meta = p("a/fig3a/aux.meta.json");
    let o = synthdim(&["run", "--config", &meta, "--out", &p("c")]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(a, fs::read(dir.path().join("c/aux.csv")).unwrap());
    // the replayed record is itself a fixed point
    assert_eq!(fs::read(&meta).unwrap(), fs::read(dir.path().join("c/aux.meta.json")).unwrap());
}

#[test]
fn config_file_with_overrides_and_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"schema": "synthdim-config/1", "scenario": "fig2b", "overrides": {"delta": 100, "t_end": 2},
            "formats": ["csv", "records", "svg"]}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = synthdim(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for f in ["full.csv", "full.jsonl", "full_heatmap.svg", "full_lines.svg", "full.meta.json"] {
        assert!(out.join("fig2b").join(f).exists(), "{f}");
    }
    let svg = fs::read_to_string(out.join("fig2b/full_heatmap.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let first = fs::read_to_string(out.join("fig2b/full.jsonl")).unwrap();
    let rec: serde_json::Value = serde_json::from_str(first.lines().next().unwrap()).unwrap();
    assert_eq!(rec["t"], 0.0);
    assert_eq!(rec["p"]["atom_e"], 1.0);
    let last = rows(&out.join("fig2b/full.csv")).pop().unwrap();
    assert_eq!(last[0], "2");
}

#[test]
fn bad_configs_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    for text in [
        r#"{"schema": "synthdim-config/1", "scenario": "fig2b", "colour": "red"}"#,
        r#"{"schema": "synthdim-config/9", "scenario": "fig2b"}"#,
        r#"{"scenario": "fig2b"}"#,
        r#"{"schema": "synthdim-config/1", "scenario": "fig2b", "overrides": {"gamma": 1}}"#,
        "not json",
    ] {
        let cfg = dir.path().join("cfg.json");
        fs::write(&cfg, text).unwrap();
        let o = synthdim(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
        assert_eq!(code(&o), 1, "{text}");
    }
}

#[test]
fn norm_drift_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    // largest admissible step, run long enough for the RK4 damping to show
    fs::write(
        &cfg,
        r#"{"schema": "synthdim-config/1", "run": {"name": "blowup", "model": {"builder": "lattice", "j": 1.0, "m_min": -5, "m_max": 5},
            "initial": "m<0>", "t_end": 200.0, "integrator": {"dt": 0.05, "t_end": 200.0, "sample_stride": 100}}}"#,
    )
    .unwrap();
    let o = synthdim(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
}

#[test]
fn sweeps() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let o = synthdim(&["sweep", "fig2a", "--param", "n", "--values", "2,3,4", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for n in 2..=4 {
        assert!(dir.path().join(format!("fig2a/n={n}/full.csv")).exists());
    }

    let o = synthdim(&["sweep", "fig2b", "--param", "delta", "--values", "30,60,100", "--out", out]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = rows(&dir.path().join("fig2b/sweep_delta.csv"));
    assert_eq!(r[0], ["value", "final_pe", "fit_rate", "asymmetry"]);
    assert_eq!(r.len(), 4);
    let pe: Vec<f64> = r[1..].iter().map(|row| row[1].parse().unwrap()).collect();
    assert!(pe.windows(2).all(|w| w[1] >= w[0]), "{pe:?}");

    assert_eq!(code(&synthdim(&["sweep", "fig2b", "--param", "delta", "--out", out])), 1);
    assert_eq!(code(&synthdim(&["sweep", "fig2b", "--param", "colour", "--values", "1", "--out", out])), 1);
    assert_eq!(code(&synthdim(&["sweep", "fig2b", "--param", "delta", "--values", "a,b", "--out", out])), 1);
}

#[test]
fn thread_cap_gives_same_output() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, sub: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_synthdim"))
            .args(["run", "fig4b", "--set", "t_end=3", "--out", dir.path().join(sub).to_str().unwrap()])
            .env("SYNTHDIM_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    run("1", "one");
    run("4", "four");
    let names: Vec<_> = fs::read_dir(dir.path().join("one/fig4b")).unwrap().map(|e| e.unwrap().file_name()).collect();
    assert!(names.len() >= 4);
    for n in names {
        assert_eq!(
            fs::read(dir.path().join("one/fig4b").join(&n)).unwrap(),
            fs::read(dir.path().join("four/fig4b").join(&n)).unwrap()
        );
    }
}

#[test]
fn validate_reports_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let o = synthdim(&["validate", "--out", dir.path().to_str().unwrap()]);
    let text = String::from_utf8(o.stdout.clone()).unwrap();
    for id in 1..=15 {
        assert!(text.contains(&format!("criterion {id:02} [")), "missing {id}");
    }
    let report: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("acceptance.json")).unwrap()).unwrap();
    let entries = report["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 15);
    assert!(entries.iter().all(|e| !e["measured"].as_object().unwrap().is_empty()));
    let all_pass = entries.iter().all(|e| e["passed"] == true);
    assert_eq!(code(&o), if all_pass { 0 } else { 1 });
}
