//! End-to-end checks of the command-line surface: determinism, schema
//! stability, exit codes.

use std::path::Path;
use std::process::{Command, Output};

fn annlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_annlab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

fn read_rows(path: &Path) -> (String, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let rows = lines
        .filter(|l| !l.is_empty())
        .map(|l| {
            l.split(',')
                .map(|tok| tok.parse::<f64>().unwrap_or(f64::NAN))
                .collect()
        })
        .collect();
    (header, rows)
}

#[test]
fn markov_sweep_is_deterministic_and_versioned() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(
        &cfg,
        r#"{
            "model": "markov",
            "problem": "2s1",
            "temperature_mk": 35.0,
            "c": 0.01,
            "onset": {"start_us": 0.0, "end_us": 1.2},
            "t_a": {"list_us": [0.5, 2.0, 10.0]}
        }"#,
    );
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let r = annlab(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert!(r.status.success(), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b, "identical config must give byte-identical output");

    let (header, rows) = read_rows(&out1);
    assert_eq!(header, "t_a_ns,p_0,p_1,p_2,p_3");
    assert_eq!(rows.len(), 3);
    for row in &rows {
        let total: f64 = row[1..5].iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("a.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["format_version"], 1);
    assert_eq!(manifest["rows"][0]["status"], "ok");
}

#[test]
fn fast_anneal_ground_state_probability_rises() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(
        &cfg,
        r#"{
            "model": "schrodinger",
            "problem": {"n": 1, "h": [0.25], "j": []},
            "schedule": "fast",
            "t_a": {"list_us": [0.005, 0.007, 0.01, 0.02]},
            "dt_ns": 0.001
        }"#,
    );
    let out = dir.path().join("fast.csv");
    let r = annlab(&["sweep", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success(), "stderr: {}", String::from_utf8_lossy(&r.stderr));
    let (header, rows) = read_rows(&out);
    assert_eq!(header, "t_a_ns,p_0,p_1");
    // Ground state of h > 0 is ↓ = p_1; it must rise over these times.
    for pair in rows.windows(2) {
        assert!(pair[1][2] > pair[0][2], "p_1 not rising: {rows:?}");
    }
}

#[test]
fn gibbs_chain_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(
        &cfg,
        r#"{
            "model": "gibbs",
            "problem": {"chain": {"j": -0.1, "n_list": [10, 100, 1000]}},
            "beta": 7.48
        }"#,
    );
    let out = dir.path().join("chain.csv");
    let r = annlab(&["gibbs", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(r.status.success());
    let (header, rows) = read_rows(&out);
    assert_eq!(header, "n,beta,mean_energy");
    for row in &rows {
        let expected = annlab::equilibrium::chain_mean_energy(row[0] as usize, -0.1, 7.48).unwrap();
        assert!((row[2] - expected).abs() < 1e-12);
    }
}

#[test]
fn extract_round_trips_synthetic_frequencies() {
    let dir = tempfile::tempdir().unwrap();
    let problem = annlab::problems::instances::s2_4();
    let probs = annlab::equilibrium::gibbs_probabilities(&problem, 5.64).unwrap();
    let freq_csv = dir.path().join("freq.csv");
    write(
        &freq_csv,
        &format!(
            "f1,f2,f3,f4\n{},{},{},{}\n",
            probs.get(0),
            probs.get(1),
            probs.get(2),
            probs.get(3)
        ),
    );
    let report = dir.path().join("report.json");
    let r = annlab(&[
        "extract",
        "--input",
        freq_csv.to_str().unwrap(),
        "--problem",
        "2s4",
        "--bootstrap",
        "0",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(r.status.success());
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    let beta1 = json["methods"]["log_ratio"]["beta"].as_f64().unwrap();
    let beta2 = json["methods"]["mean_energy"]["beta"].as_f64().unwrap();
    assert!((beta1 - 5.64).abs() < 1e-8);
    assert!((beta2 - 5.64).abs() < 1e-8);
}

#[test]
fn extract_reports_per_method_failures() {
    let dir = tempfile::tempdir().unwrap();
    // Uniform frequencies: log-ratio non-identifiable, mean-energy β = 0.
    let uniform = dir.path().join("uniform.csv");
    write(&uniform, "f1,f2,f3,f4\n0.25,0.25,0.25,0.25\n");
    let r = annlab(&[
        "extract",
        "--input",
        uniform.to_str().unwrap(),
        "--problem",
        "2s1",
        "--bootstrap",
        "0",
    ]);
    assert!(r.status.success());
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.contains("log-ratio    failed"), "{text}");
    assert!(text.contains("mean-energy"), "{text}");

    // A zero frequency kills the log-ratio method only.
    let zero = dir.path().join("zero.csv");
    write(&zero, "f1,f2,f3,f4,count\n0.5,0.25,0.25,0.0,100000\n");
    let r = annlab(&[
        "extract",
        "--input",
        zero.to_str().unwrap(),
        "--problem",
        "2s1",
        "--bootstrap",
        "0",
    ]);
    assert!(r.status.success());
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.contains("f4 is zero"), "{text}");
}

#[test]
fn sample_files_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let samples = dir.path().join("samples.txt");
    write(&samples, "++\n++\n+-\n-+\n++\n+-\n-+\n++\n");
    let r = annlab(&[
        "extract",
        "--input",
        samples.to_str().unwrap(),
        "--problem",
        "2s1",
        "--bootstrap",
        "0",
    ]);
    assert!(r.status.success(), "stderr: {}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn config_errors_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    // Missing t_a for a dynamics model.
    write(&cfg, r#"{"model": "markov", "problem": "2s1"}"#);
    let r = annlab(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));

    // Unknown bundled instance.
    write(
        &cfg,
        r#"{"model": "markov", "problem": "9x9", "t_a": {"list_us": [1.0]}}"#,
    );
    let r = annlab(&["sweep", "--config", cfg.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(2));

    // Unreadable config path.
    let r = annlab(&["sweep", "--config", "/nonexistent/file.json"]);
    assert_eq!(r.status.code(), Some(2));
}

#[test]
fn schedules_dump_has_reference_values() {
    let r = annlab(&["schedules", "--kind", "standard", "--points", "3"]);
    assert!(r.status.success());
    let text = String::from_utf8_lossy(&r.stdout);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "s,a_ghz,b_ghz");
    let last = lines.last().unwrap();
    let cols: Vec<f64> = last.split(',').map(|v| v.parse().unwrap()).collect();
    assert_eq!(cols[0], 1.0);
    assert_eq!(cols[1], 0.0);
    assert!((cols[2] - 8.58).abs() < 1e-12);

    // With a window, the B′ column appears and is 0 at s = 0.
    let r = annlab(&[
        "schedules",
        "--kind",
        "standard",
        "--points",
        "5",
        "--onset-start-us",
        "0",
        "--onset-end-us",
        "1.2",
        "--t-a-us",
        "2.0",
    ]);
    assert!(r.status.success());
    let text = String::from_utf8_lossy(&r.stdout);
    assert!(text.starts_with("s,a_ghz,b_ghz,b_prime_ghz"));
    let first_row = text.lines().nth(1).unwrap();
    assert!(first_row.ends_with(",0"));
}
