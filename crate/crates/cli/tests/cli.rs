use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_plap-curves"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_str(&stdout(out)).expect("valid JSON")
}

#[test]
fn analyze_gelfand_window() {
    let out = run(&[
        "analyze", "--class", "gelfand", "-p", "2", "-a", "0", "-n", "3",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert_eq!(v["report"]["predicted_infinite_turns"], true);
    assert_eq!(v["window"], "2<n<10");
}

#[test]
fn analyze_jl_outside_window() {
    let out = run(&[
        "analyze", "--class", "jl", "-p", "2", "-q", "5", "-a", "0", "-n", "12",
    ]);
    let v = json(&out);
    assert_eq!(
        v["report"]["conditions"]["dimension_window"]["holds"],
        false
    );
    let upper = v["report"]["dimension_window"][1].as_f64().unwrap();
    assert!((upper - 11.472).abs() < 1e-3);
    assert_eq!(v["report"]["predicted_infinite_turns"], false);
}

#[test]
fn analyze_mems_conditions_hold() {
    let out = run(&[
        "analyze", "--class", "mems", "-p", "2", "-q", "2", "-a", "0", "-n", "3",
    ]);
    let c = &json(&out)["report"]["conditions"];
    for name in [
        "leading_coefficient_positive",
        "beta_above_root",
        "flux_decay",
    ] {
        assert_eq!(c[name]["holds"], true, "{name}");
    }
}

#[test]
fn json_is_sorted_and_uses_17_digits() {
    let out = run(&["analyze", "--class", "gelfand"]);
    let text = stdout(&out);
    assert!(text.contains("\"lambda_inf\":2.0000000000000000e0"));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    let mut sorted = keys.clone();
    sorted.sort();
    assert_eq!(keys, sorted);
    // serde_json's default map keeps keys sorted, so check the raw text order too
    let pos = |k: &str| text.find(&format!("\"{k}\"")).unwrap();
    assert!(pos("closed_forms") < pos("discriminant"));
    assert!(pos("discriminant") < pos("report"));
    assert!(pos("report") < pos("window"));
}

#[test]
fn curve_rows_and_last_lambda() {
    let out = run(&["curve", "--class", "gelfand", "-n", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "t,lambda,u0,monitor");
    assert_eq!(lines.len() - 1, 20 * 10 + 1);
    let last: Vec<f64> = lines
        .last()
        .unwrap()
        .split(',')
        .map(|s| s.parse().unwrap())
        .collect();
    assert!((last[1] - 2.0).abs() < 0.05, "{}", last[1]);

    let out = run(&[
        "curve",
        "--class",
        "gelfand",
        "--samples-per-decade",
        "7",
        "--t-max",
        "100",
    ]);
    assert_eq!(stdout(&out).lines().count() - 1, 7 * 8 + 1);
}

#[test]
fn truncated_jl_curve_warns() {
    let out = run(&[
        "curve", "--class", "jl", "-q", "2", "-n", "5", "--format", "json",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!(v["warning"].as_str().unwrap().contains("vanishes"));
    let out = run(&["curve", "--class", "jl", "-q", "2", "-n", "5"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn turns_counts_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("turns.csv");
    let summary = dir.path().join("summary.json");
    let out = run(&[
        "turns",
        "--class",
        "gelfand",
        "-n",
        "3",
        "-o",
        csv.to_str().unwrap(),
        "--summary",
        summary.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(
        text.lines().next(),
        Some("t_star,lambda_star,u0_star,direction")
    );
    assert!(text.lines().count() > 4);
    let s: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&summary).unwrap()).unwrap();
    assert!(s["count"].as_u64().unwrap() >= 4);
    assert_eq!(s["alternating_directions"], true);

    let out = run(&[
        "turns", "--class", "gelfand", "-n", "10", "--format", "json",
    ]);
    let v = json(&out);
    assert_eq!(v["summary"]["count"], 0);
    assert_eq!(v["turning_points"].as_array().unwrap().len(), 0);
}

#[test]
fn solve_trajectory_header() {
    let out = run(&["solve", "--class", "mems", "--t-max", "10"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).starts_with("t,w,wprime\n"));
}

#[test]
fn profile_output() {
    let out = run(&[
        "profile", "--class", "mems", "--at", "1000", "--points", "16",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "r,u,u_singular");
    assert_eq!(lines.len(), 17);
    for row in &lines[1..] {
        let v: Vec<f64> = row.split(',').map(|s| s.parse().unwrap()).collect();
        assert!((v[1] - v[2]).abs() < 0.02);
    }
    let out = run(&["profile", "--class", "mems", "--at", "1e9"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_parameters_exit_2() {
    for args in [
        &["solve", "--class", "mems", "-q", "-1"][..],
        &["solve", "--class", "gelfand", "-p", "0.5"],
        &["solve", "--class", "gelfand", "--t-start", "0"],
        &["solve", "--class", "gelfand", "--rel-tol", "-1"],
        &["solve", "--class", "bogus"],
        &["solve", "--class", "gelfand", "-n", "abc"],
        &["solve", "--class", "gelfand", "--format", "xml"],
        &["solve", "--unknown-flag"],
        &["solve"],
        &["nosuchcommand"],
        &["verify", "--tol-scale", "-1"],
    ] {
        let out = run(args);
        assert_eq!(
            out.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&out.stderr)
        );
        assert!(!String::from_utf8_lossy(&out.stderr).contains("panicked"));
    }
}

#[test]
fn numerical_failure_exit_3() {
    let out = run(&["solve", "--class", "gelfand", "--max-steps", "10"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn help_exits_0() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["curve", "--help"]).status.code(), Some(0));
}

#[test]
fn config_file_is_overridden_by_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(
        &cfg,
        "# defaults\nclass = gelfand\nn = 10\nt_max = 100\nsamples_per_decade = 5\n",
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let out = run(&["curve", "--config", c]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out).lines().count() - 1, 5 * 8 + 1);

    let out = run(&[
        "turns", "--config", c, "-n", "3", "--t-max", "1e4", "--format", "json",
    ]);
    assert_eq!(json(&out)["summary"]["count"], 4);

    std::fs::write(&cfg, "class = gelfand\nbogus = 1\n").unwrap();
    assert_eq!(run(&["solve", "--config", c]).status.code(), Some(2));
    std::fs::write(&cfg, "class = gelfand\nn = ten\n").unwrap();
    assert_eq!(run(&["solve", "--config", c]).status.code(), Some(2));
    assert_eq!(
        run(&[
            "solve",
            "--config",
            dir.path().join("missing").to_str().unwrap()
        ])
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let paths: Vec<_> = (0..2)
        .map(|i| dir.path().join(format!("c{i}.json")))
        .collect();
    for p in &paths {
        let out = run(&[
            "curve",
            "--class",
            "mems",
            "--format",
            "json",
            "-o",
            p.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
    }
    let read = |p: &Path| std::fs::read(p).unwrap();
    assert_eq!(read(&paths[0]), read(&paths[1]));
    let a = stdout(&run(&["verify", "--format", "json", "--only", "mems"]));
    let b = stdout(&run(&[
        "verify", "--format", "json", "--only", "mems", "--serial",
    ]));
    assert_eq!(a, b);
}

#[test]
fn verify_filters_and_tight_scale_fails() {
    let out = run(&["verify", "--only", "mems"]);
    let text = stdout(&out);
    assert_eq!(out.status.code(), Some(0), "{text}");
    let rows: Vec<&str> = text
        .lines()
        .filter(|l| l.starts_with("PASS") || l.starts_with("FAIL"))
        .collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|l| l.contains("/mems")));
    // rows appear in matrix order
    let ids: Vec<&str> = rows
        .iter()
        .map(|l| l.split_whitespace().nth(1).unwrap())
        .collect();
    assert_eq!(
        ids,
        ["3/mems", "5/mems", "6/mems", "7/mems", "8/mems", "9/mems"]
    );

    let out = run(&["verify", "--only", "mems", "--tol-scale", "1e-3"]);
    assert_ne!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn verify_full_matrix_on_defaults() {
    let out = run(&["verify"]);
    let text = stdout(&out);
    print!("{text}");
    assert!(text
        .lines()
        .any(|l| l.starts_with("FAIL") || l.starts_with("PASS")));
    assert_eq!(out.status.code(), Some(0), "{text}");
}
