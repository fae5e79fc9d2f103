use cachebc::bounds::parse_bounds_csv;
use std::process::{Command, Output};

fn cachebc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cachebc")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn bounds_breakpoints_csv() {
    let o = cachebc(&["bounds", "--preset", "fig5", "--grid", "breakpoints", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    let table = parse_bounds_csv(&stdout(&o)).unwrap();
    assert_eq!(table.columns, ["M", "lower_joint", "lower_separate", "upper"]);
    let memories: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
    for (got, want) in memories.iter().zip([0.0, 2.0548, 6.8681, 12.6386, 18.75, 25.0]) {
        assert!((got - want).abs() < 1e-3, "{got} vs {want}");
    }
    assert!(stderr(&o).contains("\"k_weak\":4"));
}

#[test]
fn csv_round_trip_is_byte_identical() {
    for args in [["--preset", "fig6", "--grid", "17"], ["--preset", "fig8", "--grid", "9"]] {
        let o = cachebc(&[&["bounds", "--format", "csv"][..], &args[..]].concat());
        let text = stdout(&o);
        assert_eq!(parse_bounds_csv(&text).unwrap().to_csv(), text);
    }
}

#[test]
fn two_user_columns_for_fig8() {
    let o = cachebc(&["bounds", "--preset", "fig8", "--format", "csv"]);
    let header = stdout(&o).lines().next().unwrap().to_string();
    assert!(header.contains("two_user_lower") && header.contains("single_weak_upper"), "{header}");
}

#[test]
fn scenario_sources() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("s.json");
    std::fs::write(
        &path,
        r#"{"k_weak":2,"k_strong":3,"delta_weak":0.6,"delta_strong":0.2,"packet_bits":4,"num_files":6}"#,
    )
    .unwrap();
    let from_file = cachebc(&["bounds", "--config", path.to_str().unwrap(), "--format", "csv"]);
    let inline = cachebc(&[
        "bounds", "--k-weak", "2", "--k-strong", "3", "--delta-weak", "0.6", "--delta-strong", "0.2", "--packet-bits", "4",
        "--num-files", "6", "--format", "csv",
    ]);
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(stdout(&from_file), stdout(&inline));
    assert_eq!(cachebc(&["bounds", "--format", "csv"]).status.code(), Some(2));
    assert_eq!(cachebc(&["bounds", "--preset", "fig5", "--k-weak", "3"]).status.code(), Some(2));
    assert_eq!(cachebc(&["bounds", "--k-weak", "3"]).status.code(), Some(2));
    assert_eq!(cachebc(&["bounds", "--preset", "fig9"]).status.code(), Some(2));
}

#[test]
fn memory_in_total_bits() {
    let a = cachebc(&["bounds", "--preset", "fig7", "--memory", "2.5", "--format", "csv", "--grid", "2"]);
    let b = cachebc(&["bounds", "--preset", "fig7", "--memory-bits", "5000", "--blocklength", "2000", "--format", "csv", "--grid", "2"]);
    assert!(stderr(&a).contains("\"memory\":2.5") && stderr(&b).contains("\"memory\":2.5"));
    assert_eq!(cachebc(&["bounds", "--preset", "fig7", "--memory-bits", "5000"]).status.code(), Some(2));
}

#[test]
fn zero_grid_is_usage_error() {
    assert_eq!(cachebc(&["bounds", "--preset", "fig5", "--grid", "0"]).status.code(), Some(2));
    assert_eq!(cachebc(&["bounds", "--preset", "fig5", "--grid", "many"]).status.code(), Some(2));
}

#[test]
fn verify_figures() {
    let o = cachebc(&["verify-figures", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for fig in ["fig7", "fig8"] {
        assert_eq!(text.lines().filter(|l| l.starts_with(fig) && l.contains("PASS")).count(), 3, "{text}");
    }
    assert!(text.lines().any(|l| l.starts_with("fig5 upper") && l.contains("INFO")));
    assert!(text.lines().any(|l| l.starts_with("fig5 joint") && l.contains("PASS")));
    assert_eq!(cachebc(&["verify-figures", "4"]).status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let path = tmp.path().join(name);
        let o = cachebc(&[
            "simulate", "--preset", "fig7", "--t", "1", "--rate-fraction", "0.9", "--n", "2000", "--trials", "4", "--seed", "1",
            "--jsonl", path.to_str().unwrap(), "--format", "json",
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        (std::fs::read(path).unwrap(), stdout(&o))
    };
    let (a, summary) = run("a.jsonl");
    let (b, _) = run("b.jsonl");
    assert_eq!(a, b);
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 4);
    let v: serde_json::Value = serde_json::from_str(&summary).unwrap();
    assert_eq!(v["trials"], 4);
    assert_eq!(v["feasible"], true);
}

#[test]
fn simulate_over_capacity_names_constraint() {
    let o = cachebc(&["simulate", "--preset", "fig7", "--rate-fraction", "1.2", "--n", "1000", "--trials", "1", "--format", "csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("subphase 3"), "{}", stderr(&o));
    assert_eq!(cachebc(&["simulate", "--preset", "fig7", "--t", "2", "--rate-fraction", "0.5", "--n", "100"]).status.code(), Some(2));
}

#[test]
fn piggyback_sweep_points() {
    let o = cachebc(&[
        "piggyback-sweep", "--delta1", "0.8", "--delta2", "0.2", "--points", "0.25:0.1,0:0", "--n", "2000", "--trials", "20",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows[0][3], "0", "side-info decoder above its single-user capacity: {text}");
    assert_eq!(rows[0][5], "false");
    assert_eq!((rows[1][3], rows[1][4]), ("1", "1"));
}

#[test]
fn all_equal_check() {
    let ok = cachebc(&["all-equal", "check", "--rates", "0.7,0.6", "--deltas", "0.5,0", "--budgets", "0.3,0"]);
    assert_eq!(ok.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&ok)).unwrap();
    assert_eq!(v["feasible"], true);
    assert!((v["allocation"][0][0].as_f64().unwrap() - 0.2).abs() < 1e-12);
    let bad = cachebc(&["all-equal", "check", "--rates", "0.7,0.6", "--deltas", "0.5,0", "--budgets", "0.2,0"]);
    assert_eq!(bad.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&bad)).unwrap();
    assert_eq!(v["certificate"]["receiver"], 0);
    assert_eq!(cachebc(&["all-equal", "check", "--rates", "x", "--deltas", "0.5", "--budgets", "0"]).status.code(), Some(2));
}

#[test]
fn cache_dump_and_inspect() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.bin");
    let p = path.to_str().unwrap();
    let o = cachebc(&["cache", "dump", "--k-tilde", "4", "--t-tilde", "2", "--num-files", "5", "--file-bits", "66", "--receiver", "2", "--out", p]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = cachebc(&["cache", "inspect", p, "--format", "json"]);
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["receiver"], 2);
    assert_eq!(v["entries"].as_array().unwrap().len(), 5 * 3);
    assert_eq!(v["cached_bits"], 5 * 3 * 11);
    std::fs::write(&path, b"nope").unwrap();
    assert_eq!(cachebc(&["cache", "inspect", p]).status.code(), Some(1));
}
