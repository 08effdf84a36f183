use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sgu(args: &[&str], workers: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_sgu"));
    cmd.args(args);
    match workers {
        Some(w) => cmd.env("SGU_WORKERS", w),
        None => cmd.env_remove("SGU_WORKERS"),
    };
    cmd.output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

/// Header row and data rows of a CSV dataset.
fn table(csv: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = csv.lines().skip_while(|l| l.starts_with('#'));
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

const SMALL_MAP: [&str; 5] = [
    "thermometry-map",
    "--set",
    "thermometry.t0_points=4",
    "--set",
    "thermometry.delta_rel_points=4",
];

#[test]
fn small_thermometry_map_is_homodyne_or_heterodyne() {
    let out = sgu(&SMALL_MAP, None);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("# tool: sgu\n"));
    let (header, rows) = table(&text);
    assert_eq!(header[..4], ["T0", "delta_rel", "r_m_opt", "sgu"]);
    assert_eq!(rows.len(), 16);
    let r = column(&header, "r_m_opt");
    for row in &rows {
        let v: f64 = row[r].parse().unwrap();
        assert!(v == 0.0 || v == 1.0, "r_m_opt = {v}");
    }
    // Sidecar goes to stderr when writing to stdout.
    let meta: Value = serde_json::from_str(&stderr(&out)).unwrap();
    assert!(meta["wall_time_s"].as_f64().unwrap() >= 0.0);
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn output_is_deterministic_across_worker_counts() {
    let a = sgu(&SMALL_MAP, Some("1"));
    let b = sgu(&SMALL_MAP, Some("4"));
    let c = sgu(&SMALL_MAP, None);
    assert!(a.status.success() && b.status.success() && c.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn config_echo_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg_path = dir.path().join("run.json");
    std::fs::write(&cfg_path, r#"{"xy": {"sites": 8, "deltas": [0.1, 0.3]}}"#).unwrap();
    let out_a = dir.path().join("a.csv");
    let o = sgu(
        &[
            "xy-sgu",
            "--config",
            cfg_path.to_str().unwrap(),
            "--set",
            "xy.gamma=0.5",
            "-o",
            out_a.to_str().unwrap(),
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text_a = std::fs::read_to_string(&out_a).unwrap();
    let echo = text_a.lines().find_map(|l| l.strip_prefix("# config: ")).unwrap();
    let parsed: Value = serde_json::from_str(echo).unwrap();
    assert_eq!(parsed["xy"]["sites"], 8);
    assert_eq!(parsed["xy"]["gamma"], 0.5);
    assert_eq!(parsed["subcommand"], "xy-sgu");

    // Feeding the echo back (including its output path) reproduces the
    // dataset and the echo itself.
    let echo_path = dir.path().join("echo.json");
    std::fs::write(&echo_path, echo).unwrap();
    std::fs::remove_file(&out_a).unwrap();
    let o = sgu(&["xy-sgu", "--config", echo_path.to_str().unwrap()], None);
    assert!(o.status.success());
    assert!(stdout(&o).is_empty());
    assert_eq!(std::fs::read_to_string(&out_a).unwrap(), text_a);

    let (header, rows) = table(&text_a);
    assert_eq!(rows.len(), 2);
    assert_eq!(header.len(), 6 + 2 * 4);
    let gap = column(&header, "rel_gap");
    for row in rows {
        assert!(row[gap].parse::<f64>().unwrap() < 1e-6);
    }
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("a.csv.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"], parsed);
    assert_eq!(meta["rows"], 2);
}

#[test]
fn json_format_mirrors_csv() {
    let csv = sgu(&SMALL_MAP, None);
    let mut args = SMALL_MAP.to_vec();
    args.extend(["--format", "json"]);
    let json = sgu(&args, None);
    assert!(json.status.success());
    let doc: Value = serde_json::from_str(&stdout(&json)).unwrap();
    let (header, rows) = table(&stdout(&csv));
    let columns: Vec<String> = serde_json::from_value(doc["columns"].clone()).unwrap();
    assert_eq!(columns, header);
    let jrows = doc["rows"].as_array().unwrap();
    assert_eq!(jrows.len(), rows.len());
    for (j, c) in jrows.iter().zip(&rows) {
        let sgu_col = column(&header, "sgu");
        assert_eq!(j[sgu_col].as_f64().unwrap(), c[sgu_col].parse::<f64>().unwrap());
    }
    assert_eq!(doc["metadata"]["subcommand"], "thermometry-map");
}

#[test]
fn divergent_cells_are_flagged_not_zero() {
    let o = sgu(
        &[
            "pe-scaling",
            "--set",
            "phase.deltas=[1.5707963]",
            "--set",
            "phase.n_points=2",
            "--set",
            "phase.n_max=10",
            "--set",
            "phase.optimize_probe_phase=false",
        ],
        None,
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let (header, rows) = table(&stdout(&o));
    let value = column(&header, "G_homodyne");
    let flag = column(&header, "diverged_homodyne");
    for row in rows {
        assert_eq!(row[value], "");
        assert_eq!(row[flag], "1");
        assert!(row[column(&header, "G_opt")].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn usage_errors_exit_2_and_name_the_field() {
    let o = sgu(&["pe-scaling", "--set", "phase.deltas=[]"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("phase.deltas"));

    let o = sgu(&["thermometry-map", "--set", "thermometry.t0_points=0"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("thermometry.t0_points"));

    let o = sgu(&["xy-sgu", "--set", "xy.no_such_field=1"], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("xy.no_such_field"));

    let o = sgu(&["xy-sgu"], Some("zero"));
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("SGU_WORKERS"));

    let o = sgu(&["not-a-command"], None);
    assert_eq!(o.status.code(), Some(2));

    let o = sgu(&["xy-sgu", "--config", "/nonexistent/run.json"], None);
    assert_eq!(o.status.code(), Some(2));

    assert!(!Path::new("run.json").exists());
}

#[test]
fn numerical_failure_exits_3() {
    let o = sgu(
        &[
            "pe-asymptotic",
            "--set",
            "numerics.max_depth=1",
            "--set",
            "numerics.rel_tol=1e-14",
            "--set",
            "phase.asymptotic_deltas=[0.5]",
        ],
        None,
    );
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("quadrature"));
}

#[test]
fn help_exits_0() {
    let o = sgu(&["--help"], None);
    assert_eq!(o.status.code(), Some(0));
    for name in [
        "thermometry-map",
        "counter-map",
        "counter-slice",
        "pe-scaling",
        "pe-asymptotic",
        "pe-thermal",
        "xy-sgu",
    ] {
        assert!(stdout(&o).contains(name));
    }
}
