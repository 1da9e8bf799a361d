use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use otoc_cli::output::{config_from_csv, config_from_json};
use otoc_cli::RunConfig;

const GOLDEN_TOL: f64 = 1e-9;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_otoc-criticality"));
    c.env_remove("OTOC_THREADS").env("SOURCE_DATE_EPOCH", "1700000000");
    c
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("otoc-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    dir
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--output").arg(out).output().expect("binary runs")
}

fn read(p: PathBuf) -> String {
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

const SMALL: &[&str] = &["--n", "10", "--eta", "64", "--t-end", "40"];

#[test]
fn exit_codes() {
    let out = scratch("exit");
    let ok = run(&[&["trace"], SMALL].concat(), &out);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stderr));

    let unknown = run(&["scan", "--frobnicate", "3"], &out);
    assert_eq!(unknown.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&unknown.stderr).contains("frobnicate"));

    let bad_value = run(&["scan", "--n", "many"], &out);
    assert_eq!(bad_value.status.code(), Some(2));

    let one_point = run(
        &["scan", "--ratio-min", "1", "--ratio-max", "1", "--ratio-step", "0.01"],
        &out,
    );
    assert_eq!(one_point.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&one_point.stderr).contains("ratio_step"));

    let boundary = run(
        &[
            &[
                "scaling",
                "--etas",
                "64,128,256",
                "--search-min",
                "1.0",
                "--search-max",
                "1.04",
            ],
            SMALL,
        ]
        .concat(),
        &out,
    );
    assert_eq!(
        boundary.status.code(),
        Some(4),
        "{}",
        String::from_utf8_lossy(&boundary.stderr)
    );
    assert!(out.join("scaling_members.csv").exists());

    let numerical = run(
        &[
            &["trace", "--kind", "otoc-eq", "--ratio", "0", "--fit-window", "0,1"],
            SMALL,
        ]
        .concat(),
        &out,
    );
    assert_eq!(
        numerical.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&numerical.stderr)
    );

    let negative_beta = run(
        &[&["scan", "--kind", "otoc-thermal", "--beta", "-1"], SMALL].concat(),
        &out,
    );
    assert_eq!(negative_beta.status.code(), Some(2));
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn config_file_and_flags() {
    let out = scratch("cfgfile");
    std::fs::create_dir_all(&out).unwrap();
    let cfg = out.join("run.cfg");
    std::fs::write(&cfg, "n = 10\neta = 64\nt_end = 40\nkind = tpc\nratio = 0.5\n").unwrap();
    let r = run(&["trace", "--config", cfg.to_str().unwrap(), "--ratio", "0.9"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let back = config_from_csv(&read(out.join("trace_tpc.csv"))).unwrap();
    assert_eq!(back.n, 10);
    assert_eq!(back.ratio, 0.9);
    assert_eq!(back.kind.len(), 1);
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn echoed_config_round_trips() {
    let out = scratch("roundtrip");
    let args = [
        "scan",
        "--n",
        "10",
        "--eta",
        "64",
        "--t-end",
        "40",
        "--ratio-step",
        "0.1",
        "--kind",
        "otoc-inf,otoc-thermal",
        "--beta",
        "0.1,2.5",
    ];
    let r = run(&args, &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let mut expected = RunConfig::from_args(&args[1..].iter().map(|s| s.to_string()).collect::<Vec<_>>()).unwrap();
    expected.output = RunConfig::default().output;
    assert_eq!(config_from_csv(&read(out.join("scan_otoc-inf.csv"))).unwrap(), expected);
    let json: serde_json::Value = serde_json::from_str(&read(out.join("scan.json"))).unwrap();
    assert_eq!(json["schema_version"], 1);
    assert_eq!(json["produced_at"], "2023-11-14T22:13:20Z");
    assert_eq!(config_from_json(&json).unwrap(), expected);
    for col in json["tables"]["otoc-inf"]["columns"].as_array().unwrap() {
        assert!(!col["unit"].as_str().unwrap().is_empty());
    }
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn outputs_do_not_depend_on_thread_count() {
    let args = [
        "scan",
        "--n",
        "12",
        "--eta",
        "256",
        "--t-end",
        "60",
        "--ratio-step",
        "0.05",
        "--kind",
        "otoc-inf,tpc,otoc-eq",
    ];
    let mut files = Vec::new();
    for threads in ["1", "4"] {
        let out = scratch(&format!("threads{threads}"));
        let r = bin()
            .args(args)
            .arg("--output")
            .arg(&out)
            .env("OTOC_THREADS", threads)
            .output()
            .unwrap();
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
        files.push(["scan_otoc-inf.csv", "scan_tpc.csv", "scan_otoc-eq.csv", "scan.json"].map(|f| read(out.join(f))));
        std::fs::remove_dir_all(out).unwrap();
    }
    assert_eq!(files[0], files[1]);
}

#[test]
fn repeated_runs_are_identical() {
    let args = [
        "scan",
        "--n",
        "10",
        "--eta",
        "128",
        "--t-end",
        "40",
        "--ratio-step",
        "0.1",
        "--kind",
        "otoc-thermal",
    ];
    let mut runs = Vec::new();
    for i in 0..2 {
        let out = scratch(&format!("repeat{i}"));
        let r = run(&args, &out);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
        runs.push(read(out.join("scan_otoc-thermal_beta0.1.csv")));
        std::fs::remove_dir_all(out).unwrap();
    }
    assert_eq!(runs[0], runs[1]);
}

#[test]
fn default_trace_has_5001_rows() {
    let out = scratch("rows");
    let r = run(&["trace", "--kind", "otoc-inf"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let rows = data_rows(&read(out.join("trace_otoc-inf.csv")));
    assert_eq!(rows.len(), 5001);
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[5000][0], 500.0);
    assert!((rows[0][1] - 1.0).abs() < 1e-12);
    std::fs::remove_dir_all(out).unwrap();
}

fn assert_matches_golden(actual: &str, golden: &str) {
    let (a, g) = (data_rows(actual), data_rows(golden));
    assert_eq!(a.len(), g.len());
    for (i, (ra, rg)) in a.iter().zip(&g).enumerate() {
        for (x, y) in ra.iter().zip(rg) {
            assert!((x - y).abs() <= GOLDEN_TOL * (1.0 + y.abs()), "row {i}: {x} vs {y}");
        }
    }
}

#[test]
fn tpc_trace_matches_golden() {
    let out = scratch("golden-tpc");
    let r = run(&["trace", "--kind", "tpc"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let golden = read(Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden/trace_tpc.csv"));
    assert_matches_golden(&read(out.join("trace_tpc.csv")), &golden);
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn coarse_scans_match_golden() {
    let out = scratch("golden-scan");
    let r = run(&["scan", "--kind", "otoc-inf,tpc", "--ratio-step", "0.05"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    for f in ["scan_otoc-inf.csv", "scan_tpc.csv"] {
        let actual = read(out.join(f));
        assert_matches_golden(&actual, &read(dir.join(f)));
        let rows = data_rows(&actual);
        // local dip at the critical point
        let at = rows.iter().position(|r| (r[0] - 1.0).abs() < 1e-9).unwrap();
        assert!(rows[at][1] < rows[at - 1][1] && rows[at][1] < rows[at + 1][1], "{f}");
    }
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn zero_coupling_trace_is_flat() {
    let out = scratch("flat");
    let r = run(
        &[&["trace", "--ratio", "0", "--kind", "otoc-inf"], SMALL].concat(),
        &out,
    );
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let rows = data_rows(&read(out.join("trace_otoc-inf.csv")));
    assert!(rows.iter().all(|row| (row[1] - 1.0).abs() < 1e-12 && row[3] == 1.0));
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn ground_order_parameter_vanishes_at_zero_coupling() {
    let out = scratch("order0");
    let r = run(
        &[
            &[
                "order-param",
                "--ratio-min",
                "0",
                "--ratio-max",
                "1.5",
                "--ratio-step",
                "0.25",
            ],
            SMALL,
        ]
        .concat(),
        &out,
    );
    assert!(
        matches!(r.status.code(), Some(0) | Some(4)),
        "{}",
        String::from_utf8_lossy(&r.stderr)
    );
    let rows = data_rows(&read(out.join("order_ground.csv")));
    assert_eq!(rows[0][0], 0.0);
    assert!(rows[0][1].abs() < 1e-12);
    assert!(out.join("order_maxima.csv").exists());
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn synthetic_scaling_recovers_exponent() {
    let out = scratch("synthetic-scaling");
    let r = run(&["scaling", "--synthetic", "true", "--synthetic-k", "0.952"], &out);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    let json: serde_json::Value = serde_json::from_str(&read(out.join("scaling.json"))).unwrap();
    let fit = &json["summary"]["fit"];
    assert!((fit["exponent"].as_f64().unwrap() - 0.952).abs() < 1e-9);
    assert!((fit["r_squared"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(fit["points"], 10);
    std::fs::remove_dir_all(out).unwrap();
}

#[test]
fn synthetic_size_law_is_recovered() {
    let out = scratch("synthetic-size");
    let r = run(
        &[
            "size-fit",
            "--synthetic",
            "true",
            "--synthetic-a",
            "0.4",
            "--synthetic-b",
            "0.7",
            "--synthetic-c",
            "0.1",
        ],
        &out,
    );
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    for row in data_rows(&read(out.join("size_fit.csv"))) {
        let [_, a, b, c, residual, f_inf] = row[..] else {
            panic!("bad row {row:?}")
        };
        assert!((a - 0.4).abs() < 1e-8 && (b - 0.7).abs() < 1e-8 && (c - 0.1).abs() < 1e-8);
        assert!(residual < 1e-10);
        assert!((f_inf - 0.9).abs() < 1e-8);
    }
    std::fs::remove_dir_all(out).unwrap();
}
