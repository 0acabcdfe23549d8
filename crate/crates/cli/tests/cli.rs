use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicUsize, Ordering};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_blockdl");

fn manifest_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

fn fixture(name: &str) -> PathBuf {
    manifest_dir().join("tests/fixtures").join(name)
}

/// A fresh scratch directory per call.
fn scratch(name: &str) -> PathBuf {
    static COUNTER: AtomicUsize = AtomicUsize::new(0);
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(format!("{name}-{}", COUNTER.fetch_add(1, Ordering::SeqCst)));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

struct Run {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run(dir: &Path, args: &[&str]) -> Run {
    let out = Command::new(BIN).args(args).current_dir(dir).output().unwrap();
    Run {
        code: out.status.code().unwrap_or(-1),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn run_ok(dir: &Path, args: &[&str]) -> String {
    let r = run(dir, args);
    assert_eq!(r.code, 0, "{args:?}\nstdout: {}\nstderr: {}", r.stdout, r.stderr);
    r.stdout
}

fn check_schema(name: &str, doc: &Value) {
    let path = manifest_dir().join("schemas").join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(doc).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{name}: {errors:?}");
}

fn json_run(dir: &Path, schema: &str, args: &[&str]) -> Value {
    let doc: Value = serde_json::from_str(&run_ok(dir, args)).unwrap();
    check_schema(schema, &doc);
    doc
}

/// Compares against a checked-in golden file; `BLESS=1` rewrites it.
fn golden(name: &str, actual: &str) {
    let path = manifest_dir().join("tests/golden").join(name);
    if std::env::var_os("BLESS").is_some() {
        fs::write(&path, actual).unwrap();
    }
    let expected = fs::read_to_string(&path).unwrap_or_else(|_| panic!("missing golden file {}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

fn csv_rows(text: &str) -> (Value, Vec<Vec<String>>, Vec<String>) {
    let mut lines = text.lines();
    let first = lines.next().unwrap();
    let config: Value = serde_json::from_str(first.strip_prefix("# config: ").expect("config comment")).unwrap();
    let body: String = lines.map(|l| format!("{l}\n")).collect();
    let mut reader = csv::Reader::from_reader(body.as_bytes());
    let header = reader.headers().unwrap().iter().map(String::from).collect();
    let rows = reader.records().map(|r| r.unwrap().iter().map(String::from).collect()).collect();
    (config, rows, header)
}

fn col(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"))
}

fn edges_and_partition(dir: &Path) -> (String, String) {
    let e = dir.join("g.edges");
    let p = dir.join("g.partition");
    fs::copy(fixture("two_triangles.edges"), &e).unwrap();
    fs::copy(fixture("two_triangles.partition"), &p).unwrap();
    ("g.edges".into(), "g.partition".into())
}

#[test]
fn dl_two_triangles_matches_golden() {
    let dir = scratch("dl");
    let (e, p) = edges_and_partition(&dir);
    let out = run_ok(&dir, &["dl", &e, &p]);
    let doc: Value = serde_json::from_str(&out).unwrap();
    check_schema("dl", &doc);
    let r = &doc["result"]["report"];
    assert!(r["sigma_nats"].as_f64().unwrap() > 0.0);
    assert!(r["beta_star"].as_f64().unwrap() > 0.0);
    assert_eq!(doc["config"]["subcommand"], "dl");
    assert_eq!(doc["config"]["common"]["gamma"], 1.0);
    golden("dl_two_triangles.json", &out);
    golden("dl_two_triangles_pp.csv", &run_ok(&dir, &["dl", &e, &p, "--method", "pp", "--format", "csv"]));
}

#[test]
fn optimize_two_triangles_matches_golden() {
    let dir = scratch("opt");
    let (e, _) = edges_and_partition(&dir);
    let out = run_ok(&dir, &["optimize", &e, "--format", "csv", "--partition-out", "best.partition"]);
    golden("optimize_two_triangles.csv", &out);
    let part = fs::read_to_string(dir.join("best.partition")).unwrap();
    assert_eq!(part, "a\t0\nb\t0\nc\t0\nd\t1\ne\t1\nf\t1\n");
    let doc = json_run(&dir, "optimize", &["optimize", &e]);
    assert!((doc["result"]["w"].as_f64().unwrap() - 5.0 / 14.0).abs() < 1e-12);
}

#[test]
fn overfit_flags_follow_structure() {
    let dir = scratch("overfit");
    run_ok(&dir, &["sample", "--method", "pp", "--n", "300", "--avg-k", "5", "--b", "1", "--e-in", "750", "--seed", "4", "--prefix", "er"]);
    run_ok(&dir, &["optimize", "er.edges", "--partition-out", "er.best"]);
    let doc = json_run(&dir, "dl", &["dl", "er.edges", "er.best"]);
    assert_eq!(doc["result"]["report"]["overfit"]["exceeds_er"], true);

    run_ok(&dir, &["sample", "--method", "pp", "--n", "300", "--avg-k", "5", "--b", "5", "--e-in", "712", "--seed", "4", "--prefix", "pp"]);
    let doc = json_run(&dir, "dl", &["dl", "pp.edges", "pp.partition"]);
    assert_eq!(doc["result"]["report"]["overfit"]["exceeds_er"], false);
    assert_eq!(doc["result"]["report"]["overfit"]["exceeds_cm"], false);
}

#[test]
fn sample_is_deterministic_and_tracks_beta() {
    let dir = scratch("sample");
    let args = |prefix: &str| -> Vec<String> {
        ["sample", "--n", "1000", "--avg-k", "10", "--beta-over-n", "50", "--seed", "7", "--prefix", prefix].iter().map(|s| s.to_string()).collect()
    };
    let a: Vec<String> = args("a");
    let b: Vec<String> = args("b");
    let doc: Value = serde_json::from_str(&run_ok(&dir, &a.iter().map(String::as_str).collect::<Vec<_>>())).unwrap();
    check_schema("sample", &doc);
    run_ok(&dir, &b.iter().map(String::as_str).collect::<Vec<_>>());
    for ext in ["edges", "partition", "meta.json"] {
        let x = fs::read(dir.join(format!("a.{ext}"))).unwrap();
        let y = fs::read(dir.join(format!("b.{ext}"))).unwrap();
        assert_eq!(x, y, "{ext} differs between identical runs");
    }
    let meta = &doc["result"]["meta"];
    assert!(meta["b_star"].as_u64().unwrap() > 1);
    assert!(meta["e_in_star"].as_u64().unwrap() > 4000);

    let doc = json_run(&dir, "sample", &["sample", "--n", "1000", "--avg-k", "10", "--beta-over-n", "1", "--prefix", "cold"]);
    assert_eq!(doc["result"]["meta"]["e_in_star"], 0);
}

#[test]
fn repeated_runs_are_identical() {
    let dir = scratch("det");
    run_ok(&dir, &["sample", "--method", "pp", "--n", "200", "--avg-k", "6", "--b", "4", "--e-in", "480", "--seed", "2", "--prefix", "g"]);
    for args in [
        vec!["optimize", "g.edges", "--seed", "3"],
        vec!["optimize", "g.edges", "--method", "infomap", "--format", "csv"],
        vec!["gamma-scan", "g.edges", "--gammas", "0.5,1,2"],
        vec!["dl", "g.edges", "g.partition", "--dc"],
    ] {
        assert_eq!(run_ok(&dir, &args), run_ok(&dir, &args), "{args:?}");
    }
}

fn ring_of_cliques(path: &Path, k: usize, c: usize) {
    let mut s = String::new();
    for i in 0..c {
        for a in 0..k {
            for b in a + 1..k {
                s.push_str(&format!("{} {}\n", i * k + a, i * k + b));
            }
        }
        s.push_str(&format!("{} {}\n", i * k, ((i + 1) % c) * k + 1));
    }
    fs::write(path, s).unwrap();
}

#[test]
fn gamma_scan_marks_minimum_and_escapes_resolution_limit() {
    let dir = scratch("scan");
    ring_of_cliques(&dir.join("ring.edges"), 5, 30);
    let doc = json_run(&dir, "gamma-scan", &["gamma-scan", "ring.edges"]);
    let best = &doc["result"]["best"];
    assert!((best["gamma"].as_f64().unwrap() - 1.0).abs() > 1e-6);
    assert_eq!(best["b_hat"], 30);
    let records = doc["result"]["records"].as_array().unwrap();
    let min = records.iter().map(|r| r["sigma"].as_f64().unwrap()).fold(f64::INFINITY, f64::min);
    assert!(best["sigma"].as_f64().unwrap() >= min);

    let (_, rows, header) = csv_rows(&run_ok(&dir, &["gamma-scan", "ring.edges", "--format", "csv"]));
    let sel = col(&header, "selected");
    assert_eq!(rows.iter().filter(|r| r[sel] == "true").count(), 1);
    assert_eq!(rows.len(), records.len());
}

#[test]
fn gamma_scan_on_random_graph_stays_near_baseline() {
    let dir = scratch("scan-er");
    run_ok(&dir, &["sample", "--method", "pp", "--n", "300", "--avg-k", "5", "--b", "1", "--e-in", "750", "--seed", "5", "--prefix", "er"]);
    let doc = json_run(&dir, "gamma-scan", &["gamma-scan", "er.edges"]);
    let sigma = doc["result"]["best"]["sigma"].as_f64().unwrap();
    let er = doc["result"]["sigma_er"].as_f64().unwrap();
    assert!((sigma - er).abs() / er < 0.02, "{sigma} vs {er}");
}

#[test]
fn compare_emits_complete_tables() {
    let dir = scratch("compare");
    let mut manifest = String::from("# toy corpus\n");
    for s in 0..8 {
        run_ok(&dir, &["sample", "--method", "pp", "--n", "120", "--avg-k", "6", "--b", "4", "--e-in", "300", "--seed", &s.to_string(), "--prefix", &format!("pp{s}")]);
        manifest.push_str(&format!("pp{s}.edges planted\n"));
    }
    run_ok(&dir, &["sample", "--method", "pp", "--n", "120", "--avg-k", "6", "--b", "1", "--e-in", "360", "--seed", "9", "--prefix", "er"]);
    manifest.push_str("er.edges random\nmissing.edges broken\n");
    fs::write(dir.join("corpus.txt"), manifest).unwrap();

    let doc = json_run(&dir, "compare", &["compare", "corpus.txt", "--gammas", "0.5,1,2"]);
    let result = &doc["result"];
    let nets = result["networks"].as_array().unwrap();
    assert_eq!(nets.len(), 10);
    assert!(nets[9]["error"].is_string());
    let wins = result["win_fraction"].as_array().unwrap();
    assert_eq!(wins.len(), 4);
    for row in wins {
        assert!(row.as_array().unwrap().iter().all(Value::is_number));
    }
    assert_eq!(result["ranking"].as_array().unwrap().len(), 4);
    assert_eq!(nets[0]["tag"], "planted");

    // the modularity row agrees with a standalone optimize + dl run
    let opt = json_run(&dir, "optimize", &["optimize", "pp0.edges"]);
    let modularity = nets[0]["methods"].as_array().unwrap().iter().find(|m| m["method"] == "modularity").unwrap();
    assert_eq!(modularity["sigma"], opt["result"]["description_length"]["sigma_nats"]);

    let (_, rows, header) = csv_rows(&run_ok(&dir, &["compare", "corpus.txt", "--gammas", "0.5,1,2", "--format", "csv"]));
    assert_eq!(rows.len(), 9 * 4 + 1);
    assert!(!rows.last().unwrap()[col(&header, "error")].is_empty());
}

#[test]
fn dos_crosses_random_baseline() {
    let dir = scratch("dos");
    let doc = json_run(&dir, "dos", &["dos", "--n", "10000", "--avg-k", "10", "--bins", "20", "--relative-to-er"]);
    let rows = doc["result"]["rows"].as_array().unwrap();
    let rel: Vec<f64> = rows.iter().map(|r| r["sigma"].as_f64().unwrap()).collect();
    assert!(rel.first().unwrap() > &0.0);
    assert!(rel.last().unwrap() < &0.0);

    let (config, rows, header) = csv_rows(&run_ok(&dir, &["dos", "--n", "500", "--avg-k", "5", "--bins", "10", "--format", "csv"]));
    assert_eq!(config["resolved"]["e"], 1250);
    assert!(header.contains(&"sigma".to_string()));
    assert!(!rows.is_empty());
}

#[test]
fn priors_are_bimodal_near_transition() {
    let dir = scratch("priors");
    let doc = json_run(&dir, "priors", &["priors", "--n", "100000", "--avg-k", "10", "--beta-over-n", "20,20.7637,22", "--transition"]);
    let t = &doc["result"]["transition"];
    assert!((t["beta_star_over_n"].as_f64().unwrap() - 20.7637).abs() < 0.01);

    let (_, rows, header) = csv_rows(&run_ok(&dir, &["priors", "--n", "100000", "--avg-k", "10", "--beta-over-n", "20.7637", "--format", "csv"]));
    let (b, ld) = (col(&header, "b"), col(&header, "log_density_b"));
    let pts: Vec<(u64, f64)> = rows.iter().map(|r| (r[b].parse().unwrap(), r[ld].parse().unwrap_or(f64::NEG_INFINITY))).collect();
    let top = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let peaks: Vec<u64> = (0..pts.len())
        .filter(|&i| {
            let left = if i == 0 { f64::NEG_INFINITY } else { pts[i - 1].1 };
            let right = pts.get(i + 1).map_or(f64::NEG_INFINITY, |p| p.1);
            pts[i].1 > left && pts[i].1 >= right && pts[i].1 > top - 30.0
        })
        .map(|i| pts[i].0)
        .collect();
    assert!(peaks.len() >= 2, "{peaks:?}");
    assert!(peaks.iter().max().unwrap() / peaks.iter().min().unwrap() >= 10);
}

#[test]
fn feasibility_points_clear_detectability() {
    let dir = scratch("feas");
    let doc = json_run(&dir, "feasibility", &["feasibility", "--n", "10000", "--avg-k", "10", "--points", "60"]);
    assert_eq!(doc["result"]["curves"].as_array().unwrap().len(), 4);
    let (_, rows, header) = csv_rows(&run_ok(&dir, &["feasibility", "--n", "10000", "--avg-k", "10", "--points", "60", "--format", "csv"]));
    let (finite, above) = (col(&header, "finite_b"), col(&header, "above_detectability"));
    let finite_rows: Vec<_> = rows.iter().filter(|r| r[finite] == "true").collect();
    assert!(!finite_rows.is_empty());
    assert!(finite_rows.iter().all(|r| r[above] == "true"));
}

#[test]
fn validate_reports_through_exit_code() {
    let dir = scratch("validate");
    let l = run(&dir, &["validate", "--suite", "l", "--quick"]);
    assert_eq!(l.code, 0, "{}", l.stderr);
    let doc: Value = serde_json::from_str(&l.stdout).unwrap();
    check_schema("validate", &doc);
    assert_eq!(doc["result"]["passed"], true);

    let (_, rows, header) = csv_rows(&run_ok(&dir, &["validate", "--suite", "l", "--quick", "--format", "csv"]));
    assert_eq!(header, ["N", "B", "avg_k", "ein_frac", "var_L"]);
    assert!(!rows.is_empty());

    // the modularity suite includes the variance band, which fails
    let q = run(&dir, &["validate", "--suite", "q", "--quick"]);
    let doc: Value = serde_json::from_str(&q.stdout).unwrap();
    check_schema("validate", &doc);
    let checks = doc["result"]["checks"].as_array().unwrap();
    let by_name = |n: &str| checks.iter().find(|c| c["name"] == n).unwrap()["passed"].clone();
    assert_eq!(by_name("q_gamma0_zero_variance"), true);
    assert!(checks.iter().filter(|c| c["name"].as_str().unwrap().starts_with("q_mean")).all(|c| c["passed"] == true));
    assert_eq!(q.code, if doc["result"]["passed"] == true { 0 } else { 4 });
    if q.code == 4 {
        check_schema("error", &serde_json::from_str(q.stderr.trim()).unwrap());
    }
}

#[test]
fn error_classes_map_to_exit_codes() {
    let dir = scratch("errors");
    let (e, p) = edges_and_partition(&dir);
    fs::write(dir.join("bad.edges"), "a b c\n").unwrap();
    fs::write(dir.join("short.partition"), "0\n1\n").unwrap();
    let cases: Vec<(Vec<&str>, i32)> = vec![
        (vec!["dl", &e], 1),
        (vec!["frobnicate"], 1),
        (vec!["optimize", &e, "--method", "pp"], 1),
        (vec!["optimize", &e, "--gamma", "-1"], 1),
        (vec!["dos", "--n", "100"], 1),
        (vec!["dl", "nope.edges", &p], 2),
        (vec!["dl", "bad.edges", &p], 2),
        (vec!["dl", &e, "short.partition"], 2),
        (vec!["sample", "--method", "pp", "--n", "10", "--avg-k", "4", "--b", "5", "--e-in", "20", "--prefix", "x"], 3),
    ];
    for (args, code) in cases {
        let r = run(&dir, &args);
        assert_eq!(r.code, code, "{args:?}: {}", r.stderr);
        let last = r.stderr.trim().lines().last().unwrap();
        let err: Value = serde_json::from_str(last).unwrap();
        check_schema("error", &err);
        assert_eq!(err["error"]["exit_code"], code);
    }
    assert_eq!(run(&dir, &["--help"]).code, 0);
}

#[test]
fn out_flag_writes_file() {
    let dir = scratch("out");
    let (e, p) = edges_and_partition(&dir);
    let r = run(&dir, &["dl", &e, &p, "--out", "report.json"]);
    assert_eq!(r.code, 0);
    assert!(r.stdout.is_empty());
    let doc: Value = serde_json::from_str(&fs::read_to_string(dir.join("report.json")).unwrap()).unwrap();
    check_schema("dl", &doc);
    assert_eq!(doc["config"]["common"]["out"], "report.json");
}
