use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_innodex"));
    c.env_remove("INNODEX_STORE");
    c
}

fn fixture() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures/smartphone")
}

fn ok(out: Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn model_validate_reports_valid_and_invalid() {
    let out = ok(bin().args(["model", "validate"]).arg(fixture().join("model.json")).output().unwrap());
    assert!(out.contains("smartphone: valid"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"object_id":"x","structure_archetypes":[{"term":"a"}],"condition_archetypes":[{"term":"b"},{"term":"c"}],
            "result_archetypes":[{"term":"d"}],"markers":[{"term":"m"}]}"#,
    )
    .unwrap();
    let out = bin().args(["model", "validate"]).arg(&bad).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("CARDINALITY_MISMATCH"));
    ok(bin().args(["model", "validate", "--cardinality-as-warning"]).arg(&bad).output().unwrap());
}

#[test]
fn queries_generate_writes_sixteen() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("q.json");
    ok(bin().args(["queries", "generate", "--model"]).arg(fixture().join("model.json")).arg("--out").arg(&out).output().unwrap());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["queries"].as_array().unwrap().len(), 16);

    let tsv = dir.path().join("q.tsv");
    ok(bin()
        .args(["queries", "generate", "--dialect", "web-plus", "--model"])
        .arg(fixture().join("model.json"))
        .arg("--out")
        .arg(&tsv)
        .output()
        .unwrap());
    let text = std::fs::read_to_string(&tsv).unwrap();
    assert_eq!(text.lines().count(), 16);
    assert!(text.lines().all(|l| l.split('\t').nth(2).unwrap().starts_with('+')));
}

#[test]
fn ingest_then_indicators() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    std::fs::write(
        &csv,
        "object_id,source_id,query_id,year,metric,value\n\
         phone,scholar,q1,2005,hit_count,2\nphone,scholar,q2,2005,hit_count,4\nphone,scholar,q3,2005,hit_count,8\n\
         phone,scholar,q1,2005,access_frequency,10\nphone,scholar,q2,2005,access_frequency,20\nphone,scholar,q3,2005,access_frequency,30\n",
    )
    .unwrap();
    let store = dir.path().join("store");
    let out = ok(bin().arg("ingest").arg("--csv").arg(&csv).env("INNODEX_STORE", &store).output().unwrap());
    assert!(out.contains("6 records"));

    // second load of the same rows is rejected as a whole
    let again = bin().arg("ingest").arg("--csv").arg(&csv).arg("--store").arg(&store).output().unwrap();
    assert_eq!(code(&again), 1);

    let series = dir.path().join("ind.csv");
    ok(bin()
        .args(["indicators", "--object", "phone", "--source", "scholar", "--window", "2000:2010", "--out"])
        .arg(&series)
        .arg("--store")
        .arg(&store)
        .output()
        .unwrap());
    let text = std::fs::read_to_string(&series).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "year,indicator,value,normalization,aggregation");
    let nov: f64 = rows[1].split(',').nth(2).unwrap().parse().unwrap();
    assert!((nov - 5.0 / 9.0).abs() < 1e-12, "{nov}");
    assert_eq!(rows[2], "2005,Dem,0.5,linear,mean");

    let none = bin()
        .args(["indicators", "--object", "phone", "--source", "web", "--window", "2000:2010", "--out"])
        .arg(dir.path().join("x.csv"))
        .arg("--store")
        .arg(&store)
        .output()
        .unwrap();
    assert_eq!(code(&none), 3);
}

#[test]
fn ingest_reports_line_of_bad_value() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("m.csv");
    std::fs::write(&csv, "object_id,source_id,query_id,year,metric,value\nphone,s,q1,2005,hit_count,2\nphone,s,q2,2005,hit_count,-4\n")
        .unwrap();
    let out = bin().arg("ingest").arg("--csv").arg(&csv).arg("--store").arg(dir.path().join("s")).output().unwrap();
    assert_ne!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));
}

#[test]
fn synth_requires_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin().args(["synth", "--period", "8", "--window", "2000:2023", "--out"]).arg(dir.path()).output().unwrap();
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn synth_then_trend_and_groups() {
    let dir = tempfile::tempdir().unwrap();
    let store = dir.path().join("store");
    ok(bin()
        .args(["synth", "--period", "6", "--window", "2000:2023", "--seed", "3", "--object", "obj", "--source", "web", "--out"])
        .arg(&store)
        .output()
        .unwrap());
    let series = dir.path().join("ind.csv");
    ok(bin()
        .args(["indicators", "--object", "obj", "--source", "web", "--window", "2000:2023", "--out"])
        .arg(&series)
        .arg("--store")
        .arg(&store)
        .output()
        .unwrap());

    let mixed = bin().args(["analyze", "trend", "--series"]).arg(&series).arg("--out").arg(dir.path().join("t.csv")).output().unwrap();
    assert_eq!(code(&mixed), 2);

    let fitted = dir.path().join("t.csv");
    let out = ok(bin()
        .args(["analyze", "trend", "--indicator", "Nov", "--degree", "1", "--series"])
        .arg(&series)
        .arg("--out")
        .arg(&fitted)
        .output()
        .unwrap());
    let fit: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(fit["slope_sign"], -1);
    assert_eq!(std::fs::read_to_string(&fitted).unwrap().lines().count(), 25);

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    std::fs::write(&a, "value\n0.6\n0.9\n").unwrap();
    std::fs::write(&b, "value\n0.5\n").unwrap();
    let out = ok(bin().args(["analyze", "groups", "--a"]).arg(&a).arg("--b").arg(&b).output().unwrap());
    let cmp: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((cmp["excess_percent"].as_f64().unwrap() - 50.0).abs() < 1e-9);

    std::fs::write(&b, "value\n0\n").unwrap();
    let out = bin().args(["analyze", "groups", "--a"]).arg(&a).arg("--b").arg(&b).output().unwrap();
    assert_eq!(code(&out), 1);
}

#[test]
fn run_twice_is_byte_identical_and_report_converts() {
    let dir = tempfile::tempdir().unwrap();
    let (one, two) = (dir.path().join("one"), dir.path().join("two"));
    for out in [&one, &two] {
        ok(bin().arg("run").arg("--config").arg(fixture().join("project.json")).arg("--out").arg(out).output().unwrap());
    }
    let a = std::fs::read(one.join("smartphone.json")).unwrap();
    assert_eq!(a, std::fs::read(two.join("smartphone.json")).unwrap());

    let csv_dir = dir.path().join("csv");
    ok(bin().arg("report").arg("--input").arg(one.join("smartphone.json")).arg("--out").arg(&csv_dir).output().unwrap());
    let index = std::fs::read_to_string(csv_dir.join("smartphone_index.csv")).unwrap();
    assert!(index.starts_with("object_id,crisp_ix,interval_lo,interval_hi,w_nov,w_dem,w_imp,flags\n"));
}

#[test]
fn run_overrides_and_batch() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run", "--window", "2022:2023", "--weights", "0.5,0.5,0", "--config"])
        .arg(fixture().join("project.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no_cycles"));
    let r: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("smartphone.json")).unwrap()).unwrap();
    assert_eq!(r["index"]["partial"], true);
    assert_eq!(r["index"]["weights"]["w_nov"], 0.5);

    let bad = bin()
        .args(["run", "--weights", "0.5,0.5,0.5", "--config"])
        .arg(fixture().join("project.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);

    let batch = dir.path().join("batch");
    ok(bin().args(["run", "--all", "--config"]).arg(fixture().join("batch.json")).arg("--out").arg(&batch).output().unwrap());
    let index = std::fs::read_to_string(batch.join("index.csv")).unwrap();
    assert_eq!(index.lines().count(), 3);
}

#[test]
fn run_with_missing_store_is_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .arg("run")
        .arg("--config")
        .arg(fixture().join("project.json"))
        .arg("--store")
        .arg(dir.path().join("nowhere"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
}
