use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

fn igtmt(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_igtmt")).args(args).output().unwrap()
}

fn fixture(rel: &str) -> String {
    let p: PathBuf = [env!("CARGO_MANIFEST_DIR"), "../../fixtures", rel].iter().collect();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn validate_mini_corpus() {
    let o = igtmt(&["validate", "--corpus", &fixture("mini.jsonl"), "--format", "jsonl"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "5 entries, 0 errors, 0 warnings\n");
    let o = igtmt(&[
        "validate",
        "--corpus",
        &fixture("mini.txt"),
        "--format",
        "sigmorphon",
        "--language",
        "swa",
    ]);
    assert_eq!(stdout(&o), "5 entries, 0 errors, 0 warnings\n");
}

#[test]
fn validate_reports_findings_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.jsonl");
    fs::write(
        &path,
        r#"{"transcription":"a b","segmentation":"a-x b","glosses":"A","translation":"t","language":"swa"}"#,
    )
    .unwrap();
    let o = igtmt(&["validate", "--corpus", path.to_str().unwrap(), "--format", "jsonl"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "1 entries, 0 errors, 2 warnings\n");
    assert!(stderr(&o).contains("segmentation-mismatch"));
}

#[test]
fn score_identical_files_is_100() {
    let refs = fixture("toy/refs.txt");
    let o = igtmt(&["score", "--hyps", &refs, "--refs", &refs, "--metric", "bleu"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "100.0\n");
    let o = igtmt(&["score", "--hyps", &refs, "--refs", &refs, "--metric", "chrf++"]);
    assert_eq!(stdout(&o), "100.0\n");
}

#[test]
fn score_unequal_line_counts_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let short = dir.path().join("short.txt");
    fs::write(&short, "one\ntwo\nthree\n").unwrap();
    let o = igtmt(&[
        "score",
        "--hyps",
        short.to_str().unwrap(),
        "--refs",
        &fixture("toy/refs.txt"),
        "--metric",
        "bleu",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("has 3 lines") && err.contains("has 8 lines"), "{err}");
    assert!(stdout(&o).is_empty());
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(igtmt(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(igtmt(&["run"]).status.code(), Some(1));
    assert_eq!(
        igtmt(&["score", "--hyps", "a", "--refs", "b", "--metric", "rouge"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(igtmt(&["goldens"]).status.code(), Some(1));
    assert_eq!(igtmt(&["--help"]).status.code(), Some(0));
}

#[test]
fn run_failure_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let empty_cache = dir.path().join("cache");
    let o = igtmt(&[
        "run",
        "--config",
        &fixture("run.json"),
        "--cache-dir",
        empty_cache.to_str().unwrap(),
        "--output-dir",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("3 of 3 entries failed"));
    assert!(dir.path().join("out/run_result.json").exists());
}

#[test]
fn unknown_config_key_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    let text = fs::read_to_string(fixture("run.json"))
        .unwrap()
        .replace("\"seed\"", "\"sead\"");
    fs::write(&cfg, text).unwrap();
    let o = igtmt(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sead"));
}

#[test]
fn run_flags_override_config() {
    let stub = igtmt_llm::StubServer::echo().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = igtmt(&[
        "run",
        "--config",
        &fixture("run.json"),
        "--backend",
        "live",
        "--endpoint",
        stub.url(),
        "--strategy",
        "gloss-shot",
        "--n-support",
        "1",
        "--metrics",
        "bleu",
        "--cache-dir",
        dir.path().join("cache").to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("bleu\t"));
    let csv = fs::read_to_string(out.join("report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv
        .lines()
        .nth(1)
        .unwrap()
        .starts_with("swa,to-english,gloss-shot,1,bleu,"));
    assert_eq!(stub.hits(), 4);
}

#[test]
fn ablate_writes_one_result_per_n() {
    let stub = igtmt_llm::StubServer::echo().unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = igtmt(&[
        "ablate",
        "--config",
        &fixture("run.json"),
        "--ns",
        "2,1",
        "--backend",
        "live",
        "--endpoint",
        stub.url(),
        "--cache-dir",
        dir.path().join("cache").to_str().unwrap(),
        "--output-dir",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    let rows: Vec<&str> = table.lines().skip(2).collect();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].starts_with("| 1 |") && rows[1].starts_with("| 2 |"), "{table}");
    assert!(out.join("nshot/n1/run_result.json").exists());
    assert!(out.join("nshot/report.md").exists());

    let o = igtmt(&["ablate", "--config", &fixture("run.json"), "--ns", "9"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sigtest_prints_a_row() {
    let o = igtmt(&[
        "sigtest",
        "--hyps-a",
        &fixture("toy/hyps_a.txt"),
        "--hyps-b",
        &fixture("toy/hyps_a.txt"),
        "--refs",
        &fixture("toy/refs.txt"),
        "--metric",
        "bleu",
        "--seed",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let row: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(row["significant"], false);
    assert_eq!(row["p_value"], 1.0);
}

#[test]
fn report_from_result_files() {
    let golden = fixture("golden/run_result.json");
    let o = igtmt(&["report", "--in", &golden, "--format", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), fs::read_to_string(fixture("golden/report.csv")).unwrap());

    let o = igtmt(&["report", "--in", &golden, &golden, "--format", "jsonl"]);
    assert_eq!(stdout(&o).lines().count(), 4);

    let dir = tempfile::tempdir().unwrap();
    let o = igtmt(&[
        "report",
        "--in",
        &golden,
        "--format",
        "markdown",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).is_empty());
    assert!(dir.path().join("report.md").exists());
}

#[test]
fn goldens_check_passes_on_shipped_fixtures() {
    let o = igtmt(&["goldens", "--check", "--fixtures", &fixture("")]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn goldens_check_flags_stale_files() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["mini.jsonl", "dict.tsv", "run.json"] {
        fs::copy(fixture(f), dir.path().join(f)).unwrap();
    }
    let copy = |from: &str, to: &PathBuf| {
        fs::create_dir_all(to).unwrap();
        for e in fs::read_dir(fixture(from)).unwrap() {
            let e = e.unwrap();
            fs::copy(e.path(), to.join(e.file_name())).unwrap();
        }
    };
    copy("cache", &dir.path().join("cache"));
    copy("prompts", &dir.path().join("prompts"));
    copy("golden", &dir.path().join("golden"));
    let fx = dir.path().to_str().unwrap();
    assert_eq!(igtmt(&["goldens", "--check", "--fixtures", fx]).status.code(), Some(0));

    let target = dir.path().join("prompts/few-shot__to-english__n2.txt");
    fs::write(&target, "tampered").unwrap();
    let o = igtmt(&["goldens", "--check", "--fixtures", fx]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("few-shot__to-english__n2.txt"));

    let o = igtmt(&["goldens", "--bless", "--fixtures", fx]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(igtmt(&["goldens", "--check", "--fixtures", fx]).status.code(), Some(0));
}
