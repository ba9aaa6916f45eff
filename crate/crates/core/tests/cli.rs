use std::path::PathBuf;
use std::process::{Command, Output};

fn deflab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deflab"))
        .args(args)
        .env_remove("DEFLAB_THREADS")
        .output()
        .expect("failed to run deflab")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json_lines(out: &Output) -> Vec<serde_json::Value> {
    stdout(out).lines().map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn temp_file(name: &str, contents: &str) -> PathBuf {
    let path = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, contents).unwrap();
    path
}

#[test]
fn classify_left_projection() {
    let path = temp_file("left_projection.txt", "# x*y = x\n2\n0 0\n1 1\n");
    let out = deflab(&["classify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let lines = json_lines(&out);
    assert_eq!(lines[0]["subset"], serde_json::json!([0, 1]));
    assert_eq!(lines[0]["type"], "T5");
    assert_eq!(lines[1]["diagram"]["edges"], serde_json::json!([[1, 2, "T5"]]));
    assert_eq!(lines[1]["stats"]["beta"], 4);

    let csv = deflab(&["--format", "csv", "classify", path.to_str().unwrap()]);
    assert_eq!(stdout(&csv), "subset,kind,exceedance\n0 1,T5,0\n");
}

#[test]
fn classify_skips_t0_unless_asked() {
    let path = temp_file("constant.txt", "2\n1 1\n1 1\n");
    let out = deflab(&["classify", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!stdout(&out).contains("\"T0\""));
    let out = deflab(&["--include-t0", "classify", path.to_str().unwrap()]);
    assert!(stdout(&out).contains("\"T0\""));
}

#[test]
fn input_errors_exit_two() {
    let bad = temp_file("out_of_range.txt", "2\n0 0\n1 5\n");
    let out = deflab(&["classify", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    assert_eq!(deflab(&["classify", "/nonexistent/table.txt"]).status.code(), Some(2));
    assert_eq!(deflab(&["mc"]).status.code(), Some(2));
    assert_eq!(deflab(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(deflab(&["exact", "--n", "4"]).status.code(), Some(2));
    let triangle = r#"{"v":3,"edges":[[1,2,"T7"],[1,3,"T7"],[2,3,"T1"]]}"#;
    assert_eq!(deflab(&["witness", "--diagram", triangle]).status.code(), Some(2));
}

#[test]
fn theory_pair2() {
    let out = deflab(&["theory", "pair2"]);
    assert_eq!(out.status.code(), Some(0));
    let lines = json_lines(&out);
    assert_eq!(lines[0]["exact"], "7/2");
    let p = lines[1]["real"].as_f64().unwrap();
    assert_eq!(format!("{p:.4}"), "0.9698");
}

#[test]
fn theory_exceedance_three() {
    let lines = json_lines(&deflab(&["theory", "exceedance", "--s", "3"]));
    assert_eq!(lines[0]["exact"], "441");
}

#[test]
fn exact_order_two_is_certain() {
    let out = deflab(&["exact", "--n", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let line = &json_lines(&out)[0];
    assert_eq!(line["probability"], "1");
    assert_eq!(line["tables"], 16);
}

#[test]
fn diagram_census() {
    let line = &json_lines(&deflab(&["diagrams", "--k", "2", "--count"]))[0];
    assert_eq!(line["count"], 294);
    assert_eq!(line["base_graphs"], 6);
    assert_eq!(line["perfect_matchings"], 147);

    let listed = deflab(&["diagrams", "--k", "1", "--list"]);
    assert_eq!(stdout(&listed).lines().count(), 7);
}

#[test]
fn verify_lemma3_passes() {
    let out = deflab(&["verify-lemma3", "--k-max", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let report = &json_lines(&out)[0];
    assert_eq!(report["violations"], serde_json::json!([]));
    assert_eq!(report["by_k"], serde_json::json!([[1, 7], [2, 294]]));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checked 294"));
}

#[test]
fn witness_of_single_edge() {
    let out = deflab(&["witness", "--diagram", r#"{"v":2,"edges":[[1,2,"T7"]]}"#]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(stdout(&out), "2\n0 1\n1 0\n");

    let path = temp_file("t5.json", r#"{"v":2,"edges":[[1,2,"T5"]]}"#);
    let out = deflab(&["witness", "--diagram", path.to_str().unwrap()]);
    assert_eq!(stdout(&out), "2\n0 0\n1 1\n");
}

#[test]
fn sweep_csv_header() {
    let out = deflab(&["--format", "csv", "--samples", "200", "sweep", "--n-list", "10,20"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("n,p_hat,stderr,lambda_n,poisson_approx,limit"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn output_independent_of_thread_count() {
    let runs: &[&[&str]] = &[
        &["--samples", "3000", "--seed", "5", "mc", "--n", "40"],
        &["--samples", "500", "--seed", "5", "mc", "--n", "20", "--s", "3", "--eps", "1"],
        &["--samples", "1000", "--seed", "9", "--format", "csv", "sweep", "--n-list", "10,30"],
        &["--samples", "2000", "poisson", "--n", "30"],
    ];
    for args in runs {
        let base = deflab(&[&["--threads", "1"], *args].concat());
        assert_eq!(base.status.code(), Some(0));
        for threads in ["2", "3", "4"] {
            let other = deflab(&[&["--threads", threads], *args].concat());
            assert_eq!(base.stdout, other.stdout, "{args:?} with {threads} threads");
        }
    }
}
