use std::fs;
use std::path::Path;
use std::process::{Command, Output};

const A: &str = "automaton A\nhierarchy (A)\nstates a0 a1\ninitial a0\ntrans a0 (-,m,A) a1\nend\n";
const B: &str = "automaton B\nhierarchy (B)\nstates b0 b1\ninitial b0\ntrans b0 (B,m,-) b1\nend\n";
const CHAIN: &str = "automaton S\nhierarchy (A B)\nstates s0 s1 s2\ninitial s0\n\
                     trans s0 (A,t,B) s1\ntrans s1 (A,t,B) s2\nend\n";

fn cia(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cia")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn parse_prints_canonical_form() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "a.cia", "# comment\nautomaton A\nhierarchy (A)\nstates a1 a0\ninitial a0\ntrans a0 (-,m,A) a1\nend\n");
    let o = cia(&["parse", &f]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("states a0 a1"));
    let again = write(tmp.path(), "b.cia", &text);
    assert_eq!(stdout(&cia(&["parse", &again])), text);
}

#[test]
fn bad_input_exits_with_data_error() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "bad.cia", "automaton A\nhierarchy (A)\nstates s\ninitial s\ntrans s (-,m,-) s\nend\n");
    let o = cia(&["parse", &f]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("two absent annotations"));
    assert_eq!(cia(&["parse", "/nonexistent/x.cia"]).status.code(), Some(2));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(cia(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(cia(&["regress", "--csv", "x.csv"]).status.code(), Some(1));
    assert_eq!(cia(&["generate", "--pairs", "1"]).status.code(), Some(1));
    assert_eq!(cia(&["--help"]).status.code(), Some(0));
}

#[test]
fn compose_closed_and_open() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (write(tmp.path(), "a.cia", A), write(tmp.path(), "b.cia", B));
    let open = stdout(&cia(&["compose", &a, &b, "--keep-unreachable"]));
    assert_eq!(open.matches("trans ").count(), 5);
    let closed = stdout(&cia(&["compose", &a, &b, "--provided", "--required"]));
    assert_eq!(closed.matches("trans ").count(), 1);
    assert!(closed.contains("trans (a0,b0) (B,m,A) (a1,b1)"));
    assert!(closed.contains("states (a0,b0) (a1,b1)\n"));
    let reduced = stdout(&cia(&["compose", &a, &b, "--pairwise", "--provided", "--required"]));
    assert!(reduced.contains("states r0 r1\n") || reduced.contains("states r0\n"));
}

#[test]
fn refine_shows_partition() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "s.cia", CHAIN);
    let o = stdout(&cia(&["refine", &f, "--show-partition"]));
    assert!(o.contains("# r0 = {s0 s1 s2}"));
    assert!(o.contains("states r0\n"));
    let strict = stdout(&cia(&["refine", &f, "--strict-internal"]));
    assert!(strict.contains("states r0 r1 r2\n"));
}

#[test]
fn metrics_formats() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, s) = (write(tmp.path(), "a.cia", A), write(tmp.path(), "s.cia", CHAIN));
    let csv = stdout(&cia(&["metrics", &a, &s]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "name,states,transitions,internal,beta,gini_in,gini_out");
    assert_eq!(lines[1], "A,2,1,0,0,0.5,0.5");
    assert!(lines[2].starts_with("S,3,2,2,"));
    let json: serde_json::Value = serde_json::from_str(&stdout(&cia(&["--format", "json", "metrics", &a]))).unwrap();
    assert_eq!(json[0]["states"], 2);
}

#[test]
fn dot_output() {
    let tmp = tempfile::tempdir().unwrap();
    let f = write(tmp.path(), "s.cia", CHAIN);
    let o = stdout(&cia(&["dot", &f]));
    assert!(o.starts_with("digraph \"S\" {"));
    assert!(o.contains("style=dashed"));
    assert!(o.contains("doublecircle"));
}

#[test]
fn full_pipeline_is_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus");
    let corpus_s = corpus.to_string_lossy().into_owned();
    let g = cia(&["--seed", "5", "--out", &corpus_s, "generate", "--pairs", "12", "--states", "3..6"]);
    assert!(g.status.success(), "{}", String::from_utf8_lossy(&g.stderr));
    assert_eq!(fs::read_dir(&corpus).unwrap().count(), 12);

    let mut outputs = Vec::new();
    for workers in ["1", "4"] {
        let csv = tmp.path().join(format!("rows{workers}.csv")).to_string_lossy().into_owned();
        let o = cia(&["--workers", workers, "--out", &csv, "experiment", "--corpus", &corpus_s, "--no-timing"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        outputs.push(fs::read_to_string(&csv).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0].lines().count(), 13);

    let csv = tmp.path().join("rows1.csv").to_string_lossy().into_owned();
    let report = cia(&["report", "--csv", &csv]);
    assert!(report.status.success());
    let report: serde_json::Value = serde_json::from_slice(&report.stdout).unwrap();
    assert_eq!(report["rows"], 12);
}

#[test]
fn timeouts_exit_with_three() {
    let tmp = tempfile::tempdir().unwrap();
    let corpus = tmp.path().join("corpus").to_string_lossy().into_owned();
    assert!(cia(&["--out", &corpus, "generate", "--pairs", "2", "--states", "15..15"]).status.success());
    let o = cia(&["--timeout", "0", "experiment", "--corpus", &corpus]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).lines().skip(1).all(|l| l.contains(",1,")));
}

#[test]
fn regress_on_experiment_rows() {
    let tmp = tempfile::tempdir().unwrap();
    let mut csv = String::from(
        "pair_id,sizes,states,transitions,internal,beta,gini_in,gini_out,refined_states,success,\
         reduction_ratio,internal_removed_ratio,elapsed_ms,over_5min,timed_out,error\n",
    );
    for i in 0..40 {
        let beta = 1.0 + f64::from(i) * 0.02;
        let success = u8::from((i * 7) % 10 < 6 - i / 10);
        csv.push_str(&format!("p{i},3;3,9,20,2,{beta},0.2,0.3,8,{success},0.1,0.5,{},0,0,\n", i * 10));
    }
    let f = write(tmp.path(), "rows.csv", &csv);
    let o = cia(&["regress", "--csv", &f, "--x", "beta", "--y", "success"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["b"].as_f64().unwrap() < 0.0);
    assert!(v["p"].as_f64().unwrap() <= 1.0);
    let t = cia(&["regress", "--csv", &f, "--x", "states", "--y", "over-ms", "--over-ms", "100"]);
    assert_eq!(t.status.code(), Some(2));
}
