use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use clap::Parser;
use serde_json::Value as Json;

use lips_cli::{execute, Cli, CliError, Env};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn lips(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lips"))
        .args(args)
        .current_dir(root())
        .env("SOURCE_DATE_EPOCH", "1700000000")
        .env_remove("LIPS_API_KEY")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_in_process(args: &[&str]) -> Result<String, CliError> {
    let cli = Cli::try_parse_from(std::iter::once("lips").chain(args.iter().copied())).unwrap();
    let mut out = Vec::new();
    std::env::set_current_dir(root()).unwrap();
    execute(cli, Env { now: 42 }, &mut out)?;
    Ok(String::from_utf8(out).unwrap())
}

#[test]
fn eig_of_a_tiny_board() {
    let o = lips(&["eig", "fixtures/misc/tiny2x2.json", "(topleft (coloredTiles Red))"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("eig\t1.500000\nhypotheses\t4\n"), "{text}");

    let o = lips(&["eig", "fixtures/misc/tiny2x2.json", "(orient Red)", "--json"]);
    let v: Json = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["bits"].as_f64(), Some(1.0), "{v}");
    assert_eq!(v["hypotheses"], 4);
}

#[test]
fn exit_codes() {
    // Bad program text.
    assert_eq!(lips(&["parse", "(size Red"]).status.code(), Some(2));
    // Inconsistent board.
    assert_eq!(lips(&["board", "validate", "fixtures/misc/inconsistent.json"]).status.code(), Some(2));
    // Missing file.
    assert_eq!(lips(&["board", "validate", "fixtures/boards/nope.json"]).status.code(), Some(2));
    // Usage error from clap.
    assert_eq!(lips(&["run", "--proposal", "bogus"]).status.code(), Some(2));
    // Replay fixture missing an entry: a provider failure.
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("r");
    let o = lips(&[
        "run",
        "--proposal",
        "llm",
        "--boards",
        "fixtures/boards/example.json",
        "--replay",
        "fixtures/replay/llm_two_boards.jsonl",
        "--examples",
        "fixtures/human.jsonl",
        "--mode",
        "zero_shot",
        "--n",
        "25",
        "--k",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: Json = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "failed");

    assert!(lips(&["board", "validate", "fixtures/boards/target.json"]).status.success());
}

#[test]
fn board_commands() {
    let text = run_in_process(&["board", "validate", "fixtures/boards/target.json"]).unwrap();
    assert_eq!(text, "ok\ttarget\t56 hypotheses\n");
    let text = run_in_process(&["board", "hypotheses", "fixtures/misc/tiny2x2.json"]).unwrap();
    assert_eq!(text.trim(), "4");
    let grid = run_in_process(&["board", "render", "fixtures/boards/target.json", "--format", "grid"]).unwrap();
    assert!(grid.contains('P') && grid.contains('W'), "{grid}");
}

#[test]
fn parse_prints_the_canonical_program() {
    let text = run_in_process(&["parse", "( topleft  (coloredTiles Red) )"]).unwrap();
    assert!(text.contains("(topleft (coloredTiles Red))"), "{text}");
}

#[test]
fn prompt_matches_golden() {
    let text = run_in_process(&[
        "prompt",
        "generate",
        "--board",
        "fixtures/boards/target.json",
        "--mode",
        "few_shot",
        "--format",
        "grid",
        "--examples",
        "fixtures/human.jsonl",
        "--example-boards",
        "fixtures/boards",
        "--seed",
        "7",
    ])
    .unwrap();
    let golden = fs::read_to_string(root().join("fixtures/golden/generation_few_shot_grid.txt")).unwrap();
    assert_eq!(text, format!("{golden}\n"));
}

#[test]
fn sampling_is_seeded() {
    let a = run_in_process(&["sample", "--n", "20", "--seed", "3"]).unwrap();
    let b = run_in_process(&["sample", "--n", "20", "--seed", "3"]).unwrap();
    let c = run_in_process(&["sample", "--n", "20", "--seed", "4"]).unwrap();
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert_eq!(a.lines().count(), 20);
}

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn runs_and_report() {
    let tmp = tempfile::tempdir().unwrap();
    let llm = tmp.path().join("llm");
    let grammar = tmp.path().join("grammar");
    let report = tmp.path().join("report");
    let o = lips(&[
        "run",
        "--proposal",
        "llm",
        "--boards",
        "fixtures/boards/example.json",
        "fixtures/boards/target.json",
        "--replay",
        "fixtures/replay/llm_two_boards.jsonl",
        "--examples",
        "fixtures/human.jsonl",
        "--example-boards",
        "fixtures/boards",
        "--n",
        "20",
        "--k",
        "1,5,10,20",
        "--seed",
        "5",
        "--out",
        llm.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = lips(&[
        "run",
        "--proposal",
        "grammar",
        "--boards",
        "fixtures/boards/target.json",
        "--n",
        "40",
        "--k",
        "1,5,20",
        "--out",
        grammar.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));

    let manifest: Json = serde_json::from_str(&fs::read_to_string(llm.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "complete");
    assert_eq!(manifest["created"], 1700000000);
    let candidates = fs::read_to_string(llm.join("candidates/target.jsonl")).unwrap();
    assert_eq!(candidates.lines().count(), 20);
    let invalid =
        candidates.lines().map(|l| serde_json::from_str::<Json>(l).unwrap()).filter(|r| r["valid"] == false).count();
    assert!(invalid > 0 && invalid < 20);
    let buckets: Json = serde_json::from_str(&fs::read_to_string(llm.join("buckets/target.json")).unwrap()).unwrap();
    let means: Vec<f64> =
        buckets["estimates"].as_array().unwrap().iter().map(|e| e["mean_eig"].as_f64().unwrap()).collect();
    assert_eq!(means.len(), 4);

    let o = lips(&[
        "report",
        llm.to_str().unwrap(),
        grammar.to_str().unwrap(),
        "--human",
        "fixtures/human.jsonl",
        "--human-boards",
        "fixtures/boards",
        "--n-boot",
        "100",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files: Vec<String> = read_tree(&report).into_iter().map(|(p, _)| p.display().to_string()).collect();
    assert_eq!(files, ["curve.tsv", "qq.tsv", "summary.csv", "types.tsv", "welch.tsv"]);
    let summary = fs::read_to_string(report.join("summary.csv")).unwrap();
    let labels: Vec<&str> = summary.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(labels, ["llm-replay-few_shot-grid", "grammar", "human"]);
    let human_n: usize = summary.lines().last().unwrap().split(',').nth(2).unwrap().parse().unwrap();
    assert_eq!(human_n, 40);
    let curve = fs::read_to_string(report.join("curve.tsv")).unwrap();
    assert_eq!(curve.lines().count(), 1 + 4 + 3);

    // A second report over the same runs is identical.
    let again = tmp.path().join("again");
    let o = lips(&[
        "report",
        llm.to_str().unwrap(),
        grammar.to_str().unwrap(),
        "--human",
        "fixtures/human.jsonl",
        "--human-boards",
        "fixtures/boards",
        "--n-boot",
        "100",
        "--out",
        again.to_str().unwrap(),
    ]);
    assert!(o.status.success());
    assert_eq!(read_tree(&report), read_tree(&again));
}

#[test]
fn report_rejects_unfinished_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let run = tmp.path().join("r");
    fs::create_dir_all(&run).unwrap();
    fs::write(run.join("manifest.json"), r#"{"status": "running", "config": {"label": "x"}}"#).unwrap();
    let o = lips(&["report", run.to_str().unwrap(), "--out", tmp.path().join("rep").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}
