use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use leadsheet_core::corpus::{save_corpus, Solo};
use leadsheet_core::synth::{random_corpus, render_solo, SketchBar, SketchNote};
use tempfile::TempDir;

fn leadsheet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_leadsheet")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = leadsheet(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn corpus_file(dir: &TempDir, name: &str, solos: &[Solo]) -> PathBuf {
    let path = dir.path().join(name);
    save_corpus(&path, solos).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn tokenize_is_byte_identical_on_rerun() {
    let dir = TempDir::new().unwrap();
    let corpus = corpus_file(&dir, "c.jsonl", &random_corpus(1, 6, 20));
    let out = dir.path().join("tok");
    ok(&["tokenize", "--corpus", s(&corpus), "--out", s(&out)]);
    let first = read_dir_bytes(&out);
    ok(&["tokenize", "--corpus", s(&corpus), "--out", s(&out)]);
    assert_eq!(first, read_dir_bytes(&out));
    let names: Vec<&str> = first.iter().map(|(n, _)| n.as_str()).collect();
    assert!(names.contains(&"vocab.txt") && names.contains(&"summary.tsv") && names.contains(&"synth000.tokens"));
    let summary = String::from_utf8(first.iter().find(|(n, _)| n == "summary.tsv").unwrap().1.clone()).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("6\t")), "{summary}");
    assert!(summary.contains("# input_sha256="));
}

#[test]
fn corrupt_record_fails_with_its_id() {
    let dir = TempDir::new().unwrap();
    let mut solos = random_corpus(2, 3, 10);
    solos[1].beats[5].position_in_bar = 7;
    let corpus = corpus_file(&dir, "bad.jsonl", &solos);
    let out = leadsheet(&["tokenize", "--corpus", s(&corpus), "--out", s(&dir.path().join("t"))]);
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("synth001") && err.contains("position"), "{err}");

    fs::write(dir.path().join("junk.jsonl"), "{\"id\": 3\n").unwrap();
    let out = leadsheet(&["report", "--corpus", s(&dir.path().join("junk.jsonl"))]);
    assert!(!out.status.success());
}

fn categories(dir: &Path) -> BTreeSet<String> {
    read_dir_bytes(dir)
        .into_iter()
        .filter(|(n, _)| n.ends_with(".tokens"))
        .flat_map(|(_, b)| {
            String::from_utf8(b)
                .unwrap()
                .lines()
                .filter(|l| !l.starts_with('#'))
                .map(|l| l.split('(').next().unwrap().to_string())
                .collect::<Vec<_>>()
        })
        .collect()
}

#[test]
fn no_structure_drops_exactly_the_structure_categories() {
    let dir = TempDir::new().unwrap();
    let corpus = corpus_file(&dir, "c.jsonl", &random_corpus(3, 8, 24));
    let (with, without) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["tokenize", "--corpus", s(&corpus), "--out", s(&with)]);
    ok(&["tokenize", "--corpus", s(&corpus), "--out", s(&without), "--no-structure"]);
    let (a, b) = (categories(&with), categories(&without));
    let removed: BTreeSet<String> = a.difference(&b).cloned().collect();
    let expected: BTreeSet<String> =
        ["Phrase", "MLU", "PartStart", "PartEnd", "RepStart", "RepEnd"].iter().map(|s| s.to_string()).collect();
    assert_eq!(removed, expected);
    assert!(b.is_subset(&a));
}

#[test]
fn report_runs_on_tokens_and_corpus_alike() {
    let dir = TempDir::new().unwrap();
    let corpus = corpus_file(&dir, "c.jsonl", &random_corpus(4, 5, 20));
    let tok = dir.path().join("tok");
    ok(&["tokenize", "--corpus", s(&corpus), "--out", s(&tok), "--no-structure"]);
    let from_tokens = ok(&["report", "--tokens", s(&tok), "--vocab", s(&tok.join("vocab.txt"))]);
    let from_corpus = ok(&["report", "--corpus", s(&corpus)]);
    let rows = |t: &str| t.lines().filter(|l| !l.starts_with('#')).map(str::to_string).collect::<Vec<_>>();
    assert_eq!(rows(&from_tokens), rows(&from_corpus));
    assert_eq!(rows(&from_corpus).len(), 1 + 5 + 1);
}

#[test]
fn single_pitch_corpus_has_zero_entropy() {
    let dir = TempDir::new().unwrap();
    let bars: Vec<SketchBar> = (0..8)
        .map(|_| SketchBar {
            chords: Default::default(),
            notes: (0..4).map(|b| SketchNote::new(b * 16, 8.0, 62, 70.0)).collect(),
        })
        .collect();
    let corpus = corpus_file(&dir, "one.jsonl", &[render_solo("mono", 120.0, &bars, vec![])]);
    let report = ok(&["report", "--corpus", s(&corpus)]);
    let header: Vec<&str> = report.lines().find(|l| l.starts_with("piece_id")).unwrap().split('\t').collect();
    let row: Vec<&str> = report.lines().find(|l| l.starts_with("mono")).unwrap().split('\t').collect();
    let col = |name: &str| row[header.iter().position(|h| *h == name).unwrap()];
    assert_eq!(col("H1"), "0.000000");
    assert_eq!(col("H4"), "0.000000");
    assert_eq!(col("GS"), "1.000000");
    // no chords at all
    assert_eq!(col("CPI"), "NA");
}

#[test]
fn empty_corpus_is_an_error() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("empty.jsonl"), "").unwrap();
    let out = leadsheet(&["report", "--corpus", s(&dir.path().join("empty.jsonl"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no solos"));
}

#[test]
fn scape_writes_matrix_and_image() {
    let dir = TempDir::new().unwrap();
    let corpus = corpus_file(&dir, "c.jsonl", &random_corpus(6, 3, 12));
    let prefix = dir.path().join("plot");
    let stdout = ok(&["scape", "--corpus", s(&corpus), "--id", "synth001", "--out", s(&prefix)]);
    assert!(stdout.contains("SI8_15"));
    let pgm = fs::read(prefix.with_extension("pgm")).unwrap();
    assert!(pgm.starts_with(b"P5\n# leadsheet scape"));
    let text = fs::read_to_string(prefix.with_extension("txt")).unwrap();
    let frames: usize = stdout.lines().next().unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), frames);
    let out = leadsheet(&["scape", "--corpus", s(&corpus), "--out", s(&prefix)]);
    assert!(!out.status.success(), "several pieces need --id");
}

#[test]
fn challenge_train_and_generate() {
    let dir = TempDir::new().unwrap();
    let corpus = corpus_file(&dir, "c.jsonl", &random_corpus(7, 8, 40));
    let c = s(&corpus);
    let report = dir.path().join("ch.tsv");
    ok(&["challenge", "--corpus", c, "--no-structure", "--model", "oracle", "--questions", "20", "--out", s(&report)]);
    assert!(fs::read_to_string(&report).unwrap().contains("# accuracy=1.000000 correct=20 questions=20"));

    let model = dir.path().join("m.json");
    ok(&["train-model", "--corpus", c, "--no-structure", "--order", "3", "--out", s(&model)]);
    let ch = ok(&[
        "challenge",
        "--corpus",
        c,
        "--no-structure",
        "--model",
        "ngram",
        "--model-path",
        s(&model),
        "--questions",
        "10",
    ]);
    assert!(ch.contains("config.model_path="));

    let gen = dir.path().join("gen");
    ok(&[
        "generate",
        "--corpus",
        c,
        "--no-structure",
        "--model",
        "ngram",
        "--model-path",
        s(&model),
        "--count",
        "3",
        "--bars",
        "4",
        "--midi",
        "--out",
        s(&gen),
    ]);
    let files: Vec<String> = read_dir_bytes(&gen).into_iter().map(|(n, _)| n).collect();
    assert_eq!(
        files,
        ["gen_0000.mid", "gen_0000.tokens", "gen_0001.mid", "gen_0001.tokens", "gen_0002.mid", "gen_0002.tokens"]
    );
    let mids = dir.path().join("mid");
    ok(&["detokenize", "--tokens", s(&gen), "--out", s(&mids)]);
    assert_eq!(read_dir_bytes(&mids).len(), 3);

    let bad = leadsheet(&["challenge", "--corpus", c, "--model", "external", "--model-command", "echo nonsense"]);
    assert!(!bad.status.success());
}
