#![allow(dead_code)]

use std::path::{Path, PathBuf};

use topicflow::corpus::parse_record;
use topicflow::embedstore::write_embeddings;
use topicflow::synthetic::{synthetic_tweets, theme_embeddings, PlantedSpec};

/// Runs the CLI in-process with `--workdir dir` prepended.
pub fn cli(dir: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["topicflow".to_string(), "--workdir".into(), dir.display().to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    topicflow::cli::run(argv)
}

pub fn cli_ok(dir: &Path, args: &[&str]) {
    assert_eq!(cli(dir, args), 0, "topicflow {}", args.join(" "));
}

/// Themed post archive plus aligned embeddings, written as
/// `tweets.jsonl` and `embeddings.fsem`.
pub fn themed_workdir(dir: &Path, n: usize, seed: u64) {
    let (jsonl, themes) = synthetic_tweets(n, seed);
    std::fs::write(dir.join("tweets.jsonl"), &jsonl).unwrap();
    let ids: Vec<(u64, usize)> = jsonl
        .lines()
        .zip(themes)
        .map(|(l, t)| (parse_record(l).unwrap().id, t))
        .collect();
    write_embeddings(&theme_embeddings(&ids, 16, seed), 16, dir.join("embeddings.fsem")).unwrap();
}

/// The planted corpus as a post archive: document i becomes post 1+i with
/// its terms as space-separated words.
pub fn planted_archive(spec: &PlantedSpec) -> String {
    let mut out = String::new();
    for (i, doc) in spec.token_docs().iter().enumerate() {
        let line = serde_json::json!({
            "id": 1 + i as u64,
            "date": format!("2021-{:02}-{:02}T12:00:00Z", 1 + i % 12, 1 + i % 28),
            "user": {"username": format!("u{}", i % 40)},
            "content": doc.join(" "),
        });
        out.push_str(&line.to_string());
        out.push('\n');
    }
    out
}

/// Ingests the planted archive and builds a vocabulary that keeps every
/// term.
pub fn planted_workdir(dir: &Path, spec: &PlantedSpec) {
    std::fs::write(dir.join("planted.jsonl"), planted_archive(spec)).unwrap();
    cli_ok(dir, &["ingest", "--input", "planted.jsonl", "--since", "2021-01-01", "--until", "2021-12-31"]);
    cli_ok(dir, &["vocab", "--stopwords", "none", "--min-df", "1", "--max-df", "1.0"]);
}

pub fn read(dir: &Path, file: &str) -> Vec<u8> {
    std::fs::read(dir.join(file)).unwrap_or_else(|e| panic!("{file}: {e}"))
}

pub fn json(dir: &Path, file: &str) -> serde_json::Value {
    serde_json::from_slice(&read(dir, file)).unwrap()
}

pub fn files_in(dir: &Path) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = walk(dir);
    out.sort();
    out
}

fn walk(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    for e in std::fs::read_dir(dir).unwrap() {
        let p = e.unwrap().path();
        if p.is_dir() {
            out.extend(walk(&p));
        } else {
            out.push(p);
        }
    }
    out
}
