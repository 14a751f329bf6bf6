//! Writes a synthetic post archive plus a matching embedding file, reads
//! the embeddings back in batches and checks id alignment.
//!
//!     cargo run --release --example embeddings_io -- demo
//!
//! The output directory is a ready-made input for the CLI walkthrough in
//! the README.

use std::path::PathBuf;

use topicflow::corpus::parse_record;
use topicflow::embedstore::{read_embeddings, validate_alignment, write_embeddings};
use topicflow::synthetic::{synthetic_tweets, theme_embeddings};

fn main() -> topicflow::Result<()> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "demo".into()));
    std::fs::create_dir_all(&dir).expect("create output dir");

    let (jsonl, themes) = synthetic_tweets(20_000, 7);
    std::fs::write(dir.join("tweets.jsonl"), &jsonl).expect("write archive");

    let ids: Vec<(u64, usize)> = jsonl
        .lines()
        .zip(&themes)
        .map(|(l, &t)| (parse_record(l).expect("generated line parses").id, t))
        .collect();
    let records = theme_embeddings(&ids, 32, 7);
    let path = dir.join("embeddings.fsem");
    let bytes = write_embeddings(&records, 32, &path)?;
    println!("wrote {} vectors ({bytes} bytes) to {}", records.len(), path.display());

    let mut reader = read_embeddings(&path)?;
    let header = reader.header();
    println!("header: {} records of dim {}", header.count, header.dim);
    let first = reader.next_batch(3)?;
    for r in &first {
        println!("  {} -> [{:.3}, {:.3}, ...]", r.tweet_id, r.vector[0], r.vector[1]);
    }

    let corpus_ids: Vec<u64> = ids.iter().map(|x| x.0).collect();
    let report = validate_alignment(&corpus_ids, &path)?;
    println!("aligned: {} (ordered: {})", report.is_aligned(), report.ordered);

    let report = validate_alignment(&corpus_ids[1..], &path)?;
    println!("after dropping one corpus id: {} extra, aligned: {}", report.extra, report.is_aligned());
    Ok(())
}
