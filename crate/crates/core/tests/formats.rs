//! Byte-level layouts of the files exchanged with other tools.

mod common;

use common::*;
use topicflow::cluster::{read_labels, write_labels};
use topicflow::corpus::{ingest_jsonl, Corpus, DateWindow};
use topicflow::embedstore::{read_embeddings, validate_alignment, write_embeddings, EmbeddingRecord};
use topicflow::lda::{LdaConfig, LdaModel};
use topicflow::Error;

/// Embedding file assembled by hand, as an external writer would.
fn hand_built(dim: u32, rows: &[(u64, Vec<f32>)]) -> Vec<u8> {
    let mut out = b"FSEM".to_vec();
    out.extend(1u32.to_le_bytes());
    out.extend(dim.to_le_bytes());
    out.extend((rows.len() as u64).to_le_bytes());
    for (id, v) in rows {
        out.extend(id.to_le_bytes());
        for x in v {
            out.extend(x.to_le_bytes());
        }
    }
    out
}

#[test]
fn embedding_writer_matches_hand_built_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let rows = vec![(7u64, vec![0.5f32, -1.25, 3.0]), (u64::MAX, vec![1e-7, 0.0, -0.0])];
    let records: Vec<EmbeddingRecord> = rows
        .iter()
        .map(|(id, v)| EmbeddingRecord { tweet_id: *id, vector: v.clone() })
        .collect();
    let path = dir.path().join("a.fsem");
    let bytes = write_embeddings(&records, 3, &path).unwrap();
    let expected = hand_built(3, &rows);
    assert_eq!(bytes, expected.len() as u64);
    assert_eq!(std::fs::read(&path).unwrap(), expected);
    assert_eq!(expected.len(), 20 + 2 * (8 + 4 * 3));
}

#[test]
fn reader_accepts_externally_written_files() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<(u64, Vec<f32>)> = (0..50).map(|i| (1000 + i, vec![i as f32; 8])).collect();
    let path = dir.path().join("ext.fsem");
    std::fs::write(&path, hand_built(8, &rows)).unwrap();
    let mut r = read_embeddings(&path).unwrap();
    assert_eq!(r.header().count, 50);
    assert_eq!(r.header().dim, 8);
    let first = r.next_batch(20).unwrap();
    let rest: Vec<_> = r.map(Result::unwrap).collect();
    assert_eq!(first.len() + rest.len(), 50);
    assert_eq!(rest.last().unwrap().tweet_id, 1049);
    assert_eq!(rest.last().unwrap().vector, vec![49.0; 8]);
}

#[test]
fn damaged_embedding_files_fail_with_typed_errors() {
    let dir = tempfile::tempdir().unwrap();
    let rows: Vec<(u64, Vec<f32>)> = (0..4).map(|i| (i, vec![1.0; 4])).collect();
    let good = hand_built(4, &rows);
    let p = dir.path().join("x.fsem");

    std::fs::write(&p, &good[..good.len() - 3]).unwrap();
    assert!(matches!(read_embeddings(&p), Err(Error::Truncated(_))));

    let mut bad = good.clone();
    bad[0] = b'X';
    std::fs::write(&p, &bad).unwrap();
    assert!(matches!(read_embeddings(&p), Err(Error::UnsupportedFormat(_))));

    let mut v2 = good.clone();
    v2[4] = 2;
    std::fs::write(&p, &v2).unwrap();
    assert!(matches!(read_embeddings(&p), Err(Error::UnsupportedFormat(_))));

    let mut nan = good.clone();
    nan[20 + 8..20 + 12].copy_from_slice(&f32::NAN.to_le_bytes());
    std::fs::write(&p, &nan).unwrap();
    let err = read_embeddings(&p).unwrap().find(|r| r.is_err()).unwrap().unwrap_err();
    assert!(err.to_string().contains("non-finite"), "{err}");
}

#[test]
fn alignment_counts_every_mismatch_kind() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("e.fsem");
    let rows: Vec<(u64, Vec<f32>)> = [3u64, 1, 2, 2, 9].iter().map(|&i| (i, vec![0.0; 2])).collect();
    std::fs::write(&p, hand_built(2, &rows)).unwrap();
    let r = validate_alignment(&[1, 2, 3, 4], &p).unwrap();
    assert_eq!((r.missing, r.extra, r.duplicate, r.ordered), (1, 1, 1, false));
    assert_eq!(r.missing_examples, vec![4]);
    assert_eq!(r.extra_examples, vec![9]);
    assert!(r.require_aligned().is_err());

    std::fs::write(&p, hand_built(2, &[(2, vec![0.0; 2]), (1, vec![0.0; 2])])).unwrap();
    let r = validate_alignment(&[1, 2], &p).unwrap();
    assert!(r.is_aligned() && !r.ordered);
}

#[test]
fn exported_jsonl_reingests_to_the_same_store() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    themed_workdir(d, 800, 9);
    let window = || DateWindow::parse("2021-01-01", "2021-12-31").unwrap();
    let a = d.join("a");
    ingest_jsonl(&read(d, "tweets.jsonl")[..], window(), &a).unwrap();
    let corpus = Corpus::open(&a).unwrap();
    assert_eq!(corpus.export_jsonl(&d.join("export.jsonl")).unwrap(), 800);
    for line in String::from_utf8(read(d, "export.jsonl")).unwrap().lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["id"].is_u64() && v["date"].is_string() && v["user"].is_string() && v["content"].is_string());
    }
    let b = d.join("b");
    ingest_jsonl(&read(d, "export.jsonl")[..], window(), &b).unwrap();
    let left: Vec<_> = corpus.records().unwrap().map(Result::unwrap).collect();
    let right: Vec<_> = Corpus::open(&b).unwrap().records().unwrap().map(Result::unwrap).collect();
    assert_eq!(left, right);
}

#[test]
fn label_table_is_packed_little_endian_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("labels.bin");
    write_labels(&p, &[(1, 0), (0x0102030405060708, 7)]).unwrap();
    let raw = std::fs::read(&p).unwrap();
    let mut expected = Vec::new();
    for (id, l) in [(1u64, 0u32), (0x0102030405060708, 7)] {
        expected.extend(id.to_le_bytes());
        expected.extend(l.to_le_bytes());
    }
    assert_eq!(raw, expected);
    assert_eq!(read_labels(&p).unwrap(), vec![(1, 0), (0x0102030405060708, 7)]);
    std::fs::write(&p, &raw[..raw.len() - 1]).unwrap();
    assert!(read_labels(&p).is_err());
}

#[test]
fn lda_model_header_layout() {
    let config = LdaConfig {
        alpha: Some(0.25),
        eta: Some(0.5),
        seed: 99,
        ..LdaConfig::new(2)
    };
    let model = LdaModel::from_lambda(&config, 3, 1234, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
    let raw = model.to_bytes();
    let u32_at = |o: usize| u32::from_le_bytes(raw[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(raw[o..o + 8].try_into().unwrap());
    let u64_at = |o: usize| u64::from_le_bytes(raw[o..o + 8].try_into().unwrap());
    assert_eq!(&raw[..4], b"FSLD");
    assert_eq!((u32_at(4), u32_at(8), u32_at(12)), (1, 2, 3));
    assert_eq!((f64_at(16), f64_at(24)), (0.25, 0.5));
    assert_eq!((f64_at(32), f64_at(40)), (64.0, 0.7));
    assert_eq!(u64_at(60), 99);
    assert_eq!(u64_at(68), 0);
    assert_eq!(u64_at(76), 1234);
    assert_eq!(raw.len(), 84 + 6 * 8);
    // λ is row-major: topic 1 starts after V entries.
    assert_eq!(f64_at(84 + 3 * 8), 4.0);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("m");
    model.save(&p).unwrap();
    assert_eq!(LdaModel::load(&p).unwrap().to_bytes(), raw);
    std::fs::write(&p, &raw[..raw.len() - 8]).unwrap();
    assert!(LdaModel::load(&p).is_err());
}
