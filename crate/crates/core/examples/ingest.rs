//! Ingests a small hand-made archive with every kind of bad line and prints
//! the audit counters, then streams the stored records back.

use topicflow::corpus::{ingest_jsonl, Corpus, DateWindow};

const ARCHIVE: &str = r#"{"id": 1, "date": "2021-03-01T10:00:00+00:00", "user": {"username": "ana"}, "content": "Hybrid work is here to stay #remotework"}
{"id": 2, "date": "2021-03-02T11:30:00Z", "user": {"username": "bo"}, "content": "New robotics lab opening https://t.co/abc"}
{"id": 1, "date": "2021-03-01T10:00:00+00:00", "user": {"username": "ana"}, "content": "Hybrid work is here to stay #remotework"}
{"id": 3, "date": "2019-12-31T23:59:59Z", "user": {"username": "cy"}, "content": "too early"}
{"id": 4, "date": "2021-04-05T08:00:00Z", "content": "no user field"}
{"id": "5", "created_at": 1617609600, "author": "dee", "text": "Alternate field spelling is accepted"}
not json at all
"#;

fn main() -> topicflow::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let window = DateWindow::parse("2021-01-01", "2021-12-31")?;
    let stats = ingest_jsonl(ARCHIVE.as_bytes(), window, dir.path())?;
    println!("{}", serde_json::to_string_pretty(&stats).unwrap());

    let corpus = Corpus::open(dir.path())?;
    for rec in corpus.records()? {
        let rec = rec?;
        println!("{:>3}  {}  @{:<5} {}", rec.id, topicflow::corpus::format_day(rec.created_at), rec.author, rec.text);
    }
    Ok(())
}
