//! Binary exchange format for precomputed sentence embeddings.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! header (20 bytes): magic "FSEM" | version u32 = 1 | dim u32 | count u64
//! count × record:     tweet_id u64 | dim × f32
//! ```
//!
//! A valid file is exactly `20 + count·(8 + 4·dim)` bytes long.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, IoContext, Result};

pub const MAGIC: &[u8; 4] = b"FSEM";
pub const VERSION: u32 = 1;
pub const HEADER_LEN: u64 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EmbeddingFileHeader {
    pub version: u32,
    pub dim: u32,
    pub count: u64,
}

impl EmbeddingFileHeader {
    pub fn record_len(&self) -> u64 {
        8 + 4 * self.dim as u64
    }

    pub fn expected_file_len(&self) -> u64 {
        HEADER_LEN + self.count * self.record_len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingRecord {
    pub tweet_id: u64,
    pub vector: Vec<f32>,
}

/// Streaming reader; holds one record in memory at a time.
pub struct EmbeddingReader {
    path: PathBuf,
    header: EmbeddingFileHeader,
    reader: BufReader<File>,
    index: u64,
    failed: bool,
}

/// Opens and validates an embedding file.
pub fn read_embeddings(path: impl AsRef<Path>) -> Result<EmbeddingReader> {
    let path = path.as_ref().to_path_buf();
    let mut file = File::open(&path).at(&path)?;
    let actual_len = file.metadata().at(&path)?.len();
    let mut raw = [0u8; HEADER_LEN as usize];
    if actual_len < HEADER_LEN {
        return Err(Error::Truncated(format!(
            "{}: {actual_len} bytes is shorter than the header",
            path.display()
        )));
    }
    file.read_exact(&mut raw).at(&path)?;
    if &raw[..4] != MAGIC {
        return Err(Error::UnsupportedFormat(format!("{}: bad magic", path.display())));
    }
    let version = u32::from_le_bytes(raw[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::UnsupportedFormat(format!(
            "{}: version {version}",
            path.display()
        )));
    }
    let header = EmbeddingFileHeader {
        version,
        dim: u32::from_le_bytes(raw[8..12].try_into().unwrap()),
        count: u64::from_le_bytes(raw[12..20].try_into().unwrap()),
    };
    if actual_len != header.expected_file_len() {
        return Err(Error::Truncated(format!(
            "{}: {actual_len} bytes, header implies {}",
            path.display(),
            header.expected_file_len()
        )));
    }
    Ok(EmbeddingReader {
        path,
        header,
        reader: BufReader::new(file),
        index: 0,
        failed: false,
    })
}

impl EmbeddingReader {
    pub fn header(&self) -> EmbeddingFileHeader {
        self.header
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    fn read_one(&mut self) -> Result<EmbeddingRecord> {
        let mut buf = vec![0u8; self.header.record_len() as usize];
        self.reader.read_exact(&mut buf).at(&self.path)?;
        let tweet_id = u64::from_le_bytes(buf[..8].try_into().unwrap());
        let vector: Vec<f32> = buf[8..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if let Some(pos) = vector.iter().position(|x| !x.is_finite()) {
            return Err(Error::corrupt(
                &self.path,
                format!("record {} (id {tweet_id}) has a non-finite value at {pos}", self.index),
            ));
        }
        Ok(EmbeddingRecord { tweet_id, vector })
    }

    /// Collects the next `n` records (fewer at the end of the file).
    pub fn next_batch(&mut self, n: usize) -> Result<Vec<EmbeddingRecord>> {
        self.by_ref().take(n).collect()
    }
}

impl Iterator for EmbeddingReader {
    type Item = Result<EmbeddingRecord>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed || self.index >= self.header.count {
            return None;
        }
        let rec = self.read_one();
        self.index += 1;
        self.failed = rec.is_err();
        Some(rec)
    }
}

/// Incremental writer; the count in the header is patched on `finish`.
pub struct EmbeddingWriter {
    path: PathBuf,
    out: BufWriter<File>,
    dim: u32,
    count: u64,
}

impl EmbeddingWriter {
    pub fn create(path: impl AsRef<Path>, dim: u32) -> Result<Self> {
        let path = path.as_ref().to_path_buf();
        let mut out = BufWriter::new(File::create(&path).at(&path)?);
        out.write_all(MAGIC).at(&path)?;
        out.write_all(&VERSION.to_le_bytes()).at(&path)?;
        out.write_all(&dim.to_le_bytes()).at(&path)?;
        out.write_all(&0u64.to_le_bytes()).at(&path)?;
        Ok(Self {
            path,
            out,
            dim,
            count: 0,
        })
    }

    pub fn push(&mut self, tweet_id: u64, vector: &[f32]) -> Result<()> {
        if vector.len() != self.dim as usize {
            return Err(Error::invalid(format!(
                "record {tweet_id} has dimension {}, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("record {tweet_id} has a non-finite value")));
        }
        self.out.write_all(&tweet_id.to_le_bytes()).at(&self.path)?;
        for x in vector {
            self.out.write_all(&x.to_le_bytes()).at(&self.path)?;
        }
        self.count += 1;
        Ok(())
    }

    /// Returns the total file size in bytes.
    pub fn finish(mut self) -> Result<u64> {
        self.out.flush().at(&self.path)?;
        let mut file = self
            .out
            .into_inner()
            .map_err(|e| Error::io(&self.path, e.into_error()))?;
        file.seek(SeekFrom::Start(12)).at(&self.path)?;
        file.write_all(&self.count.to_le_bytes()).at(&self.path)?;
        file.sync_all().at(&self.path)?;
        Ok(EmbeddingFileHeader {
            version: VERSION,
            dim: self.dim,
            count: self.count,
        }
        .expected_file_len())
    }
}

/// Writes records and returns the byte count.
pub fn write_embeddings<'a, I>(records: I, dim: u32, path: impl AsRef<Path>) -> Result<u64>
where
    I: IntoIterator<Item = &'a EmbeddingRecord>,
{
    let path = path.as_ref();
    let mut w = EmbeddingWriter::create(path, dim)?;
    for r in records {
        if let Err(e) = w.push(r.tweet_id, &r.vector) {
            drop(w);
            let _ = std::fs::remove_file(path);
            return Err(e);
        }
    }
    w.finish()
}

/// Result of comparing corpus ids with embedding ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlignmentReport {
    /// Corpus ids with no embedding.
    pub missing: u64,
    /// Embedding ids absent from the corpus.
    pub extra: u64,
    /// Embedding ids repeated in the file.
    pub duplicate: u64,
    /// True when both sequences list the same ids in the same order.
    pub ordered: bool,
    /// Up to 20 example ids of each kind.
    pub missing_examples: Vec<u64>,
    pub extra_examples: Vec<u64>,
}

impl AlignmentReport {
    /// Exact id-set equality, the precondition for training.
    pub fn is_aligned(&self) -> bool {
        self.missing == 0 && self.extra == 0 && self.duplicate == 0
    }

    pub fn require_aligned(&self) -> Result<()> {
        if self.is_aligned() {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "embeddings are not aligned with the corpus: {} missing, {} extra, {} duplicate",
                self.missing, self.extra, self.duplicate
            )))
        }
    }
}

/// Compares corpus ids (in corpus order) against an embedding file.
pub fn validate_alignment(corpus_ids: &[u64], embeddings: impl AsRef<Path>) -> Result<AlignmentReport> {
    const EXAMPLES: usize = 20;
    let corpus_set: HashSet<u64> = corpus_ids.iter().copied().collect();
    let mut seen = HashSet::with_capacity(corpus_ids.len());
    let mut report = AlignmentReport {
        missing: 0,
        extra: 0,
        duplicate: 0,
        ordered: true,
        missing_examples: Vec::new(),
        extra_examples: Vec::new(),
    };
    let reader = read_embeddings(embeddings)?;
    for (i, rec) in reader.enumerate() {
        let id = rec?.tweet_id;
        if corpus_ids.get(i) != Some(&id) {
            report.ordered = false;
        }
        if !seen.insert(id) {
            report.duplicate += 1;
        } else if !corpus_set.contains(&id) {
            report.extra += 1;
            if report.extra_examples.len() < EXAMPLES {
                report.extra_examples.push(id);
            }
        }
    }
    for id in corpus_ids {
        if !seen.contains(id) {
            report.missing += 1;
            if report.missing_examples.len() < EXAMPLES {
                report.missing_examples.push(*id);
            }
        }
    }
    if seen.len() != corpus_ids.len() {
        report.ordered = false;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(id: u64, v: &[f32]) -> EmbeddingRecord {
        EmbeddingRecord {
            tweet_id: id,
            vector: v.to_vec(),
        }
    }

    #[test]
    fn single_record_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.fsem");
        let n = write_embeddings(&[rec(7, &[1.0, 0.0])], 2, &path).unwrap();
        assert_eq!(n, 36);
        let raw = std::fs::read(&path).unwrap();
        assert_eq!(raw.len(), 36);
        assert_eq!(&raw[..4], b"FSEM");
        assert_eq!(u32::from_le_bytes(raw[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(raw[8..12].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(raw[12..20].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(raw[20..28].try_into().unwrap()), 7);
        assert_eq!(f32::from_le_bytes(raw[28..32].try_into().unwrap()), 1.0);
        let recs: Vec<_> = read_embeddings(&path).unwrap().map(Result::unwrap).collect();
        assert_eq!(recs, vec![rec(7, &[1.0, 0.0])]);
    }

    #[test]
    fn truncated_and_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.fsem");
        write_embeddings(&[rec(7, &[1.0, 0.0])], 2, &path).unwrap();
        let raw = std::fs::read(&path).unwrap();
        std::fs::write(&path, &raw[..35]).unwrap();
        let err = read_embeddings(&path).err().unwrap().to_string();
        assert!(err.contains("truncated file"), "{err}");

        let mut bad = raw.clone();
        bad[0] = b'X';
        std::fs::write(&path, &bad).unwrap();
        let err = read_embeddings(&path).err().unwrap().to_string();
        assert!(err.contains("unsupported format"), "{err}");

        let mut bad = raw;
        bad[4] = 2;
        std::fs::write(&path, &bad).unwrap();
        assert!(matches!(read_embeddings(&path), Err(Error::UnsupportedFormat(_))));
    }

    #[test]
    fn nan_is_reported_with_record_index() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.fsem");
        write_embeddings(&[rec(1, &[0.0]), rec(2, &[0.5])], 1, &path).unwrap();
        let mut raw = std::fs::read(&path).unwrap();
        raw[40..44].copy_from_slice(&f32::NAN.to_le_bytes());
        std::fs::write(&path, &raw).unwrap();
        let results: Vec<_> = read_embeddings(&path).unwrap().collect();
        assert!(results[0].is_ok());
        let err = results[1].as_ref().unwrap_err().to_string();
        assert!(err.contains("record 1"), "{err}");
    }

    #[test]
    fn empty_file_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.fsem");
        assert_eq!(write_embeddings(&[], 384, &path).unwrap(), 20);
        assert_eq!(read_embeddings(&path).unwrap().count(), 0);
    }

    #[test]
    fn paper_width_file_size() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.fsem");
        let recs: Vec<_> = (0..3).map(|i| rec(i, &vec![0.25; 384])).collect();
        assert_eq!(write_embeddings(&recs, 384, &path).unwrap(), 4652);
        assert_eq!(std::fs::metadata(&path).unwrap().len(), 4652);
    }

    #[test]
    fn dimension_mismatch_is_fatal() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.fsem");
        assert!(write_embeddings(&[rec(1, &[1.0, 2.0, 3.0])], 2, &path).is_err());
        assert!(write_embeddings(&[rec(1, &[f32::INFINITY])], 1, &path).is_err());
    }

    #[test]
    fn alignment_cases() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("e.fsem");
        write_embeddings(&[rec(1, &[0.0]), rec(2, &[0.0]), rec(3, &[0.0])], 1, &path).unwrap();
        let r = validate_alignment(&[1, 2, 3], &path).unwrap();
        assert!(r.is_aligned() && r.ordered);
        let r = validate_alignment(&[1, 2, 3, 4], &path).unwrap();
        assert_eq!(r.missing, 1);
        assert!(r.require_aligned().is_err());
        let r = validate_alignment(&[3, 1, 2], &path).unwrap();
        assert!(r.is_aligned());
        assert!(!r.ordered);
        let r = validate_alignment(&[1, 2], &path).unwrap();
        assert_eq!(r.extra, 1);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn write_read_is_identity(dim in 1u32..6,
                                      raw in prop::collection::vec((any::<u64>(), prop::collection::vec(-1e30f32..1e30, 6)), 0..20)) {
                let recs: Vec<_> = raw.into_iter()
                    .map(|(id, v)| rec(id, &v[..dim as usize])).collect();
                let dir = tempfile::tempdir().unwrap();
                let path = dir.path().join("e.fsem");
                write_embeddings(&recs, dim, &path).unwrap();
                let back: Vec<_> = read_embeddings(&path).unwrap().map(Result::unwrap).collect();
                prop_assert_eq!(back.len(), recs.len());
                for (a, b) in back.iter().zip(&recs) {
                    prop_assert_eq!(a.tweet_id, b.tweet_id);
                    let bits_a: Vec<u32> = a.vector.iter().map(|x| x.to_bits()).collect();
                    let bits_b: Vec<u32> = b.vector.iter().map(|x| x.to_bits()).collect();
                    prop_assert_eq!(bits_a, bits_b);
                }
            }
        }
    }
}
