//! Line-delimited JSON record files.

use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Lines, Write};
use std::path::Path;

use thiserror::Error;

use crate::record::{from_json_str, AnnotationRecord, SchemaError};

#[derive(Debug, Error)]
pub enum RecordIoError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("line {line}: {error}")]
    Schema { line: usize, error: SchemaError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ReadMode {
    #[default]
    Strict,
    /// Malformed lines are reported and skipped.
    Permissive,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SkippedLine {
    pub line: usize,
    pub error: SchemaError,
}

/// Streams records from a reader, one JSON object per non-blank line.
pub struct RecordReader<R> {
    lines: Lines<R>,
    line: usize,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(reader: R) -> Self {
        Self {
            lines: reader.lines(),
            line: 0,
        }
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<AnnotationRecord, RecordIoError>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let text = match self.lines.next()? {
                Ok(t) => t,
                Err(e) => return Some(Err(e.into())),
            };
            self.line += 1;
            if text.trim().is_empty() {
                continue;
            }
            let line = self.line;
            let parsed = from_json_str::<AnnotationRecord>(&text)
                .and_then(|r| r.validate().map(|_| r))
                .map_err(|error| RecordIoError::Schema { line, error });
            return Some(parsed);
        }
    }
}

/// Reads every record of a file. In permissive mode malformed lines are
/// returned separately instead of aborting the read.
pub fn read_records(path: impl AsRef<Path>, mode: ReadMode) -> Result<(Vec<AnnotationRecord>, Vec<SkippedLine>), RecordIoError> {
    let reader = RecordReader::new(BufReader::new(File::open(path)?));
    let mut records = Vec::new();
    let mut skipped = Vec::new();
    for item in reader {
        match item {
            Ok(r) => records.push(r),
            Err(RecordIoError::Schema { line, error }) if mode == ReadMode::Permissive => {
                skipped.push(SkippedLine { line, error });
            }
            Err(e) => return Err(e),
        }
    }
    Ok((records, skipped))
}

pub fn write_records_to<'a, W: Write>(
    writer: W,
    records: impl IntoIterator<Item = &'a AnnotationRecord>,
) -> Result<(), RecordIoError> {
    let mut out = BufWriter::new(writer);
    for record in records {
        serde_json::to_writer(&mut out, record).map_err(io::Error::from)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_records<'a>(
    path: impl AsRef<Path>,
    records: impl IntoIterator<Item = &'a AnnotationRecord>,
) -> Result<(), RecordIoError> {
    write_records_to(File::create(path)?, records)
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"{"video_id":"a","duration":4.0,"question":"q","answer_kind":"freeform","gt_answer":"x","objects":[]}"#;

    #[test]
    fn empty_file_yields_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.jsonl");
        std::fs::write(&path, "").unwrap();
        let (records, skipped) = read_records(&path, ReadMode::Strict).unwrap();
        assert!(records.is_empty() && skipped.is_empty());
    }

    #[test]
    fn missing_video_id_names_line() {
        let bad = GOOD.replace(r#""video_id":"a","#, "");
        let text = format!("{GOOD}\n\n{bad}\n");
        let err = RecordReader::new(text.as_bytes())
            .collect::<Result<Vec<_>, _>>()
            .unwrap_err();
        match err {
            RecordIoError::Schema { line, error } => {
                assert_eq!(line, 3);
                assert!(error.message.contains("video_id"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn permissive_skips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("mixed.jsonl");
        std::fs::write(&path, format!("{GOOD}\nnot json\n{GOOD}\n")).unwrap();
        assert!(read_records(&path, ReadMode::Strict).is_err());
        let (records, skipped) = read_records(&path, ReadMode::Permissive).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(skipped.len(), 1);
        assert_eq!(skipped[0].line, 2);
    }

    #[test]
    fn semantic_errors_are_schema_errors() {
        let bad = GOOD.replace("\"duration\":4.0", "\"duration\":-1");
        let err = RecordReader::new(bad.as_bytes()).next().unwrap().unwrap_err();
        assert!(matches!(err, RecordIoError::Schema { line: 1, .. }));
    }
}
