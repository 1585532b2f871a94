//! JSON Lines corpus files: one `MethodRecord` per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::extractor::MethodRecord;

#[derive(Debug, Default)]
pub struct CorpusRead {
    pub records: Vec<MethodRecord>,
    /// Lines that failed to parse or lacked a required key.
    pub rejected: usize,
    pub diagnostics: Vec<String>,
}

/// Parses one line. Unknown keys are ignored; missing keys are an error.
pub fn parse_record(line: &str) -> std::result::Result<MethodRecord, String> {
    let record: MethodRecord = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if record.method_name.is_empty() {
        return Err("empty method_name".to_string());
    }
    Ok(record)
}

pub fn read_corpus_from<R: BufRead>(reader: R) -> std::io::Result<CorpusRead> {
    let mut out = CorpusRead::default();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_record(&line) {
            Ok(r) => out.records.push(r),
            Err(e) => {
                out.rejected += 1;
                out.diagnostics.push(format!("line {}: {e}", n + 1));
            }
        }
    }
    Ok(out)
}

pub fn read_corpus(path: &Path) -> Result<CorpusRead> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus_from(BufReader::new(file)).map_err(|e| Error::io(path, e))
}

pub fn write_records<W: Write>(mut writer: W, records: &[MethodRecord]) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut writer, r)?;
        writer.write_all(b"\n").map_err(|e| Error::io(Path::new("<output>"), e))?;
    }
    Ok(())
}

pub fn write_corpus(path: &Path, records: &[MethodRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_records(&mut w, records)?;
    w.flush().map_err(|e| Error::io(path, e))
}
