use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use walkdir::WalkDir;

use super::lexer::lex_java;
use super::methods::{extract_methods, MethodRecord};
use crate::error::{Error, Result};

#[derive(Debug, Default, Clone, Copy, PartialEq, Eq)]
pub struct MineSummary {
    pub files_seen: usize,
    pub files_skipped: usize,
    pub methods_mined: usize,
}

impl fmt::Display for MineSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} files, {} skipped, {} methods",
            self.files_seen, self.files_skipped, self.methods_mined
        )
    }
}

#[derive(Debug, Default)]
pub struct MineReport {
    pub records: Vec<MethodRecord>,
    pub summary: MineSummary,
    pub diagnostics: Vec<String>,
}

/// Collects every `*.java` file under `root` in sorted path order.
fn java_files(root: &Path) -> Vec<PathBuf> {
    let mut files: Vec<PathBuf> = WalkDir::new(root)
        .into_iter()
        .filter_map(|e| e.ok())
        .filter(|e| !e.file_type().is_dir())
        .map(|e| e.into_path())
        .filter(|p| p.extension().is_some_and(|ext| ext == "java"))
        .collect();
    files.sort();
    files
}

fn relative_name(root: &Path, path: &Path) -> String {
    let rel = path.strip_prefix(root).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy())
        .collect::<Vec<_>>()
        .join("/")
}

/// Mines `root`, handing each record to `sink` in sorted-path order.
///
/// Files that cannot be read, are not UTF-8, or fail to lex are skipped with
/// a diagnostic; they never abort the run.
pub fn mine_corpus_with<F>(root: &Path, mut sink: F) -> Result<(MineSummary, Vec<String>)>
where
    F: FnMut(MethodRecord),
{
    if !root.is_dir() {
        return Err(Error::io(
            root,
            std::io::Error::new(std::io::ErrorKind::NotFound, "not a directory"),
        ));
    }
    let mut summary = MineSummary::default();
    let mut diagnostics = Vec::new();
    for path in java_files(root) {
        summary.files_seen += 1;
        let name = relative_name(root, &path);
        let source = match fs::read(&path).map(String::from_utf8) {
            Ok(Ok(s)) => s,
            Ok(Err(_)) => {
                summary.files_skipped += 1;
                diagnostics.push(format!("{name}: skipped, not valid UTF-8"));
                continue;
            }
            Err(e) => {
                summary.files_skipped += 1;
                diagnostics.push(format!("{name}: skipped, {e}"));
                continue;
            }
        };
        let tokens = match lex_java(&source) {
            Ok(t) => t,
            Err(e) => {
                summary.files_skipped += 1;
                diagnostics.push(format!("{name}: skipped, {e}"));
                continue;
            }
        };
        let extraction = extract_methods(&tokens, &name);
        diagnostics.extend(extraction.diagnostics);
        for record in extraction.records {
            summary.methods_mined += 1;
            sink(record);
        }
    }
    Ok((summary, diagnostics))
}

pub fn mine_corpus(root: &Path) -> Result<MineReport> {
    let mut records = Vec::new();
    let (summary, diagnostics) = mine_corpus_with(root, |r| records.push(r))?;
    Ok(MineReport {
        records,
        summary,
        diagnostics,
    })
}
