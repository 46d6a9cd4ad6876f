//! Sidecar manifest: `file_path,subject_id,class_label`, header row required.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::{ClassLabel, SubjectId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    /// Absolute, or relative to the manifest's directory.
    pub file_path: PathBuf,
    pub subject_id: SubjectId,
    pub class_label: ClassLabel,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("manifest header must be `file_path,subject_id,class_label`, found {0:?}")]
    BadHeader(Vec<String>),
    #[error("manifest line {line}: {message}")]
    BadRow { line: u64, message: String },
    #[error("manifest lists subject {0} more than once")]
    DuplicateSubject(SubjectId),
}

#[derive(Deserialize)]
struct Row {
    file_path: String,
    subject_id: String,
    class_label: String,
}

/// Read a manifest file. Relative `file_path`s are resolved against the
/// manifest's directory.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io {
        path: path.to_owned(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base)
}

pub(crate) fn parse_manifest(text: &str, base: &Path) -> Result<Vec<ManifestEntry>, ManifestError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());

    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| ManifestError::BadRow {
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(str::to_owned)
        .collect();
    if headers != ["file_path", "subject_id", "class_label"] {
        return Err(ManifestError::BadHeader(headers));
    }

    let mut entries: Vec<ManifestEntry> = Vec::new();
    for row in reader.deserialize::<Row>() {
        let row = row.map_err(|e| ManifestError::BadRow {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            message: e.to_string(),
        })?;
        let line = entries.len() as u64 + 2;
        let class_label: ClassLabel = row.class_label.parse().map_err(|e: crate::ParseClassLabelError| {
            ManifestError::BadRow {
                line,
                message: e.to_string(),
            }
        })?;
        if row.subject_id.is_empty() {
            return Err(ManifestError::BadRow {
                line,
                message: "empty subject_id".into(),
            });
        }
        let subject_id = SubjectId(row.subject_id);
        if entries.iter().any(|e| e.subject_id == subject_id) {
            return Err(ManifestError::DuplicateSubject(subject_id));
        }
        let p = PathBuf::from(row.file_path);
        let file_path = if p.is_absolute() { p } else { base.join(p) };
        entries.push(ManifestEntry {
            file_path,
            subject_id,
            class_label,
        });
    }
    Ok(entries)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows_and_resolves_relative_paths() {
        let text = "file_path,subject_id,class_label\nins1.edf,ins1,insomnia\n/data/n1.edf, n1 ,control\n";
        let entries = parse_manifest(text, Path::new("/base")).unwrap();
        assert_eq!(entries.len(), 2);
        assert_eq!(entries[0].file_path, PathBuf::from("/base/ins1.edf"));
        assert_eq!(entries[0].class_label, ClassLabel::Insomnia);
        assert_eq!(entries[1].file_path, PathBuf::from("/data/n1.edf"));
        assert_eq!(entries[1].subject_id.as_str(), "n1");
    }

    #[test]
    fn header_row_is_required() {
        let err = parse_manifest("ins1.edf,ins1,insomnia\n", Path::new(".")).unwrap_err();
        assert!(matches!(err, ManifestError::BadHeader(_)));
    }

    #[test]
    fn rejects_unknown_label_and_duplicates() {
        let bad = "file_path,subject_id,class_label\na.edf,a,narcolepsy\n";
        assert!(matches!(parse_manifest(bad, Path::new(".")), Err(ManifestError::BadRow { .. })));
        let dup = "file_path,subject_id,class_label\na.edf,a,control\nb.edf,a,control\n";
        assert!(matches!(parse_manifest(dup, Path::new(".")), Err(ManifestError::DuplicateSubject(_))));
    }

    #[test]
    fn empty_manifest_yields_no_entries() {
        let entries = parse_manifest("file_path,subject_id,class_label\n", Path::new(".")).unwrap();
        assert!(entries.is_empty());
    }
}
