//! Labeled training data in csv or tsv (`text,label`).

use std::path::Path;

use thiserror::Error;

use super::{Label, LabeledSentence};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Parse delimited `text,label` rows. A leading `text,label` header is
/// skipped. Tab-delimited input is read without quote handling.
pub fn parse_labeled(input: &str, delimiter: u8) -> Result<Vec<LabeledSentence>, DataError> {
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(false)
        .quoting(delimiter != b'\t')
        .flexible(true)
        .from_reader(input.as_bytes());

    let mut out = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let row = n + 1;
        let record = record.map_err(|e| DataError::Row {
            row,
            message: e.to_string(),
        })?;
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        if record.len() != 2 {
            return Err(DataError::Row {
                row,
                message: format!("expected 2 columns (text, label), found {}", record.len()),
            });
        }
        if row == 1
            && record[0].trim().eq_ignore_ascii_case("text")
            && record[1].trim().eq_ignore_ascii_case("label")
        {
            continue;
        }
        let label: Label =
            record[1]
                .parse()
                .map_err(|e: super::LabelParseError| DataError::Row {
                    row,
                    message: e.to_string(),
                })?;
        let sentence = LabeledSentence::new(record[0].trim(), label).ok_or(DataError::Row {
            row,
            message: "empty text".into(),
        })?;
        out.push(sentence);
    }
    Ok(out)
}

/// Load a `.csv` or `.tsv` file; the delimiter follows the extension.
pub fn load_labeled_path(path: &Path) -> Result<Vec<LabeledSentence>, DataError> {
    let text = std::fs::read_to_string(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let delimiter = match path.extension().and_then(|e| e.to_str()) {
        Some("tsv") | Some("tab") => b'\t',
        _ => b',',
    };
    parse_labeled(&text, delimiter)
}
