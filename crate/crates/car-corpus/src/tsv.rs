//! UTF-8 TSV collections and query sets: one `id<TAB>text` record per line.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::error::CorpusError;
use crate::types::{Document, Query};

fn parse_line(line: &str, number: usize) -> Result<(&str, &str), CorpusError> {
    let Some((id, text)) = line.split_once('\t') else {
        return Err(CorpusError::parse(number, "expected id<TAB>text"));
    };
    if id.is_empty() {
        return Err(CorpusError::parse(number, "empty id field"));
    }
    Ok((id, text))
}

fn check_writable(id: &str, text: &str) -> Result<(), CorpusError> {
    if id.is_empty() || id.contains('\t') || id.contains('\n') {
        return Err(CorpusError::validation(format!("unwritable id {id:?}")));
    }
    if text.contains('\n') {
        return Err(CorpusError::validation(format!(
            "text for '{id}' contains a newline"
        )));
    }
    Ok(())
}

/// Load a document collection. Duplicate ids are rejected.
pub fn load_collection(path: &Path) -> Result<BTreeMap<String, Document>, CorpusError> {
    let content = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        let number = i + 1;
        let (id, text) = parse_line(line, number)?;
        if out.contains_key(id) {
            return Err(CorpusError::Duplicate {
                line: number,
                id: id.to_string(),
            });
        }
        out.insert(id.to_string(), Document::new(id, text));
    }
    Ok(out)
}

/// Load a query set. Queries must have non-empty text.
pub fn load_queries(path: &Path) -> Result<BTreeMap<String, Query>, CorpusError> {
    let content = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = BTreeMap::new();
    for (i, line) in content.lines().enumerate() {
        let number = i + 1;
        let (id, text) = parse_line(line, number)?;
        if text.is_empty() {
            return Err(CorpusError::parse(number, "empty query text"));
        }
        if out.contains_key(id) {
            return Err(CorpusError::Duplicate {
                line: number,
                id: id.to_string(),
            });
        }
        out.insert(id.to_string(), Query::new(id, text));
    }
    Ok(out)
}

pub fn write_collection<'a>(
    path: &Path,
    docs: impl Iterator<Item = &'a Document>,
) -> Result<(), CorpusError> {
    let mut out = String::new();
    for doc in docs {
        check_writable(&doc.id, &doc.text)?;
        out.push_str(&doc.id);
        out.push('\t');
        out.push_str(&doc.text);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CorpusError::io(path, e))
}

pub fn write_queries<'a>(
    path: &Path,
    queries: impl Iterator<Item = &'a Query>,
) -> Result<(), CorpusError> {
    let mut out = String::new();
    for query in queries {
        check_writable(&query.id, &query.text)?;
        if query.text.is_empty() {
            return Err(CorpusError::validation(format!(
                "query '{}' has empty text",
                query.id
            )));
        }
        out.push_str(&query.id);
        out.push('\t');
        out.push_str(&query.text);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CorpusError::io(path, e))
}
