//! TREC qrels: whitespace-separated `qid 0 docid grade` lines.

use std::fs;
use std::path::Path;

use crate::error::CorpusError;
use crate::types::{Judgment, JudgmentSet};

pub fn parse_qrels_line(line: &str, number: usize) -> Result<Judgment, CorpusError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(CorpusError::parse(
            number,
            format!("expected 4 qrels fields, got {}", fields.len()),
        ));
    }
    let grade: u32 = fields[3].parse().map_err(|_| {
        CorpusError::parse(number, format!("invalid grade '{}'", fields[3]))
    })?;
    Ok(Judgment {
        query_id: fields[0].to_string(),
        doc_id: fields[2].to_string(),
        grade,
    })
}

pub fn load_qrels(path: &Path) -> Result<JudgmentSet, CorpusError> {
    let content = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut set = JudgmentSet::new();
    for (i, line) in content.lines().enumerate() {
        let number = i + 1;
        let judgment = parse_qrels_line(line, number)?;
        set.insert(judgment).map_err(|_| CorpusError::Duplicate {
            line: number,
            id: fields_join(line),
        })?;
    }
    Ok(set)
}

fn fields_join(line: &str) -> String {
    let fields: Vec<&str> = line.split_whitespace().collect();
    format!("({}, {})", fields[0], fields[2])
}

pub fn write_qrels(path: &Path, qrels: &JudgmentSet) -> Result<(), CorpusError> {
    let mut out = String::new();
    for j in qrels.iter() {
        for field in [&j.query_id, &j.doc_id] {
            if field.is_empty() || field.chars().any(char::is_whitespace) {
                return Err(CorpusError::validation(format!(
                    "unwritable qrels field {field:?}"
                )));
            }
        }
        out.push_str(&format!("{} 0 {} {}\n", j.query_id, j.doc_id, j.grade));
    }
    fs::write(path, out).map_err(|e| CorpusError::io(path, e))
}
