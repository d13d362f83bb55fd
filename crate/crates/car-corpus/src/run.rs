//! TREC run files: `qid Q0 docid rank score tag`, one entry per line.
//!
//! Readers and writers share one validator, so anything a writer emits
//! reads back, and anything that would not validate is rejected on read.

use std::fs;
use std::path::Path;

use crate::error::CorpusError;
use crate::types::RunEntry;

/// Check RunEntry invariants: per query, ranks are 1..n in file order,
/// scores non-increasing, equal scores ordered by ascending doc id, doc ids
/// unique, and each query's block contiguous.
pub fn validate_run(entries: &[RunEntry]) -> Result<(), CorpusError> {
    let mut seen_queries: Vec<&str> = Vec::new();
    let mut i = 0;
    while i < entries.len() {
        let qid = entries[i].query_id.as_str();
        if seen_queries.contains(&qid) {
            return Err(CorpusError::validation(format!(
                "entries for query '{qid}' are not contiguous"
            )));
        }
        seen_queries.push(qid);
        let mut j = i;
        let mut docs: Vec<&str> = Vec::new();
        while j < entries.len() && entries[j].query_id == qid {
            let entry = &entries[j];
            let position = (j - i + 1) as u32;
            if entry.rank != position {
                return Err(CorpusError::validation(format!(
                    "query '{qid}': rank {} at position {position}",
                    entry.rank
                )));
            }
            if !entry.score.is_finite() {
                return Err(CorpusError::validation(format!(
                    "query '{qid}': non-finite score for '{}'",
                    entry.doc_id
                )));
            }
            if docs.contains(&entry.doc_id.as_str()) {
                return Err(CorpusError::validation(format!(
                    "query '{qid}': duplicate document '{}'",
                    entry.doc_id
                )));
            }
            docs.push(&entry.doc_id);
            if j > i {
                let prev = &entries[j - 1];
                if entry.score > prev.score {
                    return Err(CorpusError::validation(format!(
                        "query '{qid}': score increases at rank {}",
                        entry.rank
                    )));
                }
                if entry.score == prev.score && entry.doc_id < prev.doc_id {
                    return Err(CorpusError::validation(format!(
                        "query '{qid}': tie at rank {} not ordered by doc id",
                        entry.rank
                    )));
                }
            }
            j += 1;
        }
        i = j;
    }
    Ok(())
}

pub fn parse_run_line(line: &str, number: usize) -> Result<RunEntry, CorpusError> {
    let fields: Vec<&str> = line.split_whitespace().collect();
    if fields.len() != 6 {
        return Err(CorpusError::parse(
            number,
            format!("expected 6 run fields, got {}", fields.len()),
        ));
    }
    if fields[1] != "Q0" {
        return Err(CorpusError::parse(
            number,
            format!("expected literal Q0, got '{}'", fields[1]),
        ));
    }
    let rank: u32 = fields[3]
        .parse()
        .map_err(|_| CorpusError::parse(number, format!("invalid rank '{}'", fields[3])))?;
    if rank == 0 {
        return Err(CorpusError::parse(number, "rank must be positive"));
    }
    let score: f64 = fields[4]
        .parse()
        .map_err(|_| CorpusError::parse(number, format!("invalid score '{}'", fields[4])))?;
    Ok(RunEntry {
        query_id: fields[0].to_string(),
        doc_id: fields[2].to_string(),
        rank,
        score,
        tag: fields[5].to_string(),
    })
}

pub fn read_run(path: &Path) -> Result<Vec<RunEntry>, CorpusError> {
    let content = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut entries = Vec::new();
    for (i, line) in content.lines().enumerate() {
        entries.push(parse_run_line(line, i + 1)?);
    }
    validate_run(&entries)?;
    Ok(entries)
}

/// Render one entry as its run-file line (no newline).
pub fn format_run_entry(entry: &RunEntry) -> Result<String, CorpusError> {
    for field in [&entry.query_id, &entry.doc_id, &entry.tag] {
        if field.is_empty() || field.chars().any(char::is_whitespace) {
            return Err(CorpusError::validation(format!(
                "unwritable run field {field:?}"
            )));
        }
    }
    Ok(format!(
        "{} Q0 {} {} {} {}",
        entry.query_id, entry.doc_id, entry.rank, entry.score, entry.tag
    ))
}

pub fn write_run(path: &Path, entries: &[RunEntry]) -> Result<(), CorpusError> {
    validate_run(entries)?;
    let mut out = String::new();
    for entry in entries {
        out.push_str(&format_run_entry(entry)?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CorpusError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(qid: &str, did: &str, rank: u32, score: f64) -> RunEntry {
        RunEntry {
            query_id: qid.into(),
            doc_id: did.into(),
            rank,
            score,
            tag: "car".into(),
        }
    }

    #[test]
    fn format_matches_convention() {
        let line = format_run_entry(&entry("q1", "d7", 1, 0.93)).unwrap();
        assert_eq!(line, "q1 Q0 d7 1 0.93 car");
    }

    #[test]
    fn round_trip_preserves_entries() {
        let entries = vec![
            entry("q1", "d7", 1, 0.93),
            entry("q1", "d2", 2, 0.5),
            entry("q2", "d9", 1, 1.0),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.trec");
        write_run(&path, &entries).unwrap();
        let back = read_run(&path).unwrap();
        assert_eq!(back, entries);
    }

    #[test]
    fn increasing_score_is_validation_error() {
        let entries = vec![entry("q1", "d7", 1, 0.5), entry("q1", "d2", 2, 0.9)];
        assert!(validate_run(&entries).is_err());
    }

    #[test]
    fn tie_must_order_by_doc_id() {
        let bad = vec![entry("q1", "d7", 1, 0.5), entry("q1", "d2", 2, 0.5)];
        assert!(validate_run(&bad).is_err());
        let good = vec![entry("q1", "d2", 1, 0.5), entry("q1", "d7", 2, 0.5)];
        assert!(validate_run(&good).is_ok());
    }

    #[test]
    fn ranks_must_be_contiguous_from_one() {
        let entries = vec![entry("q1", "d7", 1, 0.9), entry("q1", "d2", 3, 0.5)];
        assert!(validate_run(&entries).is_err());
    }

    #[test]
    fn interleaved_queries_rejected() {
        let entries = vec![
            entry("q1", "d7", 1, 0.9),
            entry("q2", "d2", 1, 0.5),
            entry("q1", "d3", 2, 0.4),
        ];
        assert!(validate_run(&entries).is_err());
    }
}
