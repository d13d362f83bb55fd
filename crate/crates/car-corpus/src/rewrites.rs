//! Rewritten training sets as line-delimited JSON, one record per line.

use std::fs;
use std::path::Path;

use crate::error::CorpusError;
use crate::types::RewrittenExample;

pub fn save_rewrites(path: &Path, examples: &[RewrittenExample]) -> Result<(), CorpusError> {
    let mut out = String::new();
    for example in examples {
        example.validate()?;
        let line = serde_json::to_string(example)
            .map_err(|e| CorpusError::validation(e.to_string()))?;
        out.push_str(&line);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| CorpusError::io(path, e))
}

pub fn load_rewrites(path: &Path) -> Result<Vec<RewrittenExample>, CorpusError> {
    let content = fs::read_to_string(path).map_err(|e| CorpusError::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let number = i + 1;
        let example: RewrittenExample = serde_json::from_str(line)
            .map_err(|e| CorpusError::parse(number, e.to_string()))?;
        example
            .validate()
            .map_err(|e| CorpusError::parse(number, e.to_string()))?;
        out.push(example);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Query;
    use std::io::Write;

    fn example() -> RewrittenExample {
        RewrittenExample {
            original_query: Query::new("q1", "define sri"),
            rewritten_text: "What is the meaning of the Sanskrit word Sri?".into(),
            context_doc_id: "d_sanskrit".into(),
            label: 1,
            prompt_style: "car_context".into(),
            rewriter_model: "mock".into(),
            fallback: false,
        }
    }

    #[test]
    fn jsonl_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rewrites.jsonl");
        let examples = vec![example()];
        save_rewrites(&path, &examples).unwrap();
        assert_eq!(load_rewrites(&path).unwrap(), examples);
    }

    #[test]
    fn line_count_matches_record_count() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rewrites.jsonl");
        let examples = vec![example(), example(), example()];
        save_rewrites(&path, &examples).unwrap();
        let text = fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert_eq!(load_rewrites(&path).unwrap().len(), 3);
    }

    #[test]
    fn missing_rewritten_text_is_parse_error_with_line() {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        writeln!(
            f,
            r#"{{"original_query":{{"id":"q1","text":"x"}},"context_doc_id":"d","label":1,"prompt_style":"s","rewriter_model":"m"}}"#
        )
        .unwrap();
        let err = load_rewrites(f.path()).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }
}
