//! Shared tokenizer: lowercase, split on non-alphanumeric runs.
//! Used by the selectors, the ranker vocabulary and the text metrics so
//! every component sees the same token stream.

pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}
