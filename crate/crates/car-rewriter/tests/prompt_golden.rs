//! Golden-file checks for every prompt style: the serialized request must
//! be byte-stable, carry the expected template wording, and pin the
//! default generation hyperparameters.
//!
//! Regenerate with `UPDATE_GOLDEN=1 cargo test -p car-rewriter`.

use std::path::PathBuf;

use car_corpus::Query;
use car_rewriter::{build_prompt, GenerationParams, PromptKind, PromptStyle};

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var("UPDATE_GOLDEN").is_ok() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden file {}: {e}", path.display()));
    assert_eq!(actual, expected, "golden mismatch for {name}");
}

fn request_for(kind: PromptKind) -> car_rewriter::ChatRequest {
    let style = PromptStyle::new(kind);
    let params = GenerationParams::defaults_for(kind, "gpt-3.5-turbo");
    let query = Query::new("q1", "define sri");
    let context = if style.requires_context() {
        Some("Sri is a Sanskrit word meaning radiance. It is used in the Indian subcontinent as a title of veneration.")
    } else {
        None
    };
    build_prompt(&style, &params, &query, context).unwrap()
}

#[test]
fn golden_requests_for_all_styles() {
    for kind in PromptKind::all() {
        let request = request_for(kind);
        check_golden(&format!("{}.json", kind.as_str()), &request.to_json());
    }
}

#[test]
fn paper_wordings_present_in_goldens() {
    let prompt1 = request_for(PromptKind::Prompt1).to_json();
    assert!(prompt1.contains("Generate short sentence expanding:"));

    let prompt2 = request_for(PromptKind::Prompt2).to_json();
    assert!(prompt2.contains("Generate short sentence question:"));

    let in_context = request_for(PromptKind::InContext);
    assert_eq!(in_context.messages[0].role.as_str(), "system");
    assert!(in_context.messages[0]
        .content
        .starts_with("You are a system that gives an expansion for queries"));
}

#[test]
fn generation_defaults_asserted_on_serialized_request() {
    for kind in PromptKind::all() {
        let value: serde_json::Value =
            serde_json::from_str(&request_for(kind).to_json()).unwrap();
        assert_eq!(value["temperature"], 0.5, "{kind:?}");
        assert_eq!(value["presence_penalty"], 0.6, "{kind:?}");
        assert_eq!(value["frequency_penalty"], 0.8, "{kind:?}");
        let expected_tokens = if kind == PromptKind::PseudoDocument {
            128
        } else {
            35
        };
        assert_eq!(value["max_tokens"], expected_tokens, "{kind:?}");
    }
}

#[test]
fn demonstrations_precede_test_block_in_order() {
    let request = request_for(PromptKind::InContext);
    let demos = car_rewriter::default_few_shot();
    // system, then (user, assistant) per demo, then the test user message.
    assert_eq!(request.messages.len(), 2 + 2 * demos.len());
    for (i, demo) in demos.iter().enumerate() {
        assert!(request.messages[1 + 2 * i].content.contains(&demo.query));
        assert_eq!(request.messages[2 + 2 * i].content, demo.description);
    }
    assert!(request
        .messages
        .last()
        .unwrap()
        .content
        .contains("define sri"));
}
