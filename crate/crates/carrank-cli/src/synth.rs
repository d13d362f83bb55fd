//! Bundled synthetic corpus generator, so the full pipeline and the
//! acceptance suite run offline in minutes.
//!
//! The construction mirrors the two failure modes the rewriter exists to
//! fix: vocabulary mismatch and query ambiguity.
//!
//! * A fixed set of topics each has its own token vocabulary. Documents
//!   are sentences mixing topic tokens with filler.
//! * A query is `<qualifier> <head>`. Head tokens (think acronyms) appear
//!   in queries only, never in documents, and every head is polysemous:
//!   it has two sense topics. Qualifiers carry no information about the
//!   intended sense.
//! * Each training query intends one sense; its judged-relevant documents
//!   are dense in that sense's topic. Candidate pools contain the other
//!   sense's documents too, so training on original queries pairs the
//!   same surface text with contradictory labels — the forced-match noise
//!   of ambiguous training queries. Rewritten queries carry their
//!   positive document's topic tokens, which resolves the contradiction.
//! * Evaluation queries intend the head's dominant (first) sense and
//!   their pools contain no wrong-sense documents, mirroring a corpus
//!   that only covers one reading of an ambiguous query.

use std::collections::BTreeMap;
use std::path::Path;

use car_corpus::{
    write_collection, write_qrels, write_queries, write_run, Document, Judgment, JudgmentSet,
    Query, RunEntry,
};
use car_selector::SelectionExample;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub topics: usize,
    pub heads_per_topic: usize,
    /// Training queries per (head, sense).
    pub train_queries_per_sense: usize,
    /// Evaluation queries per head (dominant sense only).
    pub eval_queries_per_head: usize,
    /// Relevant documents per (head, sense).
    pub relevant_per_sense: usize,
    /// Background documents per topic (distractor stock).
    pub background_per_topic: usize,
    /// Background documents mixed into each candidate pool.
    pub pool_background: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            topics: 8,
            heads_per_topic: 4,
            train_queries_per_sense: 1,
            eval_queries_per_head: 2,
            relevant_per_sense: 2,
            background_per_topic: 40,
            pool_background: 11,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub collection: Vec<Document>,
    pub train_queries: Vec<Query>,
    pub eval_queries: Vec<Query>,
    pub train_qrels: JudgmentSet,
    pub eval_qrels: JudgmentSet,
    pub train_candidates: Vec<RunEntry>,
    pub eval_candidates: Vec<RunEntry>,
}

const QUALIFIERS: [&str; 8] = [
    "define", "price", "about", "info", "find", "meaning", "review", "history",
];

fn topic_token(topic: usize, word: usize) -> String {
    format!("t{topic}w{word}")
}

const TOPIC_WORDS: usize = 10;

struct Generator {
    rng: ChaCha8Rng,
    fillers: Vec<String>,
}

impl Generator {
    fn filler(&mut self) -> String {
        self.fillers[self.rng.gen_range(0..self.fillers.len())].clone()
    }

    fn topic_word(&mut self, topic: usize) -> String {
        topic_token(topic, self.rng.gen_range(0..TOPIC_WORDS))
    }

    /// A sentence mixing `density` topic words into filler.
    fn topic_sentence(&mut self, topic: usize, density: usize) -> String {
        let mut words = Vec::with_capacity(6);
        for _ in 0..density {
            words.push(self.topic_word(topic));
        }
        while words.len() < 6 {
            words.push(self.filler());
        }
        words.shuffle(&mut self.rng);
        let mut sentence = words.join(" ");
        sentence.push('.');
        capitalize(sentence)
    }

    fn doc_text(&mut self, topic: usize, dense: bool) -> String {
        let sentences: Vec<String> = (0..6)
            .map(|_| {
                let density = if dense {
                    self.rng.gen_range(2..=4)
                } else {
                    self.rng.gen_range(1..=3)
                };
                self.topic_sentence(topic, density)
            })
            .collect();
        sentences.join(" ")
    }
}

fn capitalize(s: String) -> String {
    let mut chars = s.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().collect::<String>() + chars.as_str(),
        None => s,
    }
}

/// Sense topics of a head: the dominant sense is `head % topics`, the
/// second sense sits half the topic ring away.
pub fn sense_topics(head: usize, topics: usize) -> (usize, usize) {
    let dominant = head % topics;
    let other = (dominant + topics / 2.max(1)) % topics;
    (dominant, other)
}

pub fn generate(config: &SynthConfig) -> SynthCorpus {
    let mut generator = Generator {
        rng: car_grad::seeded_rng(config.seed ^ 0x5e9a7),
        fillers: (0..120).map(|i| format!("f{i}")).collect(),
    };
    let heads = config.topics * config.heads_per_topic;

    // Relevant documents per (head, sense).
    let mut collection = Vec::new();
    let mut sense_docs: Vec<[Vec<String>; 2]> = Vec::with_capacity(heads);
    for head in 0..heads {
        let (s0, s1) = sense_topics(head, config.topics);
        let mut per_sense: [Vec<String>; 2] = [Vec::new(), Vec::new()];
        for (sense, topic) in [(0usize, s0), (1, s1)] {
            for r in 0..config.relevant_per_sense {
                let id = format!("d_rel_{head}_{sense}_{r}");
                collection.push(Document::new(&id, generator.doc_text(topic, true)));
                per_sense[sense].push(id);
            }
        }
        sense_docs.push(per_sense);
    }

    let mut background_by_topic: Vec<Vec<String>> = vec![Vec::new(); config.topics];
    for topic in 0..config.topics {
        for b in 0..config.background_per_topic {
            let id = format!("d_bg_{topic}_{b}");
            collection.push(Document::new(&id, generator.doc_text(topic, false)));
            background_by_topic[topic].push(id);
        }
    }

    let mut train_queries = Vec::new();
    let mut eval_queries = Vec::new();
    let mut train_qrels = JudgmentSet::new();
    let mut eval_qrels = JudgmentSet::new();
    let mut train_candidates = Vec::new();
    let mut eval_candidates = Vec::new();

    let queries_per_head = 2 * config.train_queries_per_sense + config.eval_queries_per_head;
    assert!(
        queries_per_head <= QUALIFIERS.len(),
        "not enough qualifiers for {queries_per_head} queries per head"
    );

    let push_query = |generator: &mut Generator,
                      queries: &mut Vec<Query>,
                      qrels: &mut JudgmentSet,
                      candidates: &mut Vec<RunEntry>,
                      id: String,
                      qualifier: &str,
                      head: usize,
                      sense: usize,
                      include_other_sense: bool| {
        let (s0, s1) = sense_topics(head, config.topics);
        let own_topic = if sense == 0 { s0 } else { s1 };
        let other_topic = if sense == 0 { s1 } else { s0 };
        let head_token = format!("amb{head}");
        queries.push(Query::new(&id, format!("{qualifier} {head_token}")));

        for (r, doc_id) in sense_docs[head][sense].iter().enumerate() {
            qrels
                .insert(Judgment {
                    query_id: id.clone(),
                    doc_id: doc_id.clone(),
                    grade: if r == 0 { 2 } else { 1 },
                })
                .expect("unique by construction");
        }

        let mut pool: Vec<String> = sense_docs[head][sense].clone();
        if include_other_sense {
            pool.extend(sense_docs[head][1 - sense].iter().cloned());
        }

        // Relevant documents of other heads keep a pure document-quality
        // prior from solving the task. Heads sharing a sense topic with
        // this head are excluded: their documents would be topically
        // indistinguishable from judged ones.
        let mut other_rel: Vec<&String> = sense_docs
            .iter()
            .enumerate()
            .filter(|(h, _)| {
                let (o0, o1) = sense_topics(*h, config.topics);
                *h != head
                    && o0 != own_topic
                    && o0 != other_topic
                    && o1 != own_topic
                    && o1 != other_topic
            })
            .flat_map(|(_, senses)| senses[0].iter().chain(senses[1].iter()))
            .collect();
        other_rel.sort();
        let mut chosen: Vec<usize> = rand::seq::index::sample(
            &mut generator.rng,
            other_rel.len(),
            config.pool_other_relevant.min(other_rel.len()),
        )
        .into_iter()
        .collect();
        chosen.sort_unstable();
        pool.extend(chosen.into_iter().map(|i| other_rel[i].clone()));

        // Background from topics unrelated to either sense.
        let mut bg: Vec<&String> = background_by_topic
            .iter()
            .enumerate()
            .filter(|(t, _)| *t != own_topic && *t != other_topic)
            .flat_map(|(_, ids)| ids.iter())
            .collect();
        bg.sort();
        let mut chosen: Vec<usize> = rand::seq::index::sample(
            &mut generator.rng,
            bg.len(),
            config.pool_background.min(bg.len()),
        )
        .into_iter()
        .collect();
        chosen.sort_unstable();
        pool.extend(chosen.into_iter().map(|i| bg[i].clone()));

        pool.shuffle(&mut generator.rng);
        let depth = pool.len();
        for (i, doc_id) in pool.into_iter().enumerate() {
            candidates.push(RunEntry {
                query_id: id.clone(),
                doc_id,
                rank: (i + 1) as u32,
                score: (depth - i) as f64,
                tag: "synth-first-stage".into(),
            });
        }
    };

    for head in 0..heads {
        let mut qualifiers: Vec<&str> = QUALIFIERS.to_vec();
        qualifiers.shuffle(&mut generator.rng);
        let mut next_qualifier = 0usize;

        // Training queries: both senses, contradiction included.
        for sense in [0usize, 1] {
            for _ in 0..config.train_queries_per_sense {
                let id = format!("tq{}", train_queries.len());
                push_query(
                    &mut generator,
                    &mut train_queries,
                    &mut train_qrels,
                    &mut train_candidates,
                    id,
                    qualifiers[next_qualifier],
                    head,
                    sense,
                    true,
                );
                next_qualifier += 1;
            }
        }

        // Evaluation: dominant sense only, no wrong-sense documents in the
        // pool, fresh qualifiers.
        for _ in 0..config.eval_queries_per_head {
            let id = format!("eq{}", eval_queries.len());
            push_query(
                &mut generator,
                &mut eval_queries,
                &mut eval_qrels,
                &mut eval_candidates,
                id,
                qualifiers[next_qualifier],
                head,
                0,
                false,
            );
            next_qualifier += 1;
        }
    }

    SynthCorpus {
        collection,
        train_queries,
        eval_queries,
        train_qrels,
        eval_qrels,
        train_candidates,
        eval_candidates,
    }
}

/// Write the corpus files into `dir` with the names `example_config` expects.
pub fn write_corpus(corpus: &SynthCorpus, dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    write_collection(&dir.join("collection.tsv"), corpus.collection.iter())?;
    write_queries(&dir.join("train_queries.tsv"), corpus.train_queries.iter())?;
    write_queries(&dir.join("eval_queries.tsv"), corpus.eval_queries.iter())?;
    write_qrels(&dir.join("train_qrels.txt"), &corpus.train_qrels)?;
    write_qrels(&dir.join("eval_qrels.txt"), &corpus.eval_qrels)?;
    write_run(&dir.join("train_candidates.trec"), &corpus.train_candidates)?;
    write_run(&dir.join("eval_candidates.trec"), &corpus.eval_candidates)?;
    Ok(())
}

/// Planted-token triples for the selector task: the query's tokens appear
/// only in the positive passage.
pub fn selector_triples(count: usize, seed: u64) -> Vec<SelectionExample> {
    let mut rng = car_grad::seeded_rng(seed);
    let markers: Vec<String> = (0..14).map(|i| format!("marker{i}")).collect();
    let fillers: Vec<String> = (0..50).map(|i| format!("pad{i}")).collect();
    let filler_sentence = |rng: &mut ChaCha8Rng| -> String {
        (0..6)
            .map(|_| fillers[rng.gen_range(0..fillers.len())].clone())
            .collect::<Vec<_>>()
            .join(" ")
    };
    (0..count)
        .map(|_| {
            let a = markers[rng.gen_range(0..markers.len())].clone();
            let b = markers[rng.gen_range(0..markers.len())].clone();
            let positive = format!(
                "{} {a} {} {b} {a}",
                filler_sentence(&mut rng),
                filler_sentence(&mut rng)
            );
            let negatives = (0..3).map(|_| filler_sentence(&mut rng)).collect();
            SelectionExample {
                query: format!("{a} {b}"),
                positive,
                negatives,
            }
        })
        .collect()
}

/// Map from query id to its (graded) relevant documents, in a form handy
/// for building oracle runs in tests.
pub fn graded_docs(qrels: &JudgmentSet, query_id: &str) -> BTreeMap<String, u32> {
    qrels
        .grades_for(query_id)
        .map(|m| m.iter().map(|(d, g)| (d.clone(), *g)).collect())
        .unwrap_or_default()
}
