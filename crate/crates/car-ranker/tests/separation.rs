//! End-to-end separation: on a corpus where positives share a planted
//! token with the query, the trained ranker must score held-out positives
//! above held-out negatives almost always.

use car_ranker::{train_ranker, RankerConfig, RankerTrainConfig, TrainPair};
use rand::Rng;

fn planted_pairs(count: usize, seed: u64) -> Vec<TrainPair> {
    let mut rng = car_grad::seeded_rng(seed);
    let topics: Vec<String> = (0..10).map(|i| format!("topic{i}")).collect();
    let fillers: Vec<String> = (0..30).map(|i| format!("filler{i}")).collect();
    let mut pairs = Vec::with_capacity(count * 2);
    for _ in 0..count {
        let topic = &topics[rng.gen_range(0..topics.len())];
        let query = format!("about {topic}");
        let mut pos_words: Vec<String> = (0..8)
            .map(|_| fillers[rng.gen_range(0..fillers.len())].clone())
            .collect();
        pos_words.insert(rng.gen_range(0..=pos_words.len()), topic.clone());
        pos_words.insert(rng.gen_range(0..=pos_words.len()), topic.clone());
        let neg_topic = loop {
            let t = &topics[rng.gen_range(0..topics.len())];
            if t != topic {
                break t;
            }
        };
        let mut neg_words: Vec<String> = (0..8)
            .map(|_| fillers[rng.gen_range(0..fillers.len())].clone())
            .collect();
        neg_words.insert(rng.gen_range(0..=neg_words.len()), neg_topic.clone());
        pairs.push(TrainPair {
            query_text: query.clone(),
            doc_text: pos_words.join(" "),
            label: 1,
        });
        pairs.push(TrainPair {
            query_text: query,
            doc_text: neg_words.join(" "),
            label: 0,
        });
    }
    pairs
}

#[test]
fn planted_token_positives_outscore_negatives_on_held_out_pairs() {
    let train = planted_pairs(60, 11);
    let held_out = planted_pairs(30, 97);
    let train_config = RankerTrainConfig {
        learning_rate: 2e-3,
        batch_size: 8,
        epochs: 12,
        seed: 5,
        max_len: 32,
    };
    let model_config = RankerConfig {
        layers: 2,
        heads: 2,
        d_model: 32,
        d_ff: 64,
        max_len: 32,
        vocab_cap: 256,
    };
    let (ranker, log) = train_ranker(&train_config, model_config, &train).unwrap();
    assert!(
        log.epoch_mean_loss.last().unwrap() < log.epoch_mean_loss.first().unwrap(),
        "loss never improved: {:?}",
        log.epoch_mean_loss
    );

    // Pair accuracy: positive of each (query, +, -) pair must outscore the
    // negative of the same query.
    let mut correct = 0usize;
    let mut total = 0usize;
    for pair in held_out.chunks(2) {
        let pos = ranker.score(&pair[0].query_text, &pair[0].doc_text).unwrap();
        let neg = ranker.score(&pair[1].query_text, &pair[1].doc_text).unwrap();
        total += 1;
        if pos > neg {
            correct += 1;
        }
    }
    let accuracy = correct as f64 / total as f64;
    assert!(accuracy >= 0.9, "held-out pair accuracy {accuracy}");
}
