//! Metric correctness against independent oracles and the ordering
//! properties nDCG must satisfy.

use car_corpus::{Judgment, JudgmentSet, RunEntry};
use car_metrics::{ndcg_at_k, rouge_l};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn run_from_grades(query_id: &str, order: &[usize]) -> Vec<RunEntry> {
    order
        .iter()
        .enumerate()
        .map(|(i, doc)| RunEntry {
            query_id: query_id.into(),
            doc_id: format!("d{doc}"),
            rank: (i + 1) as u32,
            score: 1.0 - 0.01 * i as f64,
            tag: "t".into(),
        })
        .collect()
}

fn qrels_from_grades(query_id: &str, grades: &[u32]) -> JudgmentSet {
    let mut qrels = JudgmentSet::new();
    for (doc, grade) in grades.iter().enumerate() {
        qrels
            .insert(Judgment {
                query_id: query_id.into(),
                doc_id: format!("d{doc}"),
                grade: *grade,
            })
            .unwrap();
    }
    qrels
}

/// Term-by-term DCG enumeration, written independently of the library
/// implementation (explicit powers of two, explicit base-2 logarithm via
/// the natural-log ratio).
fn brute_force_ndcg(ranked_grades: &[u32], all_grades: &[u32], k: usize) -> f64 {
    let mut dcg = 0.0;
    for (i, g) in ranked_grades.iter().enumerate() {
        if i >= k {
            break;
        }
        let gain = (1u64 << g) as f64 - 1.0;
        let discount = ((i + 2) as f64).ln() / 2f64.ln();
        dcg += gain / discount;
    }
    let mut ideal: Vec<u32> = all_grades.to_vec();
    ideal.sort_unstable_by(|a, b| b.cmp(a));
    let mut idcg = 0.0;
    for (i, g) in ideal.iter().enumerate() {
        if i >= k {
            break;
        }
        let gain = (1u64 << g) as f64 - 1.0;
        let discount = ((i + 2) as f64).ln() / 2f64.ln();
        idcg += gain / discount;
    }
    if idcg == 0.0 {
        0.0
    } else {
        dcg / idcg
    }
}

/// Recursive memoized LCS, independent of the iterative DP in the library.
fn lcs_recursive(a: &[String], b: &[String]) -> usize {
    fn go(
        a: &[String],
        b: &[String],
        i: usize,
        j: usize,
        memo: &mut Vec<Vec<Option<usize>>>,
    ) -> usize {
        if i == 0 || j == 0 {
            return 0;
        }
        if let Some(v) = memo[i][j] {
            return v;
        }
        let v = if a[i - 1] == b[j - 1] {
            go(a, b, i - 1, j - 1, memo) + 1
        } else {
            go(a, b, i - 1, j, memo).max(go(a, b, i, j - 1, memo))
        };
        memo[i][j] = Some(v);
        v
    }
    let mut memo = vec![vec![None; b.len() + 1]; a.len() + 1];
    go(a, b, a.len(), b.len(), &mut memo)
}

#[test]
fn ndcg_matches_brute_force_on_random_small_runs() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for _ in 0..300 {
        let n = rng.gen_range(1..=6);
        let grades: Vec<u32> = (0..n).map(|_| rng.gen_range(0..4)).collect();
        let mut order: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let k = rng.gen_range(1..=8);
        let run = run_from_grades("q", &order);
        let qrels = qrels_from_grades("q", &grades);
        let ranked: Vec<u32> = order.iter().map(|&d| grades[d]).collect();
        let expected = brute_force_ndcg(&ranked, &grades, k);
        let got = ndcg_at_k(&run, &qrels, k);
        assert!(
            (got - expected).abs() < 1e-9,
            "grades {grades:?} order {order:?} k {k}: got {got}, oracle {expected}"
        );
    }
}

#[test]
fn rouge_matches_recursive_lcs_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let vocab = ["a", "b", "c", "d", "e"];
    for _ in 0..200 {
        let len_a = rng.gen_range(1..12);
        let len_b = rng.gen_range(1..12);
        let a: Vec<String> = (0..len_a)
            .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
            .collect();
        let b: Vec<String> = (0..len_b)
            .map(|_| vocab[rng.gen_range(0..vocab.len())].to_string())
            .collect();
        let lcs = lcs_recursive(&a, &b) as f64;
        let p = lcs / len_a as f64;
        let r = lcs / len_b as f64;
        let f1 = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
        let got = rouge_l(&a.join(" "), &b.join(" "));
        assert_eq!(got.precision, p);
        assert_eq!(got.recall, r);
        assert_eq!(got.f1, f1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    /// Any permutation scores at most the ideal ordering.
    #[test]
    fn permutation_never_beats_ideal(
        grades in proptest::collection::vec(0u32..4, 1..6),
        seed in 0u64..1000,
    ) {
        let n = grades.len();
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..n).rev() {
            order.swap(i, rng.gen_range(0..=i));
        }
        let qrels = qrels_from_grades("q", &grades);
        let permuted = ndcg_at_k(&run_from_grades("q", &order), &qrels, 10);

        let mut ideal_order: Vec<usize> = (0..n).collect();
        ideal_order.sort_by(|a, b| grades[*b].cmp(&grades[*a]));
        let ideal = ndcg_at_k(&run_from_grades("q", &ideal_order), &qrels, 10);
        prop_assert!(permuted <= ideal + 1e-12);

        // Equality iff grades are non-increasing along the permuted ranking.
        let ranked: Vec<u32> = order.iter().map(|&d| grades[d]).collect();
        let sorted = ranked.windows(2).all(|w| w[0] >= w[1]);
        if sorted {
            prop_assert!((permuted - ideal).abs() < 1e-12);
        }
    }

    /// nDCG is invariant in k once k reaches the run length and the number
    /// of judged documents.
    #[test]
    fn ndcg_saturates_beyond_run_depth(
        grades in proptest::collection::vec(0u32..4, 1..6),
    ) {
        let n = grades.len();
        let order: Vec<usize> = (0..n).collect();
        let qrels = qrels_from_grades("q", &grades);
        let run = run_from_grades("q", &order);
        let at_n = ndcg_at_k(&run, &qrels, n);
        for extra in 1..4 {
            prop_assert_eq!(ndcg_at_k(&run, &qrels, n + extra), at_n);
        }
    }
}
