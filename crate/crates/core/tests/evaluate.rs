use std::collections::BTreeMap;

use afortiori::backend::{cosine, Embedder, HashedBagOfWords};
use afortiori::corpus::RecordId;
use afortiori::evaluate::{
    confusion_matrix, exact_word_match, grammar_report, identification_metrics, paired_t_test, per_class_metrics,
    property_report, similarity_summary, span_scores, EvalError, GrammarChecker, GrammarIssue, GrammarStatus,
    PropertyPair, RecallConvention,
};
use afortiori::{SentenceType, Verdict};
use approx::assert_relative_eq;
use proptest::prelude::*;

#[test]
fn per_class_hand_values() {
    let gold = ["A", "A", "B", "C"];
    let pred = ["A", "B", "B", "B"];
    let r = per_class_metrics(&gold, &pred).unwrap();
    let a = r.class("A").unwrap();
    assert_relative_eq!(a.precision, 1.0);
    assert_relative_eq!(a.recall, 0.5);
    assert_relative_eq!(a.f1, 2.0 / 3.0);
    let b = r.class("B").unwrap();
    assert_relative_eq!(b.precision, 1.0 / 3.0);
    assert_relative_eq!(b.recall, 1.0);
    assert_relative_eq!(b.f1, 0.5);
    let c = r.class("C").unwrap();
    assert_eq!((c.precision, c.recall, c.f1), (0.0, 0.0, 0.0));
    assert!(c.zero_denominators.contains(&"precision".to_string()), "{:?}", c.zero_denominators);
    assert_relative_eq!(r.accuracy, 0.5);
    assert_relative_eq!(r.macro_f1, (2.0 / 3.0 + 0.5) / 3.0);
    assert!(matches!(per_class_metrics(&gold, &pred[..3]), Err(EvalError::LengthMismatch(4, 3))));
}

#[test]
fn unknown_predictions_under_both_recall_conventions() {
    use Verdict::*;
    let gold = [AF, AF, AF, NAF];
    let pred = [AF, Unknown, NAF, NAF];
    let m = confusion_matrix(&gold, &pred).unwrap();
    let full = identification_metrics(&m, RecallConvention::FullGold);
    let excl = identification_metrics(&m, RecallConvention::ExcludeUnknownPredictions);
    assert_relative_eq!(full.af.recall, 1.0 / 3.0);
    assert_relative_eq!(excl.af.recall, 0.5);
    assert_relative_eq!(full.af.precision, 1.0);
    assert_relative_eq!(full.accuracy, 0.5);
}

#[test]
fn hashed_bag_of_words_is_orthogonal_on_disjoint_vocabularies() {
    let e = HashedBagOfWords::default();
    let (g, p) = ("quiet harbour", "loud mountain");
    let gb: Vec<usize> = g.split(' ').map(|t| e.bucket(t)).collect();
    let pb: Vec<usize> = p.split(' ').map(|t| e.bucket(t)).collect();
    assert!(gb.iter().all(|b| !pb.contains(b)), "fixture tokens collide");
    let s = span_scores(g, p, &e).unwrap();
    assert_eq!(s.cosine_similarity, 0.0);
    assert_eq!(s.exact_word_match, 0.0);

    let same = span_scores("Quiet, harbour!", "quiet harbour", &e).unwrap();
    assert_relative_eq!(same.cosine_similarity, 1.0, epsilon = 1e-12);
    assert_relative_eq!(same.exact_word_match, 1.0);

    let v = e.embed("one two three").unwrap();
    assert_relative_eq!(cosine(&v, &v).unwrap(), 1.0, epsilon = 1e-12);
}

#[test]
fn span_edge_cases() {
    let e = HashedBagOfWords::default();
    assert!(matches!(span_scores("  ", "x", &e), Err(EvalError::EmptyGold)));
    let empty = span_scores("lift a chair", "", &e).unwrap();
    assert_eq!(empty.cosine_similarity, 0.0);
    assert!(empty.flag.is_some());
    // repeated tokens count at most as often as they occur in both
    assert_relative_eq!(exact_word_match("a a b", "a b b"), 2.0 / 3.0);
}

#[test]
fn summary_rejects_bad_input() {
    assert!(matches!(similarity_summary(&[]), Err(EvalError::Empty)));
    assert!(matches!(similarity_summary(&[0.1, f64::NAN]), Err(EvalError::NonFinite)));
    let s = similarity_summary(&[0.2, 0.4, 0.6, 0.8]).unwrap();
    assert_relative_eq!(s.median, 0.5);
    assert_relative_eq!(s.q25, 0.35);
    assert_relative_eq!(s.std, (0.2f64 / 3.0).sqrt(), epsilon = 1e-12);
    assert!(matches!(paired_t_test(&[1.0], &[2.0]), Err(EvalError::TooFew(1))));
}

#[test]
fn property_vocabulary_report() {
    let pair = |id: &str, gold: &[&str], pred: &[&str]| PropertyPair {
        record_id: RecordId(id.to_string()),
        sentence_type: SentenceType::RE,
        gold: gold.iter().map(|s| s.to_string()).collect(),
        predicted: pred.iter().map(|s| s.to_string()).collect(),
    };
    let pairs = vec![
        pair("1", &["Effort", "Size"], &["effort ", "Size"]),
        pair("2", &["Cost"], &["Price", "Cost"]),
        pair("3", &["Risk"], &[]),
    ];
    let r = property_report(&pairs, 2);
    assert_eq!(r.exact_pair_matches, 1);
    assert_eq!(r.at_least_one_match, 2);
    assert_eq!(r.empty_predictions, 1);
    assert_eq!(r.distinct_count, 4);
    assert_eq!(r.copied_count, 3);
    assert_eq!(r.unseen_count, 1);
}

struct Picky;

impl GrammarChecker for Picky {
    fn check(&self, text: &str) -> Result<Vec<GrammarIssue>, EvalError> {
        Ok(text
            .contains(" i ")
            .then(|| GrammarIssue {
                rule_id: "I_LOWERCASE".into(),
                category: "CASING".into(),
                message: "capitalise".into(),
            })
            .into_iter()
            .collect())
    }
}

#[test]
fn grammar_counts_and_skip() {
    let texts = vec!["Then i left.".to_string(), "All good here.".to_string(), "So i said i would.".to_string()];
    let r = grammar_report(&texts, Some(&Picky)).unwrap();
    assert_eq!(r.status, GrammarStatus::Checked);
    assert_eq!(r.entries_with_errors, 2);
    assert_eq!(r.error_type_counts, BTreeMap::from([("CASING".to_string(), 2)]));
    let skipped = grammar_report(&texts, None).unwrap();
    assert_eq!(skipped.status, GrammarStatus::Skipped);
    assert_eq!(skipped.entries_with_errors, 0);
}

proptest! {
    #[test]
    fn t_statistic_is_antisymmetric(pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 2..40)) {
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        prop_assert!((ab.t + ba.t).abs() < 1e-9 || (ab.t.is_nan() && ba.t.is_nan()));
        prop_assert_eq!(ab.df, a.len() - 1);
        if ab.p_two_tailed.is_finite() {
            prop_assert!((ab.p_two_tailed - ba.p_two_tailed).abs() < 1e-9);
        }
    }

    #[test]
    fn word_match_ignores_case_and_punctuation(words in prop::collection::vec("[a-z]{1,6}", 1..6), punct in "[,.;!?]") {
        let gold = words.join(" ");
        let noisy: Vec<String> = words.iter().map(|w| format!("{}{punct}", w.to_uppercase())).collect();
        prop_assert_eq!(exact_word_match(&gold, &noisy.join(" ")), 1.0);
        let m = exact_word_match(&gold, "zzzzzzz");
        prop_assert!((0.0..=1.0).contains(&m));
    }
}
