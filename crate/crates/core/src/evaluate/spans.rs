use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::backend::{cosine, Embedder};

/// Lowercased words with punctuation removed, split on whitespace.
pub fn tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| !c.is_ascii_punctuation() && !is_unicode_punct(*c))
                .flat_map(char::to_lowercase)
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

fn is_unicode_punct(c: char) -> bool {
    matches!(
        c,
        '\u{2018}' | '\u{2019}' | '\u{201C}' | '\u{201D}' | '\u{2013}' | '\u{2014}' | '\u{2026}' | '\u{00AB}' | '\u{00BB}'
    )
}

/// Share of gold tokens matched in the prediction, counting repeated
/// tokens at most as often as they occur in both.
pub fn exact_word_match(gold: &str, pred: &str) -> f64 {
    let g = tokens(gold);
    if g.is_empty() {
        return 0.0;
    }
    let mut available: HashMap<String, usize> = HashMap::new();
    for t in tokens(pred) {
        *available.entry(t).or_default() += 1;
    }
    let mut hits = 0;
    for t in &g {
        if let Some(n) = available.get_mut(t) {
            if *n > 0 {
                *n -= 1;
                hits += 1;
            }
        }
    }
    hits as f64 / g.len() as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpanScores {
    pub cosine_similarity: f64,
    pub exact_word_match: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

pub fn span_scores(gold: &str, pred: &str, embedder: &dyn Embedder) -> Result<SpanScores, EvalError> {
    if tokens(gold).is_empty() {
        return Err(EvalError::EmptyGold);
    }
    if tokens(pred).is_empty() {
        return Ok(SpanScores {
            cosine_similarity: 0.0,
            exact_word_match: 0.0,
            flag: Some("empty prediction".into()),
        });
    }
    let u = embedder.embed(gold).map_err(EvalError::Embed)?;
    let v = embedder.embed(pred).map_err(EvalError::Embed)?;
    Ok(SpanScores {
        cosine_similarity: cosine(&u, &v).map_err(EvalError::Embed)?,
        exact_word_match: exact_word_match(gold, pred),
        flag: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::HashedBagOfWords;

    #[test]
    fn tokenizer() {
        assert_eq!(tokens("Find, THE triggerman!"), ["find", "the", "triggerman"]);
        assert!(tokens(" -- ").is_empty());
    }

    #[test]
    fn identity_and_swap() {
        let e = HashedBagOfWords::default();
        let s = span_scores("find the triggerman", "find the triggerman", &e).unwrap();
        assert!((s.cosine_similarity - 1.0).abs() < 1e-12);
        assert_eq!(s.exact_word_match, 1.0);
        assert_eq!(exact_word_match("fair", "honorable"), 0.0);
    }

    #[test]
    fn repeated_tokens_counted_once_each() {
        assert_eq!(exact_word_match("the the cat", "the cat"), 2.0 / 3.0);
    }

    #[test]
    fn empty_inputs() {
        let e = HashedBagOfWords::default();
        assert!(matches!(span_scores("", "x", &e), Err(EvalError::EmptyGold)));
        let s = span_scores("x", "", &e).unwrap();
        assert_eq!((s.cosine_similarity, s.exact_word_match), (0.0, 0.0));
        assert!(s.flag.is_some());
    }
}
