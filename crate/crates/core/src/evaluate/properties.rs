use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::RecordId;
use crate::taxonomy::SentenceType;

/// Gold and predicted properties of one record.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyPair {
    pub record_id: RecordId,
    pub sentence_type: SentenceType,
    pub gold: Vec<String>,
    pub predicted: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub entries: usize,
    /// Distinct predicted properties.
    pub distinct_count: usize,
    /// Distinct predicted properties that occur somewhere in the gold set.
    pub copied_count: usize,
    /// Distinct predicted properties that never occur in the gold set.
    pub unseen_count: usize,
    /// Records whose predicted set equals the gold set.
    pub exact_pair_matches: usize,
    /// Records sharing at least one property with the gold set.
    pub at_least_one_match: usize,
    /// Records with no predicted property.
    pub empty_predictions: usize,
    /// Most frequent predicted properties per sentence type, descending.
    pub top_k: BTreeMap<SentenceType, Vec<(String, usize)>>,
}

/// Matching key: trimmed and lowercased.
pub fn property_key(p: &str) -> String {
    p.trim().to_lowercase()
}

fn key_set(ps: &[String]) -> BTreeSet<String> {
    ps.iter().map(|p| property_key(p)).filter(|p| !p.is_empty()).collect()
}

pub fn property_report(pairs: &[PropertyPair], k: usize) -> PropertyReport {
    let gold_vocab: BTreeSet<String> = pairs.iter().flat_map(|p| key_set(&p.gold)).collect();
    let predicted_vocab: BTreeSet<String> = pairs.iter().flat_map(|p| key_set(&p.predicted)).collect();
    let copied = predicted_vocab.intersection(&gold_vocab).count();

    let mut exact = 0;
    let mut one = 0;
    let mut empty = 0;
    let mut freq: BTreeMap<SentenceType, BTreeMap<String, usize>> = BTreeMap::new();
    for p in pairs {
        let g = key_set(&p.gold);
        let q = key_set(&p.predicted);
        if q.is_empty() {
            empty += 1;
        }
        if !g.is_empty() && g == q {
            exact += 1;
        }
        if g.intersection(&q).next().is_some() {
            one += 1;
        }
        let table = freq.entry(p.sentence_type).or_default();
        for key in q {
            *table.entry(key).or_default() += 1;
        }
    }
    let top_k = freq
        .into_iter()
        .map(|(t, table)| {
            let mut rows: Vec<(String, usize)> = table.into_iter().collect();
            rows.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
            rows.truncate(k);
            (t, rows)
        })
        .collect();
    PropertyReport {
        entries: pairs.len(),
        distinct_count: predicted_vocab.len(),
        copied_count: copied,
        unseen_count: predicted_vocab.len() - copied,
        exact_pair_matches: exact,
        at_least_one_match: one,
        empty_predictions: empty,
        top_k,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(id: usize, gold: &[&str], pred: &[&str]) -> PropertyPair {
        PropertyPair {
            record_id: id.into(),
            sentence_type: SentenceType::RE,
            gold: gold.iter().map(|s| s.to_string()).collect(),
            predicted: pred.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn identical_predictions() {
        let ps = vec![pair(1, &["Size"], &["Size"]), pair(2, &["Danger", "Distance"], &["danger ", "Distance"])];
        let r = property_report(&ps, 5);
        assert_eq!(r.at_least_one_match, 2);
        assert_eq!(r.exact_pair_matches, 2);
        assert_eq!(r.unseen_count, 0);
    }

    #[test]
    fn toy_set() {
        // copied, novel, empty
        let ps = vec![
            pair(1, &["Size", "Danger"], &["Size"]),
            pair(2, &["Distance"], &["Loyalty"]),
            pair(3, &["Importance"], &[]),
        ];
        let r = property_report(&ps, 5);
        assert_eq!(r.distinct_count, 2);
        assert_eq!(r.copied_count, 1);
        assert_eq!(r.unseen_count, 1);
        assert_eq!(r.at_least_one_match, 1);
        assert_eq!(r.exact_pair_matches, 0);
        assert_eq!(r.empty_predictions, 1);
        assert_eq!(r.top_k[&SentenceType::RE], vec![("loyalty".to_string(), 1), ("size".to_string(), 1)]);
    }
}
