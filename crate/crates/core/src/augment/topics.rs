use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::AugmentedRecord;

pub const OTHER_TOPIC: &str = "Other";

/// Canonical topic table with synonyms.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TopicMap {
    lookup: HashMap<String, String>,
}

fn key(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

impl TopicMap {
    /// Parses `Canonical | synonym, synonym` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Self {
        let mut lookup = HashMap::new();
        lookup.insert(key(OTHER_TOPIC), OTHER_TOPIC.to_string());
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (canonical, synonyms) = line.split_once('|').unwrap_or((line, ""));
            let canonical = canonical.trim().to_string();
            lookup.insert(key(&canonical), canonical.clone());
            for syn in synonyms.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                lookup.entry(key(syn)).or_insert_with(|| canonical.clone());
            }
        }
        TopicMap { lookup }
    }

    pub fn builtin() -> Self {
        Self::parse(&crate::prompt_kit::PromptAssets::builtin().topics)
    }

    /// Case-insensitive lookup of the whole topic, then of its single
    /// words in order. Unmapped topics become [`OTHER_TOPIC`].
    pub fn normalize(&self, raw: &str) -> String {
        let k = key(raw);
        if let Some(c) = self.lookup.get(&k) {
            return c.clone();
        }
        for word in k.split(|c: char| !c.is_alphanumeric()).filter(|w| !w.is_empty()) {
            if let Some(c) = self.lookup.get(word) {
                return c.clone();
            }
        }
        log::info!("unmapped topic {raw:?}");
        OTHER_TOPIC.to_string()
    }
}

/// Topic coverage of an augmentation run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiversityReport {
    pub items: usize,
    /// Distinct original topics, trimmed and lowercased, before mapping.
    pub unique_raw_topics: usize,
    /// Distinct new topics, trimmed and lowercased, before mapping.
    pub unique_raw_new_topics: usize,
    /// Distinct normalised new topics.
    pub unique_new_topics: usize,
    /// Pairs whose normalised original and new topics agree.
    pub same_topics: usize,
    /// Distinct normalised new topics absent from the normalised originals.
    pub emergent_topics: usize,
    pub let_alone: usize,
}

pub fn diversity_report(originals: &[String], augmented: &[AugmentedRecord], map: &TopicMap) -> DiversityReport {
    let raw: BTreeSet<String> = originals.iter().map(|t| key(t)).collect();
    let normalized_originals: BTreeSet<String> = originals.iter().map(|t| map.normalize(t)).collect();
    let raw_new: BTreeSet<String> = augmented.iter().map(|a| key(&a.new_topic)).collect();
    let new: BTreeSet<String> = augmented.iter().map(|a| map.normalize(&a.new_topic)).collect();
    DiversityReport {
        items: augmented.len(),
        unique_raw_topics: raw.len(),
        unique_raw_new_topics: raw_new.len(),
        unique_new_topics: new.len(),
        same_topics: augmented
            .iter()
            .filter(|a| map.normalize(&a.original_topic) == map.normalize(&a.new_topic))
            .count(),
        emergent_topics: new.difference(&normalized_originals).count(),
        let_alone: augmented.iter().filter(|a| a.contains_let_alone).count(),
    }
}
